use serde::{Deserialize, Serialize};

use super::flag::{corner_norms_rotated, Flag, PartialFlag};
use super::parrott::band_completion;
use crate::error::{Error, Result};
use crate::matcore::{
    nilpotency_residual, operator_norm_unchecked, schur, CMatrix, C64,
};

/// Default absolute certification tolerance (scaled by `1 + ‖A‖` for the
/// residual).
pub const DEFAULT_CERT_TOL: f64 = 1e-8;

/// Flag attached to a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertificateFlag {
    Partial(PartialFlag),
    Complete(Flag),
}

impl CertificateFlag {
    pub fn basis(&self) -> &CMatrix {
        match self {
            CertificateFlag::Complete(f) => f.basis(),
            CertificateFlag::Partial(p) => p.basis(),
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        match self {
            CertificateFlag::Complete(f) => (0..=f.dim()).collect(),
            CertificateFlag::Partial(p) => p.ranks().to_vec(),
        }
    }

    /// Nilpotency order of every compatible operator.
    pub fn order(&self) -> usize {
        self.ranks().len() - 1
    }
}

/// An upper bound on the distance to the nilpotents together with a
/// nilpotent that realises it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedUpperBound {
    /// Largest corner norm of the flag.
    pub value: f64,
    /// `|‖A − N‖ − value|`.
    pub residual: f64,
    /// Scaled power residual `‖N^L‖ / max(1, ‖N‖)^L` for the flag length `L`.
    pub nilpotency_defect: f64,
    pub flag: CertificateFlag,
    pub certificate: CMatrix,
}

impl CertifiedUpperBound {
    /// Whether both diagnostics are inside `tol` (residual scaled by `1 + ‖A‖`).
    pub fn is_certified(&self, a_norm: f64, tol: f64) -> bool {
        self.residual <= tol * (1.0 + a_norm) && self.nilpotency_defect <= tol
    }

    /// Largest entry of the block lower triangle of `F* N F`; zero up to
    /// rounding because the certificate is built block strictly upper
    /// triangular in the flag basis.
    pub fn structural_defect(&self) -> f64 {
        let f = self.flag.basis();
        let s = self.certificate.conjugate_by_adjoint(f);
        let ranks = self.flag.ranks();
        let mut worst: f64 = 0.0;
        for p in 1..ranks.len() {
            for q in 1..=p {
                for i in ranks[p - 1]..ranks[p] {
                    for j in ranks[q - 1]..ranks[q] {
                        worst = worst.max(s[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }
}

fn certify(
    a: &CMatrix,
    flag: CertificateFlag,
    tol: f64,
) -> Result<CertifiedUpperBound> {
    let basis = flag.basis().clone();
    let ranks = flag.ranks();
    let r = a.conjugate_by_adjoint(&basis);
    let value = corner_norms_rotated(&r, &ranks).into_iter().fold(0.0, f64::max);
    let (s, _) = band_completion(&r, &ranks)?;
    let n_cert = s.conjugate_by(&basis);
    let distance = operator_norm_unchecked(&(a - &n_cert));
    let residual = (distance - value).abs();
    let nilpotency_defect = nilpotency_residual(&n_cert, ranks.len() - 1);
    let a_norm = operator_norm_unchecked(a);
    let bound = CertifiedUpperBound {
        value,
        residual,
        nilpotency_defect,
        flag,
        certificate: n_cert,
    };
    if !bound.is_certified(a_norm, tol) {
        return Err(Error::Completion {
            row_block: 0,
            col_block: 0,
            reason: format!(
                "certificate outside tolerance: residual {residual:e}, nilpotency defect {nilpotency_defect:e}"
            ),
        });
    }
    Ok(bound)
}

fn check_dim(a: &CMatrix, d: usize) -> Result<()> {
    a.check_finite()?;
    if !a.is_square() || a.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}×{d}"),
            found: format!("{}×{}", a.rows(), a.cols()),
        });
    }
    Ok(())
}

/// Nearest nilpotent among those strictly upper triangular in `flag`, built
/// by band completion. `value` is the flag objective and `‖A − N‖` matches it.
pub fn nearest_flag_nilpotent(a: &CMatrix, flag: &Flag) -> Result<CertifiedUpperBound> {
    nearest_flag_nilpotent_with(a, flag, DEFAULT_CERT_TOL)
}

pub fn nearest_flag_nilpotent_with(a: &CMatrix, flag: &Flag, tol: f64) -> Result<CertifiedUpperBound> {
    check_dim(a, flag.dim())?;
    certify(a, CertificateFlag::Complete(flag.clone()), tol)
}

/// Nearest operator with `Nⁿ = 0` compatible with a partial flag of length `n`.
pub fn nearest_partial_flag_nilpotent(
    a: &CMatrix,
    pflag: &PartialFlag,
    tol: f64,
) -> Result<CertifiedUpperBound> {
    check_dim(a, pflag.ambient_dim())?;
    certify(a, CertificateFlag::Partial(pflag.clone()), tol)
}

/// `ν(A) ≤ ρ(A)`: the strictly upper part of the Schur form is a nilpotent at
/// distance `max |λ|`.
pub fn schur_upper_bound(a: &CMatrix) -> Result<CertifiedUpperBound> {
    let n = a.require_square()?;
    let s = schur(a)?;
    let u = s.unitary;
    let t = s.triangular;
    let value = t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n_cert = t.strict_upper().conjugate_by(&u);
    let distance = operator_norm_unchecked(&(a - &n_cert));
    let flag = Flag::from_unitary(u);
    Ok(CertifiedUpperBound {
        value,
        residual: (distance - value).abs(),
        nilpotency_defect: nilpotency_residual(&n_cert, n),
        flag: CertificateFlag::Complete(flag),
        certificate: n_cert,
    })
}

/// Schur flag alone (used to seed searches).
pub fn schur_flag(a: &CMatrix) -> Result<Flag> {
    Ok(Flag::from_unitary(schur(a)?.unitary))
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn is<T: Send + Sync>() {}
    is::<CertifiedUpperBound>();
    is::<C64>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{haar_unitary, is_nilpotent, operator_norm, spectral_radius, stream_rng, ZERO};
    use crate::matcore::random::ginibre;
    use crate::nestdist::flag_objective;

    #[test]
    fn already_nilpotent_in_flag() {
        let s = CMatrix::from_fn(4, 4, |i, j| if j > i { C64::new(1.0, 0.5) } else { ZERO });
        let u = haar_unitary(4, 2);
        let a = s.conjugate_by(&u);
        let b = nearest_flag_nilpotent(&a, &Flag::new(u).unwrap()).unwrap();
        assert!(b.value < 1e-12);
        assert!((&b.certificate - &a).max_abs() < 1e-12);
    }

    #[test]
    fn diagonal_projection_standard_flag() {
        let a = CMatrix::diag_real(&[1.0, 0.0]);
        let b = nearest_flag_nilpotent(&a, &Flag::standard(2)).unwrap();
        assert!((b.value - 1.0).abs() < 1e-15);
        assert!(b.certificate.max_abs() < 1e-9);
        assert!((operator_norm(&(&a - &b.certificate)).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_flags_certify() {
        for seed in 0..60 {
            let n = 1 + seed as usize % 7;
            let mut rng = stream_rng(seed, 5);
            let a = ginibre(n, n, &mut rng);
            let flag = Flag::new(haar_unitary(n, seed + 1000)).unwrap();
            let b = nearest_flag_nilpotent(&a, &flag).unwrap();
            let target = flag_objective(&a, &flag).unwrap();
            let anorm = operator_norm(&a).unwrap();
            assert_eq!(b.value, target);
            let d = operator_norm(&(&a - &b.certificate)).unwrap();
            assert!(d <= target + 1e-8 * (1.0 + anorm), "seed {seed}");
            assert!(is_nilpotent(&b.certificate, 1e-8));
            assert!(b.structural_defect() <= 1e-12 * (1.0 + anorm));
        }
    }

    #[test]
    fn partial_flag_certificate_has_order() {
        let mut rng = stream_rng(8, 1);
        let a = ginibre(6, 6, &mut rng);
        let pf = PartialFlag::new(haar_unitary(6, 3), vec![0, 2, 3, 6]).unwrap();
        let b = nearest_partial_flag_nilpotent(&a, &pf, 1e-8).unwrap();
        let cube = b.certificate.pow(3);
        assert!(operator_norm(&cube).unwrap() <= 1e-8);
        assert!(b.residual <= 1e-8);
    }

    #[test]
    fn schur_bound_cases() {
        let b = schur_upper_bound(&CMatrix::identity(3)).unwrap();
        assert!((b.value - 1.0).abs() < 1e-14);
        assert!(b.certificate.max_abs() < 1e-14);

        let s = CMatrix::from_fn(5, 5, |i, j| if j > i { C64::new(0.3, -1.0) } else { ZERO });
        let a = s.conjugate_by(&haar_unitary(5, 1));
        let b = schur_upper_bound(&a).unwrap();
        assert!(b.value < 1e-2);
        assert!(b.residual < 1e-9);

        // Normal matrix with unimodular spectrum.
        let d: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, 1.3 * k as f64)).collect();
        let a = CMatrix::diag(&d).conjugate_by(&haar_unitary(4, 6));
        let b = schur_upper_bound(&a).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);
        assert!(b.residual < 1e-9);
        assert!((b.value - spectral_radius(&a).unwrap()).abs() < 1e-12);
    }
}
