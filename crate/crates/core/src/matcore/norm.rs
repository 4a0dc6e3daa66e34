use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::eigh::{eigh, max_eigenvalue_slice};
use super::matrix::{CMatrix, C64, ZERO};
use super::schur::schur;
use crate::error::{Error, Result};

/// Above this side length the operator norm switches to power iteration.
pub const DENSE_NORM_LIMIT: usize = 64;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    a.check_finite()?;
    Ok(operator_norm_unchecked(a))
}

pub(crate) fn operator_norm_unchecked(a: &CMatrix) -> f64 {
    if a.rows().max(a.cols()) > DENSE_NORM_LIMIT {
        return power_norm(a);
    }
    block_norm(a, 0..a.rows(), 0..a.cols())
}

/// Operator norm of the block `rows × cols` of `a`, computed as the square
/// root of the top eigenvalue of the smaller Gram matrix.
pub(crate) fn block_norm(a: &CMatrix, rows: Range<usize>, cols: Range<usize>) -> f64 {
    let p = rows.len();
    let q = cols.len();
    if p == 0 || q == 0 {
        return 0.0;
    }
    if p == 1 || q == 1 {
        let mut s = 0.0;
        for i in rows {
            for j in cols.clone() {
                s += a[(i, j)].norm_sqr();
            }
        }
        return s.sqrt();
    }
    let m = p.min(q);
    let mut g = [ZERO; 64];
    let mut heap;
    let g: &mut [C64] = if m * m <= g.len() {
        &mut g[..m * m]
    } else {
        heap = vec![ZERO; m * m];
        &mut heap[..]
    };
    if q <= p {
        // A_blk* A_blk, indexed by columns.
        for (u, j1) in cols.clone().enumerate() {
            for (v, j2) in cols.clone().enumerate().skip(u) {
                let mut s = ZERO;
                for i in rows.clone() {
                    s += a[(i, j1)].conj() * a[(i, j2)];
                }
                g[u * m + v] = s;
                g[v * m + u] = s.conj();
            }
        }
    } else {
        for (u, i1) in rows.clone().enumerate() {
            let r1 = &a.row(i1)[cols.clone()];
            for (v, i2) in rows.clone().enumerate().skip(u) {
                let r2 = &a.row(i2)[cols.clone()];
                let s: C64 = r1.iter().zip(r2).map(|(x, y)| x * y.conj()).sum();
                g[u * m + v] = s;
                g[v * m + u] = s.conj();
            }
        }
    }
    max_eigenvalue_slice(m, g).max(0.0).sqrt()
}

/// Power iteration on `A*A`.
pub(crate) fn power_norm(a: &CMatrix) -> f64 {
    let g = a.gram();
    let n = g.rows();
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.1 * i as f64, 0.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = g.mat_vec(&v);
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        let next = wn / vn;
        v = w.into_iter().map(|z| z / wn).collect();
        if (next - lambda).abs() <= POWER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

pub fn spectral_radius(a: &CMatrix) -> Result<f64> {
    let s = schur(a)?;
    Ok(s.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Tolerances for Hermitian / positive-semidefinite preconditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianCheckTolerance {
    /// Bound on the largest entry of `A − A*`.
    pub herm_tol: f64,
    /// Eigenvalues down to `−psd_tol` are clamped to zero.
    pub psd_tol: f64,
}

impl HermitianCheckTolerance {
    pub fn new(herm_tol: f64, psd_tol: f64) -> Result<Self> {
        if herm_tol < 0.0 || psd_tol < 0.0 || !herm_tol.is_finite() || !psd_tol.is_finite() {
            return Err(Error::InvalidArgument(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { herm_tol, psd_tol })
    }

    /// Hermiticity tolerance 1e-10·(1 + ‖A‖), eigenvalue floor 1e-10·‖A‖.
    pub fn for_matrix(a: &CMatrix) -> Self {
        let scale = operator_norm_unchecked(a);
        Self {
            herm_tol: 1e-10 * (1.0 + scale),
            psd_tol: 1e-10 * scale,
        }
    }
}

/// Positive square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &CMatrix, tol: HermitianCheckTolerance) -> Result<CMatrix> {
    Ok(psd_decompose(a, tol)?.map(f64::sqrt))
}

/// Checked Hermitian eigendecomposition with negative eigenvalues above the
/// floor clamped to zero.
pub(crate) fn psd_decompose(
    a: &CMatrix,
    tol: HermitianCheckTolerance,
) -> Result<super::eigh::HermitianEigen> {
    a.require_square()?;
    a.check_finite()?;
    let residual = a.hermitian_defect();
    if residual > tol.herm_tol {
        return Err(Error::NotHermitian {
            residual,
            tol: tol.herm_tol,
        });
    }
    let mut eig = eigh(&a.hermitian_part())?;
    let min_eig = eig.min_value();
    if min_eig < -tol.psd_tol {
        return Err(Error::NotPsd {
            min_eig,
            floor: tol.psd_tol,
        });
    }
    // Eigenvalues at rounding level are indistinguishable from zero; keeping
    // them would put an O(√ε) error into square roots of projections.
    let noise = 8.0 * eig.values.len() as f64 * f64::EPSILON * eig.max_value().abs().max(min_eig.abs());
    for v in eig.values.iter_mut() {
        if *v <= noise {
            *v = 0.0;
        }
    }
    Ok(eig)
}

/// Scaled nilpotency residual `‖Aⁿ‖ / max(1, ‖A‖)ⁿ` for the nilpotency order
/// `order` (the side length for ordinary nilpotency).
pub fn nilpotency_residual(a: &CMatrix, order: usize) -> f64 {
    let scale = operator_norm_unchecked(a).max(1.0);
    let p = a.pow(order);
    operator_norm_unchecked(&p) / scale.powi(order as i32)
}

/// Whether `A` is nilpotent to within `tol`, judged by the scaled power
/// residual `‖Aⁿ‖ / max(1, ‖A‖)ⁿ ≤ tol`.
///
/// The spectral radius of a rounded nilpotent is of order `ε^{1/n}`, so it is
/// not used as the criterion; the power residual is stable under rounding.
pub fn is_nilpotent(a: &CMatrix, tol: f64) -> bool {
    if a.check_finite().is_err() || !a.is_square() {
        return false;
    }
    nilpotency_residual(a, a.rows()) <= tol
}
