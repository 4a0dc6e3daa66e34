use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{block_norm, CMatrix, MatrixJson};

/// Tolerance on `‖F*F − I‖` (max entry) accepted for a flag basis.
pub const UNITARY_TOL: f64 = 1e-10;

/// A complete flag `0 = P_0 < P_1 < … < P_n = I`, stored as a unitary whose
/// leading `k` columns span the range of `P_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    basis: CMatrix,
}

/// A flag of length `n` in dimension `d`: `P_k` projects onto the leading
/// `ranks[k]` columns of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFlag {
    basis: CMatrix,
    ranks: Vec<usize>,
}

fn check_unitary(basis: &CMatrix) -> Result<usize> {
    let n = basis.require_square()?;
    basis.check_finite()?;
    let defect = (&basis.gram() - &CMatrix::identity(n)).max_abs();
    if defect > UNITARY_TOL {
        return Err(Error::InvalidArgument(format!(
            "flag basis is not unitary (‖F*F − I‖ = {defect:e})"
        )));
    }
    Ok(n)
}

impl Flag {
    pub fn new(basis: CMatrix) -> Result<Self> {
        check_unitary(&basis)?;
        Ok(Self { basis })
    }

    pub(crate) fn from_unitary(basis: CMatrix) -> Self {
        debug_assert!(check_unitary(&basis).is_ok());
        Self { basis }
    }

    /// The coordinate flag `span(e_1) ⊂ span(e_1, e_2) ⊂ …`.
    pub fn standard(n: usize) -> Self {
        Self {
            basis: CMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix {
        self.basis
    }

    /// `P_k`, the projection onto the leading `k` basis columns.
    pub fn projection(&self, k: usize) -> CMatrix {
        leading_projection(&self.basis, k)
    }

    /// Image `U·F` of the flag under a unitary.
    pub fn transformed(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u * &self.basis)
    }

    pub fn as_partial(&self) -> PartialFlag {
        PartialFlag {
            basis: self.basis.clone(),
            ranks: (0..=self.dim()).collect(),
        }
    }
}

impl PartialFlag {
    pub fn new(basis: CMatrix, ranks: Vec<usize>) -> Result<Self> {
        let d = check_unitary(&basis)?;
        validate_ranks(&ranks, d)?;
        Ok(Self { basis, ranks })
    }

    pub(crate) fn from_parts(basis: CMatrix, ranks: Vec<usize>) -> Self {
        debug_assert!(validate_ranks(&ranks, basis.rows()).is_ok());
        Self { basis, ranks }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    /// Number of steps `n` in `P_0 ≤ … ≤ P_n`.
    pub fn length(&self) -> usize {
        self.ranks.len() - 1
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn projection(&self, k: usize) -> CMatrix {
        leading_projection(&self.basis, self.ranks[k])
    }
}

pub(crate) fn validate_ranks(ranks: &[usize], d: usize) -> Result<()> {
    if ranks.len() < 2 {
        return Err(Error::InvalidArgument("a flag needs at least ranks r_0 and r_n".into()));
    }
    if ranks[0] != 0 || *ranks.last().unwrap() != d {
        return Err(Error::InvalidArgument(format!(
            "ranks must start at 0 and end at {d}, got {ranks:?}"
        )));
    }
    if ranks.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(format!("ranks must be nondecreasing, got {ranks:?}")));
    }
    Ok(())
}

fn leading_projection(basis: &CMatrix, k: usize) -> CMatrix {
    let n = basis.rows();
    let lead = basis.submatrix(0..n, 0..k);
    &lead * &lead.adjoint()
}

/// Corner norms `‖P_{k−1}^⊥ A P_k‖`, k = 1..n, of a matrix already written
/// in the flag basis.
pub(crate) fn corner_norms_rotated(rotated: &CMatrix, ranks: &[usize]) -> Vec<f64> {
    let n = rotated.rows();
    ranks
        .windows(2)
        .map(|w| block_norm(rotated, w[0]..n, 0..w[1]))
        .collect()
}

fn check_dims(a: &CMatrix, d: usize) -> Result<()> {
    if !a.is_square() || a.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}×{d}"),
            found: format!("{}×{}", a.rows(), a.cols()),
        });
    }
    a.check_finite()
}

/// `‖P_{k−1}^⊥ A P_k‖` for `k = 1..n`: the norm of rows `k..n`, columns
/// `1..k` of `F* A F`.
pub fn corner_norms(a: &CMatrix, flag: &Flag) -> Result<Vec<f64>> {
    check_dims(a, flag.dim())?;
    let r = a.conjugate_by_adjoint(flag.basis());
    Ok(corner_norms_rotated(&r, &(0..=flag.dim()).collect::<Vec<_>>()))
}

/// Largest corner norm. Its infimum over flags is the distance to the
/// nilpotents.
pub fn flag_objective(a: &CMatrix, flag: &Flag) -> Result<f64> {
    Ok(corner_norms(a, flag)?.into_iter().fold(0.0, f64::max))
}

pub fn partial_corner_norms(a: &CMatrix, pflag: &PartialFlag) -> Result<Vec<f64>> {
    check_dims(a, pflag.ambient_dim())?;
    let r = a.conjugate_by_adjoint(pflag.basis());
    Ok(corner_norms_rotated(&r, pflag.ranks()))
}

/// Largest corner norm of a partial flag; its infimum is the distance to
/// operators with `Nⁿ = 0`.
pub fn partial_flag_objective(a: &CMatrix, pflag: &PartialFlag) -> Result<f64> {
    Ok(partial_corner_norms(a, pflag)?.into_iter().fold(0.0, f64::max))
}

#[derive(Serialize, Deserialize)]
struct PartialFlagJson {
    #[serde(flatten)]
    basis: MatrixJson,
    ranks: Vec<usize>,
}

impl Serialize for Flag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.basis.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Flag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let basis = CMatrix::deserialize(d)?;
        Flag::new(basis).map_err(serde::de::Error::custom)
    }
}

impl Serialize for PartialFlag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PartialFlagJson {
            basis: MatrixJson::from_matrix(&self.basis),
            ranks: self.ranks.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartialFlag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PartialFlagJson::deserialize(d)?;
        let basis = raw.basis.into_matrix().map_err(serde::de::Error::custom)?;
        PartialFlag::new(basis, raw.ranks).map_err(serde::de::Error::custom)
    }
}
