//! Norm-preserving completion of a 2×2 block matrix with unknown upper-right
//! block, and the band completion built from it.

use crate::error::{Error, Result};
use crate::matcore::{block_norm, eigh, operator_norm_unchecked, CMatrix, ZERO};

/// Relative headroom above the Parrott level. The central solution inverts
/// `γ² − A21*A21`, which is singular when a constraint block is tight; the
/// headroom keeps the inverse bounded while staying far below the
/// certification tolerances.
const LEVEL_HEADROOM: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct ParrottCompletion {
    /// The completing block.
    pub x: CMatrix,
    /// `max(‖[A11; A21]‖, ‖[A21, A22]‖)`, the smallest achievable norm.
    pub gamma: f64,
}

/// Fills `X` in `[[A11, X], [A21, A22]]` so that the full norm matches
/// `γ = max(‖[A11; A21]‖, ‖[A21, A22]‖)` to within `1e-9·(1 + γ)`.
pub fn parrott_min(a11: &CMatrix, a21: &CMatrix, a22: &CMatrix) -> Result<ParrottCompletion> {
    if a11.cols() != a21.cols() || a21.rows() != a22.rows() {
        return Err(Error::DimensionMismatch {
            expected: "A11 and A21 sharing columns, A21 and A22 sharing rows".into(),
            found: format!(
                "A11 {}×{}, A21 {}×{}, A22 {}×{}",
                a11.rows(),
                a11.cols(),
                a21.rows(),
                a21.cols(),
                a22.rows(),
                a22.cols()
            ),
        });
    }
    for m in [a11, a21, a22] {
        m.check_finite()?;
    }
    let col = operator_norm_unchecked(&a11.vstack(a21));
    let row = operator_norm_unchecked(&a21.hstack(a22));
    let gamma = col.max(row);
    let x = central_solution(a11, a21, a22, gamma * (1.0 + LEVEL_HEADROOM));
    Ok(ParrottCompletion { x, gamma })
}

/// Central completion at level `ℓ`, `X = −A11 (ℓ² − A21*A21)^{-1} A21* A22`,
/// evaluated as `X = −Γ1 A21* Γ2` with the contractions
/// `Γ1 = A11 (ℓ² − A21*A21)^{-1/2}` and `Γ2 = (ℓ² − A21 A21*)^{-1/2} A22`.
/// Only inverse square roots appear, so a singular value of `A21` close to
/// `ℓ` costs `ε/√δ` accuracy rather than `ε/δ`.
pub(crate) fn central_solution(a11: &CMatrix, a21: &CMatrix, a22: &CMatrix, level: f64) -> CMatrix {
    let p1 = a11.rows();
    let q2 = a22.cols();
    if a21.rows() == 0 || a21.cols() == 0 || level == 0.0 || p1 == 0 || q2 == 0 {
        return CMatrix::zeros(p1, q2);
    }
    let l2 = level * level;
    let floor = l2 * f64::EPSILON;
    let inv_root = |g: &CMatrix| -> CMatrix {
        let eig = eigh(&g.hermitian_part()).expect("Gram matrix is Hermitian");
        eig.map(|lambda| {
            let d = l2 - lambda;
            if d > floor {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
    };
    let a21h = a21.adjoint();
    let gamma1 = a11 * &inv_root(&a21.gram());
    let gamma2 = &inv_root(&(a21 * &a21h)) * a22;
    let x = if p1 * a21.cols() <= a21.rows() * q2 {
        &(&gamma1 * &a21h) * &gamma2
    } else {
        &gamma1 * &(&a21h * &gamma2)
    };
    x.scale_real(-1.0)
}

/// Band completion: given `r` (a matrix in a flag basis) and block
/// boundaries `ranks`, returns the block strictly upper triangular `S`
/// minimising `‖r − S‖`, together with the achieved norm `‖r − S‖`.
///
/// Block superdiagonals are filled one at a time; each block is the central
/// Parrott completion of the staircase submatrix whose only unknown it is.
pub(crate) fn band_completion(r: &CMatrix, ranks: &[usize]) -> Result<(CMatrix, f64)> {
    let n = r.rows();
    let blocks = ranks.len() - 1;
    let mut e = r.clone();
    // Free blocks start from zero; they are overwritten diagonal by diagonal.
    for p in 1..=blocks {
        for q in p + 1..=blocks {
            for i in ranks[p - 1]..ranks[p] {
                for j in ranks[q - 1]..ranks[q] {
                    e[(i, j)] = ZERO;
                }
            }
        }
    }
    for offset in 1..blocks {
        for p in 1..=blocks - offset {
            let q = p + offset;
            let (row0, row1) = (ranks[p - 1], ranks[p]);
            let (col0, col1) = (ranks[q - 1], ranks[q]);
            if row0 == row1 || col0 == col1 {
                continue;
            }
            let column_block = block_norm(&e, row0..n, 0..col0);
            let row_block = block_norm(&e, row1..n, 0..col1);
            let level = column_block.max(row_block) * (1.0 + LEVEL_HEADROOM);
            let a11 = e.submatrix(row0..row1, 0..col0);
            let a21 = e.submatrix(row1..n, 0..col0);
            let a22 = e.submatrix(row1..n, col0..col1);
            let x = central_solution(&a11, &a21, &a22, level);
            e.set_block(row0, col0, &x);
            let achieved = block_norm(&e, row0..n, 0..col1);
            if !(achieved <= level * (1.0 + 1e-9) + f64::MIN_POSITIVE) {
                return Err(Error::Completion {
                    row_block: p,
                    col_block: q,
                    reason: format!("completed block norm {achieved:e} exceeds level {level:e}"),
                });
            }
        }
    }
    let achieved = operator_norm_unchecked(&e);
    let mut s = CMatrix::zeros(n, n);
    for p in 1..=blocks {
        for q in p + 1..=blocks {
            for i in ranks[p - 1]..ranks[p] {
                for j in ranks[q - 1]..ranks[q] {
                    s[(i, j)] = r[(i, j)] - e[(i, j)];
                }
            }
        }
    }
    Ok((s, achieved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::{ginibre, stream_rng};
    use crate::matcore::{operator_norm, C64};

    fn assemble(a11: &CMatrix, x: &CMatrix, a21: &CMatrix, a22: &CMatrix) -> CMatrix {
        a11.hstack(x).vstack(&a21.hstack(a22))
    }

    #[test]
    fn scaled_unitary_case() {
        let one = CMatrix::diag_real(&[1.0]);
        let c = parrott_min(&one, &one, &one).unwrap();
        assert!((c.gamma - 2f64.sqrt()).abs() < 1e-15);
        assert!((c.x[(0, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-9);
        let full = assemble(&one, &c.x, &one, &one);
        assert!(operator_norm(&full).unwrap() <= c.gamma + 1e-9 * (1.0 + c.gamma));
    }

    #[test]
    fn block_diagonal_case() {
        let mut rng = stream_rng(4, 0);
        let a11 = ginibre(2, 3, &mut rng);
        let a22 = ginibre(3, 2, &mut rng);
        let a21 = CMatrix::zeros(3, 3);
        let c = parrott_min(&a11, &a21, &a22).unwrap();
        let expected = operator_norm_unchecked(&a11).max(operator_norm_unchecked(&a22));
        assert!((c.gamma - expected).abs() < 1e-14);
        assert!(c.x.max_abs() < 1e-14);
    }

    #[test]
    fn random_blocks_meet_the_level() {
        for seed in 0..200 {
            let mut rng = stream_rng(seed, 3);
            let dims = [1 + seed as usize % 3, 1 + (seed as usize / 3) % 3, 1 + (seed as usize / 9) % 3, 1 + (seed as usize / 27) % 3];
            let a11 = ginibre(dims[0], dims[1], &mut rng);
            let a21 = ginibre(dims[2], dims[1], &mut rng);
            let a22 = ginibre(dims[2], dims[3], &mut rng);
            let c = parrott_min(&a11, &a21, &a22).unwrap();
            let norm = operator_norm_unchecked(&assemble(&a11, &c.x, &a21, &a22));
            assert!(norm <= c.gamma + 1e-9 * (1.0 + c.gamma), "seed {seed}: {norm} > {}", c.gamma);
        }
    }

    #[test]
    fn tight_lower_left_block() {
        // A21 carries the whole level: the resolvent is singular at γ.
        let a11 = CMatrix::diag_real(&[3e-6]);
        let a21 = CMatrix::diag_real(&[1.0]);
        let a22 = CMatrix::diag_real(&[3e-6]);
        let c = parrott_min(&a11, &a21, &a22).unwrap();
        let norm = operator_norm_unchecked(&assemble(&a11, &c.x, &a21, &a22));
        assert!(norm <= c.gamma + 1e-9 * (1.0 + c.gamma));
        let zero = CMatrix::zeros(1, 1);
        let c = parrott_min(&zero, &a21, &zero).unwrap();
        assert!((c.gamma - 1.0).abs() < 1e-15);
        assert!(c.x.max_abs() < 1e-12);
    }

    #[test]
    fn grid_search_finds_nothing_better() {
        // 1×1 blocks: exhaustive search over X on a grid never beats γ.
        for seed in 0..10 {
            let mut rng = stream_rng(seed, 21);
            let a11 = ginibre(1, 1, &mut rng);
            let a21 = ginibre(1, 1, &mut rng);
            let a22 = ginibre(1, 1, &mut rng);
            let c = parrott_min(&a11, &a21, &a22).unwrap();
            let mut best = f64::INFINITY;
            let steps = 120;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = C64::new(-3.0 + 6.0 * i as f64 / steps as f64, -3.0 + 6.0 * j as f64 / steps as f64);
                    let m = assemble(&a11, &CMatrix::diag(&[x]), &a21, &a22);
                    best = best.min(operator_norm_unchecked(&m));
                }
            }
            assert!(best >= c.gamma - 1e-6, "seed {seed}: grid {best} < γ {}", c.gamma);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = CMatrix::zeros(1, 2);
        let b = CMatrix::zeros(1, 1);
        assert!(matches!(parrott_min(&a, &b, &b), Err(Error::DimensionMismatch { .. })));
    }
}
