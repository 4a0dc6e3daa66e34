//! Search over flags for small corner norms.
//!
//! Every flag gives an upper bound on the distance to the nilpotents, with a
//! nilpotent that attains it, so the search only ever improves a valid bound.
//! Local moves are Givens rotations of two basis columns taken from a grid of
//! angles `θ` and relative phases `φ`; the grid shrinks after every sweep.
//! Restarts begin at the identity flag, the Schur flag, and Haar-random flags.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::random::orthonormalize_columns;
use crate::matcore::{block_norm, haar_unitary_from, stream_rng, CMatrix, C64};
use crate::nestdist::{
    corner_norms_rotated, nearest_flag_nilpotent_with, nearest_partial_flag_nilpotent,
    schur_flag, validate_ranks, CertifiedUpperBound, Flag, PartialFlag, DEFAULT_CERT_TOL,
};
use crate::parallel::{map_indexed, Execution};

/// Cap on repeated pair passes at one grid level; a sweep ends early once
/// a pass accepts no rotation.
pub const MAX_PASSES_PER_LEVEL: usize = 50;

/// Rank vectors are enumerated exhaustively up to this ambient dimension.
pub const EXHAUSTIVE_RANK_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of starting flags. The identity and Schur flags are always
    /// included (indices 0 and 1); the rest are Haar-random.
    pub restarts: usize,
    /// Full passes over all column pairs per restart.
    pub sweeps: usize,
    /// Grid resolution: `angle_grid` rotation angles times `angle_grid` phases.
    pub angle_grid: usize,
    /// Factor applied to the largest rotation angle after each sweep.
    pub shrink: f64,
    pub seed: u64,
    pub cert_tol: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            sweeps: 20,
            angle_grid: 8,
            shrink: 0.5,
            seed: 0,
            cert_tol: DEFAULT_CERT_TOL,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.sweeps == 0 || self.angle_grid == 0 {
            return Err(Error::InvalidArgument(
                "restarts, sweeps and angle_grid must be positive".into(),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.cert_tol > 0.0 && self.cert_tol.is_finite()) {
            return Err(Error::InvalidArgument("cert_tol must be positive".into()));
        }
        Ok(())
    }

    /// Starting points always include the two deterministic flags.
    fn pool_size(&self) -> usize {
        self.restarts.max(2)
    }
}

/// Candidate 2×2 unitaries `[[cos θ, −e^{iφ} sin θ], [e^{−iφ} sin θ, cos θ]]`.
fn candidate_grid(grid: usize, theta_max: f64) -> Vec<[C64; 4]> {
    let half = grid.div_ceil(2);
    let mut out = Vec::with_capacity(2 * half * grid);
    for a in 1..=half {
        let magnitude = theta_max * a as f64 / half as f64;
        for theta in [magnitude, -magnitude] {
            let (s, c) = theta.sin_cos();
            for b in 0..grid {
                let phase = C64::from_polar(1.0, PI * b as f64 / grid as f64);
                out.push([
                    C64::new(c, 0.0),
                    -phase * s,
                    phase.conj() * s,
                    C64::new(c, 0.0),
                ]);
            }
        }
    }
    out
}

/// `R ← G* R G` on indices `i`, `j`.
fn rotate_in_place(r: &mut CMatrix, i: usize, j: usize, g: &[C64; 4]) {
    let n = r.rows();
    for row in 0..n {
        let a = r[(row, i)];
        let b = r[(row, j)];
        r[(row, i)] = a * g[0] + b * g[2];
        r[(row, j)] = a * g[1] + b * g[3];
    }
    for col in 0..n {
        let a = r[(i, col)];
        let b = r[(j, col)];
        r[(i, col)] = g[0].conj() * a + g[2].conj() * b;
        r[(j, col)] = g[1].conj() * a + g[3].conj() * b;
    }
}

/// `F ← F G` on columns `i`, `j`.
fn rotate_columns(f: &mut CMatrix, i: usize, j: usize, g: &[C64; 4]) {
    for row in 0..f.rows() {
        let a = f[(row, i)];
        let b = f[(row, j)];
        f[(row, i)] = a * g[0] + b * g[2];
        f[(row, j)] = a * g[1] + b * g[3];
    }
}

fn copy_lines(dst: &mut CMatrix, src: &CMatrix, i: usize, j: usize) {
    let n = src.rows();
    for k in 0..n {
        for idx in [i, j] {
            dst[(k, idx)] = src[(k, idx)];
            dst[(idx, k)] = src[(idx, k)];
        }
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Coordinate descent on the partial-flag objective starting from `basis`.
/// Returns the final basis and its objective.
fn descend(a: &CMatrix, basis: CMatrix, ranks: &[usize], config: &SearchConfig) -> (CMatrix, f64) {
    let n = a.rows();
    let blocks = ranks.len() - 1;
    let mut f = basis;
    let mut theta_max = PI / 2.0;
    let mut r = a.conjugate_by_adjoint(&f);
    let mut corners = corner_norms_rotated(&r, ranks);
    let mut current = max_of(&corners);
    // Corner k changes under a rotation of (i, j) only when a block boundary
    // of that corner separates i from j.
    let separates = |i: usize, j: usize, boundary: usize| i < boundary && boundary <= j;

    for _ in 0..config.sweeps {
        let grid = candidate_grid(config.angle_grid, theta_max);
        for _ in 0..MAX_PASSES_PER_LEVEL {
        let mut moved = false;
        for i in 0..n {
            for j in i + 1..n {
                let affected: Vec<usize> = (0..blocks)
                    .filter(|&k| separates(i, j, ranks[k]) || separates(i, j, ranks[k + 1]))
                    .collect();
                if affected.is_empty() {
                    continue;
                }
                let fixed = (0..blocks)
                    .filter(|k| !affected.contains(k))
                    .map(|k| corners[k])
                    .fold(0.0, f64::max);
                if fixed >= current {
                    continue;
                }
                let mut scratch = r.clone();
                let mut best = current;
                let mut best_idx = None;
                let mut values = vec![0.0; affected.len()];
                let mut best_values = values.clone();
                for (idx, g) in grid.iter().enumerate() {
                    copy_lines(&mut scratch, &r, i, j);
                    rotate_in_place(&mut scratch, i, j, g);
                    let mut worst = fixed;
                    for (slot, &k) in affected.iter().enumerate() {
                        let v = block_norm(&scratch, ranks[k]..n, 0..ranks[k + 1]);
                        values[slot] = v;
                        worst = worst.max(v);
                        if worst >= best {
                            break;
                        }
                    }
                    if worst < best {
                        best = worst;
                        best_idx = Some(idx);
                        best_values.copy_from_slice(&values);
                    }
                }
                if let Some(idx) = best_idx {
                    rotate_in_place(&mut r, i, j, &grid[idx]);
                    rotate_columns(&mut f, i, j, &grid[idx]);
                    for (slot, &k) in affected.iter().enumerate() {
                        corners[k] = best_values[slot];
                    }
                    current = best;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
        }
        // Re-orthonormalize and resynchronize to keep rounding from drifting.
        let refreshed = orthonormalize_columns(&f);
        let r_new = a.conjugate_by_adjoint(&refreshed);
        let c_new = corner_norms_rotated(&r_new, ranks);
        let v_new = max_of(&c_new);
        if v_new <= current + 1e-14 * (1.0 + current) {
            f = refreshed;
            r = r_new;
            corners = c_new;
            current = v_new;
        }
        theta_max *= config.shrink;
    }
    (f, current)
}

fn check_square(a: &CMatrix) -> Result<usize> {
    a.check_finite()?;
    a.require_square()
}

/// Local search from `start`; never returns a worse flag.
pub fn refine_flag(a: &CMatrix, start: &Flag, config: &SearchConfig) -> Result<Flag> {
    let n = check_square(a)?;
    config.validate()?;
    if start.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("flag of dimension {n}"),
            found: format!("dimension {}", start.dim()),
        });
    }
    let ranks: Vec<usize> = (0..=n).collect();
    let before = max_of(&corner_norms_rotated(&a.conjugate_by_adjoint(start.basis()), &ranks));
    let (basis, _) = descend(a, start.basis().clone(), &ranks, config);
    let after = max_of(&corner_norms_rotated(&a.conjugate_by_adjoint(&basis), &ranks));
    if after <= before {
        Ok(Flag::from_unitary(basis))
    } else {
        Ok(start.clone())
    }
}

/// Starting basis for restart `index`: identity, Schur, then Haar flags on
/// their own random stream.
fn start_basis(index: usize, seed: u64, identity: &CMatrix, schur_basis: &CMatrix) -> CMatrix {
    match index {
        0 => identity.clone(),
        1 => schur_basis.clone(),
        _ => haar_unitary_from(identity.rows(), &mut stream_rng(seed, index as u64)),
    }
}

/// Best basis over all restarts for fixed block boundaries. Ties keep the
/// lowest restart index.
fn search_ranks(a: &CMatrix, ranks: &[usize], config: &SearchConfig, schur_basis: &CMatrix) -> (CMatrix, f64) {
    let identity = CMatrix::identity(a.rows());
    let results = map_indexed(config.execution, config.pool_size(), |index| {
        let start = start_basis(index, config.seed, &identity, schur_basis);
        let before = max_of(&corner_norms_rotated(&a.conjugate_by_adjoint(&start), ranks));
        let (basis, value) = descend(a, start.clone(), ranks, config);
        if value <= before {
            (basis, value)
        } else {
            (start, before)
        }
    });
    let mut best = 0;
    for (index, (_, value)) in results.iter().enumerate() {
        if *value < results[best].1 {
            best = index;
        }
    }
    results.into_iter().nth(best).unwrap()
}

/// Upper bound on the distance from `A` to the nilpotents with a certificate.
/// The value never exceeds the identity-flag or Schur-flag objectives.
pub fn estimate_nu(a: &CMatrix, config: &SearchConfig) -> Result<CertifiedUpperBound> {
    let n = check_square(a)?;
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("matrix must be at least 1×1".into()));
    }
    let schur_basis = schur_flag(a)?.into_basis();
    let ranks: Vec<usize> = (0..=n).collect();
    let (basis, _) = search_ranks(a, &ranks, config, &schur_basis);
    nearest_flag_nilpotent_with(a, &Flag::from_unitary(basis), config.cert_tol)
}

/// Strictly increasing rank vectors `0 = r_0 < … < r_order = d`.
fn increasing_rank_vectors(d: usize, order: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, d: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            let mut full = prefix.clone();
            full.push(d);
            out.push(full);
            return;
        }
        let last = *prefix.last().unwrap();
        for next in last + 1..=d - remaining {
            prefix.push(next);
            extend(prefix, d, remaining - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut vec![0], d, order - 1, &mut out);
    out
}

/// Evenly spaced strictly increasing rank vector.
fn even_ranks(d: usize, order: usize) -> Vec<usize> {
    (0..=order).map(|k| (k * d) / order).collect()
}

/// Upper bound on the distance from `A` (dimension `d`) to operators with
/// `N^order = 0`, over partial flags of length `order`.
///
/// Only strictly increasing rank vectors are searched: splitting a block of
/// a partial flag replaces one corner by two of its submatrices, so the
/// objective of a vector with a repeated rank is matched or beaten by a
/// strictly increasing one. For `d ≤ 8` all such vectors are tried; above
/// that, single-rank moves are hill-climbed from an even split.
pub fn estimate_nu_order(a: &CMatrix, order: usize, config: &SearchConfig) -> Result<CertifiedUpperBound> {
    let d = check_square(a)?;
    config.validate()?;
    if order == 0 || order > d {
        return Err(Error::InvalidArgument(format!(
            "nilpotency order must satisfy 1 ≤ n ≤ d = {d}, got {order}"
        )));
    }
    let schur_basis = schur_flag(a)?.into_basis();
    let (basis, ranks) = if d <= EXHAUSTIVE_RANK_DIM {
        let mut best: Option<(CMatrix, f64, Vec<usize>)> = None;
        for ranks in increasing_rank_vectors(d, order) {
            let (basis, value) = search_ranks(a, &ranks, config, &schur_basis);
            if best.as_ref().is_none_or(|b| value < b.1) {
                best = Some((basis, value, ranks));
            }
        }
        let (basis, _, ranks) = best.unwrap();
        (basis, ranks)
    } else {
        let mut ranks = even_ranks(d, order);
        let (mut basis, mut value) = search_ranks(a, &ranks, config, &schur_basis);
        loop {
            let mut improved = false;
            for k in 1..order {
                for delta in [-1i64, 1] {
                    let moved = ranks[k] as i64 + delta;
                    if moved <= ranks[k - 1] as i64 || moved >= ranks[k + 1] as i64 {
                        continue;
                    }
                    let mut trial = ranks.clone();
                    trial[k] = moved as usize;
                    let (b, v) = search_ranks(a, &trial, config, &schur_basis);
                    if v < value {
                        ranks = trial;
                        basis = b;
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (basis, ranks)
    };
    validate_ranks(&ranks, d)?;
    let pflag = PartialFlag::from_parts(basis, ranks);
    nearest_partial_flag_nilpotent(a, &pflag, config.cert_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::macdonald_value;
    use crate::matcore::{haar_unitary, operator_norm, ONE, ZERO};
    use crate::nestdist::flag_objective;

    fn quick() -> SearchConfig {
        SearchConfig {
            restarts: 4,
            sweeps: 8,
            execution: Execution::Sequential,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert!(SearchConfig { restarts: 0, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { shrink: 1.0, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { cert_tol: 0.0, ..SearchConfig::default() }.validate().is_err());
    }

    #[test]
    fn grid_is_unitary() {
        for g in candidate_grid(8, 1.0) {
            let m = CMatrix::from_row_major(2, 2, g.to_vec()).unwrap();
            assert!((&m.gram() - &CMatrix::identity(2)).max_abs() < 1e-15);
        }
        assert_eq!(candidate_grid(8, 1.0).len(), 64);
    }

    #[test]
    fn incremental_rotation_matches_direct() {
        let a = crate::matcore::random::ginibre(5, 5, &mut stream_rng(1, 1));
        let mut f = haar_unitary(5, 2);
        let mut r = a.conjugate_by_adjoint(&f);
        let g = candidate_grid(4, 0.7)[5];
        rotate_in_place(&mut r, 1, 3, &g);
        rotate_columns(&mut f, 1, 3, &g);
        assert!((&r - &a.conjugate_by_adjoint(&f)).max_abs() < 1e-13);
    }

    #[test]
    fn two_by_two_projection_from_standard_flag() {
        let q = CMatrix::diag_real(&[1.0, 0.0]);
        let cfg = SearchConfig { sweeps: 3, ..quick() };
        let f = refine_flag(&q, &Flag::standard(2), &cfg).unwrap();
        let v = flag_objective(&q, &f).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn refine_never_worsens() {
        for seed in 0..10 {
            let a = crate::matcore::random::ginibre(4, 4, &mut stream_rng(seed, 0));
            let start = Flag::new(haar_unitary(4, seed)).unwrap();
            let before = flag_objective(&a, &start).unwrap();
            let after = flag_objective(&a, &refine_flag(&a, &start, &quick()).unwrap()).unwrap();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn identity_and_nilpotent() {
        let b = estimate_nu(&CMatrix::identity(4), &quick()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-9);
        let n = CMatrix::from_fn(4, 4, |i, j| if j > i { ONE } else { ZERO });
        let b = estimate_nu(&n, &quick()).unwrap();
        assert!(b.value <= 1e-8);
    }

    #[test]
    fn golden_ratio_case() {
        let e = crate::matcore::random_unit_vector(3, &mut stream_rng(4, 4));
        let q = CMatrix::outer(&e, &e);
        let b = estimate_nu(&q, &SearchConfig::default().with_seed(11)).unwrap();
        assert!((b.value - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-6, "{}", b.value);
        assert!((b.value - macdonald_value(3)).abs() < 1e-6);
    }

    #[test]
    fn rank_vectors() {
        assert_eq!(increasing_rank_vectors(4, 2), vec![vec![0, 1, 4], vec![0, 2, 4], vec![0, 3, 4]]);
        assert_eq!(increasing_rank_vectors(3, 3), vec![vec![0, 1, 2, 3]]);
        assert_eq!(increasing_rank_vectors(5, 1), vec![vec![0, 5]]);
        assert_eq!(even_ranks(10, 3), vec![0, 3, 6, 10]);
    }

    #[test]
    fn order_one_is_the_norm() {
        let a = crate::matcore::random::ginibre(4, 4, &mut stream_rng(2, 8));
        let b = estimate_nu_order(&a, 1, &quick()).unwrap();
        assert!((b.value - operator_norm(&a).unwrap()).abs() < 1e-12);
        assert!(estimate_nu_order(&a, 5, &quick()).is_err());
    }

    #[test]
    fn full_order_matches_estimate() {
        let a = crate::matcore::random::ginibre(4, 4, &mut stream_rng(3, 8));
        let x = estimate_nu_order(&a, 4, &quick()).unwrap().value;
        let y = estimate_nu(&a, &quick()).unwrap().value;
        assert!((x - y).abs() <= 2e-8);
    }
}
