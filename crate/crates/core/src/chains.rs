//! Chain reformulations of the distance for positive semidefinite matrices,
//! the scalar problem for rank-one projections, and the closed-form values
//! that go with it.
//!
//! For `0 ⪯ A`, the distance to the nilpotents equals the infimum over
//! chains `0 = A_0 ⪯ A_1 ⪯ … ⪯ A_n = A` with rank-one increments of
//! `max_k ‖(A − A_{k−1})^{1/2} A_k^{1/2}‖`. For a rank-one projection `Q`
//! every such chain is `A_k = c_k Q`, which leaves the scalar problem
//! `inf max_k √(c_k (1 − c_{k−1}))` over `0 = c_0 ≤ … ≤ c_n = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::random::orthonormalize_columns;
use crate::matcore::{
    eigh, operator_norm_unchecked, psd_decompose, psd_sqrt, CMatrix, HermitianCheckTolerance, C64,
    ONE, ZERO,
};
use crate::nestdist::Flag;

/// `0 = c_0 ≤ c_1 ≤ … ≤ c_n = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScalarChain {
    c: Vec<f64>,
}

impl ScalarChain {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.len() < 2 {
            return Err(Error::InvalidArgument("a scalar chain needs n ≥ 1".into()));
        }
        if c[0] != 0.0 || *c.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "scalar chain must run from 0 to 1, got {c:?}"
            )));
        }
        if c.iter().any(|x| !(0.0..=1.0).contains(x)) || c.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(format!(
                "scalar chain must be nondecreasing in [0, 1], got {c:?}"
            )));
        }
        Ok(Self { c })
    }

    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }
}

impl TryFrom<Vec<f64>> for ScalarChain {
    type Error = Error;
    fn try_from(c: Vec<f64>) -> Result<Self> {
        Self::new(c)
    }
}

impl From<ScalarChain> for Vec<f64> {
    fn from(s: ScalarChain) -> Self {
        s.c
    }
}

/// `max_k √(c_k (1 − c_{k−1}))`.
pub fn scalar_chain_value(chain: &ScalarChain) -> f64 {
    chain
        .c
        .windows(2)
        .map(|w| (w[1] * (1.0 - w[0])).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

/// Greedy chain at level `v`: each `c_k` is pushed as high as the level
/// allows. Returns whether it reaches 1 within `n` steps.
pub fn greedy_chain(n: usize, v: f64) -> (bool, Vec<f64>) {
    let v2 = v * v;
    let mut c = vec![0.0; n + 1];
    for k in 1..=n {
        let prev = c[k - 1];
        c[k] = if prev >= 1.0 {
            1.0
        } else {
            (v2 / (1.0 - prev)).min(1.0)
        };
    }
    (c[n] >= 1.0, c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarChainSolution {
    pub value: f64,
    pub chain: ScalarChain,
}

/// Bisection on the level `v ∈ [0, 1]` with greedy feasibility. The returned
/// chain has `scalar_chain_value ≤ value` and `value` is within `tol` of the
/// infimum. Bisection continues past `tol` down to adjacent floats, which
/// costs a few dozen more greedy passes.
pub fn solve_scalar_chain(n: usize, tol: f64) -> Result<ScalarChainSolution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if greedy_chain(n, mid).0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (_, c) = greedy_chain(n, hi);
    Ok(ScalarChainSolution {
        value: hi,
        chain: ScalarChain::new(c)?,
    })
}

/// Distance from a rank-one projection in `M_n` to the nilpotents,
/// `½·sec(π/(n+2))`.
pub fn macdonald_value(n: usize) -> f64 {
    0.5 / (PI / (n as f64 + 2.0)).cos()
}

fn check_rank(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ m ≤ n, got n={n}, m={m}")));
    }
    Ok(())
}

/// Conjectured distance `½·sec(π/(n/m + 2))` for rank-`m` projections.
pub fn cramer_value(n: usize, m: usize) -> Result<f64> {
    check_rank(n, m)?;
    let ratio = n as f64 / m as f64;
    Ok(0.5 / (PI / (ratio + 2.0)).cos())
}

/// Proven lower bound `½·sec(π/(n−m+3))` for matrices `M` with `PMP = M`,
/// `M*M ⪰ P` and `rank P = m`.
pub fn theorem1_bound(n: usize, m: usize) -> Result<f64> {
    check_rank(n, m)?;
    Ok(macdonald_value(n - m + 1))
}

/// One row of known and conjectured values for `(n, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub n: usize,
    pub m: usize,
    pub macdonald: f64,
    pub cramer: f64,
    pub theorem1: f64,
}

impl BoundTable {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Ok(Self {
            n,
            m,
            macdonald: macdonald_value(n),
            cramer: cramer_value(n, m)?,
            theorem1: theorem1_bound(n, m)?,
        })
    }

    pub const CSV_HEADER: &'static str = "n,m,macdonald,cramer,theorem1";

    pub fn csv_row(&self) -> String {
        format!("{},{},{:?},{:?},{:?}", self.n, self.m, self.macdonald, self.cramer, self.theorem1)
    }
}

/// `0 = A_0 ⪯ A_1 ⪯ … ⪯ A_n` with increments of rank at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdChain {
    matrices: Vec<CMatrix>,
}

/// Relative bound on the second eigenvalue of an increment for it to count
/// as rank one.
pub const RANK_ONE_TOL: f64 = 1e-8;

impl PsdChain {
    /// Validates the chain: equal square shapes, `A_0 = 0`, Hermitian psd
    /// increments of rank ≤ 1 (relative to `‖A_n‖`).
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(Error::InvalidArgument("a chain needs n ≥ 1".into()));
        }
        let d = matrices[0].require_square()?;
        for m in &matrices {
            if m.rows() != d || m.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: format!("{d}×{d}"),
                    found: format!("{}×{}", m.rows(), m.cols()),
                });
            }
            m.check_finite()?;
        }
        let top = matrices.last().unwrap();
        let scale = operator_norm_unchecked(top);
        if matrices[0].max_abs() > 1e-12 * (1.0 + scale) {
            return Err(Error::InvalidArgument("chain must start at 0".into()));
        }
        let tol = HermitianCheckTolerance {
            herm_tol: 1e-10 * (1.0 + scale),
            psd_tol: 1e-10 * scale,
        };
        for (k, w) in matrices.windows(2).enumerate() {
            let inc = &w[1] - &w[0];
            let eig = psd_decompose(&inc, tol).map_err(|e| {
                Error::InvalidArgument(format!("increment {} is not psd: {e}", k + 1))
            })?;
            let second = second_singular(&eig.values);
            if second > RANK_ONE_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "increment {} has rank > 1 (second eigenvalue {second:e})",
                    k + 1
                )));
            }
        }
        Ok(Self { matrices })
    }

    /// `A_k = c_k·Q`.
    pub fn scaled(q: &CMatrix, chain: &ScalarChain) -> Result<Self> {
        Self::new(chain.values().iter().map(|&c| q.scale_real(c)).collect())
    }

    /// `A_k = A^{1/2} P_k A^{1/2}` for the projections of `flag`.
    pub fn from_flag(a: &CMatrix, flag: &Flag) -> Result<Self> {
        let root = psd_sqrt(a, HermitianCheckTolerance::for_matrix(a))?;
        let n = flag.dim();
        let mats = (0..=n)
            .map(|k| flag.projection(k).conjugate_by(&root).hermitian_part())
            .collect();
        Self::new(mats)
    }

    pub fn n(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn top(&self) -> &CMatrix {
        self.matrices.last().unwrap()
    }

    /// `A_k − A_{k−1}` for `k = 1..n`.
    pub fn increments(&self) -> Vec<CMatrix> {
        self.matrices.windows(2).map(|w| &w[1] - &w[0]).collect()
    }
}

fn second_singular(values: &[f64]) -> f64 {
    // Ascending eigenvalues of a psd matrix; rounding may leave small
    // negatives whose magnitude also counts.
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    values[n - 2].max(values[0].abs())
}

fn check_top(a: &CMatrix, chain: &PsdChain) -> Result<f64> {
    a.require_square()?;
    if a.rows() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{}", chain.dim(), chain.dim()),
            found: format!("{}×{}", a.rows(), a.cols()),
        });
    }
    let scale = operator_norm_unchecked(a);
    let gap = (chain.top() - a).max_abs();
    if gap > 1e-10 * (1.0 + scale) {
        return Err(Error::InvalidArgument(format!(
            "chain top differs from A by {gap:e}"
        )));
    }
    Ok(scale)
}

fn chain_tol(scale: f64) -> HermitianCheckTolerance {
    HermitianCheckTolerance {
        herm_tol: 1e-10 * (1.0 + scale),
        psd_tol: 1e-10 * scale.max(f64::MIN_POSITIVE),
    }
}

/// `max_k ‖(A − A_{k−1})^{1/2} A_k^{1/2}‖`.
pub fn psd_chain_objective(a: &CMatrix, chain: &PsdChain) -> Result<f64> {
    conjugated_chain_objective(a, &CMatrix::identity(a.rows()), chain)
}

/// `max_k ‖(A − A_{k−1})^{1/2} (X A_k X*)^{1/2}‖`.
pub fn conjugated_chain_objective(a: &CMatrix, x: &CMatrix, chain: &PsdChain) -> Result<f64> {
    let scale = check_top(a, chain)?;
    x.check_finite()?;
    if !x.is_square() || x.rows() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{}", a.rows(), a.rows()),
            found: format!("{}×{}", x.rows(), x.cols()),
        });
    }
    let xnorm = operator_norm_unchecked(x);
    let tol = chain_tol(scale);
    let conj_tol = chain_tol(scale * xnorm * xnorm);
    let mats = chain.matrices();
    let mut best: f64 = 0.0;
    for k in 1..mats.len() {
        let left = psd_sqrt(&(a - &mats[k - 1]).hermitian_part(), tol)?;
        let inner = mats[k].conjugate_by(x).hermitian_part();
        let right = psd_sqrt(&inner, conj_tol)?;
        best = best.max(operator_norm_unchecked(&(&left * &right)));
    }
    Ok(best)
}

/// The flag `P_k = B^{-1/2} B_k B^{-1/2}` of a chain with rank-one
/// increments and invertible top `B`.
pub fn chain_to_flag(chain: &PsdChain) -> Result<Flag> {
    let b = chain.top();
    let n = b.rows();
    if chain.n() != n {
        return Err(Error::InvalidArgument(format!(
            "a complete flag needs n = dim = {n} increments, got {}",
            chain.n()
        )));
    }
    let scale = operator_norm_unchecked(b);
    let mut vectors = CMatrix::zeros(n, n);
    for (k, inc) in chain.increments().iter().enumerate() {
        let eig = eigh(&inc.hermitian_part())?;
        let top = eig.max_value();
        if !(top > 1e-10 * scale) {
            return Err(Error::InvalidArgument(format!(
                "increment {} is zero; every increment must have rank exactly 1",
                k + 1
            )));
        }
        let second = second_singular(&eig.values);
        if second > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "increment {} has rank > 1 (second singular value {second:e})",
                k + 1
            )));
        }
        let root = top.sqrt();
        for i in 0..n {
            vectors[(i, k)] = eig.vectors[(i, n - 1)] * root;
        }
    }
    let eig = eigh(&b.hermitian_part())?;
    if eig.min_value() < 1e-8 * scale {
        return Err(Error::Singular(format!(
            "chain top has smallest eigenvalue {:e}; perturb the chain first with regularize_chain",
            eig.min_value()
        )));
    }
    let inv_root = eig.map(|x| 1.0 / x.sqrt());
    let w = &inv_root * &vectors;
    Ok(Flag::from_unitary(orthonormalize_columns(&w)))
}

/// Nearby chain with exactly rank-one increments whose top has full rank.
///
/// Each increment is replaced by its leading rank-one part `c_k c_k*`; when
/// `c_k` is (nearly) dependent on the earlier vectors, `√(eps·‖A‖)·u` is
/// added with `u` a unit vector orthogonal to them, so each repaired
/// increment moves by `eps·‖A‖` in norm. The default `eps` is `1e-6`.
pub fn regularize_chain(chain: &PsdChain, eps: f64) -> Result<PsdChain> {
    let n = chain.dim();
    let scale = operator_norm_unchecked(chain.top()).max(f64::MIN_POSITIVE);
    let delta = (eps * scale).sqrt();
    let mut accepted: Vec<Vec<C64>> = Vec::new();
    let mut mats = vec![CMatrix::zeros(n, n)];
    let mut running = CMatrix::zeros(n, n);
    for inc in chain.increments() {
        let eig = eigh(&inc.hermitian_part())?;
        let top = eig.max_value().max(0.0);
        let mut c: Vec<C64> = eig.vectors.column(n - 1).iter().map(|z| z * top.sqrt()).collect();
        if accepted.len() < n {
            let residual = orthogonal_residual(&accepted, &c);
            let rn = norm(&residual);
            if rn < delta {
                let u = fresh_direction(&accepted, n);
                for (ci, ui) in c.iter_mut().zip(&u) {
                    *ci += ui * delta;
                }
            }
            let residual = orthogonal_residual(&accepted, &c);
            let rn = norm(&residual);
            if rn > 0.0 {
                accepted.push(residual.into_iter().map(|z| z / rn).collect());
            }
        }
        running = &running + &CMatrix::outer(&c, &c);
        mats.push(running.clone());
    }
    PsdChain::new(mats)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonal_residual(basis: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let dot: C64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= qi * dot;
            }
        }
    }
    r
}

fn fresh_direction(basis: &[Vec<C64>], n: usize) -> Vec<C64> {
    let mut best = vec![ZERO; n];
    let mut best_norm = -1.0;
    for i in 0..n {
        let mut e = vec![ZERO; n];
        e[i] = ONE;
        let r = orthogonal_residual(basis, &e);
        let rn = norm(&r);
        if rn > best_norm {
            best_norm = rn;
            best = r;
        }
    }
    best.into_iter().map(|z| z / best_norm).collect()
}

/// A flag on which `Q = e e*` attains `½·sec(π/(n+2))`.
///
/// With the optimal scalar chain `(c_k)` and `s_j = √(c_j − c_{j−1})`, any
/// unitary `W` with `W e = s` works: the flag basis is `W*`, so `F* Q F = s s*`
/// and the `k`-th corner norm is `√(c_k (1 − c_{k−1}))`. `W` is a phase times
/// a Householder reflection.
pub fn optimal_rank_one_flag(n: usize, e: &[C64]) -> Result<Flag> {
    if e.len() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: format!("unit vector of length {n}"),
            found: format!("length {}", e.len()),
        });
    }
    let en = norm(e);
    if (en - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("e must be a unit vector, ‖e‖ = {en}")));
    }
    let sol = solve_scalar_chain(n, 1e-15)?;
    let c = sol.chain.values();
    let s: Vec<C64> = (1..=n)
        .map(|j| C64::new((c[j] - c[j - 1]).max(0.0).sqrt(), 0.0))
        .collect();
    let sn = norm(&s);
    let s: Vec<C64> = s.into_iter().map(|z| z / sn).collect();

    let overlap: C64 = e.iter().zip(&s).map(|(a, b)| a.conj() * b).sum();
    let omega = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    let v: Vec<C64> = e.iter().zip(&s).map(|(a, b)| a * omega - b).collect();
    let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut w = CMatrix::identity(n).scale(omega);
    if vn2 > 1e-30 {
        // W = ω (I − 2 v v*/‖v‖²)
        let tau = 2.0 / vn2;
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] -= omega * v[i] * v[j].conj() * tau;
            }
        }
    }
    Ok(Flag::from_unitary(w.adjoint()))
}
