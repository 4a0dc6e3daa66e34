//! Hypothesis checks, instance generators and experiment harnesses for the
//! lower bounds on the distance to the nilpotents.
//!
//! Every harness row compares a proven (or conjectured) lower bound with the
//! optimizer's certified upper bound. A row whose gap is below `−1e-9` on a
//! proven bound is a falsification: either the mathematics is wrong or, far
//! more likely, the code is, and the witness is kept for inspection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chains::{cramer_value, macdonald_value, optimal_rank_one_flag, theorem1_bound};
use crate::error::{Error, Result};
use crate::matcore::{
    eigvalsh, haar_unitary_from, operator_norm_unchecked, random_unit_vector, stream_rng,
    CMatrix, C64,
};
use crate::nestdist::{flag_objective, CertificateFlag};
use crate::optimize::{estimate_nu, SearchConfig};
use crate::parallel::{map_indexed, Execution};

/// Gaps below `-FALSIFICATION_TOL` on a proven bound are falsifications.
pub const FALSIFICATION_TOL: f64 = 1e-9;

/// Upper end of the accepted gap for proven projection cases.
pub const PROVEN_GAP_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `‖PMP − M‖`.
    pub pmp_residual: f64,
    /// Smallest eigenvalue of `M*M − P`.
    pub min_eig: f64,
    pub rank_p: usize,
    pub satisfied: bool,
}

/// Checks `PMP = M` and `M*M ⪰ P` for a nonzero projection `P`.
pub fn check_theorem1_hypothesis(m: &CMatrix, p: &CMatrix, tol: f64) -> Result<HypothesisReport> {
    let n = m.require_square()?;
    m.check_finite()?;
    p.check_finite()?;
    if p.rows() != n || p.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}×{n}"),
            found: format!("{}×{}", p.rows(), p.cols()),
        });
    }
    let idem = operator_norm_unchecked(&(&(p * p) - p));
    let herm = operator_norm_unchecked(&(p - &p.adjoint()));
    if idem > tol || herm > tol {
        return Err(Error::InvalidArgument(format!(
            "P is not a projection: ‖P² − P‖ = {idem:e}, ‖P − P*‖ = {herm:e}"
        )));
    }
    let rank = p.trace().re.round();
    if rank < 0.5 {
        return Err(Error::InvalidArgument("P must be nonzero".into()));
    }
    let pmp_residual = operator_norm_unchecked(&(&(&(p * m) * p) - m));
    let min_eig = eigvalsh(&(&m.gram() - p).hermitian_part())?[0];
    Ok(HypothesisReport {
        pmp_residual,
        min_eig,
        rank_p: rank as usize,
        satisfied: pmp_residual <= tol && min_eig >= -tol,
    })
}

/// How a harness instance was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `W·diag(M₀, 0)·W*` with singular values of `M₀` equal to `1 + |g|`.
    Expansive,
    /// Same block form with `M₀` unitary, so `M*M = P` exactly.
    Boundary,
    /// Normal matrix with spectrum in `{0} ∪ {|z| ≥ 1}`.
    Normal,
    /// A projection.
    Projection,
}

fn check_rank(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ m ≤ n, got n={n}, m={m}")));
    }
    Ok(())
}

fn block_instance(n: usize, m: usize, seed: u64, boundary: bool) -> Result<(CMatrix, CMatrix)> {
    check_rank(n, m)?;
    let w = haar_unitary_from(n, &mut stream_rng(seed, 0));
    let u = haar_unitary_from(m, &mut stream_rng(seed, 1));
    let v = haar_unitary_from(m, &mut stream_rng(seed, 2));
    let mut rng = stream_rng(seed, 3);
    let sigma: Vec<f64> = (0..m)
        .map(|_| {
            if boundary {
                1.0
            } else {
                let g: f64 = StandardNormal.sample(&mut rng);
                1.0 + g.abs()
            }
        })
        .collect();
    let m0 = &(&u * &CMatrix::diag_real(&sigma)) * &v.adjoint();
    let m_full = m0.pad_zero(n - m).conjugate_by(&w);
    let p = CMatrix::identity(m).pad_zero(n - m).conjugate_by(&w);
    Ok((m_full, p.hermitian_part()))
}

/// `M = W·diag(M₀, 0)·W*`, `P = W·diag(I_m, 0)·W*` with `W` Haar and the
/// singular values of `M₀` drawn as `1 + |g|`, `g` standard normal.
pub fn random_theorem1_instance(n: usize, m: usize, seed: u64) -> Result<(CMatrix, CMatrix)> {
    block_instance(n, m, seed, false)
}

/// Same construction with every singular value of `M₀` equal to 1.
pub fn boundary_theorem1_instance(n: usize, m: usize, seed: u64) -> Result<(CMatrix, CMatrix)> {
    block_instance(n, m, seed, true)
}

/// Haar-conjugated diagonal with `zeros` zero eigenvalues and the others of
/// modulus in `[lo, hi]` (uniform modulus, uniform phase), together with the
/// projection onto its support.
pub fn normal_instance_with_moduli(
    n: usize,
    zeros: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<(CMatrix, CMatrix)> {
    if zeros >= n {
        return Err(Error::InvalidArgument(format!("need zeros < n, got zeros={zeros}, n={n}")));
    }
    if !(1.0 <= lo && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 1 ≤ lo ≤ hi, got [{lo}, {hi}]")));
    }
    let w = haar_unitary_from(n, &mut stream_rng(seed, 0));
    let mut rng = stream_rng(seed, 1);
    let mut diag = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    for k in 0..n {
        if k < n - zeros {
            let r = lo + (hi - lo) * rng.random::<f64>();
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            diag.push(C64::from_polar(r, phase));
            support.push(1.0);
        } else {
            diag.push(C64::new(0.0, 0.0));
            support.push(0.0);
        }
    }
    let m = CMatrix::diag(&diag).conjugate_by(&w);
    let p = CMatrix::diag_real(&support).conjugate_by(&w).hermitian_part();
    Ok((m, p))
}

/// Normal matrix with `zeros` zero eigenvalues, the rest of modulus in `[1, 3]`.
pub fn normal_instance(n: usize, zeros: usize, seed: u64) -> Result<CMatrix> {
    Ok(normal_instance_with_moduli(n, zeros, 1.0, 3.0, seed)?.0)
}

/// Rank-`m` projection conjugated by a Haar unitary.
pub fn random_projection(n: usize, m: usize, seed: u64) -> Result<CMatrix> {
    check_rank(n, m)?;
    let w = haar_unitary_from(n, &mut stream_rng(seed, 0));
    Ok(CMatrix::identity(m).pad_zero(n - m).conjugate_by(&w).hermitian_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowLabel {
    /// The lower bound is a theorem.
    Proven,
    /// The lower bound is a conjectured value, reported but never asserted.
    Conjectured,
}

impl RowLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RowLabel::Proven => "PROVEN",
            RowLabel::Conjectured => "CONJECTURED",
        }
    }
}

/// One lower-bound versus upper-estimate comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub m: usize,
    pub lower_bound: f64,
    pub upper_estimate: f64,
    /// `upper_estimate − lower_bound`.
    pub gap: f64,
    pub seed: u64,
    pub wall_time_ms: f64,
    pub label: RowLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<InstanceKind>,
    /// Optimizer value, when another path also contributes to the estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_estimate: Option<f64>,
    /// Objective of the explicitly constructed flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructed_estimate: Option<f64>,
    /// For proven projection cases: whether the gap lies in
    /// `[−1e-9, 1e-3]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_tolerance: Option<bool>,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str = "n,m,lower_bound,upper_estimate,gap,seed,wall_time_ms,label";

    fn new(n: usize, m: usize, lower_bound: f64, upper_estimate: f64, seed: u64, wall_time_ms: f64, label: RowLabel) -> Self {
        Self {
            n,
            m,
            lower_bound,
            upper_estimate,
            gap: upper_estimate - lower_bound,
            seed,
            wall_time_ms,
            label,
            kind: None,
            optimizer_estimate: None,
            constructed_estimate: None,
            within_tolerance: None,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{},{:?},{}",
            self.n,
            self.m,
            self.lower_bound,
            self.upper_estimate,
            self.gap,
            self.seed,
            self.wall_time_ms,
            self.label.as_str()
        )
    }

    /// A proven lower bound exceeded by more than the tolerance.
    pub fn is_falsification(&self) -> bool {
        self.label == RowLabel::Proven && self.gap < -FALSIFICATION_TOL
    }

    /// Same row with the wall time cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Rank-one projections `Q = e e*` for `n = 1..=n_max`. The upper estimate is
/// the better of the optimizer and the constructed optimal flag; both are
/// recorded.
pub fn run_macdonald_experiment(n_max: usize, config: &SearchConfig) -> Result<Vec<ExperimentRow>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    config.validate()?;
    (1..=n_max)
        .map(|n| {
            let start = std::time::Instant::now();
            let e = random_unit_vector(n, &mut stream_rng(config.seed, n as u64));
            let q = CMatrix::outer(&e, &e);
            let optimizer = estimate_nu(&q, config)?.value;
            let constructed = flag_objective(&q, &optimal_rank_one_flag(n, &e)?)?;
            let mut row = ExperimentRow::new(
                n,
                1,
                macdonald_value(n),
                optimizer.min(constructed),
                config.seed,
                elapsed_ms(start),
                RowLabel::Proven,
            );
            row.kind = Some(InstanceKind::Projection);
            row.optimizer_estimate = Some(optimizer);
            row.constructed_estimate = Some(constructed);
            Ok(row)
        })
        .collect()
}

/// Everything needed to reproduce a falsifying row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsificationWitness {
    pub trial: usize,
    pub row: ExperimentRow,
    pub matrix: CMatrix,
    pub projection: CMatrix,
    pub flag: CertificateFlag,
    pub certificate: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub rows: Vec<ExperimentRow>,
    pub min_gap: f64,
    pub falsifications: Vec<FalsificationWitness>,
}

/// Trial `t` draws `n ∈ 1..=n_max` and `m ∈ 1..=n` from its own stream and
/// cycles through expansive, boundary and normal instances.
pub fn run_theorem1_harness(
    trials: usize,
    n_max: usize,
    config: &SearchConfig,
    seed: u64,
) -> Result<Theorem1Report> {
    if trials == 0 || n_max == 0 {
        return Err(Error::InvalidArgument("trials and n_max must be positive".into()));
    }
    config.validate()?;
    let inner = SearchConfig {
        execution: Execution::Sequential,
        ..*config
    };
    let outcomes = map_indexed(config.execution, trials, |t| -> Result<(ExperimentRow, Option<FalsificationWitness>)> {
        let start = std::time::Instant::now();
        let mut rng = stream_rng(seed, t as u64);
        let n = rng.random_range(1..=n_max);
        let m = rng.random_range(1..=n);
        let instance_seed: u64 = rng.random();
        let kind = match t % 3 {
            0 => InstanceKind::Expansive,
            1 => InstanceKind::Boundary,
            _ => InstanceKind::Normal,
        };
        let (matrix, projection) = match kind {
            InstanceKind::Expansive => random_theorem1_instance(n, m, instance_seed)?,
            InstanceKind::Boundary => boundary_theorem1_instance(n, m, instance_seed)?,
            _ => normal_instance_with_moduli(n, n - m, 1.0, 3.0, instance_seed)?,
        };
        let report = check_theorem1_hypothesis(&matrix, &projection, 1e-9)?;
        if !report.satisfied {
            return Err(Error::InvalidArgument(format!(
                "trial {t}: generated instance fails the hypothesis ({report:?})"
            )));
        }
        let bound = estimate_nu(&matrix, &inner.with_seed(instance_seed))?;
        let mut row = ExperimentRow::new(
            n,
            m,
            theorem1_bound(n, m)?,
            bound.value,
            instance_seed,
            elapsed_ms(start),
            RowLabel::Proven,
        );
        row.kind = Some(kind);
        let witness = row.is_falsification().then(|| FalsificationWitness {
            trial: t,
            row: row.clone(),
            matrix,
            projection,
            flag: bound.flag,
            certificate: bound.certificate,
        });
        Ok((row, witness))
    });
    let mut rows = Vec::with_capacity(trials);
    let mut falsifications = Vec::new();
    for outcome in outcomes {
        let (row, witness) = outcome?;
        rows.push(row);
        falsifications.extend(witness);
    }
    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    Ok(Theorem1Report {
        rows,
        min_gap,
        falsifications,
    })
}

/// Whether the value for rank-`m` projections in `M_n` is known:
/// `m = 1`, `m = n − 1` and `m = n`.
pub fn cramer_case_is_proven(n: usize, m: usize) -> bool {
    m == 1 || m + 1 == n || m == n
}

/// Haar-conjugated rank-`m` projection against the conjectured value
/// `½·sec(π/(n/m + 2))`.
pub fn run_cramer_exploration(n: usize, m: usize, config: &SearchConfig, seed: u64) -> Result<ExperimentRow> {
    check_rank(n, m)?;
    config.validate()?;
    let start = std::time::Instant::now();
    let p = random_projection(n, m, seed)?;
    let bound = estimate_nu(&p, &config.with_seed(seed))?;
    let label = if cramer_case_is_proven(n, m) {
        RowLabel::Proven
    } else {
        RowLabel::Conjectured
    };
    let mut row = ExperimentRow::new(n, m, cramer_value(n, m)?, bound.value, seed, elapsed_ms(start), label);
    row.kind = Some(InstanceKind::Projection);
    if label == RowLabel::Proven {
        row.within_tolerance = Some((-FALSIFICATION_TOL..=PROVEN_GAP_TOL).contains(&row.gap));
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{is_nilpotent, operator_norm};

    fn quick() -> SearchConfig {
        SearchConfig {
            restarts: 6,
            sweeps: 10,
            execution: Execution::Sequential,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn hypothesis_examples() {
        let p = random_projection(4, 2, 3).unwrap();
        assert!(check_theorem1_hypothesis(&p, &p, 1e-9).unwrap().satisfied);

        let e = random_unit_vector(3, &mut stream_rng(2, 2));
        let q = CMatrix::outer(&e, &e);
        let r = check_theorem1_hypothesis(&q.scale_real(2.0), &q, 1e-9).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.rank_p, 1);
        let r = check_theorem1_hypothesis(&q.scale_real(0.5), &q, 1e-9).unwrap();
        assert!(!r.satisfied);
        assert!((r.min_eig + 0.75).abs() < 1e-12);

        assert!(check_theorem1_hypothesis(&q, &CMatrix::zeros(3, 3), 1e-9).is_err());
        assert!(check_theorem1_hypothesis(&q, &q.scale_real(2.0), 1e-9).is_err());
    }

    #[test]
    fn generated_instances_satisfy_hypothesis() {
        for seed in 0..30 {
            let n = 1 + seed as usize % 6;
            let m = 1 + (seed as usize / 6) % n;
            for (mm, p) in [
                random_theorem1_instance(n, m, seed).unwrap(),
                boundary_theorem1_instance(n, m, seed).unwrap(),
                normal_instance_with_moduli(n, n - m, 1.0, 3.0, seed).unwrap(),
            ] {
                let r = check_theorem1_hypothesis(&mm, &p, 1e-9).unwrap();
                assert!(r.satisfied, "seed {seed}: {r:?}");
                assert_eq!(r.rank_p, m);
            }
        }
        let (_, p) = random_theorem1_instance(3, 3, 1).unwrap();
        assert!((&p - &CMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn unimodular_normal_is_unitary() {
        let (u, p) = normal_instance_with_moduli(4, 0, 1.0, 1.0, 5).unwrap();
        assert!((&u.gram() - &CMatrix::identity(4)).max_abs() < 1e-12);
        assert!((&p - &CMatrix::identity(4)).max_abs() < 1e-12);
        assert!(normal_instance(3, 3, 0).is_err());
        let m = normal_instance(5, 2, 9).unwrap();
        assert!((&(&m * &m.adjoint()) - &m.gram()).max_abs() < 1e-12);
    }

    #[test]
    fn macdonald_rows() {
        let rows = run_macdonald_experiment(6, &quick()).unwrap();
        assert_eq!(rows.len(), 6);
        assert!((rows[0].lower_bound - 1.0).abs() < 1e-15);
        assert!((rows[0].upper_estimate - 1.0).abs() < 1e-9);
        assert!((rows[1].upper_estimate - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((rows[5].lower_bound - 0.5411961).abs() < 1e-7);
        for r in &rows {
            assert!(r.gap >= -1e-9);
            assert!(r.constructed_estimate.unwrap() - r.lower_bound <= 1e-6);
        }
    }

    #[test]
    fn harness_small_run_is_sound() {
        let report = run_theorem1_harness(12, 4, &quick(), 77).unwrap();
        assert_eq!(report.rows.len(), 12);
        assert!(report.min_gap >= -FALSIFICATION_TOL);
        assert!(report.falsifications.is_empty());
        for r in report.rows.iter().filter(|r| r.m == r.n) {
            assert!(r.upper_estimate >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn harness_rows_round_trip() {
        let report = run_theorem1_harness(3, 3, &quick(), 1).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: Theorem1Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        let line = report.rows[0].csv_row();
        assert_eq!(line.split(',').count(), ExperimentRow::CSV_HEADER.split(',').count());
        assert!(line.ends_with("PROVEN"));
    }

    #[test]
    fn cramer_labels() {
        assert!(cramer_case_is_proven(3, 2));
        assert!(cramer_case_is_proven(5, 1));
        assert!(cramer_case_is_proven(4, 4));
        assert!(!cramer_case_is_proven(4, 2));
        let row = run_cramer_exploration(3, 3, &quick(), 4).unwrap();
        assert!((row.upper_estimate - 1.0).abs() < 1e-9);
        assert_eq!(row.within_tolerance, Some(true));
        let row = run_cramer_exploration(4, 2, &quick(), 4).unwrap();
        assert_eq!(row.label, RowLabel::Conjectured);
        assert_eq!(row.within_tolerance, None);
    }

    #[test]
    fn expansive_instance_certificate() {
        let (m, _) = random_theorem1_instance(4, 2, 12).unwrap();
        let b = estimate_nu(&m, &quick()).unwrap();
        assert!(b.value >= theorem1_bound(4, 2).unwrap() - 1e-9);
        assert!(is_nilpotent(&b.certificate, 1e-8));
        let d = operator_norm(&(&m - &b.certificate)).unwrap();
        assert!(d <= b.value + 1e-8 * (1.0 + operator_norm(&m).unwrap()));
    }
}
