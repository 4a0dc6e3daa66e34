use nildist::chains::{macdonald_value, theorem1_bound};
use nildist::matcore::random::ginibre;
use nildist::matcore::{operator_norm, random_unit_vector, stream_rng, CMatrix, C64};
use nildist::nestdist::{flag_objective, CertificateFlag, Flag};
use nildist::optimize::{estimate_nu, estimate_nu_order, refine_flag, SearchConfig};
use nildist::parallel::Execution;
use nildist::verify::{normal_instance, random_theorem1_instance, run_macdonald_experiment, ExperimentRow};

fn moderate(seed: u64) -> SearchConfig {
    SearchConfig {
        restarts: 12,
        sweeps: 12,
        ..SearchConfig::default()
    }
    .with_seed(seed)
}

fn complete_flag(c: &CertificateFlag) -> Flag {
    match c {
        CertificateFlag::Complete(f) => f.clone(),
        CertificateFlag::Partial(_) => panic!("expected a complete flag"),
    }
}

#[test]
fn strictly_triangular_input_has_distance_zero() {
    let n = CMatrix::from_fn(5, 5, |i, j| if j > i { C64::new(1.0 + i as f64, -(j as f64)) } else { C64::new(0.0, 0.0) });
    let b = estimate_nu(&n, &moderate(0)).unwrap();
    assert!(b.value <= 1e-8, "{}", b.value);
}

#[test]
fn identity_has_distance_one() {
    let b = estimate_nu(&CMatrix::identity(4), &SearchConfig::default()).unwrap();
    assert!((b.value - 1.0).abs() <= 1e-9);
}

#[test]
fn estimates_never_exceed_identity_or_schur_flags() {
    for seed in 0..20u64 {
        let a = ginibre(5, 5, &mut stream_rng(seed, 50));
        let cfg = SearchConfig { restarts: 3, sweeps: 4, ..SearchConfig::default() }.with_seed(seed);
        let b = estimate_nu(&a, &cfg).unwrap();
        let rho = nildist::matcore::spectral_radius(&a).unwrap();
        let norm = operator_norm(&a).unwrap();
        assert!(b.value <= rho.min(norm) + cfg.cert_tol);
        assert!(b.is_certified(norm, cfg.cert_tol));
    }
}

#[test]
fn refine_is_stationary_at_a_local_minimum() {
    let a = CMatrix::diag_real(&[1.0, 0.0]);
    let cfg = SearchConfig { sweeps: 3, ..SearchConfig::default() };
    let once = refine_flag(&a, &Flag::standard(2), &cfg).unwrap();
    let twice = refine_flag(&a, &once, &cfg).unwrap();
    assert!((flag_objective(&a, &twice).unwrap() - flag_objective(&a, &once).unwrap()).abs() <= 1e-15);
    assert!((flag_objective(&a, &once).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn objective_is_nonincreasing_across_sweeps() {
    let a = ginibre(5, 5, &mut stream_rng(3, 51));
    let start = Flag::new(nildist::matcore::haar_unitary(5, 9)).unwrap();
    let mut last = flag_objective(&a, &start).unwrap();
    let mut flag = start;
    for _ in 0..5 {
        let cfg = SearchConfig { sweeps: 1, ..SearchConfig::default() };
        flag = refine_flag(&a, &flag, &cfg).unwrap();
        let v = flag_objective(&a, &flag).unwrap();
        assert!(v <= last + 1e-12);
        last = v;
    }
}

#[test]
fn order_one_is_the_norm_and_order_is_monotone() {
    for seed in 0..4u64 {
        let a = ginibre(4, 4, &mut stream_rng(seed, 52));
        let cfg = moderate(seed);
        let values: Vec<f64> = (1..=4).map(|n| estimate_nu_order(&a, n, &cfg).unwrap().value).collect();
        assert!((values[0] - operator_norm(&a).unwrap()).abs() < 1e-12);
        for w in values.windows(2) {
            assert!(w[0] >= w[1] - 2.0 * cfg.cert_tol, "{values:?}");
        }
    }
}

#[test]
fn order_certificates_are_nilpotent_of_that_order() {
    let a = ginibre(6, 6, &mut stream_rng(1, 53));
    let cfg = moderate(1);
    let b = estimate_nu_order(&a, 3, &cfg).unwrap();
    let cube = b.certificate.pow(3);
    assert!(operator_norm(&cube).unwrap() <= cfg.cert_tol);
    assert!(operator_norm(&(&a - &b.certificate)).unwrap() <= b.value + cfg.cert_tol);
    assert_eq!(b.flag.order(), 3);
}

#[test]
fn rank_refined_bound_examples() {
    let (m, _) = random_theorem1_instance(4, 2, 2024).unwrap();
    let b = estimate_nu(&m, &moderate(5)).unwrap();
    assert!((theorem1_bound(4, 2).unwrap() - macdonald_value(3)).abs() < 1e-15);
    assert!(b.value >= theorem1_bound(4, 2).unwrap() - 1e-9);

    let normal = normal_instance(5, 3, 7).unwrap();
    let b = estimate_nu(&normal, &moderate(6)).unwrap();
    assert!(b.value >= theorem1_bound(5, 2).unwrap() - 1e-9);
}

#[test]
fn bound_fails_without_the_expansive_hypothesis() {
    for n in 1..=5 {
        let e = random_unit_vector(n, &mut stream_rng(n as u64, 54));
        let q = CMatrix::outer(&e, &e);
        let half = q.scale_real(0.5);
        let b = estimate_nu(&half, &SearchConfig::default().with_seed(1)).unwrap();
        assert!((b.value - 0.5 * macdonald_value(n)).abs() < 1e-4, "n {n}: {}", b.value);
        assert!(b.value < theorem1_bound(n, 1).unwrap());
    }
}

#[test]
fn shared_flags_transfer_upper_bounds() {
    for seed in 0..6u64 {
        let a = ginibre(4, 4, &mut stream_rng(seed, 55));
        let b = &a + &ginibre(4, 4, &mut stream_rng(seed, 56)).scale_real(0.1);
        let cfg = moderate(seed);
        let ea = estimate_nu(&a, &cfg).unwrap();
        let eb = estimate_nu(&b, &cfg).unwrap();
        let dist = operator_norm(&(&a - &b)).unwrap();
        let b_on_a = flag_objective(&b, &complete_flag(&ea.flag)).unwrap();
        let a_on_b = flag_objective(&a, &complete_flag(&eb.flag)).unwrap();
        assert!(b_on_a <= ea.value + dist + 1e-12);
        assert!(a_on_b <= eb.value + dist + 1e-12);
    }
}

#[test]
fn execution_modes_agree() {
    let a = ginibre(4, 4, &mut stream_rng(8, 57));
    let par = moderate(2);
    let seq = SearchConfig { execution: Execution::Sequential, ..par };
    let x = estimate_nu(&a, &par).unwrap();
    let y = estimate_nu(&a, &seq).unwrap();
    assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
}

#[test]
fn macdonald_rows_round_trip() {
    let rows = run_macdonald_experiment(4, &moderate(3)).unwrap();
    let text: Vec<String> = rows.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    let back: Vec<ExperimentRow> = text.iter().map(|t| serde_json::from_str(t).unwrap()).collect();
    assert_eq!(back, rows);
    for r in &rows {
        assert!(r.gap >= -1e-9 && r.gap <= 1e-6);
    }
}

#[test]
fn certificate_json_round_trip() {
    let a = ginibre(3, 3, &mut stream_rng(4, 58));
    let b = estimate_nu(&a, &moderate(4)).unwrap();
    let text = serde_json::to_string(&b).unwrap();
    let back: nildist::nestdist::CertifiedUpperBound = serde_json::from_str(&text).unwrap();
    assert_eq!(back, b);
}
