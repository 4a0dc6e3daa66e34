use nildist::chains::{scalar_chain_value, solve_scalar_chain, ScalarChain};
use nildist::matcore::random::ginibre;
use nildist::matcore::{
    haar_unitary, operator_norm, psd_sqrt, stream_rng, CMatrix, HermitianCheckTolerance, C64,
};
use nildist::nestdist::{
    corner_norms, flag_objective, nearest_flag_nilpotent, parrott_min, Flag,
};
use proptest::prelude::*;

fn matrix(n: usize, seed: u64, stream: u64) -> CMatrix {
    ginibre(n, n, &mut stream_rng(seed, stream))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corner_norms_are_unitarily_invariant(n in 1usize..7, seed in any::<u64>()) {
        let a = matrix(n, seed, 0);
        let f = Flag::new(haar_unitary(n, seed ^ 1)).unwrap();
        let u = haar_unitary(n, seed ^ 2);
        let moved = a.conjugate_by(&u);
        let g = f.transformed(&u).unwrap();
        let x = corner_norms(&a, &f).unwrap();
        let y = corner_norms(&moved, &g).unwrap();
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p));
        }
    }

    #[test]
    fn objective_scales_with_modulus(n in 1usize..7, seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let a = matrix(n, seed, 0);
        let f = Flag::new(haar_unitary(n, seed)).unwrap();
        let lambda = C64::new(re, im);
        let x = flag_objective(&a.scale(lambda), &f).unwrap();
        let y = lambda.norm() * flag_objective(&a, &f).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y));
    }

    #[test]
    fn objective_is_one_lipschitz_on_a_shared_flag(n in 1usize..7, seed in any::<u64>()) {
        let a = matrix(n, seed, 0);
        let b = matrix(n, seed, 1);
        let f = Flag::new(haar_unitary(n, seed)).unwrap();
        let gap = (flag_objective(&a, &f).unwrap() - flag_objective(&b, &f).unwrap()).abs();
        prop_assert!(gap <= operator_norm(&(&a - &b)).unwrap() + 1e-12);
    }

    #[test]
    fn norm_is_submultiplicative(n in 1usize..9, seed in any::<u64>()) {
        let a = matrix(n, seed, 0);
        let b = matrix(n, seed, 1);
        let ab = operator_norm(&(&a * &b)).unwrap();
        prop_assert!(ab <= operator_norm(&a).unwrap() * operator_norm(&b).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn polar_identity(n in 1usize..9, seed in any::<u64>()) {
        let x = matrix(n, seed, 0);
        let y = matrix(n, seed, 1);
        let xx = x.gram();
        let yy = &y * &y.adjoint();
        let rx = psd_sqrt(&xx, HermitianCheckTolerance::for_matrix(&xx)).unwrap();
        let ry = psd_sqrt(&yy, HermitianCheckTolerance::for_matrix(&yy)).unwrap();
        let lhs = operator_norm(&(&x * &y)).unwrap();
        let rhs = operator_norm(&(&rx * &ry)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8);
    }

    #[test]
    fn psd_sqrt_scales(n in 1usize..7, seed in any::<u64>(), t in 0.01f64..100.0) {
        let a = matrix(n, seed, 0).gram();
        let ta = a.scale_real(t);
        let r = psd_sqrt(&a, HermitianCheckTolerance::for_matrix(&a)).unwrap();
        let rt = psd_sqrt(&ta, HermitianCheckTolerance::for_matrix(&ta)).unwrap();
        prop_assert!((&rt - &r.scale_real(t.sqrt())).max_abs() <= 1e-9 * (1.0 + t.sqrt() * r.max_abs()));
        prop_assert!((&(&r * &r) - &a).max_abs() <= 1e-10 * (1.0 + a.max_abs()));
    }

    #[test]
    fn certificates_match_their_flag(n in 1usize..7, seed in any::<u64>()) {
        let a = matrix(n, seed, 0);
        let f = Flag::new(haar_unitary(n, seed)).unwrap();
        let b = nearest_flag_nilpotent(&a, &f).unwrap();
        let norm = operator_norm(&a).unwrap();
        prop_assert!(b.residual <= 1e-8 * (1.0 + norm));
        prop_assert!(b.structural_defect() <= 1e-12 * (1.0 + norm));
        prop_assert!(b.value <= norm + 1e-12);
    }

    #[test]
    fn parrott_attains_the_lower_bound(p in 1usize..4, q in 1usize..4, r in 1usize..4, s in 1usize..4, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 9);
        let a11 = ginibre(p, q, &mut rng);
        let a21 = ginibre(r, q, &mut rng);
        let a22 = ginibre(r, s, &mut rng);
        let c = parrott_min(&a11, &a21, &a22).unwrap();
        let full = a11.hstack(&c.x).vstack(&a21.hstack(&a22));
        let norm = operator_norm(&full).unwrap();
        prop_assert!(norm <= c.gamma * (1.0 + 1e-9) + 1e-12);
        prop_assert!(norm >= c.gamma * (1.0 - 1e-12));
    }

    #[test]
    fn solved_chain_meets_its_value(n in 1usize..60) {
        let s = solve_scalar_chain(n, 1e-12).unwrap();
        prop_assert!(scalar_chain_value(&s.chain) <= s.value * (1.0 + 1e-12));
    }

    #[test]
    fn random_chains_never_beat_the_solution(n in 1usize..12, raw in proptest::collection::vec(0.0f64..1.0, 11)) {
        let mut c: Vec<f64> = raw[..n - 1].to_vec();
        c.sort_by(f64::total_cmp);
        c.insert(0, 0.0);
        c.push(1.0);
        let chain = ScalarChain::new(c).unwrap();
        let best = solve_scalar_chain(n, 1e-12).unwrap().value;
        prop_assert!(scalar_chain_value(&chain) >= best - 1e-12);
    }
}
