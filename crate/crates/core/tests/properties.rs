use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stratcomm_core::binary::{BinaryParams, PosteriorPair};
use stratcomm_core::capacity::capacity;
use stratcomm_core::concavify::{concavify_constrained, lagrangian_value, GridSpec};
use stratcomm_core::game::{Atom, Belief, Scenario, Splitting};
use stratcomm_core::prob::{
    conditional_mutual_information, entropy_bits, kl_divergence, mutual_information, Dist, Joint, Kernel,
};

fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len)
}

fn dist(len: usize) -> impl Strategy<Value = Dist> {
    weights(len).prop_map(|w| Dist::from_weights(w).unwrap())
}

fn scenario(max: usize) -> impl Strategy<Value = Scenario> {
    (2..=max, 1..=max, 2..=max, any::<u64>()).prop_map(|(nu, nz, nv, seed)| {
        Scenario::random(&mut ChaCha8Rng::seed_from_u64(seed), nu, nz, 2, nv).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marginals_are_consistent(a in 1usize..5, b in 1usize..5, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..a * b).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
        let t: f64 = w.iter().sum();
        let j = Joint::new(vec![a, b], w.iter().map(|x| x / t).collect()).unwrap();
        let pa = j.axis_dist(0).unwrap();
        let pb = j.axis_dist(1).unwrap();
        for i in 0..a {
            let row: f64 = (0..b).map(|k| j.get(&[i, k])).sum();
            prop_assert!((pa.get(i) - row).abs() < 1e-12);
        }
        prop_assert!((pb.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let swapped = j.marginal(&[1, 0]).unwrap();
        prop_assert!((mutual_information(&j).unwrap() - mutual_information(&swapped).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_vanishes_on_equal_arguments(p in dist(4), q in dist(4)) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d.is_finite() && d.bits >= 0.0);
        prop_assert_eq!(kl_divergence(&p, &p).unwrap().bits, 0.0);
        // Pinsker: D ≥ (L1)² / (2 ln 2)
        let l1 = p.l1_distance(&q);
        prop_assert!(d.bits + 1e-12 >= l1 * l1 / (2.0 * core::f64::consts::LN_2));
    }

    #[test]
    fn mutual_information_chain_rule(w in weights(12)) {
        // axes (A, B, C) of sizes 2, 3, 2: I(A;B,C) = I(A;C) + I(A;B|C)
        let t: f64 = w.iter().sum();
        let j = Joint::new(vec![2, 3, 2], w.iter().map(|x| x / t).collect()).unwrap();
        let a_bc = Joint::new(vec![2, 6], j.mass().to_vec()).unwrap();
        let lhs = mutual_information(&a_bc).unwrap();
        let rhs = mutual_information(&j.marginal(&[0, 2]).unwrap()).unwrap()
            + conditional_mutual_information(&j, 2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn average_entropy_is_concave(s in scenario(3), lam in 0.0f64..1.0, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let w: Vec<f64> = (0..s.nu()).map(|_| rng.random::<f64>()).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect::<Vec<f64>>()
        };
        let (p, q) = (draw(), draw());
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let chord = lam * s.average_entropy(&p) + (1.0 - lam) * s.average_entropy(&q);
        prop_assert!(s.average_entropy(&mix) >= chord - 1e-10);
        prop_assert!(s.average_entropy(&p) <= entropy_bits(&p) + 1e-12);
    }

    #[test]
    fn ties_go_against_the_encoder(s in scenario(3), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..s.nu()).map(|_| rng.random::<f64>() + 1e-3).collect();
        let t: f64 = w.iter().sum();
        let p: Vec<f64> = w.into_iter().map(|x| x / t).collect();
        for z in 0..s.nz() {
            let br = s.best_reply_actions(z, &p);
            prop_assert!(br.optimal_set.contains(&br.chosen));
            prop_assert_eq!(br.chosen, s.chosen_action(z, &p));
            let enc = |v: usize| (0..s.nu()).map(|u| p[u] * s.utility_encoder().get(u, z, v)).sum::<f64>();
            for &v in &br.optimal_set {
                prop_assert!(enc(br.chosen) <= enc(v));
            }
        }
    }

    #[test]
    fn merging_keeps_value_and_barycenter(s in scenario(3), raw in prop::collection::vec((0.01f64..1.0, 0u64..1000), 2..6)) {
        use rand::Rng;
        let atoms: Vec<Atom> = raw
            .iter()
            .map(|&(w, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b: Vec<f64> = (0..s.nu()).map(|_| rng.random::<f64>() + 1e-3).collect();
                Atom { weight: w, belief: Belief::from_weights(b).unwrap() }
            })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        let atoms = atoms.into_iter().map(|a| Atom { weight: a.weight / total, ..a }).collect();
        let sp = Splitting::new(atoms).unwrap();
        let merged = s.merge_equivalent_posteriors(&sp);
        let before = s.splitting_evaluate(&sp, 0.0);
        let after = s.splitting_evaluate(&merged, 0.0);
        prop_assert!(merged.len() <= sp.len());
        prop_assert!((before.value - after.value).abs() < 1e-12);
        prop_assert!(after.avg_entropy >= before.avg_entropy - 1e-12);
        for (a, b) in sp.barycenter().iter().zip(merged.barycenter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn capacity_ignores_symbol_order(rows in prop::collection::vec(weights(3), 3), perm in Just([2usize, 0, 1])) {
        let k = Kernel::new(rows.iter().map(|r| { let t: f64 = r.iter().sum(); r.iter().map(|x| x / t).collect() }).collect()).unwrap();
        let permuted = Kernel::new(perm.iter().map(|&i| perm.iter().map(|&j| k.get(i, j)).collect()).collect()).unwrap();
        let a = capacity(&k, 1e-10, 100_000).capacity;
        let b = capacity(&permuted, 1e-10, 100_000).capacity;
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        prop_assert!(a <= libm::log2(3.0) + 1e-12);
    }

    #[test]
    fn posterior_pair_round_trip(q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0, p0 in 0.01f64..0.99) {
        let bp = BinaryParams::new(p0, 0.7, 0.9).unwrap();
        let between = q1.min(q2) <= p0 && p0 <= q1.max(q2);
        match bp.kernel_from_posteriors(PosteriorPair { q1, q2 }) {
            Ok((a, b)) => {
                prop_assert!(between);
                prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
                if let Ok(back) = bp.posteriors_from_kernel(a, b) {
                    prop_assert!((back.q1 - q1).abs() < 1e-12 && (back.q2 - q2).abs() < 1e-12);
                }
            }
            Err(_) => prop_assert!(!between || q1 == q2),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dual_bounds_primal_and_value_grows_with_capacity(s in scenario(2), t in 0.0f64..5.0, c in 0.0f64..1.0) {
        let g = GridSpec::new(200);
        let prior = Belief(s.prior().clone());
        let lo = concavify_constrained(&s, &prior, c, &g).unwrap().value;
        let hi = concavify_constrained(&s, &prior, c + 0.2, &g).unwrap().value;
        prop_assert!(hi >= lo - 1e-9);
        prop_assert!(lagrangian_value(&s, &prior, c, t, &g).unwrap() >= lo - 1e-9);
    }

    #[test]
    fn solver_values_are_bayes_plausible(s in scenario(3), c in 0.0f64..1.5) {
        let g = GridSpec::default_for(s.nu());
        let prior = Belief(s.prior().clone());
        let r = concavify_constrained(&s, &prior, c, &g).unwrap();
        let eval = s.splitting_evaluate(&r.splitting, c);
        prop_assert!(eval.feasible, "{:?}", eval.infeasibility);
        prop_assert!((eval.value - r.value).abs() < 1e-9);
        prop_assert!(r.value + 1e-9 >= s.zero_capacity_value().min(s.average_utility(s.prior().mass())));
    }
}

#[test]
fn state_posteriors_follow_bayes_on_a_fine_grid() {
    let bp = BinaryParams::paper();
    let s = bp.scenario().unwrap();
    for i in 0..=10_000 {
        let q = i as f64 / 10_000.0;
        let (p1, p2) = bp.conditional_posteriors(q);
        let post = |z| s.posterior_given_state(&[1.0 - q, q], z).map(|(_, p)| p[1]);
        if let Some(p) = post(0) {
            assert_abs_diff_eq!(p1, p, epsilon = 1e-12);
        }
        if let Some(p) = post(1) {
            assert_abs_diff_eq!(p2, p, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(bp.average_entropy(q), s.average_entropy(&[1.0 - q, q]), epsilon = 1e-12);
    }
}

#[test]
fn zero_capacity_matches_the_solver_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let s = Scenario::random(&mut rng, 3, 2, 2, 3).unwrap();
        let r = concavify_constrained(&s, &Belief(s.prior().clone()), 0.0, &GridSpec::default_for(3)).unwrap();
        assert_abs_diff_eq!(r.value, s.zero_capacity_value(), epsilon = 1e-3);
    }
}
