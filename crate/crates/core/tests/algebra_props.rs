mod common;

use std::collections::BTreeMap;

use netident_core::dynamics::NetworkDynamics;
use netident_core::matrix::RationalMatrix;
use netident_core::network::{
    generic_rank, is_strictly_triangular, nonlinear_network_matrix, sample_network, transfer_from_jacobian,
};
use netident_core::poly::random_polynomial;
use netident_core::rational::{random_nonzero, rng_from_seed};
use netident_core::{max_vertex_disjoint, DelayAssignment, Digraph, Polynomial, Rational};
use proptest::prelude::*;

use common::*;

fn poly(arity: usize) -> impl Strategy<Value = Polynomial> {
    (1u32..4, any::<u64>()).prop_map(move |(d, s)| random_polynomial(arity, d, s, 9))
}

fn point(arity: usize, seed: u64) -> Vec<Rational> {
    let mut rng = rng_from_seed(seed);
    (0..arity).map(|_| random_nonzero(&mut rng, 12)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_operations_commute_with_evaluation(p in poly(3), q in poly(3), r in poly(3), s in any::<u64>()) {
        let x = point(3, s);
        let ev = |f: &Polynomial| f.eval(&x).unwrap();
        prop_assert_eq!(ev(&(&p + &q)), ev(&p) + ev(&q));
        prop_assert_eq!(ev(&(&p * &q)), ev(&p) * ev(&q));
        prop_assert_eq!(ev(&(&p - &q)), ev(&p) - ev(&q));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(ev(&p.pow(3)), ev(&p) * ev(&p) * ev(&p));
    }

    #[test]
    fn composition_evaluates_in_stages(p in poly(2), g0 in poly(3), g1 in poly(3), s in any::<u64>()) {
        let x = point(3, s);
        let inner = [g0.eval(&x).unwrap(), g1.eval(&x).unwrap()];
        let composed = p.compose(&[g0, g1]).unwrap();
        prop_assert_eq!(composed.eval(&x).unwrap(), p.eval(&inner).unwrap());
    }

    #[test]
    fn derivative_is_linear_and_obeys_leibniz(p in poly(2), q in poly(2)) {
        prop_assert_eq!((&p + &q).diff(0), &p.diff(0) + &q.diff(0));
        prop_assert_eq!((&p * &q).diff(1), &(&p.diff(1) * &q) + &(&p * &q.diff(1)));
    }

    #[test]
    fn decomposition_recomposes(p in poly(3)) {
        let d = p.decompose();
        prop_assert_eq!(d.recompose(), p.clone());
        for (e, _) in d.cross.terms() {
            prop_assert!(e.iter().filter(|&&x| x > 0).count() != 1, "single-variable monomial {:?} in cross part", e);
        }
        for (k, f) in d.univariate.iter().enumerate() {
            for (e, _) in f.terms() {
                prop_assert!(e[k] > 0 && e.iter().sum::<u32>() == e[k]);
            }
        }
        prop_assert_eq!(d.is_additive(), d.cross.is_zero());
    }

    #[test]
    fn polynomial_json_is_canonical(p in poly(3)) {
        let text = serde_json::to_string(&p).unwrap();
        let back: Polynomial = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn graph_and_dynamics_json_round_trip(n in 2usize..9, seed in any::<u64>()) {
        let g = random_dag(n, 0.4, seed);
        let text = serde_json::to_string(&g).unwrap();
        let back: Digraph = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &g);
        let g = g.validate().unwrap();
        let d = NetworkDynamics::random_general(&g, 2, seed, 10);
        let text = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(serde_json::to_string(&serde_json::from_str::<NetworkDynamics>(&text).unwrap()).unwrap(), text);
        let delays = netident_core::assign_path_independent_delays(&g, 2);
        let text = serde_json::to_string(&delays).unwrap();
        prop_assert_eq!(serde_json::from_str::<DelayAssignment>(&text).unwrap(), delays);
    }

    #[test]
    fn network_matrices_are_triangular_inverses(n in 2usize..9, seed in any::<u64>(), k in 1u32..4) {
        let g = random_dag(n, 0.4, seed).validate().unwrap();
        let (d, u) = sample_network(&g, k, seed, 0, 10);
        let j = nonlinear_network_matrix(&g, &d, &u);
        let t = transfer_from_jacobian(&g, &j);
        let id = RationalMatrix::identity(n);
        prop_assert_eq!(id.sub(&j).mul(&t), id.clone());
        prop_assert!(is_strictly_triangular(&g, &j));
        // T minus the identity is strictly triangular: unit diagonal, zero above
        prop_assert!(is_strictly_triangular(&g, &t.sub(&id)));
    }

    #[test]
    fn linear_network_matrix_ignores_the_operating_point(n in 2usize..9, seed in any::<u64>()) {
        let g = random_dag(n, 0.4, seed).validate().unwrap();
        let (d, u) = sample_network(&g, 1, seed, 0, 10);
        let other: BTreeMap<_, _> = u.keys().map(|&i| (i, Rational::from_integer((i as i64 * 7 - 3).into()))).collect();
        prop_assert_eq!(nonlinear_network_matrix(&g, &d, &u), nonlinear_network_matrix(&g, &d, &other));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_rank_bounds_disjoint_paths(n in 2usize..9, seed in any::<u64>(), k in 1u32..4) {
        let g = random_dag(n, 0.35, seed).validate().unwrap();
        let mut rng = rng_from_seed(seed ^ 0x5a5a);
        let (a, b) = (random_subset(n, &mut rng), random_subset(n, &mut rng));
        let probe = generic_rank(&g, k, &a, &b, 20, seed, 10).unwrap();
        prop_assert!(probe.generic_rank >= max_vertex_disjoint(&g, &a, &b).unwrap().len());
        prop_assert!(probe.inverse_checked);
    }
}
