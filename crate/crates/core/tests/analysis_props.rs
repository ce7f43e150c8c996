mod common;

use std::collections::BTreeSet;

use netident_core::certificates::{node_nonident_certificate, verify, CertificateError, Evidence, VerifyOptions};
use netident_core::delays::settle_times;
use netident_core::dynamics::NetworkDynamics;
use netident_core::identifiability::{analyze, excitation_suggestion, FunctionClass, Verdict};
use netident_core::implicit::{dimension_bound, find_relation, implicitization_certificate};
use netident_core::poly::{exponents_up_to, random_polynomial};
use netident_core::rational::{from_i64, random_nonzero, rng_from_seed};
use netident_core::simulator::{
    default_horizon, measured_function, simulate, xi_jacobian, DegreeGuard, InputSchedule, JacobianMode, XiMap,
};
use netident_core::{assign_path_independent_delays, max_vertex_disjoint, Polynomial, Rational, ValidatedDigraph};
use proptest::prelude::*;

use common::*;

fn options() -> VerifyOptions {
    VerifyOptions {
        replays: 12,
        ..VerifyOptions::default()
    }
}

fn graph(max_n: usize) -> impl Strategy<Value = ValidatedDigraph> {
    (2..=max_n, any::<u64>()).prop_map(|(n, s)| random_dag(n, 0.35, s).validate().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polynomial_verdict_is_the_path_condition(g in graph(9)) {
        let report = analyze(&g, FunctionClass::Polynomial).unwrap();
        for i in g.nodes() {
            let r = report.node(i);
            let inputs: BTreeSet<_> = g.in_neighbors(i).iter().copied().collect();
            let excited = g.excited_ancestors(i);
            let full = inputs.is_empty()
                || (!excited.is_empty() && brute_max_disjoint_within(&g, &excited, &inputs, &g.ancestors(i)) == inputs.len());
            prop_assert_eq!(r.verdict == Verdict::GenericallyIdentifiable, full, "node {}", i);
            if let Some(w) = &r.witness {
                prop_assert!(w.check(&g).is_ok());
            }
            if r.verdict == Verdict::NotIdentifiable {
                let cut = r.deficiency.as_ref().unwrap();
                prop_assert!(cut.len() < inputs.len());
            }
        }
    }

    #[test]
    fn suggestions_pass_reanalysis(g in graph(9)) {
        let suggested = excitation_suggestion(&g);
        let g2 = g.with_excited(suggested).unwrap();
        prop_assert!(analyze(&g2, FunctionClass::Polynomial).unwrap().all_identifiable());
    }

    #[test]
    fn certificates_exist_exactly_for_failing_nodes(g in graph(7), seed in any::<u64>()) {
        let report = analyze(&g, FunctionClass::Polynomial).unwrap();
        let d = NetworkDynamics::random_general(&g, 1, seed, 10);
        for i in g.nodes() {
            match node_nonident_certificate(&g, &d, i, 4, options()) {
                Ok(cert) => {
                    prop_assert_ne!(report.node(i).verdict, Verdict::GenericallyIdentifiable);
                    prop_assert!(cert.verification.is_some());
                }
                Err(CertificateError::NotApplicable { .. }) => {
                    prop_assert_eq!(report.node(i).verdict, Verdict::GenericallyIdentifiable);
                }
                Err(e) => prop_assert!(false, "node {}: {}", i, e),
            }
        }
    }

    #[test]
    fn identifiable_nodes_admit_no_relation(g in graph(7), seed in any::<u64>()) {
        // with linear dynamics the in-neighbor outputs of an identifiable
        // node are independent linear forms, so no relation of any degree
        let report = analyze(&g, FunctionClass::Polynomial).unwrap();
        let d = NetworkDynamics::random_general(&g, 1, seed, 10);
        for i in g.nodes().filter(|&i| report.node(i).verdict == Verdict::GenericallyIdentifiable) {
            let xi = XiMap::new(&g, &d, i);
            if xi.components.is_empty() {
                continue;
            }
            let exps = exponents_up_to(xi.components.len(), 0, 3);
            prop_assert_eq!(find_relation(&xi.components, &exps[1..]), None, "node {}", i);
        }
    }

    #[test]
    fn implicitization_succeeds_at_the_bound(m in 1usize..3, extra in 1usize..3, inner in 1u32..3, seed in any::<u64>()) {
        let n = m + extra;
        let gens: Vec<Polynomial> = (0..n).map(|k| random_polynomial(m, inner, seed.wrapping_add(k as u64), 6)).collect();
        let actual = gens.iter().map(Polynomial::degree).max().unwrap();
        let bound = dimension_count_bound(n as u128, m as u128, u128::from(actual));
        prop_assert_eq!(dimension_bound(n, m, actual), bound);
        let found = implicitization_certificate(&gens, bound).unwrap();
        prop_assert!(found.delta.compose(&gens).unwrap().is_zero());
        // the kernel is a subspace
        let scaled = found.delta.scale(&random_nonzero(&mut rng_from_seed(seed), 20));
        prop_assert!(scaled.compose(&gens).unwrap().is_zero());
    }

    #[test]
    fn simulation_agrees_with_measured_functions(g in graph(7), seed in any::<u64>(), k in 1u32..3) {
        let d = NetworkDynamics::random_general(&g, 2, seed, 5);
        let delays = assign_path_independent_delays(&g, k);
        let horizon = default_horizon(&g, &delays) + 2;
        let schedule = InputSchedule::random(&g, horizon, seed, 5);
        let traj = simulate(&g, &d, &delays, &schedule).unwrap();
        let settle = settle_times(&g, &delays);
        for i in g.nodes() {
            let f = measured_function(&g, &d, &delays, i, DegreeGuard::default()).unwrap();
            prop_assert_eq!(f.variables.len(), g.excited_ancestors(i).len());
            for step in settle[i] as usize..=horizon {
                let expected = f.eval_at(&schedule, step) + schedule.value(i, step as i64 - 1);
                prop_assert_eq!(traj.output(i, step), &expected, "node {} step {}", i, step);
            }
        }
        prop_assert_eq!(simulate(&g, &d, &delays, &schedule).unwrap(), traj);
    }

    #[test]
    fn xi_rank_bounds_disjoint_paths(g in graph(8), seed in any::<u64>()) {
        let d = NetworkDynamics::random_general(&g, 2, seed, 10);
        for i in g.nodes() {
            let excited = g.excited_ancestors(i);
            let inputs: BTreeSet<_> = g.in_neighbors(i).iter().copied().collect();
            if excited.is_empty() || inputs.is_empty() {
                continue;
            }
            let paths = max_vertex_disjoint(&g, &excited, &inputs).unwrap().len();
            let mut rng = rng_from_seed(seed);
            let best = (0..6)
                .map(|_| {
                    let u: Vec<Rational> = excited.iter().map(|_| random_nonzero(&mut rng, 10)).collect();
                    xi_jacobian(&g, &d, i, &u, JacobianMode::Symbolic).rank
                })
                .max()
                .unwrap();
            prop_assert!(best >= paths, "node {}: rank {} < {}", i, best, paths);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verification_layers_agree_on_produced_certificates(seed in any::<u64>()) {
        let g = netident_core::fixtures::fig7().validate().unwrap();
        let d = NetworkDynamics::random_general(&g, 1, seed, 10);
        let cert = node_nonident_certificate(&g, &d, 7, 6, options()).unwrap();
        let Evidence::Implicitization { delta, .. } = &cert.evidence else { unreachable!() };
        let mut scaled = cert.clone();
        scaled.phi_tilde = &cert.phi + &delta.scale(&from_i64(-3));
        prop_assert!(verify(&g, &d, &scaled, options()).is_ok());
    }
}

/// Brute-force path count inside the induced subgraph on `within`.
fn brute_max_disjoint_within(
    g: &ValidatedDigraph,
    a: &BTreeSet<usize>,
    b: &BTreeSet<usize>,
    within: &BTreeSet<usize>,
) -> usize {
    let removed: Vec<usize> = g.nodes().filter(|v| !within.contains(v)).collect();
    let kept = netident_core::Digraph::from_arrows(
        g.n(),
        g.graph()
            .edges
            .iter()
            .filter(|e| !removed.contains(&e.from) && !removed.contains(&e.to))
            .map(|e| (e.from, e.to)),
        g.excited().iter().copied(),
    )
    .validate_with(netident_core::graph::ValidateOptions { allow_disconnected: true })
    .unwrap();
    brute_max_disjoint(&kept, a, b)
}
