mod common;

use std::collections::BTreeSet;

use netident_core::delays::PairDelay;
use netident_core::paths::brute_force_disjoint;
use netident_core::rational::rng_from_seed;
use netident_core::{
    assign_path_independent_delays, max_vertex_disjoint, min_disconnecting_set, verify_path_independence, Digraph,
    NodeId,
};
use proptest::prelude::*;

use common::*;

fn dag(max_n: usize) -> impl Strategy<Value = Digraph> {
    (2..=max_n, any::<u64>(), 0.0..0.6f64).prop_map(|(n, seed, p)| random_dag(n, p, seed))
}

fn dag_with_sets(max_n: usize) -> impl Strategy<Value = (Digraph, BTreeSet<NodeId>, BTreeSet<NodeId>)> {
    (dag(max_n), any::<u64>()).prop_map(|(g, s)| {
        let mut rng = rng_from_seed(s);
        let a = random_subset(g.n, &mut rng);
        let b = random_subset(g.n, &mut rng);
        (g, a, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn topological_order_respects_edges(g in dag(10)) {
        let g = g.validate().unwrap();
        let order = g.topological_order();
        let as_set: BTreeSet<NodeId> = order.iter().copied().collect();
        prop_assert_eq!(as_set, (1..=g.n()).collect::<BTreeSet<_>>());
        for e in &g.graph().edges {
            prop_assert!(g.position(e.from) < g.position(e.to));
        }
    }

    #[test]
    fn assigned_delays_never_conflict(g in dag(10), k in 1u32..4) {
        let g = g.validate().unwrap();
        let d = assign_path_independent_delays(&g, k);
        prop_assert!(verify_path_independence(&g, &d).is_path_independent());
    }

    #[test]
    fn uniform_entries_match_extreme_paths(g in dag(8), seed in any::<u64>()) {
        let g = g.validate().unwrap();
        // arbitrary delays, so conflicts are possible
        let mut d = assign_path_independent_delays(&g, 1);
        let mut rng = rng_from_seed(seed);
        for e in &g.graph().edges {
            d.set(e.to, e.from, rand::Rng::gen_range(&mut rng, 1..4));
        }
        let succ = successors(&g);
        for entry in verify_path_independence(&g, &d).pairs {
            let totals: Vec<u64> = all_paths(&succ, entry.from, entry.to)
                .iter()
                .map(|p| p.windows(2).map(|w| u64::from(d.get(w[1], w[0]).unwrap())).sum())
                .collect();
            let (lo, hi) = (*totals.iter().min().unwrap(), *totals.iter().max().unwrap());
            match entry.result {
                PairDelay::Uniform { t } => {
                    prop_assert_eq!(lo, hi);
                    prop_assert_eq!(t, lo + 1);
                }
                PairDelay::Conflict { shortest_total, longest_total, .. } => {
                    prop_assert_eq!((shortest_total, longest_total), (lo, hi));
                    prop_assert!(lo < hi);
                }
            }
        }
    }

    #[test]
    fn reachable_excited_is_monotone(g in dag(9), extra in 1usize..10) {
        let g = g.validate().unwrap();
        let extra = extra.min(g.n());
        let mut more = g.excited().clone();
        more.insert(extra);
        let bigger = g.with_excited(more).unwrap();
        for i in g.nodes() {
            let r = g.reachable_excited(i);
            prop_assert!(r.is_subset(g.excited()));
            prop_assert!(r.is_subset(&bigger.reachable_excited(i)));
        }
    }

    #[test]
    fn menger_duality_against_brute_force((g, a, b) in dag_with_sets(8)) {
        let g = g.validate().unwrap();
        let family = max_vertex_disjoint(&g, &a, &b).unwrap();
        let cut = min_disconnecting_set(&g, &a, &b).unwrap();
        prop_assert!(family.check(&g).is_ok());
        prop_assert!(!connected_avoiding(&g, &a, &b, &cut.nodes));
        prop_assert!(cut.separates(&g));
        let brute = brute_max_disjoint(&g, &a, &b);
        prop_assert_eq!(family.len(), brute);
        prop_assert_eq!(cut.len(), brute_min_cut(&g, &a, &b));
        prop_assert_eq!(brute_force_disjoint(&g, &a, &b).unwrap(), brute);
    }

    #[test]
    fn adding_edges_or_sources_never_lowers_the_count((g, a, b) in dag_with_sets(8), pick in any::<u64>()) {
        let base = g.validate().unwrap();
        let count = max_vertex_disjoint(&base, &a, &b).unwrap().len();

        let mut more_a = a.clone();
        more_a.insert(1 + (pick as usize % g.n));
        prop_assert!(max_vertex_disjoint(&base, &more_a, &b).unwrap().len() >= count);

        // a forward edge along the topological order keeps the graph acyclic
        let order = base.topological_order().to_vec();
        let x = pick as usize % g.n;
        let y = (pick as usize / g.n) % g.n;
        let (from, to) = (order[x.min(y)], order[x.max(y)]);
        if from != to && !base.has_edge(from, to) {
            let mut bigger = g.clone();
            bigger.edges.push(netident_core::graph::Edge::new(from, to));
            let bigger = bigger.validate().unwrap();
            prop_assert!(max_vertex_disjoint(&bigger, &a, &b).unwrap().len() >= count);
        }
    }
}
