//! Random graphs and brute-force oracles shared by the integration tests.
//! The oracles read only the raw edge list.

#![allow(dead_code)]

use std::collections::BTreeSet;

use netident_core::rational::rng_from_seed;
use netident_core::{Digraph, NodeId, ValidatedDigraph};
use rand::seq::SliceRandom;
use rand::Rng;

/// Weakly connected DAG on `n` nodes with shuffled labels: a random spanning
/// tree along a hidden order, plus extra forward edges with probability `p`.
pub fn random_dag(n: usize, p: f64, seed: u64) -> Digraph {
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<NodeId> = (1..=n).collect();
    order.shuffle(&mut rng);
    let mut arrows = BTreeSet::new();
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        arrows.insert((order[parent], order[k]));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                arrows.insert((order[a], order[b]));
            }
        }
    }
    let excited: Vec<NodeId> = (1..=n).filter(|_| rng.gen_bool(0.4)).collect();
    Digraph::from_arrows(n, arrows, excited)
}

/// Random labeled tree with random edge orientations.
pub fn random_tree(n: usize, seed: u64) -> Digraph {
    let mut rng = rng_from_seed(seed);
    let mut arrows = Vec::new();
    for v in 2..=n {
        let u = rng.gen_range(1..v);
        arrows.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
    }
    let mut excited: BTreeSet<NodeId> = (1..=n).filter(|_| rng.gen_bool(0.3)).collect();
    if rng.gen_bool(0.5) {
        excited.extend(arrows.iter().map(|&(f, _)| f).filter(|f| !arrows.iter().any(|&(_, t)| t == *f)));
    }
    Digraph::from_arrows(n, arrows, excited)
}

pub fn random_subset(n: usize, rng: &mut impl Rng) -> BTreeSet<NodeId> {
    loop {
        let s: BTreeSet<NodeId> = (1..=n).filter(|_| rng.gen_bool(0.35)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// Successor lists from the raw edges, indexed by node.
pub fn successors(g: &ValidatedDigraph) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new(); g.n() + 1];
    for e in &g.graph().edges {
        out[e.from].push(e.to);
    }
    out
}

pub fn raw_sources(g: &ValidatedDigraph) -> BTreeSet<NodeId> {
    let heads: BTreeSet<NodeId> = g.graph().edges.iter().map(|e| e.to).collect();
    (1..=g.n()).filter(|v| !heads.contains(v)).collect()
}

pub fn raw_sinks(g: &ValidatedDigraph) -> BTreeSet<NodeId> {
    let tails: BTreeSet<NodeId> = g.graph().edges.iter().map(|e| e.from).collect();
    (1..=g.n()).filter(|v| !tails.contains(v)).collect()
}

/// Every directed path from `from` to `to`, as node lists.
pub fn all_paths(succ: &[Vec<NodeId>], from: NodeId, to: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(succ: &[Vec<NodeId>], path: &mut Vec<NodeId>, to: NodeId, out: &mut Vec<Vec<NodeId>>) {
        let last = *path.last().unwrap();
        if last == to {
            out.push(path.clone());
            return;
        }
        for &w in &succ[last] {
            path.push(w);
            walk(succ, path, to, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(succ, &mut vec![from], to, &mut out);
    out
}

/// Maximum number of vertex-disjoint `A -> B` paths by exhaustive search:
/// at most one path per start node, tried in every combination.
pub fn brute_max_disjoint(g: &ValidatedDigraph, a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> usize {
    let succ = successors(g);
    let starts: Vec<Vec<Vec<NodeId>>> = a
        .iter()
        .map(|&s| b.iter().flat_map(|&t| all_paths(&succ, s, t)).collect())
        .collect();
    fn pack(starts: &[Vec<Vec<NodeId>>], k: usize, used: &mut BTreeSet<NodeId>, count: usize, best: &mut usize) {
        if count + (starts.len() - k) <= *best {
            return;
        }
        if k == starts.len() {
            *best = count;
            return;
        }
        for p in &starts[k] {
            if p.iter().all(|v| !used.contains(v)) {
                used.extend(p.iter().copied());
                pack(starts, k + 1, used, count + 1, best);
                for v in p {
                    used.remove(v);
                }
            }
        }
        pack(starts, k + 1, used, count, best);
    }
    let mut best = 0;
    pack(&starts, 0, &mut BTreeSet::new(), 0, &mut best);
    best
}

/// Whether some `A -> B` path avoids `removed`.
pub fn connected_avoiding(
    g: &ValidatedDigraph,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    removed: &BTreeSet<NodeId>,
) -> bool {
    let succ = successors(g);
    let mut seen: BTreeSet<NodeId> = a.difference(removed).copied().collect();
    let mut stack: Vec<NodeId> = seen.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if b.contains(&v) {
            return true;
        }
        for &w in &succ[v] {
            if !removed.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    false
}

/// Size of the smallest node set meeting every `A -> B` path.
pub fn brute_min_cut(g: &ValidatedDigraph, a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> usize {
    let n = g.n();
    (0u32..1 << n)
        .filter(|mask| {
            let removed: BTreeSet<NodeId> = (1..=n).filter(|v| mask & (1 << (v - 1)) != 0).collect();
            !connected_avoiding(g, a, b, &removed)
        })
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

/// `C(n, k)` in `u128`.
pub fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Smallest `M` with `C(M+n, n) > C(NM+m, m)`.
pub fn dimension_count_bound(n: u128, m: u128, inner: u128) -> u32 {
    (1u128..).find(|&big| binomial(big + n, n) > binomial(inner * big + m, m)).unwrap() as u32
}
