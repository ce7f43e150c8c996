//! Edge delays, the path-independent family, and per-pair delay verification.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, ValidatedDigraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DelayError {
    #[error("edge {from} -> {to} has no delay")]
    Missing { to: NodeId, from: NodeId },
    #[error("delay given for {from} -> {to}, which is not an edge")]
    NotAnEdge { to: NodeId, from: NodeId },
    #[error("delay on {from} -> {to} must be at least 1")]
    NonPositive { to: NodeId, from: NodeId },
}

/// Delay `m_{i,j}` per edge `j -> i`, keyed by `(i, j)`.
///
/// Serialized as `{"i,j": m}` in numeric key order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DelayAssignment {
    delays: BTreeMap<(NodeId, NodeId), u32>,
}

impl DelayAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same delay on every edge.
    pub fn uniform(graph: &ValidatedDigraph, m: u32) -> Self {
        Self {
            delays: graph.edges().iter().map(|e| ((e.to, e.from), m)).collect(),
        }
    }

    pub fn set(&mut self, to: NodeId, from: NodeId, m: u32) {
        self.delays.insert((to, from), m);
    }

    /// Delay on the edge `from -> to`.
    pub fn get(&self, to: NodeId, from: NodeId) -> Option<u32> {
        self.delays.get(&(to, from)).copied()
    }

    /// Entries as `((i, j), m)`.
    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), u32)> + '_ {
        self.delays.iter().map(|(&k, &m)| (k, m))
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Every edge has a delay of at least 1 and no delay sits on a non-edge.
    pub fn check(&self, graph: &ValidatedDigraph) -> Result<(), DelayError> {
        for (&(to, from), &m) in &self.delays {
            if !graph.has_edge(from, to) {
                return Err(DelayError::NotAnEdge { to, from });
            }
            if m == 0 {
                return Err(DelayError::NonPositive { to, from });
            }
        }
        for e in graph.edges() {
            if !self.delays.contains_key(&(e.to, e.from)) {
                return Err(DelayError::Missing {
                    to: e.to,
                    from: e.from,
                });
            }
        }
        Ok(())
    }

    /// Edge delay; panics on a non-edge, so call after [`check`](Self::check).
    pub(crate) fn edge(&self, to: NodeId, from: NodeId) -> u64 {
        u64::from(self.delays[&(to, from)])
    }
}

impl Serialize for DelayAssignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.delays.len()))?;
        for ((to, from), m) in &self.delays {
            map.serialize_entry(&format!("{to},{from}"), m)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DelayAssignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DelayVisitor;

        impl<'de> Visitor<'de> for DelayVisitor {
            type Value = DelayAssignment;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from \"i,j\" to a positive integer delay")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = DelayAssignment::new();
                while let Some((key, m)) = access.next_entry::<String, u32>()? {
                    let parsed = key.split_once(',').and_then(|(i, j)| {
                        Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
                    });
                    let (to, from) = parsed.ok_or_else(|| {
                        de::Error::custom(format!("delay key {key:?} is not of the form \"i,j\""))
                    })?;
                    if out.delays.insert((to, from), m).is_some() {
                        return Err(de::Error::custom(format!("duplicate delay key {key:?}")));
                    }
                }
                Ok(out)
            }
        }

        deserializer.deserialize_map(DelayVisitor)
    }
}

/// `m_{p,q} = k * (pos(p) - pos(q))` over the deterministic topological order.
///
/// Any path `q -> p` then has total delay `k * (pos(p) - pos(q))`, whatever
/// route it takes.
pub fn assign_path_independent_delays(graph: &ValidatedDigraph, k: u32) -> DelayAssignment {
    let k = k.max(1);
    let mut out = DelayAssignment::new();
    for e in graph.edges() {
        let span = graph.position(e.to) - graph.position(e.from);
        out.set(e.to, e.from, k * span as u32);
    }
    out
}

/// Outcome of comparing all path delays from one node to another.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairDelay {
    /// All paths agree; `t` is the total path delay plus one.
    Uniform { t: u64 },
    /// Two paths with different totals.
    Conflict {
        shortest: Vec<NodeId>,
        shortest_total: u64,
        longest: Vec<NodeId>,
        longest_total: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDelayEntry {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(flatten)]
    pub result: PairDelay,
}

/// Every ordered pair `(j, i)` with a nontrivial path `j -> i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayTable {
    pub pairs: Vec<PairDelayEntry>,
}

impl DelayTable {
    pub fn is_path_independent(&self) -> bool {
        self.conflicts().next().is_none()
    }

    pub fn conflicts(&self) -> impl Iterator<Item = &PairDelayEntry> {
        self.pairs
            .iter()
            .filter(|p| matches!(p.result, PairDelay::Conflict { .. }))
    }

    /// `T_{i,j}` when every `j -> i` path has the same delay.
    pub fn t(&self, to: NodeId, from: NodeId) -> Option<u64> {
        self.pairs
            .iter()
            .find(|p| p.from == from && p.to == to)
            .and_then(|p| match p.result {
                PairDelay::Uniform { t } => Some(t),
                PairDelay::Conflict { .. } => None,
            })
    }
}

/// Shortest and longest total delay from `source` to every node, with the
/// predecessor used by each.
struct Extremes {
    min: Vec<Option<(u64, NodeId)>>,
    max: Vec<Option<(u64, NodeId)>>,
}

fn extremes_from(graph: &ValidatedDigraph, delays: &DelayAssignment, source: NodeId) -> Extremes {
    let n = graph.n();
    let mut min: Vec<Option<(u64, NodeId)>> = vec![None; n + 1];
    let mut max: Vec<Option<(u64, NodeId)>> = vec![None; n + 1];
    min[source] = Some((0, 0));
    max[source] = Some((0, 0));
    for &v in graph.topological_order() {
        if v == source {
            continue;
        }
        for &w in graph.in_neighbors(v) {
            let m = delays.edge(v, w);
            if let Some((d, _)) = min[w] {
                if min[v].map_or(true, |(cur, _)| d + m < cur) {
                    min[v] = Some((d + m, w));
                }
            }
            if let Some((d, _)) = max[w] {
                if max[v].map_or(true, |(cur, _)| d + m > cur) {
                    max[v] = Some((d + m, w));
                }
            }
        }
    }
    Extremes { min, max }
}

fn trace(table: &[Option<(u64, NodeId)>], source: NodeId, target: NodeId) -> Vec<NodeId> {
    let mut path = vec![target];
    let mut v = target;
    while v != source {
        v = table[v].expect("reachable").1;
        path.push(v);
    }
    path.reverse();
    path
}

/// Compares shortest and longest path delays for every reachable pair; equal
/// extremes mean all paths agree.
///
/// # Panics
/// If `delays` does not cover every edge; see [`DelayAssignment::check`].
pub fn verify_path_independence(graph: &ValidatedDigraph, delays: &DelayAssignment) -> DelayTable {
    let mut pairs = Vec::new();
    for from in graph.nodes() {
        let ex = extremes_from(graph, delays, from);
        for to in graph.nodes().filter(|&v| v != from) {
            let (Some((lo, _)), Some((hi, _))) = (ex.min[to], ex.max[to]) else {
                continue;
            };
            let result = if lo == hi {
                PairDelay::Uniform { t: lo + 1 }
            } else {
                PairDelay::Conflict {
                    shortest: trace(&ex.min, from, to),
                    shortest_total: lo,
                    longest: trace(&ex.max, from, to),
                    longest_total: hi,
                }
            };
            pairs.push(PairDelayEntry { from, to, result });
        }
    }
    DelayTable { pairs }
}

/// Range `[min, max]` of `1 + path delay` over all paths `j -> i`, for each
/// excited ancestor `j` of `i`. Under path-independent delays both ends agree.
pub fn delay_windows(
    graph: &ValidatedDigraph,
    delays: &DelayAssignment,
    i: NodeId,
) -> BTreeMap<NodeId, (u64, u64)> {
    graph
        .excited_ancestors(i)
        .into_iter()
        .map(|j| {
            let ex = extremes_from(graph, delays, j);
            let lo = ex.min[i].expect("ancestor").0 + 1;
            let hi = ex.max[i].expect("ancestor").0 + 1;
            (j, (lo, hi))
        })
        .collect()
}

/// Longest `1 + path delay` into each node from any node (0 for sources):
/// from this step on, a node's output no longer sees the zero pre-history.
pub fn settle_times(graph: &ValidatedDigraph, delays: &DelayAssignment) -> Vec<u64> {
    let mut settle = vec![0u64; graph.n() + 1];
    for &v in graph.topological_order() {
        for &w in graph.in_neighbors(v) {
            settle[v] = settle[v].max(settle[w] + delays.edge(v, w));
        }
    }
    settle
}
