//! Directed acyclic network graphs.
//!
//! Edges follow the node-function convention: the pair `(i, j)` means that node
//! `j` is an in-neighbor of node `i`, i.e. the arrow `j -> i`. Graph files use the
//! same `[i, j]` order. Node ids are 1-based.

use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node {node} is outside 1..={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: NodeId },
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("cycle detected: {}", format_cycle(.cycle))]
    CycleDetected { cycle: Vec<NodeId> },
    #[error("graph is not weakly connected ({components} components)")]
    NotWeaklyConnected { components: usize },
}

fn format_cycle(cycle: &[NodeId]) -> String {
    cycle
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Edge `from -> to`; serialized as `[to, from]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(NodeId, NodeId)", into = "(NodeId, NodeId)")]
pub struct Edge {
    pub to: NodeId,
    pub from: NodeId,
}

impl Edge {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Self { to, from }
    }
}

impl From<(NodeId, NodeId)> for Edge {
    fn from((to, from): (NodeId, NodeId)) -> Self {
        Self { to, from }
    }
}

impl From<Edge> for (NodeId, NodeId) {
    fn from(e: Edge) -> Self {
        (e.to, e.from)
    }
}

/// Raw network description: topology plus excited and measured node sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub excited: BTreeSet<NodeId>,
    pub measured: BTreeSet<NodeId>,
}

impl Digraph {
    /// Builds a graph from `(from, to)` arrows; every node is measured.
    pub fn from_arrows<I, E>(n: usize, arrows: I, excited: E) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
        E: IntoIterator<Item = NodeId>,
    {
        Self {
            n,
            edges: arrows.into_iter().map(|(f, t)| Edge::new(f, t)).collect(),
            excited: excited.into_iter().collect(),
            measured: (1..=n).collect(),
        }
    }

    pub fn validate(&self) -> Result<ValidatedDigraph, GraphError> {
        ValidatedDigraph::new(self.clone(), ValidateOptions::default())
    }

    pub fn validate_with(&self, options: ValidateOptions) -> Result<ValidatedDigraph, GraphError> {
        ValidatedDigraph::new(self.clone(), options)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Skip the weak-connectivity requirement; components are then analyzed
    /// independently since no path crosses between them.
    pub allow_disconnected: bool,
}

/// A checked DAG with cached neighborhoods and a deterministic topological order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedDigraph {
    graph: Digraph,
    in_nbrs: Vec<Vec<NodeId>>,
    out_nbrs: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    position: Vec<usize>,
}

impl ValidatedDigraph {
    fn new(mut graph: Digraph, options: ValidateOptions) -> Result<Self, GraphError> {
        let n = graph.n;
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let check = |node: NodeId| {
            if node == 0 || node > n {
                Err(GraphError::NodeOutOfRange { node, n })
            } else {
                Ok(())
            }
        };
        let mut in_nbrs = vec![Vec::new(); n];
        let mut out_nbrs = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for e in &graph.edges {
            check(e.from)?;
            check(e.to)?;
            if e.from == e.to {
                return Err(GraphError::SelfLoop { node: e.from });
            }
            if !seen.insert((e.from, e.to)) {
                return Err(GraphError::DuplicateEdge {
                    from: e.from,
                    to: e.to,
                });
            }
            in_nbrs[e.to - 1].push(e.from);
            out_nbrs[e.from - 1].push(e.to);
        }
        for v in graph.excited.iter().chain(&graph.measured) {
            check(*v)?;
        }
        in_nbrs.iter_mut().for_each(|v| v.sort_unstable());
        out_nbrs.iter_mut().for_each(|v| v.sort_unstable());
        graph.edges.sort();

        if let Some(cycle) = find_cycle(&out_nbrs) {
            return Err(GraphError::CycleDetected { cycle });
        }
        if !options.allow_disconnected {
            let components = weak_components(&in_nbrs, &out_nbrs);
            if components > 1 {
                return Err(GraphError::NotWeaklyConnected { components });
            }
        }
        let topo = kahn_smallest_first(&in_nbrs, &out_nbrs);
        let mut position = vec![0; n];
        for (p, &v) in topo.iter().enumerate() {
            position[v - 1] = p + 1;
        }
        Ok(Self {
            graph,
            in_nbrs,
            out_nbrs,
            topo,
            position,
        })
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.graph.n
    }

    /// Edges in canonical `(to, from)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.graph.edges
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.in_nbrs[to - 1].binary_search(&from).is_ok()
    }

    /// In-neighbors `N_i`, sorted by id.
    pub fn in_neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.in_nbrs[i - 1]
    }

    pub fn out_neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.out_nbrs[i - 1]
    }

    pub fn excited(&self) -> &BTreeSet<NodeId> {
        &self.graph.excited
    }

    pub fn measured(&self) -> &BTreeSet<NodeId> {
        &self.graph.measured
    }

    pub fn is_excited(&self, i: NodeId) -> bool {
        self.graph.excited.contains(&i)
    }

    pub fn is_full_measurement(&self) -> bool {
        self.graph.measured.len() == self.n()
    }

    /// Same topology with a different excitation set.
    pub fn with_excited(&self, excited: BTreeSet<NodeId>) -> Result<Self, GraphError> {
        if let Some(&bad) = excited.iter().find(|&&v| v == 0 || v > self.n()) {
            return Err(GraphError::NodeOutOfRange {
                node: bad,
                n: self.n(),
            });
        }
        let mut out = self.clone();
        out.graph.excited = excited;
        Ok(out)
    }

    /// Topological order, ties broken by smallest node id.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// 1-based position of `i` in [`Self::topological_order`].
    pub fn position(&self, i: NodeId) -> usize {
        self.position[i - 1]
    }

    pub fn is_source(&self, i: NodeId) -> bool {
        self.in_nbrs[i - 1].is_empty()
    }

    pub fn is_sink(&self, i: NodeId) -> bool {
        self.out_nbrs[i - 1].is_empty()
    }

    pub fn sources_sinks(&self) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
        let sources = self.nodes().filter(|&v| self.is_source(v)).collect();
        let sinks = self.nodes().filter(|&v| self.is_sink(v)).collect();
        (sources, sinks)
    }

    /// Strict ancestors of `i` (nodes with a nonempty path to `i`).
    pub fn ancestors(&self, i: NodeId) -> BTreeSet<NodeId> {
        self.walk(i, &self.in_nbrs)
    }

    /// Strict descendants of `i`.
    pub fn descendants(&self, i: NodeId) -> BTreeSet<NodeId> {
        self.walk(i, &self.out_nbrs)
    }

    fn walk(&self, start: NodeId, adjacency: &[Vec<NodeId>]) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v - 1] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Whether a directed path from `from` to `to` exists; a node reaches itself.
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        from == to || self.ancestors(to).contains(&from)
    }

    /// Excited nodes with a directed path to `i`; `i` itself is included through
    /// the zero-length path when it is excited.
    pub fn reachable_excited(&self, i: NodeId) -> BTreeSet<NodeId> {
        let mut set: BTreeSet<NodeId> = self
            .ancestors(i)
            .into_iter()
            .filter(|v| self.is_excited(*v))
            .collect();
        if self.is_excited(i) {
            set.insert(i);
        }
        set
    }

    /// Excited strict ancestors of `i`: the excitation signals `F_i` depends on.
    pub fn excited_ancestors(&self, i: NodeId) -> BTreeSet<NodeId> {
        self.ancestors(i)
            .into_iter()
            .filter(|v| self.is_excited(*v))
            .collect()
    }

    /// Whether the undirected skeleton is a tree.
    pub fn is_tree(&self) -> bool {
        self.graph.edges.len() + 1 == self.n()
            && weak_components(&self.in_nbrs, &self.out_nbrs) == 1
    }
}

fn find_cycle(out_nbrs: &[Vec<NodeId>]) -> Option<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = out_nbrs.len();
    let mut mark = vec![Mark::New; n];
    for root in 1..=n {
        if mark[root - 1] != Mark::New {
            continue;
        }
        // (node, next child index)
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        mark[root - 1] = Mark::Active;
        while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
            if let Some(&w) = out_nbrs[v - 1].get(*idx) {
                *idx += 1;
                match mark[w - 1] {
                    Mark::New => {
                        mark[w - 1] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                        let mut cycle: Vec<NodeId> = stack[start..].iter().map(|&(u, _)| u).collect();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v - 1] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

fn weak_components(in_nbrs: &[Vec<NodeId>], out_nbrs: &[Vec<NodeId>]) -> usize {
    let n = in_nbrs.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    for root in 0..n {
        if seen[root] {
            continue;
        }
        components += 1;
        seen[root] = true;
        let mut queue = VecDeque::from([root + 1]);
        while let Some(v) = queue.pop_front() {
            for &w in in_nbrs[v - 1].iter().chain(&out_nbrs[v - 1]) {
                if !seen[w - 1] {
                    seen[w - 1] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    components
}

fn kahn_smallest_first(in_nbrs: &[Vec<NodeId>], out_nbrs: &[Vec<NodeId>]) -> Vec<NodeId> {
    let mut indegree: Vec<usize> = in_nbrs.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<NodeId>> = (1..=in_nbrs.len())
        .filter(|&v| indegree[v - 1] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(in_nbrs.len());
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &w in &out_nbrs[v - 1] {
            indegree[w - 1] -= 1;
            if indegree[w - 1] == 0 {
                ready.push(Reverse(w));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn single_node_is_valid() {
        let g = Digraph::from_arrows(1, [], []).validate().unwrap();
        let (sources, sinks) = g.sources_sinks();
        assert_eq!(sources, BTreeSet::from([1]));
        assert_eq!(sinks, BTreeSet::from([1]));
        assert_eq!(g.topological_order(), &[1]);
    }

    #[test]
    fn two_cycle_is_rejected_with_the_cycle() {
        let err = Digraph::from_arrows(2, [(1, 2), (2, 1)], [])
            .validate()
            .unwrap_err();
        assert_eq!(err, GraphError::CycleDetected { cycle: vec![1, 2, 1] });
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            Digraph::from_arrows(2, [(1, 1)], []).validate().unwrap_err(),
            GraphError::SelfLoop { node: 1 }
        );
        assert_eq!(
            Digraph::from_arrows(2, [(1, 2), (1, 2)], [])
                .validate()
                .unwrap_err(),
            GraphError::DuplicateEdge { from: 1, to: 2 }
        );
        assert_eq!(
            Digraph::from_arrows(3, [(1, 2)], []).validate().unwrap_err(),
            GraphError::NotWeaklyConnected { components: 2 }
        );
        assert!(Digraph::from_arrows(3, [(1, 2)], [])
            .validate_with(ValidateOptions {
                allow_disconnected: true
            })
            .is_ok());
        assert_eq!(
            Digraph::from_arrows(2, [(1, 3)], []).validate().unwrap_err(),
            GraphError::NodeOutOfRange { node: 3, n: 2 }
        );
        assert_eq!(
            Digraph::from_arrows(0, [], []).validate().unwrap_err(),
            GraphError::EmptyGraph
        );
    }

    #[test]
    fn fig5_orders_and_neighborhoods() {
        let g = fixtures::fig5().validate().unwrap();
        assert_eq!(g.topological_order(), &[1, 2, 3, 4, 5]);
        assert_eq!(g.in_neighbors(5), &[3, 4]);
        let (sources, sinks) = g.sources_sinks();
        assert_eq!(sources, BTreeSet::from([1, 2]));
        assert_eq!(sinks, BTreeSet::from([5]));
        assert_eq!(g.reachable_excited(5), BTreeSet::from([1, 2]));
    }

    #[test]
    fn fig4_identity_order_and_chain_order() {
        let g = fixtures::fig4().validate().unwrap();
        assert_eq!(g.topological_order(), &[1, 2, 3, 4, 5, 6, 7, 8]);
        let chain = Digraph::from_arrows(3, [(1, 2), (2, 3)], [1]).validate().unwrap();
        assert_eq!(chain.topological_order(), &[1, 2, 3]);
    }

    #[test]
    fn fig7_sources_sinks_and_reachability() {
        let g = fixtures::fig7().validate().unwrap();
        let (sources, sinks) = g.sources_sinks();
        assert_eq!(sources, BTreeSet::from([1, 2]));
        assert_eq!(sinks, BTreeSet::from([7]));
        assert_eq!(g.reachable_excited(7), BTreeSet::from([1, 2]));
        let quiet = g.with_excited(BTreeSet::new()).unwrap();
        assert!(quiet.nodes().all(|v| quiet.reachable_excited(v).is_empty()));
    }

    #[test]
    fn excited_node_reaches_itself() {
        let g = Digraph::from_arrows(2, [(1, 2)], [1, 2]).validate().unwrap();
        assert_eq!(g.reachable_excited(2), BTreeSet::from([1, 2]));
        assert_eq!(g.excited_ancestors(2), BTreeSet::from([1]));
        assert!(g.reaches(2, 2));
        assert!(!g.reaches(2, 1));
    }

    #[test]
    fn json_uses_target_source_pairs() {
        let text = r#"{"n":2,"edges":[[2,1]],"excited":[1],"measured":[1,2]}"#;
        let g: Digraph = serde_json::from_str(text).unwrap();
        let v = g.validate().unwrap();
        assert_eq!(v.in_neighbors(2), &[1]);
        assert_eq!(serde_json::to_string(&g).unwrap(), text);
    }

    #[test]
    fn tree_detection() {
        let star = Digraph::from_arrows(5, [(1, 2), (1, 3), (1, 4), (1, 5)], [1])
            .validate()
            .unwrap();
        assert!(star.is_tree());
        assert!(!fixtures::fig5().validate().unwrap().is_tree());
    }
}
