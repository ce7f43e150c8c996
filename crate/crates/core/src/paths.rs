//! Maximum vertex-disjoint path families and minimum disconnecting sets.
//!
//! Both come out of one unit-capacity max-flow on the node-split graph: every
//! node `v` becomes `v_in -> v_out` with capacity 1, so no two paths share a
//! vertex, endpoints included. A node in both `A` and `B` can carry the
//! length-0 path `[v]`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, ValidatedDigraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("brute force limited to 12 nodes, graph has {n}")]
    TooLarge { n: usize },
    #[error("node {node} is outside 1..={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFamily {
    pub sources: BTreeSet<NodeId>,
    pub targets: BTreeSet<NodeId>,
    pub paths: Vec<Vec<NodeId>>,
}

impl PathFamily {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Checks the family against the graph: endpoints in the right sets, every
    /// step an edge, no vertex used twice.
    pub fn check(&self, graph: &ValidatedDigraph) -> Result<(), String> {
        let mut used = BTreeSet::new();
        for path in &self.paths {
            let (first, last) = match (path.first(), path.last()) {
                (Some(f), Some(l)) => (*f, *l),
                _ => return Err("empty path".into()),
            };
            if !self.sources.contains(&first) {
                return Err(format!("path {path:?} does not start in the source set"));
            }
            if !self.targets.contains(&last) {
                return Err(format!("path {path:?} does not end in the target set"));
            }
            for step in path.windows(2) {
                if !graph.has_edge(step[0], step[1]) {
                    return Err(format!("{} -> {} is not an edge", step[0], step[1]));
                }
            }
            for &v in path {
                if !used.insert(v) {
                    return Err(format!("vertex {v} appears in two paths"));
                }
            }
        }
        Ok(())
    }

    /// Nodes in `sources ∩ targets` used as length-0 paths.
    pub fn zero_length_nodes(&self) -> Vec<NodeId> {
        self.paths
            .iter()
            .filter(|p| p.len() == 1)
            .map(|p| p[0])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisconnectingSet {
    pub sources: BTreeSet<NodeId>,
    pub targets: BTreeSet<NodeId>,
    pub nodes: BTreeSet<NodeId>,
}

impl DisconnectingSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether removing the set leaves no source-to-target path.
    pub fn separates(&self, graph: &ValidatedDigraph) -> bool {
        !has_path_avoiding(graph, &self.sources, &self.targets, &self.nodes)
    }
}

/// Whether some `A -> B` path avoids every node of `removed`.
pub fn has_path_avoiding(
    graph: &ValidatedDigraph,
    sources: &BTreeSet<NodeId>,
    targets: &BTreeSet<NodeId>,
    removed: &BTreeSet<NodeId>,
) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<NodeId> = sources
        .iter()
        .copied()
        .filter(|v| !removed.contains(v))
        .collect();
    seen.extend(stack.iter().copied());
    while let Some(v) = stack.pop() {
        if targets.contains(&v) {
            return true;
        }
        for &w in graph.out_neighbors(v) {
            if !removed.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    false
}

/// Paths and a matching cut from a single flow computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MengerPair {
    pub family: PathFamily,
    pub cut: DisconnectingSet,
}

pub fn max_vertex_disjoint(
    graph: &ValidatedDigraph,
    sources: &BTreeSet<NodeId>,
    targets: &BTreeSet<NodeId>,
) -> Result<PathFamily, PathError> {
    menger(graph, sources, targets, None).map(|m| m.family)
}

pub fn min_disconnecting_set(
    graph: &ValidatedDigraph,
    sources: &BTreeSet<NodeId>,
    targets: &BTreeSet<NodeId>,
) -> Result<DisconnectingSet, PathError> {
    menger(graph, sources, targets, None).map(|m| m.cut)
}

/// Max-flow/min-cut on the node-split graph, optionally restricted to the
/// induced subgraph on `allowed`.
pub fn menger(
    graph: &ValidatedDigraph,
    sources: &BTreeSet<NodeId>,
    targets: &BTreeSet<NodeId>,
    allowed: Option<&BTreeSet<NodeId>>,
) -> Result<MengerPair, PathError> {
    if sources.is_empty() {
        return Err(PathError::EmptySet("source"));
    }
    if targets.is_empty() {
        return Err(PathError::EmptySet("target"));
    }
    let n = graph.n();
    if let Some(&node) = sources
        .iter()
        .chain(targets)
        .find(|&&v| v == 0 || v > n)
    {
        return Err(PathError::NodeOutOfRange { node, n });
    }
    let ok = |v: NodeId| allowed.map_or(true, |set| set.contains(&v));

    let source = 0;
    let sink = 1;
    let node_in = |v: NodeId| 2 * v;
    let node_out = |v: NodeId| 2 * v + 1;
    let big = (n + 1) as i32;
    let mut net = FlowNetwork::new(2 * n + 2);
    for v in graph.nodes().filter(|&v| ok(v)) {
        if sources.contains(&v) {
            net.add_arc(source, node_in(v), big);
        }
        net.add_arc(node_in(v), node_out(v), 1);
        for &w in graph.out_neighbors(v) {
            if ok(w) {
                net.add_arc(node_out(v), node_in(w), big);
            }
        }
        if targets.contains(&v) {
            net.add_arc(node_out(v), sink, big);
        }
    }
    net.max_flow(source, sink);
    let reachable = net.residual_reachable(source);

    // decompose: each unit leaves S into some a_in and walks to T
    let mut paths = Vec::new();
    for &a in sources.iter().filter(|&&a| ok(a)) {
        if net.flow_between(source, node_in(a)) <= 0 {
            continue;
        }
        let mut path = vec![a];
        let mut at = node_out(a);
        loop {
            let next = net.take_flow_from(at).expect("flow conservation");
            if next == sink {
                break;
            }
            let v = next / 2;
            path.push(v);
            at = node_out(v);
            // consume the internal arc as well
            net.take_flow_from(node_in(v));
        }
        paths.push(path);
    }

    let nodes = graph
        .nodes()
        .filter(|&v| ok(v) && reachable[node_in(v)] && !reachable[node_out(v)])
        .collect();

    Ok(MengerPair {
        family: PathFamily {
            sources: sources.clone(),
            targets: targets.clone(),
            paths,
        },
        cut: DisconnectingSet {
            sources: sources.clone(),
            targets: targets.clone(),
            nodes,
        },
    })
}

struct Arc {
    to: usize,
    cap: i32,
    flow: i32,
    // index of the reverse arc in adj[to]
    rev: usize,
    forward: bool,
    taken: bool,
}

struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
}

impl FlowNetwork {
    fn new(size: usize) -> Self {
        Self {
            adj: (0..size).map(|_| Vec::new()).collect(),
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i32) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc {
            to,
            cap,
            flow: 0,
            rev: rev_from,
            forward: true,
            taken: false,
        });
        self.adj[to].push(Arc {
            to: from,
            cap: 0,
            flow: 0,
            rev: rev_to,
            forward: false,
            taken: false,
        });
    }

    /// Edmonds-Karp; arcs are scanned in insertion order, so the result is
    /// deterministic.
    fn max_flow(&mut self, s: usize, t: usize) -> i32 {
        let mut total = 0;
        loop {
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for (k, arc) in self.adj[v].iter().enumerate() {
                    if !seen[arc.to] && arc.cap - arc.flow > 0 {
                        seen[arc.to] = true;
                        parent[arc.to] = Some((v, k));
                        queue.push_back(arc.to);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck = i32::MAX;
            let mut v = t;
            while let Some((u, k)) = parent[v] {
                let arc = &self.adj[u][k];
                bottleneck = bottleneck.min(arc.cap - arc.flow);
                v = u;
            }
            let mut v = t;
            while let Some((u, k)) = parent[v] {
                self.adj[u][k].flow += bottleneck;
                let rev = self.adj[u][k].rev;
                self.adj[v][rev].flow -= bottleneck;
                v = u;
            }
            total += bottleneck;
        }
    }

    fn flow_between(&self, from: usize, to: usize) -> i32 {
        self.adj[from]
            .iter()
            .filter(|a| a.forward && a.to == to)
            .map(|a| a.flow)
            .sum()
    }

    /// Follows one unused unit of positive forward flow out of `from`.
    fn take_flow_from(&mut self, from: usize) -> Option<usize> {
        let arc = self.adj[from]
            .iter_mut()
            .find(|a| a.forward && a.flow > 0 && !a.taken)?;
        arc.flow -= 1;
        if arc.flow == 0 {
            arc.taken = true;
        }
        Some(arc.to)
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for arc in &self.adj[v] {
                if !seen[arc.to] && arc.cap - arc.flow > 0 {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

/// Exhaustive maximum number of vertex-disjoint `A -> B` paths.
///
/// Independent of the flow code; meant as a test oracle on graphs with at
/// most 12 nodes.
pub fn brute_force_disjoint(
    graph: &ValidatedDigraph,
    sources: &BTreeSet<NodeId>,
    targets: &BTreeSet<NodeId>,
) -> Result<usize, PathError> {
    if graph.n() > 12 {
        return Err(PathError::TooLarge { n: graph.n() });
    }
    let starts: Vec<NodeId> = sources.iter().copied().collect();
    let mut used = vec![false; graph.n() + 1];
    let mut best = 0;
    search_families(graph, &starts, 0, targets, &mut used, 0, &mut best);
    Ok(best)
}

fn search_families(
    graph: &ValidatedDigraph,
    starts: &[NodeId],
    index: usize,
    targets: &BTreeSet<NodeId>,
    used: &mut Vec<bool>,
    count: usize,
    best: &mut usize,
) {
    *best = (*best).max(count);
    if index == starts.len() || count + (starts.len() - index) <= *best {
        return;
    }
    let start = starts[index];
    if !used[start] {
        // every simple path from `start` to a target avoiding used vertices
        let mut paths = Vec::new();
        let mut current = vec![start];
        collect_paths(graph, targets, used, &mut current, &mut paths);
        for path in paths {
            for &v in &path {
                used[v] = true;
            }
            search_families(graph, starts, index + 1, targets, used, count + 1, best);
            for &v in &path {
                used[v] = false;
            }
        }
    }
    search_families(graph, starts, index + 1, targets, used, count, best);
}

fn collect_paths(
    graph: &ValidatedDigraph,
    targets: &BTreeSet<NodeId>,
    used: &[bool],
    current: &mut Vec<NodeId>,
    out: &mut Vec<Vec<NodeId>>,
) {
    let last = *current.last().unwrap();
    if targets.contains(&last) {
        out.push(current.clone());
    }
    for &w in graph.out_neighbors(last) {
        if !used[w] {
            current.push(w);
            collect_paths(graph, targets, used, current, out);
            current.pop();
        }
    }
}
