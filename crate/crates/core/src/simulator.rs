//! Discrete-time simulation of the delayed network and symbolic unrolling of
//! measured functions.
//!
//! Node `i` evolves as `y_i^k = u_i^{k-1} + Phi_i(y_j^{k-m_{i,j}} : j in N_i)`.
//! Before time 0 every output and input is zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delays::{settle_times, verify_path_independence, DelayAssignment, DelayError};
use crate::dynamics::NetworkDynamics;
use crate::graph::{NodeId, ValidatedDigraph};
use crate::matrix::RationalMatrix;
use crate::network::{propagate_polynomial, StaticPart};
use crate::poly::Polynomial;
use crate::rational::{format_rational, parse_rational, random_nonzero, rng_from_seed, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Delays(#[from] DelayError),
    #[error("input sequence for node {node} has {found} values, expected {expected}")]
    ScheduleLength {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    #[error("input given for node {0}, which is not excited")]
    UnexcitedInput(NodeId),
    #[error("measured function of node {node} exceeds the guard ({detail})")]
    GuardExceeded { node: NodeId, detail: String },
    #[error("delays are not path independent between {from} and {to}")]
    NotPathIndependent { from: NodeId, to: NodeId },
}

/// Excitation values `u_j^0 .. u_j^T` per excited node; absent nodes are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputSchedule {
    pub horizon: usize,
    pub inputs: BTreeMap<NodeId, Vec<Rational>>,
}

impl InputSchedule {
    pub fn zeros(graph: &ValidatedDigraph, horizon: usize) -> Self {
        Self {
            horizon,
            inputs: graph
                .excited()
                .iter()
                .map(|&j| (j, vec![Rational::from_integer(0.into()); horizon + 1]))
                .collect(),
        }
    }

    /// Constant input `value` on every excited node.
    pub fn constant(graph: &ValidatedDigraph, horizon: usize, value: Rational) -> Self {
        Self {
            horizon,
            inputs: graph
                .excited()
                .iter()
                .map(|&j| (j, vec![value.clone(); horizon + 1]))
                .collect(),
        }
    }

    /// Independent bounded random rationals on every excited node.
    pub fn random(graph: &ValidatedDigraph, horizon: usize, seed: u64, bound: u32) -> Self {
        let mut rng = rng_from_seed(seed);
        Self {
            horizon,
            inputs: graph
                .excited()
                .iter()
                .map(|&j| (j, (0..=horizon).map(|_| random_nonzero(&mut rng, bound)).collect()))
                .collect(),
        }
    }

    /// `u_j^t`, zero outside `0..=horizon` and for unlisted nodes.
    pub fn value(&self, j: NodeId, t: i64) -> Rational {
        if t < 0 {
            return Rational::from_integer(0.into());
        }
        self.inputs
            .get(&j)
            .and_then(|seq| seq.get(t as usize))
            .cloned()
            .unwrap_or_else(|| Rational::from_integer(0.into()))
    }

    pub fn check(&self, graph: &ValidatedDigraph) -> Result<(), SimError> {
        for (&node, seq) in &self.inputs {
            if !graph.is_excited(node) {
                return Err(SimError::UnexcitedInput(node));
            }
            if seq.len() != self.horizon + 1 {
                return Err(SimError::ScheduleLength {
                    node,
                    expected: self.horizon + 1,
                    found: seq.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleJson {
    horizon: usize,
    inputs: BTreeMap<NodeId, Vec<String>>,
}

impl Serialize for InputSchedule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ScheduleJson {
            horizon: self.horizon,
            inputs: self
                .inputs
                .iter()
                .map(|(&j, seq)| (j, seq.iter().map(format_rational).collect()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InputSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ScheduleJson::deserialize(deserializer)?;
        let mut inputs = BTreeMap::new();
        for (j, seq) in raw.inputs {
            let values = seq
                .iter()
                .map(|t| parse_rational(t).ok_or_else(|| D::Error::custom(format!("invalid rational {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            inputs.insert(j, values);
        }
        Ok(Self {
            horizon: raw.horizon,
            inputs,
        })
    }
}

/// Outputs `y_i^0 .. y_i^T` for every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub horizon: usize,
    pub outputs: BTreeMap<NodeId, Vec<Rational>>,
    /// Nodes that no excitation reaches within the horizon.
    pub unreached: Vec<NodeId>,
}

impl Trajectory {
    pub fn output(&self, i: NodeId, k: usize) -> &Rational {
        &self.outputs[&i][k]
    }

    pub fn warnings(&self) -> Vec<String> {
        self.unreached
            .iter()
            .map(|i| format!("horizon too short: no excitation reaches node {i}"))
            .collect()
    }
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    horizon: usize,
    initialization: &'static str,
    outputs: BTreeMap<NodeId, Vec<String>>,
    warnings: Vec<String>,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

impl Serialize for Trajectory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TrajectoryJson {
            horizon: self.horizon,
            initialization: "zero-prehistory",
            outputs: self
                .outputs
                .iter()
                .map(|(&i, seq)| (i, seq.iter().map(format_rational).collect()))
                .collect(),
            warnings: self.warnings(),
            _marker: std::marker::PhantomData,
        }
        .serialize(serializer)
    }
}

/// `2 +` the longest total path delay in the graph.
pub fn default_horizon(graph: &ValidatedDigraph, delays: &DelayAssignment) -> usize {
    2 + settle_times(graph, delays).into_iter().max().unwrap_or(0) as usize
}

/// Exact simulation over `0..=schedule.horizon`.
pub fn simulate(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    delays: &DelayAssignment,
    schedule: &InputSchedule,
) -> Result<Trajectory, SimError> {
    delays.check(graph)?;
    schedule.check(graph)?;
    let horizon = schedule.horizon;
    let zero = Rational::from_integer(0.into());
    let mut y: BTreeMap<NodeId, Vec<Rational>> =
        graph.nodes().map(|i| (i, Vec::with_capacity(horizon + 1))).collect();
    for k in 0..=horizon {
        for &i in graph.topological_order() {
            let args: Vec<Rational> = graph
                .in_neighbors(i)
                .iter()
                .map(|&j| {
                    let m = delays.get(i, j).expect("checked") as usize;
                    if k >= m {
                        y[&j][k - m].clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect();
            let mut value = dynamics.phi(i).eval(&args).expect("validated arity");
            value += schedule.value(i, k as i64 - 1);
            y.get_mut(&i).unwrap().push(value);
        }
    }
    let unreached = graph
        .nodes()
        .filter(|&i| match earliest_response(graph, delays, i) {
            Some(t) => t > horizon as u64,
            None => false,
        })
        .collect();
    Ok(Trajectory {
        horizon,
        outputs: y,
        unreached,
    })
}

/// Earliest step at which some excitation can affect `y_i`, if any can.
fn earliest_response(graph: &ValidatedDigraph, delays: &DelayAssignment, i: NodeId) -> Option<u64> {
    let mut best: Option<u64> = graph.is_excited(i).then_some(1);
    // shortest delay from each node to i, walking backwards
    let mut dist: HashMap<NodeId, u64> = HashMap::from([(i, 0)]);
    for &v in graph.topological_order().iter().rev() {
        let Some(&dv) = dist.get(&v) else { continue };
        for &w in graph.in_neighbors(v) {
            let d = dv + u64::from(delays.get(v, w).expect("checked"));
            let entry = dist.entry(w).or_insert(d);
            *entry = (*entry).min(d);
        }
    }
    for (&v, &d) in &dist {
        if v != i && graph.is_excited(v) {
            best = Some(best.map_or(d + 1, |b| b.min(d + 1)));
        }
    }
    best
}

/// Limits on symbolic unrolling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeGuard {
    pub max_degree: u32,
    pub max_terms: usize,
}

impl Default for DegreeGuard {
    fn default() -> Self {
        Self {
            max_degree: 64,
            max_terms: 1_000_000,
        }
    }
}

/// `F_i` as a polynomial; variable `k` stands for `u_j^{t - d}` where
/// `variables[k] = (j, d)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredFunction {
    pub node: NodeId,
    pub variables: Vec<(NodeId, u64)>,
    pub poly: Polynomial,
}

impl MeasuredFunction {
    /// Value at step `k` of a schedule.
    pub fn eval_at(&self, schedule: &InputSchedule, k: usize) -> Rational {
        let point: Vec<Rational> = self
            .variables
            .iter()
            .map(|&(j, d)| schedule.value(j, k as i64 - d as i64))
            .collect();
        self.poly.eval(&point).expect("matching arity")
    }

    /// Identifies all delayed copies of each input node, giving one variable
    /// per excitation node in increasing order.
    pub fn collapse(&self) -> (Vec<NodeId>, Polynomial) {
        let nodes: Vec<NodeId> = self
            .variables
            .iter()
            .map(|&(j, _)| j)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mapping: Vec<usize> = self
            .variables
            .iter()
            .map(|&(j, _)| nodes.iter().position(|&x| x == j).unwrap())
            .collect();
        let poly = self.poly.embed(nodes.len(), &mapping);
        (nodes, poly)
    }
}

/// Symbolic unrolling of node `i`'s output minus its own `u_i^{k-1}` term.
pub fn measured_function(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    delays: &DelayAssignment,
    i: NodeId,
    guard: DegreeGuard,
) -> Result<MeasuredFunction, SimError> {
    delays.check(graph)?;
    // every (ancestor, offset) whose output F_i reads
    let mut needed: BTreeSet<(NodeId, u64)> = BTreeSet::new();
    let mut stack: Vec<(NodeId, u64)> = graph
        .in_neighbors(i)
        .iter()
        .map(|&j| (j, delays.edge(i, j)))
        .collect();
    while let Some(item @ (v, o)) = stack.pop() {
        if needed.insert(item) {
            for &w in graph.in_neighbors(v) {
                stack.push((w, o + delays.edge(v, w)));
            }
        }
    }
    let variables: Vec<(NodeId, u64)> = needed
        .iter()
        .filter(|(v, _)| graph.is_excited(*v))
        .map(|&(v, o)| (v, o + 1))
        .collect();
    let arity = variables.len();
    let index: HashMap<(NodeId, u64), usize> =
        variables.iter().enumerate().map(|(k, &v)| (v, k)).collect();

    // children before parents: larger offsets first within the topological order
    let mut order: Vec<(NodeId, u64)> = needed.into_iter().collect();
    order.sort_by_key(|&(v, o)| (graph.position(v), std::cmp::Reverse(o)));
    let mut memo: HashMap<(NodeId, u64), Polynomial> = HashMap::new();
    let check = |p: &Polynomial| -> Result<(), SimError> {
        if p.degree() > guard.max_degree || p.num_terms() > guard.max_terms {
            return Err(SimError::GuardExceeded {
                node: i,
                detail: format!("degree {}, {} terms", p.degree(), p.num_terms()),
            });
        }
        Ok(())
    };
    let node_output = |v: NodeId, o: u64, memo: &HashMap<(NodeId, u64), Polynomial>| {
        let args: Vec<Polynomial> = graph
            .in_neighbors(v)
            .iter()
            .map(|&w| memo[&(w, o + delays.edge(v, w))].clone())
            .collect();
        let phi = dynamics.phi(v);
        if args.is_empty() {
            Polynomial::constant(arity, phi.constant_term())
        } else {
            phi.compose(&args).expect("validated arity")
        }
    };
    for (v, o) in order {
        let mut p = node_output(v, o, &memo);
        if let Some(&k) = index.get(&(v, o + 1)) {
            p = &p + &Polynomial::var(arity, k);
        }
        check(&p)?;
        memo.insert((v, o), p);
    }
    let args: Vec<Polynomial> = graph
        .in_neighbors(i)
        .iter()
        .map(|&j| memo[&(j, delays.edge(i, j))].clone())
        .collect();
    let poly = if args.is_empty() {
        Polynomial::constant(arity, dynamics.phi(i).constant_term())
    } else {
        dynamics.phi(i).compose(&args).expect("validated arity")
    };
    check(&poly)?;
    Ok(MeasuredFunction {
        node: i,
        variables,
        poly,
    })
}

/// Holds each input constant across its delay window ending at step `at`:
/// for window `(lo, hi)` of node `j`, `u_j^{at-d} := u_j^{at-lo}` for every
/// `d` in `lo..=hi`. Simulating the result at step `at` then sees a single
/// value per input node, as under path-independent delays.
pub fn restrict_path_independent(
    schedule: &InputSchedule,
    windows: &BTreeMap<NodeId, (u64, u64)>,
    at: usize,
) -> InputSchedule {
    let mut out = schedule.clone();
    for (&j, &(lo, hi)) in windows {
        let Some(seq) = out.inputs.get_mut(&j) else { continue };
        let anchor = at as i64 - lo as i64;
        let held = if anchor >= 0 {
            seq.get(anchor as usize).cloned()
        } else {
            None
        }
        .unwrap_or_else(|| Rational::from_integer(0.into()));
        for d in lo..=hi {
            let t = at as i64 - d as i64;
            if t >= 0 && (t as usize) < seq.len() {
                seq[t as usize] = held.clone();
            }
        }
    }
    out
}

/// Symbolic map from the excitations upstream of `i` to the outputs of its
/// in-neighbors, in the static collapse of path-independent delays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XiMap {
    pub node: NodeId,
    /// Excited strict ancestors of `i`, one variable each.
    pub excitations: Vec<NodeId>,
    pub in_neighbors: Vec<NodeId>,
    pub components: Vec<Polynomial>,
}

impl XiMap {
    pub fn new(graph: &ValidatedDigraph, dynamics: &NetworkDynamics, i: NodeId) -> Self {
        let excitations: Vec<NodeId> = graph.excited_ancestors(i).into_iter().collect();
        let arity = excitations.len();
        let injected = excitations
            .iter()
            .enumerate()
            .map(|(k, &j)| (j, Polynomial::var(arity, k)))
            .collect();
        let within = graph.ancestors(i);
        let y = propagate_polynomial(
            graph,
            dynamics,
            arity,
            &BTreeMap::new(),
            &injected,
            Some(&within),
            StaticPart::Full,
        );
        let in_neighbors = graph.in_neighbors(i).to_vec();
        let components = in_neighbors.iter().map(|&j| y[j - 1].clone()).collect();
        Self {
            node: i,
            excitations,
            in_neighbors,
            components,
        }
    }

    pub fn eval(&self, u: &[Rational]) -> Vec<Rational> {
        self.components
            .iter()
            .map(|p| p.eval(u).expect("matching arity"))
            .collect()
    }
}

/// Exact in-neighbor outputs of `i` for excitation values `u` (ordered like
/// [`XiMap::excitations`]), by numeric static propagation.
pub fn xi_map(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    i: NodeId,
    u: &[Rational],
) -> Vec<Rational> {
    let excitations: Vec<NodeId> = graph.excited_ancestors(i).into_iter().collect();
    assert_eq!(excitations.len(), u.len(), "one value per excited ancestor");
    let inputs: BTreeMap<NodeId, Rational> = excitations.iter().copied().zip(u.iter().cloned()).collect();
    let y = crate::network::propagate_static(graph, dynamics, &inputs, StaticPart::Full);
    graph.in_neighbors(i).iter().map(|&j| y[j - 1].clone()).collect()
}

/// Float static propagation, kept separate from the exact code so finite
/// differences check it independently.
fn xi_map_f64(graph: &ValidatedDigraph, dynamics: &NetworkDynamics, i: NodeId, u: &[f64]) -> Vec<f64> {
    let excitations: Vec<NodeId> = graph.excited_ancestors(i).into_iter().collect();
    let mut y = vec![0.0; graph.n() + 1];
    for &v in graph.topological_order() {
        let args: Vec<f64> = graph.in_neighbors(v).iter().map(|&w| y[w]).collect();
        y[v] = dynamics.phi(v).eval_f64(&args);
        if let Some(k) = excitations.iter().position(|&j| j == v) {
            y[v] += u[k];
        }
    }
    graph.in_neighbors(i).iter().map(|&j| y[j]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JacobianMode {
    Symbolic,
    FiniteDifference { h: f64 },
}

/// Jacobian of the Xi map, `|N_i|` rows by one column per excited ancestor.
#[derive(Clone, Debug, PartialEq)]
pub struct XiJacobian {
    pub in_neighbors: Vec<NodeId>,
    pub excitations: Vec<NodeId>,
    /// Present in symbolic mode.
    pub exact: Option<RationalMatrix>,
    pub entries: Vec<Vec<f64>>,
    pub rank: usize,
}

pub fn xi_jacobian(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    i: NodeId,
    u: &[Rational],
    mode: JacobianMode,
) -> XiJacobian {
    let in_neighbors = graph.in_neighbors(i).to_vec();
    let excitations: Vec<NodeId> = graph.excited_ancestors(i).into_iter().collect();
    match mode {
        JacobianMode::Symbolic => {
            let xi = XiMap::new(graph, dynamics, i);
            let rows = xi
                .components
                .iter()
                .map(|p| (0..u.len()).map(|k| p.diff(k).eval(u).expect("arity")).collect())
                .collect();
            let m = RationalMatrix::from_rows(rows);
            let entries = (0..m.rows())
                .map(|r| m.row(r).iter().map(to_f64).collect())
                .collect();
            let rank = m.exact_rank();
            XiJacobian {
                in_neighbors,
                excitations,
                exact: Some(m),
                entries,
                rank,
            }
        }
        JacobianMode::FiniteDifference { h } => {
            let base: Vec<f64> = u.iter().map(to_f64).collect();
            let mut entries = vec![vec![0.0; u.len()]; in_neighbors.len()];
            for k in 0..u.len() {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[k] += h;
                minus[k] -= h;
                let (a, b) = (xi_map_f64(graph, dynamics, i, &plus), xi_map_f64(graph, dynamics, i, &minus));
                for r in 0..in_neighbors.len() {
                    entries[r][k] = (a[r] - b[r]) / (2.0 * h);
                }
            }
            let rank = float_rank(&entries, 1e-8);
            XiJacobian {
                in_neighbors,
                excitations,
                exact: None,
                entries,
                rank,
            }
        }
    }
}

/// Rank by partial pivoting with a tolerance relative to the largest entry.
fn float_rank(m: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            continue;
        }
        a.swap(r, p);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for j in c..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Fails unless every pair of nodes sees one delay across all paths.
pub fn require_path_independent(graph: &ValidatedDigraph, delays: &DelayAssignment) -> Result<(), SimError> {
    delays.check(graph)?;
    match verify_path_independence(graph, delays).conflicts().next() {
        Some(c) => Err(SimError::NotPathIndependent { from: c.from, to: c.to }),
        None => Ok(()),
    }
}
