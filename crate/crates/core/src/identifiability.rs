//! Per-node and network verdicts under full measurement.
//!
//! A node function `Phi_i` is generically identifiable when there are `|N_i|`
//! vertex-disjoint paths from excited nodes to the in-neighbors of `i`. For
//! polynomial node functions the condition is also necessary. For analytic
//! functions necessity is only conjectured, and for additive functions it
//! fails, so a deficit there is reported as undecided rather than negative.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, ValidatedDigraph};
use crate::paths::{menger, DisconnectingSet, PathFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error("analysis needs every node measured; unmeasured: {missing:?}")]
    NotFullMeasurement { missing: Vec<NodeId> },
    #[error("graph is not a tree")]
    NotATree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    Polynomial,
    Analytic,
    Additive,
}

impl std::str::FromStr for FunctionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polynomial" => Ok(Self::Polynomial),
            "analytic" => Ok(Self::Analytic),
            "additive" => Ok(Self::Additive),
            other => Err(format!("unknown function class {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GenericallyIdentifiable,
    /// Path condition fails for analytic functions; necessity is open.
    UnknownConjectured,
    /// Path condition fails for additive functions, where it is sufficient
    /// but not necessary.
    NotDecidedBySufficiency,
    NotIdentifiable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceViolation {
    pub source: NodeId,
    pub affected: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advisory {
    pub node: NodeId,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node: NodeId,
    pub in_neighbors: Vec<NodeId>,
    /// Excited ancestors, the possible path starts.
    pub excited_ancestors: Vec<NodeId>,
    pub disjoint_paths: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PathFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deficiency: Option<DisconnectingSet>,
    /// Excited in-neighbors that count through a length-0 path.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub zero_length_paths: Vec<NodeId>,
    /// Unexcited sources feeding this node directly.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unexcited_source_inputs: Vec<NodeId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub class: FunctionClass,
    pub excited: Vec<NodeId>,
    pub nodes: Vec<NodeReport>,
    pub network: Verdict,
    pub source_violations: Vec<SourceViolation>,
    pub advisories: Vec<Advisory>,
    pub measurement_notes: Vec<Advisory>,
}

impl IdentifiabilityReport {
    pub fn node(&self, i: NodeId) -> &NodeReport {
        &self.nodes[i - 1]
    }

    pub fn all_identifiable(&self) -> bool {
        self.network == Verdict::GenericallyIdentifiable
    }
}

/// Unexcited sources with out-edges; each hides the functions of its
/// out-neighbors.
pub fn check_sources(graph: &ValidatedDigraph) -> Vec<SourceViolation> {
    graph
        .nodes()
        .filter(|&s| graph.is_source(s) && !graph.is_excited(s) && !graph.out_neighbors(s).is_empty())
        .map(|s| SourceViolation {
            source: s,
            affected: graph.out_neighbors(s).to_vec(),
        })
        .collect()
}

/// Excited nodes that are sinks with at least one input: their excitation
/// adds nothing to what can be identified.
pub fn sink_excitation_advice(graph: &ValidatedDigraph) -> Vec<Advisory> {
    graph
        .excited()
        .iter()
        .filter(|&&v| graph.is_sink(v) && !graph.is_source(v))
        .map(|&v| Advisory {
            node: v,
            message: format!("exciting sink {v} is unnecessary"),
        })
        .collect()
}

/// Measured sources with out-edges: their outputs are their own inputs and
/// never carry extra information.
pub fn source_measurement_notes(graph: &ValidatedDigraph) -> Vec<Advisory> {
    graph
        .measured()
        .iter()
        .filter(|&&v| graph.is_source(v) && !graph.out_neighbors(v).is_empty())
        .map(|&v| Advisory {
            node: v,
            message: format!("measuring source {v} is never necessary"),
        })
        .collect()
}

fn node_report(graph: &ValidatedDigraph, i: NodeId, class: FunctionClass) -> NodeReport {
    let in_neighbors = graph.in_neighbors(i).to_vec();
    let ancestors = graph.ancestors(i);
    let excited: BTreeSet<NodeId> = graph.excited_ancestors(i);
    let unexcited_source_inputs: Vec<NodeId> = in_neighbors
        .iter()
        .copied()
        .filter(|&j| graph.is_source(j) && !graph.is_excited(j))
        .collect();
    let mut report = NodeReport {
        node: i,
        in_neighbors: in_neighbors.clone(),
        excited_ancestors: excited.iter().copied().collect(),
        disjoint_paths: 0,
        verdict: Verdict::GenericallyIdentifiable,
        witness: None,
        deficiency: None,
        zero_length_paths: Vec::new(),
        unexcited_source_inputs,
        notes: Vec::new(),
    };
    let targets: BTreeSet<NodeId> = in_neighbors.iter().copied().collect();
    if targets.is_empty() {
        report.witness = Some(PathFamily {
            sources: excited,
            targets,
            paths: Vec::new(),
        });
        return report;
    }
    if excited.is_empty() {
        report.deficiency = Some(DisconnectingSet {
            sources: excited,
            targets,
            nodes: BTreeSet::new(),
        });
    } else {
        let pair = menger(graph, &excited, &targets, Some(&ancestors)).expect("nonempty sets");
        report.disjoint_paths = pair.family.len();
        report.zero_length_paths = pair.family.zero_length_nodes();
        if pair.family.len() == targets.len() {
            report.witness = Some(pair.family);
            return report;
        }
        report.deficiency = Some(pair.cut);
    }
    let source_blocked = !report.unexcited_source_inputs.is_empty();
    report.verdict = match class {
        FunctionClass::Polynomial => Verdict::NotIdentifiable,
        _ if source_blocked => {
            report
                .notes
                .push("an unexcited source feeds this node, so its function cannot be identified".into());
            Verdict::NotIdentifiable
        }
        FunctionClass::Analytic => {
            report
                .notes
                .push("path condition fails; necessity for analytic functions is conjectured, not proven".into());
            Verdict::UnknownConjectured
        }
        FunctionClass::Additive => {
            report.notes.push(
                "path condition fails but is not necessary for additive functions; see the additive ambiguity search"
                    .into(),
            );
            Verdict::NotDecidedBySufficiency
        }
    };
    report
}

/// Verdict for every node and for the network.
pub fn analyze(graph: &ValidatedDigraph, class: FunctionClass) -> Result<IdentifiabilityReport, AnalyzeError> {
    if !graph.is_full_measurement() {
        return Err(AnalyzeError::NotFullMeasurement {
            missing: graph.nodes().filter(|v| !graph.measured().contains(v)).collect(),
        });
    }
    let nodes: Vec<NodeReport> = graph.nodes().map(|i| node_report(graph, i, class)).collect();
    let network = nodes
        .iter()
        .map(|r| r.verdict)
        .max()
        .unwrap_or(Verdict::GenericallyIdentifiable);
    Ok(IdentifiabilityReport {
        class,
        excited: graph.excited().iter().copied().collect(),
        nodes,
        network,
        source_violations: check_sources(graph),
        advisories: sink_excitation_advice(graph),
        measurement_notes: source_measurement_notes(graph),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVerdict {
    pub identifiable: bool,
    pub unexcited_sources: Vec<NodeId>,
}

/// On trees, identifiability reduces to exciting every source that has an
/// out-edge.
pub fn tree_verdict(graph: &ValidatedDigraph) -> Result<TreeVerdict, AnalyzeError> {
    if !graph.is_tree() {
        return Err(AnalyzeError::NotATree);
    }
    let unexcited_sources: Vec<NodeId> = check_sources(graph).into_iter().map(|v| v.source).collect();
    Ok(TreeVerdict {
        identifiable: unexcited_sources.is_empty(),
        unexcited_sources,
    })
}

/// A small excitation set making every node identifiable: all sources, then
/// greedily the candidate that most raises the path count of the first
/// deficient node. Pure sinks are never chosen.
pub fn excitation_suggestion(graph: &ValidatedDigraph) -> BTreeSet<NodeId> {
    let mut excited: BTreeSet<NodeId> = graph.nodes().filter(|&v| graph.is_source(v)).collect();
    loop {
        let current = graph.with_excited(excited.clone()).expect("nodes in range");
        let deficient = current
            .topological_order()
            .iter()
            .copied()
            .map(|i| node_report(&current, i, FunctionClass::Polynomial))
            .find(|r| r.verdict != Verdict::GenericallyIdentifiable);
        let Some(report) = deficient else {
            return excited;
        };
        let i = report.node;
        let candidates: Vec<NodeId> = current
            .ancestors(i)
            .into_iter()
            .filter(|v| !excited.contains(v))
            .collect();
        let best = candidates
            .iter()
            .map(|&c| {
                let mut trial = excited.clone();
                trial.insert(c);
                let g = graph.with_excited(trial).expect("nodes in range");
                (node_report(&g, i, FunctionClass::Polynomial).disjoint_paths, c)
            })
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("a deficient node has an unexcited ancestor");
        excited.insert(best.1);
    }
}
