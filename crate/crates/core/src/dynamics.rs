//! Node functions of a network, one polynomial `Phi_i` per node.
//!
//! `Phi_i` takes the outputs of the in-neighbors of `i`, ordered by node id.
//! Sources have no arguments and a zero function, so a source outputs exactly
//! its own excitation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, ValidatedDigraph};
use crate::poly::{random_polynomial_with, Polynomial};
use crate::rational::{derive_seed, rng_from_seed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("no function given for node {0}")]
    MissingNode(NodeId),
    #[error("function given for node {0}, which is not in the graph")]
    UnknownNode(NodeId),
    #[error("node {node}: inputs {found:?} differ from in-neighbors {expected:?}")]
    InputsMismatch {
        node: NodeId,
        expected: Vec<NodeId>,
        found: Vec<NodeId>,
    },
    #[error("node {node}: function has {found} variables, expected {expected}")]
    ArityMismatch {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    #[error("node {node}: function does not depend on input {input}")]
    VanishingPartial { node: NodeId, input: NodeId },
    #[error("source node {node} must have the zero function")]
    SourceNotZero { node: NodeId },
    #[error("node {node}: additive mode forbids cross terms and constants, found {cross}")]
    NotAdditive { node: NodeId, cross: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsMode {
    Additive,
    General,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFunction {
    pub inputs: Vec<NodeId>,
    pub phi: Polynomial,
}

/// `{"mode": "general", "nodes": {"3": {"inputs": [1, 2], "phi": ...}}}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDynamics {
    pub mode: DynamicsMode,
    pub nodes: BTreeMap<NodeId, NodeFunction>,
}

impl NetworkDynamics {
    /// Checks the functions against the graph: one per node, arguments equal
    /// to the in-neighbors, every argument actually used.
    pub fn validate(&self, graph: &ValidatedDigraph) -> Result<(), DynamicsError> {
        if let Some((&node, _)) = self.nodes.iter().find(|(&v, _)| v == 0 || v > graph.n()) {
            return Err(DynamicsError::UnknownNode(node));
        }
        for i in graph.nodes() {
            let f = self.nodes.get(&i).ok_or(DynamicsError::MissingNode(i))?;
            let expected = graph.in_neighbors(i);
            if f.inputs != expected {
                return Err(DynamicsError::InputsMismatch {
                    node: i,
                    expected: expected.to_vec(),
                    found: f.inputs.clone(),
                });
            }
            if f.phi.arity() != expected.len() {
                return Err(DynamicsError::ArityMismatch {
                    node: i,
                    expected: expected.len(),
                    found: f.phi.arity(),
                });
            }
            if expected.is_empty() && !f.phi.is_zero() {
                return Err(DynamicsError::SourceNotZero { node: i });
            }
            for (k, &j) in expected.iter().enumerate() {
                if !f.phi.depends_on(k) {
                    return Err(DynamicsError::VanishingPartial { node: i, input: j });
                }
            }
            if self.mode == DynamicsMode::Additive {
                let cross = f.phi.decompose().cross;
                if !cross.is_zero() {
                    return Err(DynamicsError::NotAdditive {
                        node: i,
                        cross: cross.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// # Panics
    /// If `i` has no function.
    pub fn phi(&self, i: NodeId) -> &Polynomial {
        &self.nodes[&i].phi
    }

    pub fn inputs(&self, i: NodeId) -> &[NodeId] {
        &self.nodes[&i].inputs
    }

    /// Univariate part `f_{i,j}` as a one-variable polynomial (zero if `j` is
    /// not an input of `i`).
    pub fn edge_function(&self, i: NodeId, j: NodeId) -> Polynomial {
        match self.inputs(i).iter().position(|&x| x == j) {
            Some(k) => self.phi(i).decompose().univariate[k].univariate_in(k),
            None => Polynomial::zero(1),
        }
    }

    /// Cross part `g_i`: constant term plus monomials in two or more inputs.
    pub fn cross_part(&self, i: NodeId) -> Polynomial {
        self.phi(i).decompose().cross
    }

    /// Copy with `Phi_i` replaced.
    pub fn with_phi(&self, i: NodeId, phi: Polynomial) -> Self {
        let mut out = self.clone();
        out.nodes.get_mut(&i).expect("known node").phi = phi;
        out
    }

    /// Dynamics with every cross part dropped.
    pub fn additive_part(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|(&i, f)| {
                let d = f.phi.decompose();
                let phi = d
                    .univariate
                    .iter()
                    .fold(Polynomial::zero(f.phi.arity()), |acc, p| &acc + p);
                (
                    i,
                    NodeFunction {
                        inputs: f.inputs.clone(),
                        phi,
                    },
                )
            })
            .collect();
        Self {
            mode: DynamicsMode::Additive,
            nodes,
        }
    }

    /// Additive dynamics from one-variable edge functions keyed `(i, j)`.
    /// Missing edges get the zero function.
    pub fn from_edge_functions(
        graph: &ValidatedDigraph,
        edges: &BTreeMap<(NodeId, NodeId), Polynomial>,
    ) -> Self {
        let nodes = graph
            .nodes()
            .map(|i| {
                let inputs = graph.in_neighbors(i).to_vec();
                let arity = inputs.len();
                let phi = inputs.iter().enumerate().fold(
                    Polynomial::zero(arity),
                    |acc, (k, &j)| match edges.get(&(i, j)) {
                        Some(f) => &acc + &f.embed(arity, &[k]),
                        None => acc,
                    },
                );
                (i, NodeFunction { inputs, phi })
            })
            .collect();
        Self {
            mode: DynamicsMode::Additive,
            nodes,
        }
    }

    /// Dense random `Phi_i` of total degree `degree` for each non-source node,
    /// constant and cross terms included.
    pub fn random_general(graph: &ValidatedDigraph, degree: u32, seed: u64, coeff_bound: u32) -> Self {
        let nodes = graph
            .nodes()
            .map(|i| {
                let inputs = graph.in_neighbors(i).to_vec();
                let phi = if inputs.is_empty() {
                    Polynomial::zero(0)
                } else {
                    let mut rng = rng_from_seed(derive_seed(seed, 1, i as u64));
                    random_polynomial_with(&mut rng, inputs.len(), 0, degree, coeff_bound)
                };
                (i, NodeFunction { inputs, phi })
            })
            .collect();
        Self {
            mode: DynamicsMode::General,
            nodes,
        }
    }

    /// Random edge functions `f_{i,j}` with every degree from 1 to `degree`
    /// present and no constant term.
    pub fn random_additive(graph: &ValidatedDigraph, degree: u32, seed: u64, coeff_bound: u32) -> Self {
        Self::from_edge_functions(graph, &random_edge_functions(graph, degree, seed, coeff_bound))
    }
}

/// The edge functions behind [`NetworkDynamics::random_additive`].
pub fn random_edge_functions(
    graph: &ValidatedDigraph,
    degree: u32,
    seed: u64,
    coeff_bound: u32,
) -> BTreeMap<(NodeId, NodeId), Polynomial> {
    graph
        .edges()
        .iter()
        .map(|e| {
            let index = ((e.to as u64) << 32) | e.from as u64;
            let mut rng = rng_from_seed(derive_seed(seed, 2, index));
            let f = random_polynomial_with(&mut rng, 1, 1, degree.max(1), coeff_bound);
            ((e.to, e.from), f)
        })
        .collect()
}
