//! Counterexamples to identifiability.
//!
//! A certificate names a node `i` and an alternative function `Phi~_i != Phi_i`
//! such that replacing `Phi_i` leaves every measured output unchanged. Each
//! constructor builds the alternative and runs [`verify`] before returning.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::delays::{assign_path_independent_delays, settle_times, DelayAssignment};
use crate::dynamics::{DynamicsMode, NetworkDynamics};
use crate::graph::{NodeId, ValidatedDigraph};
use crate::identifiability::{analyze, AnalyzeError, FunctionClass, Verdict};
use crate::implicit::{find_relation, implicitization_certificate, ImplicitError, KernelMethod};
use crate::network::{propagate_polynomial, StaticPart};
use crate::poly::{Exponent, Polynomial};
use crate::rational::derive_seed;
use crate::simulator::{default_horizon, measured_function, simulate, DegreeGuard, InputSchedule, SimError, XiMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error("node {node} is generically identifiable; no certificate exists")]
    NotApplicable { node: NodeId },
    #[error("node {node}: no relation up to degree {max_degree}; one is guaranteed from degree {bound}")]
    SearchExhausted { node: NodeId, max_degree: u32, bound: u32 },
    #[error("node {node}: {source}")]
    Implicit { node: NodeId, source: ImplicitError },
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("permutation {permutation:?} does not reorder the in-neighbors {in_neighbors:?}")]
    InvalidPermutation {
        in_neighbors: Vec<NodeId>,
        permutation: Vec<NodeId>,
    },
    #[error("outputs of nodes {a} and {b} differ as functions of the excitations")]
    OutputsDiffer { a: NodeId, b: NodeId },
    #[error("node {node} has no source among its in-neighbors")]
    NoSourceInput { node: NodeId },
    #[error("source {input} feeding node {node} is excited")]
    SourceExcited { node: NodeId, input: NodeId },
    #[error("perturbation must be a nonzero polynomial in one variable vanishing at 0, got {0}")]
    PsiViolation(String),
    #[error("additive ambiguity search needs additive dynamics")]
    NotAdditive,
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("alternative function equals the original")]
    NotACounterexample,
    #[error("node {node}: measured functions differ at monomial {monomial:?} over {variables:?}")]
    SymbolicMismatch {
        node: NodeId,
        variables: Vec<(NodeId, u64)>,
        monomial: Exponent,
    },
    #[error("node {node}: simulated outputs differ at step {step} of replay {replay}")]
    DynamicMismatch { node: NodeId, step: usize, replay: usize },
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// How the alternative function was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// `Phi~_i(y) = Phi_i(y_{permutation})`; the permuted in-neighbors have
    /// identical outputs.
    Swap { permutation: Vec<NodeId> },
    /// `Phi~_j = Phi_j + psi(y_source)` with the source unexcited, so its
    /// output is identically zero.
    SourcePerturbation { source: NodeId, psi: Polynomial },
    /// `Phi~_i = Phi_i + delta` where `delta(G) = 0` and `G` gives the
    /// in-neighbor outputs in terms of the disconnecting-set outputs.
    Implicitization {
        disconnecting_set: Vec<NodeId>,
        parametrization: Vec<Polynomial>,
        delta: Polynomial,
        degree: u32,
        bound: u32,
        attempted: Vec<u32>,
        kernel: KernelMethod,
    },
    /// Additive `delta = sum_j d_j(y_j)` vanishing on the in-neighbor outputs
    /// as functions of the excitations.
    AdditiveAmbiguity {
        excitations: Vec<NodeId>,
        parametrization: Vec<Polynomial>,
        delta: Polynomial,
        degree: u32,
        kernel: KernelMethod,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    /// Delays `m_ij = scale * (pos(i) - pos(j))` used for both checks.
    pub delay_scale: u32,
    /// Nodes whose measured functions were compared symbolically.
    pub symbolic_nodes: Vec<NodeId>,
    pub replays: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Node `v` is compared from step `settle[v]` on.
    pub settle: BTreeMap<NodeId, u64>,
    /// SHA-256 of the compared measured functions.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub node: NodeId,
    pub inputs: Vec<NodeId>,
    pub phi: Polynomial,
    pub phi_tilde: Polynomial,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub replays: usize,
    pub seed: u64,
    pub delay_scale: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            replays: 100,
            seed: 0,
            delay_scale: 1,
        }
    }
}

fn check_node(graph: &ValidatedDigraph, i: NodeId) -> Result<(), CertificateError> {
    if i == 0 || i > graph.n() {
        return Err(CertificateError::UnknownNode(i));
    }
    Ok(())
}

fn finish(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    mut cert: Certificate,
    options: VerifyOptions,
) -> Result<Certificate, CertificateError> {
    cert.verification = Some(verify(graph, dynamics, &cert, options)?);
    Ok(cert)
}

/// Implicitization certificate for a node failing the path condition.
///
/// With `D` the minimum disconnecting set between the excited ancestors of
/// `i` and its in-neighbors, each in-neighbor output is a polynomial `G_j` in
/// the outputs of `D`. Since `|D| < |N_i|` the `G_j` satisfy a relation
/// `delta`, and `Phi_i + delta` is indistinguishable from `Phi_i`.
pub fn node_nonident_certificate(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    i: NodeId,
    max_degree: u32,
    options: VerifyOptions,
) -> Result<Certificate, CertificateError> {
    check_node(graph, i)?;
    let report = analyze(graph, FunctionClass::Polynomial)?;
    let node = report.node(i);
    if node.verdict == Verdict::GenericallyIdentifiable {
        return Err(CertificateError::NotApplicable { node: i });
    }
    let cut: Vec<NodeId> = node
        .deficiency
        .as_ref()
        .map(|d| d.nodes.iter().copied().collect())
        .unwrap_or_default();
    let arity = cut.len();
    let fixed = cut
        .iter()
        .enumerate()
        .map(|(k, &d)| (d, Polynomial::var(arity, k)))
        .collect();
    let within = graph.ancestors(i);
    let y = propagate_polynomial(
        graph,
        dynamics,
        arity,
        &fixed,
        &BTreeMap::new(),
        Some(&within),
        StaticPart::Full,
    );
    let gens: Vec<Polynomial> = node.in_neighbors.iter().map(|&j| y[j - 1].clone()).collect();
    let found = implicitization_certificate(&gens, max_degree).map_err(|e| match e {
        ImplicitError::DimensionNotExceeded { max_degree, bound } => CertificateError::SearchExhausted {
            node: i,
            max_degree,
            bound,
        },
        source => CertificateError::Implicit { node: i, source },
    })?;
    let phi = dynamics.phi(i).clone();
    let cert = Certificate {
        node: i,
        inputs: node.in_neighbors.clone(),
        phi_tilde: &phi + &found.delta,
        phi,
        evidence: Evidence::Implicitization {
            disconnecting_set: cut,
            parametrization: gens,
            delta: found.delta,
            degree: found.degree,
            bound: found.bound,
            attempted: found.attempted,
            kernel: found.kernel,
        },
        verification: None,
    };
    finish(graph, dynamics, cert, options)
}

/// Swap certificate: `permutation` reorders the in-neighbors of `i` among
/// nodes whose outputs coincide as functions of the excitations.
pub fn swap_witness(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    i: NodeId,
    permutation: &[NodeId],
    options: VerifyOptions,
) -> Result<Certificate, CertificateError> {
    check_node(graph, i)?;
    let inputs = graph.in_neighbors(i).to_vec();
    let mapping: Option<Vec<usize>> = permutation
        .iter()
        .map(|p| inputs.iter().position(|x| x == p))
        .collect();
    let valid = permutation.len() == inputs.len()
        && permutation.iter().collect::<BTreeSet<_>>().len() == inputs.len();
    let mapping = match mapping {
        Some(m) if valid => m,
        _ => {
            return Err(CertificateError::InvalidPermutation {
                in_neighbors: inputs,
                permutation: permutation.to_vec(),
            })
        }
    };
    let xi = XiMap::new(graph, dynamics, i);
    for (k, &target) in mapping.iter().enumerate() {
        if xi.components[k] != xi.components[target] {
            return Err(CertificateError::OutputsDiffer {
                a: inputs[k],
                b: inputs[target],
            });
        }
    }
    let phi = dynamics.phi(i).clone();
    let cert = Certificate {
        node: i,
        inputs,
        phi_tilde: phi.embed(phi.arity(), &mapping),
        phi,
        evidence: Evidence::Swap {
            permutation: permutation.to_vec(),
        },
        verification: None,
    };
    finish(graph, dynamics, cert, options)
}

/// Source certificate: `Phi~_j = Phi_j + psi(y_s)` for the smallest source
/// in-neighbor `s` of `j`, which must be unexcited.
pub fn source_perturbation_witness(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    j: NodeId,
    psi: &Polynomial,
    options: VerifyOptions,
) -> Result<Certificate, CertificateError> {
    check_node(graph, j)?;
    if psi.arity() != 1 || psi.is_zero() || !psi.constant_term().is_zero() {
        return Err(CertificateError::PsiViolation(psi.to_string()));
    }
    let inputs = graph.in_neighbors(j).to_vec();
    let sources: Vec<NodeId> = inputs.iter().copied().filter(|&s| graph.is_source(s)).collect();
    let source = match sources.iter().find(|&&s| !graph.is_excited(s)) {
        Some(&s) => s,
        None => {
            return Err(match sources.first() {
                Some(&s) => CertificateError::SourceExcited { node: j, input: s },
                None => CertificateError::NoSourceInput { node: j },
            })
        }
    };
    let k = inputs.iter().position(|&x| x == source).expect("in-neighbor");
    let phi = dynamics.phi(j).clone();
    let cert = Certificate {
        node: j,
        phi_tilde: &phi + &psi.embed(inputs.len(), &[k]),
        inputs,
        phi,
        evidence: Evidence::SourcePerturbation {
            source,
            psi: psi.clone(),
        },
        verification: None,
    };
    finish(graph, dynamics, cert, options)
}

/// Searches for additive `delta = sum_j sum_{d=1..M} c_{j,d} y_j^d` vanishing
/// on the in-neighbor outputs of `i`. `None` means no such perturbation of
/// degree at most `max_degree` exists.
pub fn additive_ambiguity_search(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    i: NodeId,
    max_degree: u32,
    options: VerifyOptions,
) -> Result<Option<Certificate>, CertificateError> {
    check_node(graph, i)?;
    if dynamics.mode != DynamicsMode::Additive {
        return Err(CertificateError::NotAdditive);
    }
    let xi = XiMap::new(graph, dynamics, i);
    let n = xi.in_neighbors.len();
    let exponents: Vec<Exponent> = (1..=max_degree)
        .flat_map(|d| {
            (0..n).map(move |k| {
                let mut e = vec![0; n];
                e[k] = d;
                e
            })
        })
        .collect();
    if exponents.is_empty() {
        return Ok(None);
    }
    let Some((delta, kernel)) = find_relation(&xi.components, &exponents) else {
        return Ok(None);
    };
    let phi = dynamics.phi(i).clone();
    let cert = Certificate {
        node: i,
        inputs: xi.in_neighbors.clone(),
        phi_tilde: &phi + &delta,
        phi,
        evidence: Evidence::AdditiveAmbiguity {
            excitations: xi.excitations,
            parametrization: xi.components,
            degree: delta.degree(),
            delta,
            kernel,
        },
        verification: None,
    };
    finish(graph, dynamics, cert, options).map(Some)
}

/// Checks that swapping in `phi_tilde` changes no measured output.
///
/// Under delays `scale * (pos(i) - pos(j))` the measured function of every
/// node is compared as an exact polynomial in the delayed excitations. Then
/// `replays` random input sequences are simulated under both dynamics and the
/// outputs compared exactly from each node's settle time on; before that the
/// zero pre-history is not a trajectory of either network.
pub fn verify(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    cert: &Certificate,
    options: VerifyOptions,
) -> Result<Verification, VerifyError> {
    if cert.phi_tilde == cert.phi {
        return Err(VerifyError::NotACounterexample);
    }
    let original = dynamics.with_phi(cert.node, cert.phi.clone());
    let alternative = dynamics.with_phi(cert.node, cert.phi_tilde.clone());
    let delays = assign_path_independent_delays(graph, options.delay_scale);
    let guard = DegreeGuard::default();
    let mut hasher = Sha256::new();
    let nodes: Vec<NodeId> = graph.nodes().collect();
    for &v in &nodes {
        let a = measured_function(graph, &original, &delays, v, guard)?;
        let b = measured_function(graph, &alternative, &delays, v, guard)?;
        let diff = &b.poly - &a.poly;
        if let Some((monomial, _)) = diff.terms().next() {
            return Err(VerifyError::SymbolicMismatch {
                node: v,
                variables: a.variables,
                monomial: monomial.clone(),
            });
        }
        hasher.update(serde_json::to_vec(&a).expect("serializable"));
    }
    let horizon = default_horizon(graph, &delays) + 2;
    let settle = settle_times(graph, &delays);
    for replay in 0..options.replays {
        let schedule = InputSchedule::random(graph, horizon, derive_seed(options.seed, 20, replay as u64), 10);
        replay_once(graph, &original, &alternative, &delays, &schedule, &settle, replay)?;
    }
    hasher.update(horizon.to_le_bytes());
    hasher.update((options.replays as u64).to_le_bytes());
    hasher.update(options.seed.to_le_bytes());
    let digest = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(Verification {
        delay_scale: options.delay_scale.max(1),
        symbolic_nodes: nodes.clone(),
        replays: options.replays,
        horizon,
        seed: options.seed,
        settle: nodes.iter().map(|&v| (v, settle[v])).collect(),
        digest,
    })
}

fn replay_once(
    graph: &ValidatedDigraph,
    original: &NetworkDynamics,
    alternative: &NetworkDynamics,
    delays: &DelayAssignment,
    schedule: &InputSchedule,
    settle: &[u64],
    replay: usize,
) -> Result<(), VerifyError> {
    let a = simulate(graph, original, delays, schedule)?;
    let b = simulate(graph, alternative, delays, schedule)?;
    for v in graph.nodes() {
        for step in settle[v] as usize..=schedule.horizon {
            if a.output(v, step) != b.output(v, step) {
                return Err(VerifyError::DynamicMismatch { node: v, step, replay });
            }
        }
    }
    Ok(())
}
