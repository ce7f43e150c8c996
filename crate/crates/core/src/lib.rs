//! Generic identifiability of nonlinear dynamical networks on DAGs.
//!
//! Node `i` evolves as `y_i^k = u_i^{k-1} + Phi_i(y_j^{k-m_ij} : j in N_i)` with
//! polynomial node functions. Under full measurement, the crate decides which
//! node functions are determined by the measured input/output behavior, and
//! backs each verdict with evidence: vertex-disjoint path families for
//! identifiable nodes, exactly verified polynomial certificates otherwise.

pub mod certificates;
pub mod delays;
pub mod dynamics;
pub mod fixtures;
pub mod graph;
pub mod identifiability;
pub mod implicit;
pub mod matrix;
mod modular;
pub mod network;
pub mod paths;
pub mod poly;
pub mod rational;
pub mod simulator;

pub use delays::{assign_path_independent_delays, verify_path_independence, DelayAssignment};
pub use graph::{Digraph, GraphError, NodeId, ValidatedDigraph};
pub use paths::{max_vertex_disjoint, min_disconnecting_set, DisconnectingSet, PathFamily};
pub use poly::Polynomial;
pub use rational::Rational;
