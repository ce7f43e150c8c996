//! Input files and the error classes that map to exit codes.

use std::collections::BTreeSet;
use std::path::Path;

use netident_core::graph::{Edge, ValidateOptions};
use netident_core::{DelayAssignment, Digraph, NodeId, ValidatedDigraph};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            _ => 2,
        }
    }

    pub fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

/// Graph file; `measured` defaults to every node.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub excited: BTreeSet<NodeId>,
    #[serde(default)]
    pub measured: Option<BTreeSet<NodeId>>,
    #[serde(default)]
    pub delays: Option<DelayAssignment>,
}

pub struct LoadedGraph {
    pub graph: ValidatedDigraph,
    pub delays: Option<DelayAssignment>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: display.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: display,
        message: e.to_string(),
    })
}

pub fn load_graph(path: &Path, allow_disconnected: bool) -> Result<LoadedGraph, CliError> {
    let file: GraphFile = read_json(path)?;
    let measured = file.measured.unwrap_or_else(|| (1..=file.n).collect());
    let digraph = Digraph {
        n: file.n,
        edges: file.edges,
        excited: file.excited,
        measured,
    };
    let graph = digraph
        .validate_with(ValidateOptions { allow_disconnected })
        .map_err(CliError::domain)?;
    if let Some(d) = &file.delays {
        d.check(&graph).map_err(CliError::domain)?;
    }
    Ok(LoadedGraph {
        graph,
        delays: file.delays,
    })
}
