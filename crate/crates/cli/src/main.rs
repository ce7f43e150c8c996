//! `netident`: identifiability analysis of nonlinear networks on DAGs.
//!
//! Exit status 0 on success, 1 on domain errors (invalid graph, failed
//! certificate search), 2 on I/O, schema and usage errors.

mod schema;
mod table;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use netident_core::certificates::{
    additive_ambiguity_search, node_nonident_certificate, source_perturbation_witness, swap_witness, Certificate,
    VerifyOptions,
};
use netident_core::delays::DelayTable;
use netident_core::dynamics::NetworkDynamics;
use netident_core::identifiability::{
    analyze, excitation_suggestion, tree_verdict, FunctionClass, IdentifiabilityReport, TreeVerdict, Verdict,
};
use netident_core::network::{generic_rank, RankProbe};
use netident_core::paths::menger;
use netident_core::rational::derive_seed;
use netident_core::simulator::{default_horizon, simulate, InputSchedule, Trajectory};
use netident_core::{
    assign_path_independent_delays, fixtures, verify_path_independence, DelayAssignment, DisconnectingSet, NodeId,
    PathFamily, Polynomial, ValidatedDigraph,
};
use serde::Serialize;

use schema::{load_graph, read_json, CliError, LoadedGraph};

/// Seed streams split off the CLI seed.
const STREAM_DYNAMICS: u64 = 30;
const STREAM_REPLAYS: u64 = 31;
const STREAM_INPUTS: u64 = 32;

const COEFF_BOUND: u32 = 10;

#[derive(Parser, Debug)]
#[command(name = "netident", version, about = "Generic identifiability of nonlinear networks on DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the JSON report to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Accept graphs that are not weakly connected.
    #[arg(long, global = true)]
    allow_disconnected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CertifyKind {
    /// Implicitization over a minimum disconnecting set.
    Implicit,
    /// Permutation of in-neighbors with identical outputs.
    Swap,
    /// Perturbation through an unexcited source.
    Source,
    /// Search restricted to additive perturbations.
    Additive,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-node identifiability verdicts with path witnesses.
    Analyze {
        graph: PathBuf,
        #[arg(long, default_value = "polynomial", value_parser = parse_class)]
        class: FunctionClass,
    },
    /// Maximum vertex-disjoint paths and a minimum disconnecting set.
    Paths {
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        from: Vec<NodeId>,
        #[arg(long, value_delimiter = ',', required = true)]
        to: Vec<NodeId>,
    },
    /// Path-independence check of the graph's delays, or an assignment.
    Delays {
        graph: PathBuf,
        /// Scale of the assigned delays `scale * (pos(i) - pos(j))`.
        #[arg(long, default_value_t = 1)]
        scale: u32,
    },
    /// Generic rank of a transfer block over random samples.
    Rank {
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<NodeId>,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<NodeId>,
        #[arg(long, default_value_t = 1)]
        degree: u32,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Verified counterexample to the identifiability of a node.
    Certify {
        graph: PathBuf,
        #[arg(long)]
        node: NodeId,
        #[arg(long, default_value_t = 6)]
        maxdeg: u32,
        /// Degree of random dynamics when `--dynamics` is absent.
        #[arg(long, default_value_t = 1)]
        degree: u32,
        #[arg(long)]
        dynamics: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CertifyKind::Implicit)]
        kind: CertifyKind,
        /// New argument order for `--kind swap`.
        #[arg(long, value_delimiter = ',')]
        permutation: Vec<NodeId>,
        /// Polynomial JSON file for `--kind source`; defaults to `y`.
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        replays: usize,
    },
    /// Exact simulation of the delayed dynamics.
    Simulate {
        graph: PathBuf,
        #[arg(long)]
        dynamics: Option<PathBuf>,
        /// `auto` or a delay JSON file; defaults to the graph's delays.
        #[arg(long)]
        delays: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        degree: u32,
    },
    /// Excitation set making every node identifiable.
    Suggest { graph: PathBuf },
    /// Bundled example graphs; with a name, prints that graph.
    Examples { name: Option<String> },
}

fn parse_class(s: &str) -> Result<FunctionClass, String> {
    s.parse()
}

/// Echo of the invocation, stored in every report.
#[derive(Serialize, Debug, Default)]
struct RunConfig {
    command: &'static str,
    inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<FunctionClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    maxdeg: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<CertifyKind>,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    config: RunConfig,
    result: T,
}

#[derive(Serialize)]
struct AnalyzeResult {
    #[serde(flatten)]
    report: IdentifiabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<TreeVerdict>,
}

#[derive(Serialize)]
struct PathsResult {
    count: usize,
    family: PathFamily,
    disconnecting_set: DisconnectingSet,
}

#[derive(Serialize)]
struct DelaysResult {
    /// `given` or `assigned`.
    origin: &'static str,
    delays: DelayAssignment,
    path_independent: bool,
    table: DelayTable,
}

#[derive(Serialize)]
struct CertifyResult {
    dynamics: NetworkDynamics,
    certificate: Option<Certificate>,
}

#[derive(Serialize)]
struct SimulateResult {
    delays: DelayAssignment,
    schedule: InputSchedule,
    trajectory: Trajectory,
}

#[derive(Serialize)]
struct SuggestResult {
    excited: Vec<NodeId>,
    suggested: Vec<NodeId>,
    added: Vec<NodeId>,
    verdict_before: Verdict,
    verdict_after: Verdict,
}

#[derive(Serialize)]
struct ExampleEntry {
    name: &'static str,
    n: usize,
    edges: usize,
    excited: Vec<NodeId>,
}

/// Rendered report: JSON text plus the table view.
struct Output {
    json: String,
    table: String,
}

fn render<T: Serialize>(config: RunConfig, result: T, table: String) -> Output {
    let report = Report { config, result };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    Output { json, table }
}

fn node_set(nodes: &[NodeId]) -> BTreeSet<NodeId> {
    nodes.iter().copied().collect()
}

fn inputs(paths: &[&Path]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn load_dynamics(
    path: Option<&Path>,
    graph: &ValidatedDigraph,
    degree: u32,
    seed: u64,
    additive: bool,
) -> Result<NetworkDynamics, CliError> {
    let dynamics = match path {
        Some(p) => read_json(p)?,
        None if additive => {
            NetworkDynamics::random_additive(graph, degree, derive_seed(seed, STREAM_DYNAMICS, 0), COEFF_BOUND)
        }
        None => NetworkDynamics::random_general(graph, degree, derive_seed(seed, STREAM_DYNAMICS, 0), COEFF_BOUND),
    };
    dynamics.validate(graph).map_err(CliError::domain)?;
    Ok(dynamics)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let seed = cli.seed;
    let load = |p: &Path| load_graph(p, cli.allow_disconnected);
    match &cli.command {
        Command::Analyze { graph, class } => {
            let LoadedGraph { graph: g, .. } = load(graph)?;
            let report = analyze(&g, *class).map_err(CliError::domain)?;
            let tree = if g.is_tree() { tree_verdict(&g).ok() } else { None };
            let table = table::analyze(&report);
            let config = RunConfig {
                command: "analyze",
                inputs: inputs(&[graph]),
                class: Some(*class),
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, AnalyzeResult { report, tree }, table))
        }
        Command::Paths { graph, from, to } => {
            let LoadedGraph { graph: g, .. } = load(graph)?;
            let pair = menger(&g, &node_set(from), &node_set(to), None).map_err(CliError::domain)?;
            let result = PathsResult {
                count: pair.family.len(),
                family: pair.family,
                disconnecting_set: pair.cut,
            };
            let table = table::paths(&result.family, &result.disconnecting_set);
            let config = RunConfig {
                command: "paths",
                inputs: inputs(&[graph]),
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, result, table))
        }
        Command::Delays { graph, scale } => {
            let LoadedGraph { graph: g, delays } = load(graph)?;
            let (origin, delays) = match delays {
                Some(d) => ("given", d),
                None => ("assigned", assign_path_independent_delays(&g, *scale)),
            };
            let table = verify_path_independence(&g, &delays);
            let rendered = table::delays(origin, &delays, &table);
            let result = DelaysResult {
                origin,
                path_independent: table.is_path_independent(),
                delays,
                table,
            };
            let config = RunConfig {
                command: "delays",
                inputs: inputs(&[graph]),
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, result, rendered))
        }
        Command::Rank {
            graph,
            rows,
            cols,
            degree,
            samples,
        } => {
            let LoadedGraph { graph: g, .. } = load(graph)?;
            let probe: RankProbe = generic_rank(&g, *degree, &node_set(rows), &node_set(cols), *samples, seed, COEFF_BOUND)
                .map_err(CliError::domain)?;
            let table = table::rank(&probe);
            let config = RunConfig {
                command: "rank",
                inputs: inputs(&[graph]),
                degree: Some(*degree),
                samples: Some(*samples),
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, probe, table))
        }
        Command::Certify {
            graph,
            node,
            maxdeg,
            degree,
            dynamics,
            kind,
            permutation,
            psi,
            replays,
        } => {
            let LoadedGraph { graph: g, .. } = load(graph)?;
            let additive = *kind == CertifyKind::Additive;
            let dyn_ = load_dynamics(dynamics.as_deref(), &g, *degree, seed, additive)?;
            let options = VerifyOptions {
                replays: *replays,
                seed: derive_seed(seed, STREAM_REPLAYS, 0),
                delay_scale: 1,
            };
            let certificate = match kind {
                CertifyKind::Implicit => Some(node_nonident_certificate(&g, &dyn_, *node, *maxdeg, options)),
                CertifyKind::Swap => Some(swap_witness(&g, &dyn_, *node, permutation, options)),
                CertifyKind::Source => {
                    let psi = match psi {
                        Some(p) => read_json(p)?,
                        None => Polynomial::var(1, 0),
                    };
                    Some(source_perturbation_witness(&g, &dyn_, *node, &psi, options))
                }
                CertifyKind::Additive => additive_ambiguity_search(&g, &dyn_, *node, *maxdeg, options).transpose(),
            }
            .transpose()
            .map_err(CliError::domain)?;
            let table = table::certificate(*node, certificate.as_ref());
            let mut paths: Vec<&Path> = vec![graph];
            paths.extend(dynamics.as_deref());
            paths.extend(psi.as_deref());
            let config = RunConfig {
                command: "certify",
                inputs: inputs(&paths),
                degree: dynamics.is_none().then_some(*degree),
                seed,
                maxdeg: Some(*maxdeg),
                node: Some(*node),
                kind: Some(*kind),
                ..RunConfig::default()
            };
            Ok(render(
                config,
                CertifyResult {
                    dynamics: dyn_,
                    certificate,
                },
                table,
            ))
        }
        Command::Simulate {
            graph,
            dynamics,
            delays,
            steps,
            inputs: schedule_path,
            degree,
        } => {
            let LoadedGraph { graph: g, delays: given } = load(graph)?;
            let dyn_ = load_dynamics(dynamics.as_deref(), &g, *degree, seed, false)?;
            let delay_path = delays.as_deref().filter(|d| *d != "auto").map(PathBuf::from);
            let delays = match (delays.as_deref(), given, &delay_path) {
                (Some("auto"), _, _) | (None, None, _) => assign_path_independent_delays(&g, 1),
                (None, Some(d), _) => d,
                (Some(_), _, Some(p)) => {
                    let d: DelayAssignment = read_json(p)?;
                    d.check(&g).map_err(CliError::domain)?;
                    d
                }
                (Some(_), _, None) => unreachable!("non-auto delay argument is a path"),
            };
            let schedule = match schedule_path {
                Some(p) => {
                    let s: InputSchedule = read_json(p)?;
                    if steps.is_some_and(|n| n != s.horizon) {
                        return Err(CliError::Usage(format!(
                            "--steps {} differs from the schedule horizon {}",
                            steps.unwrap_or_default(),
                            s.horizon
                        )));
                    }
                    s
                }
                None => InputSchedule::random(
                    &g,
                    steps.unwrap_or_else(|| default_horizon(&g, &delays)),
                    derive_seed(seed, STREAM_INPUTS, 0),
                    COEFF_BOUND,
                ),
            };
            let trajectory = simulate(&g, &dyn_, &delays, &schedule).map_err(CliError::domain)?;
            for w in trajectory.warnings() {
                eprintln!("warning: {w}");
            }
            let table = table::trajectory(&g, &trajectory);
            let mut paths: Vec<&Path> = vec![graph];
            paths.extend(dynamics.as_deref());
            paths.extend(delay_path.as_deref());
            paths.extend(schedule_path.as_deref());
            let config = RunConfig {
                command: "simulate",
                inputs: inputs(&paths),
                degree: dynamics.is_none().then_some(*degree),
                seed,
                ..RunConfig::default()
            };
            Ok(render(
                config,
                SimulateResult {
                    delays,
                    schedule,
                    trajectory,
                },
                table,
            ))
        }
        Command::Suggest { graph } => {
            let LoadedGraph { graph: g, .. } = load(graph)?;
            let before = analyze(&g, FunctionClass::Polynomial).map_err(CliError::domain)?;
            let suggested = excitation_suggestion(&g);
            let after_graph = g.with_excited(suggested.clone()).map_err(CliError::domain)?;
            let after = analyze(&after_graph, FunctionClass::Polynomial).map_err(CliError::domain)?;
            let result = SuggestResult {
                excited: g.excited().iter().copied().collect(),
                added: suggested.difference(g.excited()).copied().collect(),
                suggested: suggested.into_iter().collect(),
                verdict_before: before.network,
                verdict_after: after.network,
            };
            let table = table::suggest(&result.excited, &result.suggested, result.verdict_after);
            let config = RunConfig {
                command: "suggest",
                inputs: inputs(&[graph]),
                class: Some(FunctionClass::Polynomial),
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, result, table))
        }
        Command::Examples { name: Some(name) } => {
            let graph = fixtures::example(name).ok_or_else(|| {
                let known: Vec<&str> = fixtures::bundled_examples().iter().map(|(n, _)| *n).collect();
                CliError::Usage(format!("unknown example {name:?}; known: {}", known.join(", ")))
            })?;
            let mut json = serde_json::to_string(&graph).expect("graph serializes");
            json.push('\n');
            Ok(Output {
                table: table::graph(name, &graph),
                json,
            })
        }
        Command::Examples { name: None } => {
            let entries: Vec<ExampleEntry> = fixtures::bundled_examples()
                .into_iter()
                .map(|(name, g)| ExampleEntry {
                    name,
                    n: g.n,
                    edges: g.edges.len(),
                    excited: g.excited.iter().copied().collect(),
                })
                .collect();
            let table = entries
                .iter()
                .map(|e| format!("{:<6} n={:<3} edges={:<3} excited={:?}\n", e.name, e.n, e.edges, e.excited))
                .collect();
            let config = RunConfig {
                command: "examples",
                seed,
                ..RunConfig::default()
            };
            Ok(render(config, entries, table))
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("NETIDENT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("NETIDENT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(cli: &Cli, output: Output) -> Result<(), CliError> {
    if let Some(path) = &cli.output {
        std::fs::write(path, &output.json).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let text = match cli.format {
        Format::Table => &output.table,
        Format::Json if cli.output.is_none() => &output.json,
        Format::Json => return Ok(()),
    };
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(&cli)).and_then(|out| emit(&cli, out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
