//! Plain-text views of the reports.

use std::fmt::Write;

use netident_core::certificates::{Certificate, Evidence};
use netident_core::delays::{DelayTable, PairDelay};
use netident_core::identifiability::{IdentifiabilityReport, Verdict};
use netident_core::network::RankProbe;
use netident_core::rational::format_rational;
use netident_core::simulator::Trajectory;
use netident_core::{DelayAssignment, Digraph, DisconnectingSet, NodeId, PathFamily, ValidatedDigraph};

fn list(nodes: impl IntoIterator<Item = NodeId>) -> String {
    let parts: Vec<String> = nodes.into_iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::GenericallyIdentifiable => "identifiable",
        Verdict::UnknownConjectured => "unknown (conjectured not)",
        Verdict::NotDecidedBySufficiency => "not decided",
        Verdict::NotIdentifiable => "not identifiable",
    }
}

pub fn analyze(report: &IdentifiabilityReport) -> String {
    let mut out = String::new();
    writeln!(out, "{:>4}  {:<12} {:>5}  {:<26} evidence", "node", "in", "paths", "verdict").unwrap();
    for r in &report.nodes {
        let evidence = match (&r.witness, &r.deficiency) {
            (Some(w), _) if !w.paths.is_empty() => {
                let paths: Vec<String> = w.paths.iter().map(|p| list(p.iter().copied())).collect();
                paths.join(" ")
            }
            (_, Some(d)) => format!("cut {}", list(d.nodes.iter().copied())),
            _ => String::new(),
        };
        writeln!(
            out,
            "{:>4}  {:<12} {:>5}  {:<26} {}",
            r.node,
            list(r.in_neighbors.iter().copied()),
            r.disjoint_paths,
            verdict(r.verdict),
            evidence
        )
        .unwrap();
    }
    writeln!(out, "network: {}", verdict(report.network)).unwrap();
    for v in &report.source_violations {
        writeln!(out, "unexcited source {} affects {}", v.source, list(v.affected.iter().copied())).unwrap();
    }
    for a in report.advisories.iter().chain(&report.measurement_notes) {
        writeln!(out, "note: node {}: {}", a.node, a.message).unwrap();
    }
    out
}

pub fn paths(family: &PathFamily, cut: &DisconnectingSet) -> String {
    let mut out = format!(
        "{} vertex-disjoint paths from {} to {}\n",
        family.len(),
        list(family.sources.iter().copied()),
        list(family.targets.iter().copied())
    );
    for p in &family.paths {
        let hops: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(out, "  {}", hops.join(" -> ")).unwrap();
    }
    writeln!(out, "minimum disconnecting set: {}", list(cut.nodes.iter().copied())).unwrap();
    out
}

pub fn delays(origin: &str, delays: &DelayAssignment, table: &DelayTable) -> String {
    let mut out = format!("delays ({origin}):\n");
    for ((to, from), m) in delays.iter() {
        writeln!(out, "  {from} -> {to}: {m}").unwrap();
    }
    for e in &table.pairs {
        match &e.result {
            PairDelay::Uniform { t } => writeln!(out, "  T[{},{}] = {t}", e.to, e.from).unwrap(),
            PairDelay::Conflict {
                shortest_total,
                longest_total,
                ..
            } => writeln!(
                out,
                "  T[{},{}] conflicting: totals {shortest_total} and {longest_total}",
                e.to, e.from
            )
            .unwrap(),
        }
    }
    let status = if table.is_path_independent() {
        "path-independent"
    } else {
        "not path-independent"
    };
    writeln!(out, "{status}").unwrap();
    out
}

pub fn rank(probe: &RankProbe) -> String {
    format!(
        "rows {} cols {} degree {} samples {}\nranks {:?}\ngeneric rank {} (vertex-disjoint paths {})\ndegenerate samples {:?}\n",
        list(probe.rows.iter().copied()),
        list(probe.cols.iter().copied()),
        probe.degree,
        probe.samples,
        probe.ranks,
        probe.generic_rank,
        probe.vertex_disjoint_paths,
        probe.degenerate
    )
}

pub fn certificate(node: NodeId, cert: Option<&Certificate>) -> String {
    let Some(cert) = cert else {
        return format!("node {node}: no additive perturbation found\n");
    };
    let mut out = format!("node {} inputs {}\n", cert.node, list(cert.inputs.iter().copied()));
    writeln!(out, "phi       = {}", cert.phi).unwrap();
    writeln!(out, "phi_tilde = {}", cert.phi_tilde).unwrap();
    match &cert.evidence {
        Evidence::Swap { permutation } => {
            writeln!(out, "swap to {}", list(permutation.iter().copied())).unwrap();
        }
        Evidence::SourcePerturbation { source, psi } => {
            writeln!(out, "perturbation {psi} through unexcited source {source}").unwrap();
        }
        Evidence::Implicitization {
            disconnecting_set,
            degree,
            bound,
            ..
        } => {
            writeln!(
                out,
                "relation of degree {degree} over the outputs of {} (guaranteed by degree {bound})",
                list(disconnecting_set.iter().copied())
            )
            .unwrap();
        }
        Evidence::AdditiveAmbiguity { degree, .. } => {
            writeln!(out, "additive relation of degree {degree}").unwrap();
        }
    }
    if let Some(v) = &cert.verification {
        writeln!(
            out,
            "verified: {} measured functions, {} replays, digest {}",
            v.symbolic_nodes.len(),
            v.replays,
            v.digest
        )
        .unwrap();
    }
    out
}

pub fn trajectory(graph: &ValidatedDigraph, t: &Trajectory) -> String {
    let mut out = String::from("   k");
    for v in graph.nodes() {
        write!(out, " {:>12}", format!("y{v}")).unwrap();
    }
    out.push('\n');
    for k in 0..=t.horizon {
        write!(out, "{k:>4}").unwrap();
        for v in graph.nodes() {
            write!(out, " {:>12}", format_rational(t.output(v, k))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn suggest(excited: &[NodeId], suggested: &[NodeId], after: Verdict) -> String {
    format!(
        "excited {}\nsuggested {}\nverdict with suggestion: {}\n",
        list(excited.iter().copied()),
        list(suggested.iter().copied()),
        verdict(after)
    )
}

pub fn graph(name: &str, g: &Digraph) -> String {
    let mut out = format!("{name}: n={} excited {}\n", g.n, list(g.excited.iter().copied()));
    for e in &g.edges {
        writeln!(out, "  {} -> {}", e.from, e.to).unwrap();
    }
    out
}
