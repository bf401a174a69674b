//! Command-line front end. Every subcommand runs one pipeline stage against
//! the work directory.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::AtlasConfig;
use crate::corpus::{FixtureFetcher, SourceConfig, SourceDb};
use crate::graph::export_graph;
use crate::netanalysis::{render_tables, AnalysisReport, ScoreFormula};
use crate::pipeline::{self, Pipeline};
use crate::provider::Mode;
use crate::service::api::{serve, AppState};
use crate::service::SnapshotSource;

type CliResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Build, analyze and serve a findings atlas")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Work directory holding every artifact.
    #[arg(short, long, global = true)]
    pub work_dir: Option<PathBuf>,
    /// Provider mode: replay from the cache or call live backends.
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read source exports into corpus.jsonl.
    Ingest(IngestArgs),
    /// Apply the abstract and publication-type filters, then deduplicate.
    Filter,
    /// Extract findings and triplets.
    Extract,
    /// Embed keys and merge near-synonyms.
    Merge(MergeArgs),
    /// Group keys into named thematic clusters.
    Cluster(ClusterArgs),
    /// Assemble the atlas graph.
    BuildGraph(BuildArgs),
    /// Communities, centrality and structural holes.
    Analyze(AnalyzeArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write the graph or its tables.
    Export(ExportArgs),
    /// Every stage from ingest to analyze.
    Run,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Source of `--input`; replaces the configured sources.
    #[arg(long, requires = "input")]
    pub source: Option<SourceDb>,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_pts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep placeholder names instead of asking the provider.
    #[arg(long)]
    pub no_naming: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Minimum number of entities sharing a feature before it gets its own node.
    #[arg(long)]
    pub threshold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub score_formula: Option<ScoreFormula>,
    /// Rows printed per table.
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub addr: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Json,
    NodesCsv,
    EdgesCsv,
    MetricsCsv,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: ExportFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// File, then `ATLAS_*` variables, then flags.
pub fn resolve_config(cli: &Cli) -> Result<AtlasConfig, Box<dyn std::error::Error>> {
    let mut config = match &cli.config {
        Some(path) => AtlasConfig::load(path)?,
        None => AtlasConfig::default(),
    };
    config.apply_env(std::env::vars())?;
    if let Some(dir) = &cli.work_dir {
        config.work_dir = dir.clone();
    }
    if let Some(mode) = cli.mode {
        config.provider.mode = mode;
    }
    match &cli.command {
        Command::Ingest(a) => {
            if let Some(input) = &a.input {
                config.corpus.sources = vec![SourceConfig {
                    source: a.source.unwrap_or(SourceDb::Fixture),
                    path: Some(input.clone()),
                    query_terms: Vec::new(),
                }];
            }
        }
        Command::Merge(a) => {
            set(&mut config.semantics.eps, a.eps);
            set(&mut config.semantics.min_pts, a.min_pts);
        }
        Command::Cluster(a) => {
            set(&mut config.semantics.k_min, a.k_min);
            set(&mut config.semantics.k_max, a.k_max);
            set(&mut config.semantics.seed, a.seed);
            config.semantics.name_clusters &= !a.no_naming;
        }
        Command::BuildGraph(a) => set(&mut config.graph.threshold, a.threshold),
        Command::Analyze(a) => {
            set(&mut config.analysis.seed, a.seed);
            set(&mut config.analysis.score_formula, a.score_formula);
            set(&mut config.analysis.top_k, a.top_k);
        }
        Command::Serve(a) => set(&mut config.service.addr, a.addr.clone()),
        _ => {}
    }
    Ok(config)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn run(cli: Cli) -> CliResult {
    let config = resolve_config(&cli)?;
    let p = Pipeline::from_config(config)?;
    match cli.command {
        Command::Ingest(_) => {
            let (records, errors) = p.ingest(&FixtureFetcher)?;
            println!("ingested {records} records ({errors} errors)");
        }
        Command::Filter => {
            let r = p.filter()?;
            println!("kept {} of {} records", r.kept, r.total());
        }
        Command::Extract => {
            let r = p.extract()?;
            println!(
                "{} findings, {} triplets, {} notes, {} quarantined",
                r.findings.len(),
                r.triplets.len(),
                r.notes.len(),
                r.quarantine.len()
            );
        }
        Command::Merge(_) => {
            let m = p.merge()?;
            println!("{} keys, {} merge clusters", m.embeddings.len(), m.map.clusters.len());
        }
        Command::Cluster(_) => {
            let c = p.cluster()?;
            for s in &c.selections {
                println!("{}: {} keys, k = {}", s.entity_type, s.n, s.k);
            }
        }
        Command::BuildGraph(_) => {
            let g = p.build_graph()?;
            println!("{} nodes, {} edges", g.nodes.len(), g.edges.len());
        }
        Command::Analyze(_) => {
            let r = p.analyze()?;
            print!("{}", render_tables(&r, p.config.analysis.top_k));
        }
        Command::Serve(_) => {
            let source = SnapshotSource {
                graph: p.workspace.path(pipeline::GRAPH),
                analysis: Some(p.workspace.path(pipeline::ANALYSIS)),
            };
            let snapshot = source.load()?;
            let addr = p.config.service.addr.parse()?;
            let state = Arc::new(AppState::new(snapshot, Some(source), p.config.service.admin_token.clone()));
            serve(addr, state)?;
        }
        Command::Export(a) => {
            let bytes = export(&p, a.format)?;
            match a.out {
                Some(path) => std::fs::write(path, bytes)?,
                None => std::io::stdout().write_all(&bytes)?,
            }
        }
        Command::Run => {
            let s = p.run_all(&FixtureFetcher)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
    }
    Ok(())
}

pub fn export(p: &Pipeline, format: ExportFormat) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
    let graph = p.workspace.read_graph()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match format {
        ExportFormat::Json => return Ok(export_graph(&graph)),
        ExportFormat::NodesCsv => {
            w.write_record(["id", "entity_type", "label", "thematic_cluster", "is_split_feature"])?;
            for n in &graph.nodes {
                w.write_record([
                    n.id.as_str(),
                    n.entity_type.as_str(),
                    &n.label,
                    n.thematic_cluster.as_deref().unwrap_or(""),
                    if n.is_split_feature { "true" } else { "false" },
                ])?;
            }
        }
        ExportFormat::EdgesCsv => {
            w.write_record(["id", "source", "target", "relationship", "net_outcome", "weight", "is_self_loop"])?;
            for e in &graph.edges {
                w.write_record([
                    e.id.as_str(),
                    &e.source,
                    &e.target,
                    e.relationship.as_str(),
                    e.net_outcome.as_str(),
                    &e.weight.to_string(),
                    if e.is_self_loop { "true" } else { "false" },
                ])?;
            }
        }
        ExportFormat::MetricsCsv => {
            let report: AnalysisReport = p.workspace.read_json(pipeline::ANALYSIS)?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                "id",
                "community",
                "degree",
                "betweenness",
                "constraint",
                "effective_size",
                "structural_hole_score",
            ])?;
            for m in &report.nodes {
                w.write_record([
                    m.id.clone(),
                    m.community.to_string(),
                    m.degree.to_string(),
                    m.betweenness.to_string(),
                    opt(m.constraint),
                    opt(m.effective_size),
                    opt(m.structural_hole_score),
                ])?;
            }
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Entry point of the `atlas` binary; returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_tree_is_consistent() {
        Cli::command().debug_assert();
        let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
        for want in ["ingest", "filter", "extract", "merge", "cluster", "build-graph", "analyze", "serve", "export"] {
            assert!(names.iter().any(|n| n == want), "missing {want}");
        }
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from(["atlas", "-w", "/tmp/x", "build-graph", "--threshold", "9"]);
        let c = resolve_config(&cli).unwrap();
        assert_eq!(c.graph.threshold, 9);
        assert_eq!(c.work_dir, PathBuf::from("/tmp/x"));
        let cli = Cli::parse_from(["atlas", "analyze", "--score-formula", "size-over-constraint"]);
        assert_eq!(resolve_config(&cli).unwrap().analysis.score_formula, ScoreFormula::SizeOverConstraint);
    }
}
