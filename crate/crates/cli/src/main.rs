//! cyclex: builds query-expansion ground truths from an article/category
//! graph plus a document corpus, and selects expansion features from the
//! bounded-length cycles of each query's graph.

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{ConfigArgs, RunConfig};
use cyclex_core::kgraph::KnowledgeGraph;
use cyclex_core::linker::{normalize, Linker};

#[derive(Parser)]
#[command(
    name = "cyclex",
    version,
    about = "Cycle-based query expansion over an article/category graph",
    long_about = "Builds query-expansion ground truths from an article/category graph plus a \
                  document corpus, then mines bounded-length cycles in each query's graph to \
                  select expansion features.\n\nStages run in order: ingest, index, link, \
                  ground-truth, assemble, analyze, expand, report. Each stage reads the \
                  previous stage's artifacts from the output directory and is skipped when its \
                  outputs already exist."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the graph files and copy them into the output directory.
    IngestGraph(ConfigArgs),
    /// Extract document text into the corpus artifact.
    IngestCorpus(ConfigArgs),
    /// Build the positional phrase index.
    Index(ConfigArgs),
    /// Link documents to articles; with --text, link ad-hoc text instead.
    Link(LinkArgs),
    /// Solve each query's expansion set by local search.
    GroundTruth(ConfigArgs),
    /// Build per-query graphs and their component metrics.
    Assemble(ConfigArgs),
    /// Enumerate bounded-length cycles and their structure metrics.
    Analyze(AnalyzeArgs),
    /// Evaluate cycle-filtered feature configurations.
    Expand(ConfigArgs),
    /// Format the Markdown tables and figure series.
    Report(ConfigArgs),
    /// Run every stage in order.
    Run(ConfigArgs),
    /// Query a phrase index directly; prints rank, doc_id, score as TSV.
    Search(SearchArgs),
}

#[derive(Args)]
struct LinkArgs {
    #[command(flatten)]
    cfg: ConfigArgs,

    /// Link this text and print the matched article titles, one per line.
    #[arg(long)]
    text: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    cfg: ConfigArgs,

    /// Directory of assembled query graphs (default: <out_dir>/query_graphs).
    #[arg(long, value_name = "DIR")]
    query_graphs: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Phrase index artifact (index.json).
    #[arg(long, value_name = "FILE")]
    index: PathBuf,

    /// Search phrases, separated by semicolons.
    #[arg(long)]
    phrases: String,

    /// How many results to return.
    #[arg(short, long, default_value_t = 10)]
    r: usize,
}

fn init_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        // Fails harmlessly if a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn resolved(args: &ConfigArgs) -> Result<RunConfig> {
    let cfg = RunConfig::resolve(args)?;
    init_threads(&cfg);
    pipeline::write_manifest(&cfg)?;
    Ok(cfg)
}

fn link_adhoc(args: &LinkArgs, text: &str) -> Result<()> {
    // No artifacts are touched, so out_dir need not be configured.
    let mut with_out = args.cfg.clone();
    if with_out.out_dir.is_none() {
        with_out.out_dir = Some(PathBuf::from("."));
    }
    let cfg = RunConfig::resolve(&with_out)?;
    init_threads(&cfg);
    let graph = KnowledgeGraph::load(cfg.require("graph_nodes")?, cfg.require("graph_edges")?)?;
    let linker = Linker::build(&graph)?;
    for id in linker.link(text).articles {
        println!("{}", graph.node(id)?.label());
    }
    Ok(())
}

fn search(args: &SearchArgs) -> Result<()> {
    let index = pipeline::load_index(&args.index)?;
    let phrases: Vec<Vec<String>> = args
        .phrases
        .split(';')
        .map(normalize)
        .filter(|p| !p.is_empty())
        .collect();
    for (position, ranked) in index.search(&phrases, args.r)?.iter().enumerate() {
        println!("{}\t{}\t{}", position + 1, ranked.doc_id, ranked.score);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestGraph(args) => pipeline::ingest_graph(&resolved(&args)?),
        Command::IngestCorpus(args) => pipeline::ingest_corpus(&resolved(&args)?),
        Command::Index(args) => pipeline::index_stage(&resolved(&args)?),
        Command::Link(args) => match &args.text {
            Some(text) => link_adhoc(&args, text),
            None => pipeline::link_stage(&resolved(&args.cfg)?),
        },
        Command::GroundTruth(args) => pipeline::ground_truth_stage(&resolved(&args)?),
        Command::Assemble(args) => pipeline::assemble_stage(&resolved(&args)?),
        Command::Analyze(args) => {
            pipeline::analyze_stage(&resolved(&args.cfg)?, args.query_graphs.as_deref())
        }
        Command::Expand(args) => pipeline::expand_stage(&resolved(&args)?),
        Command::Report(args) => pipeline::report_stage(&resolved(&args)?),
        Command::Run(args) => {
            let cfg = RunConfig::resolve(&args)?;
            init_threads(&cfg);
            pipeline::run_all(&cfg)
        }
        Command::Search(args) => search(&args),
    }
}

fn main() {
    if let Err(err) = dispatch(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn stage_subcommands_are_all_present() {
        let cmd = Cli::command();
        let names: Vec<&str> = cmd.get_subcommands().map(|c| c.get_name()).collect();
        for expected in [
            "ingest-graph",
            "ingest-corpus",
            "index",
            "link",
            "ground-truth",
            "assemble",
            "analyze",
            "expand",
            "report",
            "run",
            "search",
        ] {
            assert!(names.contains(&expected), "missing subcommand {expected}");
        }
    }

    #[test]
    fn analyze_accepts_the_max_len_alias() {
        let cli = Cli::try_parse_from([
            "cyclex",
            "analyze",
            "--out-dir",
            "out",
            "--max-len",
            "4",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze(args) => assert_eq!(args.cfg.max_cycle_len, Some(4)),
            _ => unreachable!(),
        }
    }
}
