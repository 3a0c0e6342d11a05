//! `geoprobe`: build concept datasets, extract expert units, build and score
//! geographic-representation networks, and analyze generated text.
//!
//! Failures print one JSON object on stderr. Exit status 2 means a missing
//! input or invalid configuration, 1 means a stage failed.

mod commands;
mod config;
mod error;
mod stage;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use geoprobe_core::experts::TopKMode;
use geoprobe_core::georep::GraphChoice;

use crate::commands::Ctx;
use crate::config::{Overrides, PipelineConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopKArg {
    PerLayer,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphArg {
    Tree,
    Full,
}

#[derive(Debug, Parser)]
#[command(name = "geoprobe", version, about = "Probe language models for geographic representation")]
struct Cli {
    /// Pipeline configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Expert units kept per layer (or overall with `--topk-mode global`).
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, value_enum, global = true)]
    topk_mode: Option<TopKArg>,
    /// Graph the community detection runs on.
    #[arg(long, value_enum, global = true)]
    louvain_graph: Option<GraphArg>,
    /// Top-m cutoff for representation scores.
    #[arg(long, global = true)]
    rs_m: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a per-country concept dataset from raw news JSONL.
    BuildCorpus(commands::CorpusArgs),
    /// Rank units of activation dumps by average precision.
    ExtractExperts(commands::ExtractArgs),
    /// Similarity network, spanning tree and communities from expert sets.
    BuildNetwork(commands::NetworkArgs),
    /// Neighbourhood score of a network against real borders.
    ScoreNetwork(commands::ScoreArgs),
    /// Entity shares, distribution shape, representation scores and drift.
    AnalyzeGeneration(commands::GenerationArgs),
    /// Enumerate generation jobs with rendered prefixes.
    Plan(commands::PlanArgs),
    /// Write planted-structure dumps and borders for testing.
    SynthFixture(commands::FixtureArgs),
    /// Extract, build, score (and analyze generation if configured), then report.
    Run(commands::RunArgs),
    /// Hash every artifact under the output directory into manifest.json.
    Report,
    /// Check artifacts against manifest.json.
    Verify,
}

fn context(cli: &Cli) -> CliResult<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        k: cli.k,
        topk_mode: cli.topk_mode.map(|m| match m {
            TopKArg::PerLayer => TopKMode::PerLayer,
            TopKArg::Global => TopKMode::Global,
        }),
        louvain_graph: cli.louvain_graph.map(|g| match g {
            GraphArg::Tree => GraphChoice::Tree,
            GraphArg::Full => GraphChoice::Full,
        }),
        rs_m: cli.rs_m,
        jobs: cli.jobs,
        out: cli.out.clone(),
    });
    cfg.validate()?;
    let out = cfg.out_dir();
    Ok(Ctx { cfg, out })
}

fn dispatch(ctx: &Ctx, command: &Command) -> CliResult<serde_json::Value> {
    match command {
        Command::BuildCorpus(a) => commands::build_corpus(ctx, a),
        Command::ExtractExperts(a) => commands::extract(ctx, a),
        Command::BuildNetwork(a) => commands::build_network(ctx, a),
        Command::ScoreNetwork(a) => commands::score_network(ctx, a),
        Command::AnalyzeGeneration(a) => commands::analyze_generation(ctx, a),
        Command::Plan(a) => commands::plan(ctx, a),
        Command::SynthFixture(a) => commands::synth_fixture(ctx, a),
        Command::Run(a) => commands::run(ctx, a),
        Command::Report => commands::report(ctx),
        Command::Verify => commands::verify(ctx),
    }
}

fn execute(cli: &Cli) -> CliResult<serde_json::Value> {
    let ctx = context(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = ctx.cfg.params.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&ctx, &cli.command))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOPROBE_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
