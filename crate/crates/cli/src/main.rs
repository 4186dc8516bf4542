//! `semra`: semantic resource allocation over simulated channels.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use semra::config::{RunConfig, Solver};
use semra::pipeline::{build_codebook, run_sentence};
use semra::sweep::{
    compression_histogram, convergence_trace, histogram_csv, run_csv, run_sweep, sweep_csv,
    trace_csv,
};
use semra::{load_corpus, verify};
use semra_core::channel::ChannelModel;

#[derive(Parser)]
#[command(
    name = "semra",
    about = "Semantic token selection under bandwidth, reliability and redundancy constraints, \
             with channel simulation and reconstruction metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the channel SNR in dB (also collapses a sweep to this value).
    #[arg(long)]
    snr: Option<f64>,
    /// Override the channel model.
    #[arg(long, value_parser = parse_channel)]
    channel: Option<ChannelModel>,
    /// Override the solver: greedy | dual_ascent | kkt | brute.
    #[arg(long, value_parser = clap::value_parser!(Solver))]
    solver: Option<Solver>,
    /// Override the channel seed (also collapses the sweep seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for CSV results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write solve reports with multiplier trajectories as JSON.
    #[arg(long)]
    trace: bool,
    /// Corpus JSON path (overrides the config; default is the bundled
    /// synthetic corpus).
    #[arg(long)]
    corpus: Option<PathBuf>,
}

fn parse_channel(s: &str) -> Result<ChannelModel, String> {
    match s {
        "awgn" => Ok(ChannelModel::Awgn),
        "rayleigh" => Ok(ChannelModel::Rayleigh),
        other => Err(format!("unknown channel model {other:?} (awgn | rayleigh)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Process the corpus once at the configured channel point.
    Run(CommonArgs),
    /// Sweep the (SNR, seed) grid and aggregate metrics per grid point.
    Sweep(CommonArgs),
    /// Histogram of per-sentence compression ratios.
    Hist(CommonArgs),
    /// Per-iteration convergence series of a relaxation-based solver.
    Trace(CommonArgs),
    /// Run the oracle and property suite; exits nonzero on any failure.
    Verify,
}

fn build_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(snr) = args.snr {
        cfg.channel.snr_db = snr;
        cfg.sweep.snrs_db = vec![snr];
    }
    if let Some(model) = args.channel {
        cfg.channel.model = model;
    }
    if let Some(solver) = args.solver {
        cfg.selection.solver = solver;
    }
    if let Some(seed) = args.seed {
        cfg.channel.seed = seed;
        cfg.sweep.seeds = vec![seed];
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    if args.trace {
        cfg.output.trace = true;
    }
    if let Some(corpus) = &args.corpus {
        cfg.corpus.path = Some(corpus.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, content: &str) -> Result<()> {
    match &cfg.output.path {
        Some(path) => {
            std::fs::write(path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn trace_sidecar_path(cfg: &RunConfig) -> PathBuf {
    match &cfg.output.path {
        Some(path) => path.with_extension("solves.json"),
        None => PathBuf::from("solves.json"),
    }
}

fn cmd_run(args: &CommonArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let corpus = load_corpus(&cfg)?;
    let codebooks = build_codebook(&corpus)?;
    let channel = cfg.channel.channel_config();
    let mut outcomes = Vec::with_capacity(corpus.sentences.len());
    for (sentence, kg) in &corpus.sentences {
        let outcome = run_sentence(sentence, kg, &cfg, &codebooks, &channel, None)?;
        outcomes.push((sentence.id().to_string(), outcome));
    }
    if cfg.output.trace {
        let reports: Vec<_> = outcomes.iter().map(|(id, o)| (id, &o.solve)).collect();
        let path = trace_sidecar_path(&cfg);
        std::fs::write(&path, serde_json::to_string_pretty(&reports)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    emit(&cfg, &run_csv(&outcomes))
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let corpus = load_corpus(&cfg)?;
    if let Some(path) = &cfg.output.path {
        // fail on an unwritable target before computing anything
        std::fs::write(path, "")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let points = run_sweep(&corpus, &cfg)?;
    let rows: Vec<_> = points.iter().map(|p| p.to_row()).collect();
    emit(&cfg, &sweep_csv(&rows))
}

fn cmd_hist(args: &CommonArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let corpus = load_corpus(&cfg)?;
    let buckets = compression_histogram(&corpus, &cfg)?;
    emit(&cfg, &histogram_csv(&buckets))
}

fn cmd_trace(args: &CommonArgs) -> Result<()> {
    let cfg = build_config(args)?;
    if !matches!(cfg.selection.solver, Solver::DualAscent | Solver::Kkt) {
        bail!("trace requires --solver dual_ascent or --solver kkt");
    }
    let corpus = load_corpus(&cfg)?;
    let report = convergence_trace(&corpus, &cfg)?;
    if cfg.output.trace {
        let path = trace_sidecar_path(&cfg);
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    emit(&cfg, &trace_csv(&report))
}

fn cmd_verify() -> Result<ExitCode> {
    let outcomes = verify::run_all();
    let mut all_passed = true;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        all_passed &= outcome.passed;
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(args).map(|()| ExitCode::SUCCESS),
        Command::Hist(args) => cmd_hist(args).map(|()| ExitCode::SUCCESS),
        Command::Trace(args) => cmd_trace(args).map(|()| ExitCode::SUCCESS),
        Command::Verify => cmd_verify(),
    };
    match result {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}
