use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use d2dshare_cli::config::{apply_config, ExperimentSpec, Scale};
use d2dshare_cli::output::{emit_csv, render_csv};
use d2dshare_cli::recipes::{recipe, RECIPE_NAMES};
use d2dshare_cli::runner::{run_experiment, strategy_name};

/// Slotted Monte Carlo experiments for D2D transmission over shared
/// cellular uplink spectrum.
#[derive(Debug, Parser)]
#[command(name = "d2dshare", version, about)]
struct Args {
    /// Configuration file (flat `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed for topology and fading substreams.
    #[arg(long)]
    seed: Option<u64>,

    /// Run size: `desk` (500 topologies x 10^4 slots) or `paper`
    /// (5*10^3 topologies x 10^3 slots).
    #[arg(long, value_parser = parse_scale)]
    scale: Option<Scale>,

    /// Worker threads for the topology-parallel sweep (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Preset sweep reproducing one experiment figure
    /// (fig4, fig5, fig6, fig7, fig8, fig9).
    #[arg(long, value_parser = parse_recipe)]
    recipe: Option<ExperimentSpec>,
}

fn parse_scale(value: &str) -> Result<Scale, String> {
    match value {
        "desk" => Ok(Scale::Desk),
        "paper" => Ok(Scale::Paper),
        other => Err(format!("unknown scale `{other}` (expected desk or paper)")),
    }
}

fn parse_recipe(value: &str) -> Result<ExperimentSpec, String> {
    recipe(value).ok_or_else(|| {
        format!(
            "unknown recipe `{value}` (expected one of {})",
            RECIPE_NAMES.join(", ")
        )
    })
}

fn build_spec(args: &Args) -> Result<ExperimentSpec> {
    let mut spec = args.recipe.clone().unwrap_or_default();
    if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        spec = apply_config(&text, spec)?;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(scale) = args.scale {
        let (topologies, slots) = scale.sizes();
        spec.n_topologies = topologies;
        spec.slots_per_topology = slots;
    }
    if let Some(out) = &args.out {
        spec.out = Some(out.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn run() -> Result<bool> {
    let args = Args::parse();
    if let Some(threads) = args.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let spec = build_spec(&args)?;
    let rows = run_experiment(&spec);

    let mut all_ok = true;
    for row in &rows {
        if let Err(message) = &row.outcome {
            all_ok = false;
            eprintln!(
                "d2dshare: {} W={} xi_db={}: {message}",
                strategy_name(row.strategy),
                row.w,
                row.xi_db
            );
        }
    }
    match &spec.out {
        Some(path) => {
            emit_csv(&rows, path)?;
            eprintln!(
                "d2dshare: wrote {} rows to {}",
                rows.iter().filter(|r| r.outcome.is_ok()).count(),
                path.display()
            );
        }
        None => print!("{}", render_csv(&rows)),
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(error) => {
            eprintln!("d2dshare: {error:#}");
            ExitCode::FAILURE
        }
    }
}
