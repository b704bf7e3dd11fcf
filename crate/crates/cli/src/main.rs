//! `qtn`: run tree-network experiments and export their data.

mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qtn", version, about = "Quantum tree network routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One simulation run.
    Simulate(Run<SimulateArgs>),
    /// Success rate and latency against request rate.
    Sweep(Run<SweepArgs>),
    /// Ensemble response to a piecewise-constant request rate.
    Dynamic(Run<DynamicArgs>),
    /// Qubit overhead per end node across network sizes.
    Overhead(Run<OverheadArgs>),
    /// Node positions, channel lengths and repeater counts.
    Deploy(Run<DeployArgs>),
    /// Intersections of random straight routing paths.
    Mesh(Run<MeshArgs>),
}

#[derive(Args)]
struct Run<T: Args> {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    args: T,
}

#[derive(Args, Clone)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "qtn-out")]
    pub out: PathBuf,
    /// Also export SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON config file or a previous run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    /// Request rate per end node per cycle.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    /// Link success probability per slot per cycle.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pe: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coherence: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout: Option<u64>,
    /// Batch size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    warmup: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    measure: Option<u64>,
    /// Write per-cycle counters.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    series: bool,
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    /// End-node counts, powers of k.
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    end_nodes: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<u32>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pe: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coherence: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    warmup: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    measure: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    min_reps: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_reps: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_level: Option<f64>,
    /// Stop once the interval is narrower than this share of the range.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_width: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_level: Option<f64>,
}

fn parse_step(s: &str) -> Result<(u64, f64), String> {
    let (c, p) = s.split_once(':').ok_or_else(|| format!("step `{s}`: expected CYCLE:P"))?;
    Ok((c.trim().parse().map_err(|e| format!("step `{s}`: {e}"))?, p.trim().parse().map_err(|e| format!("step `{s}`: {e}"))?))
}

#[derive(Args, Serialize)]
pub struct DynamicArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pe: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coherence: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<u32>,
    /// Rate schedule, e.g. 0:0.001,10000:0.01,20000:0.001
    #[arg(long, value_delimiter = ',', value_parser = parse_step)]
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<Vec<(u64, f64)>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cycles: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<u32>,
    /// Bin width in cycles.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bin: Option<u64>,
}

#[derive(Args, Serialize)]
pub struct OverheadArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    /// 2d (surface covering) or sq (square lattice).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    /// css or surface.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    /// Nesting levels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<u32>,
    /// End-node range, e.g. 4^3:4^10.
    #[arg(long = "N-range")]
    #[serde(rename = "N_range", skip_serializing_if = "Option::is_none")]
    n_range: Option<String>,
    /// sparse or dense.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_th: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_0: Option<f64>,
    /// Fixed distance parameter instead of the solved one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prefactor: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct DeployArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    /// Elementary link length in km.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    l0: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct MeshArgs {
    /// Path counts.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    ne: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    reps: Option<u32>,
    /// Density grid sizes to dump.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<usize>>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(r) => commands::simulate(&r.common, &r.args),
        Command::Sweep(r) => commands::sweep(&r.common, &r.args),
        Command::Dynamic(r) => commands::dynamic(&r.common, &r.args),
        Command::Overhead(r) => commands::overhead(&r.common, &r.args),
        Command::Deploy(r) => commands::deploy(&r.common, &r.args),
        Command::Mesh(r) => commands::mesh(&r.common, &r.args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("qtn: {e}");
        std::process::exit(e.exit_code());
    }
}
