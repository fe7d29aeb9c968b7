use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "asis",
    version,
    about = "Adaptive SIS epidemics: thresholds, simulation and cutting-rate optimisation",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random graph as an edge list.
    Generate {
        #[command(subcommand)]
        model: GraphModel,
    },
    /// Spectral abscissa of the threshold matrix and the closed-form bound.
    Threshold(ThresholdArgs),
    /// Simulate one sample path.
    Simulate(SimulateArgs),
    /// Metastable number of infected nodes from two coupled-start runs.
    Metastable(MetastableArgs),
    /// Metastable estimates over a grid of infection and cutting rates.
    Sweep(SweepArgs),
    /// Cost-optimal rates guaranteeing a decay rate.
    Optimize(OptimizeArgs),
    /// Edge centralities, optionally next to an optimal allocation.
    Centrality(CentralityArgs),
    /// Exact transient moments for tiny graphs.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GraphModel {
    /// Erdos-Renyi G(n, p).
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = probability)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Barabasi-Albert preferential attachment.
    Ba {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m_attach: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not a probability in [0, 1]"))
    }
}

/// Homogeneous rates by flag, or a parameter file.
#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub psi: Option<f64>,
    /// Parameter JSON (homogeneous or heterogeneous form).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["beta", "delta", "phi", "psi"])]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initially infected nodes; all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    pub infected: Option<Vec<usize>>,
    /// Nodes reinfected at random on extinction.
    #[arg(long, default_value_t = 0)]
    pub reinfect: usize,
    /// Times at which to record the infected and present-link counts.
    #[arg(long, value_delimiter = ',')]
    pub observe: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub event_budget: u64,
    /// Write the event log as CSV.
    #[arg(long, value_name = "FILE")]
    pub events_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MetastableOptions {
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 10.0)]
    pub check_interval: f64,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub event_budget: u64,
    #[arg(long, default_value_t = 1)]
    pub reinfect: usize,
    /// Infected fraction of the sparse start.
    #[arg(long, default_value_t = 0.1)]
    pub initial_fraction: f64,
}

#[derive(Debug, Args)]
pub struct MetastableArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub options: MetastableOptions,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Base rates; infection and cutting rates come from the grids.
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub phi_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub options: MetastableOptions,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Cost model JSON.
    #[arg(long, value_name = "FILE", required_unless_present = "recipe")]
    pub model: Option<PathBuf>,
    /// Cutting-only model with delta = 0.1, beta = beta_factor * delta / rho,
    /// phi in [0, 4 beta], psi = beta, unit exponents, s = 2 phi_upper and
    /// decay rate 0.005.
    #[arg(long, conflicts_with = "model")]
    pub recipe: bool,
    #[arg(long, default_value_t = 1.0 / 1.1, requires = "recipe")]
    pub beta_factor: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    /// Write the centrality report CSV.
    #[arg(long, value_name = "FILE")]
    pub centrality_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Solution JSON written by `optimize`; adds the phi_ij column.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    /// Initially infected nodes (all links present); all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    pub infected: Option<Vec<usize>>,
    /// Also report exp(M t) applied to the initial moments.
    #[arg(long)]
    pub linear_bound: bool,
    #[command(flatten)]
    pub common: Common,
}
