//! Command-line flags. Every flag is optional and overrides the matching
//! config value.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use sparse_ising::baselines::NodeTuning;
use sparse_ising::cma::{LambdaGrid, SolverConfig};
use sparse_ising::eval::MseConvention;
use sparse_ising::lla::ScadConfig;
use sparse_ising::penalty::PenaltyKind;
use sparse_ising::pipeline::Estimator;
use sparse_ising::selection::BicScale;
use sparse_ising::baselines::NeighborhoodConfig;

use crate::config::{GraphConfig, RunConfig, Sampler};
use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "SPARSE_ISING_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sparse-ising", version, about = "Sparse Ising model estimation by penalized composite likelihood")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the resolved config to FILE and exit without running
    #[arg(long, global = true, value_name = "FILE")]
    pub write_config: Option<PathBuf>,
    /// Worker threads [default: one per core]
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Exit with status 3 when a solve does not converge
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random graph, coupling values and spin data
    Simulate(SimulateArgs),
    /// Fit one estimator and write its edge list and diagnostics
    Fit(FitArgs),
    /// Write the LASSO or SCAD solution path as a table
    Path(PathArgs),
    /// Stability selection by subsampling
    Stability(StabilityArgs),
    /// Compare an estimate with the truth and held-out data
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Path(_) => "path",
            Command::Stability(_) => "stability",
            Command::Evaluate(_) => "evaluate",
        }
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        match (self, cfg) {
            (Command::Simulate(a), RunConfig::Simulate(c)) => a.apply(c),
            (Command::Fit(a), RunConfig::Fit(c)) => {
                set(&mut c.data, a.data.clone().map(Some));
                c.zero_one |= a.zero_one;
                set(&mut c.estimator, a.estimator);
                set(&mut c.edges, a.edges.clone());
                set(&mut c.report, a.report.clone());
                a.tuning.apply(&mut c.scad, &mut c.neighborhood);
                Ok(())
            }
            (Command::Path(a), RunConfig::Path(c)) => {
                set(&mut c.data, a.data.clone().map(Some));
                c.zero_one |= a.zero_one;
                set(&mut c.penalty, a.penalty);
                set(&mut c.a, a.scad_a);
                set(&mut c.bic, a.bic);
                set(&mut c.out, a.out.clone());
                a.grid.apply(&mut c.grid);
                a.solver.apply(&mut c.solver);
                Ok(())
            }
            (Command::Stability(a), RunConfig::Stability(c)) => {
                set(&mut c.data, a.data.clone().map(Some));
                c.zero_one |= a.zero_one;
                set(&mut c.estimator, a.estimator);
                set(&mut c.stability.reps, a.reps);
                set(&mut c.stability.subsample_size, a.subsample.map(Some));
                set(&mut c.stability.pi_thr, a.pi_thr);
                set(&mut c.stability.seed, a.seed);
                set(&mut c.frequencies, a.frequencies.clone());
                set(&mut c.edges, a.edges.clone());
                set(&mut c.report, a.report.clone());
                a.tuning.apply(&mut c.scad, &mut c.neighborhood);
                Ok(())
            }
            (Command::Evaluate(a), RunConfig::Evaluate(c)) => {
                set(&mut c.estimate, a.estimate.clone().map(Some));
                set(&mut c.truth, a.truth.clone().map(Some));
                set(&mut c.test, a.test.clone().map(Some));
                set(&mut c.test_rows, a.test_rows.clone().map(Some));
                c.zero_one |= a.zero_one;
                set(&mut c.nodes, a.nodes.map(Some));
                set(&mut c.mse, a.mse);
                set(&mut c.report, a.report.clone());
                Ok(())
            }
            (cmd, cfg) => Err(CliError::Validation(format!(
                "config file is for `{}`, not `{}`",
                cfg.command(),
                cmd.name()
            ))),
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses a value by its config-file spelling.
fn serde_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKindArg {
    Chain,
    Lattice,
    Random,
    Custom,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Graph family
    #[arg(long, value_enum)]
    pub graph: Option<GraphKindArg>,
    /// Number of nodes (chain, random, custom)
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Number of chain edges [default: nodes - 1]
    #[arg(long)]
    pub chain_edges: Option<usize>,
    /// Lattice rows
    #[arg(long)]
    pub rows: Option<usize>,
    /// Lattice columns
    #[arg(long)]
    pub cols: Option<usize>,
    /// Expected degree of a random graph
    #[arg(long)]
    pub degree: Option<f64>,
    /// Seed for drawing a random graph
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// File of 1-based `j k` pairs for a custom graph
    #[arg(long)]
    pub edge_file: Option<PathBuf>,
    /// Number of observations
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Seed for the observations
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the coupling values [default: --seed]
    #[arg(long)]
    pub truth_seed: Option<u64>,
    /// Sampler: gibbs or exact
    #[arg(long, value_parser = serde_name::<Sampler>)]
    pub sampler: Option<Sampler>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    /// Spin CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truth edge list to write
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl SimulateArgs {
    fn apply(&self, c: &mut crate::config::SimulateConfig) -> CliResult<()> {
        c.graph = self.graph_config(&c.graph)?;
        set(&mut c.n, self.n);
        set(&mut c.seed, self.seed);
        set(&mut c.truth_seed, self.truth_seed.map(Some));
        set(&mut c.sampler, self.sampler);
        set(&mut c.burn_in, self.burn_in);
        set(&mut c.thinning, self.thinning);
        set(&mut c.out, self.out.clone());
        set(&mut c.truth, self.truth.clone());
        Ok(())
    }

    fn graph_config(&self, current: &GraphConfig) -> CliResult<GraphConfig> {
        let current_kind = match current {
            GraphConfig::Chain { .. } => GraphKindArg::Chain,
            GraphConfig::Lattice { .. } => GraphKindArg::Lattice,
            GraphConfig::Random { .. } => GraphKindArg::Random,
            GraphConfig::Custom { .. } => GraphKindArg::Custom,
        };
        let kind = self.graph.unwrap_or(current_kind);
        let base = if kind == current_kind { Some(current) } else { None };
        let missing = |flag: &str| CliError::Validation(format!("a {kind:?} graph needs --{flag}").to_lowercase());
        let stray = |flags: &[(&str, bool)]| -> CliResult<()> {
            match flags.iter().find(|(_, given)| *given) {
                Some((flag, _)) => Err(CliError::Validation(format!("--{flag} does not apply to {kind:?} graphs").to_lowercase())),
                None => Ok(()),
            }
        };
        Ok(match kind {
            GraphKindArg::Chain => {
                stray(&[("rows", self.rows.is_some()), ("cols", self.cols.is_some()), ("degree", self.degree.is_some()), ("graph-seed", self.graph_seed.is_some()), ("edge-file", self.edge_file.is_some())])?;
                let (n0, e0) = match base {
                    Some(GraphConfig::Chain { nodes, edges }) => (Some(*nodes), *edges),
                    _ => (None, None),
                };
                GraphConfig::Chain {
                    nodes: self.nodes.or(n0).ok_or_else(|| missing("nodes"))?,
                    edges: self.chain_edges.or(e0),
                }
            }
            GraphKindArg::Lattice => {
                stray(&[("nodes", self.nodes.is_some()), ("chain-edges", self.chain_edges.is_some()), ("degree", self.degree.is_some()), ("graph-seed", self.graph_seed.is_some()), ("edge-file", self.edge_file.is_some())])?;
                let (r0, c0) = match base {
                    Some(GraphConfig::Lattice { rows, cols }) => (Some(*rows), Some(*cols)),
                    _ => (None, None),
                };
                GraphConfig::Lattice {
                    rows: self.rows.or(r0).ok_or_else(|| missing("rows"))?,
                    cols: self.cols.or(c0).ok_or_else(|| missing("cols"))?,
                }
            }
            GraphKindArg::Random => {
                stray(&[("rows", self.rows.is_some()), ("cols", self.cols.is_some()), ("chain-edges", self.chain_edges.is_some()), ("edge-file", self.edge_file.is_some())])?;
                let (n0, d0, s0) = match base {
                    Some(GraphConfig::Random { nodes, degree, seed }) => (Some(*nodes), Some(*degree), Some(*seed)),
                    _ => (None, None, None),
                };
                GraphConfig::Random {
                    nodes: self.nodes.or(n0).ok_or_else(|| missing("nodes"))?,
                    degree: self.degree.or(d0).ok_or_else(|| missing("degree"))?,
                    seed: self.graph_seed.or(s0).unwrap_or(0),
                }
            }
            GraphKindArg::Custom => {
                stray(&[("rows", self.rows.is_some()), ("cols", self.cols.is_some()), ("chain-edges", self.chain_edges.is_some()), ("degree", self.degree.is_some()), ("graph-seed", self.graph_seed.is_some())])?;
                let (n0, f0) = match base {
                    Some(GraphConfig::Custom { nodes, edge_file }) => (Some(*nodes), Some(edge_file.clone())),
                    _ => (None, None),
                };
                GraphConfig::Custom {
                    nodes: self.nodes.or(n0).ok_or_else(|| missing("nodes"))?,
                    edge_file: self.edge_file.clone().or(f0).ok_or_else(|| missing("edge-file"))?,
                }
            }
        })
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of log-spaced grid points below lambda_max
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// Smallest grid value as a fraction of lambda_max
    #[arg(long)]
    pub grid_ratio: Option<f64>,
    /// Explicit decreasing grid, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["grid_count", "grid_ratio"])]
    pub lambdas: Option<Vec<f64>>,
}

impl GridArgs {
    fn apply(&self, grid: &mut LambdaGrid) {
        if let Some(v) = &self.lambdas {
            *grid = LambdaGrid::Values(v.clone());
        } else if self.grid_count.is_some() || self.grid_ratio.is_some() {
            let (c0, r0) = match (&*grid, LambdaGrid::default()) {
                (LambdaGrid::Auto { count, ratio }, _) => (*count, *ratio),
                (_, LambdaGrid::Auto { count, ratio }) => (count, ratio),
                _ => unreachable!("default grid is automatic"),
            };
            *grid = LambdaGrid::Auto { count: self.grid_count.unwrap_or(c0), ratio: self.grid_ratio.unwrap_or(r0) };
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Convergence tolerance on the largest coefficient change
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cap on full sweeps per solve
    #[arg(long)]
    pub max_sweeps: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, s: &mut SolverConfig) {
        set(&mut s.tol, self.tol);
        set(&mut s.max_sweeps, self.max_sweeps);
    }
}

/// Tuning flags shared by every estimator.
#[derive(Debug, Args)]
pub struct TuningArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// BIC scale: total or averaged
    #[arg(long, value_parser = serde_name::<BicScale>)]
    pub bic: Option<BicScale>,
    /// SCAD shape parameter
    #[arg(long)]
    pub scad_a: Option<f64>,
    /// Maximum LLA iterations
    #[arg(long)]
    pub max_lla_iters: Option<usize>,
    /// Neighbourhood tuning: per-node or global
    #[arg(long, value_parser = serde_name::<NodeTuning>)]
    pub node_tuning: Option<NodeTuning>,
}

impl TuningArgs {
    fn apply(&self, scad: &mut ScadConfig, nb: &mut NeighborhoodConfig) {
        self.grid.apply(&mut scad.grid);
        self.grid.apply(&mut nb.grid);
        self.solver.apply(&mut scad.lasso);
        self.solver.apply(&mut scad.lla.inner);
        self.solver.apply(&mut nb.solver);
        set(&mut scad.bic, self.bic);
        set(&mut nb.bic, self.bic);
        set(&mut scad.a, self.scad_a);
        set(&mut scad.lla.max_lla_iters, self.max_lla_iters);
        set(&mut nb.tuning, self.node_tuning);
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Spin CSV to fit
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Data are 0/1 rather than -1/+1
    #[arg(long)]
    pub zero_one: bool,
    /// lasso, scad1, scad2, scad2starstar, nsai, nsau, nsai-relax or nsau-relax
    #[arg(long, value_parser = serde_name::<Estimator>)]
    pub estimator: Option<Estimator>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Edge list to write
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// JSON diagnostics to write
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub zero_one: bool,
    /// lasso or scad
    #[arg(long, value_parser = serde_name::<PenaltyKind>)]
    pub penalty: Option<PenaltyKind>,
    /// SCAD shape parameter
    #[arg(long)]
    pub scad_a: Option<f64>,
    /// BIC scale: total or averaged
    #[arg(long, value_parser = serde_name::<BicScale>)]
    pub bic: Option<BicScale>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Path table to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub zero_one: bool,
    #[arg(long, value_parser = serde_name::<Estimator>)]
    pub estimator: Option<Estimator>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Number of subsamples
    #[arg(long)]
    pub reps: Option<usize>,
    /// Rows per subsample [default: half the data]
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Frequency an edge must exceed to be stable
    #[arg(long)]
    pub pi_thr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-pair selection frequencies to write
    #[arg(long)]
    pub frequencies: Option<PathBuf>,
    /// Stable edge list to write
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// JSON summary to write
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Edge list of the estimate
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Edge list of the true model
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Spin CSV for the model error
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// 1-based rows of the test file to use
    #[arg(long)]
    pub test_rows: Option<PathBuf>,
    #[arg(long)]
    pub zero_one: bool,
    /// Node count when the edge lists lack a `nodes=` header
    #[arg(long)]
    pub nodes: Option<usize>,
    /// MSE convention: upper-triangle or both-triangles
    #[arg(long, value_parser = serde_name::<MseConvention>)]
    pub mse: Option<MseConvention>,
    /// JSON metrics to write
    #[arg(long)]
    pub report: Option<PathBuf>,
}
