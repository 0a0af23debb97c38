//! Run configurations. A config file is TOML holding one table named after
//! the subcommand, e.g. `[fit]`, with any subset of that command's keys.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparse_ising::baselines::NeighborhoodConfig;
use sparse_ising::cma::{LambdaGrid, SolverConfig};
use sparse_ising::eval::MseConvention;
use sparse_ising::lla::ScadConfig;
use sparse_ising::penalty::{PenaltyKind, SCAD_A};
use sparse_ising::pipeline::{Estimator, EstimatorConfig};
use sparse_ising::selection::BicScale;
use sparse_ising::stability::StabilityConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphConfig {
    /// Path over the first `edges + 1` nodes; `edges` defaults to `nodes - 1`.
    Chain {
        nodes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<usize>,
    },
    /// 4-neighbour grid.
    Lattice { rows: usize, cols: usize },
    /// Erdos-Renyi graph with the given expected degree.
    Random { nodes: usize, degree: f64, seed: u64 },
    /// Edges read from a 1-based `j,k` file.
    Custom { nodes: usize, edge_file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Gibbs,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub graph: GraphConfig,
    pub n: usize,
    /// Seed for the observations.
    pub seed: u64,
    /// Seed for the coupling values; defaults to `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_seed: Option<u64>,
    pub sampler: Sampler,
    pub burn_in: usize,
    pub thinning: usize,
    pub out: PathBuf,
    pub truth: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            graph: GraphConfig::Chain { nodes: 10, edges: None },
            n: 300,
            seed: 0,
            truth_seed: None,
            sampler: Sampler::Gibbs,
            burn_in: 1000,
            thinning: 10,
            out: "spins.csv".into(),
            truth: "truth.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub zero_one: bool,
    pub estimator: Estimator,
    pub edges: PathBuf,
    pub report: PathBuf,
    pub scad: ScadConfig,
    pub neighborhood: NeighborhoodConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            zero_one: false,
            estimator: Estimator::Lasso,
            edges: "estimate.csv".into(),
            report: "fit.json".into(),
            scad: ScadConfig::default(),
            neighborhood: NeighborhoodConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig { scad: self.scad.clone(), neighborhood: self.neighborhood.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub zero_one: bool,
    pub penalty: PenaltyKind,
    pub a: f64,
    pub bic: BicScale,
    pub out: PathBuf,
    pub grid: LambdaGrid,
    pub solver: SolverConfig,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            data: None,
            zero_one: false,
            penalty: PenaltyKind::Lasso,
            a: SCAD_A,
            bic: BicScale::Total,
            out: "path.csv".into(),
            grid: LambdaGrid::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityRunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub zero_one: bool,
    pub estimator: Estimator,
    pub frequencies: PathBuf,
    pub edges: PathBuf,
    pub report: PathBuf,
    pub stability: StabilityConfig,
    pub scad: ScadConfig,
    pub neighborhood: NeighborhoodConfig,
}

impl Default for StabilityRunConfig {
    fn default() -> Self {
        Self {
            data: None,
            zero_one: false,
            estimator: Estimator::Lasso,
            frequencies: "frequencies.csv".into(),
            edges: "stable_edges.csv".into(),
            report: "stability.json".into(),
            stability: StabilityConfig::default(),
            scad: ScadConfig::default(),
            neighborhood: NeighborhoodConfig::default(),
        }
    }
}

impl StabilityRunConfig {
    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig { scad: self.scad.clone(), neighborhood: self.neighborhood.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    /// Edge list of the estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    /// Spins on which to compute the model error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// 1-based rows of `test` to use; all rows when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_rows: Option<PathBuf>,
    pub zero_one: bool,
    /// Node count, when the edge lists do not carry one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub mse: MseConvention,
    pub report: PathBuf,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            estimate: None,
            truth: None,
            test: None,
            test_rows: None,
            zero_one: false,
            nodes: None,
            mse: MseConvention::UpperTriangle,
            report: "metrics.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RunConfig {
    Simulate(SimulateConfig),
    Fit(FitConfig),
    Path(PathConfig),
    Stability(StabilityRunConfig),
    Evaluate(EvaluateConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Fit(_) => "fit",
            RunConfig::Path(_) => "path",
            RunConfig::Stability(_) => "stability",
            RunConfig::Evaluate(_) => "evaluate",
        }
    }

    pub fn default_for(command: &str) -> CliResult<Self> {
        Ok(match command {
            "simulate" => RunConfig::Simulate(Default::default()),
            "fit" => RunConfig::Fit(Default::default()),
            "path" => RunConfig::Path(Default::default()),
            "stability" => RunConfig::Stability(Default::default()),
            "evaluate" => RunConfig::Evaluate(Default::default()),
            _ => return Err(CliError::Validation(format!("unknown command `{command}`"))),
        })
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// SHA-256 of the canonical JSON form. Thread count is not part of the
    /// config, so it never affects the hash.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("configs serialize");
        hex::encode(Sha256::digest(json))
    }

    /// Seed recorded in output headers.
    pub fn seed(&self) -> Option<u64> {
        match self {
            RunConfig::Simulate(c) => Some(c.seed),
            RunConfig::Stability(c) => Some(c.stability.seed),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<RunConfig> {
        let mut fit = FitConfig { data: Some("d.csv".into()), estimator: Estimator::Scad2StarStar, ..Default::default() };
        fit.scad.grid = LambdaGrid::Values(vec![0.5, 0.25, 0.1]);
        fit.neighborhood.tuning = sparse_ising::baselines::NodeTuning::Global;
        let mut stab = StabilityRunConfig { estimator: Estimator::NsauRelax, ..Default::default() };
        stab.stability.subsample_size = Some(40);
        stab.stability.seed = 9;
        vec![
            RunConfig::Simulate(Default::default()),
            RunConfig::Simulate(SimulateConfig {
                graph: GraphConfig::Random { nodes: 12, degree: 2.5, seed: 4 },
                truth_seed: Some(3),
                sampler: Sampler::Exact,
                ..Default::default()
            }),
            RunConfig::Simulate(SimulateConfig { graph: GraphConfig::Lattice { rows: 5, cols: 6 }, ..Default::default() }),
            RunConfig::Simulate(SimulateConfig {
                graph: GraphConfig::Custom { nodes: 4, edge_file: "g.txt".into() },
                ..Default::default()
            }),
            RunConfig::Fit(fit),
            RunConfig::Path(PathConfig { penalty: PenaltyKind::Scad, a: 3.0, ..Default::default() }),
            RunConfig::Stability(stab),
            RunConfig::Evaluate(EvaluateConfig {
                estimate: Some("e.csv".into()),
                test: Some("t.csv".into()),
                nodes: Some(7),
                mse: MseConvention::BothTriangles,
                ..Default::default()
            }),
        ]
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        for cfg in samples() {
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg, "{text}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn partial_files_take_defaults() {
        let cfg = RunConfig::from_toml("[fit]\ndata = \"x.csv\"\nestimator = \"nsai\"\n").unwrap();
        let RunConfig::Fit(fit) = cfg else { panic!() };
        assert_eq!(fit.estimator, Estimator::Nsai);
        assert_eq!(fit.scad, ScadConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[fit]\nestimater = \"lasso\"\n",
            "[fit.scad]\ngrid_size = 3\n",
            "[fit.scad.lla]\nmax_iters = 3\n",
            "[simulate.graph]\nkind = \"chain\"\nnodes = 3\nwidth = 2\n",
            "[stability.stability]\nrepeats = 4\n",
            "[evaluate]\ntruth = \"t\"\nextra = 1\n",
            "[plot]\n",
        ] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
        assert!(RunConfig::from_toml("[fit]\nestimator = \"ridge\"\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::Fit(FitConfig::default());
        let mut f = FitConfig::default();
        f.scad.lasso.tol = 1e-7;
        let b = RunConfig::Fit(f);
        assert_eq!(a.hash(), RunConfig::Fit(FitConfig::default()).hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
