//! Named estimators with their full BIC-tuned pipelines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{aggregate_nsai, aggregate_nsau, fit_neighborhood, relaxed_refit, NeighborhoodConfig, NeighborhoodFit};
use crate::cma::FitResult;
use crate::error::{IsingError, Result};
use crate::lla::{scad1_from, scad2_from, scad2_star_star, tuned_lasso, ScadConfig, TuningPass};
use crate::model::{CouplingVector, SpinDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "scad1")]
    Scad1,
    #[serde(rename = "scad2")]
    Scad2,
    #[serde(rename = "scad2starstar")]
    Scad2StarStar,
    #[serde(rename = "nsai")]
    Nsai,
    #[serde(rename = "nsau")]
    Nsau,
    #[serde(rename = "nsai-relax")]
    NsaiRelax,
    #[serde(rename = "nsau-relax")]
    NsauRelax,
}

impl Estimator {
    pub const ALL: [Estimator; 8] = [
        Estimator::Lasso,
        Estimator::Scad1,
        Estimator::Scad2,
        Estimator::Scad2StarStar,
        Estimator::Nsai,
        Estimator::Nsau,
        Estimator::NsaiRelax,
        Estimator::NsauRelax,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Lasso => "lasso",
            Estimator::Scad1 => "scad1",
            Estimator::Scad2 => "scad2",
            Estimator::Scad2StarStar => "scad2starstar",
            Estimator::Nsai => "nsai",
            Estimator::Nsau => "nsau",
            Estimator::NsaiRelax => "nsai-relax",
            Estimator::NsauRelax => "nsau-relax",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = IsingError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| IsingError::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub scad: ScadConfig,
    pub neighborhood: NeighborhoodConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimator: Estimator,
    pub beta: CouplingVector,
    /// Final composite-likelihood fit, absent for neighbourhood selection.
    pub fit: Option<FitResult>,
    pub passes: Vec<TuningPass>,
    pub lla_iters_used: Option<usize>,
    /// Per-node fits, present for neighbourhood selection.
    pub neighborhood: Option<NeighborhoodFit>,
    /// Every solve reached its tolerance.
    pub converged: bool,
}

fn from_neighborhood(estimator: Estimator, nf: NeighborhoodFit, beta: CouplingVector) -> Estimate {
    let converged = nf.nodes.iter().all(|n| n.converged);
    Estimate { estimator, beta, fit: None, passes: Vec::new(), lla_iters_used: None, neighborhood: Some(nf), converged }
}

/// Runs an estimator end to end, including its tuning.
pub fn estimate(data: &SpinDataset, estimator: Estimator, cfg: &EstimatorConfig) -> Result<Estimate> {
    use Estimator::*;
    match estimator {
        Lasso | Scad1 | Scad2 | Scad2StarStar => {
            let lasso = tuned_lasso(data, &cfg.scad)?;
            let result = match estimator {
                Lasso => {
                    let fit = lasso.fit.clone();
                    return Ok(Estimate {
                        estimator,
                        beta: fit.beta.clone(),
                        converged: fit.converged,
                        fit: Some(fit),
                        passes: vec![lasso.pass],
                        lla_iters_used: None,
                        neighborhood: None,
                    });
                }
                Scad1 => scad1_from(data, &lasso, &cfg.scad)?,
                Scad2 => scad2_from(data, &lasso, &cfg.scad)?,
                _ => scad2_star_star(data, &scad2_from(data, &lasso, &cfg.scad)?, &cfg.scad)?,
            };
            Ok(Estimate {
                estimator,
                beta: result.fit.beta.clone(),
                converged: result.fit.converged,
                fit: Some(result.fit),
                passes: result.passes,
                lla_iters_used: Some(result.lla_iters_used),
                neighborhood: None,
            })
        }
        Nsai | Nsau | NsaiRelax | NsauRelax => {
            let mut nf = fit_neighborhood(data, &cfg.neighborhood)?;
            if matches!(estimator, NsaiRelax | NsauRelax) {
                let refit = relaxed_refit(data, &nf.supports(), &cfg.neighborhood.refit)?;
                nf = refit;
            }
            let beta = match estimator {
                Nsai | NsaiRelax => aggregate_nsai(&nf),
                _ => aggregate_nsau(&nf),
            };
            Ok(from_neighborhood(estimator, nf, beta))
        }
    }
}
