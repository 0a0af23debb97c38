//! Sparse Ising model estimation by penalized composite conditional likelihood.
//!
//! The estimators maximize `l_c(beta) - sum_{j<k} P_lambda(|beta_jk|)` where
//! `l_c` is the sum of the per-node conditional log-likelihoods, using
//! coordinate minorization ascent ([`cma`]) for LASSO and weighted LASSO, and
//! local linear approximation ([`lla`]) for SCAD. Neighbourhood selection
//! ([`baselines`]), BIC tuning ([`selection`]), stability selection
//! ([`stability`]), simulation ([`simulate`]) and metrics ([`eval`]) complete
//! the toolkit.
//!
//! Data-parallel work (grid points, nodes, subsampling replicates) goes
//! through [`par`], which uses rayon when the `parallel` feature is on.

pub mod baselines;
pub mod cma;
pub mod error;
pub mod eval;
mod kernel;
pub mod lla;
pub mod model;
pub mod par;
pub mod penalty;
pub mod pipeline;
pub mod selection;
pub mod simulate;
pub mod stability;

pub use cma::{fit_lasso, fit_path, fit_weighted_lasso, lambda_max, FitResult, LambdaGrid, SolutionPath, SolverConfig};
pub use error::{IsingError, Result};
pub use lla::{lla_cma, scad1, scad2, scad2_star_star, LlaConfig, ScadConfig, ScadPipelineResult, ScadVariant};
pub use model::{composite_grad, composite_loglik, conditional_probs, CouplingVector, SpinDataset};
pub use penalty::{Penalty, PenaltyKind};
pub use pipeline::{estimate, Estimate, Estimator, EstimatorConfig};
