//! Local linear approximation on top of the coordinate solver, and the
//! BIC-tuned SCAD pipelines built from it.
//!
//! Each LLA iteration freezes the weights `w_jk = P'_lambda(|beta_jk|)` at the
//! current iterate and solves the resulting weighted-LASSO problem. The SCAD
//! objective never decreases across iterations because the concave penalty
//! lies below its tangent.

use serde::{Deserialize, Serialize};

use crate::cma::{
    evaluate_fit, fit_path, fit_penalized, fit_weighted_lasso_observed, FitResult, LambdaGrid, Observer,
    SolverConfig, WeightRule,
};
use crate::error::{invalid, Result};
use crate::model::{composite_loglik, num_pairs, CouplingVector, SpinDataset};
use crate::par;
use crate::penalty::{Penalty, PenaltyKind, SCAD_A};
use crate::selection::{bic_select_fits, bic_select_with, BicReport, BicScale};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlaConfig {
    pub max_lla_iters: usize,
    pub inner: SolverConfig,
    /// Stop once consecutive iterates differ by less than this (max norm).
    pub stop_tol: f64,
}

impl Default for LlaConfig {
    fn default() -> Self {
        Self { max_lla_iters: 10, inner: SolverConfig::default(), stop_tol: 1e-6 }
    }
}

impl LlaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_lla_iters == 0 {
            return invalid("max_lla_iters must be at least 1");
        }
        if !(self.stop_tol > 0.0) {
            return invalid(format!("stop_tol must be positive, got {}", self.stop_tol));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlaOutcome {
    /// Final iterate; `objective` is the SCAD-penalized objective.
    pub fit: FitResult,
    /// Weighted-LASSO solves performed.
    pub iterations: usize,
    pub converged: bool,
    /// Weights of the last subproblem solved.
    pub weights: Vec<f64>,
    /// SCAD objective at the start and after every iteration.
    pub objective_trace: Vec<f64>,
}

/// Default multiplier for [`rate_lambda`].
pub const RATE_MULTIPLIER: f64 = 3.0;

/// `c * sqrt(ln(P) / N)`, `P` the number of pairs: a SCAD `lambda` on the
/// noise scale of the gradient at the truth, for use without a tuning pass.
pub fn rate_lambda(data: &SpinDataset, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("rate multiplier must be positive, got {c}"));
    }
    let p = num_pairs(data.num_nodes());
    if p < 2 {
        return invalid("rate lambda needs at least three nodes");
    }
    Ok(c * ((p as f64).ln() / data.num_obs() as f64).sqrt())
}

/// `P'_lambda(|beta_jk|)` for every pair.
pub fn scad_weights(penalty: &Penalty, beta: &CouplingVector) -> Vec<f64> {
    beta.values().iter().map(|b| penalty.deriv_unchecked(b.abs())).collect()
}

pub fn scad_objective(penalty: &Penalty, beta: &CouplingVector, data: &SpinDataset) -> Result<f64> {
    Ok(composite_loglik(beta, data)? - penalty.total(beta.values()))
}

pub fn lla_cma(data: &SpinDataset, penalty: &Penalty, init: &CouplingVector, cfg: &LlaConfig) -> Result<LlaOutcome> {
    lla_core(data, penalty, init, None, cfg, None)
}

/// As [`lla_cma`], reporting every inner coordinate update.
pub fn lla_cma_observed(
    data: &SpinDataset,
    penalty: &Penalty,
    init: &CouplingVector,
    cfg: &LlaConfig,
    observer: Observer<'_>,
) -> Result<LlaOutcome> {
    lla_core(data, penalty, init, None, cfg, Some(observer))
}

/// LLA starting from `init`, which is known to solve the weighted problem
/// with `solved_weights`. If the weights implied by `init` equal those, `init`
/// is already a fixed point and is returned without another solve.
pub fn lla_cma_from_solution(
    data: &SpinDataset,
    penalty: &Penalty,
    init: &FitResult,
    solved_weights: &[f64],
    cfg: &LlaConfig,
) -> Result<LlaOutcome> {
    let mut out = lla_core(data, penalty, &init.beta, Some(solved_weights), cfg, None)?;
    if out.iterations == 0 {
        out.fit.sweeps = init.sweeps;
        out.fit.converged = init.converged;
    }
    Ok(out)
}

fn lla_core(
    data: &SpinDataset,
    penalty: &Penalty,
    init: &CouplingVector,
    solved_weights: Option<&[f64]>,
    cfg: &LlaConfig,
    mut observer: Option<Observer<'_>>,
) -> Result<LlaOutcome> {
    if penalty.kind() != PenaltyKind::Scad {
        return invalid("LLA requires a SCAD penalty");
    }
    cfg.validate()?;
    data.check_nodes(init.num_nodes())?;

    let mut objective_trace = vec![scad_objective(penalty, init, data)?];
    let mut prev_weights: Option<Vec<f64>> = solved_weights.map(<[f64]>::to_vec);
    let mut current: Option<FitResult> = None;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let beta = current.as_ref().map_or(init, |f| &f.beta);
        let weights = scad_weights(penalty, beta);
        if prev_weights.as_deref() == Some(weights.as_slice()) {
            // the next subproblem is the one just solved
            converged = true;
            break;
        }
        if iterations == cfg.max_lla_iters {
            break;
        }
        let fit = match observer.as_mut() {
            Some(obs) => fit_weighted_lasso_observed(data, &weights, beta, &cfg.inner, Some(&mut **obs))?,
            None => fit_weighted_lasso_observed(data, &weights, beta, &cfg.inner, None)?,
        };
        iterations += 1;
        let delta = fit.beta.max_abs_diff(beta);
        objective_trace.push(scad_objective(penalty, &fit.beta, data)?);
        current = Some(fit);
        prev_weights = Some(weights);
        if delta < cfg.stop_tol {
            converged = true;
            break;
        }
    }

    let weights = prev_weights.unwrap_or_else(|| scad_weights(penalty, init));
    let mut fit = match current {
        Some(fit) => fit,
        None => evaluate_fit(data, init.clone(), &WeightRule::Fixed(&weights), penalty.lambda(), 0, true)?,
    };
    fit.objective = scad_objective(penalty, &fit.beta, data)?;
    fit.lambda = penalty.lambda();
    Ok(LlaOutcome { fit, iterations, converged, weights, objective_trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScadVariant {
    #[serde(rename = "scad1")]
    Scad1,
    #[serde(rename = "scad2")]
    Scad2,
    #[serde(rename = "scad2**")]
    Scad2StarStar,
}

/// One BIC tuning pass of a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPass {
    pub stage: String,
    pub chosen_lambda: f64,
    pub bic: BicReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadPipelineResult {
    pub variant: ScadVariant,
    pub fit: FitResult,
    pub chosen_lambda: f64,
    pub lla_iters_used: usize,
    /// Tuning passes in the order they ran, starting with the LASSO initializer.
    pub passes: Vec<TuningPass>,
    /// Weights of the last weighted subproblem (empty for SCAD1).
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScadConfig {
    pub grid: LambdaGrid,
    /// Solver for the LASSO initializer path.
    pub lasso: SolverConfig,
    pub lla: LlaConfig,
    pub a: f64,
    pub bic: BicScale,
}

impl Default for ScadConfig {
    fn default() -> Self {
        Self {
            grid: LambdaGrid::default(),
            lasso: SolverConfig::default(),
            lla: LlaConfig::default(),
            a: SCAD_A,
            bic: BicScale::Total,
        }
    }
}

/// BIC-tuned LASSO along the configured grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedLasso {
    pub fit: FitResult,
    pub pass: TuningPass,
    pub lambdas: Vec<f64>,
}

pub fn tuned_lasso(data: &SpinDataset, cfg: &ScadConfig) -> Result<TunedLasso> {
    let path = fit_path(data, PenaltyKind::Lasso, &cfg.grid, &cfg.lasso)?;
    let bic = bic_select_with(&path, data, cfg.bic)?;
    let fit = path.fits[bic.chosen].clone();
    let pass = TuningPass { stage: "lasso".into(), chosen_lambda: bic.chosen_lambda(), bic };
    Ok(TunedLasso { fit, pass, lambdas: path.lambdas })
}

/// Fits every grid point independently and tunes by BIC.
fn tune_over_grid<F>(
    data: &SpinDataset,
    lambdas: &[f64],
    scale: BicScale,
    stage: &str,
    fit_one: F,
) -> Result<(FitResult, Vec<f64>, TuningPass)>
where
    F: Fn(f64) -> Result<(FitResult, Vec<f64>)> + Sync + Send,
{
    let fits = par::map_indexed(lambdas.len(), |i| fit_one(lambdas[i])).into_iter().collect::<Result<Vec<_>>>()?;
    let bic = bic_select_fits(lambdas.iter().copied().zip(fits.iter().map(|(f, _)| &f.beta)), data, scale)?;
    let (fit, weights) = fits.into_iter().nth(bic.chosen).expect("chosen index in range");
    let pass = TuningPass { stage: stage.into(), chosen_lambda: bic.chosen_lambda(), bic };
    Ok((fit, weights, pass))
}

/// One LLA step at `penalty` from `init`.
fn one_step(data: &SpinDataset, penalty: &Penalty, init: &CouplingVector, cfg: &SolverConfig) -> Result<(FitResult, Vec<f64>)> {
    let weights = scad_weights(penalty, init);
    let mut fit = fit_weighted_lasso_observed(data, &weights, init, cfg, None)?;
    fit.objective = scad_objective(penalty, &fit.beta, data)?;
    fit.lambda = penalty.lambda();
    Ok((fit, weights))
}

/// Fully converged LLA at every grid point, each from the same start.
pub fn lla_path(
    data: &SpinDataset,
    init: &CouplingVector,
    lambdas: &[f64],
    a: f64,
    cfg: &LlaConfig,
) -> Result<Vec<LlaOutcome>> {
    par::map_indexed(lambdas.len(), |i| {
        let p = Penalty::scad_with_a(lambdas[i], a)?;
        lla_cma(data, &p, init, cfg)
    })
    .into_iter()
    .collect()
}

/// LASSO tuned by BIC, then coordinate ascent with the SCAD derivative
/// refreshed at every visit, started from the tuned LASSO at every grid point.
pub fn scad1(data: &SpinDataset, cfg: &ScadConfig) -> Result<ScadPipelineResult> {
    let lasso = tuned_lasso(data, cfg)?;
    scad1_from(data, &lasso, cfg)
}

pub fn scad1_from(data: &SpinDataset, lasso: &TunedLasso, cfg: &ScadConfig) -> Result<ScadPipelineResult> {
    let init = &lasso.fit.beta;
    let (fit, _, pass) = tune_over_grid(data, &lasso.lambdas, cfg.bic, "scad1", |lambda| {
        let p = Penalty::scad_with_a(lambda, cfg.a)?;
        Ok((fit_penalized(data, &p, init, &cfg.lla.inner)?, Vec::new()))
    })?;
    Ok(ScadPipelineResult {
        variant: ScadVariant::Scad1,
        chosen_lambda: pass.chosen_lambda,
        fit,
        lla_iters_used: 0,
        passes: vec![lasso.pass.clone(), pass],
        weights: Vec::new(),
    })
}

/// Two one-step LLA passes, each tuned by BIC: the first from the tuned
/// LASSO, the second from the tuned first-step solution.
pub fn scad2(data: &SpinDataset, cfg: &ScadConfig) -> Result<ScadPipelineResult> {
    let lasso = tuned_lasso(data, cfg)?;
    scad2_from(data, &lasso, cfg)
}

pub fn scad2_from(data: &SpinDataset, lasso: &TunedLasso, cfg: &ScadConfig) -> Result<ScadPipelineResult> {
    cfg.lla.validate()?;
    let step = |init: &CouplingVector, stage: &str| {
        tune_over_grid(data, &lasso.lambdas, cfg.bic, stage, |lambda| {
            one_step(data, &Penalty::scad_with_a(lambda, cfg.a)?, init, &cfg.lla.inner)
        })
    };
    let (first, _, pass1) = step(&lasso.fit.beta, "scad2-step1")?;
    let (fit, weights, pass2) = step(&first.beta, "scad2-step2")?;
    Ok(ScadPipelineResult {
        variant: ScadVariant::Scad2,
        chosen_lambda: pass2.chosen_lambda,
        fit,
        lla_iters_used: 2,
        passes: vec![lasso.pass.clone(), pass1, pass2],
        weights,
    })
}

/// Fully converged LLA at SCAD2's tuned `lambda`, started from SCAD2.
pub fn scad2_star_star(data: &SpinDataset, scad2: &ScadPipelineResult, cfg: &ScadConfig) -> Result<ScadPipelineResult> {
    if scad2.variant != ScadVariant::Scad2 {
        return invalid("SCAD2** must start from a SCAD2 result");
    }
    let penalty = Penalty::scad_with_a(scad2.chosen_lambda, cfg.a)?;
    let out = lla_cma_from_solution(data, &penalty, &scad2.fit, &scad2.weights, &cfg.lla)?;
    Ok(ScadPipelineResult {
        variant: ScadVariant::Scad2StarStar,
        chosen_lambda: scad2.chosen_lambda,
        fit: out.fit,
        lla_iters_used: out.iterations,
        passes: scad2.passes.clone(),
        weights: out.weights,
    })
}
