//! Cyclic coordinate-minorization ascent for the penalized composite likelihood.
//!
//! Each coordinate update maximizes the quadratic lower bound
//! `z (b - b0) - (b - b0)^2 / 4 - w |b|`, valid because the coordinate
//! curvature of the composite likelihood is never below `-1/2`. Its maximizer
//! is the soft-threshold `S(b0 + 2z, 2w)`, so every update is an ascent step.
//!
//! The `N x K` signed margins and `1 - theta` values are cached; changing one
//! coupling touches only two columns, so an update costs `O(N)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IsingError, Result};
use crate::kernel;
use crate::model::{composite_grad, composite_loglik, pair_table, CouplingVector, SpinDataset};
use crate::penalty::{Penalty, PenaltyKind, SCAD_A};

/// Stopping rules and tricks for the coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Converged once a full sweep moves no coordinate by this much.
    pub tol: f64,
    /// Cap on sweeps, counting both full and active-set sweeps.
    pub max_sweeps: usize,
    pub active_set: bool,
    /// Warm-start each point of a path from the previous solution.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_sweeps: 1000, active_set: true, warm_start: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_sweeps == 0 {
            return invalid("max_sweeps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: CouplingVector,
    pub lambda: f64,
    /// Penalized composite log-likelihood at `beta`.
    pub objective: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPath {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }
}

/// `sgn(r) (|r| - t)_+`.
#[inline]
pub fn soft_threshold(r: f64, t: f64) -> f64 {
    if r > t {
        r - t
    } else if r < -t {
        r + t
    } else {
        0.0
    }
}

/// Maximizer of the coordinate surrogate at current value `beta`, gradient
/// `z` and L1 weight `w`.
#[inline]
pub fn cma_update(beta: f64, z: f64, w: f64) -> f64 {
    soft_threshold(beta + 2.0 * z, 2.0 * w)
}

/// How the L1 weight of a coordinate is chosen at each visit.
#[derive(Debug, Clone, Copy)]
pub enum WeightRule<'w> {
    /// Frozen per-pair weights (LASSO and weighted LASSO).
    Fixed(&'w [f64]),
    /// `P'_lambda(|beta|)` re-evaluated at the current value on every visit.
    Adaptive(Penalty),
}

impl WeightRule<'_> {
    #[inline]
    fn weight(&self, idx: usize, current: f64) -> f64 {
        match self {
            WeightRule::Fixed(w) => w[idx],
            WeightRule::Adaptive(p) => p.deriv_unchecked(current.abs()),
        }
    }

    fn penalty_total(&self, beta: &[f64]) -> f64 {
        match self {
            WeightRule::Fixed(w) => w.iter().zip(beta).map(|(w, b)| w * b.abs()).sum(),
            WeightRule::Adaptive(p) => p.total(beta),
        }
    }
}

/// One accepted coordinate update, reported to an observer.
#[derive(Debug)]
pub struct UpdateEvent<'a> {
    pub pair: usize,
    pub old: f64,
    pub new: f64,
    /// Composite-likelihood gradient at the pre-update point.
    pub gradient: f64,
    pub weight: f64,
    /// Frozen weights in use, if any.
    pub weights: Option<&'a [f64]>,
    /// State after the update.
    pub beta: &'a CouplingVector,
}

pub type Observer<'o> = &'o mut dyn FnMut(&UpdateEvent<'_>);

/// Cached margins for the current iterate.
struct Workspace<'d> {
    data: &'d SpinDataset,
    n: usize,
    r: Vec<f64>,
    e: Vec<f64>,
    q: Vec<f64>,
}

impl<'d> Workspace<'d> {
    fn new(data: &'d SpinDataset, beta: &CouplingVector) -> Self {
        let r = crate::model::signed_margins(beta, data);
        let (e, q) = (vec![0.0; r.len()], vec![0.0; r.len()]);
        let mut ws = Self { data, n: data.num_obs(), r, e, q };
        ws.refresh();
        ws
    }

    fn refresh(&mut self) {
        kernel::refresh(&self.r, &mut self.e, &mut self.q);
    }

    #[inline]
    fn gradient(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        let (xi, xj) = (self.data.column(i), self.data.column(j));
        let (qi, qj) = (&self.q[i * n..(i + 1) * n], &self.q[j * n..(j + 1) * n]);
        (kernel::pair_dot(xi, xj, qi) + kernel::pair_dot(xi, xj, qj)) / n as f64
    }

    fn shift(&mut self, i: usize, j: usize, delta: f64) {
        let n = self.n;
        let (xi, xj) = (self.data.column(i), self.data.column(j));
        for m in [i, j] {
            let span = m * n..(m + 1) * n;
            kernel::pair_shift(&mut self.r[span.clone()], &mut self.e[span.clone()], &mut self.q[span], xi, xj, delta);
        }
    }
}

fn check_weights(weights: &[f64], p: usize) -> Result<()> {
    if weights.len() != p {
        return Err(IsingError::DimensionMismatch { expected: p, found: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return invalid(format!("weights must be finite and nonnegative, got {w}"));
    }
    Ok(())
}

/// Stationarity violation: `max(|g| - w, 0)` at zeros, `|g - w sgn(b)|` elsewhere.
fn kkt_residual(data: &SpinDataset, beta: &CouplingVector, rule: &WeightRule<'_>) -> Result<f64> {
    let grad = composite_grad(beta, data)?;
    let res = beta
        .values()
        .iter()
        .zip(grad.values())
        .enumerate()
        .map(|(idx, (&b, &g))| {
            let w = rule.weight(idx, b);
            if b == 0.0 {
                (g.abs() - w).max(0.0)
            } else {
                (g - w * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(res)
}

pub(crate) fn evaluate_fit(
    data: &SpinDataset,
    beta: CouplingVector,
    rule: &WeightRule<'_>,
    lambda: f64,
    sweeps: usize,
    converged: bool,
) -> Result<FitResult> {
    let objective = composite_loglik(&beta, data)? - rule.penalty_total(beta.values());
    let kkt_residual = kkt_residual(data, &beta, rule)?;
    Ok(FitResult { beta, lambda, objective, sweeps, kkt_residual, converged })
}

pub(crate) fn run_cma(
    data: &SpinDataset,
    rule: WeightRule<'_>,
    init: &CouplingVector,
    cfg: &SolverConfig,
    lambda: f64,
    mut observer: Option<Observer<'_>>,
) -> Result<FitResult> {
    cfg.validate()?;
    let k = data.num_nodes();
    data.check_nodes(init.num_nodes())?;
    if let WeightRule::Fixed(w) = rule {
        check_weights(w, init.len())?;
    }
    let table = pair_table(k);
    let mut beta = init.clone();
    let mut ws = Workspace::new(data, &beta);
    let fixed = match rule {
        WeightRule::Fixed(w) => Some(w),
        WeightRule::Adaptive(_) => None,
    };

    let mut visit = |idx: usize, beta: &mut CouplingVector, ws: &mut Workspace<'_>| -> f64 {
        let (i, j) = table[idx];
        let old = beta.values()[idx];
        let z = ws.gradient(i, j);
        let w = rule.weight(idx, old);
        let new = cma_update(old, z, w);
        if new == old {
            return 0.0;
        }
        ws.shift(i, j, new - old);
        beta.values_mut()[idx] = new;
        if let Some(obs) = observer.as_mut() {
            obs(&UpdateEvent { pair: idx, old, new, gradient: z, weight: w, weights: fixed, beta });
        }
        (new - old).abs()
    };

    let mut sweeps = 0;
    let mut converged = false;
    let mut full = true;
    let mut active: Vec<usize> = Vec::new();
    while sweeps < cfg.max_sweeps {
        let mut max_delta: f64 = 0.0;
        if full {
            if sweeps > 0 {
                ws.refresh();
            }
            for idx in 0..table.len() {
                max_delta = max_delta.max(visit(idx, &mut beta, &mut ws));
            }
        } else {
            for &idx in &active {
                max_delta = max_delta.max(visit(idx, &mut beta, &mut ws));
            }
        }
        sweeps += 1;
        if max_delta < cfg.tol {
            if full {
                converged = true;
                break;
            }
            full = true;
        } else if full && cfg.active_set {
            active.clear();
            active.extend(beta.values().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
            full = false;
        }
    }
    evaluate_fit(data, beta, &rule, lambda, sweeps, converged)
}

/// LASSO-penalized fit at a single `lambda`.
pub fn fit_lasso(data: &SpinDataset, lambda: f64, init: &CouplingVector, cfg: &SolverConfig) -> Result<FitResult> {
    let p = Penalty::lasso(lambda)?;
    let weights = vec![p.lambda(); init.len()];
    run_cma(data, WeightRule::Fixed(&weights), init, cfg, lambda, None)
}

/// Weighted-LASSO fit; `FitResult::lambda` records the largest weight.
pub fn fit_weighted_lasso(
    data: &SpinDataset,
    weights: &[f64],
    init: &CouplingVector,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit_weighted_lasso_observed(data, weights, init, cfg, None)
}

pub fn fit_weighted_lasso_observed(
    data: &SpinDataset,
    weights: &[f64],
    init: &CouplingVector,
    cfg: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<FitResult> {
    check_weights(weights, init.len())?;
    let label = weights.iter().copied().fold(0.0, f64::max);
    run_cma(data, WeightRule::Fixed(weights), init, cfg, label, observer)
}

/// Coordinate ascent with the penalty derivative refreshed at every visit.
///
/// For LASSO this is [`fit_lasso`]; for SCAD it is the direct nonconcave
/// coordinate scheme.
pub fn fit_penalized(
    data: &SpinDataset,
    penalty: &Penalty,
    init: &CouplingVector,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit_penalized_observed(data, penalty, init, cfg, None)
}

pub fn fit_penalized_observed(
    data: &SpinDataset,
    penalty: &Penalty,
    init: &CouplingVector,
    cfg: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<FitResult> {
    match penalty.kind() {
        PenaltyKind::Lasso => {
            let weights = vec![penalty.lambda(); init.len()];
            run_cma(data, WeightRule::Fixed(&weights), init, cfg, penalty.lambda(), observer)
        }
        PenaltyKind::Scad => run_cma(data, WeightRule::Adaptive(*penalty), init, cfg, penalty.lambda(), observer),
    }
}

/// Smallest `lambda` at which the all-zero coupling vector is a fixed point.
pub fn lambda_max(data: &SpinDataset) -> f64 {
    let k = data.num_nodes();
    crate::model::pairs(k)
        .map(|(i, j)| data.pair_mean(i, j).abs())
        .fold(0.0, f64::max)
}

/// `n` log-spaced values from `max` down to `ratio * max`.
pub fn log_grid(max: f64, n: usize, ratio: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![max],
        _ => {
            let step = ratio.ln() / (n - 1) as f64;
            let mut g: Vec<f64> = (0..n).map(|i| max * (step * i as f64).exp()).collect();
            g[0] = max;
            g[n - 1] = max * ratio;
            g
        }
    }
}

/// Penalty levels for a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaGrid {
    /// `count` log-spaced values from [`lambda_max`] down to `ratio * lambda_max`.
    Auto { count: usize, ratio: f64 },
    /// Explicit positive, strictly decreasing values.
    Values(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { count: 100, ratio: 0.01 }
    }
}

impl LambdaGrid {
    pub fn resolve(&self, data: &SpinDataset) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::Auto { count, ratio } => {
                if *count == 0 || !(*ratio > 0.0 && *ratio < 1.0) {
                    return invalid(format!("bad automatic grid: count {count}, ratio {ratio}"));
                }
                let max = lambda_max(data);
                if max <= 0.0 {
                    return invalid("all pairwise spin correlations are zero; cannot anchor the grid");
                }
                Ok(log_grid(max, *count, *ratio))
            }
            LambdaGrid::Values(v) => {
                if v.is_empty() {
                    return invalid("lambda grid is empty");
                }
                if v.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return invalid("lambda grid values must be positive");
                }
                if v.windows(2).any(|w| w[1] >= w[0]) {
                    return invalid("lambda grid must be strictly decreasing");
                }
                Ok(v.clone())
            }
        }
    }
}

/// Path of fits over a decreasing grid, warm-started when configured.
pub fn fit_path(data: &SpinDataset, kind: PenaltyKind, grid: &LambdaGrid, cfg: &SolverConfig) -> Result<SolutionPath> {
    fit_path_with_a(data, kind, SCAD_A, grid, cfg)
}

pub fn fit_path_with_a(
    data: &SpinDataset,
    kind: PenaltyKind,
    a: f64,
    grid: &LambdaGrid,
    cfg: &SolverConfig,
) -> Result<SolutionPath> {
    let lambdas = grid.resolve(data)?;
    let zero = CouplingVector::zeros(data.num_nodes());
    let mut fits: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let penalty = Penalty::new(kind, lambda, a)?;
        let init = match fits.last() {
            Some(prev) if cfg.warm_start => &prev.beta,
            _ => &zero,
        };
        let fit = fit_penalized(data, &penalty, init, cfg)?;
        fits.push(fit);
    }
    Ok(SolutionPath { lambdas, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SpinDataset {
        SpinDataset::from_rows(&[
            vec![1i8, 1, -1, 1],
            vec![1, 1, 1, -1],
            vec![-1, -1, 1, 1],
            vec![-1, 1, -1, -1],
            vec![1, 1, -1, 1],
            vec![-1, -1, -1, 1],
        ])
        .unwrap()
    }

    #[test]
    fn update_arithmetic() {
        assert_eq!(cma_update(0.0, 1.5, 0.5), 2.0);
        assert_eq!(cma_update(0.0, 0.25, 0.5), 0.0);
        assert_eq!(cma_update(1.0, -1.0, 0.25), -0.5);
    }

    #[test]
    fn update_matches_grid_search() {
        let cases = [(0.0, 1.5, 0.5), (0.3, -0.4, 0.1), (-1.2, 0.2, 0.7), (2.0, 0.05, 0.0), (0.5, -0.9, 0.3)];
        for (b0, z, w) in cases {
            let surrogate = |b: f64| z * (b - b0) - (b - b0).powi(2) / 4.0 - w * b.abs();
            let mut best = (f64::NEG_INFINITY, 0.0);
            let mut b = -10.0;
            while b <= 10.0 {
                let v = surrogate(b);
                if v > best.0 {
                    best = (v, b);
                }
                b += 1e-4;
            }
            assert!((cma_update(b0, z, w) - best.1).abs() < 1e-3, "{b0} {z} {w}");
        }
    }

    #[test]
    fn zero_at_lambda_max() {
        let data = toy();
        let lmax = lambda_max(&data);
        let fit = fit_lasso(&data, lmax, &CouplingVector::zeros(4), &SolverConfig::default()).unwrap();
        assert_eq!(fit.beta.nnz(), 0);
        assert!(fit.converged);
        let fit = fit_lasso(&data, lmax * 0.9, &CouplingVector::zeros(4), &SolverConfig::default()).unwrap();
        assert!(fit.beta.nnz() > 0);
    }

    #[test]
    fn lambda_max_extremes() {
        let same = SpinDataset::from_rows(&[vec![1i8, 1], vec![-1, -1], vec![1, 1]]).unwrap();
        assert_eq!(lambda_max(&same), 1.0);
        let opposite = SpinDataset::from_rows(&[vec![1i8, -1], vec![-1, 1], vec![1, -1]]).unwrap();
        assert_eq!(lambda_max(&opposite), 1.0);
    }

    #[test]
    fn weighted_equals_lasso_bitwise() {
        let data = toy();
        let cfg = SolverConfig::default();
        let init = CouplingVector::zeros(4);
        let a = fit_lasso(&data, 0.1, &init, &cfg).unwrap();
        let b = fit_weighted_lasso(&data, &vec![0.1; 6], &init, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_is_reproducible() {
        let data = toy();
        let fit = fit_lasso(&data, 0.05, &CouplingVector::zeros(4), &SolverConfig::default()).unwrap();
        let ll = composite_loglik(&fit.beta, &data).unwrap();
        let pen: f64 = fit.beta.values().iter().map(|b| 0.05 * b.abs()).sum();
        assert!((fit.objective - (ll - pen)).abs() < 1e-10);
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(2.0, 100, 0.01);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 2.0);
        assert_eq!(g[99], 0.02);
        let ratios: Vec<f64> = g.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-12);
        }
        assert!(LambdaGrid::Values(vec![0.1, 0.2]).resolve(&toy()).is_err());
        assert!(LambdaGrid::Values(vec![]).resolve(&toy()).is_err());
    }

    #[test]
    fn rejects_bad_config_and_weights() {
        let data = toy();
        let init = CouplingVector::zeros(4);
        let bad = SolverConfig { tol: 0.0, ..Default::default() };
        assert!(fit_lasso(&data, 0.1, &init, &bad).is_err());
        let cfg = SolverConfig::default();
        assert!(fit_weighted_lasso(&data, &[0.1; 5], &init, &cfg).is_err());
        assert!(fit_weighted_lasso(&data, &[-0.1; 6], &init, &cfg).is_err());
        assert!(fit_lasso(&data, 0.1, &CouplingVector::zeros(3), &cfg).is_err());
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let data = toy();
        let cfg = SolverConfig { max_sweeps: 1, ..Default::default() };
        let fit = fit_lasso(&data, 0.0, &CouplingVector::zeros(4), &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 1);
    }
}
