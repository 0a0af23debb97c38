//! Neighbourhood selection: one L1-penalized logistic regression per node,
//! aggregated into a symmetric estimate by intersection or union.
//!
//! Node `j` regresses `x_j` on the other spins through `theta_jn`, i.e. the
//! single conditional `l^(j)` with its own coefficient `b_{j->k}` per
//! neighbour. The coordinate curvature of `l^(j)` is bounded below by `-1/4`,
//! so the minorizing update is `S(b + 4g, 4 lambda)`.

use serde::{Deserialize, Serialize};

use crate::cma::{log_grid, soft_threshold, LambdaGrid, SolverConfig};
use crate::error::{invalid, IsingError, Result};
use crate::kernel;
use crate::model::{log_logistic, CouplingVector, SpinDataset};
use crate::par;
use crate::selection::{bic_score, BicScale};

/// Coefficient bound applied when refitting without a penalty.
pub const SEPARATION_CAP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFit {
    pub node: usize,
    /// `b_{node->k}` for every `k`; the entry for `node` itself is zero.
    pub coefs: Vec<f64>,
    pub lambda: f64,
    /// `(1/N) sum_n log theta_{node,n}` at `coefs`.
    pub loglik: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Some coefficient hit [`SEPARATION_CAP`].
    pub capped: bool,
}

impl NodeFit {
    pub fn support(&self) -> Vec<usize> {
        self.coefs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, _)| i).collect()
    }

    pub fn df(&self) -> usize {
        self.coefs.iter().filter(|c| **c != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodFit {
    pub k: usize,
    pub nodes: Vec<NodeFit>,
}

impl NeighborhoodFit {
    /// `b_{j->k}`.
    pub fn directed(&self, j: usize, k: usize) -> f64 {
        self.nodes[j].coefs[k]
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.nodes.iter().map(NodeFit::support).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeTuning {
    /// Each node picks its own `lambda` by BIC.
    #[default]
    PerNode,
    /// One shared `lambda` maximizing the summed node BIC scores.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeighborhoodConfig {
    pub grid: LambdaGrid,
    pub solver: SolverConfig,
    pub tuning: NodeTuning,
    pub bic: BicScale,
    /// Solver for the unpenalized relaxed refit.
    pub refit: SolverConfig,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        Self {
            grid: LambdaGrid::default(),
            solver: SolverConfig::default(),
            tuning: NodeTuning::PerNode,
            bic: BicScale::Total,
            refit: SolverConfig { tol: 1e-10, max_sweeps: 100_000, ..SolverConfig::default() },
        }
    }
}

struct NodeState<'d> {
    data: &'d SpinDataset,
    node: usize,
    n: usize,
    r: Vec<f64>,
    e: Vec<f64>,
    q: Vec<f64>,
}

impl<'d> NodeState<'d> {
    fn new(data: &'d SpinDataset, node: usize, coefs: &[f64]) -> Self {
        let n = data.num_obs();
        let xj = data.column(node);
        let mut r = vec![0.0; n];
        for (l, &b) in coefs.iter().enumerate() {
            if b != 0.0 && l != node {
                let xl = data.column(l);
                for t in 0..n {
                    r[t] += b * xj[t] * xl[t];
                }
            }
        }
        let (e, q) = (vec![0.0; n], vec![0.0; n]);
        let mut st = Self { data, node, n, r, e, q };
        st.refresh();
        st
    }

    fn refresh(&mut self) {
        kernel::refresh(&self.r, &mut self.e, &mut self.q);
    }

    #[inline]
    fn gradient(&self, l: usize) -> f64 {
        let (xj, xl) = (self.data.column(self.node), self.data.column(l));
        kernel::pair_dot(xj, xl, &self.q) / self.n as f64
    }

    fn shift(&mut self, l: usize, delta: f64) {
        let (xj, xl) = (self.data.column(self.node), self.data.column(l));
        kernel::pair_shift(&mut self.r, &mut self.e, &mut self.q, xj, xl, delta);
    }

    fn loglik(&self) -> f64 {
        self.r.iter().map(|&t| log_logistic(t)).sum::<f64>() / self.n as f64
    }
}

/// Coordinate minorization for one node over the predictors in `allowed`.
fn node_cma(
    data: &SpinDataset,
    node: usize,
    lambda: f64,
    allowed: &[usize],
    init: &[f64],
    cfg: &SolverConfig,
    cap: Option<f64>,
) -> Result<NodeFit> {
    cfg.validate()?;
    let k = data.num_nodes();
    if node >= k {
        return invalid(format!("node {node} out of range for {k} nodes"));
    }
    if init.len() != k {
        return Err(IsingError::DimensionMismatch { expected: k, found: init.len() });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    let mut coefs = vec![0.0; k];
    for &l in allowed {
        coefs[l] = init[l];
    }
    let mut st = NodeState::new(data, node, &coefs);
    let mut capped = false;

    let mut visit = |l: usize, coefs: &mut [f64], st: &mut NodeState<'_>| -> f64 {
        let old = coefs[l];
        let g = st.gradient(l);
        let mut new = soft_threshold(old + 4.0 * g, 4.0 * lambda);
        if let Some(c) = cap {
            if new.abs() > c {
                new = new.clamp(-c, c);
                capped = true;
            }
        }
        if new == old {
            return 0.0;
        }
        st.shift(l, new - old);
        coefs[l] = new;
        (new - old).abs()
    };

    let mut sweeps = 0;
    let mut converged = false;
    let mut full = true;
    let mut active = Vec::new();
    while sweeps < cfg.max_sweeps {
        let mut max_delta: f64 = 0.0;
        if full && sweeps > 0 {
            st.refresh();
        }
        let order: &[usize] = if full { allowed } else { &active };
        for &l in order {
            max_delta = max_delta.max(visit(l, &mut coefs, &mut st));
        }
        sweeps += 1;
        if max_delta < cfg.tol {
            if full {
                converged = true;
                break;
            }
            full = true;
        } else if full && cfg.active_set {
            active = allowed.iter().copied().filter(|&l| coefs[l] != 0.0).collect();
            full = false;
        }
    }

    st.refresh();
    let kkt_residual = allowed
        .iter()
        .map(|&l| {
            let g = st.gradient(l);
            let b = coefs[l];
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(NodeFit { node, loglik: st.loglik(), coefs, lambda, sweeps, kkt_residual, converged, capped })
}

fn others(k: usize, node: usize) -> Vec<usize> {
    (0..k).filter(|&l| l != node).collect()
}

/// Maximizes `(1/N) sum_n log theta_jn - lambda sum_k |b_{j->k}|` over node `j`'s coefficients.
pub fn fit_node_logistic(
    data: &SpinDataset,
    j: usize,
    lambda: f64,
    init: &[f64],
    cfg: &SolverConfig,
) -> Result<NodeFit> {
    let allowed = others(data.num_nodes(), j);
    node_cma(data, j, lambda, &allowed, init, cfg, None)
}

/// Smallest `lambda` at which node `j`'s zero vector is a fixed point.
pub fn node_lambda_max(data: &SpinDataset, j: usize) -> f64 {
    others(data.num_nodes(), j)
        .into_iter()
        .map(|l| data.pair_mean(j, l).abs() / 2.0)
        .fold(0.0, f64::max)
}

fn node_grid(grid: &LambdaGrid, anchor: f64) -> Result<Vec<f64>> {
    match grid {
        LambdaGrid::Auto { count, ratio } => {
            if *count == 0 || !(*ratio > 0.0 && *ratio < 1.0) {
                return invalid(format!("bad automatic grid: count {count}, ratio {ratio}"));
            }
            if anchor <= 0.0 {
                // every correlation is zero; the empty model is the only fit
                return Ok(vec![0.0]);
            }
            Ok(log_grid(anchor, *count, *ratio))
        }
        LambdaGrid::Values(v) => {
            if v.is_empty() || v.windows(2).any(|w| w[1] >= w[0]) || v.iter().any(|l| !(*l > 0.0)) {
                return invalid("lambda grid must be positive and strictly decreasing");
            }
            Ok(v.clone())
        }
    }
}

/// Warm-started path for one node.
fn node_path(data: &SpinDataset, j: usize, lambdas: &[f64], cfg: &SolverConfig) -> Result<Vec<NodeFit>> {
    let k = data.num_nodes();
    let allowed = others(k, j);
    let mut fits: Vec<NodeFit> = Vec::with_capacity(lambdas.len());
    let zero = vec![0.0; k];
    for &lambda in lambdas {
        let init = match fits.last() {
            Some(prev) if cfg.warm_start => prev.coefs.as_slice(),
            _ => zero.as_slice(),
        };
        fits.push(node_cma(data, j, lambda, &allowed, init, cfg, None)?);
    }
    Ok(fits)
}

fn node_score(fit: &NodeFit, n: usize, scale: BicScale) -> f64 {
    bic_score(fit.loglik, fit.df(), n, scale)
}

fn best_index(scores: &[f64], lambdas: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && lambdas[i] > lambdas[best]) {
            best = i;
        }
    }
    best
}

/// BIC-tuned L1 logistic regression at every node.
pub fn fit_neighborhood(data: &SpinDataset, cfg: &NeighborhoodConfig) -> Result<NeighborhoodFit> {
    let (k, n) = (data.num_nodes(), data.num_obs());
    let nodes = match cfg.tuning {
        NodeTuning::PerNode => par::map_indexed(k, |j| {
            let lambdas = node_grid(&cfg.grid, node_lambda_max(data, j))?;
            let path = node_path(data, j, &lambdas, &cfg.solver)?;
            let scores: Vec<f64> = path.iter().map(|f| node_score(f, n, cfg.bic)).collect();
            let best = best_index(&scores, &lambdas);
            Ok(path.into_iter().nth(best).expect("nonempty path"))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?,
        NodeTuning::Global => {
            let anchor = (0..k).map(|j| node_lambda_max(data, j)).fold(0.0, f64::max);
            let lambdas = node_grid(&cfg.grid, anchor)?;
            let paths = par::map_indexed(k, |j| node_path(data, j, &lambdas, &cfg.solver))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let scores: Vec<f64> = (0..lambdas.len())
                .map(|i| paths.iter().map(|p| node_score(&p[i], n, cfg.bic)).sum())
                .collect();
            let best = best_index(&scores, &lambdas);
            paths.into_iter().map(|p| p.into_iter().nth(best).expect("nonempty path")).collect()
        }
    };
    Ok(NeighborhoodFit { k, nodes })
}

/// Intersection rule: zero unless both directions are nonzero, then their mean.
pub fn nsai_rule(forward: f64, backward: f64) -> f64 {
    if forward == 0.0 || backward == 0.0 {
        0.0
    } else {
        (forward + backward) / 2.0
    }
}

/// Union rule: the nonzero direction if only one is nonzero, the mean if both are.
pub fn nsau_rule(forward: f64, backward: f64) -> f64 {
    match (forward != 0.0, backward != 0.0) {
        (false, false) => 0.0,
        (true, false) => forward,
        (false, true) => backward,
        (true, true) => (forward + backward) / 2.0,
    }
}

fn aggregate(fits: &NeighborhoodFit, rule: fn(f64, f64) -> f64) -> CouplingVector {
    let values = crate::model::pairs(fits.k).map(|(j, k)| rule(fits.directed(j, k), fits.directed(k, j))).collect();
    CouplingVector::from_values(fits.k, values).expect("aggregated couplings are well formed")
}

pub fn aggregate_nsai(fits: &NeighborhoodFit) -> CouplingVector {
    aggregate(fits, nsai_rule)
}

pub fn aggregate_nsau(fits: &NeighborhoodFit) -> CouplingVector {
    aggregate(fits, nsau_rule)
}

/// Unpenalized refit of each node on its selected predictors, coefficients
/// capped at [`SEPARATION_CAP`].
pub fn relaxed_refit(data: &SpinDataset, supports: &[Vec<usize>], cfg: &SolverConfig) -> Result<NeighborhoodFit> {
    let k = data.num_nodes();
    if supports.len() != k {
        return Err(IsingError::DimensionMismatch { expected: k, found: supports.len() });
    }
    for (j, s) in supports.iter().enumerate() {
        if s.iter().any(|&l| l == j || l >= k) {
            return invalid(format!("support of node {j} contains an invalid predictor"));
        }
    }
    let zero = vec![0.0; k];
    let nodes = par::map_indexed(k, |j| node_cma(data, j, 0.0, &supports[j], &zero, cfg, Some(SEPARATION_CAP)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborhoodFit { k, nodes })
}
