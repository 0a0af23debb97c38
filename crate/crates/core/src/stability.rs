//! Stability selection by repeated subsampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{num_pairs, pair_table, CouplingVector, SpinDataset};
use crate::par;
use crate::pipeline::{estimate, Estimator, EstimatorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub reps: usize,
    /// Rows per subsample; `None` means `floor(N / 2)`.
    pub subsample_size: Option<usize>,
    pub pi_thr: f64,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { reps: 100, subsample_size: None, pi_thr: 0.9, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: usize,
    /// Selection frequency per pair, in coupling storage order.
    pub frequencies: Vec<f64>,
    pub pi_thr: f64,
    /// Pairs with frequency strictly above `pi_thr`, 0-based.
    pub stable_edges: Vec<(usize, usize)>,
    /// Mean number of selected edges per successful replicate.
    pub q_avg: f64,
    pub ev_bound: f64,
    pub num_pairs: usize,
    pub subsample_size: usize,
    pub successful_reps: usize,
    pub failed_reps: usize,
}

/// Bound on the expected number of false stable edges, `q^2 / (p (2 pi - 1))`.
pub fn ev_bound(q_avg: f64, num_pairs: usize, pi_thr: f64) -> f64 {
    q_avg * q_avg / (num_pairs as f64 * (2.0 * pi_thr - 1.0))
}

fn check_threshold(pi_thr: f64) -> Result<()> {
    if !(pi_thr > 0.5 && pi_thr <= 1.0) {
        return invalid(format!("pi_thr must lie in (0.5, 1], got {pi_thr}"));
    }
    Ok(())
}

impl StabilityReport {
    /// Same frequencies, re-thresholded.
    pub fn with_threshold(&self, pi_thr: f64) -> Result<Self> {
        check_threshold(pi_thr)?;
        let table = pair_table(self.k);
        let stable_edges =
            self.frequencies.iter().zip(&table).filter(|(f, _)| **f > pi_thr).map(|(_, e)| *e).collect();
        Ok(Self { pi_thr, stable_edges, ev_bound: ev_bound(self.q_avg, self.num_pairs, pi_thr), ..self.clone() })
    }
}

/// Stability selection for any support selector.
pub fn stability_select_with<F>(data: &SpinDataset, cfg: &StabilityConfig, select: F) -> Result<StabilityReport>
where
    F: Fn(&SpinDataset) -> Result<CouplingVector> + Sync + Send,
{
    check_threshold(cfg.pi_thr)?;
    let (n, k) = (data.num_obs(), data.num_nodes());
    if cfg.reps == 0 {
        return invalid("reps must be at least 1");
    }
    let m = cfg.subsample_size.unwrap_or(n / 2);
    if m == 0 || m > n {
        return invalid(format!("subsample size {m} must lie in 1..={n}"));
    }
    let supports = par::map_indexed(cfg.reps, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let mut rows = rand::seq::index::sample(&mut rng, n, m).into_vec();
        rows.sort_unstable();
        let sub = data.select_rows(&rows)?;
        select(&sub).map(|b| b.support())
    });

    let p = num_pairs(k);
    let mut counts = vec![0usize; p];
    let (mut ok, mut failed, mut total_selected) = (0usize, 0usize, 0usize);
    for s in supports {
        match s {
            Ok(s) if s.len() == p => {
                ok += 1;
                for (c, sel) in counts.iter_mut().zip(&s) {
                    if *sel {
                        *c += 1;
                        total_selected += 1;
                    }
                }
            }
            _ => failed += 1,
        }
    }
    if ok == 0 {
        return invalid(format!("all {failed} stability replicates failed"));
    }
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / ok as f64).collect();
    let q_avg = total_selected as f64 / ok as f64;
    let report = StabilityReport {
        k,
        frequencies,
        pi_thr: cfg.pi_thr,
        stable_edges: Vec::new(),
        q_avg,
        ev_bound: 0.0,
        num_pairs: p,
        subsample_size: m,
        successful_reps: ok,
        failed_reps: failed,
    };
    report.with_threshold(cfg.pi_thr)
}

pub fn stability_select(
    data: &SpinDataset,
    estimator: Estimator,
    est_cfg: &EstimatorConfig,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    stability_select_with(data, cfg, |sub| estimate(sub, estimator, est_cfg).map(|e| e.beta))
}
