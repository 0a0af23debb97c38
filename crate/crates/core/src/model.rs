//! Ising model representation and the composite conditional likelihood.
//!
//! Couplings are stored as the strict upper triangle of a symmetric,
//! zero-diagonal matrix. Pair `(j, k)` with `j < k` (0-based) lives at
//!
//! ```text
//! index(j, k) = j * (2K - j - 1) / 2 + (k - j - 1)
//! ```
//!
//! which is the lexicographic order `(0,1), (0,2), ..., (0,K-1), (1,2), ...`.
//! All file formats rely on this ordering.
//!
//! The conditional probability of the observed spin `x_j` given the rest is
//! `theta_j = logistic(x_j * m_j)` with `m_j = sum_{k != j} beta_jk x_k`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IsingError, Result};

/// Largest node count accepted by exact enumeration.
pub const MAX_EXACT_NODES: usize = 20;

/// Number of unordered pairs among `k` nodes.
#[inline]
pub fn num_pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Flat index of the unordered pair `{i, j}`, `i != j`, 0-based.
#[inline]
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < k && j < k);
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * k - a - 1) / 2 + (b - a - 1)
}

/// Iterator over all pairs `(j, k)`, `j < k`, in storage order.
pub fn pairs(k: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (0..k).flat_map(move |j| (j + 1..k).map(move |l| (j, l)))
}

/// Table mapping flat indices back to `(j, k)`.
pub fn pair_table(k: usize) -> Vec<(usize, usize)> {
    pairs(k).collect()
}

#[inline]
pub(crate) fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(logistic(t))` without overflow for large `|t|`.
#[inline]
pub(crate) fn log_logistic(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// Symmetric coupling coefficients with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingVector {
    k: usize,
    values: Vec<f64>,
}

impl CouplingVector {
    pub fn zeros(k: usize) -> Self {
        Self { k, values: vec![0.0; num_pairs(k)] }
    }

    pub fn from_values(k: usize, values: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return invalid(format!("need at least 2 nodes, got {k}"));
        }
        if values.len() != num_pairs(k) {
            return Err(IsingError::DimensionMismatch { expected: num_pairs(k), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IsingError::NonFinite("coupling values"));
        }
        Ok(Self { k, values })
    }

    /// Builds from `(j, k, value)` triples with 0-based endpoints.
    pub fn from_edges(k: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut beta = Self::zeros(k);
        for &(i, j, v) in edges {
            if i == j || i >= k || j >= k {
                return invalid(format!("bad edge ({i}, {j}) for {k} nodes"));
            }
            beta.set(i, j, v);
        }
        Ok(beta)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coupling between `i` and `j`; zero on the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[pair_index(self.k, i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "diagonal couplings are not stored");
        let idx = pair_index(self.k, i, j);
        self.values[idx] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Number of exactly nonzero couplings.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Nonzero couplings as `(j, k, value)` with `j < k`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        pairs(self.k)
            .zip(&self.values)
            .filter(|(_, v)| **v != 0.0)
            .map(|((j, k), v)| (j, k, *v))
            .collect()
    }

    pub fn support(&self) -> Vec<bool> {
        self.values.iter().map(|v| *v != 0.0).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `N x K` matrix of +-1 spins, stored column-major as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinDataset {
    n: usize,
    k: usize,
    cols: Vec<f64>,
}

impl SpinDataset {
    /// Builds from row-major spins.
    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return invalid("dataset has no rows");
        }
        let k = rows[0].as_ref().len();
        if k < 2 {
            return invalid(format!("need at least 2 nodes, got {k}"));
        }
        let mut cols = vec![0.0; n * k];
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != k {
                return Err(IsingError::DimensionMismatch { expected: k, found: row.len() });
            }
            for (c, &s) in row.iter().enumerate() {
                if s != 1 && s != -1 {
                    return Err(IsingError::InvalidSpin { row: r, col: c, value: s as i64 });
                }
                cols[c * n + r] = s as f64;
            }
        }
        Ok(Self { n, k, cols })
    }

    /// Builds from a flat row-major buffer of length `n * k`.
    pub fn from_row_major(n: usize, k: usize, spins: &[i8]) -> Result<Self> {
        if spins.len() != n * k {
            return Err(IsingError::DimensionMismatch { expected: n * k, found: spins.len() });
        }
        let rows: Vec<&[i8]> = spins.chunks(k.max(1)).collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn num_obs(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.k
    }

    /// Spins of node `j` across all observations.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn spin(&self, row: usize, j: usize) -> i8 {
        self.cols[j * self.n + row] as i8
    }

    pub fn row(&self, row: usize) -> Vec<i8> {
        (0..self.k).map(|j| self.spin(row, j)).collect()
    }

    /// New dataset holding the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return invalid("row selection is empty");
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n) {
            return invalid(format!("row {bad} out of range for {} rows", self.n));
        }
        let n = rows.len();
        let mut cols = vec![0.0; n * self.k];
        for j in 0..self.k {
            let src = self.column(j);
            let dst = &mut cols[j * n..(j + 1) * n];
            for (d, &r) in dst.iter_mut().zip(rows) {
                *d = src[r];
            }
        }
        Ok(Self { n, k: self.k, cols })
    }

    /// Empirical mean of `x_i * x_j`.
    pub fn pair_mean(&self, i: usize, j: usize) -> f64 {
        let a = self.column(i);
        let b = self.column(j);
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / self.n as f64
    }

    pub(crate) fn check_nodes(&self, k: usize) -> Result<()> {
        if self.k != k {
            return Err(IsingError::DimensionMismatch { expected: k, found: self.k });
        }
        Ok(())
    }
}

/// Signed linear predictors `x_jn * m_jn`, column-major `N x K`.
pub(crate) fn signed_margins(beta: &CouplingVector, data: &SpinDataset) -> Vec<f64> {
    let (n, k) = (data.num_obs(), data.num_nodes());
    let mut r = vec![0.0; n * k];
    for ((i, j), &b) in pairs(k).zip(beta.values()) {
        if b == 0.0 {
            continue;
        }
        let xi = data.column(i);
        let xj = data.column(j);
        for t in 0..n {
            let p = b * xi[t] * xj[t];
            r[i * n + t] += p;
            r[j * n + t] += p;
        }
    }
    r
}

/// Conditional probabilities `theta_jn` of the observed spins.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalProbs {
    n: usize,
    k: usize,
    theta: Vec<f64>,
}

impl ConditionalProbs {
    #[inline]
    pub fn get(&self, row: usize, j: usize) -> f64 {
        self.theta[j * self.n + row]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.theta[j * self.n..(j + 1) * self.n]
    }

    pub fn num_obs(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.k
    }
}

pub fn conditional_probs(beta: &CouplingVector, data: &SpinDataset) -> Result<ConditionalProbs> {
    data.check_nodes(beta.num_nodes())?;
    let theta = signed_margins(beta, data).into_iter().map(logistic).collect();
    Ok(ConditionalProbs { n: data.num_obs(), k: data.num_nodes(), theta })
}

/// Composite log-likelihood `sum_j (1/N) sum_n log theta_jn`.
pub fn composite_loglik(beta: &CouplingVector, data: &SpinDataset) -> Result<f64> {
    data.check_nodes(beta.num_nodes())?;
    let r = signed_margins(beta, data);
    let ll = r.iter().map(|&t| log_logistic(t)).sum::<f64>() / data.num_obs() as f64;
    if !ll.is_finite() {
        return Err(IsingError::NonFinite("composite log-likelihood"));
    }
    Ok(ll)
}

/// Conditional log-likelihood of a single node, `(1/N) sum_n log theta_jn`.
pub fn node_loglik(beta: &CouplingVector, data: &SpinDataset, j: usize) -> Result<f64> {
    data.check_nodes(beta.num_nodes())?;
    let n = data.num_obs();
    let r = signed_margins(beta, data);
    Ok(r[j * n..(j + 1) * n].iter().map(|&t| log_logistic(t)).sum::<f64>() / n as f64)
}

/// Gradient of the composite log-likelihood with respect to every coupling.
pub fn composite_grad(beta: &CouplingVector, data: &SpinDataset) -> Result<CouplingVector> {
    data.check_nodes(beta.num_nodes())?;
    let (n, k) = (data.num_obs(), data.num_nodes());
    // 1 - theta
    let q: Vec<f64> = signed_margins(beta, data).into_iter().map(|t| logistic(-t)).collect();
    let values = pairs(k)
        .map(|(i, j)| {
            let (xi, xj) = (data.column(i), data.column(j));
            let (qi, qj) = (&q[i * n..(i + 1) * n], &q[j * n..(j + 1) * n]);
            let mut s = 0.0;
            for t in 0..n {
                s += xi[t] * xj[t] * (qi[t] + qj[t]);
            }
            s / n as f64
        })
        .collect();
    Ok(CouplingVector { k, values })
}

/// Second derivative of the composite log-likelihood along coordinate `(i, j)`.
///
/// Always in `[-1/2, 0)` for finite couplings.
pub fn coordinate_curvature(beta: &CouplingVector, data: &SpinDataset, i: usize, j: usize) -> Result<f64> {
    data.check_nodes(beta.num_nodes())?;
    let k = data.num_nodes();
    if i == j || i >= k || j >= k {
        return invalid(format!("({i}, {j}) is not a valid pair for {k} nodes"));
    }
    let n = data.num_obs();
    let r = signed_margins(beta, data);
    let var = |t: f64| {
        let p = logistic(t);
        p * (1.0 - p)
    };
    let s: f64 = (0..n).map(|t| var(r[i * n + t]) + var(r[j * n + t])).sum();
    Ok(-s / n as f64)
}

/// Score and Hessian of the negative conditional log-likelihood of one node.
///
/// Both are indexed by node over all `K` nodes; the row, column and entry of
/// the node itself are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeScore {
    pub node: usize,
    pub score: Vec<f64>,
    /// Row-major `K x K`.
    pub hessian: Vec<f64>,
}

impl NodeScore {
    pub fn hessian_at(&self, a: usize, b: usize) -> f64 {
        self.hessian[a * self.score.len() + b]
    }
}

pub fn node_score_hessian(beta: &CouplingVector, data: &SpinDataset, j: usize) -> Result<NodeScore> {
    data.check_nodes(beta.num_nodes())?;
    let (n, k) = (data.num_obs(), data.num_nodes());
    if j >= k {
        return invalid(format!("node {j} out of range for {k} nodes"));
    }
    let r = signed_margins(beta, data);
    let theta: Vec<f64> = r[j * n..(j + 1) * n].iter().map(|&t| logistic(t)).collect();
    let xj = data.column(j);
    let nf = n as f64;

    let mut score = vec![0.0; k];
    for (l, s) in score.iter_mut().enumerate() {
        if l == j {
            continue;
        }
        let xl = data.column(l);
        *s = (0..n).map(|t| xj[t] * xl[t] * (theta[t] - 1.0)).sum::<f64>() / nf;
    }

    let w: Vec<f64> = theta.iter().map(|p| p * (1.0 - p)).collect();
    let mut hessian = vec![0.0; k * k];
    for a in (0..k).filter(|&a| a != j) {
        let xa = data.column(a);
        for b in (a..k).filter(|&b| b != j) {
            let xb = data.column(b);
            let h = (0..n).map(|t| xa[t] * xb[t] * w[t]).sum::<f64>() / nf;
            hessian[a * k + b] = h;
            hessian[b * k + a] = h;
        }
    }
    Ok(NodeScore { node: j, score, hessian })
}

/// Joint law over all `2^K` spin configurations.
///
/// Configuration `c` assigns `x_j = +1` when bit `j` of `c` is set and `-1`
/// otherwise. The unnormalised weight is `exp(sum_{j<k} beta_jk x_j x_k / 2)`,
/// which makes its single-site conditionals equal to `theta_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    k: usize,
    probs: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    pub fn num_nodes(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn prob(&self, spins: &[i8]) -> f64 {
        self.probs[config_index(spins)]
    }

    /// `P(X_j = x_j | X_{-j})` for the configuration `spins`.
    pub fn conditional(&self, spins: &[i8], j: usize) -> f64 {
        let c = config_index(spins);
        let flipped = c ^ (1 << j);
        let (p, q) = (self.probs[c], self.probs[flipped]);
        p / (p + q)
    }
}

/// Spin vector of configuration index `c`.
pub fn config_spins(k: usize, c: usize) -> Vec<i8> {
    (0..k).map(|j| if c >> j & 1 == 1 { 1 } else { -1 }).collect()
}

/// Inverse of [`config_spins`].
pub fn config_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .enumerate()
        .fold(0, |c, (j, &s)| if s > 0 { c | 1 << j } else { c })
}

pub fn exact_distribution(beta: &CouplingVector) -> Result<ExactDistribution> {
    let k = beta.num_nodes();
    if k > MAX_EXACT_NODES {
        return Err(IsingError::Capacity { k, max: MAX_EXACT_NODES });
    }
    let edges = beta.edges();
    let states = 1usize << k;
    let mut logw = Vec::with_capacity(states);
    for c in 0..states {
        let mut e = 0.0;
        for &(i, j, b) in &edges {
            let same = (c >> i & 1) == (c >> j & 1);
            e += if same { b } else { -b };
        }
        logw.push(0.5 * e);
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logw.iter().map(|w| (w - max).exp()).sum();
    let log_partition = max + sum.ln();
    let probs = logw.iter().map(|w| (w - log_partition).exp()).collect();
    Ok(ExactDistribution { k, probs, log_partition })
}
