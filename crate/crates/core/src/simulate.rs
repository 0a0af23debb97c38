//! Synthetic Ising models: graph generators, coupling draws, and samplers.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, IsingError, Result};
use crate::model::{config_spins, exact_distribution, logistic, CouplingVector, SpinDataset, MAX_EXACT_NODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GraphKind {
    /// Path `0 - 1 - ... - edges`, remaining nodes isolated.
    Chain { edges: usize },
    /// 4-neighbour grid, nodes numbered row by row.
    Lattice4 { rows: usize, cols: usize },
    /// Each pair joined independently with probability `degree / (K - 1)`.
    Random { degree: f64, seed: u64 },
    Custom,
}

/// Undirected graph over `K` nodes, edges stored 0-based with `j < k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
    pub kind: GraphKind,
}

impl GraphSpec {
    /// Full chain over `k` nodes.
    pub fn chain(k: usize) -> Result<Self> {
        Self::chain_with_edges(k, k.saturating_sub(1))
    }

    /// Chain over the first `s + 1` nodes.
    pub fn chain_with_edges(k: usize, s: usize) -> Result<Self> {
        if k < 2 || s > k - 1 {
            return invalid(format!("chain with {s} edges does not fit {k} nodes"));
        }
        let edges = (0..s).map(|i| (i, i + 1)).collect();
        Ok(Self { k, edges, kind: GraphKind::Chain { edges: s } })
    }

    pub fn lattice4(rows: usize, cols: usize) -> Result<Self> {
        let k = rows * cols;
        if k < 2 {
            return invalid(format!("{rows}x{cols} lattice has fewer than 2 nodes"));
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        edges.sort_unstable();
        Ok(Self { k, edges, kind: GraphKind::Lattice4 { rows, cols } })
    }

    pub fn random(k: usize, degree: f64, seed: u64) -> Result<Self> {
        if k < 2 || !(degree >= 0.0 && degree <= (k - 1) as f64) {
            return invalid(format!("degree {degree} out of range for {k} nodes"));
        }
        let prob = degree / (k - 1) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = crate::model::pairs(k).filter(|_| rng.random::<f64>() < prob).collect();
        Ok(Self { k, edges, kind: GraphKind::Random { degree, seed } })
    }

    /// Validates and normalises an explicit 0-based edge list.
    pub fn custom(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if k < 2 {
            return invalid(format!("need at least 2 nodes, got {k}"));
        }
        let mut out = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return invalid(format!("self-loop at node {}", a + 1));
            }
            if a >= k || b >= k {
                return invalid(format!("edge ({}, {}) outside 1..={k}", a + 1, b + 1));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        if out.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate edge in edge list");
        }
        Ok(Self { k, edges: out, kind: GraphKind::Custom })
    }

    /// Parses `j k` lines (1-based, `j < k`). Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(k: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| IsingError::Parse { line: lineno + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!("expected 2 fields, found {}", fields.len())));
            }
            let a: usize = fields[0].parse().map_err(|e| parse_err(format!("{e}")))?;
            let b: usize = fields[1].parse().map_err(|e| parse_err(format!("{e}")))?;
            if a == 0 || b == 0 {
                return Err(parse_err("node ids are 1-based".into()));
            }
            if a >= b {
                return Err(parse_err(format!("expected j < k, got {a} {b}")));
            }
            edges.push((a - 1, b - 1));
        }
        Self::custom(k, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(a, b)| format!("{} {}\n", a + 1, b + 1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub graph: GraphSpec,
    pub beta_star: CouplingVector,
    /// Number of nonzero couplings.
    pub s: usize,
}

/// Couplings `t * s` on the graph edges with `t ~ U[1, 2]` and a fair random sign.
pub fn gen_truth(spec: &GraphSpec, seed: u64) -> Result<SimulationTruth> {
    let spec = GraphSpec { kind: spec.kind.clone(), ..GraphSpec::custom(spec.k, &spec.edges)? };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta = CouplingVector::zeros(spec.k);
    for &(a, b) in &spec.edges {
        let magnitude: f64 = rng.random_range(1.0..=2.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        beta.set(a, b, sign * magnitude);
    }
    Ok(SimulationTruth { s: spec.edges.len(), graph: spec, beta_star: beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in: 1000, thinning: 10, seed: 0 }
    }
}

/// Single-site Gibbs sampler: each sweep visits nodes in order and draws
/// `x_j = +1` with probability `logistic(sum_k beta_jk x_k)`.
pub fn gibbs_sample(beta: &CouplingVector, n: usize, cfg: &GibbsConfig) -> Result<SpinDataset> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    if cfg.thinning == 0 {
        return invalid("thinning must be at least 1");
    }
    let k = beta.num_nodes();
    let mut neighbours: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for (a, b, v) in beta.edges() {
        neighbours[a].push((b, v));
        neighbours[b].push((a, v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state: Vec<i8> = (0..k).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    let sweep = |state: &mut Vec<i8>, rng: &mut ChaCha8Rng| {
        for j in 0..k {
            let m: f64 = neighbours[j].iter().map(|&(l, v)| v * state[l] as f64).sum();
            state[j] = if rng.random::<f64>() < logistic(m) { 1 } else { -1 };
        }
    };
    for _ in 0..cfg.burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut out = Vec::with_capacity(n * k);
    for _ in 0..n {
        for _ in 0..cfg.thinning {
            sweep(&mut state, &mut rng);
        }
        out.extend_from_slice(&state);
    }
    SpinDataset::from_row_major(n, k, &out)
}

/// I.i.d. draws from the exactly enumerated joint law.
pub fn exact_sample(beta: &CouplingVector, n: usize, seed: u64) -> Result<SpinDataset> {
    let k = beta.num_nodes();
    if k > MAX_EXACT_NODES {
        return Err(IsingError::Capacity { k, max: MAX_EXACT_NODES });
    }
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let dist = exact_distribution(beta)?;
    let index = WeightedIndex::new(dist.probs()).map_err(|e| IsingError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * k);
    for _ in 0..n {
        out.extend(config_spins(k, index.sample(&mut rng)));
    }
    SpinDataset::from_row_major(n, k, &out)
}
