//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the solver; values are recomputed from the model
//! definition with plain loops and dense linear algebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ising::model::{pair_table, CouplingVector, SpinDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Couplings with each pair nonzero with probability `density`, magnitude up to `scale`.
pub fn random_beta(k: usize, density: f64, scale: f64, rng: &mut ChaCha8Rng) -> CouplingVector {
    let p = k * (k - 1) / 2;
    let values = (0..p)
        .map(|_| if rng.random_bool(density) { rng.random_range(-scale..scale) } else { 0.0 })
        .collect();
    CouplingVector::from_values(k, values).unwrap()
}

/// Independent fair spins.
pub fn random_data(k: usize, n: usize, rng: &mut ChaCha8Rng) -> SpinDataset {
    let rows: Vec<Vec<i8>> = (0..n).map(|_| (0..k).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()).collect();
    SpinDataset::from_rows(&rows).unwrap()
}

/// `sum_{j<k} beta_jk x_j x_k / 2`.
pub fn energy(beta: &CouplingVector, x: &[i8]) -> f64 {
    let k = x.len();
    let mut e = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            e += beta.get(a, b) * f64::from(x[a]) * f64::from(x[b]);
        }
    }
    e / 2.0
}

/// `P(X_j = x_j | rest)` from the two energies that differ in spin `j`.
pub fn brute_conditional(beta: &CouplingVector, x: &[i8], j: usize) -> f64 {
    let mut y = x.to_vec();
    y[j] = -y[j];
    let (a, b) = (energy(beta, x), energy(beta, &y));
    1.0 / (1.0 + (b - a).exp())
}

/// All `2^K` probabilities, configuration bit `j` set meaning `x_j = +1`.
pub fn brute_joint(beta: &CouplingVector) -> Vec<f64> {
    let k = beta.num_nodes();
    let w: Vec<f64> = (0..1usize << k).map(|c| energy(beta, &spins_of(k, c)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

pub fn spins_of(k: usize, c: usize) -> Vec<i8> {
    (0..k).map(|j| if c >> j & 1 == 1 { 1 } else { -1 }).collect()
}

fn margin(beta: &CouplingVector, data: &SpinDataset, row: usize, j: usize) -> f64 {
    let k = data.num_nodes();
    let m: f64 = (0..k).filter(|&l| l != j).map(|l| beta.get(j, l) * f64::from(data.spin(row, l))).sum();
    f64::from(data.spin(row, j)) * m
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Composite log-likelihood by direct summation.
pub fn loglik(beta: &CouplingVector, data: &SpinDataset) -> f64 {
    let (n, k) = (data.num_obs(), data.num_nodes());
    let mut s = 0.0;
    for row in 0..n {
        for j in 0..k {
            s -= (-margin(beta, data, row, j)).exp().ln_1p();
        }
    }
    s / n as f64
}

/// Central differences of [`loglik`].
pub fn numeric_grad(beta: &CouplingVector, data: &SpinDataset, h: f64) -> Vec<f64> {
    (0..beta.len())
        .map(|i| {
            let mut up = beta.clone();
            up.values_mut()[i] += h;
            let mut dn = beta.clone();
            dn.values_mut()[i] -= h;
            (loglik(&up, data) - loglik(&dn, data)) / (2.0 * h)
        })
        .collect()
}

/// Analytic gradient and Hessian of the composite log-likelihood.
pub fn grad_hessian(beta: &CouplingVector, data: &SpinDataset) -> (DVector<f64>, DMatrix<f64>) {
    let (n, k) = (data.num_obs(), data.num_nodes());
    let table = pair_table(k);
    let p = table.len();
    let mut g = DVector::zeros(p);
    let mut h = DMatrix::zeros(p, p);
    for row in 0..n {
        for j in 0..k {
            let u = margin(beta, data, row, j);
            let s = sigmoid(u);
            // du/dbeta for the pairs containing j
            let d: Vec<(usize, f64)> = table
                .iter()
                .enumerate()
                .filter_map(|(idx, &(a, b))| {
                    let other = if a == j { b } else if b == j { a } else { return None };
                    Some((idx, f64::from(data.spin(row, j)) * f64::from(data.spin(row, other))))
                })
                .collect();
            for &(i1, d1) in &d {
                g[i1] += (1.0 - s) * d1;
                for &(i2, d2) in &d {
                    h[(i1, i2)] -= s * (1.0 - s) * d1 * d2;
                }
            }
        }
    }
    (g / n as f64, h / n as f64)
}

/// Maximizer of `l_c(beta) - sum_i w_i |beta_i|` restricted to `support`,
/// with the signs of the support entries held at `signs`; Newton with
/// step halving.
pub fn restricted_newton(
    data: &SpinDataset,
    weights: &[f64],
    support: &[usize],
    signs: &[f64],
    start: &CouplingVector,
) -> CouplingVector {
    let mut beta = CouplingVector::zeros(data.num_nodes());
    for &i in support {
        beta.values_mut()[i] = start.values()[i];
    }
    let obj = |b: &CouplingVector| loglik(b, data) - support.iter().zip(signs).map(|(&i, s)| weights[i] * s * b.values()[i]).sum::<f64>();
    for _ in 0..100 {
        let (g, h) = grad_hessian(&beta, data);
        let m = support.len();
        let gs = DVector::from_iterator(m, support.iter().zip(signs).map(|(&i, s)| g[i] - weights[i] * s));
        if gs.amax() < 1e-13 {
            break;
        }
        let hs = DMatrix::from_fn(m, m, |a, b| h[(support[a], support[b])]);
        let step = (-hs).lu().solve(&gs).expect("restricted Hessian is nonsingular");
        let base = obj(&beta);
        let mut t = 1.0;
        loop {
            let mut trial = beta.clone();
            for (a, &i) in support.iter().enumerate() {
                trial.values_mut()[i] += t * step[a];
            }
            if obj(&trial) >= base - 1e-15 || t < 1e-8 {
                beta = trial;
                break;
            }
            t /= 2.0;
        }
    }
    beta
}

/// Argmax of `f` over an evenly spaced grid on `[lo, hi]`.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).fold((lo, f(lo)), |best, x| {
        let v = f(x);
        if v > best.1 { (x, v) } else { best }
    })
    .0
}

/// Root of a monotone function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical law of a dataset over configuration indices.
pub fn empirical(data: &SpinDataset) -> Vec<f64> {
    let k = data.num_nodes();
    let mut counts = vec![0.0; 1 << k];
    for row in 0..data.num_obs() {
        let c = (0..k).fold(0usize, |c, j| if data.spin(row, j) > 0 { c | 1 << j } else { c });
        counts[c] += 1.0;
    }
    let n = data.num_obs() as f64;
    counts.into_iter().map(|c| c / n).collect()
}
