mod common;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::Rng;
use sparse_ising::model::{
    composite_grad, composite_loglik, conditional_probs, config_spins, coordinate_curvature, exact_distribution,
    node_loglik, node_score_hessian, CouplingVector, SpinDataset,
};

#[test]
fn conditionals_match_brute_force_energies() {
    let mut rng = common::rng(1);
    for _ in 0..30 {
        let k = rng.random_range(2..=5);
        let beta = common::random_beta(k, 0.7, 2.0, &mut rng);
        let data = common::random_data(k, 20, &mut rng);
        let probs = conditional_probs(&beta, &data).unwrap();
        for row in 0..data.num_obs() {
            let x = data.row(row);
            for j in 0..k {
                assert_abs_diff_eq!(probs.get(row, j), common::brute_conditional(&beta, &x, j), epsilon = 1e-13);
            }
        }
    }
}

#[test]
fn exact_distribution_matches_enumeration() {
    let mut rng = common::rng(2);
    for _ in 0..20 {
        let k = rng.random_range(2..=6);
        let beta = common::random_beta(k, 0.8, 2.5, &mut rng);
        let exact = exact_distribution(&beta).unwrap();
        let brute = common::brute_joint(&beta);
        for (a, b) in exact.probs().iter().zip(&brute) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let total: f64 = exact.probs().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        for c in 0..exact.probs().len() {
            let x = config_spins(beta.num_nodes(), c);
            for j in 0..beta.num_nodes() {
                assert_abs_diff_eq!(exact.conditional(&x, j), common::brute_conditional(&beta, &x, j), epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn loglik_matches_direct_sum_and_decomposes_by_node() {
    let mut rng = common::rng(3);
    for _ in 0..10 {
        let k = rng.random_range(2..=7);
        let beta = common::random_beta(k, 0.5, 1.5, &mut rng);
        let data = common::random_data(k, 30, &mut rng);
        let l = composite_loglik(&beta, &data).unwrap();
        assert_abs_diff_eq!(l, common::loglik(&beta, &data), epsilon = 1e-12);
        let by_node: f64 = (0..k).map(|j| node_loglik(&beta, &data, j).unwrap()).sum();
        assert_abs_diff_eq!(l, by_node, epsilon = 1e-12);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = common::rng(4);
    for _ in 0..20 {
        let k = rng.random_range(2..=10);
        let n = rng.random_range(5..=50);
        let beta = common::random_beta(k, 0.4, 1.0, &mut rng);
        let data = common::random_data(k, n, &mut rng);
        let g = composite_grad(&beta, &data).unwrap();
        let fd = common::numeric_grad(&beta, &data, 1e-5);
        for (a, b) in g.values().iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3), "analytic {a} vs numeric {b}");
        }
    }
}

#[test]
fn curvature_is_second_derivative_and_bounded() {
    let mut rng = common::rng(5);
    for _ in 0..10 {
        let k = rng.random_range(2..=6);
        let beta = common::random_beta(k, 0.6, 2.0, &mut rng);
        let data = common::random_data(k, 25, &mut rng);
        let (_, h) = common::grad_hessian(&beta, &data);
        let table = sparse_ising::model::pair_table(k);
        for (idx, &(i, j)) in table.iter().enumerate() {
            let c = coordinate_curvature(&beta, &data, i, j).unwrap();
            assert_abs_diff_eq!(c, h[(idx, idx)], epsilon = 1e-13);
            assert!((-0.5..0.0).contains(&c));
        }
    }
}

#[test]
fn node_hessian_is_negative_semidefinite() {
    let mut rng = common::rng(6);
    for _ in 0..20 {
        let k = rng.random_range(2..=8);
        let beta = common::random_beta(k, 0.5, 2.0, &mut rng);
        let data = common::random_data(k, 40, &mut rng);
        for j in 0..k {
            let ns = node_score_hessian(&beta, &data, j).unwrap();
            let h = DMatrix::from_row_slice(k, k, &ns.hessian);
            assert_abs_diff_eq!((&h - h.transpose()).amax(), 0.0, epsilon = 1e-15);
            let min = h.symmetric_eigen().eigenvalues.min();
            assert!(min >= -1e-12, "node {j}: smallest eigenvalue {min}");
            assert_eq!(ns.score[j], 0.0);
        }
    }
}

/// Under the model's own law the node score has mean zero.
#[test]
fn score_has_zero_mean_under_the_model() {
    let mut rng = common::rng(7);
    for _ in 0..10 {
        let k = rng.random_range(2..=5);
        let beta = common::random_beta(k, 0.8, 1.5, &mut rng);
        let exact = exact_distribution(&beta).unwrap();
        let rows: Vec<Vec<i8>> = (0..1usize << k).map(|c| config_spins(k, c)).collect();
        for j in 0..k {
            let mut mean = vec![0.0; k];
            for (c, x) in rows.iter().enumerate() {
                let one = SpinDataset::from_rows(&[x.clone()]).unwrap();
                let s = node_score_hessian(&beta, &one, j).unwrap();
                for l in 0..k {
                    mean[l] += exact.probs()[c] * s.score[l];
                }
            }
            for m in mean {
                assert_abs_diff_eq!(m, 0.0, epsilon = 1e-13);
            }
        }
        // the composite gradient is a sum of node scores, so it also vanishes in expectation
        let weighted: f64 = rows
            .iter()
            .enumerate()
            .map(|(c, x)| {
                let one = SpinDataset::from_rows(&[x.clone()]).unwrap();
                exact.probs()[c] * composite_grad(&beta, &one).unwrap().values().iter().sum::<f64>()
            })
            .sum();
        assert_abs_diff_eq!(weighted, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn zero_couplings_give_fair_coins() {
    let data = common::random_data(4, 10, &mut common::rng(8));
    let probs = conditional_probs(&CouplingVector::zeros(4), &data).unwrap();
    for row in 0..10 {
        for j in 0..4 {
            assert_eq!(probs.get(row, j), 0.5);
        }
    }
}
