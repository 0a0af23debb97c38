mod common;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use sparse_ising::model::{exact_distribution, CouplingVector};
use sparse_ising::simulate::{exact_sample, gen_truth, gibbs_sample, GibbsConfig, GraphSpec};

fn k3_truth() -> CouplingVector {
    CouplingVector::from_values(3, vec![1.2, -0.7, 0.9]).unwrap()
}

#[test]
fn gibbs_law_approaches_the_exact_law() {
    let beta = k3_truth();
    let exact = exact_distribution(&beta).unwrap();
    let small = gibbs_sample(&beta, 2_000, &GibbsConfig { seed: 1, ..Default::default() }).unwrap();
    let large = gibbs_sample(&beta, 50_000, &GibbsConfig { seed: 1, ..Default::default() }).unwrap();
    let tv_small = common::total_variation(&common::empirical(&small), exact.probs());
    let tv_large = common::total_variation(&common::empirical(&large), exact.probs());
    assert!(tv_large < 0.02, "tv {tv_large}");
    assert!(tv_large < tv_small);
}

/// Two-sample chi-square homogeneity test between Gibbs and exact draws.
#[test]
fn gibbs_and_exact_draws_are_homogeneous() {
    for (seed, beta) in [(3u64, k3_truth()), (4, gen_truth(&GraphSpec::chain(4).unwrap(), 4).unwrap().beta_star)] {
        let n = 20_000;
        let a = common::empirical(&gibbs_sample(&beta, n, &GibbsConfig { seed, ..Default::default() }).unwrap());
        let b = common::empirical(&exact_sample(&beta, n, seed).unwrap());
        let mut stat = 0.0;
        let mut cells = 0;
        for (pa, pb) in a.iter().zip(&b) {
            let (ca, cb) = (pa * n as f64, pb * n as f64);
            let pooled = (ca + cb) / 2.0;
            if pooled > 0.0 {
                stat += (ca - pooled).powi(2) / pooled + (cb - pooled).powi(2) / pooled;
                cells += 1;
            }
        }
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "seed {seed}: chi-square {stat} on {} df, p = {p}", cells - 1);
    }
}

#[test]
fn samplers_are_reproducible() {
    let beta = k3_truth();
    let cfg = GibbsConfig { seed: 11, burn_in: 10, thinning: 2 };
    assert_eq!(gibbs_sample(&beta, 100, &cfg).unwrap(), gibbs_sample(&beta, 100, &cfg).unwrap());
    assert_eq!(exact_sample(&beta, 100, 5).unwrap(), exact_sample(&beta, 100, 5).unwrap());
    assert_ne!(exact_sample(&beta, 100, 5).unwrap(), exact_sample(&beta, 100, 6).unwrap());
}

#[test]
fn truth_magnitudes_and_signs() {
    let spec = GraphSpec::lattice4(5, 6).unwrap();
    let truth = gen_truth(&spec, 7).unwrap();
    assert_eq!(truth.s, 49);
    assert_eq!(truth.beta_star.nnz(), 49);
    let vals: Vec<f64> = truth.beta_star.values().iter().copied().filter(|v| *v != 0.0).collect();
    assert!(vals.iter().all(|v| (1.0..=2.0).contains(&v.abs())));
    assert!(vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0));
    for &(a, b) in &spec.edges {
        assert_ne!(truth.beta_star.get(a, b), 0.0);
    }
}
