//! Estimation accuracy and held-out fit.

use serde::{Deserialize, Serialize};

use crate::error::{IsingError, Result};
use crate::model::{composite_loglik, CouplingVector, SpinDataset};

/// Whether squared errors count each unordered pair once or twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MseConvention {
    #[default]
    UpperTriangle,
    BothTriangles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    /// Number of discovered edges.
    pub nde: usize,
    pub fdr: f64,
    /// Negative composite log-likelihood on held-out data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub me: Option<f64>,
}

pub fn metrics(beta_hat: &CouplingVector, beta_star: &CouplingVector, convention: MseConvention) -> Result<MetricReport> {
    if beta_hat.num_nodes() != beta_star.num_nodes() {
        return Err(IsingError::DimensionMismatch { expected: beta_star.num_nodes(), found: beta_hat.num_nodes() });
    }
    let sse: f64 = beta_hat.values().iter().zip(beta_star.values()).map(|(a, b)| (a - b).powi(2)).sum();
    let mse = match convention {
        MseConvention::UpperTriangle => sse,
        MseConvention::BothTriangles => 2.0 * sse,
    };
    let nde = beta_hat.nnz();
    let false_discoveries =
        beta_hat.values().iter().zip(beta_star.values()).filter(|(a, b)| **a != 0.0 && **b == 0.0).count();
    let fdr = false_discoveries as f64 / nde.max(1) as f64;
    Ok(MetricReport { mse, nde, fdr, me: None })
}

/// `-l_c` of `beta_hat` on `test`.
pub fn model_error(beta_hat: &CouplingVector, test: &SpinDataset) -> Result<f64> {
    Ok(-composite_loglik(beta_hat, test)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recovery_and_empty_estimate() {
        let star = CouplingVector::from_values(3, vec![1.5, 0.0, -1.2]).unwrap();
        let m = metrics(&star, &star, MseConvention::UpperTriangle).unwrap();
        assert_eq!((m.mse, m.nde, m.fdr), (0.0, 2, 0.0));
        let m = metrics(&CouplingVector::zeros(3), &star, MseConvention::UpperTriangle).unwrap();
        assert!((m.mse - (1.5f64.powi(2) + 1.2f64.powi(2))).abs() < 1e-15);
        assert_eq!((m.nde, m.fdr), (0, 0.0));
        let both = metrics(&CouplingVector::zeros(3), &star, MseConvention::BothTriangles).unwrap();
        assert_eq!(both.mse, 2.0 * m.mse);
    }

    #[test]
    fn false_discoveries() {
        let star = CouplingVector::from_values(3, vec![1.5, 0.0, 0.0]).unwrap();
        let hat = CouplingVector::from_values(3, vec![1.0, 0.2, -0.1]).unwrap();
        let m = metrics(&hat, &star, MseConvention::UpperTriangle).unwrap();
        assert_eq!(m.nde, 3);
        assert!((m.fdr - 2.0 / 3.0).abs() < 1e-15);
        assert!(metrics(&hat, &CouplingVector::zeros(4), MseConvention::UpperTriangle).is_err());
    }

    #[test]
    fn zero_model_error() {
        let d = SpinDataset::from_rows(&[vec![1i8, -1, 1, 1], vec![-1, 1, 1, -1]]).unwrap();
        let me = model_error(&CouplingVector::zeros(4), &d).unwrap();
        assert!((me - 4.0 * 2f64.ln()).abs() < 1e-14);
    }
}
