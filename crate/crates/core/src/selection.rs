//! BIC tuning along a solution path.

use serde::{Deserialize, Serialize};

use crate::cma::SolutionPath;
use crate::error::{IsingError, Result};
use crate::model::{composite_loglik, CouplingVector, SpinDataset};

/// How the composite log-likelihood enters the BIC score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BicScale {
    /// `2 N l_c - log(N) df`: total, not averaged, log-likelihood.
    #[default]
    Total,
    /// `2 l_c - log(N) df` with the per-observation average.
    Averaged,
}

pub fn bic_score(loglik: f64, df: usize, n: usize, scale: BicScale) -> f64 {
    let fit = match scale {
        BicScale::Total => 2.0 * n as f64 * loglik,
        BicScale::Averaged => 2.0 * loglik,
    };
    fit - (n as f64).ln() * df as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicEntry {
    pub lambda: f64,
    pub score: f64,
    pub df: usize,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicReport {
    pub entries: Vec<BicEntry>,
    pub chosen: usize,
    pub scale: BicScale,
}

impl BicReport {
    pub fn chosen_lambda(&self) -> f64 {
        self.entries[self.chosen].lambda
    }
}

/// Index of the best score; ties go to the larger `lambda`.
fn argmax(entries: &[BicEntry]) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        let b = &entries[best];
        if e.score > b.score || (e.score == b.score && e.lambda > b.lambda) {
            best = i;
        }
    }
    best
}

/// Scores arbitrary `(lambda, beta)` candidates.
pub fn bic_select_fits<'a, I>(candidates: I, data: &SpinDataset, scale: BicScale) -> Result<BicReport>
where
    I: IntoIterator<Item = (f64, &'a CouplingVector)>,
{
    let n = data.num_obs();
    let entries = candidates
        .into_iter()
        .map(|(lambda, beta)| {
            let loglik = composite_loglik(beta, data)?;
            let df = beta.nnz();
            Ok(BicEntry { lambda, score: bic_score(loglik, df, n, scale), df, loglik })
        })
        .collect::<Result<Vec<_>>>()?;
    if entries.is_empty() {
        return Err(IsingError::EmptyPath);
    }
    let chosen = argmax(&entries);
    Ok(BicReport { entries, chosen, scale })
}

pub fn bic_select(path: &SolutionPath, data: &SpinDataset) -> Result<BicReport> {
    bic_select_with(path, data, BicScale::Total)
}

pub fn bic_select_with(path: &SolutionPath, data: &SpinDataset, scale: BicScale) -> Result<BicReport> {
    bic_select_fits(path.lambdas.iter().copied().zip(path.fits.iter().map(|f| &f.beta)), data, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(lambda: f64, loglik: f64, df: usize) -> BicEntry {
        BicEntry { lambda, score: bic_score(loglik, df, 100, BicScale::Total), df, loglik }
    }

    #[test]
    fn prefers_fewer_parameters_at_equal_fit() {
        let e = vec![entry(0.2, -3.0, 5), entry(0.1, -3.0, 3)];
        assert_eq!(argmax(&e), 1);
    }

    #[test]
    fn tie_goes_to_larger_lambda() {
        let e = vec![entry(0.1, -3.0, 3), entry(0.3, -3.0, 3), entry(0.2, -3.0, 3)];
        assert_eq!(argmax(&e), 1);
    }

    #[test]
    fn single_and_empty() {
        let data = SpinDataset::from_rows(&[vec![1i8, 1], vec![-1, 1]]).unwrap();
        let beta = CouplingVector::zeros(2);
        let r = bic_select_fits([(0.5, &beta)], &data, BicScale::Total).unwrap();
        assert_eq!(r.chosen, 0);
        let empty: Vec<(f64, &CouplingVector)> = vec![];
        assert_eq!(bic_select_fits(empty, &data, BicScale::Total), Err(IsingError::EmptyPath));
    }

    #[test]
    fn order_invariance() {
        let e = vec![entry(0.3, -3.5, 1), entry(0.2, -3.1, 4), entry(0.1, -3.0, 9)];
        let chosen = e[argmax(&e)].lambda;
        let mut rev = e.clone();
        rev.reverse();
        assert_eq!(rev[argmax(&rev)].lambda, chosen);
    }

    #[test]
    fn scale_switch() {
        assert_eq!(bic_score(-1.0, 2, 100, BicScale::Averaged), -2.0 - 2.0 * 100f64.ln());
        assert_eq!(bic_score(-1.0, 2, 100, BicScale::Total), -200.0 - 2.0 * 100f64.ln());
    }
}
