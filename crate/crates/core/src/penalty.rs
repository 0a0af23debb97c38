//! LASSO and SCAD penalties.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default SCAD concavity parameter.
pub const SCAD_A: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Lasso,
    Scad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    kind: PenaltyKind,
    lambda: f64,
    a: f64,
}

impl Penalty {
    pub fn lasso(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
        }
        Ok(Self { kind: PenaltyKind::Lasso, lambda, a: SCAD_A })
    }

    pub fn scad(lambda: f64) -> Result<Self> {
        Self::scad_with_a(lambda, SCAD_A)
    }

    pub fn scad_with_a(lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
        }
        if !(a > 2.0 && a.is_finite()) {
            return invalid(format!("SCAD parameter a must exceed 2, got {a}"));
        }
        Ok(Self { kind: PenaltyKind::Scad, lambda, a })
    }

    pub fn new(kind: PenaltyKind, lambda: f64, a: f64) -> Result<Self> {
        match kind {
            PenaltyKind::Lasso => Self::lasso(lambda),
            PenaltyKind::Scad => Self::scad_with_a(lambda, a),
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `P'_lambda(t)` for `t >= 0`.
    pub fn deriv(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return invalid(format!("penalty argument must be nonnegative, got {t}"));
        }
        Ok(self.deriv_unchecked(t))
    }

    /// `P_lambda(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return invalid(format!("penalty argument must be nonnegative, got {t}"));
        }
        Ok(self.value_unchecked(t))
    }

    #[inline]
    pub(crate) fn deriv_unchecked(&self, t: f64) -> f64 {
        let l = self.lambda;
        match self.kind {
            PenaltyKind::Lasso => l,
            PenaltyKind::Scad => {
                if t <= l {
                    l
                } else {
                    (self.a * l - t).max(0.0) / (self.a - 1.0)
                }
            }
        }
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        let l = self.lambda;
        match self.kind {
            PenaltyKind::Lasso => l * t,
            PenaltyKind::Scad => {
                let a = self.a;
                if t <= l {
                    l * t
                } else if t <= a * l {
                    (2.0 * a * l * t - t * t - l * l) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * l * l / 2.0
                }
            }
        }
    }

    /// `sum_{j<k} P_lambda(|beta_jk|)`.
    pub fn total(&self, values: &[f64]) -> f64 {
        values.iter().map(|v| self.value_unchecked(v.abs())).sum()
    }
}
