//! The sensing model: event influence decays exponentially with distance,
//! each device transmits when the sensed power clears its threshold, and a
//! network-wide error budget bounds the tolerated expected error.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Sensitivity decay `eta` (1/m) and per-slot event probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    pub eta: f64,
    pub alpha: f64,
}

impl SensingModel {
    pub fn new(eta: f64, alpha: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(ModelError::invalid(format!("eta must be positive, got {eta}")));
        }
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::invalid(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(SensingModel { eta, alpha })
    }
}

/// Sensed power at distance `d` from the epicenter: `e^(-eta * d)`.
///
/// Strictly decreasing in `d`, equal to 1 at `d = 0`.
pub fn sensing_power(model: &SensingModel, d: f64) -> Result<f64> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(ModelError::invalid(format!(
            "distance must be finite and non-negative, got {d}"
        )));
    }
    Ok((-model.eta * d).exp())
}

/// Per-device transmission thresholds, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector {
    delta: Vec<f64>,
}

impl ThresholdVector {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.is_empty() {
            return Err(ModelError::invalid("threshold vector must be non-empty"));
        }
        for (j, &d) in delta.iter().enumerate() {
            if !(d.is_finite() && d > 0.0 && d <= 1.0) {
                return Err(ModelError::invalid(format!(
                    "threshold {j} must lie in (0, 1], got {d}"
                )));
            }
        }
        Ok(ThresholdVector { delta })
    }

    /// All devices share one threshold.
    pub fn uniform(delta: f64, n: usize) -> Result<Self> {
        Self::new(vec![delta; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.delta.clone()
    }
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = ModelError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ThresholdVector::new(v)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Vec<f64> {
        t.delta
    }
}

impl std::ops::Index<usize> for ThresholdVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.delta[i]
    }
}

/// Upper bound `E` on the expected error probability, strictly between 0 and
/// the event probability `alpha` (at `E >= alpha` the constraint is vacuous:
/// even a network that never transmits satisfies it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub e: f64,
}

impl ErrorBudget {
    pub fn new(e: f64, model: &SensingModel) -> Result<Self> {
        if !(e.is_finite() && e > 0.0 && e < model.alpha) {
            return Err(ModelError::invalid(format!(
                "error budget must lie strictly in (0, alpha={}), got {e}",
                model.alpha
            )));
        }
        Ok(ErrorBudget { e })
    }
}
