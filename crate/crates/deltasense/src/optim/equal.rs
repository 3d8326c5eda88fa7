//! Shared-threshold solver: every device gets the same `delta`. The expected
//! power is increasing in the common coverage, so the optimum is the largest
//! feasible threshold; a log-spaced scan over squared coverage radii finds the
//! feasibility boundary and a bisection sharpens it.

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::metrics::expected_p_e;
use crate::optim::{Method, OptimizerResult};
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};

/// Grid resolution of the initial feasibility scan.
const SCAN_POINTS: usize = 512;

/// The boundary threshold is sharpened until the error sits this close to
/// the budget (from the feasible side). The threshold itself is far more
/// sensitive than the error near the boundary, so this is kept tight.
const BOUNDARY_TOL: f64 = 1e-9;

fn delta_from_z(model: &SensingModel, z: f64) -> f64 {
    (-model.eta * z.sqrt()).exp().clamp(f64::MIN_POSITIVE, 1.0)
}

/// Minimize expected power over shared thresholds, subject to the budget.
///
/// Scans squared coverage radii `z` on a log grid wide enough to bracket
/// both the single-device closed form and the collision-limited regime,
/// takes the first feasible point (smallest coverage means least power),
/// and bisects against the adjacent infeasible point until the error is
/// within `BOUNDARY_TOL` of the budget. When no scanned point is feasible
/// the error-minimizing threshold is returned with `feasible = false`.
pub fn solve_equal_delta(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
) -> Result<OptimizerResult> {
    if cals.is_empty() {
        return Err(ModelError::invalid("no devices to solve for"));
    }
    let n = cals.len() as f64;
    let w_max = cals.iter().map(|c| c.w).fold(0.0, f64::max);
    // Upper scan end: covers the single-device crossing z = (w/2) ln(alpha/E)
    // and the multi-device dip near s ~ ln(n)/(n-1) with ample margin.
    let z_hi = w_max * ((model.alpha / budget.e).ln() + (n + 1.0).ln());
    let z_lo = z_hi * 1e-9;
    let ratio = (z_hi / z_lo).ln();

    let pe_at = |z: f64| -> Result<f64> {
        let tv = ThresholdVector::uniform(delta_from_z(model, z), cals.len())?;
        expected_p_e(cals, model, &tv)
    };

    let mut evals = 0u64;
    let mut first_feasible: Option<(usize, f64)> = None;
    let mut best_infeasible = (f64::INFINITY, z_lo);
    let mut zs = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        let z = z_lo * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp();
        zs.push(z);
        let pe = pe_at(z)?;
        evals += 1;
        if pe <= budget.e {
            first_feasible = Some((i, z));
            break;
        }
        if pe < best_infeasible.0 {
            best_infeasible = (pe, z);
        }
    }

    let (idx, z_feas) = match first_feasible {
        None => {
            // The whole scan violates the budget: report the least-bad point.
            let delta = ThresholdVector::uniform(delta_from_z(model, best_infeasible.1), cals.len())?;
            return OptimizerResult::scored(
                Method::Equal, delta, cals, model, budget, 1, evals, 0,
            );
        }
        Some(hit) => hit,
    };

    let mut z_good = z_feas;
    if idx > 0 {
        // Bisect the bracket [infeasible, feasible] down to the boundary.
        let mut z_bad = zs[idx - 1];
        for _ in 0..200 {
            let pe_good = pe_at(z_good)?;
            evals += 1;
            if budget.e - pe_good <= BOUNDARY_TOL {
                break;
            }
            let mid = 0.5 * (z_bad + z_good);
            if pe_at(mid)? <= budget.e {
                z_good = mid;
            } else {
                z_bad = mid;
            }
            evals += 1;
        }
    }

    let delta = ThresholdVector::uniform(delta_from_z(model, z_good), cals.len())?;
    OptimizerResult::scored(Method::Equal, delta, cals, model, budget, 1, evals, 0)
}

/// Closed-form shared threshold for a large homogeneous network: with scale
/// `w` and `n` devices, `exp(-sqrt(w (ln n - ln 0.9) / (2 (n - 1))))` for a
/// unit-decay sensing model, rescaled by `eta` through the caller if needed.
///
/// This is the collision-limited regime's balance point; it approaches the
/// scanned optimum from above as `n` grows.
pub fn equal_delta_asymptotic(w: f64, n: usize) -> Result<f64> {
    if !(w.is_finite() && w > 0.0) {
        return Err(ModelError::invalid(format!("scale w must be positive, got {w}")));
    }
    if n < 2 {
        return Err(ModelError::invalid(
            "the asymptotic form needs at least two devices",
        ));
    }
    let nf = n as f64;
    Ok((-(w * (nf.ln() - 0.9f64.ln()) / (2.0 * (nf - 1.0))).sqrt()).exp())
}
