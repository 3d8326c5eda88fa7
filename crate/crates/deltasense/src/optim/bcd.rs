//! Block coordinate descent on a penalized merit function. One threshold at
//! a time is minimized over its full range (coarse log grid, then a golden
//! section inside the best cell) while the others stay fixed; sweeps repeat
//! until no coordinate moves. The merit adds a linear penalty for budget
//! violation, steep enough that the optimum always sits on the feasible side.

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::metrics::{expected_p_e, expected_power};
use crate::numeric::golden_section_min;
use crate::optim::{solve_equal_delta, Method, OptimizerResult};
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BcdConfig {
    /// Starting thresholds; when absent the shared-threshold solution is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<Vec<f64>>,
    /// Maximum full sweeps over the coordinates.
    pub sweeps: u64,
    /// Coarse grid points per coordinate line search.
    pub grid: usize,
    /// Stop when no coordinate moved more than this in one sweep.
    pub move_tol: f64,
    /// Weight of the budget-violation penalty in the merit.
    pub penalty: f64,
    /// Lower box bound for every threshold.
    pub floor: f64,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            delta0: None,
            sweeps: 30,
            grid: 32,
            move_tol: 1e-4,
            penalty: 10.0,
            floor: 1e-40,
        }
    }
}

/// Minimize expected power under the error budget, one threshold at a time.
pub fn solve_bcd(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &BcdConfig,
) -> Result<OptimizerResult> {
    if cals.is_empty() {
        return Err(ModelError::invalid("no devices to solve for"));
    }
    if cfg.grid < 4 {
        return Err(ModelError::invalid("coordinate grid needs at least 4 points"));
    }
    let n = cals.len();
    let mut evals = 0u64;
    let mut current: Vec<f64> = match &cfg.delta0 {
        Some(d) => {
            if d.len() != n {
                return Err(ModelError::LengthMismatch {
                    left: n,
                    right: d.len(),
                });
            }
            d.iter().map(|&x| x.clamp(cfg.floor, 1.0)).collect()
        }
        None => {
            let r = solve_equal_delta(cals, model, budget)?;
            evals += r.evaluations;
            r.delta.to_vec()
        }
    };

    let merit = |x: &[f64], evals: &mut u64| -> Result<f64> {
        let tv = ThresholdVector::new(x.to_vec())?;
        *evals += 1;
        let w = expected_power(cals, model, &tv)?;
        let pe = expected_p_e(cals, model, &tv)?;
        Ok(w + cfg.penalty * (pe - budget.e).max(0.0))
    };

    let mut merit_cur = merit(&current, &mut evals)?;
    let ln_lo = cfg.floor.ln();
    let mut sweeps_run = 0u64;

    for _ in 0..cfg.sweeps {
        sweeps_run += 1;
        let mut max_move = 0.0f64;
        for j in 0..n {
            // Coarse scan of coordinate j over a log-spaced grid.
            let mut best_idx = 0usize;
            let mut best_val = f64::INFINITY;
            let grid: Vec<f64> = (0..cfg.grid)
                .map(|i| (ln_lo * (1.0 - i as f64 / (cfg.grid - 1) as f64)).exp())
                .collect();
            let mut trial = current.clone();
            for (i, &d) in grid.iter().enumerate() {
                trial[j] = d;
                let v = merit(&trial, &mut evals)?;
                if v < best_val {
                    best_val = v;
                    best_idx = i;
                }
            }
            // Sharpen inside the winning cell (and its neighbors).
            let lo = grid[best_idx.saturating_sub(1)];
            let hi = grid[(best_idx + 1).min(cfg.grid - 1)];
            let mut local_evals = 0u64;
            let line = |d: f64| {
                let mut t = current.clone();
                t[j] = d;
                // Inner closure cannot bubble errors; thresholds built from
                // clamped grid values are always valid.
                let tv = ThresholdVector::new(t).expect("grid thresholds are in range");
                let w = expected_power(cals, model, &tv).expect("lengths match");
                let pe = expected_p_e(cals, model, &tv).expect("lengths match");
                w + cfg.penalty * (pe - budget.e).max(0.0)
            };
            let (d_star, v_star) = if hi > lo {
                local_evals += 60;
                golden_section_min(line, lo, hi, 1e-12 + 1e-9 * (hi - lo), 60)
            } else {
                (grid[best_idx], best_val)
            };
            evals += local_evals;

            let (d_new, v_new) = if v_star < best_val {
                (d_star, v_star)
            } else {
                (grid[best_idx], best_val)
            };
            if v_new < merit_cur - 1e-15 {
                max_move = max_move.max((current[j] - d_new).abs());
                current[j] = d_new;
                merit_cur = v_new;
            }
        }
        if max_move < cfg.move_tol {
            break;
        }
    }

    OptimizerResult::scored(
        Method::Bcd,
        ThresholdVector::new(current)?,
        cals,
        model,
        budget,
        sweeps_run,
        evals,
        0,
    )
}
