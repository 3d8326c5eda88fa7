//! Distribution of the squared distance between a device and a uniformly
//! located event, in three forms: a closed arcsin expression (reference),
//! a one-parameter exponential approximation, and a per-device least-squares
//! calibration of that parameter against an empirical CDF.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{Area, Deployment, DeviceGeometry};
use crate::numeric::{clamp_unit, golden_section_min};
use crate::rng::rng_from_seed;
use crate::sensing::SensingModel;

/// Squared coverage radius implied by a threshold: a device with threshold
/// `delta` hears every event within distance `|ln delta| / eta`.
pub fn threshold_z(model: &SensingModel, delta: f64) -> f64 {
    let l = delta.ln();
    l * l / (model.eta * model.eta)
}

/// Closed-form CDF of the squared event distance `Z` for one device.
///
/// Exact for centered and cornered devices while the coverage disk stays
/// inside the area; for general positions it is a documented reference
/// curve and the empirical CDF is authoritative. Output is clamped to
/// [0, 1] and is non-decreasing in `z`.
pub fn exact_cdf_z(geom: &DeviceGeometry, _area: &Area, z: f64) -> Result<f64> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(ModelError::invalid(format!(
            "squared distance must be finite and non-negative, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    // F(z) = z/(2 sqrt(u v)) * (phi + sin(2 phi)/2), phi = arcsin(min(1, sqrt(u/z))).
    // For z <= u this reduces to pi*z / (4 sqrt(u v)): the quarter-disk ratio.
    let phi = (geom.u / z).sqrt().min(1.0).asin();
    let val = z / (2.0 * (geom.u * geom.v).sqrt()) * (phi + 0.5 * (2.0 * phi).sin());
    Ok(clamp_unit(val))
}

/// Per-device exponential CDF scale, fitted once per deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedCdf {
    /// Scale of `F(z) ~ 1 - e^(-2z/w)`, in square meters.
    pub w: f64,
    /// Upper end of the fitted range: `200 / eta^2`.
    pub valid_max_z: f64,
    /// Largest absolute gap between the fit and the empirical CDF on the
    /// fitted range.
    pub fit_error: f64,
}

impl CalibratedCdf {
    pub fn new(w: f64, valid_max_z: f64, fit_error: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ModelError::invalid(format!("cdf scale w must be positive, got {w}")));
        }
        Ok(CalibratedCdf {
            w,
            valid_max_z,
            fit_error,
        })
    }

    /// Homogeneous calibration, useful for synthetic studies: every device
    /// gets the interior-device slope-matching scale `2 L H / pi`.
    pub fn uniform_for_area(area: &Area, model: &SensingModel, n: usize) -> Vec<CalibratedCdf> {
        let w = 2.0 * area.measure() / std::f64::consts::PI;
        vec![
            CalibratedCdf {
                w,
                valid_max_z: 200.0 / (model.eta * model.eta),
                fit_error: 0.0,
            };
            n
        ]
    }
}

/// Exponential approximation `1 - e^(-2z/w)` of the squared-distance CDF.
pub fn approx_cdf_z(cal: &CalibratedCdf, z: f64) -> Result<f64> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(ModelError::invalid(format!(
            "squared distance must be finite and non-negative, got {z}"
        )));
    }
    Ok(-((-2.0 * z / cal.w).exp_m1()))
}

/// Probability that a device senses and transmits in a slot: event occurs
/// (prob `alpha`) and lands within the coverage disk of threshold `delta`.
///
/// Equal to 0 at `delta = 1` and non-increasing in `delta`.
pub fn activation_probability(
    cal: &CalibratedCdf,
    model: &SensingModel,
    delta: f64,
) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(ModelError::invalid(format!(
            "threshold must lie in (0, 1], got {delta}"
        )));
    }
    Ok(model.alpha * approx_cdf_z(cal, threshold_z(model, delta))?)
}

/// Number of grid points used when fitting `w`.
const FIT_GRID: usize = 256;

/// Fit the exponential CDF scale `w` for every device of a deployment.
///
/// For each device, squared distances to `samples` uniform event positions
/// form an empirical CDF; `w` minimizes the sum of squared gaps between
/// `1 - e^(-2z/w)` and that CDF on a uniform grid over `(0, 200/eta^2]`.
/// The largest absolute gap is stored alongside the scale. Deterministic
/// given the seed.
pub fn calibrate_w(
    dep: &Deployment,
    model: &SensingModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<CalibratedCdf>> {
    if samples < 10_000 {
        return Err(ModelError::invalid(format!(
            "calibration needs at least 10000 samples, got {samples}"
        )));
    }
    let area = dep.area();
    let z_max = 200.0 / (model.eta * model.eta);
    let mut rng = rng_from_seed(seed);

    // One shared epicenter sample serves every device.
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            let p = crate::geometry::sample_event_point(area, &mut rng);
            (p.x, p.y)
        })
        .collect();

    let mut out = Vec::with_capacity(dep.len());
    for d in dep.devices() {
        let mut zs: Vec<f64> = points
            .iter()
            .map(|&(x, y)| {
                let dx = x - d.x;
                let dy = y - d.y;
                dx * dx + dy * dy
            })
            .collect();
        zs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are finite"));

        // Empirical CDF at the fit grid, computed by a single merge pass.
        let grid: Vec<f64> = (1..=FIT_GRID)
            .map(|i| z_max * i as f64 / FIT_GRID as f64)
            .collect();
        let mut ecdf = Vec::with_capacity(FIT_GRID);
        let mut idx = 0usize;
        for &g in &grid {
            while idx < zs.len() && zs[idx] <= g {
                idx += 1;
            }
            ecdf.push(idx as f64 / samples as f64);
        }

        let sse = |w: f64| -> f64 {
            grid.iter()
                .zip(&ecdf)
                .map(|(&z, &e)| {
                    let f = -((-2.0 * z / w).exp_m1());
                    (f - e) * (f - e)
                })
                .sum()
        };
        let measure = area.measure();
        let (w, _) = golden_section_min(sse, measure / 10.0, measure * 10.0, 1e-9 * measure, 200);

        let fit_error = grid
            .iter()
            .zip(&ecdf)
            .map(|(&z, &e)| {
                let f = -((-2.0 * z / w).exp_m1());
                (f - e).abs()
            })
            .fold(0.0f64, f64::max);

        out.push(CalibratedCdf {
            w,
            valid_max_z: z_max,
            fit_error,
        });
    }
    Ok(out)
}
