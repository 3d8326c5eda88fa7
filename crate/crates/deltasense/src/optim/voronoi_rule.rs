//! Closed-form thresholds from the Voronoi partition: each device claims its
//! cell and picks the threshold whose coverage radius reaches a chosen
//! boundary statistic of that cell (nearest point, mean distance, or farthest
//! vertex). No search involved; one partition, one exponential per device.

use crate::cdf::CalibratedCdf;
use crate::error::Result;
use crate::geometry::Deployment;
use crate::optim::{Method, OptimizerResult};
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};
use crate::voronoi::voronoi_partition;

/// Which cell-boundary distance the coverage radius should match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoronoiVariant {
    /// Nearest boundary point: smallest coverage, may leave cell corners
    /// unheard.
    Min,
    /// Mean boundary distance along the cell perimeter.
    Mean,
    /// Farthest cell vertex: the whole cell is covered.
    Max,
}

impl VoronoiVariant {
    pub fn method(&self) -> Method {
        match self {
            VoronoiVariant::Min => Method::VoronoiMin,
            VoronoiVariant::Mean => Method::VoronoiMean,
            VoronoiVariant::Max => Method::VoronoiMax,
        }
    }
}

/// Threshold rule `delta_j = e^(-eta * omega_j)` with `omega_j` the chosen
/// boundary distance of device `j`'s cell.
pub fn solve_voronoi(
    dep: &Deployment,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    variant: VoronoiVariant,
) -> Result<OptimizerResult> {
    let cells = voronoi_partition(dep)?;
    let delta: Vec<f64> = cells
        .iter()
        .map(|c| {
            let omega = match variant {
                VoronoiVariant::Min => c.omega_min,
                VoronoiVariant::Mean => c.omega_mean,
                VoronoiVariant::Max => c.omega_max,
            };
            // omega = 0 (device on its own cell edge) gives delta = 1.
            (-model.eta * omega).exp().clamp(f64::MIN_POSITIVE, 1.0)
        })
        .collect();
    OptimizerResult::scored(
        variant.method(),
        ThresholdVector::new(delta)?,
        cals,
        model,
        budget,
        1,
        1,
        0,
    )
}
