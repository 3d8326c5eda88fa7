//! Threshold optimizers. All of them minimize the expected per-device
//! transmit power subject to the expected error probability staying within
//! the budget, and all report their answer through [`OptimizerResult`] so
//! feasibility is judged by one shared rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::metrics::{expected_p_e, expected_power};
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};

pub mod bcd;
pub mod equal;
pub mod ga;
pub mod knn;
pub mod pso;
pub mod qlearn;
pub mod sca;
pub mod voronoi_rule;

pub use bcd::{solve_bcd, BcdConfig};
pub use equal::{equal_delta_asymptotic, solve_equal_delta};
pub use ga::solve_ga;
pub use knn::{solve_knn_bayes, ClusterGraph};
pub use pso::{pso_evals_to_reach, solve_pso};
pub use qlearn::{solve_qlearning, QLearningConfig, QTable};
pub use sca::{initial_point, solve_sca, ScaConfig};
pub use voronoi_rule::{solve_voronoi, VoronoiVariant};

/// Absolute slack added to the budget when judging feasibility, so that
/// solutions sitting numerically on the boundary count as feasible.
pub const FEAS_TOL: f64 = 1e-9;

/// The available solution strategies, with their stable string tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Equal,
    Sca,
    Bcd,
    VoronoiMin,
    VoronoiMean,
    VoronoiMax,
    Knn,
    Ga,
    Pso,
    Qlearn,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Equal,
        Method::Sca,
        Method::Bcd,
        Method::VoronoiMin,
        Method::VoronoiMean,
        Method::VoronoiMax,
        Method::Knn,
        Method::Ga,
        Method::Pso,
        Method::Qlearn,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Equal => "equal",
            Method::Sca => "sca",
            Method::Bcd => "bcd",
            Method::VoronoiMin => "voronoi_min",
            Method::VoronoiMean => "voronoi_mean",
            Method::VoronoiMax => "voronoi_max",
            Method::Knn => "knn",
            Method::Ga => "ga",
            Method::Pso => "pso",
            Method::Qlearn => "qlearn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| {
                ModelError::invalid(format!(
                    "unknown method '{s}'; expected one of {}",
                    Method::ALL.map(|m| m.tag()).join(", ")
                ))
            })
    }
}

/// A solver's answer, scored once with the shared analytic metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub method: Method,
    pub delta: ThresholdVector,
    /// Expected per-device transmit power of `delta` (the minimized value).
    pub objective: f64,
    /// Expected per-slot error probability of `delta`.
    pub expected_p_e: f64,
    /// True exactly when `expected_p_e <= budget + FEAS_TOL`.
    pub feasible: bool,
    /// Outer iterations (sweeps, generations, episodes) the solver ran.
    pub iterations: u64,
    /// Objective/constraint evaluations the solver spent.
    pub evaluations: u64,
    /// RNG seed the solver consumed (0 for deterministic methods).
    pub seed: u64,
}

impl OptimizerResult {
    /// Score a candidate. This is the only constructor, so the feasibility
    /// flag can never drift from the reported error probability.
    #[allow(clippy::too_many_arguments)]
    pub fn scored(
        method: Method,
        delta: ThresholdVector,
        cals: &[CalibratedCdf],
        model: &SensingModel,
        budget: &ErrorBudget,
        iterations: u64,
        evaluations: u64,
        seed: u64,
    ) -> Result<Self> {
        let objective = expected_power(cals, model, &delta)?;
        let report = check_feasibility(cals, model, &delta, budget)?;
        Ok(OptimizerResult {
            method,
            delta,
            objective,
            expected_p_e: budget.e - report.margin,
            feasible: report.feasible,
            iterations,
            evaluations,
            seed,
        })
    }
}

/// Outcome of a feasibility check: the flag plus the signed slack
/// `margin = E - expected_p_e` (negative when the budget is violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub margin: f64,
}

/// Does `delta` keep the expected error within the budget, and by how much?
pub fn check_feasibility(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
    budget: &ErrorBudget,
) -> Result<FeasibilityReport> {
    let pe = expected_p_e(cals, model, delta)?;
    Ok(FeasibilityReport {
        feasible: pe <= budget.e + FEAS_TOL,
        margin: budget.e - pe,
    })
}

/// Smallest threshold worth distinguishing: below `e^(-eta * diagonal)`
/// every device hears every event, so search boxes stop there.
pub fn threshold_floor(model: &SensingModel, diagonal: f64) -> f64 {
    (-model.eta * diagonal).exp().max(f64::MIN_POSITIVE)
}

/// Shared knobs of the population methods (selection and swarm variants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoConfig {
    /// Population / swarm size; at least 2.
    pub population: usize,
    /// Generations / velocity updates.
    pub generations: u64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Gaussian mutation width in threshold units.
    pub mutation_sigma: f64,
    /// Per-gene parent-swap probability in uniform crossover.
    pub crossover_rate: f64,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// RNG seed; fixed seed means identical runs.
    pub seed: u64,
    /// Swarm inertia weight.
    pub inertia: f64,
    /// Pull toward each particle's own best position.
    pub cognitive: f64,
    /// Pull toward the swarm-wide best position.
    pub social: f64,
    /// Optional warm-start point; half the swarm (or one elite) starts in a
    /// small cloud around it.
    pub guide: Option<Vec<f64>>,
    /// Lower clip for every threshold.
    pub floor: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            population: 48,
            generations: 40,
            mutation_rate: 0.3,
            mutation_sigma: 0.1,
            crossover_rate: 0.9,
            elitism: 2,
            seed: 1,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            guide: None,
            floor: 1e-40,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.population < 2 {
            return Err(ModelError::invalid("population must be at least 2"));
        }
        for (name, r) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(ModelError::invalid(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if self.elitism >= self.population {
            return Err(ModelError::invalid("elitism must leave room for offspring"));
        }
        if let Some(g) = &self.guide {
            if g.len() != n {
                return Err(ModelError::LengthMismatch {
                    left: n,
                    right: g.len(),
                });
            }
        }
        Ok(())
    }

    /// Violation penalty weight: steep enough to dominate the objective,
    /// which never exceeds `alpha`.
    pub fn penalty_weight(n: usize) -> f64 {
        10.0 * n as f64
    }
}
