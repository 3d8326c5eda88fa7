//! Particle swarm search over threshold vectors, sharing the population
//! knobs and penalty rule with the genetic solver.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::metrics::{expected_p_e, expected_power};
use crate::optim::{EvoConfig, Method, OptimizerResult};
use crate::rng::rng_from_seed;
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_fit: f64,
}

struct SwarmOutcome {
    winner: Vec<f64>,
    /// Best penalized fitness after each generation; exercised by tests.
    #[cfg_attr(not(test), allow(dead_code))]
    trace: Vec<f64>,
    evals: u64,
    /// Evaluation count at which a feasible point at or below the target
    /// power first appeared, if a target was set and reached.
    hit_at: Option<u64>,
}

fn swarm_run(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &EvoConfig,
    target_power: Option<f64>,
) -> Result<SwarmOutcome> {
    let n = cals.len();
    if n == 0 {
        return Err(ModelError::invalid("no devices to solve for"));
    }
    cfg.validate(n)?;
    let penalty = EvoConfig::penalty_weight(n);
    let mut rng = rng_from_seed(cfg.seed);
    let jitter = Normal::new(0.0, 0.05)
        .expect("fixed jitter width is valid");

    let mut evals = 0u64;
    let mut hit_at: Option<u64> = None;
    let mut best_feasible: Option<(Vec<f64>, f64)> = None;
    let mut gbest: Option<(Vec<f64>, f64)> = None;

    let score = |x: &[f64],
                 evals: &mut u64,
                 hit_at: &mut Option<u64>,
                 best_feasible: &mut Option<(Vec<f64>, f64)>|
     -> Result<f64> {
        let tv = ThresholdVector::new(x.to_vec())?;
        let w = expected_power(cals, model, &tv)?;
        let pe = expected_p_e(cals, model, &tv)?;
        *evals += 1;
        if pe <= budget.e {
            if best_feasible.as_ref().map_or(true, |(_, bw)| w < *bw) {
                *best_feasible = Some((x.to_vec(), w));
            }
            if hit_at.is_none() && target_power.map_or(false, |t| w <= t) {
                *hit_at = Some(*evals);
            }
        }
        Ok(w + penalty * (pe - budget.e).max(0.0))
    };

    // Half the swarm starts in a tight cloud around the guide when one is
    // given; particle 0 sits on the guide exactly.
    let mut swarm: Vec<Particle> = Vec::with_capacity(cfg.population);
    for i in 0..cfg.population {
        let x: Vec<f64> = match &cfg.guide {
            Some(g) if i == 0 => g.clone(),
            Some(g) if i < cfg.population / 2 => g
                .iter()
                .map(|&gi| (gi + jitter.sample(&mut rng)).clamp(cfg.floor, 1.0))
                .collect(),
            _ => (0..n)
                .map(|_| (1.0 - rng.random::<f64>()).clamp(cfg.floor, 1.0))
                .collect(),
        };
        let fit = score(&x, &mut evals, &mut hit_at, &mut best_feasible)?;
        if gbest.as_ref().map_or(true, |(_, bf)| fit < *bf) {
            gbest = Some((x.clone(), fit));
        }
        swarm.push(Particle {
            v: vec![0.0; n],
            best_x: x.clone(),
            best_fit: fit,
            x,
        });
    }
    let mut gbest = gbest.expect("population is never empty");
    let mut trace = vec![gbest.1];

    for _ in 0..cfg.generations {
        if hit_at.is_some() {
            break;
        }
        for p in swarm.iter_mut() {
            for d in 0..n {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                p.v[d] = cfg.inertia * p.v[d]
                    + cfg.cognitive * r1 * (p.best_x[d] - p.x[d])
                    + cfg.social * r2 * (gbest.0[d] - p.x[d]);
                p.x[d] = (p.x[d] + p.v[d]).clamp(cfg.floor, 1.0);
            }
            let fit = score(&p.x, &mut evals, &mut hit_at, &mut best_feasible)?;
            if fit < p.best_fit {
                p.best_fit = fit;
                p.best_x = p.x.clone();
            }
            if fit < gbest.1 {
                gbest = (p.x.clone(), fit);
            }
        }
        trace.push(gbest.1);
    }

    let winner = match best_feasible {
        Some((x, _)) => x,
        None => gbest.0,
    };
    Ok(SwarmOutcome {
        winner,
        trace,
        evals,
        hit_at,
    })
}

/// Minimize expected power under the error budget with a particle swarm:
/// zero initial velocities, box-clipped positions, and the shared linear
/// violation penalty. A guide point (when set) seeds half the swarm, which
/// is how a geometry-derived warm start plugs in.
pub fn solve_pso(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &EvoConfig,
) -> Result<OptimizerResult> {
    let out = swarm_run(cals, model, budget, cfg, None)?;
    OptimizerResult::scored(
        Method::Pso,
        ThresholdVector::new(out.winner)?,
        cals,
        model,
        budget,
        cfg.generations,
        out.evals,
        cfg.seed,
    )
}

/// Race the swarm toward a known power level: the number of objective
/// evaluations spent when a feasible point with power at most
/// `target_power` first appears, or `None` if the run ends without one.
/// Useful for comparing warm-started and cold-started swarms.
pub fn pso_evals_to_reach(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &EvoConfig,
    target_power: f64,
) -> Result<Option<u64>> {
    if !(target_power.is_finite() && target_power > 0.0) {
        return Err(ModelError::invalid(format!(
            "target power must be positive and finite, got {target_power}"
        )));
    }
    Ok(swarm_run(cals, model, budget, cfg, Some(target_power))?.hit_at)
}
