//! Genetic search over threshold vectors with a budget-violation penalty.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::metrics::{expected_p_e, expected_power};
use crate::optim::{EvoConfig, Method, OptimizerResult};
use crate::rng::rng_from_seed;
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};

/// One evaluated candidate.
#[derive(Clone)]
struct Scored {
    genes: Vec<f64>,
    fitness: f64,
    power: f64,
    p_e: f64,
}

fn evaluate(
    genes: Vec<f64>,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    penalty: f64,
    evals: &mut u64,
) -> Result<Scored> {
    let tv = ThresholdVector::new(genes.clone())?;
    let power = expected_power(cals, model, &tv)?;
    let p_e = expected_p_e(cals, model, &tv)?;
    *evals += 1;
    Ok(Scored {
        genes,
        fitness: power + penalty * (p_e - budget.e).max(0.0),
        power,
        p_e,
    })
}

/// Pick the fittest of three uniformly drawn members; fitness ties go to
/// the lower population index so reruns stay reproducible.
fn tournament<R: Rng>(pop: &[Scored], rng: &mut R) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 0..2 {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness < pop[best].fitness
            || (pop[c].fitness == pop[best].fitness && c < best)
        {
            best = c;
        }
    }
    best
}

/// Core loop shared with the tests: returns the final population's champion
/// (preferring the best feasible candidate ever seen) and the per-generation
/// best-fitness trace.
fn evolve(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &EvoConfig,
) -> Result<(Scored, Vec<f64>, u64)> {
    let n = cals.len();
    if n == 0 {
        return Err(ModelError::invalid("no devices to solve for"));
    }
    cfg.validate(n)?;
    let penalty = EvoConfig::penalty_weight(n);
    let mut rng = rng_from_seed(cfg.seed);
    let mut evals = 0u64;

    let mut pop: Vec<Scored> = Vec::with_capacity(cfg.population);
    for i in 0..cfg.population {
        let genes: Vec<f64> = if i == 0 && cfg.guide.is_some() {
            cfg.guide.clone().unwrap()
        } else {
            (0..n)
                .map(|_| (1.0 - rng.random::<f64>()).clamp(cfg.floor, 1.0))
                .collect()
        };
        pop.push(evaluate(genes, cals, model, budget, penalty, &mut evals)?);
    }

    let mut champion = best_of(&pop).clone();
    let mut best_feasible: Option<Scored> = pop
        .iter()
        .filter(|s| s.p_e <= budget.e)
        .min_by(|a, b| a.power.total_cmp(&b.power))
        .cloned();
    let mut trace = vec![champion.fitness];

    let sigma = Normal::new(0.0, cfg.mutation_sigma)
        .map_err(|_| ModelError::invalid("mutation width must be positive and finite"))?;

    for _ in 0..cfg.generations {
        // Elites survive unchanged, so the best fitness cannot regress.
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness).then(a.cmp(&b)));
        let mut next: Vec<Scored> = order[..cfg.elitism]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();

        while next.len() < cfg.population {
            let p1 = tournament(&pop, &mut rng);
            let p2 = tournament(&pop, &mut rng);
            let mut child: Vec<f64> = if rng.random::<f64>() < cfg.crossover_rate {
                (0..n)
                    .map(|g| {
                        if rng.random::<f64>() < 0.5 {
                            pop[p1].genes[g]
                        } else {
                            pop[p2].genes[g]
                        }
                    })
                    .collect()
            } else {
                pop[p1].genes.clone()
            };
            for gene in child.iter_mut() {
                if rng.random::<f64>() < cfg.mutation_rate {
                    *gene = (*gene + sigma.sample(&mut rng)).clamp(cfg.floor, 1.0);
                }
            }
            next.push(evaluate(child, cals, model, budget, penalty, &mut evals)?);
        }
        pop = next;

        let gen_best = best_of(&pop);
        if gen_best.fitness < champion.fitness {
            champion = gen_best.clone();
        }
        for s in &pop {
            if s.p_e <= budget.e
                && best_feasible
                    .as_ref()
                    .map_or(true, |bf| s.power < bf.power)
            {
                best_feasible = Some(s.clone());
            }
        }
        trace.push(champion.fitness);
    }

    let winner = best_feasible.unwrap_or(champion);
    Ok((winner, trace, evals))
}

fn best_of(pop: &[Scored]) -> &Scored {
    pop.iter()
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .expect("population is never empty")
}

/// Minimize expected power under the error budget with a steady-state
/// genetic algorithm: tournament selection, uniform crossover, Gaussian
/// mutation, and elitism. Infeasible candidates pay a linear penalty, and
/// the best feasible candidate ever seen wins over a fitter infeasible one.
pub fn solve_ga(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    cfg: &EvoConfig,
) -> Result<OptimizerResult> {
    let (winner, _, evals) = evolve(cals, model, budget, cfg)?;
    OptimizerResult::scored(
        Method::Ga,
        ThresholdVector::new(winner.genes)?,
        cals,
        model,
        budget,
        cfg.generations,
        evals,
        cfg.seed,
    )
}
