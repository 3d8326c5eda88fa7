//! Neighborhood-propagation heuristic: each device matches its activation
//! probability to what its nearest neighbors' activity predicts for it,
//! then a uniform rescale pulls the result onto the error budget.

use crate::cdf::{activation_probability, CalibratedCdf};
use crate::error::{ModelError, Result};
use crate::geometry::Deployment;
use crate::metrics::{conditional_activation, expected_p_e};
use crate::optim::{solve_equal_delta, Method, OptimizerResult};
use crate::rng::rng_from_seed;
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};
use crate::voronoi::voronoi_partition;

use rand::Rng;

/// Number of radial quadrature nodes when averaging the overlap of two
/// coverage disks over the conditioning device's sensing radius.
const COUPLING_NODES: usize = 8;

/// Sweep-to-sweep movement below which the propagation has settled.
const SETTLE_TOL: f64 = 1e-4;

/// Log-spaced candidate count for the uniform feasibility rescale.
const SCALE_GRID: usize = 512;

/// K-nearest-neighbor graph with symmetric closure.
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    pub k: usize,
    /// Sorted neighbor lists; `j in neighbors[h]` iff `h in neighbors[j]`.
    pub neighbors: Vec<Vec<usize>>,
    /// Connected components of the closed graph.
    pub components: usize,
}

impl ClusterGraph {
    pub fn build(dep: &Deployment, k: usize) -> Result<Self> {
        let n = dep.len();
        if n < 2 {
            return Err(ModelError::invalid(
                "neighbor graphs need at least two devices",
            ));
        }
        if k == 0 || k >= n {
            return Err(ModelError::invalid(format!(
                "k must lie in 1..{n}, got {k}"
            )));
        }
        let devices = dep.devices();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            let mut by_distance: Vec<(f64, usize)> = (0..n)
                .filter(|&h| h != j)
                .map(|h| {
                    let dx = devices[j].x - devices[h].x;
                    let dy = devices[j].y - devices[h].y;
                    (dx.hypot(dy), h)
                })
                .collect();
            by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, h) in by_distance.iter().take(k) {
                if !neighbors[j].contains(&h) {
                    neighbors[j].push(h);
                }
                if !neighbors[h].contains(&j) {
                    neighbors[h].push(j);
                }
            }
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
        }

        // Count components with union-find over the closed edge set.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (j, list) in neighbors.iter().enumerate() {
            for &h in list {
                let (a, b) = (find(&mut parent, j), find(&mut parent, h));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
        roots.sort_unstable();
        roots.dedup();

        Ok(ClusterGraph {
            k,
            neighbors,
            components: roots.len(),
        })
    }
}

/// Probability that device `j` also hears an event, given that `h` heard
/// it: an average of the disk-overlap activation over eight radial event
/// positions spread across `h`'s sensing radius.
fn coupling(
    dep: &Deployment,
    model: &SensingModel,
    delta_j: f64,
    h: usize,
    j: usize,
    radius_h: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for node in 0..COUPLING_NODES {
        let frac = (node as f64 + 0.5) / COUPLING_NODES as f64;
        let d_ih = radius_h * frac.sqrt();
        total += conditional_activation(dep, model, delta_j, h, j, d_ih)?;
    }
    Ok(total / COUPLING_NODES as f64)
}

/// One in-place propagation sweep in the given device order; returns the
/// largest single-threshold move.
fn sweep_once(
    dep: &Deployment,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    graph: &ClusterGraph,
    order: &[usize],
    delta: &mut [f64],
) -> Result<f64> {
    let alpha = model.alpha;
    let mut max_move = 0.0f64;
    for &j in order {
        let mut p_j = 0.0;
        for &h in &graph.neighbors[j] {
            let p_h = activation_probability(&cals[h], model, delta[h])?;
            if p_h <= 0.0 {
                continue;
            }
            let radius_h = -delta[h].ln() / model.eta;
            if radius_h <= 0.0 {
                continue;
            }
            p_j += coupling(dep, model, delta[j], h, j, radius_h)? * p_h;
        }
        // The estimate is a sum of overlaps, so cap it strictly below the
        // event rate before inverting the coverage law.
        p_j = p_j.clamp(0.0, alpha * (1.0 - 1e-9));
        let z = -(cals[j].w / 2.0) * (1.0 - p_j / alpha).ln();
        let next = (-model.eta * z.sqrt()).exp().clamp(f64::MIN_POSITIVE, 1.0);
        max_move = max_move.max((next - delta[j]).abs());
        delta[j] = next;
    }
    Ok(max_move)
}

/// Scale every threshold by one common factor until the budget holds,
/// preferring the gentlest rescale; falls back to the least-violating
/// candidate when no factor works.
fn project_uniform_scale(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    delta: &[f64],
    evals: &mut u64,
) -> Result<Vec<f64>> {
    let pe_of = |c: f64, evals: &mut u64| -> Result<(Vec<f64>, f64)> {
        let scaled: Vec<f64> = delta
            .iter()
            .map(|&d| (c * d).clamp(f64::MIN_POSITIVE, 1.0))
            .collect();
        let tv = ThresholdVector::new(scaled.clone())?;
        *evals += 1;
        Ok((scaled, expected_p_e(cals, model, &tv)?))
    };

    let (plain, pe) = pe_of(1.0, evals)?;
    if pe <= budget.e {
        return Ok(plain);
    }
    let ln_lo = 1e-9f64.ln();
    let ln_hi = 1e9f64.ln();
    let mut best_feasible: Option<(f64, Vec<f64>)> = None;
    let mut least_bad = (pe, plain);
    for i in 0..SCALE_GRID {
        let ln_c = ln_lo + (ln_hi - ln_lo) * i as f64 / (SCALE_GRID - 1) as f64;
        let (scaled, pe_c) = pe_of(ln_c.exp(), evals)?;
        if pe_c <= budget.e {
            if best_feasible
                .as_ref()
                .map_or(true, |(b, _)| ln_c.abs() < *b)
            {
                best_feasible = Some((ln_c.abs(), scaled));
            }
        } else if pe_c < least_bad.0 {
            least_bad = (pe_c, scaled);
        }
    }
    Ok(match best_feasible {
        Some((_, v)) => v,
        None => least_bad.1,
    })
}

/// Threshold rule driven by local activity propagation on the K-nearest
/// neighbor graph. Thresholds start uniformly at random, devices with the
/// most surrounding space update first, each update matches the device's
/// activation to its neighbors' predicted influence, and a final uniform
/// rescale enforces the budget.
pub fn solve_knn_bayes(
    dep: &Deployment,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    k: usize,
    sweeps: u64,
    seed: u64,
) -> Result<OptimizerResult> {
    let n = dep.len();
    if cals.len() != n {
        return Err(ModelError::LengthMismatch {
            left: n,
            right: cals.len(),
        });
    }
    if sweeps == 0 {
        return Err(ModelError::invalid("sweep budget must be positive"));
    }
    if n == 1 {
        // No neighbors to propagate over; the shared-threshold boundary is
        // the natural single-device answer.
        let eq = solve_equal_delta(cals, model, budget)?;
        return OptimizerResult::scored(
            Method::Knn,
            eq.delta,
            cals,
            model,
            budget,
            1,
            eq.evaluations,
            seed,
        );
    }
    let graph = ClusterGraph::build(dep, k)?;

    let cells = voronoi_partition(dep)?;
    let mut omega_min = vec![0.0f64; n];
    for c in &cells {
        omega_min[c.device_id] = c.omega_min;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| omega_min[b].total_cmp(&omega_min[a]).then(a.cmp(&b)));

    let mut rng = rng_from_seed(seed);
    let mut delta: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();

    let mut evals = 0u64;
    let mut iterations = 0u64;
    for _ in 0..sweeps {
        iterations += 1;
        let moved = sweep_once(dep, cals, model, &graph, &order, &mut delta)?;
        evals += n as u64;
        if moved < SETTLE_TOL {
            break;
        }
    }

    let projected = project_uniform_scale(cals, model, budget, &delta, &mut evals)?;
    OptimizerResult::scored(
        Method::Knn,
        ThresholdVector::new(projected)?,
        cals,
        model,
        budget,
        iterations,
        evals,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_deployment, Area, Device};
    use crate::optim::FEAS_TOL;

    fn model() -> SensingModel {
        SensingModel::new(1.0, 0.1).unwrap()
    }

    fn uniform_cals(n: usize) -> Vec<CalibratedCdf> {
        let area = Area::new(50.0, 50.0).unwrap();
        CalibratedCdf::uniform_for_area(&area, &model(), n)
    }

    fn triangle() -> Deployment {
        // Equilateral, side 1, centered in the area: circumradius 1/sqrt(3)
        // up to the apex, half that down to the base.
        let area = Area::new(50.0, 50.0).unwrap();
        let circum = 1.0 / 3f64.sqrt();
        let devices = vec![
            Device { id: 0, x: 25.0, y: 25.0 + circum },
            Device { id: 1, x: 24.5, y: 25.0 - circum / 2.0 },
            Device { id: 2, x: 25.5, y: 25.0 - circum / 2.0 },
        ];
        Deployment::new(area, devices).unwrap()
    }

    #[test]
    fn graph_is_symmetric_and_counts_components() {
        let area = Area::new(50.0, 50.0).unwrap();
        // Two tight triples far apart: with k = 1 they stay separate.
        let devices = vec![
            Device { id: 0, x: 1.0, y: 1.0 },
            Device { id: 1, x: 2.0, y: 1.0 },
            Device { id: 2, x: 1.5, y: 2.0 },
            Device { id: 3, x: 48.0, y: 48.0 },
            Device { id: 4, x: 47.0, y: 48.0 },
            Device { id: 5, x: 47.5, y: 47.0 },
        ];
        let dep = Deployment::new(area, devices).unwrap();
        let g = ClusterGraph::build(&dep, 1).unwrap();
        assert_eq!(g.components, 2);
        for j in 0..6 {
            for &h in &g.neighbors[j] {
                assert_ne!(h, j);
                assert!(g.neighbors[h].contains(&j), "closure broken at {j}-{h}");
            }
        }
        // Everyone reachable with k = 5.
        let g = ClusterGraph::build(&dep, 5).unwrap();
        assert_eq!(g.components, 1);
        assert!(ClusterGraph::build(&dep, 0).is_err());
        assert!(ClusterGraph::build(&dep, 6).is_err());
    }

    #[test]
    fn propagation_settles_to_a_fixed_point() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let dep = generate_deployment(area, 12, 21).unwrap();
        let cals = uniform_cals(12);
        let graph = ClusterGraph::build(&dep, 3).unwrap();
        let order: Vec<usize> = (0..12).collect();
        let mut delta: Vec<f64> = {
            let mut rng = rng_from_seed(77);
            (0..12).map(|_| 1.0 - rng.random::<f64>()).collect()
        };
        let mut settled = false;
        for _ in 0..200 {
            let moved = sweep_once(&dep, &cals, &m, &graph, &order, &mut delta).unwrap();
            if moved < SETTLE_TOL {
                settled = true;
                break;
            }
        }
        assert!(settled, "propagation kept moving after 200 sweeps");
        let re = sweep_once(&dep, &cals, &m, &graph, &order, &mut delta).unwrap();
        assert!(re < SETTLE_TOL, "re-sweep moved by {re}");
    }

    #[test]
    fn symmetric_triangle_gets_equal_thresholds() {
        let m = model();
        let dep = triangle();
        let cals = uniform_cals(3);
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let r = solve_knn_bayes(&dep, &cals, &m, &b, 2, 300, 5).unwrap();
        let d = r.delta.as_slice();
        assert!(
            (d[0] - d[1]).abs() < 1e-6 && (d[1] - d[2]).abs() < 1e-6,
            "asymmetric thresholds: {d:?}"
        );
    }

    #[test]
    fn rescale_makes_typical_instances_feasible() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let dep = generate_deployment(area, 25, 33).unwrap();
        let cals = uniform_cals(25);
        let r = solve_knn_bayes(&dep, &cals, &m, &b, 3, 20, 9).unwrap();
        assert!(r.feasible, "p_e = {}", r.expected_p_e);
        assert!(r.expected_p_e <= b.e + FEAS_TOL);
    }

    #[test]
    fn same_seed_same_answer() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let dep = generate_deployment(area, 10, 4).unwrap();
        let cals = uniform_cals(10);
        let a = solve_knn_bayes(&dep, &cals, &m, &b, 3, 20, 123).unwrap();
        let c = solve_knn_bayes(&dep, &cals, &m, &b, 3, 20, 123).unwrap();
        assert_eq!(a.delta.as_slice(), c.delta.as_slice());
        assert_eq!(a.seed, 123);
    }

    #[test]
    fn single_device_matches_the_boundary_rule() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let devices = vec![Device { id: 0, x: 1.0, y: 1.0 }];
        let dep = Deployment::new(area, devices).unwrap();
        let cals = uniform_cals(1);
        let r = solve_knn_bayes(&dep, &cals, &m, &b, 1, 10, 0).unwrap();
        let eq = solve_equal_delta(&cals, &m, &b).unwrap();
        assert_eq!(r.method, Method::Knn);
        assert_eq!(r.delta[0], eq.delta[0]);
        assert!(r.feasible);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let dep = generate_deployment(area, 5, 1).unwrap();
        assert!(solve_knn_bayes(&dep, &uniform_cals(4), &m, &b, 2, 10, 0).is_err());
        assert!(solve_knn_bayes(&dep, &uniform_cals(5), &m, &b, 0, 10, 0).is_err());
        assert!(solve_knn_bayes(&dep, &uniform_cals(5), &m, &b, 2, 0, 0).is_err());
    }
}
