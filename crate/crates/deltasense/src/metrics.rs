//! Closed-form network metrics: expected transmit power, event-conditional
//! miss/success/collision probabilities, their spatial expectations under
//! the calibrated CDF approximation, first and second derivatives of the
//! expected error, and the neighbor-conditional activation probability.
//!
//! Conventions used throughout:
//! `z_j = ln^2(delta_j) / eta^2` is the squared coverage radius of device
//! `j`, `s_j = 2 z_j / w_j` its coverage exponent, `S` the sum of the
//! exponents, and `q_j = 1 - e^(-s_j)` its per-event activation chance.

use crate::cdf::{activation_probability, threshold_z, CalibratedCdf};
use crate::error::{ModelError, Result};
use crate::geometry::{Deployment, EventPoint};
use crate::numeric::clamp_unit;
use crate::sensing::{SensingModel, ThresholdVector};

fn check_len(cals: &[CalibratedCdf], delta: &ThresholdVector) -> Result<()> {
    if cals.len() != delta.len() {
        return Err(ModelError::LengthMismatch {
            left: cals.len(),
            right: delta.len(),
        });
    }
    Ok(())
}

/// Coverage exponents `s_j = 2 z_j / w_j` for every device.
fn coverage_exponents(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Vec<f64> {
    cals.iter()
        .zip(delta.as_slice())
        .map(|(c, &d)| 2.0 * threshold_z(model, d) / c.w)
        .collect()
}

/// Mean per-device activation probability: the fraction of time an average
/// device spends transmitting. Lies in `[0, alpha]`.
pub fn expected_power(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Result<f64> {
    check_len(cals, delta)?;
    let mut acc = 0.0;
    for (c, &d) in cals.iter().zip(delta.as_slice()) {
        acc += activation_probability(c, model, d)?;
    }
    Ok(acc / cals.len() as f64)
}

fn transmitter_count(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    e: &EventPoint,
) -> usize {
    assert_eq!(dep.len(), delta.len(), "thresholds must cover every device");
    dep.devices()
        .iter()
        .filter(|d| (-model.eta * e.distance_to(d)).exp() >= delta[d.id])
        .count()
}

/// Probability contribution of a miss at a fixed epicenter: `alpha` when no
/// device's sensed power clears its threshold, else 0.
pub fn p_miss_at_event(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    e: &EventPoint,
) -> f64 {
    if transmitter_count(dep, model, delta, e) == 0 {
        model.alpha
    } else {
        0.0
    }
}

/// `alpha` when exactly one device transmits, else 0.
pub fn p_suc_at_event(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    e: &EventPoint,
) -> f64 {
    if transmitter_count(dep, model, delta, e) == 1 {
        model.alpha
    } else {
        0.0
    }
}

/// `alpha` when two or more devices transmit, else 0.
pub fn p_col_at_event(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    e: &EventPoint,
) -> f64 {
    if transmitter_count(dep, model, delta, e) >= 2 {
        model.alpha
    } else {
        0.0
    }
}

/// Error contribution at a fixed epicenter: everything that is not a lone
/// successful transmission, i.e. `alpha - p_suc = p_miss + p_col`.
pub fn p_e_at_event(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    e: &EventPoint,
) -> f64 {
    model.alpha - p_suc_at_event(dep, model, delta, e)
}

/// Expected probability that exactly one device transmits in a slot, under
/// independent per-device activations with calibrated coverage.
///
/// Evaluates `alpha * sum_h (1 - e^(-s_h)) * e^(-(S - s_h))`; every factor
/// is bounded by 1, so the sum is stable for any thresholds in `(0, 1]`.
pub fn expected_p_suc(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Result<f64> {
    check_len(cals, delta)?;
    let s = coverage_exponents(cals, model, delta);
    let total: f64 = s.iter().sum();
    let mut acc = 0.0;
    for &sh in &s {
        acc += -((-sh).exp_m1()) * (sh - total).exp();
    }
    Ok(model.alpha * clamp_unit(acc))
}

/// Expected per-slot error probability: `alpha - expected_p_suc`.
pub fn expected_p_e(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Result<f64> {
    Ok(model.alpha - expected_p_suc(cals, model, delta)?)
}

/// `d s_j / d delta_j`.
fn exponent_slope(cal: &CalibratedCdf, model: &SensingModel, delta: f64) -> f64 {
    4.0 * delta.ln() / (model.eta * model.eta * cal.w * delta)
}

/// Gradient of [`expected_p_e`] with respect to each threshold.
///
/// Component `j` is `t_j * alpha * (sum_{h != j} Q_h - N * P)` with
/// `Q_h = e^(-(S - s_h))`, `P = e^(-S)` and `t_j = 4 ln(delta_j) /
/// (eta^2 w_j delta_j)`. At `delta_j = 1` the component is exactly 0 (the
/// `ln` factor vanishes); the formula agrees with central finite
/// differences everywhere in the interior.
pub fn grad_expected_p_e(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Result<Vec<f64>> {
    check_len(cals, delta)?;
    let n = cals.len() as f64;
    let s = coverage_exponents(cals, model, delta);
    let total: f64 = s.iter().sum();
    let p = (-total).exp();
    let q: Vec<f64> = s.iter().map(|&sh| (sh - total).exp()).collect();
    let q_sum: f64 = q.iter().sum();

    Ok(cals
        .iter()
        .zip(delta.as_slice())
        .enumerate()
        .map(|(j, (c, &d))| {
            let t = exponent_slope(c, model, d);
            t * model.alpha * ((q_sum - q[j]) - n * p)
        })
        .collect())
}

/// Hessian of [`expected_p_e`]; symmetric, exact, and validated against
/// finite differences of the gradient. Thresholds must lie strictly inside
/// `(0, 1)`.
pub fn hessian_expected_p_e(
    cals: &[CalibratedCdf],
    model: &SensingModel,
    delta: &ThresholdVector,
) -> Result<Vec<Vec<f64>>> {
    check_len(cals, delta)?;
    for &d in delta.as_slice() {
        if d >= 1.0 {
            return Err(ModelError::invalid(
                "second derivatives need thresholds strictly inside (0, 1)",
            ));
        }
    }
    let n = cals.len();
    let nf = n as f64;
    let s = coverage_exponents(cals, model, delta);
    let total: f64 = s.iter().sum();
    let p = (-total).exp();
    let q: Vec<f64> = s.iter().map(|&sh| (sh - total).exp()).collect();
    let q_sum: f64 = q.iter().sum();

    let eta2 = model.eta * model.eta;
    let t: Vec<f64> = (0..n)
        .map(|j| exponent_slope(&cals[j], model, delta[j]))
        .collect();
    let t_prime: Vec<f64> = (0..n)
        .map(|j| {
            let d = delta[j];
            4.0 * (1.0 - d.ln()) / (eta2 * cals[j].w * d * d)
        })
        .collect();

    let mut h = vec![vec![0.0; n]; n];
    for j in 0..n {
        let a_j = (q_sum - q[j]) - nf * p;
        h[j][j] = model.alpha * a_j * (t_prime[j] - t[j] * t[j]);
        for k in (j + 1)..n {
            let off = model.alpha * t[j] * t[k] * (nf * p - (q_sum - q[j] - q[k]));
            h[j][k] = off;
            h[k][j] = off;
        }
    }
    Ok(h)
}

/// Disjoint angle intervals within `[0, 2 pi]`, kept sorted by start.
type Arcs = Vec<(f64, f64)>;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// One circular arc `[a, a + len]` normalized into `[0, 2 pi]` pieces.
fn arc(a: f64, len: f64) -> Arcs {
    if len <= 0.0 {
        return Vec::new();
    }
    if len >= TAU {
        return vec![(0.0, TAU)];
    }
    let start = a.rem_euclid(TAU);
    let end = start + len;
    if end <= TAU {
        vec![(start, end)]
    } else {
        vec![(start, TAU), (0.0, end - TAU)]
    }
}

fn intersect_arcs(xs: &Arcs, ys: &Arcs) -> Arcs {
    let mut out = Vec::new();
    for &(ax, ay) in xs {
        for &(bx, by) in ys {
            let lo = ax.max(bx);
            let hi = ay.min(by);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

fn arcs_measure(xs: &Arcs) -> f64 {
    xs.iter().map(|&(a, b)| b - a).sum()
}

/// Directions `phi` from `(hx, hy)` whose point at distance `d` stays
/// inside the rectangle `[0, length] x [0, height]`. Each wall bound is a
/// single arc; the admissible set is their intersection.
fn in_area_directions(hx: f64, hy: f64, d: f64, length: f64, height: f64) -> Arcs {
    // cos(phi) <= u: arc centered on pi with half-width pi - acos(u).
    let cos_le = |u: f64| -> Arcs {
        if u >= 1.0 {
            arc(0.0, TAU)
        } else if u < -1.0 {
            Vec::new()
        } else {
            let b = u.acos();
            arc(b, TAU - 2.0 * b)
        }
    };
    // cos(phi) >= l: arc centered on 0 with half-width acos(l).
    let cos_ge = |l: f64| -> Arcs {
        if l <= -1.0 {
            arc(0.0, TAU)
        } else if l > 1.0 {
            Vec::new()
        } else {
            let b = l.acos();
            arc(-b, 2.0 * b)
        }
    };
    // sin bounds are cos bounds rotated by a quarter turn:
    // sin(phi) <= v <=> cos(phi - pi/2) <= v.
    let rotate = |xs: Arcs| -> Arcs {
        let mut out = Vec::new();
        for (a, b) in xs {
            out.extend(arc(a + 0.5 * std::f64::consts::PI, b - a));
        }
        out
    };

    let mut valid = cos_le((length - hx) / d);
    valid = intersect_arcs(&valid, &cos_ge(-hx / d));
    valid = intersect_arcs(&valid, &rotate(cos_le((height - hy) / d)));
    valid = intersect_arcs(&valid, &rotate(cos_ge(-hy / d)));
    valid
}

/// Probability that device `j` also activates, given that device `h`
/// detected an event at distance `d_ih` from itself.
///
/// The event direction seen from `h` is treated as uniform over the angles
/// that keep the epicenter inside the area; the wall-clipped angular measure
/// uses the octant construction `2 pi - 8 arccos(R / r)` with `R` the
/// nearest-wall distance of `h` and `r = max(R, d_ih)`. For interior
/// devices (`d_ih <= R`) this reduces to `arccos(c) / pi`, the plain
/// fraction of directions whose epicenter falls inside `j`'s coverage disk.
/// Whenever the clipped measure degenerates (far outside the octant
/// construction's domain) a deterministic angular sweep that clips against
/// the true rectangle is used instead. Output lies in `[0, 1]` and is
/// non-increasing in `delta_j`.
pub fn conditional_activation(
    dep: &Deployment,
    model: &SensingModel,
    delta_j: f64,
    h: usize,
    j: usize,
    d_ih: f64,
) -> Result<f64> {
    if h == j {
        return Err(ModelError::invalid(
            "conditional activation needs two distinct devices",
        ));
    }
    if !(delta_j.is_finite() && delta_j > 0.0 && delta_j <= 1.0) {
        return Err(ModelError::invalid(format!(
            "threshold must lie in (0, 1], got {delta_j}"
        )));
    }
    if !(d_ih.is_finite() && d_ih > 0.0) {
        return Err(ModelError::invalid(format!(
            "event distance must be positive, got {d_ih}"
        )));
    }
    let devs = dep.devices();
    if h >= devs.len() || j >= devs.len() {
        return Err(ModelError::invalid("device index out of range"));
    }
    let (hx, hy) = (devs[h].x, devs[h].y);
    let (jx, jy) = (devs[j].x, devs[j].y);
    let r_jh = (hx - jx).hypot(hy - jy);
    if r_jh == 0.0 {
        return Err(ModelError::DegenerateGeometry(
            "devices share a position; separation must be positive".into(),
        ));
    }

    let z_j = threshold_z(model, delta_j);
    // Law of cosines: j activates iff the angle between the event and j,
    // seen from h, has cosine at least c.
    let c = (d_ih * d_ih + r_jh * r_jh - z_j) / (2.0 * d_ih * r_jh);
    if c >= 1.0 {
        // Coverage disk of j unreachable at this event distance.
        return Ok(0.0);
    }

    let r_wall = dep.geometry(h).r_wall;
    let r = r_wall.max(d_ih);
    let clipped = 2.0 * std::f64::consts::PI
        - 8.0 * (r_wall / r).min(1.0).acos();

    if clipped > 1e-9 {
        let num = 2.0 * c.max(-1.0).acos();
        Ok(clamp_unit(num / clipped))
    } else {
        // The octant construction degenerates: measure the admissible
        // angles exactly against the rectangle. The event ring around h is
        // clipped to the area, the hit set is the arc facing j with
        // half-width acos(c), and the result is the measure ratio.
        let area = dep.area();
        let valid = in_area_directions(hx, hy, d_ih, area.length, area.height);
        let denom = arcs_measure(&valid);
        if denom <= 0.0 {
            return Ok(0.0);
        }
        let beta = c.max(-1.0).acos();
        let towards_j = (jy - hy).atan2(jx - hx);
        let hit = arc(towards_j - beta, 2.0 * beta);
        Ok(clamp_unit(arcs_measure(&intersect_arcs(&valid, &hit)) / denom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_deployment, Area, Device};
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn square50() -> Area {
        Area::new(50.0, 50.0).unwrap()
    }

    fn model() -> SensingModel {
        SensingModel::new(1.0, 0.1).unwrap()
    }

    fn uniform_cals(n: usize) -> Vec<CalibratedCdf> {
        CalibratedCdf::uniform_for_area(&square50(), &model(), n)
    }

    fn cals_with_w(ws: &[f64]) -> Vec<CalibratedCdf> {
        ws.iter()
            .map(|&w| CalibratedCdf::new(w, 200.0, 0.0).unwrap())
            .collect()
    }

    #[test]
    fn expected_power_examples() {
        let m = model();
        let cals = cals_with_w(&[1591.55, 1591.55]);
        let all_one = ThresholdVector::uniform(1.0, 2).unwrap();
        assert_eq!(expected_power(&cals, &m, &all_one).unwrap(), 0.0);

        let mixed = ThresholdVector::new(vec![0.1, 0.5]).unwrap();
        assert_relative_eq!(
            expected_power(&cals, &m, &mixed).unwrap(),
            3.62e-4,
            max_relative = 2e-2
        );

        let tiny = ThresholdVector::uniform(1e-300, 2).unwrap();
        assert_relative_eq!(
            expected_power(&cals, &m, &tiny).unwrap(),
            m.alpha,
            max_relative = 1e-9
        );
    }

    #[test]
    fn expected_power_checks_lengths() {
        let m = model();
        let cals = uniform_cals(3);
        let delta = ThresholdVector::uniform(0.5, 2).unwrap();
        assert!(matches!(
            expected_power(&cals, &m, &delta),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn event_point_outcomes_partition_alpha() {
        let m = model();
        let dep = generate_deployment(square50(), 8, 17).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..500 {
            let delta = ThresholdVector::new(
                (0..8).map(|_| rng.random_range(0.01..1.0)).collect(),
            )
            .unwrap();
            let e = crate::geometry::sample_event_point(&square50(), &mut rng);
            let miss = p_miss_at_event(&dep, &m, &delta, &e);
            let suc = p_suc_at_event(&dep, &m, &delta, &e);
            let col = p_col_at_event(&dep, &m, &delta, &e);
            assert_relative_eq!(miss + suc + col, m.alpha, max_relative = 1e-12);
            assert_relative_eq!(
                p_e_at_event(&dep, &m, &delta, &e),
                miss + col,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn event_at_device_is_never_missed() {
        let m = model();
        let dep = Deployment::new(
            square50(),
            vec![Device { id: 0, x: 10.0, y: 10.0 }],
        )
        .unwrap();
        let delta = ThresholdVector::uniform(0.99, 1).unwrap();
        let e = EventPoint { x: 10.0, y: 10.0 };
        assert_eq!(p_miss_at_event(&dep, &m, &delta, &e), 0.0);
        assert_eq!(p_suc_at_event(&dep, &m, &delta, &e), m.alpha);
    }

    #[test]
    fn closed_thresholds_miss_everything() {
        let m = model();
        let dep = generate_deployment(square50(), 4, 5).unwrap();
        let delta = ThresholdVector::uniform(1.0, 4).unwrap();
        let e = EventPoint { x: 3.3, y: 44.0 };
        assert_eq!(p_miss_at_event(&dep, &m, &delta, &e), m.alpha);
        assert_eq!(p_e_at_event(&dep, &m, &delta, &e), m.alpha);
    }

    #[test]
    fn expected_p_suc_single_device_reduction() {
        let m = model();
        let cals = cals_with_w(&[1200.0]);
        for &d in &[0.9, 0.5, 0.1, 1e-3] {
            let delta = ThresholdVector::uniform(d, 1).unwrap();
            let s = 2.0 * threshold_z(&m, d) / 1200.0;
            assert_relative_eq!(
                expected_p_suc(&cals, &m, &delta).unwrap(),
                m.alpha * (1.0 - (-s).exp()),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn expected_p_e_boundary_values() {
        let m = model();
        let cals = uniform_cals(5);
        let all_one = ThresholdVector::uniform(1.0, 5).unwrap();
        // Nothing transmits: the whole event mass is missed.
        assert_eq!(expected_p_e(&cals, &m, &all_one).unwrap(), m.alpha);
        assert_eq!(expected_p_suc(&cals, &m, &all_one).unwrap(), 0.0);
    }

    #[test]
    fn expected_p_e_within_alpha_band() {
        let m = model();
        let mut rng = rng_from_seed(11);
        for n in [1usize, 2, 5, 20] {
            let cals = uniform_cals(n);
            for _ in 0..200 {
                let delta = ThresholdVector::new(
                    (0..n).map(|_| rng.random_range(1e-6..1.0f64)).collect(),
                )
                .unwrap();
                let pe = expected_p_e(&cals, &m, &delta).unwrap();
                assert!((0.0..=m.alpha + 1e-15).contains(&pe));
            }
        }
    }

    fn fd_gradient(
        cals: &[CalibratedCdf],
        m: &SensingModel,
        delta: &[f64],
        step: f64,
    ) -> Vec<f64> {
        (0..delta.len())
            .map(|j| {
                let mut hi = delta.to_vec();
                let mut lo = delta.to_vec();
                hi[j] += step;
                lo[j] -= step;
                let fh = expected_p_e(cals, m, &ThresholdVector::new(hi).unwrap()).unwrap();
                let fl = expected_p_e(cals, m, &ThresholdVector::new(lo).unwrap()).unwrap();
                (fh - fl) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences_on_witness() {
        let m = model();
        let cals = cals_with_w(&[1591.55, 1591.55]);
        let delta = vec![0.3, 0.5];
        let g = grad_expected_p_e(&cals, &m, &ThresholdVector::new(delta.clone()).unwrap())
            .unwrap();
        let fd = fd_gradient(&cals, &m, &delta, 1e-6);
        for j in 0..2 {
            assert_relative_eq!(g[j], fd[j], max_relative = 1e-7);
        }
    }

    #[test]
    fn gradient_symmetry_and_boundary() {
        let m = model();
        let cals = cals_with_w(&[900.0, 900.0, 900.0]);
        let delta = ThresholdVector::uniform(0.4, 3).unwrap();
        let g = grad_expected_p_e(&cals, &m, &delta).unwrap();
        assert_relative_eq!(g[0], g[1], max_relative = 1e-12);
        assert_relative_eq!(g[1], g[2], max_relative = 1e-12);

        // ln(1) = 0 kills the component exactly.
        let edge = ThresholdVector::new(vec![1.0, 0.4]).unwrap();
        let g = grad_expected_p_e(&cals_with_w(&[900.0, 900.0]), &m, &edge).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn hessian_is_symmetric_and_matches_fd() {
        let m = model();
        let cals = cals_with_w(&[1400.0, 900.0, 2500.0]);
        let delta = vec![0.35, 0.6, 0.2];
        let tv = ThresholdVector::new(delta.clone()).unwrap();
        let h = hessian_expected_p_e(&cals, &m, &tv).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_relative_eq!(h[j][k], h[k][j], epsilon = 1e-9);
            }
        }
        // Central differences of the analytic gradient.
        let step = 1e-6;
        for k in 0..3 {
            let mut hi = delta.clone();
            let mut lo = delta.clone();
            hi[k] += step;
            lo[k] -= step;
            let gh = grad_expected_p_e(&cals, &m, &ThresholdVector::new(hi).unwrap()).unwrap();
            let gl = grad_expected_p_e(&cals, &m, &ThresholdVector::new(lo).unwrap()).unwrap();
            for j in 0..3 {
                let fd = (gh[j] - gl[j]) / (2.0 * step);
                assert_relative_eq!(h[j][k], fd, max_relative = 1e-4, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hessian_rejects_boundary_thresholds() {
        let m = model();
        let cals = uniform_cals(2);
        let tv = ThresholdVector::new(vec![1.0, 0.5]).unwrap();
        assert!(hessian_expected_p_e(&cals, &m, &tv).is_err());
    }

    #[test]
    fn hessian_witness_has_negative_eigenvalue() {
        let m = model();
        let cals = cals_with_w(&[1591.55, 1591.55]);
        let tv = ThresholdVector::new(vec![0.3, 0.5]).unwrap();
        let h = hessian_expected_p_e(&cals, &m, &tv).unwrap();
        let tr = h[0][0] + h[1][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let eig_min = 0.5 * (tr - disc);
        assert!(
            eig_min < 0.0,
            "expected a negative eigenvalue, got min {eig_min}"
        );
    }

    #[test]
    fn conditional_activation_interior_matches_angle_sampling() {
        let m = model();
        let dep = Deployment::new(
            square50(),
            vec![
                Device { id: 0, x: 24.0, y: 26.0 },
                Device { id: 1, x: 28.0, y: 23.0 },
            ],
        )
        .unwrap();
        let mut rng = rng_from_seed(5);
        for &(delta_j, d_ih) in &[(0.05f64, 3.0f64), (0.02, 6.0), (0.3, 2.0), (0.001, 9.0)] {
            let got = conditional_activation(&dep, &m, delta_j, 0, 1, d_ih).unwrap();
            let trials = 100_000usize;
            let radius = threshold_z(&m, delta_j).sqrt();
            let (hx, hy) = (24.0, 26.0);
            let mut hits = 0usize;
            for _ in 0..trials {
                let phi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let px = hx + d_ih * phi.cos();
                let py = hy + d_ih * phi.sin();
                if (px - 28.0).hypot(py - 23.0) <= radius {
                    hits += 1;
                }
            }
            let freq = hits as f64 / trials as f64;
            let sigma = (freq * (1.0 - freq) / trials as f64).sqrt().max(1e-6);
            assert!(
                (got - freq).abs() <= 3.0 * sigma + 1e-9,
                "angle oracle disagrees: got {got}, sampled {freq} (delta_j={delta_j}, d={d_ih})"
            );
        }
    }

    #[test]
    fn conditional_activation_extremes() {
        let m = model();
        let dep = Deployment::new(
            square50(),
            vec![
                Device { id: 0, x: 25.0, y: 25.0 },
                Device { id: 1, x: 30.0, y: 25.0 },
            ],
        )
        .unwrap();
        // Tiny coverage disk far from the event ring: unreachable.
        assert_eq!(
            conditional_activation(&dep, &m, 0.999, 0, 1, 1.0).unwrap(),
            0.0
        );
        // Huge coverage disk swallows the whole event ring.
        assert_eq!(
            conditional_activation(&dep, &m, 1e-9, 0, 1, 1.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn conditional_activation_rejects_bad_pairs() {
        let m = model();
        let dep = generate_deployment(square50(), 3, 2).unwrap();
        assert!(conditional_activation(&dep, &m, 0.5, 1, 1, 1.0).is_err());
        assert!(conditional_activation(&dep, &m, 0.5, 0, 1, 0.0).is_err());
        assert!(conditional_activation(&dep, &m, 1.5, 0, 1, 1.0).is_err());
    }

    #[test]
    fn conditional_activation_edge_device_fallback_is_sane() {
        let m = model();
        // Device h hugs a corner: the octant measure degenerates for large
        // event distances and the exact rectangle clipping takes over.
        let dep = Deployment::new(
            square50(),
            vec![
                Device { id: 0, x: 0.5, y: 0.5 },
                Device { id: 1, x: 6.0, y: 0.5 },
            ],
        )
        .unwrap();
        let p = conditional_activation(&dep, &m, 0.01, 0, 1, 8.0).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn corner_ring_keeps_a_quarter_turn() {
        // A device exactly on a corner sees one quadrant of directions at
        // any radius that stays inside the square.
        let arcs = in_area_directions(0.0, 0.0, 10.0, 50.0, 50.0);
        assert_relative_eq!(
            arcs_measure(&arcs),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-12
        );
        // Beyond the far corner nothing remains.
        let gone = in_area_directions(0.0, 0.0, 100.0, 50.0, 50.0);
        assert_eq!(arcs_measure(&gone), 0.0);
    }

    #[test]
    fn degenerate_clipping_matches_angle_sampling() {
        let m = model();
        let dep = Deployment::new(
            square50(),
            vec![
                Device { id: 0, x: 0.5, y: 0.5 },
                Device { id: 1, x: 6.0, y: 0.5 },
            ],
        )
        .unwrap();
        let mut rng = rng_from_seed(9);
        for &(delta_j, d_ih) in &[(0.01f64, 8.0f64), (0.05, 12.0), (0.002, 20.0)] {
            let got = conditional_activation(&dep, &m, delta_j, 0, 1, d_ih).unwrap();
            let radius = threshold_z(&m, delta_j).sqrt();
            let trials = 200_000usize;
            let (mut inside, mut hits) = (0usize, 0usize);
            for _ in 0..trials {
                let phi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let px = 0.5 + d_ih * phi.cos();
                let py = 0.5 + d_ih * phi.sin();
                if dep.area().contains(px, py) {
                    inside += 1;
                    if (px - 6.0).hypot(py - 0.5) <= radius {
                        hits += 1;
                    }
                }
            }
            assert!(inside > 0);
            let freq = hits as f64 / inside as f64;
            let sigma = (freq * (1.0 - freq) / inside as f64).sqrt().max(1e-6);
            assert!(
                (got - freq).abs() <= 3.0 * sigma + 1e-9,
                "clipping disagrees with sampling: got {got}, sampled {freq} \
                 (delta_j={delta_j}, d={d_ih})"
            );
        }
    }

    proptest! {
        #[test]
        fn conditional_activation_is_unit_and_monotone(
            d_ih in 0.1f64..20.0,
            step in 0.01f64..0.4,
            base in 0.01f64..0.6,
        ) {
            let m = model();
            let dep = Deployment::new(
                square50(),
                vec![
                    Device { id: 0, x: 20.0, y: 25.0 },
                    Device { id: 1, x: 30.0, y: 25.0 },
                ],
            )
            .unwrap();
            let lo = conditional_activation(&dep, &m, base, 0, 1, d_ih).unwrap();
            let hi = conditional_activation(&dep, &m, base + step, 0, 1, d_ih).unwrap();
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!((0.0..=1.0).contains(&hi));
            // Larger threshold means a smaller disk, so no more coverage.
            prop_assert!(hi <= lo + 1e-12);
        }
    }
}
