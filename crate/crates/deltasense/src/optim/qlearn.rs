//! Distributed tabular Q-learning over a discrete threshold ladder, trained
//! against the slotted simulator with the shared per-slot reward.

use rand::Rng;

use crate::cdf::CalibratedCdf;
use crate::error::{ModelError, Result};
use crate::geometry::Deployment;
use crate::optim::{Method, OptimizerResult};
use crate::rl::{rl_environment_step, RewardConfig};
use crate::rng::rng_from_seed;
use crate::sensing::{ErrorBudget, SensingModel, ThresholdVector};
use crate::sim::{step_slot, SlotClass};

/// Outcome component of the state: what the whole network saw last slot.
const OUTCOMES: usize = 4;

fn outcome_index(class: SlotClass) -> usize {
    match class {
        SlotClass::Idle => 0,
        SlotClass::Success => 1,
        SlotClass::Collision => 2,
        SlotClass::Miss => 3,
    }
}

/// One device's action-value table: rows are discretized states, columns
/// are threshold levels.
#[derive(Debug, Clone)]
pub struct QTable {
    /// Threshold ladder over (0, 1], ascending.
    pub actions: Vec<f64>,
    /// `q[state][action]`, initialized to zero.
    pub q: Vec<Vec<f64>>,
    /// Learning rate in (0, 1].
    pub omega: f64,
    /// Discount factor in [0, 1).
    pub zeta: f64,
    /// Current exploration probability.
    pub epsilon: f64,
}

impl QTable {
    pub fn new(states: usize, actions: Vec<f64>, omega: f64, zeta: f64) -> Result<Self> {
        if states == 0 || actions.is_empty() {
            return Err(ModelError::invalid("state and action spaces must be non-empty"));
        }
        if actions.iter().any(|&a| !(a.is_finite() && a > 0.0 && a <= 1.0)) {
            return Err(ModelError::invalid("actions must be thresholds in (0, 1]"));
        }
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(ModelError::invalid(format!(
                "learning rate must lie in (0, 1], got {omega}"
            )));
        }
        if !(0.0..1.0).contains(&zeta) {
            return Err(ModelError::invalid(format!(
                "discount must lie in [0, 1), got {zeta}"
            )));
        }
        Ok(QTable {
            q: vec![vec![0.0; actions.len()]; states],
            actions,
            omega,
            zeta,
            epsilon: 1.0,
        })
    }

    /// Standard one-step backup:
    /// `Q(s,a) <- (1 - omega) Q(s,a) + omega (r + zeta max_a' Q(s',a'))`.
    pub fn update(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        let future = self.q[next_state]
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let target = reward + self.zeta * future;
        let cell = &mut self.q[state][action];
        *cell = (1.0 - self.omega) * *cell + self.omega * target;
    }

    /// Best action in a state; value ties resolve to the lowest index so
    /// extraction is deterministic.
    pub fn greedy(&self, state: usize) -> usize {
        let mut best = 0;
        for (a, &v) in self.q[state].iter().enumerate() {
            if v > self.q[state][best] {
                best = a;
            }
        }
        best
    }

    /// Epsilon-greedy draw.
    pub fn choose<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.epsilon {
            rng.random_range(0..self.actions.len())
        } else {
            self.greedy(state)
        }
    }
}

/// Training knobs for the tabular learner.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct QLearningConfig {
    /// Threshold levels; the ladder is log-spaced from full coverage
    /// (`exp(-eta * diagonal)`) up to silence (1).
    pub levels: usize,
    /// Learning rate.
    pub omega: f64,
    /// Discount factor.
    pub zeta: f64,
    /// Exploration schedule: linear from start to end across episodes.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Slots per training episode.
    pub ttis_per_episode: u64,
    pub reward: RewardConfig,
    pub seed: u64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig {
            levels: 20,
            omega: 0.1,
            zeta: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            ttis_per_episode: 500,
            reward: RewardConfig::default(),
            seed: 1,
        }
    }
}

impl QLearningConfig {
    fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(ModelError::invalid("need at least two threshold levels"));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.ttis_per_episode == 0 {
            return Err(ModelError::invalid("episodes need at least one slot"));
        }
        Ok(())
    }

    /// The threshold ladder for a given area diagonal.
    pub fn action_grid(&self, eta: f64, diagonal: f64) -> Vec<f64> {
        let top = self.levels - 1;
        (0..self.levels)
            .map(|l| (-eta * diagonal * (top - l) as f64 / top as f64).exp())
            .collect()
    }
}

/// Learn per-device thresholds by independent tabular Q-learning: every
/// device observes its own level plus the network-wide slot outcome, all
/// devices share one reward signal, and the greedy policy read out at the
/// end (iterated from the silent idle state to a fixed point) is scored
/// analytically like any other solver's answer.
pub fn solve_qlearning(
    dep: &Deployment,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    qcfg: &QLearningConfig,
    episodes: u64,
) -> Result<OptimizerResult> {
    let n = dep.len();
    if cals.len() != n {
        return Err(ModelError::LengthMismatch {
            left: n,
            right: cals.len(),
        });
    }
    if episodes == 0 {
        return Err(ModelError::invalid("training needs at least one episode"));
    }
    qcfg.validate()?;

    let actions = qcfg.action_grid(model.eta, dep.area().diagonal());
    let levels = qcfg.levels;
    let states = levels * OUTCOMES;
    let silent_level = levels - 1;
    let mut tables: Vec<QTable> = (0..n)
        .map(|_| QTable::new(states, actions.clone(), qcfg.omega, qcfg.zeta))
        .collect::<Result<_>>()?;

    let mut rng = rng_from_seed(qcfg.seed);
    let mut steps = 0u64;
    for episode in 0..episodes {
        let frac = if episodes > 1 {
            episode as f64 / (episodes - 1) as f64
        } else {
            0.0
        };
        let eps = qcfg.epsilon_start + (qcfg.epsilon_end - qcfg.epsilon_start) * frac;
        for t in tables.iter_mut() {
            t.epsilon = eps;
        }

        // Every episode restarts from everyone silent after a quiet slot.
        let mut state = vec![silent_level * OUTCOMES; n];
        for _ in 0..qcfg.ttis_per_episode {
            let chosen: Vec<usize> = (0..n)
                .map(|j| tables[j].choose(state[j], &mut rng))
                .collect();
            let tv = ThresholdVector::new(chosen.iter().map(|&a| actions[a]).collect())?;
            let slot = step_slot(dep, model, &tv, None, &mut rng);
            let reward = rl_environment_step(dep, model, &tv, &slot, &qcfg.reward)?;
            steps += 1;
            let out = outcome_index(slot.class);
            for j in 0..n {
                let next = chosen[j] * OUTCOMES + out;
                tables[j].update(state[j], chosen[j], reward, next);
                state[j] = next;
            }
        }
    }

    // Greedy read-out: follow the policy through quiet slots until the
    // chosen level stops changing.
    let mut delta = Vec::with_capacity(n);
    for table in &tables {
        let mut level = silent_level;
        for _ in 0..100 {
            let a = table.greedy(level * OUTCOMES);
            if a == level {
                break;
            }
            level = a;
        }
        delta.push(actions[level]);
    }

    OptimizerResult::scored(
        Method::Qlearn,
        ThresholdVector::new(delta)?,
        cals,
        model,
        budget,
        episodes,
        steps,
        qcfg.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Area, Device};

    fn model() -> SensingModel {
        SensingModel::new(1.0, 0.1).unwrap()
    }

    #[test]
    fn full_rate_undiscounted_update_is_the_raw_reward() {
        let mut t = QTable::new(4, vec![0.5, 1.0], 1.0, 0.0).unwrap();
        t.update(2, 1, -3.25, 0);
        assert_eq!(t.q[2][1], -3.25);
        t.update(2, 1, 0.5, 3);
        assert_eq!(t.q[2][1], 0.5);
    }

    #[test]
    fn greedy_ties_pick_the_lowest_index() {
        let mut t = QTable::new(1, vec![0.25, 0.5, 1.0], 0.5, 0.5).unwrap();
        assert_eq!(t.greedy(0), 0);
        t.q[0][2] = 1.0;
        t.q[0][1] = 1.0;
        assert_eq!(t.greedy(0), 1);
    }

    #[test]
    fn lone_device_learns_to_listen() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let dep = Deployment::new(
            area,
            vec![Device { id: 0, x: 25.0, y: 25.0 }],
        )
        .unwrap();
        let cals = CalibratedCdf::uniform_for_area(&area, &m, 1);
        let b = ErrorBudget::new(0.075, &m).unwrap();
        // Two levels only: hear everything or stay silent. Without a
        // discount the table converges to the mean immediate reward, which
        // is zero for listening (a lone transmitter never collides) and
        // strictly negative for missing events.
        let qcfg = QLearningConfig {
            levels: 2,
            omega: 0.3,
            zeta: 0.0,
            epsilon_start: 0.8,
            epsilon_end: 0.2,
            ttis_per_episode: 300,
            seed: 17,
            ..QLearningConfig::default()
        };
        let r = solve_qlearning(&dep, &cals, &m, &b, &qcfg, 40).unwrap();
        let floor = (-m.eta * area.diagonal()).exp();
        assert_eq!(r.delta[0], floor, "did not settle on the listening level");
        assert!(r.feasible);
        assert!(r.expected_p_e < 1e-3);
    }

    #[test]
    fn same_seed_same_answer() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let dep = crate::geometry::generate_deployment(area, 4, 11).unwrap();
        let cals = CalibratedCdf::uniform_for_area(&area, &m, 4);
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let qcfg = QLearningConfig {
            ttis_per_episode: 60,
            seed: 23,
            ..QLearningConfig::default()
        };
        let a = solve_qlearning(&dep, &cals, &m, &b, &qcfg, 5).unwrap();
        let c = solve_qlearning(&dep, &cals, &m, &b, &qcfg, 5).unwrap();
        assert_eq!(a.delta.as_slice(), c.delta.as_slice());
        assert_eq!(a.iterations, 5);
        assert_eq!(a.evaluations, 300);
    }

    #[test]
    fn rejects_degenerate_setups() {
        let m = model();
        let area = Area::new(50.0, 50.0).unwrap();
        let dep = crate::geometry::generate_deployment(area, 2, 1).unwrap();
        let cals = CalibratedCdf::uniform_for_area(&area, &m, 2);
        let b = ErrorBudget::new(0.075, &m).unwrap();
        let bad_levels = QLearningConfig {
            levels: 1,
            ..QLearningConfig::default()
        };
        assert!(solve_qlearning(&dep, &cals, &m, &b, &bad_levels, 3).is_err());
        assert!(solve_qlearning(&dep, &cals, &m, &b, &QLearningConfig::default(), 0).is_err());
        let one_cal = CalibratedCdf::uniform_for_area(&area, &m, 1);
        assert!(solve_qlearning(&dep, &one_cal, &m, &b, &QLearningConfig::default(), 3).is_err());
        assert!(QTable::new(0, vec![0.5], 0.5, 0.5).is_err());
        assert!(QTable::new(2, vec![1.5], 0.5, 0.5).is_err());
        assert!(QTable::new(2, vec![0.5], 0.0, 0.5).is_err());
        assert!(QTable::new(2, vec![0.5], 0.5, 1.0).is_err());
    }
}
