//! Reward shaping for the reinforcement-learning solver: scores one
//! simulated slot for the whole network. The reward adds a coordination
//! term (how much coverage the transmitters share with their neighbors),
//! subtracts a power cost during collisions, and subtracts the strongest
//! wasted sensed power after a miss.

use crate::error::{ModelError, Result};
use crate::geometry::Deployment;
use crate::metrics::conditional_activation;
use crate::sensing::{SensingModel, ThresholdVector};
use crate::sim::{SlotClass, SlotOutcome};

/// Weights of the reward terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Weight of the collision power cost.
    pub mu1: f64,
    /// Weight of the miss penalty.
    pub mu2: f64,
    /// When set, devices that stayed silent during a collision earn their
    /// sensed power back as a bonus instead of being ignored.
    pub rho_silent_bonus: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            mu1: 1.0,
            mu2: 1.0,
            rho_silent_bonus: true,
        }
    }
}

/// Score one slot. Idle slots are worth exactly 0.
///
/// For a slot with an event at distances `d_j` from the devices:
/// - every transmitter `h` earns the summed conditional activation
///   probabilities of all other devices given `h`'s event distance,
/// - a collision costs `mu1 * p(d_j)` for each transmitter `j` (and, with
///   the silent bonus, refunds `mu1 * p(d_j)` for each silent device),
/// - a miss costs `mu2 * max_j p(d_j)`: the strongest sensed power that
///   went unused.
pub fn rl_environment_step(
    dep: &Deployment,
    model: &SensingModel,
    delta: &ThresholdVector,
    slot: &SlotOutcome,
    cfg: &RewardConfig,
) -> Result<f64> {
    if delta.len() != dep.len() {
        return Err(ModelError::LengthMismatch {
            left: dep.len(),
            right: delta.len(),
        });
    }
    let e = match slot.event {
        None => return Ok(0.0),
        Some(e) => e,
    };
    let devs = dep.devices();
    let powers: Vec<f64> = devs
        .iter()
        .map(|d| (-model.eta * e.distance_to(d)).exp())
        .collect();
    let transmitted = {
        let mut mask = vec![false; devs.len()];
        for &id in &slot.transmitters {
            mask[id] = true;
        }
        mask
    };

    let mut coordination = 0.0;
    for h in 0..devs.len() {
        if !transmitted[h] {
            continue;
        }
        let d_ih = e.distance_to(&devs[h]);
        for j in 0..devs.len() {
            if j == h {
                continue;
            }
            coordination += if d_ih > 0.0 {
                conditional_activation(dep, model, delta[j], h, j, d_ih)?
            } else {
                // Event on top of h: j's activation is deterministic.
                let r_jh = e.distance_to(&devs[j]);
                let z_j = crate::cdf::threshold_z(model, delta[j]);
                if r_jh * r_jh <= z_j {
                    1.0
                } else {
                    0.0
                }
            };
        }
    }

    let mut power_cost = 0.0;
    if slot.class == SlotClass::Collision {
        for j in 0..devs.len() {
            let rho = if transmitted[j] {
                1.0
            } else if cfg.rho_silent_bonus {
                -1.0
            } else {
                0.0
            };
            power_cost += powers[j] * rho;
        }
    }

    let miss_cost = if slot.class == SlotClass::Miss {
        powers.iter().cloned().fold(0.0, f64::max)
    } else {
        0.0
    };

    Ok(coordination - cfg.mu1 * power_cost - cfg.mu2 * miss_cost)
}
