//! Transmission-threshold planning for dense event-reporting radio
//! networks.
//!
//! A fleet of sensing devices shares one uplink. Each slot may carry an
//! alarm event; every device that senses the event above its own threshold
//! transmits, and the slot succeeds only when exactly one device does.
//! Raising a threshold saves transmit power but risks missing events;
//! lowering it risks collisions. This crate provides:
//!
//! - an analytic model of the per-slot error probability and the expected
//!   per-device transmit power for a given threshold vector, with exact
//!   gradients and Hessians ([`metrics`]),
//! - a slotted Monte Carlo simulator used as ground truth ([`sim`]),
//! - a family of threshold optimizers under a shared feasibility contract,
//!   from closed-form benchmarks to metaheuristics and tabular
//!   reinforcement learning ([`optim`]),
//! - deployment sweeps with CSV/JSON exports behind the `deltasense`
//!   command-line binary ([`experiment`]).
//!
//! Thresholds live in `(0, 1]`: 1 means silent, smaller values widen the
//! sensing radius. Every optimizer reports through
//! [`optim::OptimizerResult`], whose feasibility flag is derived from one
//! shared rule, so results from different methods are directly comparable.

pub mod cdf;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod numeric;
pub mod optim;
pub mod rl;
pub mod rng;
pub mod sensing;
pub mod sim;
pub mod voronoi;

pub use cdf::{activation_probability, approx_cdf_z, calibrate_w, threshold_z, CalibratedCdf};
pub use error::{ModelError, Result};
pub use experiment::{ExperimentConfig, MethodSummary, SweepRow};
pub use geometry::{generate_deployment, Area, Deployment, Device, EventPoint};
pub use metrics::{expected_p_e, expected_power, grad_expected_p_e, hessian_expected_p_e};
pub use optim::{check_feasibility, EvoConfig, Method, OptimizerResult};
pub use sensing::{ErrorBudget, SensingModel, ThresholdVector};
pub use sim::{run_slots, SimConfig, SimReport};
