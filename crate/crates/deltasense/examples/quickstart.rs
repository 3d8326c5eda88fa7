//! Plan transmission thresholds for one random deployment, compare a few
//! solvers, and validate the best answer in the slotted simulator.
//!
//! Run with `cargo run --release --example quickstart`.

use deltasense::cdf::calibrate_w;
use deltasense::experiment::{solve_single, ExperimentConfig};
use deltasense::geometry::generate_deployment;
use deltasense::optim::Method;
use deltasense::sensing::{ErrorBudget, SensingModel};
use deltasense::sim::{run_slots, SimConfig};

fn main() -> deltasense::error::Result<()> {
    // Sensing power decays as e^(-distance); an alarm fires in a slot with
    // probability 0.1; reports may miss or collide on at most 7.5% of slots.
    let cfg = ExperimentConfig::default();
    let model = SensingModel::new(cfg.eta, cfg.alpha)?;
    let budget = ErrorBudget::new(cfg.budget, &model)?;

    // 30 devices scattered uniformly over the 50 x 50 area.
    let dep = generate_deployment(cfg.area, 30, 42)?;
    let cals = calibrate_w(&dep, &model, cfg.calibration_samples, 43)?;

    println!("{:<12} {:>12} {:>12} {:>9}", "method", "W", "E[P_e]", "feasible");
    let mut best: Option<deltasense::optim::OptimizerResult> = None;
    for method in [Method::Equal, Method::Sca, Method::VoronoiMin, Method::Pso] {
        let r = solve_single(&cfg, method, &dep, &cals, &model, &budget, 44)?;
        println!(
            "{:<12} {:>12.4e} {:>12.5} {:>9}",
            r.method.tag(),
            r.objective,
            r.expected_p_e,
            r.feasible
        );
        if r.feasible && best.as_ref().map_or(true, |b| r.objective < b.objective) {
            best = Some(r);
        }
    }

    let best = best.expect("at least one solver stays inside the budget");
    let report = run_slots(&dep, &model, &best.delta, &SimConfig::new(200_000, 45))?;
    println!(
        "\nbest ({}) replayed over 200000 slots: P_e = {:.5} +/- {:.5}, \
         mean activity = {:.4e}",
        best.method.tag(),
        report.error_rate,
        report.error_rate_std,
        report.mean_active_fraction
    );
    Ok(())
}
