//! Deployment sweeps: run every configured solver over freshly generated
//! device layouts, validate each answer against the slotted simulator, and
//! export rows, summaries, and plot-ready tables.
//!
//! Determinism contract: all randomness is derived from `master_seed` by
//! hashing a purpose label together with the method, device count, and
//! deployment index, so re-running a sweep with the same configuration
//! reproduces every CSV byte for byte. Wall-clock timings are the one
//! exception and therefore live only in the JSON export.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{calibrate_w, CalibratedCdf};
use crate::error::{ModelError, Result};
use crate::geometry::{generate_deployment, Area, Deployment};
use crate::optim::{
    solve_bcd, solve_equal_delta, solve_ga, solve_knn_bayes, solve_pso, solve_qlearning,
    solve_sca, solve_voronoi, BcdConfig, EvoConfig, Method, OptimizerResult, QLearningConfig,
    ScaConfig, VoronoiVariant,
};
use crate::rng::derive_seed;
use crate::sensing::{ErrorBudget, SensingModel};
use crate::sim::{run_slots, SimConfig};

/// Knobs of the neighbor-propagation solver in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnSettings {
    /// Nearest neighbors per device.
    pub k: usize,
    /// Propagation sweep budget.
    pub sweeps: u64,
}

impl Default for KnnSettings {
    fn default() -> Self {
        KnnSettings { k: 3, sweeps: 20 }
    }
}

/// Knobs of the reinforcement-learning solver in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QlearnSettings {
    /// Training episodes per deployment.
    pub episodes: u64,
    /// Table and schedule parameters.
    pub train: QLearningConfig,
}

impl Default for QlearnSettings {
    fn default() -> Self {
        QlearnSettings {
            episodes: 60,
            train: QLearningConfig::default(),
        }
    }
}

/// Full description of a sweep. Every field has a default, so an empty
/// TOML file is a valid desk-scale configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub area: Area,
    /// Per-slot event probability.
    pub alpha: f64,
    /// Sensing decay rate.
    pub eta: f64,
    /// Error budget the feasible solutions must respect.
    pub budget: f64,
    /// Device counts to sweep.
    pub n_list: Vec<usize>,
    /// Random layouts per device count.
    pub deployments: usize,
    /// Simulated slots used to validate each solution.
    pub ttis: u64,
    /// Epicenter samples per deployment when fitting the coverage law.
    pub calibration_samples: usize,
    /// Root of all derived seeds.
    pub master_seed: u64,
    /// Solvers to run, in report order.
    pub methods: Vec<Method>,
    pub sca: ScaConfig,
    pub bcd: BcdConfig,
    pub ga: EvoConfig,
    pub pso: EvoConfig,
    pub knn: KnnSettings,
    pub qlearn: QlearnSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            area: Area::new(50.0, 50.0).expect("default area is valid"),
            alpha: 0.1,
            eta: 1.0,
            budget: 0.075,
            n_list: vec![25, 50, 100],
            deployments: 20,
            ttis: 100_000,
            calibration_samples: 10_000,
            master_seed: 7,
            methods: Method::ALL.to_vec(),
            sca: ScaConfig::default(),
            bcd: BcdConfig::default(),
            ga: EvoConfig::default(),
            pso: EvoConfig::default(),
            knn: KnnSettings::default(),
            qlearn: QlearnSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| ModelError::Config(format!("bad sweep configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| ModelError::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let model = SensingModel::new(self.eta, self.alpha)?;
        ErrorBudget::new(self.budget, &model)?;
        if self.n_list.is_empty() {
            return Err(ModelError::Config("n_list must not be empty".into()));
        }
        if self.n_list.iter().any(|&n| n == 0) {
            return Err(ModelError::Config("device counts must be positive".into()));
        }
        if self.deployments == 0 {
            return Err(ModelError::Config("need at least one deployment".into()));
        }
        if self.ttis == 0 {
            return Err(ModelError::Config("need at least one simulated slot".into()));
        }
        if self.methods.is_empty() {
            return Err(ModelError::Config("methods must not be empty".into()));
        }
        Ok(())
    }

    /// The sensing model this configuration describes.
    pub fn model(&self) -> Result<SensingModel> {
        SensingModel::new(self.eta, self.alpha)
    }

    /// The error budget this configuration describes.
    pub fn error_budget(&self) -> Result<ErrorBudget> {
        ErrorBudget::new(self.budget, &self.model()?)
    }
}

/// One (method, device count, deployment) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub n: usize,
    /// Deployment index within its device count.
    pub deployment: usize,
    /// Seed the deployment was generated from.
    pub deployment_seed: u64,
    pub feasible: bool,
    /// Expected per-device transmit power of the returned thresholds.
    pub w: f64,
    /// Analytic per-slot error probability.
    pub expected_p_e: f64,
    /// Simulated error frequency and its binomial standard error.
    pub sim_p_e: f64,
    pub sim_p_e_std: f64,
    /// Simulated split of the error into misses and collisions.
    pub sim_p_miss: f64,
    pub sim_p_col: f64,
    /// Solver wall time. Excluded from the CSV so reruns stay identical.
    pub wall_ms: u64,
}

/// CSV column set (and order) shared by the export and its readers.
pub const SWEEP_CSV_HEADER: &str =
    "method,n,deployment,deployment_seed,feasible,w,expected_p_e,sim_p_e,sim_p_e_std,sim_p_miss,sim_p_col";

impl SweepRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.n,
            self.deployment,
            self.deployment_seed,
            self.feasible,
            self.w,
            self.expected_p_e,
            self.sim_p_e,
            self.sim_p_e_std,
            self.sim_p_miss,
            self.sim_p_col,
        )
    }
}

/// Dispatch one deployment to one solver using the sweep's knobs.
pub fn solve_single(
    cfg: &ExperimentConfig,
    method: Method,
    dep: &Deployment,
    cals: &[CalibratedCdf],
    model: &SensingModel,
    budget: &ErrorBudget,
    seed: u64,
) -> Result<OptimizerResult> {
    match method {
        Method::Equal => solve_equal_delta(cals, model, budget),
        Method::Sca => {
            let start = crate::optim::initial_point(dep, cals, model, budget)?;
            let sca = ScaConfig {
                delta0: Some(start.to_vec()),
                ..cfg.sca.clone()
            };
            solve_sca(cals, model, budget, &sca)
        }
        Method::Bcd => {
            let start = crate::optim::initial_point(dep, cals, model, budget)?;
            let bcd = BcdConfig {
                delta0: Some(start.to_vec()),
                ..cfg.bcd.clone()
            };
            solve_bcd(cals, model, budget, &bcd)
        }
        Method::VoronoiMin => solve_voronoi(dep, cals, model, budget, VoronoiVariant::Min),
        Method::VoronoiMean => solve_voronoi(dep, cals, model, budget, VoronoiVariant::Mean),
        Method::VoronoiMax => solve_voronoi(dep, cals, model, budget, VoronoiVariant::Max),
        Method::Knn => {
            let k = cfg.knn.k.min(dep.len().saturating_sub(1)).max(1);
            solve_knn_bayes(dep, cals, model, budget, k, cfg.knn.sweeps, seed)
        }
        Method::Ga => {
            let ga = EvoConfig {
                seed,
                ..cfg.ga.clone()
            };
            solve_ga(cals, model, budget, &ga)
        }
        Method::Pso => {
            // The swarm is warm-started from the geometric rule when the
            // layout admits one.
            let guide = if dep.len() >= 2 {
                solve_voronoi(dep, cals, model, budget, VoronoiVariant::Min)
                    .ok()
                    .map(|r| r.delta.to_vec())
            } else {
                None
            };
            let pso = EvoConfig {
                seed,
                guide,
                ..cfg.pso.clone()
            };
            solve_pso(cals, model, budget, &pso)
        }
        Method::Qlearn => {
            let train = QLearningConfig {
                seed,
                ..cfg.qlearn.train.clone()
            };
            solve_qlearning(dep, cals, model, budget, &train, cfg.qlearn.episodes)
        }
    }
}

/// Run the full sweep. Rows cover the cross product of configured methods,
/// device counts, and deployment indices, and come back sorted by
/// (method, device count, deployment index).
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let budget = cfg.error_budget()?;

    let cells: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.deployments).map(move |idx| (n, idx)))
        .collect();

    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(n, idx)| -> Result<Vec<SweepRow>> {
            let dep_seed = derive_seed(cfg.master_seed, &format!("deploy:{n}:{idx}"));
            let dep = generate_deployment(cfg.area, n, dep_seed)?;
            let cal_seed = derive_seed(cfg.master_seed, &format!("calib:{n}:{idx}"));
            let cals = calibrate_w(&dep, &model, cfg.calibration_samples, cal_seed)?;

            let mut out = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let solve_seed =
                    derive_seed(cfg.master_seed, &format!("solve:{method}:{n}:{idx}"));
                let started = std::time::Instant::now();
                let result = solve_single(cfg, method, &dep, &cals, &model, &budget, solve_seed)?;
                let wall_ms = started.elapsed().as_millis() as u64;

                let sim_seed = derive_seed(cfg.master_seed, &format!("sim:{method}:{n}:{idx}"));
                let report = run_slots(
                    &dep,
                    &model,
                    &result.delta,
                    &SimConfig::new(cfg.ttis, sim_seed),
                )?;

                out.push(SweepRow {
                    method,
                    n,
                    deployment: idx,
                    deployment_seed: dep_seed,
                    feasible: result.feasible,
                    w: result.objective,
                    expected_p_e: result.expected_p_e,
                    sim_p_e: report.error_rate,
                    sim_p_e_std: report.error_rate_std,
                    sim_p_miss: report.miss_rate,
                    sim_p_col: report.collision_rate,
                    wall_ms,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<SweepRow>>>>()?
        .into_iter()
        .flatten()
        .collect();

    let rank = |m: Method| Method::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        rank(a.method)
            .cmp(&rank(b.method))
            .then(a.n.cmp(&b.n))
            .then(a.deployment.cmp(&b.deployment))
    });
    Ok(rows)
}

/// Aggregates of one (method, device count) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n: usize,
    pub runs: usize,
    pub mean_w: f64,
    pub median_w: f64,
    /// Fraction of runs whose answer met the budget.
    pub feasibility: f64,
    pub mean_expected_p_e: f64,
    pub mean_sim_p_e: f64,
    /// Mean power saved relative to the shared-threshold benchmark at the
    /// same device count, as a percentage; absent when the benchmark was
    /// not part of the sweep.
    pub power_reduction_pct: Option<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Group rows by (method, device count) and aggregate. Errors on empty
/// input so a silently empty sweep cannot masquerade as a result.
pub fn summarize(rows: &[SweepRow]) -> Result<Vec<MethodSummary>> {
    if rows.is_empty() {
        return Err(ModelError::invalid("cannot summarize an empty sweep"));
    }
    let mut keys: Vec<(Method, usize)> = rows.iter().map(|r| (r.method, r.n)).collect();
    let rank = |m: Method| Method::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    keys.sort_by(|a, b| rank(a.0).cmp(&rank(b.0)).then(a.1.cmp(&b.1)));
    keys.dedup();

    let mut equal_mean: Vec<(usize, f64)> = Vec::new();
    for &(method, n) in &keys {
        if method == Method::Equal {
            let ws: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.n == n)
                .map(|r| r.w)
                .collect();
            equal_mean.push((n, ws.iter().sum::<f64>() / ws.len() as f64));
        }
    }

    let mut out = Vec::with_capacity(keys.len());
    for (method, n) in keys {
        let group: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.method == method && r.n == n)
            .collect();
        let runs = group.len();
        let mut ws: Vec<f64> = group.iter().map(|r| r.w).collect();
        ws.sort_by(f64::total_cmp);
        let mean_w = ws.iter().sum::<f64>() / runs as f64;
        let feasible = group.iter().filter(|r| r.feasible).count();
        let baseline = equal_mean.iter().find(|&&(bn, _)| bn == n).map(|&(_, w)| w);
        out.push(MethodSummary {
            method,
            n,
            runs,
            mean_w,
            median_w: median(&ws),
            feasibility: feasible as f64 / runs as f64,
            mean_expected_p_e: group.iter().map(|r| r.expected_p_e).sum::<f64>() / runs as f64,
            mean_sim_p_e: group.iter().map(|r| r.sim_p_e).sum::<f64>() / runs as f64,
            power_reduction_pct: baseline.map(|b| 100.0 * (1.0 - mean_w / b)),
        });
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| ModelError::io(path.display().to_string(), e))
}

/// Write the sweep artifacts into `out_dir`:
///
/// - `sweep.csv` / `sweep.json`: one row per run (timings JSON-only),
/// - `summary.csv`: per-(method, n) aggregates,
/// - `fig5_power.csv`: mean power of the geometric rules vs the benchmark,
/// - `fig6_feasibility.csv`: feasibility rates,
/// - `fig8_power.csv`: mean power of every method,
/// - `fig9_error_split.csv`: simulated miss/collision split, whose `p_e`
///   column is exactly `p_miss + p_col`.
pub fn export(rows: &[SweepRow], out_dir: &Path) -> Result<()> {
    let summaries = summarize(rows)?;
    fs::create_dir_all(out_dir).map_err(|e| ModelError::io(out_dir.display().to_string(), e))?;

    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    write_file(out_dir, "sweep.csv", &csv)?;

    let json = serde_json::to_string_pretty(rows)
        .map_err(|e| ModelError::Serialization(e.to_string()))?;
    write_file(out_dir, "sweep.json", &json)?;

    let mut summary = String::from(
        "method,n,runs,mean_w,median_w,feasibility,mean_expected_p_e,mean_sim_p_e,power_reduction_pct\n",
    );
    for s in &summaries {
        let red = s
            .power_reduction_pct
            .map(|v| v.to_string())
            .unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.method,
            s.n,
            s.runs,
            s.mean_w,
            s.median_w,
            s.feasibility,
            s.mean_expected_p_e,
            s.mean_sim_p_e,
            red,
        ));
    }
    write_file(out_dir, "summary.csv", &summary)?;

    let geometric = [
        Method::Equal,
        Method::VoronoiMin,
        Method::VoronoiMean,
        Method::VoronoiMax,
    ];
    let mut fig5 = String::from("n,method,mean_w\n");
    let mut fig6 = String::from("n,method,feasibility\n");
    let mut fig8 = String::from("n,method,mean_w\n");
    let mut fig9 = String::from("n,method,p_miss,p_col,p_e\n");
    for s in &summaries {
        if geometric.contains(&s.method) {
            fig5.push_str(&format!("{},{},{}\n", s.n, s.method, s.mean_w));
        }
        fig6.push_str(&format!("{},{},{}\n", s.n, s.method, s.feasibility));
        fig8.push_str(&format!("{},{},{}\n", s.n, s.method, s.mean_w));
        let group: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.method == s.method && r.n == s.n)
            .collect();
        let p_miss = group.iter().map(|r| r.sim_p_miss).sum::<f64>() / group.len() as f64;
        let p_col = group.iter().map(|r| r.sim_p_col).sum::<f64>() / group.len() as f64;
        fig9.push_str(&format!(
            "{},{},{},{},{}\n",
            s.n,
            s.method,
            p_miss,
            p_col,
            p_miss + p_col,
        ));
    }
    write_file(out_dir, "fig5_power.csv", &fig5)?;
    write_file(out_dir, "fig6_feasibility.csv", &fig6)?;
    write_file(out_dir, "fig8_power.csv", &fig8)?;
    write_file(out_dir, "fig9_error_split.csv", &fig9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n_list: vec![3],
            deployments: 2,
            ttis: 2_000,
            methods: vec![Method::Equal, Method::VoronoiMin, Method::Ga],
            ga: EvoConfig {
                population: 12,
                generations: 6,
                ..EvoConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn empty_toml_is_the_desk_configuration() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.n_list, vec![25, 50, 100]);
        assert_eq!(cfg.deployments, 20);
        assert_eq!(cfg.methods.len(), 10);
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.budget, 0.075);
    }

    #[test]
    fn toml_overrides_take_effect() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            n_list = [4]
            deployments = 3
            methods = ["equal", "qlearn"]
            budget = 0.05

            [area]
            L = 20.0
            H = 30.0

            [qlearn]
            episodes = 9

            [qlearn.train]
            levels = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.n_list, vec![4]);
        assert_eq!(cfg.methods, vec![Method::Equal, Method::Qlearn]);
        assert_eq!(cfg.area.length, 20.0);
        assert_eq!(cfg.qlearn.episodes, 9);
        assert_eq!(cfg.qlearn.train.levels, 8);
        assert_eq!(cfg.budget, 0.05);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("alpha = 1.5").is_err());
        assert!(ExperimentConfig::from_toml("budget = 0.2").is_err());
        assert!(ExperimentConfig::from_toml("n_list = []").is_err());
        assert!(ExperimentConfig::from_toml("methods = [\"warp\"]").is_err());
        assert!(ExperimentConfig::from_toml("deployments = 0").is_err());
    }

    #[test]
    fn sweep_rows_cover_the_grid_and_repeat_exactly() {
        let cfg = tiny_config();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2);
        let again = run_sweep(&cfg).unwrap();
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.w, b.w);
            assert_eq!(a.sim_p_e, b.sim_p_e);
        }
        // Sorted by method rank, then n, then deployment.
        assert_eq!(rows[0].method, Method::Equal);
        assert_eq!(rows[0].deployment, 0);
        assert_eq!(rows[1].deployment, 1);
        assert_eq!(rows[2].method, Method::VoronoiMin);
    }

    #[test]
    fn summaries_aggregate_per_method() {
        let cfg = tiny_config();
        let rows = run_sweep(&cfg).unwrap();
        let sums = summarize(&rows).unwrap();
        assert_eq!(sums.len(), 3);
        let equal = sums.iter().find(|s| s.method == Method::Equal).unwrap();
        assert_eq!(equal.runs, 2);
        assert_eq!(equal.power_reduction_pct, Some(0.0));
        for s in &sums {
            assert!(s.mean_w >= 0.0 && s.feasibility >= 0.0 && s.feasibility <= 1.0);
        }
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn exports_write_every_artifact() {
        let cfg = tiny_config();
        let rows = run_sweep(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export(&rows, dir.path()).unwrap();
        for name in [
            "sweep.csv",
            "sweep.json",
            "summary.csv",
            "fig5_power.csv",
            "fig6_feasibility.csv",
            "fig8_power.csv",
            "fig9_error_split.csv",
        ] {
            let text = fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(!text.is_empty(), "{name} is empty");
        }
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert!(!csv.contains("wall_ms"));
        let json = fs::read_to_string(dir.path().join("sweep.json")).unwrap();
        assert!(json.contains("wall_ms"));
    }
}
