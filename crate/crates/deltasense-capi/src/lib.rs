//! C bindings for the threshold-planning library.
//!
//! Conventions, mirrored in the generated `include/deltasense.h`:
//!
//! - Every fallible function returns a [`DsStatus`]; success is zero.
//! - `DsModel`, `DsDeployment`, and `DsCalibration` are opaque handles.
//!   Free each one exactly once with its matching `*_free` function; the
//!   free functions accept null and do nothing.
//! - Out parameters are written only when the call returns success.
//! - On failure a per-thread message is stored; fetch it with
//!   [`ds_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use deltasense::cdf::{calibrate_w, CalibratedCdf};
use deltasense::error::ModelError;
use deltasense::experiment::{solve_single, ExperimentConfig};
use deltasense::geometry::{generate_deployment, Area, Deployment};
use deltasense::metrics::{expected_p_e, expected_power};
use deltasense::optim::Method;
use deltasense::sensing::{ErrorBudget, SensingModel, ThresholdVector};
use deltasense::sim::{run_slots, SimConfig};

/// Status code returned by every fallible function in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    /// The call succeeded and all out parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument violated a documented precondition.
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    Utf8 = 3,
    /// The geometry cannot support the construction (zero-measure area,
    /// coincident sites, ...).
    DegenerateGeometry = 4,
    /// A serialized payload could not be read or written.
    Serialization = 5,
    /// Filesystem failure.
    Io = 6,
    /// An internal invariant failed; the handle states are unspecified.
    Internal = 7,
}

/// Sensing model plus error budget: decay rate, per-slot event probability,
/// and the error level solutions must stay under.
pub struct DsModel {
    model: SensingModel,
    budget: ErrorBudget,
}

/// A rectangular service area with fixed device positions.
pub struct DsDeployment(Deployment);

/// Per-device fitted coverage curves for one deployment; inputs to the
/// closed-form expectations and every solver.
pub struct DsCalibration(Vec<CalibratedCdf>);

/// Summary statistics of one slotted simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsSimStats {
    /// Simulated slots.
    pub ttis: u64,
    /// Slots in which an event occurred.
    pub events: u64,
    /// Events reported by exactly one device.
    pub successes: u64,
    /// Events with two or more simultaneous reports.
    pub collisions: u64,
    /// Events nobody reported.
    pub misses: u64,
    /// Per-slot error frequency (misses plus collisions).
    pub error_rate: f64,
    /// Binomial standard error of `error_rate`.
    pub error_rate_std: f64,
    /// Per-slot miss frequency.
    pub miss_rate: f64,
    /// Per-slot collision frequency.
    pub collision_rate: f64,
    /// Mean fraction of slots a device spent transmitting.
    pub mean_active_fraction: f64,
}

/// Scoring of a solver's answer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsSolveInfo {
    /// Expected per-device transmit power (the minimized objective).
    pub objective: f64,
    /// Expected per-slot error probability of the returned thresholds.
    pub expected_p_e: f64,
    /// Whether `expected_p_e` meets the configured budget.
    pub feasible: bool,
    /// Outer iterations the solver ran.
    pub iterations: u64,
    /// Objective and constraint evaluations the solver spent.
    pub evaluations: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &ModelError) -> DsStatus {
    match e {
        ModelError::InvalidArgument(_) | ModelError::LengthMismatch { .. } => {
            DsStatus::InvalidArgument
        }
        ModelError::DegenerateGeometry(_) => DsStatus::DegenerateGeometry,
        ModelError::Config(_) => DsStatus::InvalidArgument,
        ModelError::Io { .. } => DsStatus::Io,
        ModelError::Serialization(_) => DsStatus::Serialization,
    }
}

fn fail(e: ModelError) -> DsStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null_arg(name: &str) -> DsStatus {
    set_error(&format!("{name} must not be null"));
    DsStatus::NullPointer
}

/// Run a body behind the unwind barrier every entry point needs: a panic
/// must not cross the C boundary.
fn guarded<F: FnOnce() -> DsStatus>(f: F) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; handle states are unspecified");
            DsStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, DsStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        DsStatus::Utf8
    })
}

unsafe fn slice_arg<'a>(
    ptr: *const f64,
    len: usize,
    name: &str,
) -> Result<&'a [f64], DsStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Version of this library as a static, null-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the current thread's last error message into `buf`.
///
/// Returns the size in bytes the full message needs, including the trailing
/// null. When `buf` is null or `cap` is zero nothing is copied; otherwise at
/// most `cap - 1` bytes plus a null terminator are written. The message is
/// empty until a call on this thread fails.
#[no_mangle]
pub unsafe extern "C" fn ds_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        let required = bytes.len() + 1;
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        required
    })
}

/// Create a sensing model handle.
///
/// `eta` is the exponential decay rate of sensed power over distance,
/// `alpha` the per-slot event probability in (0, 1), and `budget` the error
/// probability ceiling in (0, alpha).
#[no_mangle]
pub unsafe extern "C" fn ds_model_new(
    eta: f64,
    alpha: f64,
    budget: f64,
    out: *mut *mut DsModel,
) -> DsStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let model = match SensingModel::new(eta, alpha) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let budget = match ErrorBudget::new(budget, &model) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        *out = Box::into_raw(Box::new(DsModel { model, budget }));
        DsStatus::Ok
    })
}

/// Destroy a model handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn ds_model_free(model: *mut DsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scatter `n` devices uniformly at random over a `length` by `height`
/// rectangle. The draw is deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_generate(
    length: f64,
    height: f64,
    n: usize,
    seed: u64,
    out: *mut *mut DsDeployment,
) -> DsStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let area = match Area::new(length, height) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        match generate_deployment(area, n, seed) {
            Ok(dep) => {
                *out = Box::into_raw(Box::new(DsDeployment(dep)));
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parse a deployment from its JSON form:
/// `{"L":50.0,"H":50.0,"devices":[{"x":1.0,"y":2.0}, ...]}`.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_from_json(
    json: *const c_char,
    out: *mut *mut DsDeployment,
) -> DsStatus {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Deployment::from_json(text) {
            Ok(dep) => {
                *out = Box::into_raw(Box::new(DsDeployment(dep)));
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Serialize a deployment to JSON. The returned string must be released
/// with `ds_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_to_json(
    dep: *const DsDeployment,
    out: *mut *mut c_char,
) -> DsStatus {
    guarded(|| {
        if dep.is_null() {
            return null_arg("dep");
        }
        if out.is_null() {
            return null_arg("out");
        }
        match CString::new((*dep).0.to_json()) {
            Ok(s) => {
                *out = s.into_raw();
                DsStatus::Ok
            }
            Err(_) => {
                set_error("serialized deployment contained an interior null byte");
                DsStatus::Serialization
            }
        }
    })
}

/// Release a string returned by this library. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of devices in a deployment; zero when `dep` is null.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_len(dep: *const DsDeployment) -> usize {
    if dep.is_null() {
        0
    } else {
        (*dep).0.len()
    }
}

/// Fetch one device's coordinates by zero-based index.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_device(
    dep: *const DsDeployment,
    index: usize,
    x: *mut f64,
    y: *mut f64,
) -> DsStatus {
    guarded(|| {
        if dep.is_null() {
            return null_arg("dep");
        }
        if x.is_null() {
            return null_arg("x");
        }
        if y.is_null() {
            return null_arg("y");
        }
        let devices = (*dep).0.devices();
        match devices.get(index) {
            Some(d) => {
                *x = d.x;
                *y = d.y;
                DsStatus::Ok
            }
            None => {
                set_error(&format!(
                    "device index {index} out of range for {} devices",
                    devices.len()
                ));
                DsStatus::InvalidArgument
            }
        }
    })
}

/// Destroy a deployment handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn ds_deployment_free(dep: *mut DsDeployment) {
    if !dep.is_null() {
        drop(Box::from_raw(dep));
    }
}

/// Fit per-device coverage curves from `samples` uniform event draws
/// (at least 10000). Deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn ds_calibration_new(
    dep: *const DsDeployment,
    model: *const DsModel,
    samples: usize,
    seed: u64,
    out: *mut *mut DsCalibration,
) -> DsStatus {
    guarded(|| {
        if dep.is_null() {
            return null_arg("dep");
        }
        if model.is_null() {
            return null_arg("model");
        }
        if out.is_null() {
            return null_arg("out");
        }
        match calibrate_w(&(*dep).0, &(*model).model, samples, seed) {
            Ok(cals) => {
                *out = Box::into_raw(Box::new(DsCalibration(cals)));
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Destroy a calibration handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn ds_calibration_free(cal: *mut DsCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}

unsafe fn thresholds(
    cal: &DsCalibration,
    delta: *const f64,
    len: usize,
) -> Result<ThresholdVector, DsStatus> {
    let raw = slice_arg(delta, len, "delta")?;
    if raw.len() != cal.0.len() {
        set_error(&format!(
            "threshold count {} does not match the {} calibrated devices",
            raw.len(),
            cal.0.len()
        ));
        return Err(DsStatus::InvalidArgument);
    }
    ThresholdVector::new(raw.to_vec()).map_err(fail)
}

/// Expected per-slot error probability of the thresholds `delta[0..len]`.
#[no_mangle]
pub unsafe extern "C" fn ds_expected_error(
    model: *const DsModel,
    cal: *const DsCalibration,
    delta: *const f64,
    len: usize,
    out: *mut f64,
) -> DsStatus {
    guarded(|| {
        if model.is_null() {
            return null_arg("model");
        }
        if cal.is_null() {
            return null_arg("cal");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let tv = match thresholds(&*cal, delta, len) {
            Ok(tv) => tv,
            Err(s) => return s,
        };
        match expected_p_e(&(*cal).0, &(*model).model, &tv) {
            Ok(v) => {
                *out = v;
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Expected per-device transmit power of the thresholds `delta[0..len]`.
#[no_mangle]
pub unsafe extern "C" fn ds_expected_power(
    model: *const DsModel,
    cal: *const DsCalibration,
    delta: *const f64,
    len: usize,
    out: *mut f64,
) -> DsStatus {
    guarded(|| {
        if model.is_null() {
            return null_arg("model");
        }
        if cal.is_null() {
            return null_arg("cal");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let tv = match thresholds(&*cal, delta, len) {
            Ok(tv) => tv,
            Err(s) => return s,
        };
        match expected_power(&(*cal).0, &(*model).model, &tv) {
            Ok(v) => {
                *out = v;
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Run one solver and write its thresholds into `delta_out[0..n]`.
///
/// `method_tag` selects the solver: one of `equal`, `sca`, `bcd`,
/// `voronoi_min`, `voronoi_mean`, `voronoi_max`, `knn`, `ga`, `pso`,
/// `qlearn`. `delta_cap` is the capacity of `delta_out` and must cover the
/// deployment's device count. `info` may be null when the scoring is not
/// wanted. Stochastic solvers are deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn ds_solve(
    model: *const DsModel,
    dep: *const DsDeployment,
    cal: *const DsCalibration,
    method_tag: *const c_char,
    seed: u64,
    delta_out: *mut f64,
    delta_cap: usize,
    info: *mut DsSolveInfo,
) -> DsStatus {
    guarded(|| {
        if model.is_null() {
            return null_arg("model");
        }
        if dep.is_null() {
            return null_arg("dep");
        }
        if cal.is_null() {
            return null_arg("cal");
        }
        if delta_out.is_null() {
            return null_arg("delta_out");
        }
        let tag = match str_arg(method_tag, "method_tag") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let method = match Method::from_str(tag) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let n = (*dep).0.len();
        if (*cal).0.len() != n {
            set_error(&format!(
                "calibration covers {} devices but the deployment has {n}",
                (*cal).0.len()
            ));
            return DsStatus::InvalidArgument;
        }
        if delta_cap < n {
            set_error(&format!(
                "delta_out capacity {delta_cap} is below the {n} devices"
            ));
            return DsStatus::InvalidArgument;
        }
        let cfg = ExperimentConfig {
            eta: (*model).model.eta,
            alpha: (*model).model.alpha,
            budget: (*model).budget.e,
            ..ExperimentConfig::default()
        };
        let result = match solve_single(
            &cfg,
            method,
            &(*dep).0,
            &(*cal).0,
            &(*model).model,
            &(*model).budget,
            seed,
        ) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        std::ptr::copy_nonoverlapping(result.delta.as_slice().as_ptr(), delta_out, n);
        if !info.is_null() {
            *info = DsSolveInfo {
                objective: result.objective,
                expected_p_e: result.expected_p_e,
                feasible: result.feasible,
                iterations: result.iterations,
                evaluations: result.evaluations,
            };
        }
        DsStatus::Ok
    })
}

/// Replay thresholds through the slotted simulator for `ttis` slots and
/// fill `out` with the measured rates. Deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn ds_simulate(
    model: *const DsModel,
    dep: *const DsDeployment,
    delta: *const f64,
    len: usize,
    ttis: u64,
    seed: u64,
    out: *mut DsSimStats,
) -> DsStatus {
    guarded(|| {
        if model.is_null() {
            return null_arg("model");
        }
        if dep.is_null() {
            return null_arg("dep");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let raw = match slice_arg(delta, len, "delta") {
            Ok(r) => r,
            Err(s) => return s,
        };
        if raw.len() != (*dep).0.len() {
            set_error(&format!(
                "threshold count {} does not match the {} devices",
                raw.len(),
                (*dep).0.len()
            ));
            return DsStatus::InvalidArgument;
        }
        let tv = match ThresholdVector::new(raw.to_vec()) {
            Ok(tv) => tv,
            Err(e) => return fail(e),
        };
        match run_slots(&(*dep).0, &(*model).model, &tv, &SimConfig::new(ttis, seed)) {
            Ok(rep) => {
                *out = DsSimStats {
                    ttis: rep.ttis,
                    events: rep.events,
                    successes: rep.successes,
                    collisions: rep.collisions,
                    misses: rep.misses,
                    error_rate: rep.error_rate,
                    error_rate_std: rep.error_rate_std,
                    miss_rate: rep.miss_rate,
                    collision_rate: rep.collision_rate,
                    mean_active_fraction: rep.mean_active_fraction,
                };
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
