//! C ABI for the homogeneous-flow laboratory.
//!
//! Conventions:
//!
//! - Handles (`HfGrid`, `HfFraming`, `HfGauge`) are opaque pointers owned
//!   by this library; every `*_new`-style constructor has a matching
//!   `*_free`, and freeing a null pointer is a no-op.
//! - Every fallible call returns an [`HfStatus`]; on any non-`Ok` status
//!   the thread-local error message is set and can be copied out with
//!   [`hf_last_error_message`].
//! - Out-parameters are written only on `Ok`.
//! - Panics never unwind across the boundary; they surface as
//!   `HfStatus::Panic`.
//!
//! # Safety
//!
//! All entry points are `unsafe` and share one contract: every pointer
//! argument must be null or valid for its declared direction (reads for
//! `*const`, writes for `*mut`), handle arguments must come from this
//! library and not have been freed, and `*const c_char` arguments must
//! point to NUL-terminated strings. Null handles and strings are caught
//! and reported as `HfStatus::NullPointer`; everything else about pointer
//! validity is on the caller, as usual for a C ABI.

// The shared contract above covers every entry point; per-function
// `# Safety` sections would only repeat it.
#![allow(clippy::missing_safety_doc)]
// Validation guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`
// they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Keep pointer operations visibly scoped even inside unsafe fns.
#![warn(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use hf_core::analysis::{lie_classify, mean_structure, LieClass};
use hf_core::config::ExperimentConfig;
use hf_core::container;
use hf_core::curvature::Contraction;
use hf_core::flow::{
    detect_convergence, integrate_flow, integrate_flow_gauge, FlowOutcome, FlowParams, Integrator,
    StepControl,
};
use hf_core::framing::{
    gauge_apply, polar_project, reference_left_framing, reference_right_framing, Framing,
    GaugeField,
};
use hf_core::harness::random_deformation;
use hf_core::s3_geometry::{build_grid, Grid};
use hf_core::topology::{covering_map_field, degree};
use hf_core::HfError;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HfStatus {
    Ok = 0,
    /// a precondition on the inputs failed
    InvalidInput = 1,
    /// a field was numerically singular at some node
    Singular = 2,
    /// an internal numerical procedure failed
    Numeric = 3,
    /// configuration text was rejected
    Config = 4,
    /// file I/O or serialization failed
    Io = 5,
    /// a required pointer argument was null
    NullPointer = 6,
    /// a string argument was not valid UTF-8
    Utf8 = 7,
    /// an internal panic was caught at the boundary
    Panic = 8,
}

fn status_of(err: &HfError) -> HfStatus {
    match err {
        HfError::InvalidInput(_) => HfStatus::InvalidInput,
        HfError::FrameSolve { .. } => HfStatus::Numeric,
        HfError::SingularField { .. } => HfStatus::Singular,
        HfError::CalibrationUnstable { .. } => HfStatus::Numeric,
        HfError::Numeric(_) => HfStatus::Numeric,
        HfError::Config(_) => HfStatus::Config,
        HfError::Io(_) => HfStatus::Io,
        HfError::Serde(_) => HfStatus::Io,
    }
}

fn fail(err: HfError) -> HfStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Run a closure with panic- and error-trapping, writing the result
/// through `sink` on success.
fn guarded<T>(sink: *mut T, f: impl FnOnce() -> Result<T, HfError>) -> HfStatus {
    if sink.is_null() {
        set_error("output pointer is null");
        return HfStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(value)) => {
            unsafe { sink.write(value) };
            HfStatus::Ok
        }
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic trapped at the FFI boundary");
            HfStatus::Panic
        }
    }
}

fn null_arg(name: &str) -> HfStatus {
    set_error(format!("argument '{name}' is null"));
    HfStatus::NullPointer
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, HfStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(format!("argument '{name}' is not valid UTF-8"));
        HfStatus::Utf8
    })
}

/// Copy the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `cap` bytes). Returns the full message
/// length in bytes, so callers can detect truncation; with a null buffer
/// or zero capacity nothing is copied.
#[no_mangle]
pub unsafe extern "C" fn hf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                buf.add(n).write(0);
            }
        }
        bytes.len()
    })
}

/// Opaque grid handle.
pub struct HfGrid(Arc<Grid>);
/// Opaque framing handle.
pub struct HfFraming(Framing);
/// Opaque gauge-field handle.
pub struct HfGauge(GaugeField);

/// Build a grid with the given sample counts.
#[no_mangle]
pub unsafe extern "C" fn hf_grid_build(
    n_alpha: usize,
    n_beta: usize,
    n_gamma: usize,
    out: *mut *mut HfGrid,
) -> HfStatus {
    guarded(out, || {
        let grid = build_grid(n_alpha, n_beta, n_gamma)?;
        Ok(Box::into_raw(Box::new(HfGrid(Arc::new(grid)))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_grid_free(grid: *mut HfGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Number of nodes in the grid, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hf_grid_node_count(grid: *const HfGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    unsafe { &*grid }.0.node_count()
}

/// Side selector for reference framings: 0 = left, 1 = right.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum HfSide {
    Left = 0,
    Right = 1,
}

/// The reference (Lie) framing of the requested side.
#[no_mangle]
pub unsafe extern "C" fn hf_framing_reference(
    grid: *const HfGrid,
    side: HfSide,
    out: *mut *mut HfFraming,
) -> HfStatus {
    if grid.is_null() {
        return null_arg("grid");
    }
    guarded(out, || {
        let g = unsafe { &*grid };
        let framing = match side {
            HfSide::Left => reference_left_framing(&g.0),
            HfSide::Right => reference_right_framing(&g.0),
        };
        Ok(Box::into_raw(Box::new(HfFraming(framing))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_framing_free(w: *mut HfFraming) {
    if !w.is_null() {
        drop(unsafe { Box::from_raw(w) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn hf_gauge_free(a: *mut HfGauge) {
    if !a.is_null() {
        drop(unsafe { Box::from_raw(a) });
    }
}

/// Seeded random deformation exp(eps*s) on the grid (see the core library
/// for the construction); deterministic in the seed.
#[no_mangle]
pub unsafe extern "C" fn hf_gauge_random_deformation(
    grid: *const HfGrid,
    seed: u64,
    eps: f64,
    cutoff: usize,
    out: *mut *mut HfGauge,
) -> HfStatus {
    if grid.is_null() {
        return null_arg("grid");
    }
    guarded(out, || {
        let g = unsafe { &*grid };
        Ok(Box::into_raw(Box::new(HfGauge(random_deformation(&g.0, seed, eps, cutoff)?))))
    })
}

/// The 2:1 covering map as a rotation-valued gauge field (degree +1).
#[no_mangle]
pub unsafe extern "C" fn hf_gauge_covering_map(grid: *const HfGrid, out: *mut *mut HfGauge) -> HfStatus {
    if grid.is_null() {
        return null_arg("grid");
    }
    guarded(out, || {
        let g = unsafe { &*grid };
        Ok(Box::into_raw(Box::new(HfGauge(covering_map_field(&g.0)))))
    })
}

/// Apply a gauge field to a framing (pointwise source composition).
#[no_mangle]
pub unsafe extern "C" fn hf_framing_apply_gauge(
    w: *const HfFraming,
    a: *const HfGauge,
    out: *mut *mut HfFraming,
) -> HfStatus {
    if w.is_null() {
        return null_arg("w");
    }
    if a.is_null() {
        return null_arg("a");
    }
    guarded(out, || {
        let w = unsafe { &*w };
        let a = unsafe { &*a };
        Ok(Box::into_raw(Box::new(HfFraming(gauge_apply(&w.0, &a.0)?))))
    })
}

/// Save a framing to a container file.
#[no_mangle]
pub unsafe extern "C" fn hf_framing_save(w: *const HfFraming, path: *const c_char) -> HfStatus {
    if w.is_null() {
        return null_arg("w");
    }
    let path = match unsafe { str_arg(path, "path") } {
        Ok(p) => p,
        Err(status) => return status,
    };
    match catch_unwind(AssertUnwindSafe(|| {
        container::save_framing(Path::new(path), &unsafe { &*w }.0)
    })) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic trapped at the FFI boundary");
            HfStatus::Panic
        }
    }
}

/// Load a framing from a container file.
#[no_mangle]
pub unsafe extern "C" fn hf_framing_load(path: *const c_char, out: *mut *mut HfFraming) -> HfStatus {
    let path = match unsafe { str_arg(path, "path") } {
        Ok(p) => p.to_string(),
        Err(status) => return status,
    };
    guarded(out, || {
        Ok(Box::into_raw(Box::new(HfFraming(container::load_framing(Path::new(&path))?))))
    })
}

/// Flow controls, mirroring the core parameter set.
/// `contraction`: 0 = div_k, 1 = trace_i. `integrator`: 0 = rk4,
/// 1 = euler. `step_control`: 0 = fixed, 1 = halving.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct HfFlowParams {
    pub dt: f64,
    pub t_max: f64,
    pub max_steps: u64,
    pub tol_h: f64,
    pub tol_drift: f64,
    pub window: u64,
    pub sample_stride: u64,
    pub snapshot_stride: u64,
    pub contraction: i32,
    pub integrator: i32,
    pub step_control: i32,
}

/// Fill `out` with the default flow parameters.
#[no_mangle]
pub unsafe extern "C" fn hf_flow_params_default(out: *mut HfFlowParams) -> HfStatus {
    guarded(out, || {
        let p = FlowParams::default();
        Ok(HfFlowParams {
            dt: p.dt,
            t_max: p.t_max,
            max_steps: p.max_steps as u64,
            tol_h: p.tol_h,
            tol_drift: p.tol_drift,
            window: p.window as u64,
            sample_stride: p.sample_stride as u64,
            snapshot_stride: p.snapshot_stride as u64,
            contraction: 0,
            integrator: 0,
            step_control: 0,
        })
    })
}

fn params_from_c(p: &HfFlowParams) -> Result<FlowParams, HfError> {
    let contraction = match p.contraction {
        0 => Contraction::DivK,
        1 => Contraction::TraceI,
        other => return Err(HfError::InvalidInput(format!("contraction code {other} (want 0 or 1)"))),
    };
    let integrator = match p.integrator {
        0 => Integrator::Rk4,
        1 => Integrator::Euler,
        other => return Err(HfError::InvalidInput(format!("integrator code {other} (want 0 or 1)"))),
    };
    let step_control = match p.step_control {
        0 => StepControl::Fixed,
        1 => StepControl::Halving,
        other => return Err(HfError::InvalidInput(format!("step_control code {other} (want 0 or 1)"))),
    };
    Ok(FlowParams {
        dt: p.dt,
        t_max: p.t_max,
        max_steps: p.max_steps as usize,
        tol_h: p.tol_h,
        tol_drift: p.tol_drift,
        window: p.window as usize,
        contraction,
        integrator,
        step_control,
        sample_stride: p.sample_stride as usize,
        snapshot_stride: p.snapshot_stride as usize,
    })
}

/// How a flow run ended: 0 = completed, 1 = positivity lost, 2 = blow-up,
/// 3 = step limit.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct HfRunReport {
    pub outcome: i32,
    /// time associated with the outcome (t_max when completed)
    pub outcome_t: f64,
    /// node at which positivity failed, else u64::MAX
    pub outcome_node: u64,
    pub steps: u64,
    pub recorded_rows: u64,
    pub final_sup_h: f64,
    pub final_sup_r: f64,
    pub converged: i32,
    /// plateau entry time; NaN when not converged
    pub t_prime: f64,
    pub orbit_preserved: i32,
}

/// Integrate the flow from `w`. `gauge_form` selects the state variable
/// (0: the framing itself, 1: the relative gauge). On success `out_final`
/// (when non-null) receives the final framing as a new handle.
#[no_mangle]
pub unsafe extern "C" fn hf_flow_run(
    w: *const HfFraming,
    params: *const HfFlowParams,
    gauge_form: i32,
    report: *mut HfRunReport,
    out_final: *mut *mut HfFraming,
) -> HfStatus {
    if w.is_null() {
        return null_arg("w");
    }
    if params.is_null() {
        return null_arg("params");
    }
    guarded(report, || {
        let w = unsafe { &*w };
        let p = params_from_c(unsafe { &*params })?;
        let trace = if gauge_form != 0 {
            integrate_flow_gauge(&w.0, &p)?
        } else {
            integrate_flow(&w.0, &p)?
        };
        let conv = detect_convergence(&trace, &p);
        let (outcome, outcome_t, outcome_node) = match trace.outcome {
            FlowOutcome::Completed => (0, p.t_max, u64::MAX),
            FlowOutcome::PositivityLost { t, node } => (1, t, node as u64),
            FlowOutcome::Blowup { t } => (2, t, u64::MAX),
            FlowOutcome::StepLimit { t } => (3, t, u64::MAX),
        };
        let c_report = HfRunReport {
            outcome,
            outcome_t,
            outcome_node,
            steps: trace.steps_taken as u64,
            recorded_rows: trace.rows.len() as u64,
            final_sup_h: conv.final_norms.0,
            final_sup_r: conv.final_norms.1,
            converged: conv.converged as i32,
            t_prime: conv.t_prime.unwrap_or(f64::NAN),
            orbit_preserved: conv.orbit_preserved as i32,
        };
        if !out_final.is_null() {
            unsafe {
                out_final.write(Box::into_raw(Box::new(HfFraming(trace.final_framing))));
            }
        }
        Ok(c_report)
    })
}

/// Degree of a gauge field: projects to rotations first when needed.
/// `was_projected` (when non-null) records whether projection happened.
#[no_mangle]
pub unsafe extern "C" fn hf_gauge_degree(
    a: *const HfGauge,
    raw: *mut f64,
    rounded: *mut i64,
    was_projected: *mut i32,
) -> HfStatus {
    if a.is_null() {
        return null_arg("a");
    }
    if rounded.is_null() {
        return null_arg("rounded");
    }
    guarded(raw, || {
        let a = unsafe { &*a };
        let (raw_value, rounded_value, projected) = match degree(&a.0) {
            Ok((r, d)) => (r, d, false),
            Err(HfError::InvalidInput(_)) => {
                let p = polar_project(&a.0)?;
                let (r, d) = degree(&p)?;
                (r, d, true)
            }
            Err(e) => return Err(e),
        };
        unsafe {
            rounded.write(rounded_value);
            if !was_projected.is_null() {
                was_projected.write(projected as i32);
            }
        }
        Ok(raw_value)
    })
}

/// Lie-limit report, mirroring the core analysis. `classification`:
/// 0 = su2, 1 = abelian, 2 = other.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct HfLieReport {
    pub constancy_residual: f64,
    pub jacobi_residual: f64,
    pub killing_eigenvalues: [f64; 3],
    pub classification: i32,
    pub globalizable: i32,
}

/// Local-Lie-group check of a framing at the given constancy tolerance.
#[no_mangle]
pub unsafe extern "C" fn hf_llg_check(
    w: *const HfFraming,
    tol: f64,
    out: *mut HfLieReport,
) -> HfStatus {
    if w.is_null() {
        return null_arg("w");
    }
    guarded(out, || {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(HfError::InvalidInput(format!(
                "tolerance must be positive and finite, got {tol}"
            )));
        }
        let w = unsafe { &*w };
        let (cbar, residual) = mean_structure(&w.0)?;
        let (jacobi, eigs, class) = lie_classify(&cbar)?;
        Ok(HfLieReport {
            constancy_residual: residual,
            jacobi_residual: jacobi,
            killing_eigenvalues: eigs,
            classification: match class {
                LieClass::Su2 => 0,
                LieClass::Abelian => 1,
                LieClass::Other => 2,
            },
            globalizable: (residual <= tol) as i32,
        })
    })
}

/// Parse a key=value config text purely for validation. Useful for host
/// applications that stage configs before shelling out to the CLI.
#[no_mangle]
pub unsafe extern "C" fn hf_config_validate(text: *const c_char) -> HfStatus {
    let text = match unsafe { str_arg(text, "text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    match catch_unwind(|| ExperimentConfig::parse(text)) {
        Ok(Ok(_)) => HfStatus::Ok,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic trapped at the FFI boundary");
            HfStatus::Panic
        }
    }
}
