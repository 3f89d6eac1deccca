//! C interface to the hydroelastic simulator.
//!
//! Every fallible function returns an [`HcStatus`]; on failure the message is
//! available from [`hc_last_error_message`] on the same thread. Handles are
//! opaque and owned by the caller until passed to [`hc_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hydroelastic::discrete_contact::effective_gradient;
use hydroelastic::experiments::{step_with_retry, RunOptions, Scenario};
use hydroelastic::multibody::SystemState;
use hydroelastic::stepper::{SolverConfig, World};
use hydroelastic::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Io = 4,
    NonConvergence = 5,
    IndexOutOfRange = 6,
    InvalidArgument = 7,
    Internal = 8,
}

/// Opaque simulation handle.
pub struct HcSimulation {
    world: World,
    state: SystemState,
    config: SolverConfig,
    steps: u64,
    retries: u64,
    last_contacts: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> HcStatus {
    match e {
        Error::Io(_) => HcStatus::Io,
        Error::NonConvergence { .. } => HcStatus::NonConvergence,
        Error::StepFailed { source, .. } => status_of(source),
        Error::IndexOutOfRange { .. } => HcStatus::IndexOutOfRange,
        _ => HcStatus::InvalidConfig,
    }
}

fn fail(status: HcStatus, msg: impl Into<String>) -> HcStatus {
    set_error(msg);
    status
}

/// Run `f`, translating panics into `Internal` so they never cross the ABI.
fn guard(f: impl FnOnce() -> HcStatus) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HcStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HcStatus> {
    if p.is_null() {
        return Err(fail(HcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn create(scenario: &Scenario, out: *mut *mut HcSimulation) -> HcStatus {
    match scenario.build() {
        Ok((world, state)) => {
            let sim = Box::new(HcSimulation {
                world,
                state,
                config: scenario.solver.clone(),
                steps: 0,
                retries: 0,
                last_contacts: 0,
            });
            // SAFETY: caller checked `out` is non-null.
            unsafe { *out = Box::into_raw(sim) };
            HcStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Build a simulation from scenario TOML text. Relative mesh paths resolve
/// against `base_dir`, which may be null (current directory).
///
/// # Safety
/// `toml` and a non-null `base_dir` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_new_from_toml(
    toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut HcSimulation,
) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match str_arg(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let mut scenario = match Scenario::from_toml(text) {
            Ok(s) => s,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        if !base_dir.is_null() {
            match str_arg(base_dir, "base_dir") {
                Ok(d) => scenario.base_dir = Some(PathBuf::from(d)),
                Err(s) => return s,
            }
        }
        create(&scenario, out)
    })
}

/// Build a simulation from a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_load(path: *const c_char, out: *mut *mut HcSimulation) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match Scenario::load(path) {
            Ok(s) => create(&s, out),
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_free(sim: *mut HcSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance `steps` time steps. A step that fails to converge is retried once
/// as two half steps; if that fails too the state is left at the last good
/// step and `HC_STATUS_NON_CONVERGENCE` is returned.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_step(sim: *mut HcSimulation, steps: u32) -> HcStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(HcStatus::NullPointer, "sim is null");
        };
        let options = RunOptions { retry_half_step: true };
        for _ in 0..steps {
            match step_with_retry(&sim.state, &sim.world, &sim.config, options) {
                Ok((out, retried)) => {
                    sim.steps += 1;
                    sim.retries += u64::from(retried);
                    sim.last_contacts = out.constraints.len();
                    sim.state = out.state;
                    sim.state.time = sim.steps as f64 * sim.config.dt;
                }
                Err(e) => return fail(status_of(&e), format!("step at t = {}: {e}", sim.state.time)),
            }
        }
        HcStatus::Ok
    })
}

/// Write `value(sim)` to `out` after null checks.
unsafe fn get<T>(sim: *const HcSimulation, out: *mut T, value: impl FnOnce(&HcSimulation) -> T) -> HcStatus {
    guard(|| match (sim.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = value(s);
            HcStatus::Ok
        }
        _ => fail(HcStatus::NullPointer, "null argument"),
    })
}

/// Simulated time (s).
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_time(sim: *const HcSimulation, out: *mut f64) -> HcStatus {
    get(sim, out, |s| s.state.time)
}

/// Number of bodies, anchored ones included.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_body_count(sim: *const HcSimulation, out: *mut usize) -> HcStatus {
    get(sim, out, |s| s.world.system.num_bodies())
}

/// Contact constraints used by the most recent step.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_contact_count(sim: *const HcSimulation, out: *mut usize) -> HcStatus {
    get(sim, out, |s| s.last_contacts)
}

/// Steps that needed a half-step retry so far.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_retry_count(sim: *const HcSimulation, out: *mut u64) -> HcStatus {
    get(sim, out, |s| s.retries)
}

/// Pose of body `index` as `[x, y, z, qw, qx, qy, qz]`.
///
/// # Safety
/// `sim` must be a live handle; `out` must hold 7 doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_body_pose(sim: *const HcSimulation, index: usize, out: *mut f64) -> HcStatus {
    guard(|| {
        let (Some(s), false) = (sim.as_ref(), out.is_null()) else {
            return fail(HcStatus::NullPointer, "null argument");
        };
        let n = s.world.system.num_bodies();
        if index >= n {
            return fail(HcStatus::IndexOutOfRange, format!("body {index} out of range (count {n})"));
        }
        let pose = s.world.system.pose(&s.state.q, index);
        let t = pose.translation.vector;
        let r = pose.rotation;
        let vals = [t.x, t.y, t.z, r.w, r.i, r.j, r.k];
        std::slice::from_raw_parts_mut(out, 7).copy_from_slice(&vals);
        HcStatus::Ok
    })
}

/// World-frame velocity of body `index` as `[wx, wy, wz, vx, vy, vz]`;
/// zero for anchored bodies.
///
/// # Safety
/// `sim` must be a live handle; `out` must hold 6 doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_simulation_body_velocity(
    sim: *const HcSimulation,
    index: usize,
    out: *mut f64,
) -> HcStatus {
    guard(|| {
        let (Some(s), false) = (sim.as_ref(), out.is_null()) else {
            return fail(HcStatus::NullPointer, "null argument");
        };
        let n = s.world.system.num_bodies();
        if index >= n {
            return fail(HcStatus::IndexOutOfRange, format!("body {index} out of range (count {n})"));
        }
        let (w, v) = s.world.system.spatial_velocity(&s.state.v, index);
        let vals = [w.x, w.y, w.z, v.x, v.y, v.z];
        std::slice::from_raw_parts_mut(out, 6).copy_from_slice(&vals);
        HcStatus::Ok
    })
}

/// Combined normal pressure gradient of two bodies; pass `INFINITY` for a
/// rigid side. Both inputs must be positive.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_effective_gradient(g_a: f64, g_b: f64, out: *mut f64) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        match effective_gradient(g_a, g_b) {
            Some(g) => {
                *out = g;
                HcStatus::Ok
            }
            None => fail(
                HcStatus::InvalidArgument,
                format!("gradients must be positive (got {g_a}, {g_b})"),
            ),
        }
    })
}

/// Message of the last failure on this thread; empty if none. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
