//! C ABI over the synchrony core.
//!
//! Every fallible call returns a [`SyStatus`]; on failure the message is
//! kept per thread and read with [`sy_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary, they turn into `SY_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use synchrony::agents::{AvatarFrequencyLaw, CognitiveArchitecture, RlObservation};
use synchrony::io::parse_json;
use synchrony::metrics::mean_phasor;
use synchrony::phase::{OnlineConfig, OnlineEstimator};
use synchrony::rl::load_checkpoint;
use synchrony::run::{run_simulate, SimulateConfig};
use synchrony::theory::chi_nu;
use synchrony::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyStatus {
    Ok = 0,
    InvalidArgument = 1,
    InsufficientHistory = 2,
    InvalidState = 3,
    Config = 4,
    Io = 5,
    Json = 6,
    SessionExists = 7,
    NotFound = 8,
    NullPointer = 9,
    Utf8 = 10,
    Panic = 11,
}

impl From<&Error> for SyStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => SyStatus::InvalidArgument,
            Error::InsufficientHistory { .. } => SyStatus::InsufficientHistory,
            Error::InvalidState(_) => SyStatus::InvalidState,
            Error::Config { .. } => SyStatus::Config,
            Error::Io { .. } => SyStatus::Io,
            Error::Json(_) => SyStatus::Json,
            Error::SessionExists(_) => SyStatus::SessionExists,
            Error::NotFound(_) => SyStatus::NotFound,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(SyStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(SyStatus::from(&e), format!("{}: {e}", e.category()))
    }
}

fn null(what: &str) -> Failure {
    Failure(SyStatus::NullPointer, format!("null pointer: {what}"))
}

/// Runs `f`, records any error and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SyStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SyStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside synchrony".into());
            SyStatus::Panic
        }
    }
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(SyStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sy_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated name of a status.
#[no_mangle]
pub extern "C" fn sy_status_name(status: SyStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SyStatus::Ok => c"ok",
        SyStatus::InvalidArgument => c"invalid-argument",
        SyStatus::InsufficientHistory => c"insufficient-history",
        SyStatus::InvalidState => c"invalid-state",
        SyStatus::Config => c"config",
        SyStatus::Io => c"io",
        SyStatus::Json => c"json",
        SyStatus::SessionExists => c"session-exists",
        SyStatus::NotFound => c"not-found",
        SyStatus::NullPointer => c"null-pointer",
        SyStatus::Utf8 => c"utf8",
        SyStatus::Panic => c"panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn sy_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the two-oscillator locking constants.
///
/// # Safety
/// `chi` and `nu` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_theorem_constants(chi: *mut f64, nu: *mut f64) -> SyStatus {
    guard(|| {
        let (c, n) = chi_nu();
        *out_arg(chi, "chi")? = c;
        *out_arg(nu, "nu")? = n;
        Ok(())
    })
}

/// Kuramoto order parameter of `n` phases.
///
/// # Safety
/// `phases` must point to `n` readable doubles and `r` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_order_parameter(phases: *const f64, n: usize, r: *mut f64) -> SyStatus {
    guard(|| {
        if phases.is_null() {
            return Err(null("phases"));
        }
        if n == 0 {
            return Err(Error::invalid("need at least one phase").into());
        }
        let th = std::slice::from_raw_parts(phases, n);
        *out_arg(r, "r")? = mean_phasor(th.iter().copied()).norm();
        Ok(())
    })
}

/// Time averages of one simulation. Undefined values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyRunSummary {
    pub r_net: f64,
    pub r_tot: f64,
    pub rho_net: f64,
    pub rho_tot: f64,
    pub mean_omega_a: f64,
}

/// Runs a simulation described by a JSON config and writes its CSV files
/// into `out_dir`. `base_dir` may be null; otherwise relative checkpoint
/// paths resolve against it.
///
/// # Safety
/// String arguments must be NUL-terminated; `summary` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn sy_simulate(
    config_json: *const c_char,
    base_dir: *const c_char,
    out_dir: *const c_char,
    summary: *mut SyRunSummary,
) -> SyStatus {
    guard(|| {
        let cfg: SimulateConfig = parse_json(str_arg(config_json, "config_json")?)?;
        let base = if base_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(base_dir, "base_dir")?))
        };
        let out = Path::new(str_arg(out_dir, "out_dir")?);
        let summary = out_arg(summary, "summary")?;
        let s = run_simulate(&cfg, base.as_deref(), out)?;
        *summary = SyRunSummary {
            r_net: s.r_net,
            r_tot: s.r_tot,
            rho_net: s.rho_net.unwrap_or(f64::NAN),
            rho_tot: s.rho_tot.unwrap_or(f64::NAN),
            mean_omega_a: s.mean_omega_a.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Streaming phase estimator for one position signal.
pub struct SyEstimator(OnlineEstimator);

/// Creates an estimator with default settings. `bootstrap_seconds` of input
/// are consumed before the first phase is produced.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_estimator_new(
    bootstrap_seconds: f64,
    out: *mut *mut SyEstimator,
) -> SyStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let est = OnlineEstimator::new(OnlineConfig {
            bootstrap: bootstrap_seconds,
            ..OnlineConfig::default()
        })?;
        *out = Box::into_raw(Box::new(SyEstimator(est)));
        Ok(())
    })
}

/// Feeds one sample taken `dt` seconds after the previous one. `*ready` is
/// 0 while bootstrapping, in which case `*theta` is left untouched.
///
/// # Safety
/// `h` must come from [`sy_estimator_new`]; `theta` and `ready` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_estimator_push(
    h: *mut SyEstimator,
    t: f64,
    position: f64,
    dt: f64,
    theta: *mut f64,
    ready: *mut i32,
) -> SyStatus {
    guard(|| {
        let est = out_arg(h, "estimator")?;
        let theta = out_arg(theta, "theta")?;
        let ready = out_arg(ready, "ready")?;
        match est.0.push(t, position, dt)? {
            Some(row) => {
                *theta = row.theta;
                *ready = 1;
            }
            None => *ready = 0,
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be null or come from [`sy_estimator_new`], and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sy_estimator_free(h: *mut SyEstimator) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Greedy trained avatar controller.
pub struct SyAgent(CognitiveArchitecture);

/// Loads a checkpoint. The frequency saturates on `[omega_min, omega_max]`
/// and starts at `omega0`.
///
/// # Safety
/// `checkpoint_path` must be NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_agent_load(
    checkpoint_path: *const c_char,
    omega_min: f64,
    omega_max: f64,
    omega0: f64,
    out: *mut *mut SyAgent,
) -> SyStatus {
    guard(|| {
        let path = Path::new(str_arg(checkpoint_path, "checkpoint_path")?);
        let out = out_arg(out, "out")?;
        let ck = load_checkpoint(path)?;
        let law = AvatarFrequencyLaw::new(omega_min, omega_max, Some(omega0))?;
        let ca = CognitiveArchitecture::new(ck.params, ck.hyper.input_map, law)?;
        *out = Box::into_raw(Box::new(SyAgent(ca)));
        Ok(())
    })
}

/// One decision from the observation (mean phase of the group relative to
/// the avatar, circular variance). Writes the chosen action index and the
/// new avatar frequency.
///
/// # Safety
/// `h` must come from [`sy_agent_load`]; `action` and `omega` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn sy_agent_step(
    h: *mut SyAgent,
    mean_relative_phase: f64,
    circular_variance: f64,
    action: *mut u32,
    omega: *mut f64,
) -> SyStatus {
    guard(|| {
        let agent = out_arg(h, "agent")?;
        let action = out_arg(action, "action")?;
        let omega = out_arg(omega, "omega")?;
        if !(mean_relative_phase.is_finite() && circular_variance.is_finite()) {
            return Err(Error::invalid("observation must be finite").into());
        }
        let ob = RlObservation {
            mean_relative_phase,
            circular_variance,
            omega_a: agent.0.law().omega,
        };
        let (idx, _) = agent.0.ca_decide(&ob);
        *action = idx as u32;
        *omega = agent.0.apply(idx);
        Ok(())
    })
}

/// # Safety
/// `h` must be null or come from [`sy_agent_load`], and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sy_agent_free(h: *mut SyAgent) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
