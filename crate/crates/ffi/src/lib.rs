//! C ABI over `reclab`.
//!
//! Every fallible call returns a [`ReclabStatus`]; on failure the message is
//! available from [`reclab_last_error_message`] on the same thread until the
//! next failing call. Handles are opaque and must be released with their
//! `_free` function. Strings returned by the library are released with
//! [`reclab_string_free`]. No call panics across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reclab::harness::{self, ExperimentConfig};
use reclab::measure::mu_rect;
use reclab::recurrence::scale_to_measure;
use reclab::{Error, Hyperrectangle, Orbit, OrbitMode, Point, Seed, SystemDescriptor, SystemKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReclabStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidMode = 2,
    OutOfRange = 3,
    UnreachableTarget = 4,
    PrecisionBudget = 5,
    InsufficientSignal = 6,
    Config = 7,
    Io = 8,
    Internal = 9,
    NullPointer = 10,
    Panic = 11,
}

/// A dynamical system.
pub struct ReclabSystem {
    inner: SystemDescriptor,
}

/// A streaming orbit.
pub struct ReclabOrbit {
    inner: Orbit,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ReclabStatus {
    match e {
        Error::InvalidArgument(_) => ReclabStatus::InvalidArgument,
        Error::InvalidMode(_) => ReclabStatus::InvalidMode,
        Error::OutOfRange { .. } => ReclabStatus::OutOfRange,
        Error::UnreachableTarget(_) => ReclabStatus::UnreachableTarget,
        Error::PrecisionBudget(_) => ReclabStatus::PrecisionBudget,
        Error::InsufficientSignal(_) => ReclabStatus::InsufficientSignal,
        Error::Config(_) => ReclabStatus::Config,
        Error::Io { .. } => ReclabStatus::Io,
        _ => ReclabStatus::Internal,
    }
}

struct Fail(ReclabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ReclabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ReclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ReclabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            ReclabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ReclabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn system_arg<'a>(p: *const ReclabSystem) -> Result<&'a SystemDescriptor, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

fn check_dim(sys: &SystemDescriptor, dim: usize) -> Result<(), Fail> {
    if dim != sys.dim() {
        return Err(Fail(
            ReclabStatus::InvalidArgument,
            format!("{} has dimension {}, got {dim}", sys.name(), sys.dim()),
        ));
    }
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(ReclabStatus::Internal, "string contains a nul byte".into()))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// owned by the library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn reclab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn reclab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn reclab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a system by name: `gauss`, `beta_golden`, `doubling`, `toral_diag23`.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_system_new(name: *const c_char, out: *mut *mut ReclabSystem) -> ReclabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: SystemKind = str_arg(name, "name")?.parse()?;
        *out = Box::into_raw(Box::new(ReclabSystem {
            inner: SystemDescriptor::new(kind),
        }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`reclab_system_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn reclab_system_free(sys: *mut ReclabSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Dimension of the phase space, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn reclab_system_dim(sys: *const ReclabSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.dim())
}

/// Invariant density `h(x)`.
///
/// # Safety
/// `x` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_density(
    sys: *const ReclabSystem,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> ReclabStatus {
    guard(|| {
        let sys = system_arg(sys)?;
        check_dim(sys, dim)?;
        let p = Point::new(slice_arg(x, dim, "x")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = sys.density(&p);
        Ok(())
    })
}

/// One float64 step `T x`; the branch digit goes to `digit` when non-null.
///
/// # Safety
/// `x` and `out` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn reclab_step(
    sys: *const ReclabSystem,
    x: *const f64,
    dim: usize,
    out: *mut f64,
    digit: *mut u64,
) -> ReclabStatus {
    guard(|| {
        let sys = system_arg(sys)?;
        check_dim(sys, dim)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (y, d) = sys.step(&Point::new(slice_arg(x, dim, "x")?)?)?;
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(y.coords());
        if let Some(dp) = digit.as_mut() {
            *dp = d;
        }
        Ok(())
    })
}

/// `mu(R ∩ [0,1]^d)` for the box with corners `lo`, `hi`.
///
/// # Safety
/// `lo` and `hi` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_mu_rect(
    sys: *const ReclabSystem,
    lo: *const f64,
    hi: *const f64,
    dim: usize,
    out: *mut f64,
) -> ReclabStatus {
    guard(|| {
        let sys = system_arg(sys)?;
        check_dim(sys, dim)?;
        let r = Hyperrectangle::from_bounds(slice_arg(lo, dim, "lo")?, slice_arg(hi, dim, "hi")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = mu_rect(sys, &r)?.value;
        Ok(())
    })
}

/// Solves `mu(R(x, l r)) = gamma`; writes `l` to `out_scale`.
///
/// # Safety
/// `x` and `r` must point to `dim` doubles; `out_scale` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_scale_to_measure(
    sys: *const ReclabSystem,
    x: *const f64,
    r: *const f64,
    dim: usize,
    gamma: f64,
    out_scale: *mut f64,
) -> ReclabStatus {
    guard(|| {
        let sys = system_arg(sys)?;
        check_dim(sys, dim)?;
        let p = Point::new(slice_arg(x, dim, "x")?)?;
        let t = scale_to_measure(sys, &p, slice_arg(r, dim, "r")?, gamma)?;
        *out_scale.as_mut().ok_or_else(|| null("out_scale"))? = t.scale;
        Ok(())
    })
}

/// Starts an orbit of `n` steps from `seed` (`"0.3"`, `"1/3"`, `"1/7,2/13"`).
/// `mode` is `float64`, `exact_modular`, `high_precision` or null for the
/// system default; `bits` is the high-precision budget.
///
/// # Safety
/// Strings must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_orbit_new(
    sys: *const ReclabSystem,
    seed: *const c_char,
    mode: *const c_char,
    bits: u32,
    n: u64,
    out: *mut *mut ReclabOrbit,
) -> ReclabStatus {
    guard(|| {
        let sys = *system_arg(sys)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let seed: Seed = str_arg(seed, "seed")?.parse()?;
        let mode = if mode.is_null() {
            sys.default_mode()
        } else {
            OrbitMode::parse(str_arg(mode, "mode")?, bits)?
        };
        let inner = Orbit::new(sys, &seed, mode, n)?;
        *out = Box::into_raw(Box::new(ReclabOrbit { inner, dim: sys.dim() }));
        Ok(())
    })
}

/// Writes the next point to `out` and sets `*done` to 0, or sets `*done`
/// to 1 once all `n` points have been produced.
///
/// # Safety
/// `out` must point to `dim` doubles; `done` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_orbit_next(
    orbit: *mut ReclabOrbit,
    out: *mut f64,
    dim: usize,
    done: *mut i32,
) -> ReclabStatus {
    guard(|| {
        let o = orbit.as_mut().ok_or_else(|| null("orbit"))?;
        if dim != o.dim {
            return Err(Fail(
                ReclabStatus::InvalidArgument,
                format!("orbit has dimension {}, got {dim}", o.dim),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let done = done.as_mut().ok_or_else(|| null("done"))?;
        let buf = std::slice::from_raw_parts_mut(out, dim);
        *done = i32::from(!o.inner.advance_into(buf));
        Ok(())
    })
}

/// # Safety
/// `orbit` must come from [`reclab_orbit_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn reclab_orbit_free(orbit: *mut ReclabOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// Runs an experiment manifest (JSON) and returns the report as JSON in
/// `*report_json`, to be released with [`reclab_string_free`]. Sets
/// `*passed` to 1 when every verdict passes.
///
/// # Safety
/// `config_json` must be nul-terminated; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn reclab_run_experiment(
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    passed: *mut i32,
) -> ReclabStatus {
    guard(|| {
        if report_json.is_null() {
            return Err(null("report_json"));
        }
        let cfg = ExperimentConfig::from_json_str(str_arg(config_json, "config_json")?)?;
        let report = harness::run_experiment(&cfg)?;
        if let Some(p) = passed.as_mut() {
            *p = i32::from(report.passed());
        }
        *report_json = into_c_string(harness::report_to_json(&report)?)?;
        Ok(())
    })
}
