//! C ABI over `orbitkit`.
//!
//! Bundles are opaque handles created by the `orbitkit_*_new` functions and
//! released with [`orbitkit_bundle_free`]. Results that carry structure are
//! returned as JSON strings owned by the library; release them with
//! [`orbitkit_string_free`]. Every fallible call returns an
//! [`OrbitkitStatus`]; on failure [`orbitkit_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use orbitkit::config::RunConfig;
use orbitkit::hypothesis::{check_theorem, CheckTolerances};
use orbitkit::orbits::{solve_orbit, OrbitProblem, SolverSettings};
use orbitkit::system::{build_clebsch, build_rigid_body, ClebschParams, RigidBodyParams, SystemBundle};
use orbitkit::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitkitStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, wrong buffer length.
    InvalidArgument = 1,
    /// Invalid parameters, configuration or equilibrium.
    InvalidInput = 2,
    /// The hypotheses fail or the solver did not converge.
    Negative = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Opaque system bundle.
pub struct OrbitkitBundle {
    inner: SystemBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OrbitkitStatus {
    match orbitkit::cli::exit_code(e) {
        orbitkit::cli::EXIT_USAGE => OrbitkitStatus::InvalidInput,
        _ => OrbitkitStatus::Negative,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> OrbitkitStatus
where
    F: FnOnce() -> Result<(), (OrbitkitStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OrbitkitStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OrbitkitStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (OrbitkitStatus, String) {
    (status_of(&e), e.to_string())
}

fn arg_err(msg: &str) -> (OrbitkitStatus, String) {
    (OrbitkitStatus::InvalidArgument, msg.to_string())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (OrbitkitStatus, String)> {
    if p.is_null() {
        return Err(arg_err(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| arg_err(&format!("{what} is not UTF-8")))
}

unsafe fn bundle_ref<'a>(b: *const OrbitkitBundle) -> Result<&'a SystemBundle, (OrbitkitStatus, String)> {
    b.as_ref().map(|b| &b.inner).ok_or_else(|| arg_err("bundle is null"))
}

fn store_handle(out: *mut *mut OrbitkitBundle, bundle: SystemBundle) -> Result<(), (OrbitkitStatus, String)> {
    if out.is_null() {
        return Err(arg_err("output pointer is null"));
    }
    let raw = Box::into_raw(Box::new(OrbitkitBundle { inner: bundle }));
    unsafe { *out = raw };
    Ok(())
}

fn store_json(out: *mut *mut c_char, text: String) -> Result<(), (OrbitkitStatus, String)> {
    if out.is_null() {
        return Err(arg_err("output pointer is null"));
    }
    let c = CString::new(text).expect("JSON has no interior nul");
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Builds the controlled rigid body bundle.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_rigid_body_new(
    a1: f64,
    a2: f64,
    a3: f64,
    l: f64,
    out: *mut *mut OrbitkitBundle,
) -> OrbitkitStatus {
    guard(|| {
        let p = RigidBodyParams::new(a1, a2, a3, l).map_err(lib_err)?;
        store_handle(out, build_rigid_body(p).map_err(lib_err)?)
    })
}

/// Builds the Clebsch bundle; parameters must be positive and distinct.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_clebsch_new(a1: f64, a2: f64, a3: f64, out: *mut *mut OrbitkitBundle) -> OrbitkitStatus {
    guard(|| {
        let p = ClebschParams::new(a1, a2, a3).map_err(lib_err)?;
        store_handle(out, build_clebsch(p).map_err(lib_err)?)
    })
}

/// Builds a bundle from a configuration document (built-in or inline).
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_bundle_from_json(json: *const c_char, out: *mut *mut OrbitkitBundle) -> OrbitkitStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let cfg = RunConfig::from_json(text).map_err(lib_err)?;
        store_handle(out, cfg.bundle)
    })
}

/// Releases a bundle. Null is ignored.
///
/// # Safety
/// `bundle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_bundle_free(bundle: *mut OrbitkitBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Phase-space dimension, or 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_bundle_dimension(bundle: *const OrbitkitBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.dim())
}

/// Writes the point of family `family` at amplitude `m` into `coords`.
///
/// # Safety
/// `family` must be a nul-terminated string and `coords` must hold `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_equilibrium(
    bundle: *const OrbitkitBundle,
    family: *const c_char,
    m: f64,
    coords: *mut f64,
    len: usize,
) -> OrbitkitStatus {
    guard(|| {
        let b = bundle_ref(bundle)?;
        let label = read_str(family, "family")?;
        if coords.is_null() || len != b.dim() {
            return Err(arg_err("coords must hold exactly dimension values"));
        }
        let e = b.equilibrium(label, m).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(coords, len).copy_from_slice(e.as_slice());
        Ok(())
    })
}

fn focused(b: &SystemBundle, label: &str, m: f64) -> Result<(SystemBundle, orbitkit::StateVector), (OrbitkitStatus, String)> {
    let e = b.equilibrium(label, m).map_err(lib_err)?;
    Ok((b.focused_on(label).map_err(lib_err)?, e))
}

/// Checks the existence hypotheses at family `family`, amplitude `m`, with
/// default tolerances. The JSON report is written to `report_json` whether
/// or not the verdict holds.
///
/// # Safety
/// `family` must be a nul-terminated string; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_check(
    bundle: *const OrbitkitBundle,
    family: *const c_char,
    m: f64,
    report_json: *mut *mut c_char,
) -> OrbitkitStatus {
    guard(|| {
        let b = bundle_ref(bundle)?;
        let (b, e) = focused(b, read_str(family, "family")?, m)?;
        let report = check_theorem(&b, e.as_slice(), &CheckTolerances::default()).map_err(lib_err)?;
        store_json(report_json, serde_json::to_string(&report).expect("reports serialize"))
    })
}

/// Solves for the periodic orbit of frequency `omega_index` (in the order of
/// the check report) at level offset `epsilon`, with default settings.
///
/// # Safety
/// `family` must be a nul-terminated string; `orbit_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_find_orbit(
    bundle: *const OrbitkitBundle,
    family: *const c_char,
    m: f64,
    omega_index: usize,
    epsilon: f64,
    orbit_json: *mut *mut c_char,
) -> OrbitkitStatus {
    guard(|| {
        let b = bundle_ref(bundle)?;
        let (b, e) = focused(b, read_str(family, "family")?, m)?;
        let report = check_theorem(&b, e.as_slice(), &CheckTolerances::default()).map_err(lib_err)?;
        let omega = *report.omegas.get(omega_index).ok_or_else(|| {
            (OrbitkitStatus::InvalidInput, format!("omega_index {omega_index} out of range ({} frequencies)", report.omegas.len()))
        })?;
        let problem = OrbitProblem::new(b, e, omega, epsilon, SolverSettings::default()).map_err(lib_err)?;
        let orbit = solve_orbit(&problem).map_err(lib_err)?;
        store_json(orbit_json, serde_json::to_string(&orbit).expect("orbits serialize"))
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn orbitkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn orbitkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn orbitkit_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
