//! C ABI for moment-forge.
//!
//! Models and assembled systems are opaque handles created by `mf_*_new`
//! style functions and released with the matching `mf_*_free` (both accept
//! NULL). Every fallible call returns an [`MfStatus`]; on failure the message
//! is available from [`mf_last_error_message`] on the same thread. Matrices
//! are written row-major into caller-provided buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use moment_forge::analysis::{directional_matrix, hyperbolicity_scan, spectrum_with, Tolerances, Verdict};
use moment_forge::assembly::{assemble_system, preset, ModelSpec, MomentSystem};
use moment_forge::state::{gaussian_state, maxwellian_state, StateVector};
use moment_forge::Error;
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownModel = 3,
    InvalidState = 4,
    Singular = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Hyperbolicity verdict of a spectrum.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfVerdict {
    Hyperbolic = 0,
    NonReal = 1,
    Defective = 2,
}

/// A configured moment model.
pub struct MfModel {
    spec: ModelSpec,
}

/// A model assembled at one state.
pub struct MfSystem {
    system: MomentSystem,
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

fn status_of(e: &Error) -> MfStatus {
    match e {
        Error::UnknownModel { .. } => MfStatus::UnknownModel,
        Error::InvalidState(_) | Error::DimensionMismatch { .. } | Error::Json(_) => MfStatus::InvalidState,
        Error::Singular(_) => MfStatus::Singular,
        _ => MfStatus::InvalidArgument,
    }
}

fn fail(status: MfStatus, msg: impl Into<String>) -> MfStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting panics into `Internal` and recording error messages.
fn guard(f: impl FnOnce() -> Result<(), MfStatus>) -> MfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(MfStatus::Internal, "internal panic"),
    }
}

fn lib(e: Error) -> MfStatus {
    fail(status_of(&e), e.to_string())
}

fn write_status(out: *mut MfStatus, s: MfStatus) {
    if !out.is_null() {
        // SAFETY: caller passes either NULL or a valid pointer.
        unsafe { *out = s };
    }
}

unsafe fn model_ref<'a>(m: *const MfModel) -> Result<&'a MfModel, MfStatus> {
    m.as_ref().ok_or_else(|| fail(MfStatus::NullPointer, "model handle is NULL"))
}

unsafe fn system_ref<'a>(s: *const MfSystem) -> Result<&'a MfSystem, MfStatus> {
    s.as_ref().ok_or_else(|| fail(MfStatus::NullPointer, "system handle is NULL"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, MfStatus> {
    if p.is_null() {
        return Err(fail(MfStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64, len: usize) -> Result<(), MfStatus> {
    let n = m.nrows() * m.ncols();
    if out.is_null() {
        return Err(fail(MfStatus::NullPointer, "output buffer is NULL"));
    }
    if len < n {
        return Err(fail(MfStatus::BufferTooSmall, format!("buffer holds {len} values, {n} needed")));
    }
    let dst = std::slice::from_raw_parts_mut(out, n);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dst[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a preset model (e.g. "HME1D", "HR13") of order `order` in `dim`
/// dimensions. Returns NULL on failure with the reason in `*status`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `status` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mf_model_new(name: *const c_char, order: usize, dim: usize, status: *mut MfStatus) -> *mut MfModel {
    let mut out = ptr::null_mut();
    let s = guard(|| {
        let name = c_str(name, "model name")?;
        let spec = preset(name, order, dim).map_err(lib)?;
        out = Box::into_raw(Box::new(MfModel { spec }));
        Ok(())
    });
    write_status(status, s);
    out
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`mf_model_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mf_model_free(model: *mut MfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of model variables, 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_model_system_size(model: *const MfModel) -> usize {
    model.as_ref().map_or(0, |m| m.spec.system_size())
}

/// Spatial dimension, 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_model_dim(model: *const MfModel) -> usize {
    model.as_ref().map_or(0, |m| m.spec.dim)
}

fn assemble(spec: &ModelSpec, state: &StateVector) -> Result<*mut MfSystem, MfStatus> {
    let system = assemble_system(spec, state).map_err(lib)?;
    Ok(Box::into_raw(Box::new(MfSystem { system })))
}

/// Assembles the model at the Maxwellian (ρ, u, θ); `u` holds `dim` values.
/// Models with a tensor temperature use Θ = θI.
///
/// # Safety
/// `model` must be a live handle, `u` must point to `dim` doubles and
/// `status` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mf_model_assemble_maxwellian(
    model: *const MfModel,
    rho: f64,
    u: *const f64,
    theta: f64,
    status: *mut MfStatus,
) -> *mut MfSystem {
    let mut out = ptr::null_mut();
    let s = guard(|| {
        let m = model_ref(model)?;
        if u.is_null() {
            return Err(fail(MfStatus::NullPointer, "velocity is NULL"));
        }
        let d = m.spec.dim;
        let u = std::slice::from_raw_parts(u, d).to_vec();
        let state = if m.spec.uses_tensor_temperature() {
            gaussian_state(rho, u, DMatrix::identity(d, d) * theta, m.spec.order)
        } else {
            maxwellian_state(rho, u, theta, m.spec.order)
        }
        .map_err(lib)?;
        out = assemble(&m.spec, &state)?;
        Ok(())
    });
    write_status(status, s);
    out
}

/// Assembles the model at a state given as JSON
/// (`{"rho":..,"u":[..],"theta":..,"f":{"ordinal":value,..}}`).
///
/// # Safety
/// `model` must be a live handle, `json` a NUL-terminated string and
/// `status` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mf_model_assemble_json(
    model: *const MfModel,
    json: *const c_char,
    status: *mut MfStatus,
) -> *mut MfSystem {
    let mut out = ptr::null_mut();
    let s = guard(|| {
        let m = model_ref(model)?;
        let text = c_str(json, "state JSON")?;
        let state: StateVector = serde_json::from_str(text).map_err(|e| lib(e.into()))?;
        out = assemble(&m.spec, &state)?;
        Ok(())
    });
    write_status(status, s);
    out
}

/// Releases a system. NULL is ignored.
///
/// # Safety
/// `system` must come from an `mf_model_assemble_*` call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mf_system_free(system: *mut MfSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of variables n; matrices have n×n entries. 0 for NULL.
///
/// # Safety
/// `system` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_system_size(system: *const MfSystem) -> usize {
    system.as_ref().map_or(0, |s| s.system.size())
}

/// Copies the time-derivative matrix B (row-major) into `out[0..len]`.
///
/// # Safety
/// `system` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_system_matrix_b(system: *const MfSystem, out: *mut f64, len: usize) -> MfStatus {
    guard(|| write_matrix(&system_ref(system)?.system.b, out, len))
}

/// Copies the flux matrix of direction `d` (0-based): the coefficient of
/// ∂w/∂x_d in B ∂w/∂t + Σ_d F_d ∂w/∂x_d = source.
///
/// # Safety
/// `system` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_system_flux(system: *const MfSystem, d: usize, out: *mut f64, len: usize) -> MfStatus {
    guard(|| {
        let s = system_ref(system)?;
        if d >= s.system.dim() {
            return Err(fail(MfStatus::InvalidArgument, format!("direction {d} out of range")));
        }
        write_matrix(&s.system.flux(d), out, len)
    })
}

/// Copies the Jacobian B⁻¹F_d.
///
/// # Safety
/// `system` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_system_jacobian(system: *const MfSystem, d: usize, out: *mut f64, len: usize) -> MfStatus {
    guard(|| {
        let s = system_ref(system)?;
        if d >= s.system.dim() {
            return Err(fail(MfStatus::InvalidArgument, format!("direction {d} out of range")));
        }
        let j = s.system.jacobian(d).map_err(lib)?;
        write_matrix(&j, out, len)
    })
}

/// Eigenvalues of Σ n_d B⁻¹F_d for the unit direction `n` (`dim` values),
/// sorted by real part, written to `re[0..len]` and `im[0..len]`, plus the
/// hyperbolicity verdict under the default tolerances.
///
/// # Safety
/// `system` must be a live handle, `n` must point to `dim` doubles, `re`
/// and `im` must hold `len` doubles each and `verdict` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mf_system_eigenvalues(
    system: *const MfSystem,
    n: *const f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
    verdict: *mut MfVerdict,
) -> MfStatus {
    guard(|| {
        let s = system_ref(system)?;
        if n.is_null() || re.is_null() || im.is_null() {
            return Err(fail(MfStatus::NullPointer, "direction or output buffer is NULL"));
        }
        let size = s.system.size();
        if len < size {
            return Err(fail(MfStatus::BufferTooSmall, format!("buffers hold {len} values, {size} needed")));
        }
        let n = std::slice::from_raw_parts(n, s.system.dim());
        let m = directional_matrix(&s.system, n).map_err(lib)?;
        let report = spectrum_with(&m, Tolerances::default());
        if report.eigenvalues.len() != size {
            return Err(fail(MfStatus::Internal, report.failure.unwrap_or_else(|| "eigenvalue failure".into())));
        }
        let re = std::slice::from_raw_parts_mut(re, size);
        let im = std::slice::from_raw_parts_mut(im, size);
        for (k, e) in report.eigenvalues.iter().enumerate() {
            re[k] = e.re;
            im[k] = e.im;
        }
        if !verdict.is_null() {
            *verdict = match report.verdict {
                Verdict::Hyperbolic => MfVerdict::Hyperbolic,
                Verdict::NonReal => MfVerdict::NonReal,
                Verdict::Defective => MfVerdict::Defective,
            };
        }
        Ok(())
    })
}

/// Random-state hyperbolicity scan; writes the hyperbolic fraction and the
/// number of non-real trials.
///
/// # Safety
/// `model` must be a live handle; `fraction` and `non_real` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mf_scan(
    model: *const MfModel,
    trials: u64,
    amplitude: f64,
    seed: u64,
    fraction: *mut f64,
    non_real: *mut u64,
) -> MfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = hyperbolicity_scan(&m.spec, trials, amplitude, seed).map_err(lib)?;
        if !fraction.is_null() {
            *fraction = r.hyperbolic_fraction;
        }
        if !non_real.is_null() {
            *non_real = r.non_real;
        }
        Ok(())
    })
}
