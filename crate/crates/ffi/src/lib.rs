//! C ABI over `dtn-lab`. Fields cross the boundary as opaque `DtnField`
//! handles; every call returns a `DtnStatus` and leaves a description of the
//! last failure in thread-local storage, readable with
//! `dtn_last_error_message`.
//!
//! Sample buffers are component-major: component c occupies
//! `samples[c * n .. (c + 1) * n]`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use dtn_lab::cli::{run_to_dir, validate_config};
use dtn_lab::spectral::{hilbert_transform, BoundaryField, BoundaryGrid};
use dtn_lab::{commutator, kernels, stokes, DtnError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtnStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid configuration, grid parameters or JSON.
    Config = 2,
    /// Component count, length or grid mismatch.
    Dimension = 3,
    /// Argument outside the operation's domain, singular evaluation or a
    /// vanishing denominator.
    Domain = 4,
    /// File system failure.
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Opaque periodic boundary field.
pub struct DtnField {
    inner: BoundaryField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("no interior nul"));
}

fn status_of(err: &DtnError) -> DtnStatus {
    match err {
        DtnError::Config(_) | DtnError::Parse(_) => DtnStatus::Config,
        DtnError::Dimension { .. } => DtnStatus::Dimension,
        DtnError::Io(_) => DtnStatus::Io,
        DtnError::Domain(_)
        | DtnError::Singular(_)
        | DtnError::UndefinedRatio(_)
        | DtnError::Unsupported(_)
        | DtnError::Dealiasing(_)
        | DtnError::SearchFailed(_) => DtnStatus::Domain,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (DtnStatus, String)>) -> DtnStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DtnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("panic: {msg}"));
            DtnStatus::Panic
        }
    }
}

fn lib<T>(r: dtn_lab::Result<T>) -> Result<T, (DtnStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (DtnStatus, String) {
    (DtnStatus::NullPointer, format!("{name} is null"))
}

unsafe fn field_ref<'a>(p: *const DtnField, name: &str) -> Result<&'a BoundaryField, (DtnStatus, String)> {
    p.as_ref().map(|f| &f.inner).ok_or_else(|| null(name))
}

unsafe fn emit(out: *mut *mut DtnField, field: BoundaryField) {
    *out = Box::into_raw(Box::new(DtnField { inner: field }));
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dtn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the most recent failure on this thread, or an empty
/// string. Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn dtn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a field with `components` components on n equispaced points of
/// [0, period) from `n * components` samples.
///
/// # Safety
/// `samples` must point to `n * components` readable doubles and `out` must
/// be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn dtn_field_new(
    n: usize,
    period: f64,
    components: usize,
    samples: *const f64,
    out: *mut *mut DtnField,
) -> DtnStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if components == 0 {
            return Err((DtnStatus::Dimension, "a field needs at least one component".into()));
        }
        let grid = lib(BoundaryGrid::new(n, period))?;
        let data = std::slice::from_raw_parts(samples, n * components);
        let comps = data.chunks(n).map(|c| c.to_vec()).collect();
        emit(out, lib(BoundaryField::new(grid, comps))?);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `field` must be null or a handle returned by this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn dtn_field_free(field: *mut DtnField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtn_field_len(field: *const DtnField) -> usize {
    field.as_ref().map_or(0, |f| f.inner.grid().n())
}

/// Number of components, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dtn_field_components(field: *const DtnField) -> usize {
    field.as_ref().map_or(0, |f| f.inner.n_components())
}

/// Copies the samples (component-major) into `out`, which holds `out_len`
/// doubles; `out_len` must equal len × components.
///
/// # Safety
/// `field` must be a live handle and `out` must point to `out_len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn dtn_field_read(field: *const DtnField, out: *mut f64, out_len: usize) -> DtnStatus {
    guard(|| {
        let f = field_ref(field, "field")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let need = f.grid().n() * f.n_components();
        if out_len != need {
            return Err((
                DtnStatus::Dimension,
                format!("buffer holds {out_len} values, field has {need}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (chunk, comp) in dst.chunks_mut(f.grid().n()).zip(f.components()) {
            chunk.copy_from_slice(comp);
        }
        Ok(())
    })
}

/// Λf for a two-component field.
///
/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dtn_apply_dtn(f: *const DtnField, out: *mut *mut DtnField) -> DtnStatus {
    guard(|| {
        let f = field_ref(f, "f")?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, lib(stokes::apply_dtn(f))?);
        Ok(())
    })
}

/// [Λ, η]f for a scalar η and a two-component f on the same grid.
///
/// # Safety
/// `eta` and `f` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dtn_commutator(eta: *const DtnField, f: *const DtnField, out: *mut *mut DtnField) -> DtnStatus {
    guard(|| {
        let (eta, f) = (field_ref(eta, "eta")?, field_ref(f, "f")?);
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, lib(commutator::commutator_apply(eta, f))?);
        Ok(())
    })
}

/// Hilbert transform of a scalar field.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dtn_hilbert(g: *const DtnField, out: *mut *mut DtnField) -> DtnStatus {
    guard(|| {
        let g = field_ref(g, "g")?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, lib(hilbert_transform(g))?);
        Ok(())
    })
}

/// The 2×2 DtN symbol at wavenumber κ as interleaved (re, im) pairs in
/// row-major order: out[0..8] = M₁₁, M₁₂, M₂₁, M₂₂.
///
/// # Safety
/// `out` must point to 8 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dtn_symbol(kappa: f64, out: *mut f64) -> DtnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !kappa.is_finite() {
            return Err((DtnStatus::Domain, format!("wavenumber must be finite (got {kappa})")));
        }
        let m = stokes::dtn_symbol(kappa);
        let dst = std::slice::from_raw_parts_mut(out, 8);
        for (i, z) in m.iter().flatten().enumerate() {
            dst[2 * i] = z.re;
            dst[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// ‖[Λ, η]f‖_p / (‖η‖_{C^{0,1}} ‖f‖_p) for 1 < p < ∞.
///
/// # Safety
/// `eta` and `f` must be live handles and `out` must point to a writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn dtn_commutator_ratio(
    eta: *const DtnField,
    f: *const DtnField,
    p: f64,
    out: *mut f64,
) -> DtnStatus {
    guard(|| {
        let (eta, f) = (field_ref(eta, "eta")?, field_ref(f, "f")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(commutator::commutator_ratio(eta, f, p))?;
        Ok(())
    })
}

/// Stokes fundamental solution in three dimensions at x ≠ 0: Γ written
/// row-major into gamma[0..9] and Π into pi[0..3].
///
/// # Safety
/// `x` must point to 3 readable doubles, `gamma` to 9 and `pi` to 3
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dtn_stokeslet(x: *const f64, gamma: *mut f64, pi: *mut f64) -> DtnStatus {
    guard(|| {
        if x.is_null() || gamma.is_null() || pi.is_null() {
            return Err(null("x, gamma or pi"));
        }
        let point = std::slice::from_raw_parts(x, 3);
        let (g, p) = lib(kernels::fundamental_solution(point))?;
        let gdst = std::slice::from_raw_parts_mut(gamma, 9);
        for (i, v) in g.iter().flatten().enumerate() {
            gdst[i] = *v;
        }
        std::slice::from_raw_parts_mut(pi, 3).copy_from_slice(&p);
        Ok(())
    })
}

/// Runs the experiment described by a JSON config document and writes its
/// outputs to `out_dir` (or the config's `out_dir` when null). `exit_code`
/// receives 0 if every check passed and 1 otherwise. Invalid configs return
/// `DTN_STATUS_CONFIG` with every violation in the error message.
///
/// # Safety
/// `config_json` must be a nul-terminated UTF-8 string, `out_dir` null or
/// nul-terminated, and `exit_code` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dtn_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    plots: c_int,
    exit_code: *mut c_int,
) -> DtnStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        if exit_code.is_null() {
            return Err(null("exit_code"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| (DtnStatus::Config, format!("config is not UTF-8: {e}")))?;
        let cfg = validate_config(text).map_err(|e| (DtnStatus::Config, e.to_string()))?;
        let dir = if out_dir.is_null() {
            cfg.out_dir.clone()
        } else {
            PathBuf::from(
                CStr::from_ptr(out_dir)
                    .to_str()
                    .map_err(|e| (DtnStatus::Config, format!("out_dir is not UTF-8: {e}")))?,
            )
        };
        let out = lib(run_to_dir(&cfg, &dir, plots != 0))?;
        *exit_code = out.report.exit_code();
        Ok(())
    })
}
