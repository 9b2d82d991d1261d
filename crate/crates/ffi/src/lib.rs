//! C ABI over `dirac_lap`.
//!
//! Every entry point returns a [`DlapStatus`]. Results come back through out
//! pointers; objects live behind opaque handles that the caller releases
//! with the matching `*_free` function. When a call fails, a description is
//! kept per thread and can be read with [`dlap_last_error`].
//!
//! Panics never cross the boundary: they are caught and reported as
//! `DLAP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dirac_lap::cli::{self, RunConfig};
use dirac_lap::clifford::DiracMatrices;
use dirac_lap::fields::{sample_potential, Grid, PotentialSpec};
use dirac_lap::kernels::{schrodinger_kernel, Branch};
use dirac_lap::propagator::{discretize_hamiltonian, DiscreteHamiltonian};
use dirac_lap::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlapStatus {
    Ok = 0,
    /// An argument or configuration was rejected.
    Invalid = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// The numerics failed: no convergence, memory cap, singular system.
    Numerical = 3,
    /// An internal panic was caught.
    Panic = 4,
}

/// The Clifford family `alpha_1..alpha_n, beta`.
pub struct DlapMatrices(DiracMatrices);

/// A validated run configuration.
pub struct DlapConfig(RunConfig);

/// A diagonalized periodic Hamiltonian `D_m + V`.
pub struct DlapHamiltonian(DiscreteHamiltonian);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("interior NULs removed"));
}

fn fail(err: &Error) -> DlapStatus {
    set_error(err.to_string());
    if err.is_numerical() {
        DlapStatus::Numerical
    } else {
        DlapStatus::Invalid
    }
}

/// Run `body` with panics contained and the error slot cleared on success.
fn guard(body: impl FnOnce() -> DlapStatus) -> DlapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == DlapStatus::Ok {
                set_error("");
            }
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DlapStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("argument '", stringify!($p), "' is null"));
            return DlapStatus::NullPointer;
        })+
    };
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, DlapStatus> {
    // SAFETY: the caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        DlapStatus::Invalid
    })
}

/// Message describing the last failure on this thread; empty after a success.
///
/// The pointer stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dlap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dlap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build the Clifford family for dimension `n >= 2`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dlap_matrices_new(n: usize, out: *mut *mut DlapMatrices) -> DlapStatus {
    guard(|| {
        non_null!(out);
        match DiracMatrices::new(n) {
            Ok(m) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(DlapMatrices(m))) };
                DlapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Spinor dimension of the family, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or come from [`dlap_matrices_new`].
#[no_mangle]
pub unsafe extern "C" fn dlap_matrices_spinor_dim(handle: *const DlapMatrices) -> usize {
    // SAFETY: see the contract above.
    unsafe { handle.as_ref() }.map_or(0, |m| m.0.spinor_dim())
}

/// Copy one matrix as interleaved `(re, im)` pairs in row-major order.
///
/// `which` in `0..n` selects `alpha_{which+1}`, `which == n` selects `beta`.
/// `out` must hold `2 * s * s` doubles, `s` the spinor dimension.
///
/// # Safety
/// `handle` must come from [`dlap_matrices_new`]; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dlap_matrices_get(
    handle: *const DlapMatrices,
    which: usize,
    out: *mut f64,
    len: usize,
) -> DlapStatus {
    guard(|| {
        non_null!(handle, out);
        // SAFETY: checked non-null; the handle contract is on the caller.
        let mats = &unsafe { &*handle }.0;
        let n = mats.dimension();
        let m = match which {
            w if w < n => mats.alpha(w),
            w if w == n => mats.beta(),
            _ => {
                set_error(format!("matrix index {which} out of range 0..={n}"));
                return DlapStatus::Invalid;
            }
        };
        let s = mats.spinor_dim();
        if len < 2 * s * s {
            set_error(format!("output buffer holds {len} doubles, need {}", 2 * s * s));
            return DlapStatus::Invalid;
        }
        // SAFETY: `out` has at least `len >= 2 s^2` doubles.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, 2 * s * s) };
        for (k, z) in m.as_slice().iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        DlapStatus::Ok
    })
}

/// Release a handle from [`dlap_matrices_new`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or an unreleased handle from [`dlap_matrices_new`].
#[no_mangle]
pub unsafe extern "C" fn dlap_matrices_free(handle: *mut DlapMatrices) {
    if !handle.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Free Schrodinger resolvent kernel `g(r)` at `z > 0`; `branch` is `+1` or `-1`.
///
/// # Safety
/// `re` and `im` must be valid pointers to one double each.
#[no_mangle]
pub unsafe extern "C" fn dlap_schrodinger_kernel(
    n: usize,
    z: f64,
    r: f64,
    branch: i32,
    re: *mut f64,
    im: *mut f64,
) -> DlapStatus {
    guard(|| {
        non_null!(re, im);
        let branch = match branch {
            1 => Branch::Plus,
            -1 => Branch::Minus,
            other => {
                set_error(format!("branch must be +1 or -1, got {other}"));
                return DlapStatus::Invalid;
            }
        };
        match schrodinger_kernel(n, z, r, branch) {
            Ok(g) => {
                // SAFETY: both checked non-null.
                unsafe {
                    *re = g.re;
                    *im = g.im;
                }
                DlapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Parse and validate a JSON run configuration.
///
/// On `DLAP_STATUS_INVALID` the error message lists every violation, one per line.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer for one handle.
#[no_mangle]
pub unsafe extern "C" fn dlap_config_parse(json: *const c_char, out: *mut *mut DlapConfig) -> DlapStatus {
    guard(|| {
        non_null!(json, out);
        // SAFETY: non-null and NUL-terminated per the contract.
        let json = match unsafe { text(json, "config") } {
            Ok(t) => t,
            Err(s) => return s,
        };
        match cli::parse_config_str(json) {
            Ok(c) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(DlapConfig(c))) };
                DlapStatus::Ok
            }
            Err(errs) => {
                set_error(errs.0.join("\n"));
                DlapStatus::Invalid
            }
        }
    })
}

/// Run a configuration, writing its tables and `summary.json` into `out_dir`.
///
/// # Safety
/// `config` must come from [`dlap_config_parse`]; `out_dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dlap_run(config: *const DlapConfig, out_dir: *const c_char) -> DlapStatus {
    guard(|| {
        non_null!(config, out_dir);
        // SAFETY: non-null and NUL-terminated per the contract.
        let dir = match unsafe { text(out_dir, "output directory") } {
            Ok(t) => t,
            Err(s) => return s,
        };
        // SAFETY: handle contract is on the caller.
        let config = &unsafe { &*config }.0;
        match cli::run(config, Path::new(dir)) {
            Ok(_) => DlapStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Release a handle from [`dlap_config_parse`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or an unreleased handle from [`dlap_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn dlap_config_free(handle: *mut DlapConfig) {
    if !handle.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Assemble and diagonalize `D_m + V` on a periodic grid `[-L, L)^n`.
///
/// `potential_json` describes `V` in the configuration format (e.g.
/// `{"kind":"gaussian_bump","coupling":-2,"width":1}`); null means `V = 0`.
///
/// # Safety
/// `potential_json` must be null or NUL-terminated; `out` a valid pointer for one handle.
#[no_mangle]
pub unsafe extern "C" fn dlap_hamiltonian_new(
    n: usize,
    m: f64,
    half_width: f64,
    points_per_axis: usize,
    potential_json: *const c_char,
    out: *mut *mut DlapHamiltonian,
) -> DlapStatus {
    guard(|| {
        non_null!(out);
        let spec = if potential_json.is_null() {
            PotentialSpec::zero()
        } else {
            // SAFETY: non-null and NUL-terminated per the contract.
            let raw = match unsafe { text(potential_json, "potential") } {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<PotentialSpec>(raw) {
                Ok(p) => p,
                Err(e) => {
                    set_error(format!("potential: {e}"));
                    return DlapStatus::Invalid;
                }
            }
        };
        let built = (|| {
            let grid = Grid::new(n, half_width, points_per_axis, true)?;
            let mats = DiracMatrices::new(n)?;
            let v = sample_potential(&spec, &grid, &mats)?;
            discretize_hamiltonian(&mats, m, &v, &grid)
        })();
        match built {
            Ok(h) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(DlapHamiltonian(h))) };
                DlapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Matrix dimension of the Hamiltonian, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or come from [`dlap_hamiltonian_new`].
#[no_mangle]
pub unsafe extern "C" fn dlap_hamiltonian_dim(handle: *const DlapHamiltonian) -> usize {
    // SAFETY: see the contract above.
    unsafe { handle.as_ref() }.map_or(0, |h| h.0.dim())
}

/// Copy the ascending eigenvalues into `out`, which must hold `dim` doubles.
///
/// # Safety
/// `handle` must come from [`dlap_hamiltonian_new`]; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dlap_hamiltonian_eigenvalues(
    handle: *const DlapHamiltonian,
    out: *mut f64,
    len: usize,
) -> DlapStatus {
    guard(|| {
        non_null!(handle, out);
        // SAFETY: checked non-null; handle contract on the caller.
        let h = &unsafe { &*handle }.0;
        if len < h.dim() {
            set_error(format!("output buffer holds {len} doubles, need {}", h.dim()));
            return DlapStatus::Invalid;
        }
        // SAFETY: `out` has at least `dim` doubles.
        unsafe { std::slice::from_raw_parts_mut(out, h.dim()) }.copy_from_slice(&h.eigenvalues);
        DlapStatus::Ok
    })
}

/// Number of eigenpairs classified as bound states.
///
/// # Safety
/// `handle` must be null or come from [`dlap_hamiltonian_new`].
#[no_mangle]
pub unsafe extern "C" fn dlap_hamiltonian_bound_states(handle: *const DlapHamiltonian) -> usize {
    // SAFETY: see the contract above.
    unsafe { handle.as_ref() }.map_or(0, |h| h.0.point_spectrum_flags.iter().filter(|f| **f).count())
}

/// Release a handle from [`dlap_hamiltonian_new`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or an unreleased handle from [`dlap_hamiltonian_new`].
#[no_mangle]
pub unsafe extern "C" fn dlap_hamiltonian_free(handle: *mut DlapHamiltonian) {
    if !handle.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(handle) });
    }
}
