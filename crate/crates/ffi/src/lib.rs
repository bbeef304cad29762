//! C interface to cyclekit.
//!
//! Every function returns a [`CkStatus`]; on failure a message is available
//! from [`ck_last_error`] on the same thread. Objects are opaque handles
//! released with their `_free` function. Strings returned by the library
//! must be released with [`ck_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cyclekit::coeffgen::{MixingCoefficients, MixingParams};
use cyclekit::control::{detect_over_gammas, Tolerances};
use cyclekit::maps::MapSpec;
use cyclekit::stability::{multiplier_admissible, schur_stable, PhiFunction};
use cyclekit::Error;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    UnknownMap = 4,
    Internal = 5,
}

/// Mixing coefficients a_1..a_N, b_1..b_N.
pub struct CkCoefficients {
    inner: MixingCoefficients,
}

/// The auxiliary function of a closed loop.
pub struct CkPhi {
    inner: PhiFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CkStatus {
    match e {
        Error::UnknownMap(_) | Error::UnknownMapParam { .. } => CkStatus::UnknownMap,
        Error::ParameterRange(_) | Error::DimensionMismatch { .. } | Error::InvalidAngle(_) | Error::Json(_) => {
            CkStatus::InvalidArgument
        }
        _ => CkStatus::NumericFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), (CkStatus, String)>>(f: F) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CkStatus::Internal
        }
    }
}

fn lib<T>(r: cyclekit::Result<T>) -> Result<T, (CkStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), (CkStatus, String)> {
    if p.is_null() {
        Err((CkStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Generates mixing coefficients for depth `n`, cycle length `t`, shape
/// parameters `sigma`, `tau` and gain `gamma`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ck_coeffs_new(
    n: usize,
    t: usize,
    sigma: f64,
    tau: f64,
    gamma: f64,
    out: *mut *mut CkCoefficients,
) -> CkStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = lib(MixingParams::new(n, t, sigma, tau, gamma))?;
        let inner = lib(MixingCoefficients::generate(params))?;
        *out = Box::into_raw(Box::new(CkCoefficients { inner }));
        Ok(())
    })
}

/// Number of coefficients N in each of a and b; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a handle from [`ck_coeffs_new`].
#[no_mangle]
pub unsafe extern "C" fn ck_coeffs_len(h: *const CkCoefficients) -> usize {
    h.as_ref().map_or(0, |c| c.inner.a.len())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (CkStatus, String)> {
    non_null(buf, "buf")?;
    if len < src.len() {
        return Err((
            CkStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies a_1..a_N into `buf` (capacity `len`).
///
/// # Safety
/// `h` must be a valid handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ck_coeffs_a(h: *const CkCoefficients, buf: *mut f64, len: usize) -> CkStatus {
    guard(|| {
        non_null(h, "handle")?;
        copy_out(&(*h).inner.a, buf, len)
    })
}

/// Copies b_1..b_N into `buf` (capacity `len`).
///
/// # Safety
/// `h` must be a valid handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ck_coeffs_b(h: *const CkCoefficients, buf: *mut f64, len: usize) -> CkStatus {
    guard(|| {
        non_null(h, "handle")?;
        copy_out(&(*h).inner.b, buf, len)
    })
}

/// # Safety
/// `h` must be null or a handle from [`ck_coeffs_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ck_coeffs_free(h: *mut CkCoefficients) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Builds the auxiliary function of the loop defined by `coeffs`.
///
/// # Safety
/// `coeffs` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_phi_new(coeffs: *const CkCoefficients, out: *mut *mut CkPhi) -> CkStatus {
    guard(|| {
        non_null(coeffs, "coeffs")?;
        non_null(out, "out")?;
        let inner = lib(PhiFunction::from_coefficients(&(*coeffs).inner))?;
        *out = Box::into_raw(Box::new(CkPhi { inner }));
        Ok(())
    })
}

/// Evaluates the auxiliary function at z = re + i im.
///
/// # Safety
/// `phi` must be a valid handle; `out_re` and `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_phi_eval(
    phi: *const CkPhi,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CkStatus {
    guard(|| {
        non_null(phi, "phi")?;
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let w = (*phi).inner.eval(Complex64::new(re, im));
        *out_re = w.re;
        *out_im = w.im;
        Ok(())
    })
}

/// Whether the multiplier re + i im lies in the admissible region. A
/// multiplier on the region boundary is reported as a numeric failure.
///
/// # Safety
/// `phi` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_multiplier_admissible(phi: *const CkPhi, re: f64, im: f64, out: *mut bool) -> CkStatus {
    guard(|| {
        non_null(phi, "phi")?;
        non_null(out, "out")?;
        *out = lib(multiplier_admissible(&(*phi).inner, Complex64::new(re, im)))?;
        Ok(())
    })
}

/// Root test of the closed loop for `len` multipliers given as separate
/// real and imaginary arrays. Writes the verdict and the margin
/// 1 - max|lambda|.
///
/// # Safety
/// `phi` must be a valid handle, `mu_re` and `mu_im` must point to `len`
/// doubles, and the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_schur_stable(
    phi: *const CkPhi,
    mu_re: *const f64,
    mu_im: *const f64,
    len: usize,
    out_stable: *mut bool,
    out_margin: *mut f64,
) -> CkStatus {
    guard(|| {
        non_null(phi, "phi")?;
        non_null(out_stable, "out_stable")?;
        non_null(out_margin, "out_margin")?;
        if len > 0 {
            non_null(mu_re, "mu_re")?;
            non_null(mu_im, "mu_im")?;
        }
        let mus: Vec<Complex64> = (0..len).map(|k| Complex64::new(*mu_re.add(k), *mu_im.add(k))).collect();
        let (stable, margin) = lib(schur_stable(&(*phi).inner, &mus))?;
        *out_stable = stable;
        *out_margin = margin;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`ck_phi_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ck_phi_free(h: *mut CkPhi) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs cycle detection on a built-in map and returns the report as a JSON
/// string (release with [`ck_string_free`]).
///
/// `params_json` is null or a JSON object of map parameter overrides, e.g.
/// `{"mu": 3.2}`. `gammas` holds `n_gammas` gains tried in order; with
/// `stop_on_success` the sweep ends at the first gain that finds a cycle.
///
/// # Safety
/// String arguments must be null-terminated; `gammas` must point to
/// `n_gammas` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_detect_json(
    map_name: *const c_char,
    params_json: *const c_char,
    n: usize,
    t: usize,
    sigma: f64,
    tau: f64,
    gammas: *const f64,
    n_gammas: usize,
    stop_on_success: bool,
    restarts: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> CkStatus {
    guard(|| {
        non_null(map_name, "map_name")?;
        non_null(out, "out")?;
        non_null(gammas, "gammas")?;
        if n_gammas == 0 {
            return Err((CkStatus::InvalidArgument, "no gains given".into()));
        }
        let utf8 = |p: *const c_char| {
            CStr::from_ptr(p)
                .to_str()
                .map_err(|_| (CkStatus::InvalidArgument, "string is not UTF-8".to_string()))
        };
        let mut spec = MapSpec {
            name: utf8(map_name)?.to_string(),
            ..Default::default()
        };
        if !params_json.is_null() {
            spec.params = lib(serde_json::from_str(utf8(params_json)?).map_err(Error::from))?;
        }
        let map = lib(spec.build())?;
        let gs = std::slice::from_raw_parts(gammas, n_gammas);
        let base = lib(MixingParams::new(n, t, sigma, tau, gs[0]))?;
        let (report, _) = lib(detect_over_gammas(
            &map,
            base,
            gs,
            restarts,
            seed,
            &Tolerances::default(),
            stop_on_success,
        ))?;
        let text = lib(serde_json::to_string(&report).map_err(Error::from))?;
        *out = CString::new(text)
            .map_err(|_| (CkStatus::Internal, "interior NUL in JSON".to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
