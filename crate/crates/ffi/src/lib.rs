//! C ABI over `charp_qkz`.
//!
//! Every fallible call returns a [`CqStatus`]; on failure a message is
//! available from [`cq_last_error`] until the next call on the same thread.
//! Objects are opaque handles released with their `_free` function. Strings
//! returned through `char **` are owned by the caller and released with
//! [`cq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use charp_qkz::ffield::FieldElement;
use charp_qkz::hypergeo::{extract_solutions, SolutionSet};
use charp_qkz::qkz::QkzParams;
use charp_qkz::suites::{self, KappaFilter, RunConfig, Suite};
use charp_qkz::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotPrime = 3,
    OutOfRange = 4,
    /// A mathematical precondition failed, e.g. `κ` outside `F_p` where a
    /// prime-field step is needed.
    Domain = 5,
    Internal = 6,
}

/// Parameters `(p, n, κ)`.
pub struct CqParams {
    inner: QkzParams,
}

/// The p-hypergeometric solutions for one parameter triple.
pub struct CqSolutions {
    inner: SolutionSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CqStatus {
    match e {
        Error::NotPrime(_) | Error::UnsupportedModulus(_) => CqStatus::NotPrime,
        Error::Parse(_) | Error::InvalidParams(_) => CqStatus::InvalidArgument,
        Error::Domain(_) | Error::DivisionByZero | Error::Singular { .. } => CqStatus::Domain,
        _ => CqStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into a status and the last error.
fn guard(f: impl FnOnce() -> Result<(), (CqStatus, String)>) -> CqStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CqStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (CqStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CqStatus, String) {
    (CqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (CqStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CqStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates parameters. `kappa` is `"c"` or `"a+b*g"` with `g` the generator
/// of `F_{p^2}` over `F_p`.
///
/// # Safety
/// `kappa` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_params_new(p: u64, n: usize, kappa: *const c_char, out: *mut *mut CqParams) -> CqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kappa = read_str(kappa, "kappa")?;
        let inner = suites::params_from(p, n, kappa).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CqParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`cq_params_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cq_params_free(params: *mut CqParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `k` with `κk ≡ -1 (mod p)`; [`CqStatus::Domain`] when `κ ∉ F_p`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_params_k(params: *const CqParams, out: *mut u64) -> CqStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = params
            .inner
            .k()
            .ok_or((CqStatus::Domain, "kappa is outside the prime field".to_string()))?;
        Ok(())
    })
}

/// Number of p-hypergeometric solutions `d(κ)`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_params_d(params: *const CqParams, out: *mut usize) -> CqStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = params
            .inner
            .d()
            .ok_or((CqStatus::Domain, "kappa is outside the prime field".to_string()))?;
        Ok(())
    })
}

/// Extracts the solutions `Q^{ℓp-1}`, `ℓ = 1..d(κ)`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_solve(params: *const CqParams, out: *mut *mut CqSolutions) -> CqStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = extract_solutions(&params.inner).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CqSolutions { inner }));
        Ok(())
    })
}

/// # Safety
/// `sols` must be null or a handle from [`cq_solve`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cq_solutions_free(sols: *mut CqSolutions) {
    if !sols.is_null() {
        drop(Box::from_raw(sols));
    }
}

/// # Safety
/// `sols` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_solutions_len(sols: *const CqSolutions, out: *mut usize) -> CqStatus {
    guard(|| {
        let sols = sols.as_ref().ok_or_else(|| null("solutions"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sols.inner.len();
        Ok(())
    })
}

/// Canonical text of coordinate `coord` (0-based) of solution `index`
/// (0-based, i.e. `ℓ - 1`).
///
/// # Safety
/// `sols` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_solution_coordinate(
    sols: *const CqSolutions,
    index: usize,
    coord: usize,
    out: *mut *mut c_char,
) -> CqStatus {
    guard(|| {
        let sols = sols.as_ref().ok_or_else(|| null("solutions"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let poly = sols
            .inner
            .solutions
            .get(index)
            .and_then(|v| v.coords.get(coord))
            .ok_or((CqStatus::OutOfRange, format!("no coordinate ({index}, {coord})")))?;
        *out = to_c_string(poly.to_string());
        Ok(())
    })
}

/// Evaluates solution `index` at a point of `F_{p^2}^n`. Elements are
/// passed as pairs `(a0, a1)` meaning `a0 + a1 g`, so `z` and `out` hold
/// `2n` integers each.
///
/// # Safety
/// `z` must point to `z_len` readable integers and `out` to `out_len`
/// writable ones.
#[no_mangle]
pub unsafe extern "C" fn cq_solution_eval(
    sols: *const CqSolutions,
    index: usize,
    z: *const u64,
    z_len: usize,
    out: *mut u64,
    out_len: usize,
) -> CqStatus {
    guard(|| {
        let sols = sols.as_ref().ok_or_else(|| null("solutions"))?;
        if z.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        let n = sols.inner.params.n();
        if z_len != 2 * n || out_len != 2 * n {
            return Err((CqStatus::InvalidArgument, format!("buffers must hold {} integers", 2 * n)));
        }
        let f = sols
            .inner
            .solutions
            .get(index)
            .ok_or((CqStatus::OutOfRange, format!("no solution {index}")))?;
        let ctx = sols.inner.params.point_ctx();
        let raw = std::slice::from_raw_parts(z, z_len);
        let point: Vec<FieldElement> = raw
            .chunks(2)
            .map(|c| ctx.ext_elem(c[0] as i64, c[1] as i64))
            .collect::<charp_qkz::Result<_>>()
            .map_err(lib_err)?;
        let vals = f.eval(&point).map_err(lib_err)?;
        let dst = std::slice::from_raw_parts_mut(out, out_len);
        for (i, v) in vals.iter().enumerate() {
            let (a0, a1) = v.coords();
            dst[2 * i] = a0;
            dst[2 * i + 1] = a1;
        }
        Ok(())
    })
}

/// The solution set as JSON (`schema`, `p`, `n`, `kappa`, `k`, `d`, `solutions`).
///
/// # Safety
/// `sols` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cq_solutions_json(sols: *const CqSolutions, out: *mut *mut c_char) -> CqStatus {
    guard(|| {
        let sols = sols.as_ref().ok_or_else(|| null("solutions"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = suites::solve_json(&sols.inner.params).map_err(lib_err)?;
        *out = to_c_string(json.to_string());
        Ok(())
    })
}

/// Runs verification suites over a sweep and writes the JSON report.
/// `primes` and `ns` list the sweep; `kappas` and `suite_names` are
/// comma-separated lists, or null for all. `passed` receives the verdict.
///
/// # Safety
/// Array arguments must point to the given number of readable elements;
/// strings must be null or NUL-terminated; `passed` and `report` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cq_verify(
    primes: *const u64,
    primes_len: usize,
    ns: *const usize,
    ns_len: usize,
    kappas: *const c_char,
    suite_names: *const c_char,
    seed: u64,
    points: usize,
    passed: *mut bool,
    report: *mut *mut c_char,
) -> CqStatus {
    guard(|| {
        if primes.is_null() || ns.is_null() {
            return Err(null("sweep arrays"));
        }
        let passed = passed.as_mut().ok_or_else(|| null("passed"))?;
        if report.is_null() {
            return Err(null("report"));
        }
        let mut config = RunConfig {
            primes: std::slice::from_raw_parts(primes, primes_len).to_vec(),
            n_values: std::slice::from_raw_parts(ns, ns_len).to_vec(),
            seed,
            points,
            ..RunConfig::default()
        };
        for &p in &config.primes {
            charp_qkz::ffield::make_field(p, 1).map_err(lib_err)?;
        }
        if !kappas.is_null() {
            let list = read_str(kappas, "kappas")?;
            config.kappas = KappaFilter::List(list.split(',').map(|s| s.trim().to_string()).collect());
        }
        if !suite_names.is_null() {
            let list = read_str(suite_names, "suites")?;
            config.suites = list
                .split(',')
                .map(|s| s.parse::<Suite>())
                .collect::<charp_qkz::Result<_>>()
                .map_err(lib_err)?;
        }
        let out = suites::run(&config).map_err(lib_err)?;
        *passed = out.passed();
        *report = to_c_string(out.to_json().to_string());
        Ok(())
    })
}
