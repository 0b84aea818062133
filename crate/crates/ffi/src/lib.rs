//! C ABI for `cdfpoison`.
//!
//! Key sets live behind an opaque [`CdfKeySet`] handle created with
//! [`cdf_keyset_new`] and released with [`cdf_keyset_free`]. Every fallible
//! call returns a [`CdfStatus`]; on failure a description of the last error
//! on the calling thread is available through [`cdf_last_error`]. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::{ptr, slice};

use cdfpoison::attack::{run_attack, single_point_attack, AttackMethod, DEFAULT_LIMIT};
use cdfpoison::bound::{upper_bound, BoundMethod};
use cdfpoison::{fit, Error, KeySet, RankedMultiset};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SearchSpaceTooLarge = 3,
    NoFeasiblePoison = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdfAttackMethod {
    Single = 0,
    Greedy = 1,
    SegeExact = 2,
    SegeHeuristic = 3,
    SegeRelaxed = 4,
    Optimal = 5,
    OptimalRelaxed = 6,
    Bruteforce = 7,
}

impl From<CdfAttackMethod> for AttackMethod {
    fn from(m: CdfAttackMethod) -> Self {
        match m {
            CdfAttackMethod::Single => AttackMethod::Single,
            CdfAttackMethod::Greedy => AttackMethod::Greedy,
            CdfAttackMethod::SegeExact => AttackMethod::SegeExact,
            CdfAttackMethod::SegeHeuristic => AttackMethod::SegeHeuristic,
            CdfAttackMethod::SegeRelaxed => AttackMethod::SegeRelaxed,
            CdfAttackMethod::Optimal => AttackMethod::Optimal,
            CdfAttackMethod::OptimalRelaxed => AttackMethod::OptimalRelaxed,
            CdfAttackMethod::Bruteforce => AttackMethod::Bruteforce,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdfBoundMethod {
    Golden = 0,
    Binary = 1,
    Exact = 2,
}

impl From<CdfBoundMethod> for BoundMethod {
    fn from(m: CdfBoundMethod) -> Self {
        match m {
            CdfBoundMethod::Golden => BoundMethod::Golden,
            CdfBoundMethod::Binary => BoundMethod::Binary,
            CdfBoundMethod::Exact => BoundMethod::Exact,
        }
    }
}

/// Least-squares line `rank ≈ w·key + b` and its mean squared error.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CdfFit {
    pub w: f64,
    pub b: f64,
    pub mse: f64,
}

/// Opaque handle to a validated key set.
pub struct CdfKeySet {
    inner: KeySet,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CdfStatus {
    match e {
        Error::SearchSpaceTooLarge { .. } => CdfStatus::SearchSpaceTooLarge,
        Error::NoFeasiblePoison => CdfStatus::NoFeasiblePoison,
        _ => CdfStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guarded(f: impl FnOnce() -> Result<(), CdfStatus>) -> CdfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            CdfStatus::Panic
        }
    }
}

fn fail(e: Error) -> CdfStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> CdfStatus {
    set_error(format!("{what} is null"));
    CdfStatus::NullPointer
}

unsafe fn handle<'a>(keys: *const CdfKeySet) -> Result<&'a KeySet, CdfStatus> {
    keys.as_ref().map(|k| &k.inner).ok_or_else(|| null("key set"))
}

/// Copies `src` into a caller buffer of capacity `cap`, always reporting the
/// required length through `len`.
unsafe fn copy_out(src: &[u64], out: *mut u64, cap: usize, len: *mut usize) -> Result<(), CdfStatus> {
    if len.is_null() {
        return Err(null("length output"));
    }
    *len = src.len();
    if src.len() > cap {
        set_error(format!("buffer holds {cap} values, {} needed", src.len()));
        return Err(CdfStatus::BufferTooSmall);
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Validates `len` strictly increasing keys and stores a new handle in
/// `*out`.
///
/// # Safety
/// `keys` must point to `len` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdf_keyset_new(keys: *const u64, len: usize, out: *mut *mut CdfKeySet) -> CdfStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("handle output"));
        }
        *out = ptr::null_mut();
        if keys.is_null() && len > 0 {
            return Err(null("keys"));
        }
        let values = if len == 0 { Vec::new() } else { slice::from_raw_parts(keys, len).to_vec() };
        let inner = KeySet::new(values).map_err(fail)?;
        *out = Box::into_raw(Box::new(CdfKeySet { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `keys` must come from [`cdf_keyset_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdf_keyset_free(keys: *mut CdfKeySet) {
    if !keys.is_null() {
        drop(Box::from_raw(keys));
    }
}

/// Number of keys, or 0 for a null handle.
///
/// # Safety
/// `keys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cdf_keyset_len(keys: *const CdfKeySet) -> usize {
    keys.as_ref().map_or(0, |k| k.inner.len())
}

/// Least-squares fit of ranks on the keys.
///
/// # Safety
/// `keys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cdf_fit(keys: *const CdfKeySet, out: *mut CdfFit) -> CdfStatus {
    guarded(|| {
        let k = handle(keys)?;
        let out = out.as_mut().ok_or_else(|| null("fit output"))?;
        let f = fit(&RankedMultiset::new(k.keys().to_vec()).map_err(fail)?);
        *out = CdfFit { w: f.w, b: f.b, mse: f.mse };
        Ok(())
    })
}

/// Loss-maximizing single poison. Returns `NO_FEASIBLE_POISON` when no free
/// interior integer raises the loss.
///
/// # Safety
/// `keys` must be a live handle and `point` writable.
#[no_mangle]
pub unsafe extern "C" fn cdf_single_point(keys: *const CdfKeySet, point: *mut u64) -> CdfStatus {
    guarded(|| {
        let k = handle(keys)?;
        let point = point.as_mut().ok_or_else(|| null("point output"))?;
        *point = single_point_attack(k).ok_or_else(|| fail(Error::NoFeasiblePoison))?;
        Ok(())
    })
}

/// Runs an attack with `budget` poisons. The poison keys, sorted and with
/// repetition for relaxed methods, are written to `out` (capacity `cap`), their count to `*len` and the
/// poisoned loss to `*mse`. If `cap` is too small, `*len` still receives the
/// required size and `BUFFER_TOO_SMALL` is returned. `limit` caps the
/// enumeration of exhaustive methods; 0 selects the default.
///
/// # Safety
/// `keys` must be a live handle, `out` must hold `cap` values, and `len`
/// and `mse` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cdf_attack(
    keys: *const CdfKeySet,
    method: CdfAttackMethod,
    budget: u64,
    limit: u64,
    out: *mut u64,
    cap: usize,
    len: *mut usize,
    mse: *mut f64,
) -> CdfStatus {
    guarded(|| {
        let k = handle(keys)?;
        let mse = mse.as_mut().ok_or_else(|| null("mse output"))?;
        let limit = if limit == 0 { DEFAULT_LIMIT } else { limit as u128 };
        let report = run_attack(k, method.into(), budget, limit).map_err(fail)?;
        copy_out(&report.poisons.materialize(k), out, cap, len)?;
        *mse = report.mse_after;
        Ok(())
    })
}

/// Upper bound on the loss any attack with `budget` poisons can reach.
///
/// # Safety
/// `keys` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cdf_upper_bound(
    keys: *const CdfKeySet,
    budget: u64,
    method: CdfBoundMethod,
    iters: u32,
    value: *mut f64,
) -> CdfStatus {
    guarded(|| {
        let k = handle(keys)?;
        let value = value.as_mut().ok_or_else(|| null("value output"))?;
        *value = upper_bound(k, budget, method.into(), iters).map_err(fail)?.value;
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to fit, into `buf`. Returns the full message length without
/// the terminator.
///
/// # Safety
/// `buf` must be null or hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn cdf_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
