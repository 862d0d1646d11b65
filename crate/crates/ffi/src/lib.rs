//! C ABI over `amc-core`.
//!
//! Every fallible call returns an [`AmcStatus`]; on failure the message is
//! available from [`amc_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use amc_core::completion::{Algorithm, CompletionResult};
use amc_core::experiment::complete_matrix;
use amc_core::generators::{generate, FixtureSpec};
use amc_core::linalg::DenseMatrix;
use amc_core::AmcError;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// A restricted basis was singular or the data were otherwise unusable.
    Numerical = 4,
    UnknownName = 5,
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// Dense row-major matrix handle.
pub struct AmcMatrix {
    inner: DenseMatrix,
}

/// Outcome of one completion run.
pub struct AmcResult {
    inner: CompletionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &AmcError) -> AmcStatus {
    match e {
        AmcError::Dimension(_) | AmcError::OutOfBounds { .. } | AmcError::TooLarge(_) => AmcStatus::Dimension,
        AmcError::RankDeficient | AmcError::EstimateOnly(_) | AmcError::Unobserved(..) => AmcStatus::Numerical,
        AmcError::UnknownName(_) => AmcStatus::UnknownName,
        _ => AmcStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (AmcStatus, String)>) -> AmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AmcStatus::Internal
        }
    }
}

fn lib<T>(r: amc_core::Result<T>) -> Result<T, (AmcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (AmcStatus, String) {
    (AmcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (AmcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (AmcStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn amc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn amc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut AmcMatrix,
) -> AmcStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows.checked_mul(cols).ok_or((AmcStatus::Dimension, "size overflows".to_string()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let inner = lib(DenseMatrix::new(rows, cols, values))?;
        write_out(out, Box::into_raw(Box::new(AmcMatrix { inner })), "out")
    })
}

/// Seeded random rank-`r` matrix whose column and row spaces carry the given
/// number of coherent (standard basis) directions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_matrix_generate(
    m: usize,
    n: usize,
    r: usize,
    coherent_cols: usize,
    coherent_rows: usize,
    seed: u64,
    out: *mut *mut AmcMatrix,
) -> AmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fx = lib(generate(&FixtureSpec { m, n, r, coherent_cols, coherent_rows, seed }))?;
        write_out(out, Box::into_raw(Box::new(AmcMatrix { inner: fx.matrix })), "out")
    })
}

/// # Safety
/// `matrix` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amc_matrix_free(matrix: *mut AmcMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_matrix_shape(matrix: *const AmcMatrix, rows: *mut usize, cols: *mut usize) -> AmcStatus {
    guard(|| {
        let m = deref(matrix, "matrix")?;
        if rows.is_null() || cols.is_null() {
            return Err(null("rows/cols"));
        }
        write_out(rows, m.inner.rows(), "rows")?;
        write_out(cols, m.inner.cols(), "cols")
    })
}

/// Copies the row-major entries into `buf`, which must hold `rows * cols` values.
///
/// # Safety
/// `matrix` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn amc_matrix_copy_data(matrix: *const AmcMatrix, buf: *mut f64, len: usize) -> AmcStatus {
    guard(|| {
        let m = deref(matrix, "matrix")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let data = m.inner.data();
        if len < data.len() {
            return Err((AmcStatus::BufferTooSmall, format!("need {} values, got {len}", data.len())));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Completes `matrix` with the named algorithm (`ks2013`, `ercs`, `err`,
/// `erre` or `erei`), observing entries through a metered uniform-cost oracle.
///
/// # Safety
/// `matrix` must be a live handle, `algorithm` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn amc_complete(
    matrix: *const AmcMatrix,
    algorithm: *const c_char,
    eps: f64,
    seed: u64,
    out: *mut *mut AmcResult,
) -> AmcStatus {
    guard(|| {
        let m = deref(matrix, "matrix")?;
        if algorithm.is_null() {
            return Err(null("algorithm"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(algorithm)
            .to_str()
            .map_err(|_| (AmcStatus::InvalidArgument, "algorithm is not UTF-8".to_string()))?;
        let alg = lib(Algorithm::parse(name))?;
        let inner = lib(complete_matrix(m.inner.clone(), alg, eps, seed))?;
        write_out(out, Box::into_raw(Box::new(AmcResult { inner })), "out")
    })
}

/// # Safety
/// `result` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amc_result_free(result: *mut AmcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of entries observed and their total cost.
///
/// # Safety
/// `result` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_result_observations(
    result: *const AmcResult,
    count: *mut usize,
    cost: *mut f64,
) -> AmcStatus {
    guard(|| {
        let r = deref(result, "result")?;
        if count.is_null() || cost.is_null() {
            return Err(null("count/cost"));
        }
        write_out(count, r.inner.stats.count, "count")?;
        write_out(cost, r.inner.stats.cost, "cost")
    })
}

/// Estimated rank, success flag against the supplied matrix, and the largest
/// absolute entry error.
///
/// # Safety
/// `result` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_result_summary(
    result: *const AmcResult,
    rank: *mut usize,
    success: *mut bool,
    max_abs_error: *mut f64,
) -> AmcStatus {
    guard(|| {
        let r = deref(result, "result")?;
        if rank.is_null() || success.is_null() || max_abs_error.is_null() {
            return Err(null("rank/success/max_abs_error"));
        }
        write_out(rank, r.inner.rank_estimate, "rank")?;
        write_out(success, r.inner.success.unwrap_or(false), "success")?;
        write_out(max_abs_error, r.inner.max_abs_error.unwrap_or(f64::NAN), "max_abs_error")
    })
}

/// New matrix handle holding the completed matrix.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amc_result_recovered(result: *const AmcResult, out: *mut *mut AmcMatrix) -> AmcStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let m = AmcMatrix { inner: r.inner.recovered.clone() };
        write_out(out, Box::into_raw(Box::new(m)), "out")
    })
}
