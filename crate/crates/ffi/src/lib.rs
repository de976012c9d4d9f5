//! C ABI over `biaslin`.
//!
//! Conventions: every function returns a [`BlStatus`]; results go through
//! out-pointers. Rationals cross the boundary as NUL-terminated `"a/b"`
//! strings. Strings returned by the library are owned by the caller and
//! released with [`bl_string_free`]; distributions with
//! [`bl_distribution_free`]. After a non-`Ok` status,
//! [`bl_last_error_message`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use biaslin::cube::{signed_character, CharacterIndex};
use biaslin::distributions::{
    eta, feasibility_search, make_case_distribution, make_composed_distribution, make_dfh19, make_pairwise_independent,
    make_uniform_even_weight, pairwise_independent_coordinates,
};
use biaslin::hermite::{hermite_product_expectation, CovarianceMatrix};
use biaslin::io::{distribution_from_json, distribution_to_json};
use biaslin::lintest::{negated_test, product_expectation_exact, TestMode};
use biaslin::rational::{format_rational, parse_rational, Rational};
use biaslin::{BiasedDistribution, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    /// Bad input (out of range, malformed rational, failed precondition).
    InvalidArgument = 1,
    /// A computation failed (search exhausted, factorization, ...).
    ComputationFailed = 2,
    NullPointer = 3,
    /// A panic was caught at the boundary.
    Panic = 4,
}

/// Opaque distribution handle.
pub struct BlDistribution {
    inner: BiasedDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BlStatus {
    if e.is_validation() {
        BlStatus::InvalidArgument
    } else {
        BlStatus::ComputationFailed
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            BlStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            BlStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Fail::Lib(Error::Parse(format!("{what} is not UTF-8"))))
}

unsafe fn read_rational(ptr: *const c_char, what: &'static str) -> Result<Rational, Fail> {
    Ok(parse_rational(read_str(ptr, what)?)?)
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::Lib(Error::Internal("string with interior NUL".into())))?;
    write_out(out, c.into_raw(), "out")
}

unsafe fn handle<'a>(d: *const BlDistribution) -> Result<&'a BiasedDistribution, Fail> {
    d.as_ref().map(|h| &h.inner).ok_or(Fail::Null("distribution"))
}

unsafe fn emit(out: *mut *mut BlDistribution, d: BiasedDistribution) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    out.write(Box::into_raw(Box::new(BlDistribution { inner: d })));
    Ok(())
}

/// Message for the last failure on this thread; empty after success. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a distribution. Null is ignored.
///
/// # Safety
/// `d` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_free(d: *mut BlDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Uniform distribution over even-weight vectors of length `k`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_uniform(k: usize, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| emit(out, make_uniform_even_weight(k)?))
}

/// Hamming-symmetric case construction for `(k, p)`.
///
/// # Safety
/// `p` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_case(k: usize, p: *const c_char, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| emit(out, make_case_distribution(k, read_rational(p, "p")?)?))
}

/// Composed construction for `k >= 6`.
///
/// # Safety
/// `p` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_composed(k: usize, p: *const c_char, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| emit(out, make_composed_distribution(k, read_rational(p, "p")?)?))
}

/// Any pairwise-independent member for admissible `(k, p)`.
///
/// # Safety
/// `p` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_pairwise(k: usize, p: *const c_char, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| emit(out, make_pairwise_independent(k, read_rational(p, "p")?)?))
}

/// Four-query mixture; `p1` may be null for the default.
///
/// # Safety
/// `p` (and `p1` when non-null) must be NUL-terminated strings; `out` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_dfh19(p: *const c_char, p1: *const c_char, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| {
        let p1 = if p1.is_null() { None } else { Some(read_rational(p1, "p1")?) };
        emit(out, make_dfh19(read_rational(p, "p")?, p1)?)
    })
}

/// Parses and validates a distribution file's contents.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_from_json(json: *const c_char, out: *mut *mut BlDistribution) -> BlStatus {
    guard(|| emit(out, distribution_from_json(read_str(json, "json")?)?))
}

/// Serializes to the distribution file format.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_to_json(d: *const BlDistribution, out: *mut *mut c_char) -> BlStatus {
    guard(|| write_string(out, distribution_to_json(handle(d)?)))
}

/// Number of queries `k`.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_k(d: *const BlDistribution, out: *mut usize) -> BlStatus {
    guard(|| write_out(out, handle(d)?.k(), "out"))
}

/// `max_{i != j} P[X_i = X_j]` as `"a/b"`.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_eta(d: *const BlDistribution, out: *mut *mut c_char) -> BlStatus {
    guard(|| write_string(out, format_rational(&eta(handle(d)?)?)))
}

/// Pairwise-independent coordinates as a bitmask: bit `i` set for
/// coordinate `i + 1`. Requires `k <= 64`.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_distribution_pairwise_independent(d: *const BlDistribution, out: *mut u64) -> BlStatus {
    guard(|| {
        let d = handle(d)?;
        if d.k() > 64 {
            return Err(Error::TooLarge { what: "k for a 64-bit mask".into(), value: d.k() as u128, limit: 64 }.into());
        }
        let mask = pairwise_independent_coordinates(d).iter().fold(0u64, |m, &i| m | (1 << i));
        write_out(out, mask, "out")
    })
}

/// Whether some member of `D(p, k)` is pairwise independent.
///
/// # Safety
/// `p` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_feasible(k: usize, p: *const c_char, out: *mut bool) -> BlStatus {
    guard(|| {
        let p = read_rational(p, "p")?;
        biaslin::rational::check_open_unit(&p, "p")?;
        write_out(out, feasibility_search(k, &p).feasible, "out")
    })
}

/// Exact `E[prod_i H_{s_i}(Z_i)]` with every off-diagonal covariance equal
/// to `rho`, written as `"a/b"`.
///
/// # Safety
/// `s` must point to `len` values; `rho` must be a NUL-terminated string;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_hermite_moment(s: *const u32, len: usize, rho: *const c_char, out: *mut *mut c_char) -> BlStatus {
    guard(|| {
        if s.is_null() {
            return Err(Fail::Null("s"));
        }
        let s = std::slice::from_raw_parts(s, len);
        let sigma = CovarianceMatrix::from_rho(len, &read_rational(rho, "rho")?)?;
        write_string(out, format_rational(&hermite_product_expectation(s, &sigma)?))
    })
}

/// Exact `E[prod_i f(X_i)]` for `f = chi_S` on `{0,1}^n`, `S` given as a
/// table bitmask (coordinate 1 most significant). With `negated`, every
/// query coordinate is flipped before evaluation.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_chi_test(d: *const BlDistribution, n: usize, mask: u64, negated: bool, out: *mut f64) -> BlStatus {
    guard(|| {
        let d = handle(d)?;
        let f = signed_character(&CharacterIndex::from_table_mask(n, mask)?, n, false)?;
        let report = if negated { negated_test(&f, d, n, TestMode::Exact)? } else { product_expectation_exact(&f, d, n)? };
        write_out(out, report.expectation, "out")
    })
}
