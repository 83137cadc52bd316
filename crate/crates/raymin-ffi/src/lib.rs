//! C ABI over the raymin engine: opaque handles, status codes, and a
//! thread-local detail message. The header is generated into
//! `include/raymin.h` at build time.
//!
//! Ownership rules: every `*_create`/`*_from_*` output is owned by the
//! caller and released with the matching `*_free`; input handles are
//! borrowed. All functions are null-safe and panic-proof (panics become
//! `RAYMIN_STATUS_INTERNAL`).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use raymin::array::{InputArray, Query, QueryBatch};
use raymin::engine::Solver;
use raymin::error::Error;
use raymin::geometry::BlockMinStrategy;

/// Outcome of a call. Anything but OK leaves a description in
/// `raymin_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayminStatus {
    Ok = 0,
    /// Bad input: null pointer, invalid query bounds, value domain.
    InvalidArgument = 1,
    /// Rejected configuration (precision gate, layout limits).
    Config = 2,
    /// Internal or consistency failure.
    Internal = 3,
}

/// Strategy for the fully-covered middle blocks of a decomposed query.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayminBlockMin {
    Geometry = 0,
    LookupTable = 1,
}

impl From<RayminBlockMin> for BlockMinStrategy {
    fn from(v: RayminBlockMin) -> Self {
        match v {
            RayminBlockMin::Geometry => BlockMinStrategy::Geometry,
            RayminBlockMin::LookupTable => BlockMinStrategy::LookupTable,
        }
    }
}

/// Opaque input sequence handle.
pub struct RayminArray(InputArray);

/// Opaque solver handle.
pub struct RayminSolver(Solver<f32>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn status_of(err: &Error) -> RayminStatus {
    match err {
        Error::EmptyInput
        | Error::NonFiniteValue { .. }
        | Error::TransformDomain { .. }
        | Error::InvalidQuery { .. } => RayminStatus::InvalidArgument,
        Error::SingleLayoutLimit { .. }
        | Error::PrecisionGate { .. }
        | Error::NoValidBlockConfig { .. }
        | Error::Config(_) => RayminStatus::Config,
        _ => RayminStatus::Internal,
    }
}

fn fail(err: &Error) -> RayminStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard<F: FnOnce() -> RayminStatus>(f: F) -> RayminStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic across the FFI boundary");
            RayminStatus::Internal
        }
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn raymin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Short static description of a status code.
#[no_mangle]
pub extern "C" fn raymin_status_message(status: RayminStatus) -> *const c_char {
    let s: &'static str = match status {
        RayminStatus::Ok => "ok\0",
        RayminStatus::InvalidArgument => "invalid argument\0",
        RayminStatus::Config => "configuration rejected\0",
        RayminStatus::Internal => "internal error\0",
    };
    s.as_ptr() as *const c_char
}

/// Detail message of the calling thread's most recent failure. Owned by
/// the library; valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn raymin_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an array from 32-bit float values.
///
/// # Safety
/// `values` must point to `len` readable floats; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn raymin_array_from_f32(
    values: *const f32,
    len: usize,
    out: *mut *mut RayminArray,
) -> RayminStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        let slice = std::slice::from_raw_parts(values, len);
        match InputArray::from_f32(slice.to_vec()) {
            Ok(arr) => {
                *out = Box::into_raw(Box::new(RayminArray(arr)));
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds an array from signed integers through the order-preserving
/// transform; inputs must lie in `[0, 2^31)`.
///
/// # Safety
/// `values` must point to `len` readable integers; `out` must be a
/// valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn raymin_array_from_i64(
    values: *const i64,
    len: usize,
    out: *mut *mut RayminArray,
) -> RayminStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        let slice = std::slice::from_raw_parts(values, len);
        match InputArray::from_ints(slice.to_vec()) {
            Ok(arr) => {
                *out = Box::into_raw(Box::new(RayminArray(arr)));
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of elements, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn raymin_array_len(arr: *const RayminArray) -> usize {
    if arr.is_null() {
        return 0;
    }
    unsafe { (*arr).0.len() }
}

/// Releases an array handle (null is a no-op).
///
/// # Safety
/// `arr` must be null or a pointer returned by an array constructor,
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn raymin_array_free(arr: *mut RayminArray) {
    if !arr.is_null() {
        drop(Box::from_raw(arr));
    }
}

/// Builds a single-layout solver (requires len <= 2^24). The array is
/// copied; the handle stays owned by the caller.
///
/// # Safety
/// `arr` must be a live array handle; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn raymin_solver_create_single(
    arr: *const RayminArray,
    out: *mut *mut RayminSolver,
) -> RayminStatus {
    guard(|| {
        if arr.is_null() || out.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        match Solver::single((*arr).0.clone()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RayminSolver(s)));
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds a block-matrix solver. `block_size = 0` picks the largest
/// valid power of two; a nonzero size must pass the precision gate.
///
/// # Safety
/// `arr` must be a live array handle; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn raymin_solver_create_block(
    arr: *const RayminArray,
    block_size: usize,
    blockmin: RayminBlockMin,
    out: *mut *mut RayminSolver,
) -> RayminStatus {
    guard(|| {
        if arr.is_null() || out.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        let hint = if block_size == 0 {
            None
        } else {
            Some(block_size)
        };
        match Solver::block_auto((*arr).0.clone(), hint, blockmin.into()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RayminSolver(s)));
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a solver handle (null is a no-op).
///
/// # Safety
/// `solver` must be null or a pointer returned by a solver constructor,
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn raymin_solver_free(solver: *mut RayminSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Answers one query; writes the leftmost argmin and its value.
///
/// # Safety
/// `solver` must be a live solver handle; `out_index` and `out_value`
/// must be valid destinations (either may be null to skip it).
#[no_mangle]
pub unsafe extern "C" fn raymin_solve(
    solver: *const RayminSolver,
    l: u32,
    r: u32,
    out_index: *mut u32,
    out_value: *mut f32,
) -> RayminStatus {
    guard(|| {
        if solver.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        match (*solver).0.solve(Query::new(l, r)) {
            Ok(ans) => {
                if !out_index.is_null() {
                    *out_index = ans.index;
                }
                if !out_value.is_null() {
                    *out_value = ans.value;
                }
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Answers `count` queries with `threads` workers (0 or 1 = serial),
/// writing results in input order.
///
/// # Safety
/// `ls` and `rs` must point to `count` readable indices; `out_indices`
/// and `out_values`, when non-null, to `count` writable slots.
#[no_mangle]
pub unsafe extern "C" fn raymin_solve_batch(
    solver: *const RayminSolver,
    ls: *const u32,
    rs: *const u32,
    count: usize,
    threads: usize,
    out_indices: *mut u32,
    out_values: *mut f32,
) -> RayminStatus {
    guard(|| {
        if solver.is_null() || ls.is_null() || rs.is_null() {
            set_error("null pointer");
            return RayminStatus::InvalidArgument;
        }
        if count == 0 {
            return RayminStatus::Ok;
        }
        let ls = std::slice::from_raw_parts(ls, count);
        let rs = std::slice::from_raw_parts(rs, count);
        let queries: Vec<Query> = ls
            .iter()
            .zip(rs)
            .map(|(&l, &r)| Query::new(l, r))
            .collect();
        let batch = QueryBatch::explicit(queries);
        match (*solver).0.solve_batch(&batch, threads.max(1)) {
            Ok(res) => {
                for (i, ans) in res.answers.iter().enumerate() {
                    if !out_indices.is_null() {
                        *out_indices.add(i) = ans.index;
                    }
                    if !out_values.is_null() {
                        *out_values.add(i) = ans.value;
                    }
                }
                RayminStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
