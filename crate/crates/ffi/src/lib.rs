//! C ABI for the solver: opaque handles, status codes, and a thread-local
//! last-error message.
//!
//! Conventions: every function returns [`HwStatus`]; results travel through
//! out-pointers that are written only on `HW_STATUS_OK`. Handles are freed
//! exactly once by their `_free` function, which tolerates null. Handles
//! are not synchronized; share them across threads only under an external
//! lock. On any failure the thread-local message returned by
//! [`hw_last_error_message`] describes the cause until the next failure on
//! the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use haarwave::analysis::snapshot_error_table;
use haarwave::problem::{builtin, builtin_names, check_compatibility, load_problem};
use haarwave::solver::{reconstruct_with_lift, solve, SolutionRecord};
use haarwave::stability::{stability_report, DEFAULT_STABILITY_TOL};
use haarwave::{Error, HaarBasis, ProblemSpec};

/// Outcome of a call. Anything but `HW_STATUS_OK` leaves out-pointers
/// untouched and records a message for [`hw_last_error_message`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments were well-formed but out of the accepted domain.
    InvalidArgument = 3,
    /// The computation itself failed; see the last-error message.
    RuntimeError = 4,
    /// The requested quantity needs data the problem does not carry.
    MissingData = 5,
    /// An index or buffer size did not match the data.
    OutOfRange = 6,
    /// An internal invariant broke; the library state is still sound.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(status: HwStatus, message: &str) -> HwStatus {
    set_error(message);
    status
}

fn fail_with(err: &Error) -> HwStatus {
    let status = match err {
        Error::InvalidParameter { .. }
        | Error::BasisTooLarge { .. }
        | Error::NonIntegerSteps { .. }
        | Error::SnapshotOffGrid { .. }
        | Error::UnknownProblem { .. } => HwStatus::InvalidArgument,
        Error::MissingExact { .. } | Error::MissingSnapshot { .. } => HwStatus::MissingData,
        _ => HwStatus::RuntimeError,
    };
    fail(status, &err.to_string())
}

fn guarded(body: impl FnOnce() -> HwStatus) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(HwStatus::Panic, "internal panic"),
    }
}

/// A loaded problem: the equation data and optional exact solution.
pub struct HwProblem {
    spec: ProblemSpec,
}

/// A completed run: recorded snapshots plus the basis that produced them.
pub struct HwSolution {
    record: SolutionRecord,
    basis: HaarBasis,
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, HwStatus> {
    if ptr.is_null() {
        return Err(fail(HwStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(HwStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn box_out<T>(value: T, out: *mut *mut T) -> HwStatus {
    // Null out-pointers were checked by the caller.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    HwStatus::Ok
}

/// The message recorded by the most recent failure on this thread, as a
/// NUL-terminated string. Valid until the next failing call on the same
/// thread; never null.
#[no_mangle]
pub extern "C" fn hw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Number of built-in problems.
#[no_mangle]
pub extern "C" fn hw_builtin_count() -> usize {
    builtin_names().len()
}

/// Name of built-in problem `index`, or null when out of range. The
/// returned string is static; do not free it.
#[no_mangle]
pub extern "C" fn hw_builtin_name(index: usize) -> *const c_char {
    // Names are ASCII; embed the terminator via a static table.
    const NAMES: [&str; 2] = ["example1\0", "example2\0"];
    debug_assert_eq!(NAMES.len(), builtin_names().len());
    match NAMES.get(index) {
        Some(name) => name.as_ptr().cast(),
        None => std::ptr::null(),
    }
}

/// Loads the built-in problem `name` into a new handle.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_builtin(
    name: *const c_char,
    out: *mut *mut HwProblem,
) -> HwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(HwStatus::NullPointer, "out pointer is null");
        }
        let name = match str_arg(name) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match builtin(name) {
            Ok(spec) => box_out(HwProblem { spec }, out),
            Err(e) => fail_with(&e),
        }
    })
}

/// Loads a problem description from a JSON file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_load(
    path: *const c_char,
    out: *mut *mut HwProblem,
) -> HwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(HwStatus::NullPointer, "out pointer is null");
        }
        let path = match str_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_problem(path) {
            Ok(spec) => box_out(HwProblem { spec }, out),
            Err(e) => fail_with(&e),
        }
    })
}

/// Frees a problem handle; null is allowed.
///
/// # Safety
/// `problem` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_free(problem: *mut HwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Evaluates the four compatibility residuals tying the initial data to
/// the boundary and nonlocal data at t = 0. Writes the residuals into
/// `residuals_out[0..4]` and the overall verdict into `all_pass_out`.
/// `quad_n` is the (even, positive) Simpson subinterval count; pass 0 for
/// the default.
///
/// # Safety
/// `problem` must be a live handle; `residuals_out` must point to at
/// least four doubles; `all_pass_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_problem_check(
    problem: *const HwProblem,
    tolerance: f64,
    quad_n: usize,
    residuals_out: *mut f64,
    all_pass_out: *mut bool,
) -> HwStatus {
    guarded(|| {
        if problem.is_null() || residuals_out.is_null() || all_pass_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        let quad_n = if quad_n == 0 {
            haarwave::problem::DEFAULT_QUAD_N
        } else {
            quad_n
        };
        if quad_n % 2 != 0 {
            return fail(
                HwStatus::InvalidArgument,
                "quadrature subinterval count must be even",
            );
        }
        if !(tolerance >= 0.0) || !tolerance.is_finite() {
            return fail(
                HwStatus::InvalidArgument,
                "tolerance must be nonnegative and finite",
            );
        }
        match check_compatibility(&(*problem).spec, tolerance, quad_n) {
            Ok(report) => {
                for (k, r) in report.residuals.iter().enumerate() {
                    *residuals_out.add(k) = *r;
                }
                *all_pass_out = report.all_pass();
                HwStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Runs the solver on `problem` at resolution `level` with step `dt` up to
/// `t_final`, recording snapshots at the `n_times` entries of `times`
/// (each must sit on the time grid). A null `times` with `n_times` 0
/// records the final time only.
///
/// # Safety
/// `problem` must be a live handle; `times` must point to `n_times`
/// doubles (or be null with `n_times` 0); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_solve(
    problem: *const HwProblem,
    level: u32,
    dt: f64,
    t_final: f64,
    times: *const f64,
    n_times: usize,
    out: *mut *mut HwSolution,
) -> HwStatus {
    guarded(|| {
        if problem.is_null() || out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        if times.is_null() && n_times != 0 {
            return fail(HwStatus::NullPointer, "times is null but n_times is nonzero");
        }
        let times: Vec<f64> = if times.is_null() {
            vec![t_final]
        } else {
            std::slice::from_raw_parts(times, n_times).to_vec()
        };
        let spec = &(*problem).spec;
        let basis = match HaarBasis::build(level) {
            Ok(b) => b,
            Err(e) => return fail_with(&e),
        };
        match solve(spec, level, dt, t_final, &times) {
            Ok(record) => box_out(HwSolution { record, basis }, out),
            Err(e) => fail_with(&e),
        }
    })
}

/// Frees a solution handle; null is allowed.
///
/// # Safety
/// `solution` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_free(solution: *mut HwSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of recorded snapshots; 0 for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_snapshot_count(solution: *const HwSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (&*solution).record.snapshots.len()
}

/// Writes the time of snapshot `index`.
///
/// # Safety
/// `solution` must be a live handle; `t_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_time(
    solution: *const HwSolution,
    index: usize,
    t_out: *mut f64,
) -> HwStatus {
    guarded(|| {
        if solution.is_null() || t_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        match (&*solution).record.snapshots.get(index) {
            Some(snap) => {
                *t_out = snap.t;
                HwStatus::Ok
            }
            None => fail(HwStatus::OutOfRange, "snapshot index out of range"),
        }
    })
}

/// Writes the max and L2 errors of snapshot `index` against the problem's
/// exact solution. Fails with `HW_STATUS_MISSING_DATA` when the problem
/// has no exact solution.
///
/// # Safety
/// `solution` must be a live handle; `max_out` and `l2_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_errors(
    solution: *const HwSolution,
    index: usize,
    max_out: *mut f64,
    l2_out: *mut f64,
) -> HwStatus {
    guarded(|| {
        if solution.is_null() || max_out.is_null() || l2_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        let record = &(*solution).record;
        let Some(snap) = record.snapshots.get(index) else {
            return fail(HwStatus::OutOfRange, "snapshot index out of range");
        };
        match snapshot_error_table(&record.problem, snap) {
            Ok(table) => {
                *max_out = table.max_error;
                *l2_out = table.l2_error;
                HwStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Evaluates the reconstructed solution of snapshot `index` at `x` in
/// [0, 1].
///
/// # Safety
/// `solution` must be a live handle; `value_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_solution_sample(
    solution: *const HwSolution,
    index: usize,
    x: f64,
    value_out: *mut f64,
) -> HwStatus {
    guarded(|| {
        if solution.is_null() || value_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        if !(0.0..=1.0).contains(&x) {
            return fail(HwStatus::InvalidArgument, "x must lie in [0, 1]");
        }
        let handle = &*solution;
        let Some(snap) = handle.record.snapshots.get(index) else {
            return fail(HwStatus::OutOfRange, "snapshot index out of range");
        };
        let lift =
            2.0 * x * (snap.nonlocal_value - snap.boundary_value) + snap.boundary_value;
        let value =
            reconstruct_with_lift(&handle.basis, &snap.coefficients, &[lift], &[x])[0];
        *value_out = value;
        HwStatus::Ok
    })
}

/// Writes the spectral radius of the amplification matrix at resolution
/// `level` and step `dt`, and whether the scheme is stable at the default
/// tolerance.
///
/// # Safety
/// `radius_out` and `stable_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hw_stability_radius(
    level: u32,
    dt: f64,
    radius_out: *mut f64,
    stable_out: *mut bool,
) -> HwStatus {
    guarded(|| {
        if radius_out.is_null() || stable_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        match stability_report(level, dt, DEFAULT_STABILITY_TOL) {
            Ok(report) => {
                *radius_out = report.spectral_radius;
                *stable_out = report.stable;
                HwStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Writes the amplification-matrix spectrum at resolution `level` and step
/// `dt` into `re_out`/`im_out`, sorted by decreasing modulus. The spectrum
/// has `2^(level+2)` entries; `capacity` must be at least that, and
/// `len_out` receives the count written.
///
/// # Safety
/// `re_out` and `im_out` must point to at least `capacity` doubles;
/// `len_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hw_stability_spectrum(
    level: u32,
    dt: f64,
    re_out: *mut f64,
    im_out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> HwStatus {
    guarded(|| {
        if re_out.is_null() || im_out.is_null() || len_out.is_null() {
            return fail(HwStatus::NullPointer, "argument pointer is null");
        }
        match stability_report(level, dt, DEFAULT_STABILITY_TOL) {
            Ok(report) => {
                let n = report.eigenvalues.len();
                if capacity < n {
                    return fail(
                        HwStatus::OutOfRange,
                        "buffer capacity below the spectrum size 2^(level+2)",
                    );
                }
                for (k, e) in report.eigenvalues.iter().enumerate() {
                    *re_out.add(k) = e.re;
                    *im_out.add(k) = e.im;
                }
                *len_out = n;
                HwStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}
