//! C ABI for the pathgain toolkit.
//!
//! Problems and equation systems are held behind opaque handles; results
//! travel as JSON strings in the same formats the CLI emits. Every function
//! returns a status code mirroring the CLI exit codes: 0 success/solvable,
//! 1 unsolvable or verification failed, 2 invalid input, 3 budget exceeded,
//! 4 internal error. `pg_last_error` describes the most recent failure on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pathgain::equations::{build_km_system, build_path_formulation, EquationsError};
use pathgain::galois::FieldSpec;
use pathgain::network::Problem;
use pathgain::poly::PolySystem;
use pathgain::recover::{derive_code, verify_code, NetworkCode};
use pathgain::simplify::{branch_analyze, linear_eliminate};
use pathgain::solve::{solve_system, Solution, SolveError};

pub const PG_OK: c_int = 0;
pub const PG_UNSOLVABLE: c_int = 1;
pub const PG_ERR_INPUT: c_int = 2;
pub const PG_BUDGET_EXCEEDED: c_int = 3;
pub const PG_ERR_INTERNAL: c_int = 4;

/// Opaque handle to a validated network coding problem.
pub struct PgProblem {
    inner: Problem,
}

/// Opaque handle to a polynomial equation system.
pub struct PgSystem {
    inner: PolySystem,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(code: c_int, message: &str) -> c_int {
    set_error(message);
    code
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned through an out parameter.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(PG_ERR_INPUT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        PG_ERR_INPUT
    })
}

fn write_string(out: *mut *mut c_char, text: String) -> c_int {
    if out.is_null() {
        return fail(PG_ERR_INPUT, "null output pointer");
    }
    match CString::new(text) {
        Ok(cs) => {
            unsafe { *out = cs.into_raw() };
            PG_OK
        }
        Err(_) => fail(PG_ERR_INTERNAL, "output contained an interior NUL"),
    }
}

fn guarded(f: impl FnOnce() -> c_int) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(PG_ERR_INTERNAL, "internal panic"),
    }
}

/// Parses a problem JSON document into a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_from_json(
    json: *const c_char,
    out: *mut *mut PgProblem,
) -> c_int {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        if out.is_null() {
            return fail(PG_ERR_INPUT, "null output pointer");
        }
        match Problem::from_json_str(text) {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(PgProblem { inner: problem }));
                PG_OK
            }
            Err(e) => fail(PG_ERR_INPUT, &e.to_string()),
        }
    })
}

/// Canonical JSON of a problem handle.
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_to_json(
    problem: *const PgProblem,
    out: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(p) = problem.as_ref() else {
            return fail(PG_ERR_INPUT, "null problem handle");
        };
        write_string(out, p.inner.to_json().to_string())
    })
}

/// # Safety
/// `problem` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_free(problem: *mut PgProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Builds the polynomial system of a problem: formulation 0 is the degree-2
/// path-gain system, 1 the edge-to-edge gain system. Returns PG_UNSOLVABLE
/// when a demanded source is unreachable.
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_build_system(
    problem: *const PgProblem,
    formulation: c_int,
    out: *mut *mut PgSystem,
) -> c_int {
    guarded(|| {
        let Some(p) = problem.as_ref() else {
            return fail(PG_ERR_INPUT, "null problem handle");
        };
        if out.is_null() {
            return fail(PG_ERR_INPUT, "null output pointer");
        }
        let system = match formulation {
            0 => match build_path_formulation(&p.inner) {
                Ok(pf) => pf.system,
                Err(e @ EquationsError::UnsatisfiableDemand { .. }) => {
                    return fail(PG_UNSOLVABLE, &e.to_string());
                }
                Err(e) => return fail(PG_ERR_INPUT, &e.to_string()),
            },
            1 => build_km_system(&p.inner),
            _ => return fail(PG_ERR_INPUT, "formulation must be 0 (path) or 1 (edge)"),
        };
        *out = Box::into_raw(Box::new(PgSystem { inner: system }));
        PG_OK
    })
}

/// Parses a system JSON document into a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_system_from_json(
    json: *const c_char,
    out: *mut *mut PgSystem,
) -> c_int {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        if out.is_null() {
            return fail(PG_ERR_INPUT, "null output pointer");
        }
        let value: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(PG_ERR_INPUT, &e.to_string()),
        };
        match PolySystem::from_json(&value) {
            Ok(system) => {
                *out = Box::into_raw(Box::new(PgSystem { inner: system }));
                PG_OK
            }
            Err(e) => fail(PG_ERR_INPUT, &e.to_string()),
        }
    })
}

/// # Safety
/// `system` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_system_to_json(
    system: *const PgSystem,
    out: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(s) = system.as_ref() else {
            return fail(PG_ERR_INPUT, "null system handle");
        };
        write_string(out, s.inner.to_json().to_string())
    })
}

/// # Safety
/// `system` must be a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pg_system_free(system: *mut PgSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Prunes, eliminates, and case-splits the system; writes the simplification
/// result (reduced system, trace, verdict, branch log) as JSON.
///
/// # Safety
/// `system` must be a live handle; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_simplify(
    system: *const PgSystem,
    depth: u32,
    width: u32,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(s) = system.as_ref() else {
            return fail(PG_ERR_INPUT, "null system handle");
        };
        let mut result = linear_eliminate(&s.inner);
        let (verdict, log) = branch_analyze(&result.reduced, depth, width);
        result.verdict = result.verdict.meet(verdict);
        result.branch_log = log;
        write_string(out_json, result.to_json().to_string())
    })
}

/// Solves a system over the named field ("p" or "p^m"). On success writes
/// the solution JSON; on PG_UNSOLVABLE writes a verdict document instead.
///
/// # Safety
/// `system` and `field` must be valid; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_solve(
    system: *const PgSystem,
    field: *const c_char,
    budget: u64,
    depth: u32,
    width: u32,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(s) = system.as_ref() else {
            return fail(PG_ERR_INPUT, "null system handle");
        };
        let field_name = match read_str(field) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let field = match FieldSpec::parse(field_name) {
            Ok(f) => f,
            Err(e) => return fail(PG_ERR_INPUT, &e.to_string()),
        };
        match solve_system(&s.inner, &field, budget, depth, width) {
            Ok(solved) => match solved.solution {
                Some(solution) => write_string(out_json, solution.to_json().to_string()),
                None => {
                    let doc = serde_json::json!({
                        "solvable": false,
                        "field": field.name(),
                        "verdict": solved.verdict.render(),
                    });
                    let code = write_string(out_json, doc.to_string());
                    if code != PG_OK {
                        return code;
                    }
                    fail(PG_UNSOLVABLE, &format!("unsolvable over GF({})", field.name()))
                }
            },
            Err(SolveError::BudgetExceeded { space, budget }) => fail(
                PG_BUDGET_EXCEEDED,
                &format!("budget exceeded: {} assignments vs budget {}", space, budget),
            ),
            Err(e) => fail(PG_ERR_INPUT, &e.to_string()),
        }
    })
}

/// Derives edge-to-edge coding coefficients from a path-gain solution JSON;
/// writes the network code JSON.
///
/// # Safety
/// `problem` must be a live handle; strings and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_recover(
    problem: *const PgProblem,
    solution_json: *const c_char,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(p) = problem.as_ref() else {
            return fail(PG_ERR_INPUT, "null problem handle");
        };
        let text = match read_str(solution_json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let solution = match Solution::from_json_str(text) {
            Ok(s) => s,
            Err(e) => return fail(PG_ERR_INPUT, &e.to_string()),
        };
        match derive_code(&p.inner, &solution) {
            Ok(code) => write_string(out_json, code.to_json().to_string()),
            Err(e) => fail(PG_ERR_INPUT, &e.to_string()),
        }
    })
}

/// Verifies a network code JSON by independent forward propagation; writes
/// the per-sink report. Returns PG_UNSOLVABLE when any sink fails.
///
/// # Safety
/// `problem` must be a live handle; strings and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_verify(
    problem: *const PgProblem,
    code_json: *const c_char,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(p) = problem.as_ref() else {
            return fail(PG_ERR_INPUT, "null problem handle");
        };
        let text = match read_str(code_json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let code = match NetworkCode::from_json_str(text) {
            Ok(c) => c,
            Err(e) => return fail(PG_ERR_INPUT, &e.to_string()),
        };
        let report = verify_code(&p.inner, &code);
        let status = write_string(out_json, report.to_json().to_string());
        if status != PG_OK {
            return status;
        }
        if report.pass() {
            PG_OK
        } else {
            fail(PG_UNSOLVABLE, "verification failed at one or more sinks")
        }
    })
}
