//! C ABI over `eikonal-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free`. Every call returns an [`EikStatus`]; on failure the
//! message is available from [`eik_last_error`]. Strings returned by the
//! library are freed with [`eik_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eikonal_core::scenario_file::parse_scenario;
use eikonal_core::scenarios::{builtin_setup, run_scenario, Resolution, Setup};
use eikonal_core::dirichlet::solve_weighted;
use eikonal_core::{Error, Quadrature, Solution, WeightedGraph};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EikStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    UnknownScenario = 4,
    Io = 5,
    /// Graph, boundary or field rejected by the solver.
    Model = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A scenario: graph, weight field, boundary data and null sets.
pub struct EikScenario {
    setup: Setup,
}

/// Lax solution on a scenario's graph.
pub struct EikSolution {
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> EikStatus {
    match e {
        Error::Parse(_) => EikStatus::Parse,
        Error::UnknownScenario(_) => EikStatus::UnknownScenario,
        Error::Io(_) => EikStatus::Io,
        Error::InvalidParameter(_) | Error::UnknownVertex(_) => EikStatus::InvalidArgument,
        _ => EikStatus::Model,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EikStatus, String)>) -> EikStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EikStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EikStatus::Panic
        }
    }
}

fn lift<T>(r: eikonal_core::Result<T>) -> Result<T, (EikStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EikStatus, String) {
    (EikStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EikStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EikStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), (EikStatus, String)> {
    if written.is_null() {
        return Err(null("written"));
    }
    *written = values.len();
    if len < values.len() {
        return Err((
            EikStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

fn quadrature(density: f64) -> Result<Quadrature, (EikStatus, String)> {
    if density == 0.0 {
        Ok(Quadrature::default())
    } else if density > 0.0 && density.is_finite() {
        Ok(Quadrature::with_density(density))
    } else {
        Err((EikStatus::InvalidArgument, format!("quadrature density {density}")))
    }
}

/// Message of the last failed call on this thread, or NULL. Free with
/// [`eik_string_free`].
#[no_mangle]
pub extern "C" fn eik_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eik_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a registered scenario. `h <= 0` selects its default resolution.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_scenario_builtin(name: *const c_char, h: f64, out: *mut *mut EikScenario) -> EikStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = text(name, "name")?;
        let res = Resolution {
            h: (h > 0.0).then_some(h),
            ..Resolution::default()
        };
        let setup = lift(builtin_setup(name, &res))?;
        *out = Box::into_raw(Box::new(EikScenario { setup }));
        Ok(())
    })
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_scenario_from_json(json: *const c_char, out: *mut *mut EikScenario) -> EikStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let setup = lift(parse_scenario(text(json, "json")?))?;
        *out = Box::into_raw(Box::new(EikScenario { setup }));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eik_scenario_free(s: *mut EikScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live scenario handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_scenario_vertex_count(s: *const EikScenario, count: *mut usize) -> EikStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let count = count.as_mut().ok_or_else(|| null("count"))?;
        *count = s.setup.graph.vertex_count();
        Ok(())
    })
}

/// Writes the first two coordinates of vertex `v` to `xy[0..2]`.
///
/// # Safety
/// `s` must be a live scenario handle; `xy` must point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eik_scenario_vertex_xy(s: *const EikScenario, v: usize, xy: *mut f64) -> EikStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if xy.is_null() {
            return Err(null("xy"));
        }
        let g = &s.setup.graph;
        if v >= g.vertex_count() {
            return Err((EikStatus::InvalidArgument, format!("vertex {v} out of range")));
        }
        let c = g.vertex(v).coords;
        *xy = c[0];
        *xy.add(1) = c[1];
        Ok(())
    })
}

/// Optical distances `L_f(source, .)` for every vertex. Sets `written` to the
/// vertex count even when the buffer is too small.
///
/// # Safety
/// `s` must be a live scenario handle; `buf` must hold `len` doubles;
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_optical_from_vertex(
    s: *const EikScenario,
    source: usize,
    quad_density: f64,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> EikStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let quad = quadrature(quad_density)?;
        let wg = WeightedGraph::new(&s.setup.graph, &s.setup.f, &quad);
        let table = lift(wg.from_sources(&[source], None))?;
        copy_out(&table.dist, buf, len, written)
    })
}

/// Solves the scenario's Dirichlet problem by the Lax formula.
/// `quad_density == 0` selects the default quadrature.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_solve(s: *const EikScenario, quad_density: f64, out: *mut *mut EikSolution) -> EikStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let quad = quadrature(quad_density)?;
        let problem = lift(s.setup.problem())?;
        let wg = problem.weighted(&quad);
        let solution = lift(solve_weighted(&problem, &wg))?;
        *out = Box::into_raw(Box::new(EikSolution { solution }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eik_solution_free(sol: *mut EikSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Copies `u` into `buf`; `+inf` marks vertices with no finite path to the
/// boundary.
///
/// # Safety
/// `sol` must be a live solution handle; `buf` must hold `len` doubles;
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_solution_values(
    sol: *const EikSolution,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> EikStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        copy_out(&sol.solution.u, buf, len, written)
    })
}

/// Whether boundary vertex `v` keeps its data (`u(v) = g(v)`).
///
/// # Safety
/// `sol` must be a live solution handle; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_solution_in_sigma(sol: *const EikSolution, v: usize, result: *mut bool) -> EikStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        let result = result.as_mut().ok_or_else(|| null("result"))?;
        if v >= sol.solution.u.len() {
            return Err((EikStatus::InvalidArgument, format!("vertex {v} out of range")));
        }
        *result = sol.solution.in_sigma(v);
        Ok(())
    })
}

/// Largest `u(x) - u(y) - L_f(x, y)` over edges, clamped at 0, and whether
/// the boundary data were compatible.
///
/// # Safety
/// `sol` must be a live solution handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn eik_solution_diagnostics(
    sol: *const EikSolution,
    lax_violation: *mut f64,
    compatible: *mut bool,
) -> EikStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        let lax = lax_violation.as_mut().ok_or_else(|| null("lax_violation"))?;
        let compatible = compatible.as_mut().ok_or_else(|| null("compatible"))?;
        *lax = sol.solution.diagnostics.lax_inequality_max_violation;
        *compatible = sol.solution.diagnostics.compatibility_ok;
        Ok(())
    })
}

/// Runs a registered scenario with its checks. `report_json` receives the
/// report (free with [`eik_string_free`]); it may be NULL.
///
/// # Safety
/// `name` must be a NUL-terminated string; `pass` must be writable;
/// `report_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn eik_run_scenario(name: *const c_char, pass: *mut bool, report_json: *mut *mut c_char) -> EikStatus {
    guard(|| {
        let name = text(name, "name")?;
        let pass = pass.as_mut().ok_or_else(|| null("pass"))?;
        let run = lift(run_scenario(name, &Resolution::default()))?;
        *pass = run.report.pass();
        if !report_json.is_null() {
            let json = serde_json::to_string(&run.report).map_err(|e| (EikStatus::Io, e.to_string()))?;
            *report_json = CString::new(json)
                .map_err(|e| (EikStatus::Io, e.to_string()))?
                .into_raw();
        }
        Ok(())
    })
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn eik_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Parse("x".into())), EikStatus::Parse);
        assert_eq!(status_of(&Error::EmptyBoundary), EikStatus::Model);
        assert_eq!(status_of(&Error::UnknownScenario("x".into())), EikStatus::UnknownScenario);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), EikStatus::Panic);
        let msg = eik_last_error();
        assert_eq!(unsafe { CStr::from_ptr(msg) }.to_str().unwrap(), "internal panic");
        unsafe { eik_string_free(msg) };
        assert_eq!(guard(|| Ok(())), EikStatus::Ok);
        assert!(eik_last_error().is_null());
    }
}
