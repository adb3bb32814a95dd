//! C ABI over `graphon-lab`.
//!
//! Results live behind opaque handles that the caller releases with the
//! matching `*_free` function. Every fallible call returns a [`GlStatus`];
//! the message of the most recent failure on the calling thread is available
//! from [`gl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graphon_lab::bipodal::OddCycle;
use graphon_lab::grid::{self, GridGraphon, OracleOptions};
use graphon_lab::optimizer::{self, Regime, SolveOptions, SolverReport};
use graphon_lab::sampler::{self, SampledGraph, Source};
use graphon_lab::series::{self, SeriesPrediction};
use graphon_lab::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Convergence = 3,
    Format = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlRegime {
    Below = 0,
    Above = 1,
    Boundary = 2,
}

/// Solved bipodal graphon.
pub struct GlReport(SolverReport);

/// Discretized graphon.
pub struct GlGrid(GridGraphon);

/// Sampled finite graph.
pub struct GlGraph(SampledGraph);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    pub entropy: f64,
    pub grad_norm: f64,
    pub residual_eps: f64,
    pub residual_tau: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlSeries {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    pub entropy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> GlStatus {
    match err {
        Error::Io(_) => GlStatus::Io,
        Error::Format(_) => GlStatus::Format,
        e if e.is_convergence_failure() => GlStatus::Convergence,
        _ => GlStatus::Domain,
    }
}

fn guard<F: FnOnce() -> Result<(), GlStatus>>(f: F) -> GlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside graphon-lab".into());
            GlStatus::Panic
        }
    }
}

fn check<T>(r: graphon_lab::Result<T>) -> Result<T, GlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn cycle(k: u32) -> Result<OddCycle, GlStatus> {
    check(OddCycle::new(k))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, GlStatus> {
    // SAFETY: caller passes null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error("null pointer argument".into());
        GlStatus::NullPointer
    })
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), GlStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(GlStatus::NullPointer);
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`) and returns the full message length, or 0 if none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: buf holds at least len bytes and n + 1 <= len.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Maximizes entropy at edge density `e` and `k`-cycle density `t`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_solve(e: f64, t: f64, k: u32, out: *mut *mut GlReport) -> GlStatus {
    guard(|| {
        let r = check(optimizer::solve(e, t, cycle(k)?, &SolveOptions::default()))?;
        unsafe { store(out, boxed(GlReport(r))) }
    })
}

/// Solves below the curve at `t = e^k - delta^k`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_solve_below(e: f64, delta: f64, k: u32, out: *mut *mut GlReport) -> GlStatus {
    guard(|| {
        let r = check(optimizer::solve_below(e, delta, cycle(k)?, &SolveOptions::default()))?;
        unsafe { store(out, boxed(GlReport(r))) }
    })
}

/// Solves above the curve at `t = e^k + dtau`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_solve_above(e: f64, dtau: f64, k: u32, out: *mut *mut GlReport) -> GlStatus {
    guard(|| {
        let r = check(optimizer::solve_above(e, dtau, cycle(k)?, &SolveOptions::default()))?;
        unsafe { store(out, boxed(GlReport(r))) }
    })
}

/// # Safety
/// `report` must come from a `gl_solve*` call; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_report_params(report: *const GlReport, out: *mut GlParams) -> GlStatus {
    guard(|| {
        let r = &unsafe { deref(report) }?.0;
        let g = &r.graphon;
        let p = GlParams {
            a: g.a(),
            b: g.b(),
            c: g.c(),
            d: g.d(),
            mu: r.mu,
            entropy: r.entropy,
            grad_norm: r.grad_norm,
            residual_eps: r.residual_eps,
            residual_tau: r.residual_tau,
            iterations: r.iterations as u64,
            converged: r.converged,
        };
        unsafe { store(out, p) }
    })
}

/// # Safety
/// `report` must come from a `gl_solve*` call; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_report_regime(report: *const GlReport, out: *mut GlRegime) -> GlStatus {
    guard(|| {
        let regime = match unsafe { deref(report) }?.0.regime {
            Regime::Below => GlRegime::Below,
            Regime::Above => GlRegime::Above,
            Regime::Boundary => GlRegime::Boundary,
        };
        unsafe { store(out, regime) }
    })
}

/// # Safety
/// `report` must be null or come from a `gl_solve*` call, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gl_report_free(report: *mut GlReport) {
    if !report.is_null() {
        // SAFETY: allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(report) });
    }
}

fn series_out(p: SeriesPrediction) -> GlSeries {
    GlSeries { a: p.a, b: p.b, c: p.c, d: p.d, mu: p.mu, entropy: p.entropy }
}

/// Truncated series below the curve.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_series_below(e: f64, delta: f64, k: u32, out: *mut GlSeries) -> GlStatus {
    guard(|| {
        let p = check(series::params_below(e, delta, cycle(k)?))?;
        unsafe { store(out, series_out(p)) }
    })
}

/// Truncated series above the curve.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_series_above(e: f64, dtau: f64, k: u32, out: *mut GlSeries) -> GlStatus {
    guard(|| {
        let p = check(series::params_above(e, dtau, cycle(k)?))?;
        unsafe { store(out, series_out(p)) }
    })
}

/// Discretizes a solved graphon on an `n x n` grid.
///
/// # Safety
/// `report` must come from a `gl_solve*` call; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_grid_from_report(report: *const GlReport, n: usize, out: *mut *mut GlGrid) -> GlStatus {
    guard(|| {
        let r = unsafe { deref(report) }?;
        let g = check(grid::from_bipodal(&r.0.graphon, n))?;
        unsafe { store(out, boxed(GlGrid(g.grid))) }
    })
}

/// Row-major `n x n` values, copied from `values`.
///
/// # Safety
/// `values` must hold `n * n` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_grid_new(n: usize, values: *const f64, out: *mut *mut GlGrid) -> GlStatus {
    guard(|| {
        if values.is_null() {
            set_error("null values".into());
            return Err(GlStatus::NullPointer);
        }
        let len = n.checked_mul(n).ok_or_else(|| {
            set_error("grid size overflows".into());
            GlStatus::Domain
        })?;
        // SAFETY: caller guarantees n * n readable doubles.
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let g = check(GridGraphon::from_values(n, v))?;
        unsafe { store(out, boxed(GlGrid(g))) }
    })
}

/// # Safety
/// `grid` must come from this library; `eps` and `tau` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_grid_densities(grid: *const GlGrid, k: u32, eps: *mut f64, tau: *mut f64) -> GlStatus {
    guard(|| {
        let g = unsafe { deref(grid) }?;
        let (x, t) = grid::grid_densities(&g.0, cycle(k)?);
        unsafe { store(eps, x) }?;
        unsafe { store(tau, t) }
    })
}

/// # Safety
/// `grid` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_grid_entropy(grid: *const GlGrid, out: *mut f64) -> GlStatus {
    guard(|| {
        let g = unsafe { deref(grid) }?;
        unsafe { store(out, grid::grid_entropy(&g.0)) }
    })
}

/// Maximizes grid entropy at `(e, t)` from `init` with default options.
///
/// # Safety
/// `init` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_oracle(init: *const GlGrid, e: f64, t: f64, k: u32, out: *mut *mut GlGrid) -> GlStatus {
    guard(|| {
        let g = unsafe { deref(init) }?;
        let r = check(grid::maximize_entropy(&g.0, e, t, cycle(k)?, &OracleOptions::default()))?;
        unsafe { store(out, boxed(GlGrid(r.grid))) }
    })
}

/// # Safety
/// `grid` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gl_grid_free(grid: *mut GlGrid) {
    if !grid.is_null() {
        // SAFETY: allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Draws a W-random graph on `n` vertices from a solved graphon.
///
/// # Safety
/// `report` must come from a `gl_solve*` call; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_sample(report: *const GlReport, n: usize, seed: u64, out: *mut *mut GlGraph) -> GlStatus {
    guard(|| {
        let r = unsafe { deref(report) }?;
        let g = check(sampler::sample_graph(&Source::from(r.0.graphon), n, seed))?;
        unsafe { store(out, boxed(GlGraph(g))) }
    })
}

/// Homomorphism density of an edge (`k = 2`) or odd cycle (`k <= 9`).
///
/// # Safety
/// `graph` must come from `gl_sample`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_graph_density(graph: *const GlGraph, k: u32, out: *mut f64) -> GlStatus {
    guard(|| {
        let g = unsafe { deref(graph) }?;
        let x = check(sampler::graph_densities(&g.0, k))?;
        unsafe { store(out, x) }
    })
}

/// # Safety
/// `graph` must come from `gl_sample`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gl_graph_edge_count(graph: *const GlGraph, out: *mut u64) -> GlStatus {
    guard(|| {
        let g = unsafe { deref(graph) }?;
        unsafe { store(out, g.0.edge_count()) }
    })
}

/// # Safety
/// `graph` must be null or come from `gl_sample`, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gl_graph_free(graph: *mut GlGraph) {
    if !graph.is_null() {
        // SAFETY: allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(graph) });
    }
}
