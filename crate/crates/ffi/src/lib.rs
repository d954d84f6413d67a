//! C ABI for `refmaps`.
//!
//! Fallible functions return a [`RefmapsStatus`]; the message of the last
//! failure on the calling thread is available from [`refmaps_last_error`].
//! Problems and solutions are opaque handles released with their `_free`
//! function. Panics never unwind into the caller: they are reported as
//! `REFMAPS_STATUS_PANIC`.
//!
//! Array layouts are row-major with row 0 at the top. Images are passed one
//! channel plane after another; normals as interleaved `x, y, z` triples.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use refmaps::io::Dataset;
use refmaps::{
    lift_field, Correspondence, CorrespondenceSet, Error, MultiViewProblem, NormalField, Pixel, PixelDomain,
    ScalarField, Solution, SolverConfig, View,
};

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefmapsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidNormal = 4,
    InvalidProblem = 5,
    NumericalFailure = 6,
    Degenerate = 7,
    Unsupported = 8,
    Io = 9,
    Format = 10,
    InvalidSpec = 11,
    Panic = 12,
}

/// Solver settings; start from `refmaps_config_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefmapsConfig {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub rel_energy_tol: f64,
    pub cg_tol: f64,
    pub max_outer_iters: u32,
    /// 0 picks the solver's default.
    pub cg_max_iters: u32,
    pub threads: u32,
    pub normalize: bool,
}

/// A multi-view problem under construction or loaded from disk.
pub struct RefmapsProblem {
    channels: usize,
    views: Vec<View>,
    // Insertion order is kept: it fixes the consistency term's summation order.
    correspondences: Vec<Correspondence>,
    seen: BTreeSet<Correspondence>,
}

/// Output of `refmaps_solve`.
pub struct RefmapsSolution {
    solution: Solution,
    domains: Vec<PixelDomain>,
}

struct Failure(RefmapsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidNormal { .. } => RefmapsStatus::InvalidNormal,
            Error::DimensionMismatch(_) => RefmapsStatus::DimensionMismatch,
            Error::InvalidArgument(_) => RefmapsStatus::InvalidArgument,
            Error::InvalidProblem(_) => RefmapsStatus::InvalidProblem,
            Error::NumericalFailure { .. } => RefmapsStatus::NumericalFailure,
            Error::DegenerateView { .. } | Error::Degenerate(_) => RefmapsStatus::Degenerate,
            Error::UnsupportedInput(_) => RefmapsStatus::Unsupported,
            Error::InvalidSpec(_) => RefmapsStatus::InvalidSpec,
            Error::Format { .. } => RefmapsStatus::Format,
            Error::Io { .. } => RefmapsStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RefmapsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RefmapsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            RefmapsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RefmapsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: String) -> Failure {
    Failure(RefmapsStatus::InvalidArgument, message)
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn refmaps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn refmaps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default settings for the given smoothness and consistency weights.
#[no_mangle]
pub extern "C" fn refmaps_config_default(lambda: f64, mu: f64) -> RefmapsConfig {
    let c = SolverConfig::new(lambda, mu);
    RefmapsConfig {
        lambda: c.lambda,
        mu: c.mu,
        delta: c.delta,
        rel_energy_tol: c.rel_energy_tol,
        cg_tol: c.cg_tol,
        max_outer_iters: c.max_outer_iters as u32,
        cg_max_iters: 0,
        threads: c.threads as u32,
        normalize: c.normalize,
    }
}

impl From<&RefmapsConfig> for SolverConfig {
    fn from(c: &RefmapsConfig) -> Self {
        SolverConfig {
            lambda: c.lambda,
            mu: c.mu,
            delta: c.delta,
            max_outer_iters: c.max_outer_iters as usize,
            rel_energy_tol: c.rel_energy_tol,
            cg_max_iters: (c.cg_max_iters > 0).then_some(c.cg_max_iters as usize),
            cg_tol: c.cg_tol,
            normalize: c.normalize,
            threads: c.threads as usize,
        }
    }
}

/// Huber loss of `x` with threshold `delta`.
#[no_mangle]
pub extern "C" fn refmaps_huber(x: f64, delta: f64) -> f64 {
    refmaps::huber(x, delta)
}

/// Quadratic majorant of the Huber loss anchored at `x0`, evaluated at `x`.
#[no_mangle]
pub extern "C" fn refmaps_huber_majorant(x: f64, x0: f64, delta: f64) -> f64 {
    refmaps::huber_majorant(x, x0, delta)
}

/// Lifts the unit normal `n[3]` to the 9-vector `out[9]`.
///
/// # Safety
/// `n` must point to 3 readable doubles and `out` to 9 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn refmaps_lift_normal(n: *const f64, out: *mut f64) -> RefmapsStatus {
    guard(|| {
        let n = slice(n, 3, "n")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let nu = refmaps::lift_normal([n[0], n[1], n[2]])?;
        std::slice::from_raw_parts_mut(out, 9).copy_from_slice(&nu);
        Ok(())
    })
}

/// Creates an empty problem with 1 or 3 channels.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with `refmaps_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_new(channels: u32, out: *mut *mut RefmapsProblem) -> RefmapsStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if channels != 1 && channels != 3 {
            return Err(invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        *out = Box::into_raw(Box::new(RefmapsProblem {
            channels: channels as usize,
            views: Vec::new(),
            correspondences: Vec::new(),
            seen: BTreeSet::new(),
        }));
        Ok(())
    })
}

/// Loads a dataset directory (or its manifest file) written by the
/// `refmaps` tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_load(path: *const c_char, out: *mut *mut RefmapsProblem) -> RefmapsStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not valid UTF-8".into()))?;
        let ds = Dataset::load(Path::new(path))?;
        let p = ds.problem;
        let correspondences = p.correspondences().entries().to_vec();
        *out = Box::into_raw(Box::new(RefmapsProblem {
            channels: p.channels(),
            views: p.views().to_vec(),
            seen: correspondences.iter().copied().collect(),
            correspondences,
        }));
        Ok(())
    })
}

/// Releases a problem; NULL is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_free(problem: *mut RefmapsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Appends a view. `mask` holds `width·height` bytes (nonzero = inside),
/// `images` `channels·width·height` doubles, one plane per channel, and
/// `normals` `3·width·height` doubles. Values outside the mask are ignored;
/// normals inside it must have unit length.
///
/// # Safety
/// The arrays must have the stated lengths; `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_add_view(
    problem: *mut RefmapsProblem,
    width: usize,
    height: usize,
    mask: *const u8,
    images: *const f64,
    normals: *const f64,
) -> RefmapsStatus {
    guard(|| {
        let p = deref_mut(problem, "problem")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| invalid("image dimensions overflow".into()))?;
        let mask = slice(mask, n, "mask")?;
        let images = slice(images, n * p.channels, "images")?;
        let normals = slice(normals, n * 3, "normals")?;
        let domain = PixelDomain::new(width, height, mask.iter().map(|&m| m != 0).collect())?;
        let field = NormalField::new(
            domain.clone(),
            normals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        )?;
        let geometry = lift_field(&field)?;
        let planes = images
            .chunks_exact(n)
            .map(|plane| ScalarField::new(domain.clone(), plane.to_vec()))
            .collect::<refmaps::Result<Vec<_>>>()?;
        p.views.push(View::new(planes, geometry));
        Ok(())
    })
}

/// Declares that pixel `(row_a, col_a)` of view `view_a` and pixel
/// `(row_b, col_b)` of view `view_b` image the same surface point. Both
/// views must already have been added.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_add_correspondence(
    problem: *mut RefmapsProblem,
    view_a: usize,
    row_a: usize,
    col_a: usize,
    view_b: usize,
    row_b: usize,
    col_b: usize,
) -> RefmapsStatus {
    guard(|| {
        let p = deref_mut(problem, "problem")?;
        if view_a == view_b {
            return Err(invalid(format!("correspondence within view {view_a}")));
        }
        for v in [view_a, view_b] {
            if v >= p.views.len() {
                return Err(invalid(format!("view {v} has not been added")));
            }
        }
        let c = Correspondence::canonical(view_a, Pixel::new(row_a, col_a), view_b, Pixel::new(row_b, col_b));
        if !p.seen.insert(c) {
            return Err(invalid(format!("duplicate correspondence {c}")));
        }
        p.correspondences.push(c);
        Ok(())
    })
}

/// Number of views added so far.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_view_count(problem: *const RefmapsProblem, out: *mut usize) -> RefmapsStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(problem, "problem")?.views.len();
        Ok(())
    })
}

/// Channel count of the problem.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_channels(problem: *const RefmapsProblem, out: *mut usize) -> RefmapsStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(problem, "problem")?.channels;
        Ok(())
    })
}

/// Width and height of one view.
///
/// # Safety
/// `problem` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn refmaps_problem_view_size(
    problem: *const RefmapsProblem,
    view: usize,
    width: *mut usize,
    height: *mut usize,
) -> RefmapsStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let v = p
            .views
            .get(view)
            .ok_or_else(|| invalid(format!("view {view} out of range")))?;
        *deref_mut(width, "width")? = v.domain().width();
        *deref_mut(height, "height")? = v.domain().height();
        Ok(())
    })
}

/// Runs the solver on every channel.
///
/// # Safety
/// `problem` must be a live handle, `config` a valid pointer, and `out` a
/// valid pointer that receives a handle to free with `refmaps_solution_free`.
#[no_mangle]
pub unsafe extern "C" fn refmaps_solve(
    problem: *const RefmapsProblem,
    config: *const RefmapsConfig,
    out: *mut *mut RefmapsSolution,
) -> RefmapsStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let cfg = SolverConfig::from(deref(config, "config")?);
        let out = deref_mut(out, "out")?;
        let set = CorrespondenceSet::new(p.correspondences.clone())?;
        let problem = MultiViewProblem::new(p.channels, p.views.clone(), set)?;
        let solution = refmaps::solve(&problem, &cfg)?;
        *out = Box::into_raw(Box::new(RefmapsSolution {
            solution,
            domains: p.views.iter().map(|v| v.domain().clone()).collect(),
        }));
        Ok(())
    })
}

/// Releases a solution; NULL is ignored.
///
/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn refmaps_solution_free(solution: *mut RefmapsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

fn check_index(s: &RefmapsSolution, view: usize, channel: usize) -> Result<(), Failure> {
    if view >= s.domains.len() || channel >= s.solution.channels.len() {
        return Err(invalid(format!(
            "view {view}, channel {channel} out of range ({} views, {} channels)",
            s.domains.len(),
            s.solution.channels.len()
        )));
    }
    Ok(())
}

/// Copies one reflectance map (`width·height` doubles, 0 outside the mask)
/// into `out`, whose length `len` must match.
///
/// # Safety
/// `solution` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn refmaps_solution_reflectance(
    solution: *const RefmapsSolution,
    view: usize,
    channel: usize,
    out: *mut f64,
    len: usize,
) -> RefmapsStatus {
    guard(|| {
        let s = deref(solution, "solution")?;
        check_index(s, view, channel)?;
        let values = s.solution.reflectance(view, channel).values();
        if len != values.len() {
            return Err(Failure(
                RefmapsStatus::DimensionMismatch,
                format!("buffer holds {len} values, map has {}", values.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        Ok(())
    })
}

/// Copies one lighting vector into `out[9]`.
///
/// # Safety
/// `solution` must be a live handle and `out` must hold 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn refmaps_solution_lighting(
    solution: *const RefmapsSolution,
    view: usize,
    channel: usize,
    out: *mut f64,
) -> RefmapsStatus {
    guard(|| {
        let s = deref(solution, "solution")?;
        check_index(s, view, channel)?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, 9).copy_from_slice(&s.solution.lighting(view, channel).0);
        Ok(())
    })
}

/// Outer iterations run, final total energy and whether the relative-energy
/// criterion stopped the solver, for one channel. Any output may be NULL.
///
/// # Safety
/// `solution` must be a live handle; non-NULL outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn refmaps_solution_summary(
    solution: *const RefmapsSolution,
    channel: usize,
    iterations: *mut usize,
    energy: *mut f64,
    converged: *mut bool,
) -> RefmapsStatus {
    guard(|| {
        let s = deref(solution, "solution")?;
        check_index(s, 0, channel)?;
        let ch = &s.solution.channels[channel];
        let last = ch.trace.last();
        if let Some(i) = iterations.as_mut() {
            *i = last.map_or(0, |r| r.iteration);
        }
        if let Some(e) = energy.as_mut() {
            *e = last.map_or(f64::NAN, |r| r.energy.total);
        }
        if let Some(c) = converged.as_mut() {
            *c = ch.converged;
        }
        Ok(())
    })
}
