//! C interface to the malab laboratory.
//!
//! Every fallible call returns a [`MalabStatus`]; on failure the message is
//! available from [`malab_last_error`] on the same thread. Fields are opaque
//! handles released with [`malab_field_free`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use malab::field::{radial_solution, Anchor};
use malab::grid::DiscGrid;
use malab::homogeneous::period_integral;
use malab::masolver::{solve, Boundary, DirichletProblem, Rhs, SolverOptions};
use malab::sections::{classify_behavior, eccentricity_trace, ClassifierOptions, SectionKind, Verdict};
use malab::{Error, Regime, ScalarField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Parameters outside the domain of the operation.
    Domain = 3,
    /// The grid is too coarse for the request.
    Resolution = 4,
    /// An iteration did not converge.
    Iteration = 5,
    Io = 6,
    Parse = 7,
    /// Quadrature, fitting or linear algebra failure.
    Numerical = 8,
    /// A panic was caught at the boundary.
    Panic = 9,
}

impl From<&Error> for MalabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::OutOfDomain { .. } | Error::EmptyPositivitySet { .. } | Error::GridMismatch(_) => {
                MalabStatus::Domain
            }
            Error::Resolution(_) | Error::Truncation { .. } => MalabStatus::Resolution,
            Error::Iteration { .. } => MalabStatus::Iteration,
            Error::Io { .. } => MalabStatus::Io,
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => MalabStatus::Parse,
            Error::Degeneracy(_) | Error::Accuracy { .. } | Error::Fit(_) | Error::LinearSolve(_) => {
                MalabStatus::Numerical
            }
        }
    }
}

/// Constants of the exponent `alpha`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MalabRegime {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_alpha: f64,
    pub j0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MalabSolveSummary {
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub convexity_margin: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalabVerdictKind {
    Radial = 0,
    NonRadial = 1,
    Inconclusive = 2,
}

/// Section-based classification. Fields that do not apply to the verdict
/// are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MalabVerdict {
    pub kind: MalabVerdictKind,
    pub c_fit: f64,
    pub big_c_fit: f64,
    pub a: f64,
    /// Slope of log(axis ratio) against log(1/t) over the fit window.
    pub slope: f64,
    pub max_eccentricity: f64,
    pub sections: usize,
}

/// Opaque scalar field on a disc grid.
pub struct MalabField {
    inner: ScalarField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MalabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MalabStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MalabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MalabStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MalabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MalabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MalabStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn field_ref<'a>(f: *const MalabField) -> Result<&'a ScalarField, Failure> {
    f.as_ref().map(|f| &f.inner).ok_or_else(|| null("field"))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

fn new_handle(inner: ScalarField) -> *mut MalabField {
    Box::into_raw(Box::new(MalabField { inner }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn malab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn malab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_regime(alpha: f64, out: *mut MalabRegime) -> MalabStatus {
    guard(|| {
        let r = Regime::new(alpha)?;
        write(
            out,
            MalabRegime {
                alpha: r.alpha,
                beta: r.beta,
                gamma: r.gamma,
                c_alpha: r.c_alpha,
                j0: r.j0,
            },
            "out",
        )
    })
}

/// Period integral `I_c` of the homogeneous-profile equation.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_period_integral(alpha: f64, c: f64, out: *mut f64) -> MalabStatus {
    guard(|| {
        let r = Regime::new(alpha)?;
        write(out, period_integral(c, &r)?, "out")
    })
}

/// Decay exponent of the `cos 2 theta` mode of the linearized operator
/// (`alpha > 0`).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_rho_exponent(alpha: f64, out: *mut f64) -> MalabStatus {
    guard(|| {
        let r = Regime::new(alpha)?;
        write(out, malab::experiments::rho_exponent(&r)?, "out")
    })
}

/// The radial solution `c_alpha |x|^beta` sampled on an `n x n` grid of the
/// unit disc.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_field_radial(alpha: f64, n: usize, out: *mut *mut MalabField) -> MalabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = Regime::new(alpha)?;
        let g = DiscGrid::cartesian(n, 1.0)?;
        out.write(new_handle(radial_solution(&r, g)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_field_load(path: *const c_char, out: *mut *mut MalabField) -> MalabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = path_arg(path)?;
        out.write(new_handle(ScalarField::load(p)?));
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn malab_field_save(field: *const MalabField, path: *const c_char) -> MalabStatus {
    guard(|| {
        let f = field_ref(field)?;
        f.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn malab_field_free(field: *mut MalabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of nodes; 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn malab_field_len(field: *const MalabField) -> usize {
    field.as_ref().map_or(0, |f| f.inner.values.len())
}

/// Copies the node values (row-major, NaN outside the disc) into `buf`,
/// which must hold `malab_field_len(field)` values.
///
/// # Safety
/// `field` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn malab_field_copy_values(field: *const MalabField, buf: *mut f64, len: usize) -> MalabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < f.values.len() {
            return Err(invalid(format!("buffer holds {len} values, field has {}", f.values.len())));
        }
        ptr::copy_nonoverlapping(f.values.as_ptr(), buf, f.values.len());
        Ok(())
    })
}

/// Interpolated value at `(x, y)`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_field_sample(field: *const MalabField, x: f64, y: f64, out: *mut f64) -> MalabStatus {
    guard(|| {
        let f = field_ref(field)?;
        write(out, f.sample([x, y])?, "out")
    })
}

/// The invariant `J = Delta u (r^2 u_rr)^gamma` at `(x, y)`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_j_value(
    field: *const MalabField,
    alpha: f64,
    x: f64,
    y: f64,
    out: *mut f64,
) -> MalabStatus {
    guard(|| {
        let f = field_ref(field)?;
        let r = Regime::new(alpha)?;
        write(out, malab::invariants::j_value(f, [x, y], &r)?, "out")
    })
}

/// Solves `det D^2 u = c |x|^alpha` on an `n x n` grid of the unit disc.
///
/// `boundary` holds `n_boundary` values at equally spaced angles
/// `2 pi k / n_boundary`; NULL selects the radial data `c_alpha` (scaled by
/// `sqrt(c)`). `tol <= 0` keeps the default tolerance. `summary` may be NULL.
///
/// # Safety
/// `boundary` must be NULL or valid for `n_boundary` reads, `out` valid for
/// writes and `summary` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_solve(
    alpha: f64,
    c: f64,
    n: usize,
    boundary: *const f64,
    n_boundary: usize,
    tol: f64,
    out: *mut *mut MalabField,
    summary: *mut MalabSolveSummary,
) -> MalabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(c > 0.0) {
            return Err(invalid(format!("c must be positive, got {c}")));
        }
        let reg = Regime::new(alpha)?;
        let bc = if boundary.is_null() {
            let v = reg.c_alpha * c.sqrt();
            Boundary::from_fn(move |_| v)
        } else {
            if n_boundary < 3 {
                return Err(invalid("need at least 3 boundary samples"));
            }
            Boundary::Samples(std::slice::from_raw_parts(boundary, n_boundary).to_vec())
        };
        let problem = DirichletProblem::new(Rhs::Power { c, alpha }, bc, DiscGrid::cartesian(n, 1.0)?)?;
        let mut opts = SolverOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        let sol = solve(&problem, &opts)?;
        if !summary.is_null() {
            summary.write(MalabSolveSummary {
                residual_sup: sol.residual_sup,
                iterations: sol.iterations,
                converged: sol.converged,
                convexity_margin: sol.convexity_margin,
            });
        }
        out.write(new_handle(sol.field));
        Ok(())
    })
}

/// Classifies the behavior of `field` at its degenerate point from
/// `n_t` log-spaced section heights between `t_hi` and `t_lo`.
///
/// The field is anchored at its minimizer for `alpha > 0` and at the origin
/// otherwise; centered sections are used for `alpha <= -1`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn malab_classify(
    field: *const MalabField,
    alpha: f64,
    t_hi: f64,
    t_lo: f64,
    n_t: usize,
    out: *mut MalabVerdict,
) -> MalabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(t_hi > t_lo && t_lo > 0.0) || n_t < 2 {
            return Err(invalid("need t_hi > t_lo > 0 and n_t >= 2"));
        }
        let reg = Regime::new(alpha)?;
        let anchor = if alpha > 0.0 { Anchor::Minimizer } else { Anchor::Origin };
        let (anchored, info) = f.anchored(anchor)?;
        let ts = malab::experiments::log_range(t_hi, t_lo, n_t);
        let trace = eccentricity_trace(&anchored, info.point, &ts, SectionKind::default_for(&reg))?;
        let report = classify_behavior(&trace, &reg, &ClassifierOptions::default())?;
        let mut v = MalabVerdict {
            kind: MalabVerdictKind::Inconclusive,
            c_fit: f64::NAN,
            big_c_fit: f64::NAN,
            a: f64::NAN,
            slope: report.fit.slope,
            max_eccentricity: report.max_eccentricity,
            sections: trace.points.len(),
        };
        match report.verdict {
            Verdict::Radial { c_fit, big_c_fit } => {
                v.kind = MalabVerdictKind::Radial;
                v.c_fit = c_fit;
                v.big_c_fit = big_c_fit;
            }
            Verdict::NonRadial { a, .. } => {
                v.kind = MalabVerdictKind::NonRadial;
                v.a = a;
            }
            Verdict::Inconclusive { .. } => {}
        }
        out.write(v);
        Ok(())
    })
}
