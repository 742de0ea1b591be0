//! C interface to `omegascale`.
//!
//! Every fallible function returns an [`OsStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`os_last_error`]. Handles are opaque and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use omegascale::classical_scale::ClassicalScale;
use omegascale::fluctuation::{ExitKind, ExitQuery, FluctuationSolver};
use omegascale::omega_scale::{build_w_omega, OmegaScaleTable, OmegaSpec, SolverSettings};
use omegascale::{Error, LevyModel, ModelSpec};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad parameters, malformed JSON, invalid UTF-8.
    InvalidInput = 2,
    /// Query outside the domain of the function (x > c, outside the table).
    Domain = 3,
    /// Solver or series failure.
    Numeric = 4,
    NotConverged = 5,
    Panic = 6,
}

/// Exit transforms, in the order of the Rust enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsExitKind {
    TwoSidedUp = 0,
    TwoSidedDown = 1,
    OneSidedDown = 2,
    OneSidedUp = 3,
    ReflectedUp = 4,
    ReflectedDual = 5,
}

impl From<OsExitKind> for ExitKind {
    fn from(k: OsExitKind) -> Self {
        match k {
            OsExitKind::TwoSidedUp => ExitKind::TwoSidedUp,
            OsExitKind::TwoSidedDown => ExitKind::TwoSidedDown,
            OsExitKind::OneSidedDown => ExitKind::OneSidedDown,
            OsExitKind::OneSidedUp => ExitKind::OneSidedUp,
            OsExitKind::ReflectedUp => ExitKind::ReflectedUp,
            OsExitKind::ReflectedDual => ExitKind::ReflectedDual,
        }
    }
}

/// A Lévy model.
pub struct OsModel(LevyModel);

/// A killing-rate function ω.
pub struct OsOmega(OmegaSpec);

/// Tabulated 𝒲^(ω), 𝒵^(ω).
pub struct OsScaleTable(OmegaScaleTable);

/// Exit-problem solver bound to one model, ω and grid.
pub struct OsSolver(FluctuationSolver);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OsStatus {
    match e {
        e if e.is_config() => OsStatus::InvalidInput,
        Error::Domain(_) | Error::Ordering(_) | Error::OutsideWindow { .. } | Error::PanelTooLarge { .. } => {
            OsStatus::Domain
        }
        Error::NotConverged { .. } | Error::NoConvergence { .. } => OsStatus::NotConverged,
        _ => OsStatus::Numeric,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
    Utf8,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OsStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            OsStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8");
            OsStatus::InvalidInput
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            OsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn json_arg(s: *const c_char) -> Result<serde_json::Value, Fail> {
    if s.is_null() {
        return Err(Fail::Null("json"));
    }
    let text = CStr::from_ptr(s).to_str().map_err(|_| Fail::Utf8)?;
    serde_json::from_str(text).map_err(|e| Fail::Lib(Error::Config(e.to_string())))
}

/// Message of the last failure on this thread, empty after a success. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn os_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Brownian motion with drift `mu` and volatility `sigma`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_model_brownian(mu: f64, sigma: f64, out: *mut *mut OsModel) -> OsStatus {
    guard(|| {
        let m = LevyModel::brownian(mu, sigma)?;
        put(out, Box::into_raw(Box::new(OsModel(m))), "out")
    })
}

/// Cramér–Lundberg with premium rate `mu`, claim intensity `vartheta`, Exp(`rho`) claims.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_model_cramer_lundberg(
    mu: f64,
    vartheta: f64,
    rho: f64,
    out: *mut *mut OsModel,
) -> OsStatus {
    guard(|| {
        let m = LevyModel::cramer_lundberg(mu, vartheta, rho)?;
        put(out, Box::into_raw(Box::new(OsModel(m))), "out")
    })
}

/// Model from the JSON form used in CLI configs. Relative table paths
/// resolve against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_model_from_json(json: *const c_char, out: *mut *mut OsModel) -> OsStatus {
    guard(|| {
        let spec: ModelSpec =
            serde_json::from_value(json_arg(json)?).map_err(|e| Fail::Lib(Error::Config(e.to_string())))?;
        let m = spec.build(None)?;
        put(out, Box::into_raw(Box::new(OsModel(m))), "out")
    })
}

/// # Safety
/// `model` must come from an `os_model_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn os_model_free(model: *mut OsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// ψ(θ).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_model_psi(model: *const OsModel, theta: f64, out: *mut f64) -> OsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        put(out, m.0.psi(theta)?, "out")
    })
}

/// Classical W^(q)(x) and Z^(q)(x). Either out-pointer may be null.
///
/// # Safety
/// `model` must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_classical_scale(
    model: *const OsModel,
    q: f64,
    x: f64,
    w_out: *mut f64,
    z_out: *mut f64,
) -> OsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = ClassicalScale::new(&m.0, q)?;
        if !w_out.is_null() {
            w_out.write(s.w(x));
        }
        if !z_out.is_null() {
            z_out.write(s.z(x));
        }
        Ok(())
    })
}

/// ω ≡ q.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_omega_constant(q: f64, out: *mut *mut OsOmega) -> OsStatus {
    guard(|| put(out, Box::into_raw(Box::new(OsOmega(OmegaSpec::constant(q)?))), "out"))
}

/// ω = p + q·1{a < x < b}; pass `b = INFINITY` for a half-line.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_omega_band(p: f64, q: f64, a: f64, b: f64, out: *mut *mut OsOmega) -> OsStatus {
    guard(|| put(out, Box::into_raw(Box::new(OsOmega(OmegaSpec::band(p, q, a, b)?))), "out"))
}

/// ω from the JSON form used in CLI configs.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn os_omega_from_json(json: *const c_char, out: *mut *mut OsOmega) -> OsStatus {
    guard(|| {
        let o = OmegaSpec::from_json(&json_arg(json)?)?;
        put(out, Box::into_raw(Box::new(OsOmega(o))), "out")
    })
}

/// # Safety
/// `omega` must come from an `os_omega_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn os_omega_free(omega: *mut OsOmega) {
    if !omega.is_null() {
        drop(Box::from_raw(omega));
    }
}

/// Solve for 𝒲^(ω), 𝒵^(ω) on `[0, x_max]` with step `h`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_scale_table_build(
    model: *const OsModel,
    omega: *const OsOmega,
    x_max: f64,
    h: f64,
    out: *mut *mut OsScaleTable,
) -> OsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let o = deref(omega, "omega")?;
        let t = build_w_omega(&m.0, &o.0, &SolverSettings::new(x_max, h))?;
        put(out, Box::into_raw(Box::new(OsScaleTable(t))), "out")
    })
}

/// 𝒲^(ω)(x) and 𝒵^(ω)(x). Either out-pointer may be null.
///
/// # Safety
/// `table` must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_scale_table_eval(
    table: *const OsScaleTable,
    x: f64,
    w_out: *mut f64,
    z_out: *mut f64,
) -> OsStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let (w, z) = (t.0.w(x)?, t.0.z(x)?);
        if !w_out.is_null() {
            w_out.write(w);
        }
        if !z_out.is_null() {
            z_out.write(z);
        }
        Ok(())
    })
}

/// Number of grid nodes; 0 for a null handle.
///
/// # Safety
/// `table` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn os_scale_table_len(table: *const OsScaleTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.grid().nodes().len())
}

/// Copy up to `cap` rows of (x, 𝒲, 𝒵) into the three arrays; `written`
/// receives the row count. Null arrays are skipped.
///
/// # Safety
/// Non-null arrays must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn os_scale_table_copy(
    table: *const OsScaleTable,
    x: *mut f64,
    w: *mut f64,
    z: *mut f64,
    cap: usize,
    written: *mut usize,
) -> OsStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let nodes = t.0.grid().nodes();
        let n = nodes.len().min(cap);
        for (i, &xi) in nodes.iter().take(n).enumerate() {
            if !x.is_null() {
                x.add(i).write(xi);
            }
            if !w.is_null() {
                w.add(i).write(t.0.w(xi)?);
            }
            if !z.is_null() {
                z.add(i).write(t.0.z(xi)?);
            }
        }
        put(written, n, "written")
    })
}

/// # Safety
/// `table` must come from [`os_scale_table_build`] or be null.
#[no_mangle]
pub unsafe extern "C" fn os_scale_table_free(table: *mut OsScaleTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Solver for exit transforms. Tables are built lazily per barrier and cached.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_solver_new(
    model: *const OsModel,
    omega: *const OsOmega,
    x_max: f64,
    h: f64,
    out: *mut *mut OsSolver,
) -> OsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let o = deref(omega, "omega")?;
        if !(h > 0.0 && x_max > 0.0) {
            return Err(Fail::Lib(Error::Config(format!("need x_max > 0 and h > 0, got {x_max}, {h}"))));
        }
        let s = FluctuationSolver::new(m.0.clone(), o.0.clone(), SolverSettings::new(x_max, h));
        put(out, Box::into_raw(Box::new(OsSolver(s))), "out")
    })
}

/// Exit transform of `kind` from `x` for the barriers `z <= x <= c`. For
/// [`OsExitKind::OneSidedDown`] the survival part goes to `survive`, which
/// may be null; it is NaN for the other kinds.
///
/// # Safety
/// `solver` and `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn os_solver_exit(
    solver: *const OsSolver,
    kind: OsExitKind,
    x: f64,
    c: f64,
    z: f64,
    value: *mut f64,
    survive: *mut f64,
) -> OsStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        let v = s.0.exit(&ExitQuery { x, c, z, kind: kind.into() })?;
        put(value, v.value, "value")?;
        if !survive.is_null() {
            survive.write(v.survive.unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// # Safety
/// `solver` must come from [`os_solver_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn os_solver_free(solver: *mut OsSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}
