//! C ABI over the solver.
//!
//! Every fallible call returns an [`RtStatus`]. On failure a message is kept
//! per thread and can be read with [`rt_last_error_message`]. Handles are
//! opaque; each `*_new` / `rt_solve` must be paired with its `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rabi_triangle::analytic::{
    analytic_ground_state, classify_phase, critical_coupling, tricritical_point, MomentumMode, PhaseLabel,
};
use rabi_triangle::ed::{lowest_eigenpairs, LanczosOptions, Truncation};
use rabi_triangle::observables::{observe_solution, ObservableSet};
use rabi_triangle::{Error, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    NotConverged = 4,
    TruncationCap = 5,
    Instability = 6,
    DimensionMismatch = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtPhaseLabel {
    Incoherent = 0,
    NormalCoherent = 1,
    ChiralPlus = 2,
    ChiralMinus = 3,
}

/// `q_label` value for a state that carries no translation label.
pub const RT_Q_NONE: i32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtPhase {
    pub label: RtPhaseLabel,
    /// `k` in `q* = 2 pi k / 3`, one of -1, 0, 1.
    pub q_star: i32,
    pub g1c: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtObservables {
    pub energy: f64,
    pub n_photons: f64,
    pub current: f64,
    pub chirality: f64,
    pub parity: f64,
    /// `k` in `q = 2 pi k / 3`, or [`RT_Q_NONE`].
    pub q_label: i32,
    pub multiplet: usize,
}

/// Model parameters; `theta` is in radians.
pub struct RtParams(ModelParams);

/// Eigenpairs reduced to their observables.
pub struct RtSolution {
    observables: Vec<ObservableSet>,
    n_tr: usize,
    converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RtStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::Fit(_) => RtStatus::InvalidArgument,
        Error::Domain { .. } | Error::NotSymmetric { .. } => RtStatus::Domain,
        Error::NotConverged { .. } => RtStatus::NotConverged,
        Error::TruncationCap { .. } => RtStatus::TruncationCap,
        Error::Instability(_) => RtStatus::Instability,
        Error::DimensionMismatch { .. } => RtStatus::DimensionMismatch,
        Error::Io(_) | Error::Checkpoint(_) => RtStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RtStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RtStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

fn mode(q: i32) -> Result<MomentumMode, Fail> {
    match q {
        0 => Ok(MomentumMode::Zero),
        1 => Ok(MomentumMode::Plus),
        -1 => Ok(MomentumMode::Minus),
        _ => Err(Fail::Core(Error::Config(format!("momentum index {q} not in {{-1, 0, 1}}")))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rt_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn rt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rt_params_new(
    omega: f64,
    delta: f64,
    g1: f64,
    j: f64,
    theta: f64,
    out: *mut *mut RtParams,
) -> RtStatus {
    guard(|| {
        let p = ModelParams::new(omega, delta, g1, j, theta)?;
        put(out, Box::into_raw(Box::new(RtParams(p))), "out")
    })
}

/// # Safety
/// `p` must come from [`rt_params_new`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rt_params_free(p: *mut RtParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Infinite-frequency critical coupling `g1c(q)`, `q = 2 pi k / 3`.
///
/// # Safety
/// `p` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rt_critical_coupling(p: *const RtParams, k: i32, out: *mut f64) -> RtStatus {
    guard(|| {
        let p = get(p, "params")?;
        put(out, critical_coupling(&p.0, mode(k)?)?, "out")
    })
}

/// # Safety
/// `p` must be a live handle and both outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rt_tricritical_point(p: *const RtParams, theta_c: *mut f64, g_tc: *mut f64) -> RtStatus {
    guard(|| {
        let tc = tricritical_point(&get(p, "params")?.0);
        put(theta_c, tc.theta_c, "theta_c")?;
        put(g_tc, tc.g_tc, "g_tc")
    })
}

/// # Safety
/// `p` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rt_classify_phase(p: *const RtParams, out: *mut RtPhase) -> RtStatus {
    guard(|| {
        let c = classify_phase(&get(p, "params")?.0)?;
        let label = match c.label {
            PhaseLabel::Incoherent => RtPhaseLabel::Incoherent,
            PhaseLabel::NormalCoherent => RtPhaseLabel::NormalCoherent,
            PhaseLabel::ChiralPlus => RtPhaseLabel::ChiralPlus,
            PhaseLabel::ChiralMinus => RtPhaseLabel::ChiralMinus,
        };
        put(out, RtPhase { label, q_star: c.q_star.index(), g1c: c.g1c_at_theta }, "out")
    })
}

/// Ground energy of the phase selected by [`rt_classify_phase`].
///
/// # Safety
/// `p` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rt_analytic_ground_energy(p: *const RtParams, out: *mut f64) -> RtStatus {
    guard(|| put(out, analytic_ground_state(&get(p, "params")?.0)?.energy, "out"))
}

/// Lowest `k` eigenstates at photon cutoff `n_tr`. An unconverged solve still
/// returns a handle; check [`rt_solution_converged`].
///
/// # Safety
/// `p` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rt_solve(
    p: *const RtParams,
    n_tr: usize,
    k: usize,
    seed: u64,
    out: *mut *mut RtSolution,
) -> RtStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let opts = LanczosOptions { seed, ..LanczosOptions::default() };
        let sol = lowest_eigenpairs(p, Truncation::new(n_tr)?, k, &opts)?;
        let observables = observe_solution(&sol, p.theta())?;
        let handle = RtSolution { observables, n_tr: sol.n_tr_used, converged: sol.converged };
        put(out, Box::into_raw(Box::new(handle)), "out")
    })
}

/// # Safety
/// `s` must be a live solution handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rt_solution_count(s: *const RtSolution) -> usize {
    s.as_ref().map_or(0, |s| s.observables.len())
}

/// # Safety
/// `s` must be a live solution handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rt_solution_n_tr(s: *const RtSolution) -> usize {
    s.as_ref().map_or(0, |s| s.n_tr)
}

/// # Safety
/// `s` must be a live solution handle or NULL (returns false).
#[no_mangle]
pub unsafe extern "C" fn rt_solution_converged(s: *const RtSolution) -> bool {
    s.as_ref().is_some_and(|s| s.converged)
}

/// Observables of level `i`; degenerate levels come in the translation eigenbasis.
///
/// # Safety
/// `s` must be a live solution handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rt_solution_observables(s: *const RtSolution, i: usize, out: *mut RtObservables) -> RtStatus {
    guard(|| {
        let s = get(s, "solution")?;
        let o = s.observables.get(i).ok_or_else(|| {
            Fail::Core(Error::Config(format!("level {i} out of range (have {})", s.observables.len())))
        })?;
        let q_label = o.q.map_or(RT_Q_NONE, |q| q.index());
        let obs = RtObservables {
            energy: o.energy,
            n_photons: o.n_photons,
            current: o.current,
            chirality: o.chirality,
            parity: o.parity,
            q_label,
            multiplet: o.multiplet,
        };
        put(out, obs, "out")
    })
}

/// # Safety
/// `s` must come from [`rt_solve`] and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rt_solution_free(s: *mut RtSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
