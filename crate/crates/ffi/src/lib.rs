//! C ABI over `trapscatter`.
//!
//! Conventions: every fallible call returns a [`TsStatus`] and writes its
//! result through an out-pointer. On failure a message is kept per thread and
//! can be read with [`ts_last_error_message`]. Handles are opaque; each `_new`
//! has a matching `_free` that accepts null. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trapscatter::oracle::{default_epsilon_max, exact_breakdown, solve_mu_discrete, DiscreteEnsemble};
use trapscatter::quad::{p_kernel, polylog3, QuadSpec};
use trapscatter::scattering::{decompose, Channel, Evaluator, Kinematics, RateBreakdown, Validity};
use trapscatter::thermo::{critical_temperature, TrapEnsemble};
use trapscatter::{oscillator, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DivergentInput = 3,
    NoConvergence = 4,
    OverflowRisk = 5,
    TruncationTooSmall = 6,
    CostGuard = 7,
    Config = 8,
    Panic = 9,
}

impl From<&Error> for TsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => TsStatus::InvalidArgument,
            Error::DivergentInput(_) => TsStatus::DivergentInput,
            Error::NoConvergence(_) => TsStatus::NoConvergence,
            Error::OverflowRisk(_) => TsStatus::OverflowRisk,
            Error::TruncationTooSmall(_) => TsStatus::TruncationTooSmall,
            Error::CostGuard(_) => TsStatus::CostGuard,
            Error::Config { .. } => TsStatus::Config,
        }
    }
}

/// Per-channel validity of a rate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsValidity {
    Valid = 0,
    Extrapolated = 1,
    OutOfRange = 2,
    Failed = 3,
}

impl From<Validity> for TsValidity {
    fn from(v: Validity) -> Self {
        match v {
            Validity::Valid => TsValidity::Valid,
            Validity::Extrapolated => TsValidity::Extrapolated,
            Validity::OutOfRange => TsValidity::OutOfRange,
            Validity::Failed => TsValidity::Failed,
        }
    }
}

/// Differential rates per unit solid angle. `flags` follows the channel
/// order rayleigh, diffraction, bose_0m, bose_mm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsRates {
    pub rayleigh: f64,
    pub diffraction: f64,
    pub bose_0m: f64,
    pub bose_mm: f64,
    pub total: f64,
    pub flags: [TsValidity; 4],
}

impl From<&RateBreakdown> for TsRates {
    fn from(b: &RateBreakdown) -> Self {
        TsRates {
            rayleigh: b.rayleigh,
            diffraction: b.diffraction,
            bose_0m: b.bose_0m,
            bose_mm: b.bose_mm,
            total: b.total,
            flags: Channel::ALL.map(|c| b.flag(c).into()),
        }
    }
}

/// Continuum ideal-gas ensemble.
pub struct TsEnsemble(TrapEnsemble);

/// Shared numerical settings and shape-function cache.
pub struct TsEvaluator(Evaluator);

/// Exact discrete-spectrum ensemble.
pub struct TsDiscreteEnsemble(DiscreteEnsemble);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
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

/// Runs `body` behind a panic guard and converts its outcome to a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> TsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            TsStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            TsStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TsStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ts_critical_temperature(n_total: u64) -> f64 {
    critical_temperature(n_total)
}

/// Ensemble of `n_total` atoms at absolute temperature `temperature`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_new(n_total: u64, temperature: f64, out: *mut *mut TsEnsemble) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ens = TrapEnsemble::new(n_total, temperature)?;
        *out = Box::into_raw(Box::new(TsEnsemble(ens)));
        Ok(())
    })
}

/// Ensemble at `T = ratio * Tc(n_total)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_new_reduced(n_total: u64, ratio: f64, out: *mut *mut TsEnsemble) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ens = TrapEnsemble::at_reduced_temperature(n_total, ratio)?;
        *out = Box::into_raw(Box::new(TsEnsemble(ens)));
        Ok(())
    })
}

/// # Safety
/// `ens` must be null or a handle from `ts_ensemble_new*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_free(ens: *mut TsEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

fn ensemble_field(ens: *const TsEnsemble, get: impl Fn(&TrapEnsemble) -> f64) -> f64 {
    // SAFETY: callers pass null or a live handle, as documented on each getter.
    unsafe { ens.as_ref() }.map_or(f64::NAN, |e| get(&e.0))
}

/// Absolute temperature; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_temperature(ens: *const TsEnsemble) -> f64 {
    ensemble_field(ens, TrapEnsemble::temperature)
}

/// Critical temperature of the continuum gas; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_t_critical(ens: *const TsEnsemble) -> f64 {
    ensemble_field(ens, TrapEnsemble::t_critical)
}

/// Self-consistent chemical potential; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_mu(ens: *const TsEnsemble) -> f64 {
    ensemble_field(ens, TrapEnsemble::mu)
}

/// Condensate number from the continuum fraction law (0 above Tc); NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_n_condensate(ens: *const TsEnsemble) -> f64 {
    ensemble_field(ens, TrapEnsemble::n_condensate)
}

/// Thermal-cloud atom number; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn ts_ensemble_n_excited(ens: *const TsEnsemble) -> f64 {
    ensemble_field(ens, TrapEnsemble::n_excited)
}

/// Evaluator with default tolerances and tabulated shape function.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_evaluator_new(out: *mut *mut TsEvaluator) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(TsEvaluator(Evaluator::default())));
        Ok(())
    })
}

/// # Safety
/// `eval` must be null or a handle from `ts_evaluator_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_evaluator_free(eval: *mut TsEvaluator) {
    if !eval.is_null() {
        drop(Box::from_raw(eval));
    }
}

/// Semiclassical rates at momentum transfer `delta` for incident wavenumber
/// `k_incident`. Reusing one evaluator across calls shares its shape tables.
///
/// # Safety
/// `ens` and `eval` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_decompose(
    ens: *const TsEnsemble,
    eval: *const TsEvaluator,
    k_incident: f64,
    delta: f64,
    out: *mut TsRates,
) -> TsStatus {
    guard(|| {
        let ens = in_ref(ens, "ens")?;
        let eval = in_ref(eval, "eval")?;
        let out = out_ref(out, "out")?;
        let kin = Kinematics::new(k_incident, delta)?;
        *out = TsRates::from(&decompose(&ens.0, &kin, &eval.0)?);
        Ok(())
    })
}

/// `|<m| e^{i delta x} |m'>|^2` for the 1D oscillator.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_overlap_exact(m: u64, m_prime: u64, delta: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = oscillator::overlap_exact(m, m_prime, delta)?.value;
        Ok(())
    })
}

/// Trilogarithm for real `x` in `[0, 1]`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_polylog3(x: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = polylog3(x)?;
        Ok(())
    })
}

/// Two-occupation thermal kernel `P(a, b)` with default tolerances.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_p_kernel(a: f64, b: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = p_kernel(a, b, &QuadSpec::default())?;
        Ok(())
    })
}

/// Exact discrete ensemble. `epsilon_max = 0` picks the default truncation.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_discrete_new(
    n_total: u64,
    temperature: f64,
    epsilon_max: u64,
    out: *mut *mut TsDiscreteEnsemble,
) -> TsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let eps = if epsilon_max == 0 {
            default_epsilon_max(temperature)
        } else {
            epsilon_max
        };
        let ens = solve_mu_discrete(n_total, temperature, eps)?;
        *out = Box::into_raw(Box::new(TsDiscreteEnsemble(ens)));
        Ok(())
    })
}

/// # Safety
/// `ens` must be null or a handle from `ts_discrete_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_discrete_free(ens: *mut TsDiscreteEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Ground-level occupation; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_discrete_n0(ens: *const TsDiscreteEnsemble) -> f64 {
    ens.as_ref().map_or(f64::NAN, |e| e.0.n0_exact())
}

/// Chemical potential; NaN for a null handle.
///
/// # Safety
/// `ens` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_discrete_mu(ens: *const TsDiscreteEnsemble) -> f64 {
    ens.as_ref().map_or(f64::NAN, |e| e.0.mu_exact())
}

/// Exact rates by direct summation over the discrete spectrum.
///
/// # Safety
/// `ens` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_exact_breakdown(ens: *const TsDiscreteEnsemble, delta: f64, out: *mut TsRates) -> TsStatus {
    guard(|| {
        let ens = in_ref(ens, "ens")?;
        let out = out_ref(out, "out")?;
        *out = TsRates::from(&exact_breakdown(&ens.0, delta)?);
        Ok(())
    })
}
