//! C ABI for the hyperver model checker.
//!
//! Models and formulae are opaque heap handles released with their `_free`
//! functions. Every fallible call returns an [`HvStatus`]; on failure the
//! message is available from [`hv_last_error`] on the same thread until the
//! next failing call. Strings returned to the caller are released with
//! [`hv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use hyperver::engine::{
    seeded_assignment, Checker, EngineError, Method, Outcome, SmcConfig, UndecidedReason,
};
use hyperver::gridworld::{build_grid_dtmc, build_psi_ca, build_psi_goal, GridSpec, Layout};
use hyperver::logic::{parse_formula, HyperFormula, PathAssignment, VarId};
use hyperver::model::{parse_model, Dtmc};
use hyperver::oracle::{Oracle, OracleError};
use hyperver::stats::BetaPrior;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ModelError = 3,
    FormulaError = 4,
    ConfigError = 5,
    AssignmentError = 6,
    Unsupported = 7,
    BudgetExceeded = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvOutcome {
    True = 0,
    False = 1,
    Undecided = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvReason {
    None = 0,
    Indifference = 1,
    SampleCap = 2,
    Timeout = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvMethod {
    Bayes = 0,
    Sprt = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvLayout {
    Default = 0,
    Goal11 = 1,
    Goal01 = 2,
}

/// Checker settings; obtain defaults from [`hv_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvConfig {
    pub alpha: f64,
    pub beta: f64,
    pub prior_a: f64,
    pub prior_b: f64,
    pub kappa: f64,
    pub delta_cap: f64,
    pub max_samples: u64,
    /// Seconds; 0 disables the limit.
    pub timeout_s: f64,
    pub seed: u64,
    pub method: HvMethod,
    pub sprt_eps: f64,
    pub use_cache: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvVerdict {
    pub outcome: HvOutcome,
    pub reason: HvReason,
    pub samples: u64,
    pub total_samples: u64,
    pub seconds: f64,
}

/// Opaque model handle.
pub struct HvModel(Dtmc);

/// Opaque formula handle.
pub struct HvFormula(HyperFormula);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HvStatus, String);

impl Failure {
    fn new(status: HvStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::Config(_)
            | EngineError::NotClosed(_)
            | EngineError::DegenerateRegion(_) => HvStatus::ConfigError,
            EngineError::Unsupported(_) => HvStatus::Unsupported,
            EngineError::Eval(_) => HvStatus::AssignmentError,
            EngineError::Stats(_) | EngineError::MissingBudget(_) => HvStatus::Internal,
        };
        Failure::new(status, e)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let status = match e {
            OracleError::Budget(_) => HvStatus::BudgetExceeded,
            OracleError::NotProb(_) | OracleError::NestedLookahead { .. } => HvStatus::Unsupported,
            OracleError::Eval(_) => HvStatus::AssignmentError,
        };
        Failure::new(status, e)
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HvStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside hyperver");
            HvStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            HvStatus::NullArgument,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(HvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(HvStatus::NullArgument, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            HvStatus::NullArgument,
            format!("{what} is null"),
        ))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn hv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model in the text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_model_parse(text: *const c_char, out: *mut *mut HvModel) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let m = parse_model(text).map_err(|e| Failure::new(HvStatus::ModelError, e))?;
        *out = Box::into_raw(Box::new(HvModel(m)));
        Ok(())
    })
}

/// Generates the two-robot grid world of side `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_model_gridworld(
    n: usize,
    layout: HvLayout,
    out: *mut *mut HvModel,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let layout = match layout {
            HvLayout::Default => Layout::Default,
            HvLayout::Goal11 => Layout::Goal11,
            HvLayout::Goal01 => Layout::Goal01,
        };
        let m = GridSpec::preset(n, layout)
            .and_then(|s| build_grid_dtmc(&s))
            .map_err(|e| Failure::new(HvStatus::ModelError, e))?;
        *out = Box::into_raw(Box::new(HvModel(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_model_free(m: *mut HvModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of states, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_model_num_states(m: *const HvModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.num_states())
}

/// Looks up a state index by name.
///
/// # Safety
/// `m` must be a live handle, `name` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hv_model_state_index(
    m: *const HvModel,
    name: *const c_char,
    out: *mut usize,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = ref_arg(m, "model")?;
        let name = str_arg(name, "name")?;
        *out = m.0.state_index(name).ok_or_else(|| {
            Failure::new(HvStatus::AssignmentError, format!("unknown state '{name}'"))
        })?;
        Ok(())
    })
}

/// Model in the text format; free with [`hv_string_free`].
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_model_to_text(m: *const HvModel) -> *mut c_char {
    match m.as_ref() {
        Some(m) => CString::new(m.0.to_text()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

fn store_formula(out: *mut *mut HvFormula, f: HyperFormula) {
    // SAFETY: callers check `out` first.
    unsafe { *out = Box::into_raw(Box::new(HvFormula(f))) };
}

/// Parses a formula.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_formula_parse(
    text: *const c_char,
    out: *mut *mut HvFormula,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let f = parse_formula(text).map_err(|e| Failure::new(HvStatus::FormulaError, e))?;
        store_formula(out, f);
        Ok(())
    })
}

/// Collision avoidance formula for an `n`×`n` grid with bound `k`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_formula_psi_ca(
    n: usize,
    k: u32,
    theta: f64,
    out: *mut *mut HvFormula,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let f = build_psi_ca(n, k, theta).map_err(|e| Failure::new(HvStatus::FormulaError, e))?;
        store_formula(out, f);
        Ok(())
    })
}

/// Collision-free goal reaching formula for `robot` (1 or 2).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_formula_psi_goal(
    n: usize,
    k: u32,
    theta1: f64,
    theta2: f64,
    robot: usize,
    out: *mut *mut HvFormula,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let f = build_psi_goal(n, k, theta1, theta2, robot)
            .map_err(|e| Failure::new(HvStatus::FormulaError, e))?;
        store_formula(out, f);
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_formula_free(f: *mut HvFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Canonical text of the formula; free with [`hv_string_free`].
///
/// # Safety
/// `f` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_formula_to_string(f: *const HvFormula) -> *mut c_char {
    match f.as_ref() {
        Some(f) => CString::new(f.0.to_string()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

#[no_mangle]
pub extern "C" fn hv_config_default() -> HvConfig {
    let d = SmcConfig::default();
    HvConfig {
        alpha: d.alpha,
        beta: d.beta,
        prior_a: d.prior.a(),
        prior_b: d.prior.b(),
        kappa: d.kappa,
        delta_cap: d.delta_cap,
        max_samples: d.max_samples,
        timeout_s: d.timeout.map_or(0.0, |t| t.as_secs_f64()),
        seed: d.seed,
        method: HvMethod::Bayes,
        sprt_eps: d.sprt_eps,
        use_cache: d.use_cache,
    }
}

fn to_config(c: &HvConfig) -> Result<SmcConfig, Failure> {
    let prior =
        BetaPrior::new(c.prior_a, c.prior_b).map_err(|e| Failure::new(HvStatus::ConfigError, e))?;
    if !(c.timeout_s >= 0.0 && c.timeout_s.is_finite()) {
        return Err(Failure::new(
            HvStatus::ConfigError,
            "timeout must be non-negative",
        ));
    }
    Ok(SmcConfig {
        prior,
        alpha: c.alpha,
        beta: c.beta,
        kappa: c.kappa,
        delta_cap: c.delta_cap,
        max_samples: c.max_samples,
        timeout: (c.timeout_s > 0.0).then(|| Duration::from_secs_f64(c.timeout_s)),
        seed: c.seed,
        method: match c.method {
            HvMethod::Bayes => Method::Bayes,
            HvMethod::Sprt => Method::Sprt,
        },
        sprt_eps: c.sprt_eps,
        use_cache: c.use_cache,
    })
}

/// Binds each named variable to a path sampled from its start state.
unsafe fn assignment(
    m: &Dtmc,
    f: &HyperFormula,
    vars: *const *const c_char,
    starts: *const usize,
    len: usize,
    seed: u64,
) -> Result<PathAssignment, Failure> {
    if len > 0 && (vars.is_null() || starts.is_null()) {
        return Err(Failure::new(
            HvStatus::NullArgument,
            "vars or starts is null",
        ));
    }
    let mut bound: Vec<(VarId, usize)> = Vec::with_capacity(len);
    for i in 0..len {
        let name = str_arg(*vars.add(i), "variable name")?;
        let var = f.var_id(name).ok_or_else(|| {
            Failure::new(
                HvStatus::AssignmentError,
                format!("no path variable '{name}'"),
            )
        })?;
        let s = *starts.add(i);
        if s >= m.num_states() {
            return Err(Failure::new(
                HvStatus::AssignmentError,
                format!("state {s} out of range"),
            ));
        }
        bound.push((var, s));
    }
    Ok(seeded_assignment(m, f, &bound, seed))
}

/// Checks `formula` on `model`. Variable `vars[i]` is bound to a path
/// sampled from state `starts[i]` using `config.seed`.
///
/// # Safety
/// Handles must be live; `vars` and `starts` must hold `len` entries;
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hv_check(
    model: *const HvModel,
    formula: *const HvFormula,
    vars: *const *const c_char,
    starts: *const usize,
    len: usize,
    config: *const HvConfig,
    out: *mut HvVerdict,
) -> HvStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = &ref_arg(model, "model")?.0;
        let f = &ref_arg(formula, "formula")?.0;
        let cfg = to_config(ref_arg(config, "config")?)?;
        let v = assignment(m, f, vars, starts, len, cfg.seed)?;
        let verdict = Checker::new(m, f, cfg)?.check(&v)?;
        let (outcome, reason) = match verdict.outcome {
            Outcome::True => (HvOutcome::True, HvReason::None),
            Outcome::False => (HvOutcome::False, HvReason::None),
            Outcome::Undecided(r) => (
                HvOutcome::Undecided,
                match r {
                    UndecidedReason::Indifference => HvReason::Indifference,
                    UndecidedReason::SampleCap => HvReason::SampleCap,
                    UndecidedReason::Timeout => HvReason::Timeout,
                },
            ),
        };
        *out = HvVerdict {
            outcome,
            reason,
            samples: verdict.samples,
            total_samples: verdict.total_samples,
            seconds: verdict.seconds,
        };
        Ok(())
    })
}

/// Exact verdict of a formula whose root is a probability operator.
/// Writes the verdict and up to `probs_cap` probabilities; `probs_len`
/// receives the number of Pr arguments. Fails with `BufferTooSmall` when
/// `probs_cap` is smaller than that.
///
/// # Safety
/// Handles must be live; `vars`/`starts` hold `len` entries; `probs` holds
/// `probs_cap` entries (may be null when `probs_cap` is 0); the remaining
/// out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hv_exact_verdict(
    model: *const HvModel,
    formula: *const HvFormula,
    vars: *const *const c_char,
    starts: *const usize,
    len: usize,
    seed: u64,
    verdict: *mut bool,
    probs: *mut f64,
    probs_cap: usize,
    probs_len: *mut usize,
) -> HvStatus {
    guard(|| {
        out_arg(verdict, "verdict")?;
        out_arg(probs_len, "probs_len")?;
        let m = &ref_arg(model, "model")?.0;
        let f = &ref_arg(formula, "formula")?.0;
        let v = assignment(m, f, vars, starts, len, seed)?;
        let res = Oracle::new(m, f).verdict(f.root(), &v)?;
        *verdict = res.verdict;
        *probs_len = res.probabilities.len();
        if res.probabilities.len() > probs_cap {
            return Err(Failure::new(
                HvStatus::BufferTooSmall,
                format!(
                    "{} probabilities do not fit in {probs_cap}",
                    res.probabilities.len()
                ),
            ));
        }
        if !res.probabilities.is_empty() {
            out_arg(probs, "probs")?;
            ptr::copy_nonoverlapping(res.probabilities.as_ptr(), probs, res.probabilities.len());
        }
        Ok(())
    })
}
