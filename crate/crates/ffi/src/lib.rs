//! C ABI for `qomdp`.
//!
//! Models live behind the opaque [`QomdpModel`] handle. Every fallible call
//! returns a [`QomdpStatus`]; on failure the message is available from
//! [`qomdp_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are owned by the caller and released with
//! [`qomdp_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use qomdp::commands;
use qomdp::model_file::{load_model, model_to_json, parse_model, Model, ModelKind};
use qomdp::reductions::{nongoal_probability, ActionSequence};
use qomdp::solvers::Policy;
use qomdp::{Error, ToleranceConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QomdpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed JSON or an unknown model kind.
    Parse = 3,
    /// The model violates one of its invariants.
    Validation = 4,
    /// The operation does not apply to this kind of model.
    Unsupported = 5,
    /// An argument is out of range or inconsistent with the model.
    InvalidArgument = 6,
    /// A node or state budget was exhausted.
    BudgetExceeded = 7,
    /// The POMDP has no QOMDP embedding.
    NotEmbeddable = 8,
    /// A numerical routine failed (non-convergence, zero-probability branch, ...).
    Numerical = 9,
    Io = 10,
    /// A Rust panic was caught at the boundary.
    Panic = 11,
}

/// Kind of a loaded model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QomdpKind {
    Mdp = 0,
    GoalMdp = 1,
    Pomdp = 2,
    GoalPomdp = 3,
    Qomdp = 4,
    GoalQomdp = 5,
    Qmop = 6,
}

impl From<ModelKind> for QomdpKind {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Mdp => QomdpKind::Mdp,
            ModelKind::GoalMdp => QomdpKind::GoalMdp,
            ModelKind::Pomdp => QomdpKind::Pomdp,
            ModelKind::GoalPomdp => QomdpKind::GoalPomdp,
            ModelKind::Qomdp => QomdpKind::Qomdp,
            ModelKind::GoalQomdp => QomdpKind::GoalQomdp,
            ModelKind::Qmop => QomdpKind::Qmop,
        }
    }
}

/// Opaque handle to a validated model.
pub struct QomdpModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QomdpStatus {
    match e {
        Error::Parse(_) => QomdpStatus::Parse,
        Error::Validation(_) => QomdpStatus::Validation,
        Error::Unsupported(_) => QomdpStatus::Unsupported,
        Error::NotEmbeddable(_) => QomdpStatus::NotEmbeddable,
        Error::BudgetExceeded(_) | Error::StateBudgetExceeded(_) => QomdpStatus::BudgetExceeded,
        Error::Io(_) => QomdpStatus::Io,
        Error::InvalidArgument(_)
        | Error::IndexOutOfRange { .. }
        | Error::EmptySequence
        | Error::DimensionMismatch(_)
        | Error::NotSquare { .. }
        | Error::DimensionTooSmall
        | Error::TreeTooDeep { .. }
        | Error::MissingChild { .. }
        | Error::InvalidTolerance(_) => QomdpStatus::InvalidArgument,
        _ => QomdpStatus::Numerical,
    }
}

/// Failure inside a call, before conversion to a status code.
enum Failure {
    Status(QomdpStatus, String),
    Model(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

fn null_pointer(name: &str) -> Failure {
    Failure::Status(QomdpStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `f`, records any error or panic and converts the outcome to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QomdpStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QomdpStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Ok(Err(Failure::Model(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QomdpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null_pointer(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Status(QomdpStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

unsafe fn model_arg<'a>(p: *const QomdpModel) -> Result<&'a Model, Failure> {
    p.as_ref().map(|m| &m.0).ok_or_else(|| null_pointer("model"))
}

unsafe fn sequence_arg(actions: *const usize, len: usize) -> Result<ActionSequence, Failure> {
    if len == 0 {
        return Ok(ActionSequence::new(Vec::new()));
    }
    if actions.is_null() {
        return Err(null_pointer("actions"));
    }
    Ok(ActionSequence::new(std::slice::from_raw_parts(actions, len).to_vec()))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null_pointer(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).expect("reports contain no NUL bytes");
    write_out(out, c.into_raw(), "out")
}

unsafe fn write_model(out: *mut *mut QomdpModel, m: Model) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(QomdpModel(m))), "out")
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Message of the last failed call on this thread, or NULL if none failed yet.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qomdp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qomdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `char **` out-parameter of this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qomdp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a model document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_model_from_json(json: *const c_char, out: *mut *mut QomdpModel) -> QomdpStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        write_model(out, parse_model(text, &tol())?)
    })
}

/// Loads and validates a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_model_load(path: *const c_char, out: *mut *mut QomdpModel) -> QomdpStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        write_model(out, load_model(path, &tol())?)
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qomdp_model_free(model: *mut QomdpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Kind of `model`.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_model_kind(model: *const QomdpModel, out: *mut QomdpKind) -> QomdpStatus {
    guard(|| write_out(out, model_arg(model)?.kind().into(), "out"))
}

/// Serializes `model` as a model document.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_model_to_json(model: *const QomdpModel, out: *mut *mut c_char) -> QomdpStatus {
    guard(|| write_string(out, model_to_json(model_arg(model)?)))
}

/// Optimal finite-horizon value of a POMDP or QOMDP. When `report` is not NULL
/// it receives the JSON report including the optimal policy tree.
///
/// # Safety
/// `model` must be a live handle, `value` writable, `report` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qomdp_solve(
    model: *const QomdpModel,
    horizon: usize,
    value: *mut f64,
    report: *mut *mut c_char,
) -> QomdpStatus {
    guard(|| {
        let best = commands::best_policy(model_arg(model)?, horizon, &tol())?;
        write_out(value, best.value, "value")?;
        if !report.is_null() {
            write_string(report, commands::solution_report(best, None, &tol()).to_json())?;
        }
        Ok(())
    })
}

/// Goal reachability verdict as a JSON report. `depth` bounds the search on
/// goal QOMDPs (it must be at least 1 there) and is ignored for goal POMDPs.
///
/// # Safety
/// `model` must be a live handle and `report` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_decide_reach(
    model: *const QomdpModel,
    depth: usize,
    report: *mut *mut c_char,
) -> QomdpStatus {
    guard(|| {
        let depth = (depth > 0).then_some(depth);
        write_string(report, commands::decide_reach(model_arg(model)?, depth, &tol())?.to_json())
    })
}

/// Goal QOMDP encoding of a QMOP instance, as a new handle.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_qmop_reduce(model: *const QomdpModel, out: *mut *mut QomdpModel) -> QomdpStatus {
    guard(|| write_model(out, commands::reduce_qmop(model_arg(model)?, &tol())?))
}

/// QOMDP embedding of a POMDP, as a new handle.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_embed(model: *const QomdpModel, out: *mut *mut QomdpModel) -> QomdpStatus {
    guard(|| write_model(out, commands::embed(model_arg(model)?, &tol())?))
}

/// Bounded null-sequence search on a QMOP instance, as a JSON report.
///
/// # Safety
/// `model` must be a live handle and `report` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qomdp_qmop_search(
    model: *const QomdpModel,
    max_len: usize,
    report: *mut *mut c_char,
) -> QomdpStatus {
    guard(|| write_string(report, commands::qmop_search(model_arg(model)?, max_len, &tol())?.to_json()))
}

/// Probability that the goal QOMDP built from a QMOP instance is still outside
/// the goal after the 1-based action sequence `actions[0..len]`.
///
/// # Safety
/// `model` must be a live handle, `actions` readable for `len` elements
/// (or NULL when `len` is 0) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qomdp_nongoal_probability(
    model: *const QomdpModel,
    actions: *const usize,
    len: usize,
    out: *mut f64,
) -> QomdpStatus {
    guard(|| {
        let Model::Qmop(s) = model_arg(model)? else {
            return Err(Error::Unsupported("non-goal probability needs a qmop model".into()).into());
        };
        let p = nongoal_probability(s, &sequence_arg(actions, len)?)?;
        write_out(out, p, "out")
    })
}

/// Monte Carlo probability of reaching the goal of a goal POMDP or goal QOMDP
/// under the 1-based action sequence `actions[0..len]`.
///
/// # Safety
/// `model` must be a live handle, `actions` readable for `len` elements
/// (or NULL when `len` is 0) and `probability` writable.
#[no_mangle]
pub unsafe extern "C" fn qomdp_simulate(
    model: *const QomdpModel,
    actions: *const usize,
    len: usize,
    steps: usize,
    trials: u64,
    seed: u64,
    probability: *mut f64,
) -> QomdpStatus {
    guard(|| {
        let policy = Policy::Sequence(sequence_arg(actions, len)?);
        let est = commands::estimate(model_arg(model)?, &policy, steps, trials, seed, &tol())?;
        write_out(probability, est.probability, "probability")
    })
}
