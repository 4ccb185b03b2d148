//! C interface to the synthesis library.
//!
//! Every function returns an [`RsStatus`]. On failure the message is
//! available from [`rs_last_error`] on the same thread. Strings handed out
//! by the library are released with [`rs_string_free`]; handles with their
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reactive_synth::cegis::{dominant_env, modified_cegis, naive_cegis, Verdict};
use reactive_synth::dynamics::Player;
use reactive_synth::hierarchy::{build_decision_tree, evaluate_game, GameString};
use reactive_synth::oracle::{export_smtlib, Query};
use reactive_synth::problem::{Problem, ProblemSpec};
use reactive_synth::stl::{parse, Formula, Trace};
use reactive_synth::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    /// The call worked but found no strategy, or the game is false.
    NotFound = 1,
    InvalidArgument = 2,
    BudgetExhausted = 3,
    Syntax = 4,
    Dimension = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Parsed formula.
pub struct RsFormula(Formula);

/// Loaded problem: plant, formula and solver settings.
pub struct RsProblem(Problem);

/// System player.
pub const RS_SYSTEM: c_int = 0;
/// Environment player.
pub const RS_ENVIRONMENT: c_int = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RsStatus {
    match e {
        Error::Syntax { .. } => RsStatus::Syntax,
        Error::Dimension(_) | Error::TraceTooShort { .. } => RsStatus::Dimension,
        Error::Budget(_) => RsStatus::BudgetExhausted,
        Error::Io(_) => RsStatus::Io,
        _ => RsStatus::InvalidArgument,
    }
}

struct Fail(RsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<RsStatus, Fail>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            RsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(RsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(RsStatus::InvalidArgument, "output holds a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Fail> {
    serde_json::to_string(v).map_err(|e| Fail(RsStatus::InvalidArgument, e.to_string()))
}

fn player(p: c_int) -> Result<Player, Fail> {
    match p {
        RS_SYSTEM => Ok(Player::System),
        RS_ENVIRONMENT => Ok(Player::Environment),
        _ => Err(Fail(RsStatus::InvalidArgument, format!("unknown player {p}"))),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_formula_parse(src: *const c_char, out: *mut *mut RsFormula) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let f = parse(text(src, "src")?)?;
        *out = Box::into_raw(Box::new(RsFormula(f)));
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `f` must come from [`rs_formula_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rs_formula_free(f: *mut RsFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Steps needed after `t` to evaluate the formula.
///
/// # Safety
/// `f` must be a live formula handle.
#[no_mangle]
pub unsafe extern "C" fn rs_formula_horizon(f: *const RsFormula) -> usize {
    f.as_ref().map_or(0, |f| f.0.horizon())
}

/// Robustness at step `t` of the trace stored row-major in `samples`
/// (`len` steps of `dim` values).
///
/// # Safety
/// `f` must be live; `samples` must hold `len * dim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_formula_robustness(
    f: *const RsFormula,
    samples: *const f64,
    len: usize,
    dim: usize,
    t: usize,
    out: *mut f64,
) -> RsStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("formula"))?;
        if samples.is_null() || out.is_null() {
            return Err(null("samples or out"));
        }
        if dim == 0 {
            return Err(Fail(RsStatus::Dimension, "dim must be positive".into()));
        }
        let flat = std::slice::from_raw_parts(samples, len * dim);
        let trace = Trace::new(flat.chunks(dim).map(<[f64]>::to_vec).collect())?;
        let rho = f.0.robustness(&trace, t)?;
        *out = rho;
        Ok(if rho > 0.0 { RsStatus::Ok } else { RsStatus::NotFound })
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_from_json(json: *const c_char, out: *mut *mut RsProblem) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ProblemSpec::from_json(text(json, "json")?)?.build()?;
        *out = Box::into_raw(Box::new(RsProblem(p)));
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_load(path: *const c_char, out: *mut *mut RsProblem) -> RsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ProblemSpec::load(text(path, "path")?)?.build()?;
        *out = Box::into_raw(Box::new(RsProblem(p)));
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `p` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rs_problem_free(p: *mut RsProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dominant input sequence for `who` (`RS_SYSTEM` or `RS_ENVIRONMENT`).
/// Writes the outcome as JSON to `out_json` in every non-error case.
///
/// # Safety
/// `p` must be live; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_synth_dominant(p: *const RsProblem, who: c_int, out_json: *mut *mut c_char) -> RsStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("problem"))?.0;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let cfg = p.spec.cegis_config();
        let outcome = match (player(who)?, p.plant.is_finite()) {
            (Player::System, true) => naive_cegis(&p.plant, &p.formula, &cfg)?,
            (Player::System, false) => modified_cegis(&p.plant, &p.formula, &cfg)?,
            (Player::Environment, _) => dominant_env(&p.plant, &p.formula, &cfg)?,
        };
        write_string(out_json, json(&outcome.verdict)?)?;
        Ok(match outcome.verdict {
            Verdict::Dominant { .. } => RsStatus::Ok,
            Verdict::NoDominant => RsStatus::NotFound,
            Verdict::BudgetExhausted => RsStatus::BudgetExhausted,
        })
    })
}

/// Reactive decision tree as JSON (`null` tree when none was found).
///
/// # Safety
/// `p` must be live; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_synth_tree(p: *const RsProblem, out_json: *mut *mut c_char) -> RsStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("problem"))?.0;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let outcome = build_decision_tree(&p.plant, &p.formula, &p.spec.cegis_config())?;
        write_string(out_json, json(&outcome)?)?;
        Ok(if outcome.tree.is_some() { RsStatus::Ok } else { RsStatus::NotFound })
    })
}

/// Truth of a game string such as `"E1 A1 A2 E2"`, with its witness as JSON.
///
/// # Safety
/// `p` must be live; `game` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_eval_game(p: *const RsProblem, game: *const c_char, out_json: *mut *mut c_char) -> RsStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("problem"))?.0;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let q: GameString = text(game, "game")?.parse()?;
        let outcome = evaluate_game(&p.plant, &p.formula, &q, &p.spec.cegis_config())?;
        write_string(out_json, json(&outcome)?)?;
        Ok(if outcome.holds { RsStatus::Ok } else { RsStatus::NotFound })
    })
}

/// SMT-LIB2 script for `free` against the opponent's flattened sequence.
///
/// # Safety
/// `p` must be live; `fixed` must hold `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_export_smt(
    p: *const RsProblem,
    free: c_int,
    fixed: *const f64,
    len: usize,
    negate: bool,
    out: *mut *mut c_char,
) -> RsStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("problem"))?.0;
        if out.is_null() || (fixed.is_null() && len > 0) {
            return Err(null("fixed or out"));
        }
        let values = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(fixed, len).to_vec() };
        let mut q = Query::new(&p.plant, &p.formula, player(free)?, values)?;
        q.negate = negate;
        write_string(out, export_smtlib(&q)?)?;
        Ok(RsStatus::Ok)
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
