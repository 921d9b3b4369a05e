//! C ABI over the planner and the scenario controller.
//!
//! Every function returns a [`MratiStatus`] or a plain value, never unwinds, and
//! records a message for [`mrati_last_error`] on failure. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mrati::bench::experiment::coarse_config;
use mrati::bench::scenario::{generate_scenario, ra_domain};
use mrati::controller::{run_goal, Mode, RunRecord};
use mrati::diagnosis::{consistent_model, History};
use mrati::domain::{ground, parse_domain, parse_ground_literals, GroundLit, GroundedDescription};
use mrati::search::{plan_minimal, Goal, PlanOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MratiStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    NoModel = 4,
    NoPlan = 5,
    Failed = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MratiMode {
    Ati = 0,
    Tp = 1,
}

/// A parsed and grounded domain.
pub struct MratiDomain {
    g: GroundedDescription,
}

/// A plan as rendered action terms.
pub struct MratiPlan {
    steps: Vec<CString>,
}

/// The outcome of one scenario trial.
pub struct MratiRun {
    record: RunRecord,
    trace: CString,
    summary: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MratiStatus, String);

fn text(s: impl Into<String>) -> CString {
    CString::new(s.into().replace('\0', " ")).expect("nul bytes removed")
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MratiStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (MratiStatus::Ok, None),
        Ok(Err(Failure(status, m))) => (status, Some(m)),
        Err(_) => (MratiStatus::Panic, Some("internal panic".to_owned())),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message.map(text));
    status
}

unsafe fn input<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(MratiStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(MratiStatus::InvalidUtf8, e.to_string()))
}

fn output<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(MratiStatus::NullArgument, "null output pointer".into()));
    }
    Ok(())
}

fn literals(g: &GroundedDescription, s: &str) -> Result<Vec<GroundLit>, Failure> {
    let parse = |e: String| Failure(MratiStatus::Parse, e);
    parse_ground_literals(s)
        .map_err(|e| parse(e.to_string()))?
        .iter()
        .map(|(a, v)| g.lit_from_ast(a, *v).map_err(|e| parse(e.to_string())))
        .collect()
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn mrati_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Parses and grounds a domain description.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrati_domain_parse(source: *const c_char, out: *mut *mut MratiDomain) -> MratiStatus {
    guard(|| {
        output(out)?;
        let src = input(source)?;
        let desc = parse_domain(src).map_err(|e| Failure(MratiStatus::Parse, e.render("domain")))?;
        let g = ground(&desc).map_err(|e| Failure(MratiStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(MratiDomain { g }));
        Ok(())
    })
}

/// # Safety
/// `domain` must come from [`mrati_domain_parse`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrati_domain_free(domain: *mut MratiDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Shortest plan from the state that `init` and the defaults determine.
///
/// # Safety
/// `domain` must be a live handle, `init` and `goal` nul-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrati_plan(
    domain: *const MratiDomain,
    init: *const c_char,
    goal: *const c_char,
    horizon: usize,
    out: *mut *mut MratiPlan,
) -> MratiStatus {
    guard(|| {
        output(out)?;
        let d = domain.as_ref().ok_or(Failure(MratiStatus::NullArgument, "null domain".into()))?;
        let (init, goal) = (input(init)?, input(goal)?);
        let mut h = History::new();
        for l in literals(&d.g, init)? {
            h.observe(l, 0).map_err(|e| Failure(MratiStatus::Failed, e.to_string()))?;
        }
        let model = consistent_model(&d.g, &h, 0).map_err(|e| Failure(MratiStatus::NoModel, e.to_string()))?;
        let goal = Goal::new(literals(&d.g, goal)?);
        let plan = plan_minimal(&d.g, model.current(), &goal, &PlanOptions::with_horizon(horizon))
            .map_err(|e| Failure(MratiStatus::NoPlan, e.to_string()))?;
        let steps = plan.render(&d.g).into_iter().map(text).collect();
        *out = Box::into_raw(Box::new(MratiPlan { steps }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_plan_len(plan: *const MratiPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.steps.len())
}

/// Action `index` of the plan, or null when out of range. Owned by the plan.
///
/// # Safety
/// `plan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_plan_step(plan: *const MratiPlan, index: usize) -> *const c_char {
    plan.as_ref().and_then(|p| p.steps.get(index)).map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `plan` must come from [`mrati_plan`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrati_plan_free(plan: *mut MratiPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Runs one sampled trial of a robot-assistant scenario (1 to 5) at coarse resolution.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_scenario(scenario: u32, mode: MratiMode, seed: u64, out: *mut *mut MratiRun) -> MratiStatus {
    guard(|| {
        output(out)?;
        let dom = ra_domain();
        let task = generate_scenario(&dom, scenario as usize, seed).map_err(|e| Failure(MratiStatus::Failed, e.to_string()))?;
        let mode = match mode {
            MratiMode::Ati => Mode::Ati,
            MratiMode::Tp => Mode::Tp,
        };
        let record = run_goal(&dom, &task, &coarse_config(mode, seed)).map_err(|e| Failure(MratiStatus::Failed, e.to_string()))?;
        let (trace, summary) = (text(record.trace_text()), text(record.summary()));
        *out = Box::into_raw(Box::new(MratiRun { record, trace, summary }));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_goal_achieved(run: *const MratiRun) -> bool {
    run.as_ref().is_some_and(|r| r.record.goal_achieved)
}

/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_actions(run: *const MratiRun) -> usize {
    run.as_ref().map_or(0, |r| r.record.actions_executed)
}

/// Event trace, one event per line. Owned by the run.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_trace(run: *const MratiRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.trace.as_ptr())
}

/// One-line outcome summary. Owned by the run.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_summary(run: *const MratiRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// # Safety
/// `run` must come from [`mrati_run_scenario`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrati_run_free(run: *mut MratiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
