//! C ABI over geobots-core.
//!
//! Every call returns a [`GbStatus`]. Results come back through out-pointers;
//! strings are NUL-terminated UTF-8 JSON owned by the caller and released with
//! [`gb_string_free`]. Handles are opaque and released with their `_free`
//! function. After a non-OK status, [`gb_last_error_message`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use geobots_core::grid::{Difficulty, GridLevel, MapTheme};
use geobots_core::pcg::{
    generate_level, level_fingerprint, validate_level, DifficultyProfile, ProfileSet,
};
use geobots_core::repair::{generate_problem, grade, RepairBank, RepairSubmission};
use geobots_core::robot::{build_complete, compute_stats, BuildFile, Catalog, RobotStats};
use geobots_core::sim::{finalize, new_session, step, Command, SimState};
use geobots_core::solver::plan;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InvalidJson = 3,
    GenerationFailed = 4,
    Infeasible = 5,
    SessionFinished = 6,
    Internal = 7,
}

/// A generated or loaded level.
pub struct GbLevel {
    level: GridLevel,
}

/// A running simulation over one level and build.
pub struct GbSession {
    level: GridLevel,
    stats: RobotStats,
    profile: DifficultyProfile,
    state: SimState,
}

struct Failure(GbStatus, String);

type FfiResult = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(body: impl FnOnce() -> FfiResult) -> GbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            GbStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            GbStatus::Internal
        }
    }
}

fn invalid(message: impl ToString) -> Failure {
    Failure(GbStatus::InvalidArgument, message.to_string())
}

fn bad_json(message: impl ToString) -> Failure {
    Failure(GbStatus::InvalidJson, message.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(GbStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(GbStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(GbStatus::NullArgument, format!("{name} is null")))
}

fn to_c_string(text: String) -> *mut c_char {
    CString::new(text)
        .expect("JSON has no interior NUL")
        .into_raw()
}

fn json_out<T: serde::Serialize>(value: &T) -> *mut c_char {
    to_c_string(serde_json::to_string(value).expect("value serialises"))
}

fn stats_for(build_json: &str) -> Result<RobotStats, Failure> {
    let catalog = Catalog::shipped();
    let file: BuildFile = serde_json::from_str(build_json).map_err(bad_json)?;
    let build = catalog.resolve_build(&file).map_err(invalid)?;
    if !build_complete(&build) {
        return Err(invalid("build is incomplete"));
    }
    Ok(compute_stats(&build, &catalog))
}

/// Generates a level with the standard profile for `difficulty`.
///
/// # Safety
/// `theme` and `difficulty` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_generate(
    seed: u64,
    theme: *const c_char,
    difficulty: *const c_char,
    out: *mut *mut GbLevel,
) -> GbStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let theme: MapTheme = str_arg(theme, "theme")?.parse().map_err(invalid)?;
        let difficulty: Difficulty = str_arg(difficulty, "difficulty")?
            .parse()
            .map_err(invalid)?;
        let profiles = ProfileSet::default();
        let level = generate_level(seed, theme, difficulty, profiles.get(difficulty))
            .map_err(|e| Failure(GbStatus::GenerationFailed, e.to_string()))?;
        *out = Box::into_raw(Box::new(GbLevel { level }));
        Ok(())
    })
}

/// Parses a level document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_from_json(
    json: *const c_char,
    out: *mut *mut GbLevel,
) -> GbStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let level = GridLevel::from_json(str_arg(json, "json")?).map_err(bad_json)?;
        *out = Box::into_raw(Box::new(GbLevel { level }));
        Ok(())
    })
}

/// Writes the canonical JSON of a level.
///
/// # Safety
/// `level` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_to_json(
    level: *const GbLevel,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let level = ref_arg(level, "level")?;
        *out_arg(out, "out")? = to_c_string(level.level.to_canonical_json());
        Ok(())
    })
}

/// # Safety
/// `level` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_fingerprint(level: *const GbLevel, out: *mut u64) -> GbStatus {
    guard(|| {
        let level = ref_arg(level, "level")?;
        *out_arg(out, "out")? = level_fingerprint(&level.level);
        Ok(())
    })
}

/// Writes the validation report as JSON and sets `solvable`.
///
/// # Safety
/// `level` must come from this library; `solvable` and `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_validate(
    level: *const GbLevel,
    solvable: *mut bool,
    report: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let level = ref_arg(level, "level")?;
        let solvable = out_arg(solvable, "solvable")?;
        let report_out = out_arg(report, "report")?;
        let r = validate_level(&level.level);
        *solvable = r.solvable;
        *report_out = json_out(&r);
        Ok(())
    })
}

/// Plans the level for a build; `GB_STATUS_INFEASIBLE` when no plan exists.
///
/// # Safety
/// `level` must come from this library; `build_json` must be a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_level_solve(
    level: *const GbLevel,
    build_json: *const c_char,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let level = ref_arg(level, "level")?;
        let out = out_arg(out, "out")?;
        let stats = stats_for(str_arg(build_json, "build_json")?)?;
        let profile = DifficultyProfile::standard(level.level.difficulty);
        let p = plan(&level.level, &stats, &profile).ok_or_else(|| {
            Failure(
                GbStatus::Infeasible,
                "no plan completes this level with this build".into(),
            )
        })?;
        *out = json_out(&p);
        Ok(())
    })
}

/// # Safety
/// `level` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gb_level_free(level: *mut GbLevel) {
    if !level.is_null() {
        drop(Box::from_raw(level));
    }
}

/// Starts a session on a copy of `level` with a complete build
/// (`{"slots": {"motor": "motor-t1", ...}}`).
///
/// # Safety
/// `level` must come from this library; `build_json` must be a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_session_new(
    level: *const GbLevel,
    build_json: *const c_char,
    out: *mut *mut GbSession,
) -> GbStatus {
    guard(|| {
        let level = ref_arg(level, "level")?;
        let out = out_arg(out, "out")?;
        let stats = stats_for(str_arg(build_json, "build_json")?)?;
        let state = new_session(&level.level, &stats).map_err(invalid)?;
        let profile = DifficultyProfile::standard(level.level.difficulty);
        *out = Box::into_raw(Box::new(GbSession {
            level: level.level.clone(),
            stats,
            profile,
            state,
        }));
        Ok(())
    })
}

/// Applies one command (a letter such as `"U"` or a name such as `"wait"`)
/// and writes the tick outcome as JSON.
///
/// # Safety
/// `session` must come from this library; `command` must be a NUL-terminated
/// string; `outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_session_step(
    session: *mut GbSession,
    command: *const c_char,
    outcome: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let session = out_arg(session, "session")?;
        let outcome = out_arg(outcome, "outcome")?;
        let cmd: Command = str_arg(command, "command")?.parse().map_err(invalid)?;
        if !session.state.is_running() {
            return Err(Failure(
                GbStatus::SessionFinished,
                "session has finished".into(),
            ));
        }
        let (next, tick) = step(&session.state, cmd, &session.level, &session.stats)
            .map_err(|e| Failure(GbStatus::Internal, e.to_string()))?;
        session.state = next;
        *outcome = json_out(&tick);
        Ok(())
    })
}

/// Writes the session state as JSON.
///
/// # Safety
/// `session` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_session_state_json(
    session: *const GbSession,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let session = ref_arg(session, "session")?;
        *out_arg(out, "out")? = json_out(&session.state);
        Ok(())
    })
}

/// Writes the level result once the session has finished.
///
/// # Safety
/// `session` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_session_result_json(
    session: *const GbSession,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let session = ref_arg(session, "session")?;
        let out = out_arg(out, "out")?;
        let result = finalize(&session.state, &session.profile).map_err(invalid)?;
        *out = json_out(&result);
        Ok(())
    })
}

/// # Safety
/// `session` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gb_session_free(session: *mut GbSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Generates a repair problem and writes the player-facing view as JSON.
///
/// # Safety
/// `difficulty` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_repair_generate(
    seed: u64,
    difficulty: *const c_char,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let difficulty: Difficulty = str_arg(difficulty, "difficulty")?
            .parse()
            .map_err(invalid)?;
        let problem = generate_problem(seed, difficulty, &RepairBank::shipped())
            .map_err(|e| Failure(GbStatus::Internal, e.to_string()))?;
        *out = json_out(&problem.client_view());
        Ok(())
    })
}

/// Grades a submission against the problem for `seed` and `difficulty`;
/// sets `fixed` and writes both verdicts as JSON.
///
/// # Safety
/// `difficulty` and `submission_json` must be NUL-terminated strings; `fixed`
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_repair_grade(
    seed: u64,
    difficulty: *const c_char,
    submission_json: *const c_char,
    fixed: *mut bool,
    out: *mut *mut c_char,
) -> GbStatus {
    guard(|| {
        let fixed = out_arg(fixed, "fixed")?;
        let out = out_arg(out, "out")?;
        let difficulty: Difficulty = str_arg(difficulty, "difficulty")?
            .parse()
            .map_err(invalid)?;
        let submission: RepairSubmission =
            serde_json::from_str(str_arg(submission_json, "submission_json")?).map_err(bad_json)?;
        let problem = generate_problem(seed, difficulty, &RepairBank::shipped())
            .map_err(|e| Failure(GbStatus::Internal, e.to_string()))?;
        let verdicts = grade(&problem, &submission).map_err(invalid)?;
        *fixed = verdicts.fixed();
        *out = json_out(&verdicts);
        Ok(())
    })
}

/// # Safety
/// `s` must be a string returned by this library and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
