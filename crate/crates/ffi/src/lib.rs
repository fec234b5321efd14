//! C ABI over the race harness.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `rg_*_free`. Every fallible call returns an [`RgStatus`]; the
//! message for the last failure on the calling thread is available from
//! [`rg_last_error`]. Strings returned to C are freed with
//! [`rg_string_free`].

use racegame::harness::{
    parse_replay, racing_line_for, rescore, run_series, ControllerKind, HarnessError, Outcome, RaceConfig, RaceOutcome,
    RaceSetup, SeriesOutcome,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Track = 5,
    Replay = 6,
    Io = 7,
    /// The call panicked; the handle arguments should be considered lost.
    Internal = 8,
}

/// Race configuration.
pub struct RgConfig {
    inner: RaceConfig,
}

/// One finished race with its replay.
pub struct RgRace {
    inner: RaceOutcome,
}

/// A finished series.
pub struct RgSeries {
    inner: SeriesOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: RgStatus, msg: impl Into<String>) -> RgStatus {
    set_error(msg);
    status
}

fn harness_status(e: HarnessError) -> RgStatus {
    let status = match &e {
        HarnessError::Config(_) => RgStatus::Config,
        HarnessError::Track(_) => RgStatus::Track,
        HarnessError::Parse { .. } => RgStatus::Replay,
        HarnessError::Io(_) => RgStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> RgStatus) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == RgStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(RgStatus::Internal, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, RgStatus> {
    if p.is_null() {
        return Err(fail(RgStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(RgStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_c_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! check_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(RgStatus::NullPointer, "null pointer argument");
        }
    };
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn rg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Free with
/// [`rg_string_free`].
#[no_mangle]
pub extern "C" fn rg_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration: MCTS-LQNG against Fixed-LQNG on the complex track.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_config_default(out: *mut *mut RgConfig) -> RgStatus {
    check_null!(out);
    guard(|| {
        *out = Box::into_raw(Box::new(RgConfig { inner: RaceConfig::default() }));
        RgStatus::Ok
    })
}

/// Parses a TOML configuration. Relative paths inside it resolve against
/// the working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_config_from_toml(toml: *const c_char, out: *mut *mut RgConfig) -> RgStatus {
    check_null!(out);
    guard(|| {
        let text = match str_arg(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RaceConfig::from_toml(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RgConfig { inner }));
                RgStatus::Ok
            }
            Err(e) => harness_status(e),
        }
    })
}

/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_config_set_seed(cfg: *mut RgConfig, seed: u64) -> RgStatus {
    check_null!(cfg);
    (*cfg).inner.seed = seed;
    RgStatus::Ok
}

/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_config_set_series_size(cfg: *mut RgConfig, races: usize) -> RgStatus {
    check_null!(cfg);
    if races == 0 {
        return fail(RgStatus::InvalidArgument, "series size must be positive");
    }
    (*cfg).inner.series_size = races;
    RgStatus::Ok
}

/// Serialized configuration as TOML. Free with [`rg_string_free`].
///
/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_config_to_toml(cfg: *const RgConfig) -> *mut c_char {
    if cfg.is_null() {
        set_error("null pointer argument");
        return ptr::null_mut();
    }
    into_c_string(&(*cfg).inner.to_toml())
}

/// # Safety
/// `cfg` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_config_free(cfg: *mut RgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs race `index` of the configured series and keeps its replay.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_race_run(cfg: *const RgConfig, index: usize, out: *mut *mut RgRace) -> RgStatus {
    check_null!(cfg, out);
    guard(|| {
        let cfg = &(*cfg).inner;
        let run = || -> Result<RaceOutcome, HarnessError> {
            let track = cfg.load_track()?;
            let line = if cfg.players.contains(&ControllerKind::FixedLqng) { Some(racing_line_for(cfg, &track)?) } else { None };
            Ok(RaceSetup::new(cfg, &track, line.as_ref())?.run(index, true))
        };
        match run() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RgRace { inner }));
                RgStatus::Ok
            }
            Err(e) => harness_status(e),
        }
    })
}

/// Winning player (0 or 1), or -1 for a draw. -2 on a NULL handle.
///
/// # Safety
/// `race` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_race_winner(race: *const RgRace) -> i32 {
    if race.is_null() {
        return -2;
    }
    match (*race).inner.result.summary.outcome {
        Outcome::Winner(p) => p as i32,
        Outcome::Draw => -1,
    }
}

/// Finish time of `player` in seconds; `*finished` is false (and `*time`
/// untouched) when the player did not finish.
///
/// # Safety
/// `race` must be a valid handle; `finished` and `time` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rg_race_finish_time(race: *const RgRace, player: usize, finished: *mut bool, time: *mut f64) -> RgStatus {
    check_null!(race, finished, time);
    if player > 1 {
        return fail(RgStatus::InvalidArgument, "player must be 0 or 1");
    }
    match (*race).inner.result.summary.finish_times[player] {
        Some(t) => {
            *finished = true;
            *time = t;
        }
        None => *finished = false,
    }
    RgStatus::Ok
}

/// Number of rule violations recorded in the race.
///
/// # Safety
/// `race` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_race_violation_count(race: *const RgRace) -> usize {
    if race.is_null() {
        return 0;
    }
    (*race).inner.result.violations.len()
}

/// The race replay as JSON lines. Free with [`rg_string_free`].
///
/// # Safety
/// `race` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_race_replay(race: *const RgRace) -> *mut c_char {
    if race.is_null() {
        set_error("null pointer argument");
        return ptr::null_mut();
    }
    into_c_string((*race).inner.replay.as_deref().unwrap_or(""))
}

/// # Safety
/// `race` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_race_free(race: *mut RgRace) {
    if !race.is_null() {
        drop(Box::from_raw(race));
    }
}

/// Runs the whole series. When `out_dir` is non-NULL, replays and
/// `metrics.csv` are written there.
///
/// # Safety
/// `cfg` must be a valid handle, `out_dir` NULL or a NUL-terminated path,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_series_run(cfg: *const RgConfig, out_dir: *const c_char, out: *mut *mut RgSeries) -> RgStatus {
    check_null!(cfg, out);
    guard(|| {
        let dir = if out_dir.is_null() {
            None
        } else {
            match str_arg(out_dir) {
                Ok(d) => Some(Path::new(d)),
                Err(s) => return s,
            }
        };
        match run_series(&(*cfg).inner, false, dir) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RgSeries { inner }));
                RgStatus::Ok
            }
            Err(e) => harness_status(e),
        }
    })
}

/// Races won by `player` (0 or 1); 0 on a NULL handle or bad index.
///
/// # Safety
/// `series` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_series_wins(series: *const RgSeries, player: usize) -> usize {
    if series.is_null() || player > 1 {
        return 0;
    }
    (*series).inner.metrics.players[player].wins
}

/// Series metrics as CSV with a header row. Free with [`rg_string_free`].
///
/// # Safety
/// `series` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rg_series_metrics_csv(series: *const RgSeries) -> *mut c_char {
    if series.is_null() {
        set_error("null pointer argument");
        return ptr::null_mut();
    }
    into_c_string(&racegame::harness::metrics_csv(std::slice::from_ref(&(*series).inner.metrics)))
}

/// # Safety
/// `series` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rg_series_free(series: *mut RgSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Re-derives violations (and rewards, when recorded) from a replay
/// document and reports whether they agree with what was recorded.
///
/// # Safety
/// `replay` must be a NUL-terminated string and `matches` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rg_rescore(replay: *const c_char, matches: *mut bool) -> RgStatus {
    check_null!(matches);
    guard(|| {
        let doc = match str_arg(replay) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let report = parse_replay(doc).and_then(|r| {
            let cfg = &r.header.config;
            rescore(&r, &cfg.rules, &cfg.reward)
        });
        match report {
            Ok(rep) => {
                *matches = rep.violations_match() && rep.rewards_match.unwrap_or(true);
                RgStatus::Ok
            }
            Err(e) => harness_status(e),
        }
    })
}
