//! Head-to-head race orchestration: configuration, the fixed-step race loop,
//! replays and series metrics.

mod config;
mod metrics;
mod race;
mod replay;

pub use config::{ControllerKind, HarnessError, LineConfig, OvalSpec, RaceConfig};
pub use metrics::{
    aggregate, metrics_csv, metrics_from_dir, percentile, racing_line_for, replay_path, run_series, track_label,
    PlayerMetrics, RaceMetrics, SeriesOutcome,
};
pub use race::{
    passage_input, race_seed, run_race, scan, start_lanes, Outcome, PassageRecord, PassageTarget, RaceOutcome, RaceResult,
    RaceSetup, RaceSummary, Timings, STALE_PLAN_AGE,
};
pub use replay::{parse_replay, rescore, LidarSummary, Replay, ReplayHeader, ReplayRecord, RescoreReport, TickRecord};
