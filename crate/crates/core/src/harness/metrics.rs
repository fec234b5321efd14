use super::config::{ControllerKind, HarnessError, RaceConfig};
use super::race::{Outcome, RaceResult, RaceSetup, Timings};
use super::replay::parse_replay;
use crate::racing_line::{compute_racing_line, RacingLine};
use crate::rules::ViolationKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub controller: ControllerKind,
    pub wins: usize,
    pub avg_collisions_at_fault: f64,
    pub avg_illegal_lane_changes: f64,
    /// Sum of the two averages above.
    pub safety_score: f64,
    /// Mean |lateral − target lateral| at passage, in lane widths; absent
    /// without plans.
    pub avg_target_lane_distance: Option<f64>,
    /// Mean |v − target v| at passage, m/s.
    pub avg_target_velocity_difference: Option<f64>,
    pub target_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceMetrics {
    pub track: String,
    pub pairing: String,
    pub races: usize,
    pub draws: usize,
    pub timeouts: usize,
    pub players: [PlayerMetrics; 2],
}

/// Aggregates races in the given order; `lane_width` converts lateral
/// offsets into lane units.
pub fn aggregate(track: &str, results: &[RaceResult], lane_width: f64) -> RaceMetrics {
    let races = results.len();
    let n = races.max(1) as f64;
    let controllers = results.first().map(|r| r.summary.controllers).unwrap_or([ControllerKind::MctsLqng; 2]);
    let players = [0, 1].map(|p| {
        let wins = results.iter().filter(|r| r.summary.outcome == Outcome::Winner(p)).count();
        let count = |kind: ViolationKind| {
            results.iter().map(|r| r.violations.iter().filter(|v| v.player == p && v.kind == kind).count()).sum::<usize>()
        };
        let caf = count(ViolationKind::CollisionAtFault) as f64 / n;
        let illegal = count(ViolationKind::IllegalLaneChange) as f64 / n;
        let mut lane_sum = 0.0;
        let mut vel_sum = 0.0;
        let mut samples = 0;
        for r in results {
            for pass in r.passages.iter().filter(|x| x.player == p) {
                if let Some(t) = pass.target {
                    lane_sum += (pass.lateral - t.lateral).abs() / lane_width;
                    vel_sum += (pass.v - t.v).abs();
                    samples += 1;
                }
            }
        }
        let planned = controllers[p].has_plan() && samples > 0;
        PlayerMetrics {
            controller: controllers[p],
            wins,
            avg_collisions_at_fault: caf,
            avg_illegal_lane_changes: illegal,
            safety_score: caf + illegal,
            avg_target_lane_distance: planned.then(|| lane_sum / samples as f64),
            avg_target_velocity_difference: planned.then(|| vel_sum / samples as f64),
            target_samples: samples,
        }
    });
    RaceMetrics {
        track: track.to_string(),
        pairing: format!("{}_vs_{}", controllers[0].name(), controllers[1].name()),
        races,
        draws: results.iter().filter(|r| r.summary.outcome == Outcome::Draw).count(),
        timeouts: results.iter().filter(|r| r.summary.timeout).count(),
        players,
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    track: &'a str,
    pairing: &'a str,
    races: usize,
    draws: usize,
    timeouts: usize,
    p1_controller: &'a str,
    p1_wins: usize,
    p1_avg_collisions_at_fault: f64,
    p1_avg_illegal_lane_changes: f64,
    p1_safety_score: f64,
    p1_avg_target_lane_distance: Option<f64>,
    p1_avg_target_velocity_difference: Option<f64>,
    p2_controller: &'a str,
    p2_wins: usize,
    p2_avg_collisions_at_fault: f64,
    p2_avg_illegal_lane_changes: f64,
    p2_safety_score: f64,
    p2_avg_target_lane_distance: Option<f64>,
    p2_avg_target_velocity_difference: Option<f64>,
}

/// One row per (track, pairing).
pub fn metrics_csv(metrics: &[RaceMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in metrics {
        let [a, b] = &m.players;
        w.serialize(CsvRow {
            track: &m.track,
            pairing: &m.pairing,
            races: m.races,
            draws: m.draws,
            timeouts: m.timeouts,
            p1_controller: a.controller.name(),
            p1_wins: a.wins,
            p1_avg_collisions_at_fault: a.avg_collisions_at_fault,
            p1_avg_illegal_lane_changes: a.avg_illegal_lane_changes,
            p1_safety_score: a.safety_score,
            p1_avg_target_lane_distance: a.avg_target_lane_distance,
            p1_avg_target_velocity_difference: a.avg_target_velocity_difference,
            p2_controller: b.controller.name(),
            p2_wins: b.wins,
            p2_avg_collisions_at_fault: b.avg_collisions_at_fault,
            p2_avg_illegal_lane_changes: b.avg_illegal_lane_changes,
            p2_safety_score: b.safety_score,
            p2_avg_target_lane_distance: b.avg_target_lane_distance,
            p2_avg_target_velocity_difference: b.avg_target_velocity_difference,
        })
        .expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// Short label for the configured track.
pub fn track_label(cfg: &RaceConfig) -> String {
    match cfg.track.as_str() {
        "oval" | "complex" => cfg.track.clone(),
        path => Path::new(path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.into()),
    }
}

#[derive(Debug, Clone)]
pub struct SeriesOutcome {
    pub metrics: RaceMetrics,
    pub results: Vec<RaceResult>,
    pub timings: Timings,
    /// Replay documents in race order, when recorded.
    pub replays: Vec<String>,
}

/// Racing line for `cfg`, from the cache directory when one is configured.
pub fn racing_line_for(cfg: &RaceConfig, track: &crate::track::TrackModel) -> Result<RacingLine, HarnessError> {
    match &cfg.line.cache_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("line-{}.json", &track.content_hash()[..16]));
            Ok(RacingLine::load_or_compute(&path, track, &cfg.vehicle, cfg.line.iterations, cfg.line.seed)?)
        }
        None => Ok(compute_racing_line(track, &cfg.vehicle, cfg.line.iterations, cfg.line.seed)),
    }
}

/// Runs `series_size` races in order. Replays are kept when `record` is set
/// and written to `out` (with `metrics.csv`) when a directory is given.
pub fn run_series(cfg: &RaceConfig, record: bool, out: Option<&Path>) -> Result<SeriesOutcome, HarnessError> {
    cfg.validate()?;
    let track = cfg.load_track()?;
    let line = if cfg.players.contains(&ControllerKind::FixedLqng) { Some(racing_line_for(cfg, &track)?) } else { None };
    let setup = RaceSetup::new(cfg, &track, line.as_ref())?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let keep = record || out.is_some();
    let mut results = Vec::with_capacity(cfg.series_size);
    let mut timings = Timings::default();
    let mut replays = Vec::new();
    for i in 0..cfg.series_size {
        let race = setup.run(i, keep);
        log::info!("race {i}: {:?}", race.result.summary.outcome);
        timings.control_ms.extend(race.timings.control_ms);
        timings.plan_ms.extend(race.timings.plan_ms);
        if let Some(doc) = race.replay {
            if let Some(dir) = out {
                std::fs::write(replay_path(dir, i), &doc)?;
            }
            if record {
                replays.push(doc);
            }
        }
        results.push(race.result);
    }
    let metrics = aggregate(&track_label(cfg), &results, track.lane_spacing());
    if let Some(dir) = out {
        std::fs::write(dir.join("metrics.csv"), metrics_csv(std::slice::from_ref(&metrics)))?;
    }
    Ok(SeriesOutcome { metrics, results, timings, replays })
}

pub fn replay_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("race_{index:03}.jsonl"))
}

/// Recomputes metrics from every replay in `dir`, grouped by (track,
/// pairing) and ordered by race index.
pub fn metrics_from_dir(dir: &Path) -> Result<Vec<RaceMetrics>, HarnessError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut groups: BTreeMap<(String, String), Vec<(usize, RaceResult, f64)>> = BTreeMap::new();
    for path in files {
        let replay = parse_replay(&std::fs::read_to_string(&path)?)?;
        let track = replay.track()?;
        let key = (track_label(&replay.header.config), replay.header.config.pairing());
        groups.entry(key).or_default().push((replay.header.summary.race, replay.result(), track.lane_spacing()));
    }
    Ok(groups
        .into_iter()
        .map(|((track, _), mut races)| {
            races.sort_by_key(|r| r.0);
            let width = races[0].2;
            let results: Vec<RaceResult> = races.into_iter().map(|r| r.1).collect();
            aggregate(&track, &results, width)
        })
        .collect())
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}
