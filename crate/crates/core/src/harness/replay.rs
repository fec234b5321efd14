use super::config::{ControllerKind, HarnessError, RaceConfig};
use super::race::{passage_input, scan, PassageRecord, RaceResult, RaceSummary};
use crate::lidar::{HitKind, LidarReading};
use crate::planner::WaypointPlan;
use crate::reward::{checkpoint_rewards, step_rewards, RewardBreakdown, RewardWeights};
use crate::rules::{RuleConfig, RuleTracker, Violation};
use crate::track::{parse_track, write_track, TrackModel};
use crate::vehicle::{ControlInput, KartState};
use serde::{Deserialize, Serialize};

pub const REPLAY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarSummary {
    /// Shortest ray and what it hit.
    pub min_distance: f64,
    pub hit: HitKind,
}

impl LidarSummary {
    pub fn of(readings: &[LidarReading]) -> Self {
        let best = readings.iter().fold(readings[0], |a, b| if b.distance < a.distance { *b } else { a });
        Self { min_distance: best.distance, hit: best.hit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub k: usize,
    pub t: f64,
    pub states: [KartState; 2],
    pub controls: [ControlInput; 2],
    /// Wall strike this tick.
    pub wall: [bool; 2],
    pub plan_ids: [Option<u64>; 2],
    pub lq_fallback: [bool; 2],
    pub lidar: [LidarSummary; 2],
    pub rewards: Option<[RewardBreakdown; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub version: u32,
    pub summary: RaceSummary,
    pub config: RaceConfig,
    pub track_hash: String,
    /// Full track document, so a replay is self-contained.
    pub track: String,
    pub start: [KartState; 2],
    pub finish_ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReplayRecord {
    Header(Box<ReplayHeader>),
    Tick(Box<TickRecord>),
    Plan { t: f64, plan: WaypointPlan },
    Violation(Violation),
    Passage(PassageRecord),
}

/// Buffers body records; the header, which carries the outcome, is written
/// first once the race is over.
pub struct ReplayWriter {
    body: Option<String>,
}

impl ReplayWriter {
    pub fn new(enabled: bool) -> Self {
        Self { body: enabled.then(String::new) }
    }

    pub fn enabled(&self) -> bool {
        self.body.is_some()
    }

    pub fn push(&mut self, record: &ReplayRecord) {
        if let Some(body) = self.body.as_mut() {
            body.push_str(&serde_json::to_string(record).expect("record serializes"));
            body.push('\n');
        }
    }

    pub fn finish(
        self,
        cfg: &RaceConfig,
        track: &TrackModel,
        start: &[KartState; 2],
        finish_ordinal: usize,
        summary: &RaceSummary,
    ) -> Option<String> {
        let body = self.body?;
        let header = ReplayRecord::Header(Box::new(ReplayHeader {
            version: REPLAY_VERSION,
            summary: summary.clone(),
            config: cfg.clone(),
            track_hash: track.content_hash(),
            track: write_track(track),
            start: *start,
            finish_ordinal,
        }));
        let mut doc = serde_json::to_string(&header).expect("header serializes");
        doc.push('\n');
        doc.push_str(&body);
        Some(doc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: ReplayHeader,
    pub records: Vec<ReplayRecord>,
}

pub fn parse_replay(doc: &str) -> Result<Replay, HarnessError> {
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in doc.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayRecord =
            serde_json::from_str(line).map_err(|e| HarnessError::Parse { line: i + 1, message: e.to_string() })?;
        match rec {
            ReplayRecord::Header(h) if header.is_none() && i == 0 => header = Some(*h),
            ReplayRecord::Header(_) => {
                return Err(HarnessError::Parse { line: i + 1, message: "header must be the first record".into() })
            }
            other => records.push(other),
        }
    }
    let header = header.ok_or(HarnessError::Parse { line: 1, message: "missing header".into() })?;
    if header.version != REPLAY_VERSION {
        return Err(HarnessError::Parse { line: 1, message: format!("unsupported version {}", header.version) });
    }
    Ok(Replay { header, records })
}

impl Replay {
    pub fn track(&self) -> Result<TrackModel, HarnessError> {
        Ok(parse_track(&self.header.track)?)
    }

    pub fn ticks(&self) -> impl Iterator<Item = &TickRecord> {
        self.records.iter().filter_map(|r| match r {
            ReplayRecord::Tick(t) => Some(t.as_ref()),
            _ => None,
        })
    }

    pub fn violations(&self) -> Vec<Violation> {
        self.records
            .iter()
            .filter_map(|r| match r {
                ReplayRecord::Violation(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    pub fn passages(&self) -> Vec<PassageRecord> {
        self.records
            .iter()
            .filter_map(|r| match r {
                ReplayRecord::Passage(p) => Some(*p),
                _ => None,
            })
            .collect()
    }

    pub fn plans(&self) -> Vec<&WaypointPlan> {
        self.records
            .iter()
            .filter_map(|r| match r {
                ReplayRecord::Plan { plan, .. } => Some(plan),
                _ => None,
            })
            .collect()
    }

    /// Race result rebuilt from the individual records.
    pub fn result(&self) -> RaceResult {
        RaceResult { summary: self.header.summary.clone(), violations: self.violations(), passages: self.passages() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoreReport {
    pub violations: Vec<Violation>,
    pub recorded_violations: Vec<Violation>,
    /// Step plus checkpoint rewards per player.
    pub rewards: [RewardBreakdown; 2],
    /// Whether recomputed rewards equal the recorded ones; `None` when the
    /// replay carries no rewards.
    pub rewards_match: Option<bool>,
}

impl RescoreReport {
    pub fn violations_match(&self) -> bool {
        self.violations == self.recorded_violations
    }
}

/// Re-derives violations and rewards from the tick states alone.
pub fn rescore(replay: &Replay, rules: &RuleConfig, weights: &RewardWeights) -> Result<RescoreReport, HarnessError> {
    let cfg = &replay.header.config;
    let track = replay.track()?;
    let params = &cfg.vehicle;
    let mut tracker = RuleTracker::new();
    let mut prev = replay.header.start;
    let mut violations = Vec::new();
    let mut rewards = [RewardBreakdown::default(); 2];
    let mut matches: Option<bool> = None;
    let parked = cfg.players.map(|k| k == ControllerKind::Parked);
    for tick in replay.ticks() {
        let l_prev = [prev[0].l, prev[1].l];
        violations.extend(tracker.observe(l_prev, &tick.states, tick.wall, &track, params, rules));
        let step = [0, 1].map(|p| {
            let s = &tick.states[p];
            if parked[p] || (s.gamma.is_some() && s.gamma != Some(s.t)) {
                RewardBreakdown::default()
            } else {
                step_rewards(s, &scan(&tick.states, p, &track, params), &track, rules, weights, params)
            }
        });
        for p in 0..2 {
            rewards[p].accumulate(&step[p]);
        }
        if let Some(recorded) = tick.rewards {
            matches = Some(matches.unwrap_or(true) && recorded == step);
        }
        prev = tick.states;
    }
    for rec in replay.passages() {
        let r = checkpoint_rewards(&passage_input(&rec, cfg.time_limit), weights);
        rewards[rec.player].accumulate(&r);
        if let Some(recorded) = rec.reward {
            matches = Some(matches.unwrap_or(true) && recorded == r);
        }
    }
    Ok(RescoreReport { violations, recorded_violations: replay.violations(), rewards, rewards_match: matches })
}
