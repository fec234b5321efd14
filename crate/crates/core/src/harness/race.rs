use super::config::{ControllerKind, HarnessError, RaceConfig};
use super::replay::{LidarSummary, ReplayRecord, ReplayWriter, TickRecord};
use crate::geometry;
use crate::lidar::{lidar_scan, LidarReading, RAY_COUNT};
use crate::lqng::{self, TargetWaypoint};
use crate::planner::{plan_from_karts, GameModel, Partitions, WaypointPlan};
use crate::racing_line::{next_fixed_waypoint, RacingLine};
use crate::reward::{checkpoint_rewards, step_rewards, Passage, RewardBreakdown};
use crate::rules::{RuleTracker, Violation};
use crate::track::TrackModel;
use crate::vehicle::{integrate, refresh_discrete, ControlInput, KartState, VehicleParams};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Plans older than this are no longer tracked, s.
pub const STALE_PLAN_AGE: f64 = 2.0;
/// Speed retained after a wall strike.
const WALL_SPEED_FACTOR: f64 = 0.5;
/// How far a parked kart sits from the start line, well beyond LIDAR range.
const PARKED_OFFSET: f64 = 1.0e5;
/// A kart this close to the wall at the start of a tick is already sliding
/// along it; clamping it again is not a fresh strike.
const WALL_BAND: f64 = 0.05;
/// Per-tick speed factor while scraping along the wall.
const WALL_SCRAPE_FACTOR: f64 = 0.95;
/// Speed retained by both karts after a hard contact.
const CONTACT_SPEED_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Winner(usize),
    Draw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageTarget {
    pub lane: usize,
    pub v: f64,
    pub anchor_x: f64,
    pub anchor_y: f64,
    /// Lateral offset of the target lane.
    pub lateral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub player: usize,
    /// Progress ordinal reached.
    pub checkpoint: usize,
    pub r_prev: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub lane: usize,
    pub lateral: f64,
    pub v: f64,
    pub first: bool,
    /// What the active plan asked for at this checkpoint, if anything.
    pub target: Option<PassageTarget>,
    pub reward: Option<RewardBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceSummary {
    pub race: usize,
    pub seed: u64,
    pub controllers: [ControllerKind; 2],
    pub start_lanes: [usize; 2],
    pub outcome: Outcome,
    /// The time limit ended the race before both karts finished.
    pub timeout: bool,
    pub finish_times: [Option<f64>; 2],
    pub progress: [usize; 2],
    pub ticks: usize,
    pub plans: [u32; 2],
    pub lq_fallbacks: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceResult {
    pub summary: RaceSummary,
    pub violations: Vec<Violation>,
    pub passages: Vec<PassageRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    /// Low-level control computation per player-tick, ms.
    pub control_ms: Vec<f64>,
    /// High-level planning per plan, ms.
    pub plan_ms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RaceOutcome {
    pub result: RaceResult,
    /// Line-delimited replay document, when recording.
    pub replay: Option<String>,
    pub timings: Timings,
}

/// Seed of race `index` in a series.
pub fn race_seed(series_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(series_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Start lanes alternate between the outer lanes race by race.
pub fn start_lanes(index: usize, lanes: usize) -> [usize; 2] {
    if index.is_multiple_of(2) {
        [1, lanes]
    } else {
        [lanes, 1]
    }
}

/// LIDAR of player `p`; a finished opponent is no longer on the track.
pub fn scan(states: &[KartState; 2], p: usize, track: &TrackModel, params: &VehicleParams) -> [LidarReading; RAY_COUNT] {
    let mut other = states[1 - p];
    if other.gamma.is_some() {
        other.x = f64::MAX / 4.0;
        other.y = f64::MAX / 4.0;
    }
    lidar_scan(&states[p], &other, track, params)
}

fn anchor_target(k: &KartState, track: &TrackModel, v: f64) -> TargetWaypoint {
    let a = track.anchor_at(k.r + 1, k.lane);
    TargetWaypoint { x: a.position.x, y: a.position.y, v, theta: a.heading }
}

/// Lowest curve cap over the next two checkpoints at the kart's wear.
fn cautious_speed(k: &KartState, track: &TrackModel, params: &VehicleParams) -> f64 {
    (1..=2)
        .map(|d| params.curve_speed_cap(track.curve_radius(track.index_of(k.r + d)), k.wear))
        .fold(params.v_max, f64::min)
}

fn plan_fresh(plan: &WaypointPlan, ego: &KartState) -> bool {
    ego.t - plan.epoch <= STALE_PLAN_AGE && plan.next_ego(ego.r).is_some()
}

/// Targets for `me` and the predicted opponent.
fn targets(
    kind: ControllerKind,
    me: &KartState,
    opp: &KartState,
    plan: Option<&WaypointPlan>,
    line: Option<&RacingLine>,
    track: &TrackModel,
    params: &VehicleParams,
) -> [TargetWaypoint; 2] {
    let opp_default = anchor_target(opp, track, opp.v);
    match kind {
        ControllerKind::MctsLqng => match plan.filter(|p| plan_fresh(p, me)) {
            Some(p) => {
                let w = p.next_ego(me.r).expect("fresh plan has a next waypoint");
                let ego = TargetWaypoint { x: w.x, y: w.y, v: w.velocity, theta: w.heading };
                let opp_t = p
                    .next_opponent(opp.r)
                    .map(|o| TargetWaypoint { x: o.x, y: o.y, v: o.velocity, theta: o.heading })
                    .unwrap_or(opp_default);
                [ego, opp_t]
            }
            None => [anchor_target(me, track, me.v), opp_default],
        },
        ControllerKind::FixedLqng => [next_fixed_waypoint(me, line.expect("fixed controller needs a line")), opp_default],
        ControllerKind::NearestAnchorLqr => [anchor_target(me, track, cautious_speed(me, track, params)), opp_default],
        ControllerKind::Parked => [anchor_target(me, track, 0.0), opp_default],
    }
}

/// Clamps a kart that left the track back onto the wall and turns it along
/// the wall so it slides instead of striking again. Speed is halved on a
/// fresh strike; a kart already on the wall only loses scraping friction.
fn clamp_to_wall(k: &mut KartState, track: &TrackModel, on_wall: bool) -> bool {
    let p = k.position();
    if track.is_on_track(&p) {
        return false;
    }
    let proj = track.project(&p);
    let out = p - proj.point;
    let n = out.norm();
    let limit = track.width() * (1.0 - 1e-9);
    let q = if n > 0.0 { proj.point + out * (limit / n) } else { proj.point };
    k.x = q.x;
    k.y = q.y;
    k.v *= if on_wall { WALL_SCRAPE_FACTOR } else { WALL_SPEED_FACTOR };
    let cps = track.checkpoints();
    let a = cps[proj.edge].position;
    let b = cps[(proj.edge + 1) % cps.len()].position;
    let tangent = (b - a).y.atan2((b - a).x);
    k.theta += geometry::wrap_angle(tangent - k.theta);
    true
}

/// Pushes overlapping karts apart along the contact normal. Both are slowed
/// only when the contact is new (`touching` tells whether they were already
/// in contact on the previous tick), so rubbing side by side does not stall
/// them.
fn resolve_contact(states: &mut [KartState; 2], params: &VehicleParams, touching: bool) -> bool {
    let a = states[0].footprint(params);
    let b = states[1].footprint(params);
    let Some((normal, depth)) = a.penetration(&b) else { return false };
    let shift = normal * (0.5 * depth + 1e-6);
    states[0].x -= shift.x;
    states[0].y -= shift.y;
    states[1].x += shift.x;
    states[1].y += shift.y;
    if !touching {
        for s in states.iter_mut() {
            s.v *= CONTACT_SPEED_FACTOR;
        }
    }
    true
}

fn decide(finish: [Option<f64>; 2], progress: [usize; 2], last_passage: [f64; 2]) -> Outcome {
    match finish {
        [Some(a), Some(b)] if a < b => Outcome::Winner(0),
        [Some(a), Some(b)] if b < a => Outcome::Winner(1),
        [Some(_), Some(_)] => Outcome::Draw,
        [Some(_), None] => Outcome::Winner(0),
        [None, Some(_)] => Outcome::Winner(1),
        [None, None] => {
            if progress[0] != progress[1] {
                Outcome::Winner(if progress[0] > progress[1] { 0 } else { 1 })
            } else if last_passage[0] != last_passage[1] {
                Outcome::Winner(if last_passage[0] < last_passage[1] { 0 } else { 1 })
            } else {
                Outcome::Draw
            }
        }
    }
}

/// Everything a race needs that can be shared across a series.
pub struct RaceSetup<'a> {
    pub cfg: &'a RaceConfig,
    pub track: &'a TrackModel,
    pub line: Option<&'a RacingLine>,
}

impl<'a> RaceSetup<'a> {
    pub fn new(cfg: &'a RaceConfig, track: &'a TrackModel, line: Option<&'a RacingLine>) -> Result<Self, HarnessError> {
        cfg.validate()?;
        if cfg.players.contains(&ControllerKind::FixedLqng) && !line.is_some_and(|l| l.matches(track)) {
            return Err(HarnessError::Config("fixed_lqng needs a racing line for this track".into()));
        }
        if track.lane_count() < 1 {
            return Err(HarnessError::Config("track has no lanes".into()));
        }
        Ok(Self { cfg, track, line })
    }

    pub fn run(&self, index: usize, record: bool) -> RaceOutcome {
        run_race(self, index, record)
    }
}

/// Runs race `index` of a series. Deterministic in `(cfg, index)`.
pub fn run_race(setup: &RaceSetup, index: usize, record: bool) -> RaceOutcome {
    let cfg = setup.cfg;
    let track = setup.track;
    let params = &cfg.vehicle;
    let seed = race_seed(cfg.seed, index);
    let lanes = start_lanes(index, track.lane_count());
    let finish = cfg.finish_ordinal(track);
    let period = cfg.period_ticks();
    let max_ticks = (cfg.time_limit / cfg.dt).round() as usize;
    let model = GameModel::new(track, *params, cfg.rules, Partitions::new(cfg.mcts.speed_buckets, cfg.mcts.wear_bucket, params));
    let mut plan_rngs = [0u64, 1].map(|p| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(p + 1);
        r
    });

    let mut karts = [KartState::at_anchor(track, 1, lanes[0]), KartState::at_anchor(track, 1, lanes[1])];
    let parked = cfg.players.map(|k| k == ControllerKind::Parked);
    for p in (0..2).filter(|&p| parked[p]) {
        karts[p].y += PARKED_OFFSET;
        karts[p].v = 0.0;
    }
    let start = karts;
    let mut body = ReplayWriter::new(record);
    let mut plans: [Option<WaypointPlan>; 2] = [None, None];
    let mut next_plan_id = 1u64;
    let mut rules = RuleTracker::new();
    let mut violations = Vec::new();
    let mut passages = Vec::new();
    let mut last_passage = [0.0f64; 2];
    let mut plan_count = [0u32; 2];
    let mut fallbacks = [0u32; 2];
    let mut timings = Timings::default();
    let mut ticks = 0;
    let mut touching = false;

    for k in 1..=max_ticks {
        if (0..2).all(|p| karts[p].gamma.is_some() || parked[p]) {
            break;
        }
        if (k - 1) % period == 0 {
            for p in 0..2 {
                if !cfg.players[p].has_plan() || karts[p].gamma.is_some() {
                    continue;
                }
                let started = Instant::now();
                let result = plan_from_karts(&model, &karts, p, &cfg.mcts, plan_rngs[p].next_u64());
                timings.plan_ms.push(started.elapsed().as_secs_f64() * 1e3);
                // a failed search keeps the previous plan
                if let Ok(mut plan) = result {
                    plan.id = next_plan_id;
                    next_plan_id += 1;
                    plan_count[p] += 1;
                    body.push(&ReplayRecord::Plan { t: karts[p].t, plan: plan.clone() });
                    plans[p] = Some(plan);
                }
            }
        }

        let mut controls = [ControlInput::default(); 2];
        let mut lq_fallback = [false; 2];
        for p in 0..2 {
            if karts[p].gamma.is_some() || parked[p] {
                continue;
            }
            let started = Instant::now();
            let q = 1 - p;
            let tg = targets(cfg.players[p], &karts[p], &karts[q], plans[p].as_ref(), setup.line, track, params);
            let weights = match cfg.players[p] {
                ControllerKind::NearestAnchorLqr => cfg.lq.decoupled(),
                _ if karts[q].gamma.is_some() => cfg.lq.decoupled(),
                _ => cfg.lq,
            };
            let (u, diag) = lqng::control(&[karts[p], karts[q]], &tg, &weights, params, cfg.dt);
            timings.control_ms.push(started.elapsed().as_secs_f64() * 1e3);
            controls[p] = u;
            lq_fallback[p] = diag.fallback;
            fallbacks[p] += diag.fallback as u32;
        }

        let mut next = karts;
        let mut wall = [false; 2];
        for p in 0..2 {
            if karts[p].gamma.is_some() || parked[p] {
                next[p].t = karts[p].t + cfg.dt;
                continue;
            }
            next[p] = integrate(&karts[p], controls[p], cfg.dt, params);
            let on_wall = track.centerline_distance(&karts[p].position()) > track.width() - WALL_BAND;
            wall[p] = clamp_to_wall(&mut next[p], track, on_wall);
        }
        let contact = next.iter().all(|s| s.gamma.is_none()) && resolve_contact(&mut next, params, touching);
        if contact {
            for p in 0..2 {
                let on_wall = track.centerline_distance(&karts[p].position()) > track.width() - WALL_BAND;
                wall[p] |= clamp_to_wall(&mut next[p], track, on_wall || wall[p]);
            }
        }
        touching = contact;
        for p in 0..2 {
            if karts[p].gamma.is_none() && !parked[p] {
                refresh_discrete(&karts[p], &mut next[p], track, cfg.rules.lane_counter_mode);
                if next[p].r >= finish {
                    next[p].gamma = Some(next[p].t);
                }
            }
        }

        // checkpoint passages
        for p in 0..2 {
            let q = 1 - p;
            for ordinal in karts[p].r + 1..=next[p].r {
                let pos = next[p].position();
                let proj = track.project(&pos);
                let target = plans[p].as_ref().and_then(|plan| plan.ego_at(ordinal)).map(|w| PassageTarget {
                    lane: w.lane,
                    v: w.velocity,
                    anchor_x: w.x,
                    anchor_y: w.y,
                    lateral: track.lane_offsets()[w.lane - 1],
                });
                let first = next[q].r < ordinal || (karts[q].r < ordinal && p == 0);
                let mut rec = PassageRecord {
                    player: p,
                    checkpoint: ordinal,
                    r_prev: karts[p].r,
                    t: next[p].t,
                    x: pos.x,
                    y: pos.y,
                    lane: next[p].lane,
                    lateral: proj.lateral,
                    v: next[p].v,
                    first,
                    target,
                    reward: None,
                };
                if cfg.record_rewards {
                    rec.reward = Some(checkpoint_rewards(&passage_input(&rec, cfg.time_limit), &cfg.reward));
                }
                last_passage[p] = rec.t;
                body.push(&ReplayRecord::Passage(rec));
                passages.push(rec);
            }
        }

        let l_prev = [karts[0].l, karts[1].l];
        let found = rules.observe(l_prev, &next, wall, track, params, &cfg.rules);
        karts = next;
        ticks = k;

        if body.enabled() {
            let lidar = [0, 1].map(|p| scan(&karts, p, track, params));
            let rewards = cfg.record_rewards.then(|| {
                [0, 1].map(|p| {
                    if parked[p] || (karts[p].gamma.is_some() && karts[p].gamma != Some(karts[p].t)) {
                        RewardBreakdown::default()
                    } else {
                        step_rewards(&karts[p], &lidar[p], track, &cfg.rules, &cfg.reward, params)
                    }
                })
            });
            body.push(&ReplayRecord::Tick(Box::new(TickRecord {
                k,
                t: karts[0].t,
                states: karts,
                controls,
                wall,
                plan_ids: [plans[0].as_ref().map(|p| p.id), plans[1].as_ref().map(|p| p.id)],
                lq_fallback,
                lidar: lidar.map(|l| LidarSummary::of(&l)),
                rewards,
            })));
        }
        for v in found {
            body.push(&ReplayRecord::Violation(v));
            violations.push(v);
        }
    }

    let finish_times = [karts[0].gamma, karts[1].gamma];
    let progress = [karts[0].r, karts[1].r];
    let summary = RaceSummary {
        race: index,
        seed,
        controllers: cfg.players,
        start_lanes: lanes,
        outcome: decide(finish_times, progress, last_passage),
        timeout: (0..2).any(|p| !parked[p] && finish_times[p].is_none()),
        finish_times,
        progress,
        ticks,
        plans: plan_count,
        lq_fallbacks: fallbacks,
    };
    let replay = body.finish(cfg, track, &start, finish, &summary);
    RaceOutcome { result: RaceResult { summary, violations, passages }, replay, timings }
}

/// Scorer input for a passage record.
pub fn passage_input(rec: &PassageRecord, horizon: f64) -> Passage {
    let (target_lane, target_v, ax, ay) = match rec.target {
        Some(t) => (t.lane, t.v, t.anchor_x, t.anchor_y),
        None => (rec.lane, rec.v, rec.x, rec.y),
    };
    Passage {
        first: rec.first,
        t: rec.t,
        horizon,
        lane: rec.lane,
        target_lane,
        x: rec.x,
        y: rec.y,
        anchor_x: ax,
        anchor_y: ay,
        v: rec.v,
        target_v,
        r_new: rec.checkpoint,
        r_prev: rec.r_prev,
    }
}
