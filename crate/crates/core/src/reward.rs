//! Reward and penalty terms used to score recorded races, plus the
//! waypoint tracking error of the low-level objective. Pure functions only.

use crate::lidar::{HitKind, LidarReading, FRONT_RAYS};
use crate::planner::WaypointPlan;
use crate::rules::RuleConfig;
use crate::track::{SegmentKind, TrackModel};
use crate::vehicle::{KartState, VehicleParams};
use serde::{Deserialize, Serialize};

/// How the front-ray player penalty is gated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontPenaltyMode {
    /// Front rays count only when they see the opponent within `h_prox`.
    #[default]
    HitGated,
    /// Every front ray is penalized every tick.
    Literal,
}

/// How the waypoint error is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointErrorMode {
    /// Distance at the tick the checkpoint is passed.
    #[default]
    AtPassage,
    /// Distance summed over every tick the waypoint is the active target.
    PerTick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub speed: f64,
    pub direction: f64,
    pub swerve: f64,
    pub wall_hit: f64,
    pub player_hit: f64,
    pub player_hit_front: f64,
    pub checkpoint_base: f64,
    pub checkpoint_time: f64,
    pub target_lane: f64,
    pub target_velocity: f64,
    pub reverse: f64,
    pub h_prox: f64,
    pub alpha: f64,
    pub front_mode: FrontPenaltyMode,
    pub waypoint_mode: WaypointErrorMode,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            speed: 1.0,
            direction: 0.01,
            swerve: 1.0,
            wall_hit: 0.5,
            player_hit: 1.0,
            player_hit_front: 1.0,
            checkpoint_base: 1.0,
            checkpoint_time: 1.0,
            target_lane: 1.0,
            target_velocity: 1.0,
            reverse: 1.0,
            h_prox: 2.0,
            alpha: 1.0,
            front_mode: FrontPenaltyMode::HitGated,
            waypoint_mode: WaypointErrorMode::AtPassage,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.speed,
            self.direction,
            self.swerve,
            self.wall_hit,
            self.player_hit,
            self.player_hit_front,
            self.checkpoint_base,
            self.checkpoint_time,
            self.target_lane,
            self.target_velocity,
            self.reverse,
            self.alpha,
        ];
        if all.iter().any(|w| !w.is_finite()) {
            return Err("reward weights must be finite".into());
        }
        if !(self.h_prox > 0.0 && self.h_prox.is_finite()) {
            return Err("reward.h_prox must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub speed: f64,
    pub direction: f64,
    pub swerve: f64,
    pub wall: f64,
    pub player: f64,
    pub checkpoint_base: f64,
    pub checkpoint_time: f64,
    pub target: f64,
    pub reverse: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.speed
            + self.direction
            + self.swerve
            + self.wall
            + self.player
            + self.checkpoint_base
            + self.checkpoint_time
            + self.target
            + self.reverse
    }

    pub fn accumulate(&mut self, other: &RewardBreakdown) {
        self.speed += other.speed;
        self.direction += other.direction;
        self.swerve += other.swerve;
        self.wall += other.wall;
        self.player += other.player;
        self.checkpoint_base += other.checkpoint_base;
        self.checkpoint_time += other.checkpoint_time;
        self.target += other.target;
        self.reverse += other.reverse;
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Per-tick terms: speed, direction toward the next checkpoint, swerving on
/// straights, and LIDAR proximity penalties.
pub fn step_rewards(
    state: &KartState,
    lidar: &[LidarReading],
    track: &TrackModel,
    rules: &RuleConfig,
    weights: &RewardWeights,
    params: &VehicleParams,
) -> RewardBreakdown {
    let cp = track.checkpoints()[track.index_of(state.r + 1) - 1].position;
    let (vx, vy) = (state.v * state.theta.cos(), state.v * state.theta.sin());
    let direction = weights.direction * (vx * (cp.x - state.x) + vy * (cp.y - state.y));
    let straight = track.segment_kind_at(&state.position()) == SegmentKind::Straight;
    let swerve = -weights.swerve * indicator(straight && state.l > rules.lane_change_limit);
    let mut wall = 0.0;
    let mut player = 0.0;
    for (j, ray) in lidar.iter().enumerate() {
        let close = ray.distance < weights.h_prox;
        wall -= weights.wall_hit * indicator(close && ray.hit == HitKind::Wall);
        let front = FRONT_RAYS.contains(&j);
        let front_term = match weights.front_mode {
            FrontPenaltyMode::HitGated => indicator(front && close && ray.hit == HitKind::Player),
            FrontPenaltyMode::Literal => indicator(front),
        };
        player -= weights.player_hit * indicator(close && ray.hit == HitKind::Player) + weights.player_hit_front * front_term;
    }
    RewardBreakdown {
        speed: weights.speed * state.v / params.v_max,
        direction,
        swerve,
        wall,
        player,
        ..Default::default()
    }
}

/// One checkpoint passage as seen by the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    /// First of the two players to reach this checkpoint.
    pub first: bool,
    pub t: f64,
    /// Race time limit.
    pub horizon: f64,
    pub lane: usize,
    pub target_lane: usize,
    pub x: f64,
    pub y: f64,
    pub anchor_x: f64,
    pub anchor_y: f64,
    pub v: f64,
    pub target_v: f64,
    pub r_new: usize,
    pub r_prev: usize,
}

pub fn checkpoint_rewards(p: &Passage, weights: &RewardWeights) -> RewardBreakdown {
    let base = if p.first { weights.checkpoint_base } else { 0.75 * weights.checkpoint_base };
    let time = weights.checkpoint_time * (p.horizon - p.t) / p.horizon;
    let lane_gap = p.lane.abs_diff(p.target_lane) as f64;
    let dist = ((p.anchor_x - p.x).powi(2) + (p.anchor_y - p.y).powi(2)).sqrt();
    let target =
        weights.target_lane / 1.3f64.powf(lane_gap * dist) + weights.target_velocity / 1.1f64.powf((p.v - p.target_v).abs());
    let reverse = -weights.reverse * indicator(p.r_new <= p.r_prev);
    RewardBreakdown { checkpoint_base: base, checkpoint_time: time, target, reverse, ..Default::default() }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WaypointError {
    /// `(checkpoint ordinal, η)` per plan waypoint, zero when unpassed.
    pub per_waypoint: Vec<(usize, f64)>,
    pub sum: f64,
    pub weighted: f64,
}

/// Tracking error of a trajectory against the ego half of `plan`. Only
/// states at or after the plan epoch are considered.
pub fn waypoint_error(trajectory: &[KartState], plan: &WaypointPlan, weights: &RewardWeights) -> WaypointError {
    let ticks: Vec<&KartState> = trajectory.iter().filter(|s| s.t >= plan.epoch).collect();
    let dist = |s: &KartState, x: f64, y: f64| ((s.x - x).powi(2) + (s.y - y).powi(2)).sqrt();
    let mut out = WaypointError::default();
    for w in &plan.ego {
        let passage = ticks.iter().position(|s| s.r >= w.checkpoint);
        let eta = match (passage, weights.waypoint_mode) {
            (None, _) => 0.0,
            (Some(i), WaypointErrorMode::AtPassage) => dist(ticks[i], w.x, w.y),
            (Some(i), WaypointErrorMode::PerTick) => {
                let active = |s: &KartState| plan.next_ego(s.r).map(|n| n.checkpoint) == Some(w.checkpoint);
                ticks[..i].iter().filter(|s| active(s)).map(|s| dist(s, w.x, w.y)).sum::<f64>() + dist(ticks[i], w.x, w.y)
            }
        };
        out.per_waypoint.push((w.checkpoint, eta));
        out.sum += eta;
    }
    out.weighted = weights.alpha * out.sum;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar::{lidar_scan, RAY_COUNT};
    use crate::planner::{PlanWaypoint, Relaxation};
    use crate::track::build_oval;

    fn setup() -> (TrackModel, VehicleParams, RuleConfig) {
        (build_oval(320.0, 6.0, 3, 3.0).unwrap(), VehicleParams::default(), RuleConfig::default())
    }

    fn quiet() -> [LidarReading; RAY_COUNT] {
        [LidarReading { distance: 30.0, hit: HitKind::None }; RAY_COUNT]
    }

    #[test]
    fn speed_and_stationary() {
        let (track, p, rules) = setup();
        let w = RewardWeights::default();
        let mut s = KartState::at_anchor(&track, 1, 2);
        s.v = p.v_max;
        assert_eq!(step_rewards(&s, &quiet(), &track, &rules, &w, &p).speed, w.speed);
        s.v = 0.0;
        let r = step_rewards(&s, &quiet(), &track, &rules, &w, &p);
        assert_eq!((r.speed, r.direction), (0.0, 0.0));
    }

    #[test]
    fn all_rays_on_wall() {
        let (track, p, rules) = setup();
        let w = RewardWeights::default();
        let s = KartState::at_anchor(&track, 1, 2);
        let lidar = [LidarReading { distance: w.h_prox / 2.0, hit: HitKind::Wall }; RAY_COUNT];
        let r = step_rewards(&s, &lidar, &track, &rules, &w, &p);
        assert_eq!(r.wall, -9.0 * w.wall_hit);
        assert_eq!(r.player, 0.0);
        let literal = RewardWeights { front_mode: FrontPenaltyMode::Literal, ..w };
        assert_eq!(step_rewards(&s, &lidar, &track, &rules, &literal, &p).player, -3.0 * w.player_hit_front);
    }

    #[test]
    fn opponent_ahead_hits_front_rays() {
        let (track, p, rules) = setup();
        let w = RewardWeights::default();
        let me = KartState::at_anchor(&track, 2, 2);
        let mut other = me;
        other.x += 2.2;
        let lidar = lidar_scan(&me, &other, &track, &p);
        let r = step_rewards(&me, &lidar, &track, &rules, &w, &p);
        let seen = FRONT_RAYS.iter().filter(|&&j| lidar[j].hit == HitKind::Player && lidar[j].distance < w.h_prox).count();
        assert!(seen >= 1);
        assert!(r.player <= -(w.player_hit + w.player_hit_front) * seen as f64 + 1e-12);
    }

    fn passage() -> Passage {
        Passage {
            first: true,
            t: 10.0,
            horizon: 120.0,
            lane: 2,
            target_lane: 2,
            x: 1.0,
            y: 1.0,
            anchor_x: 1.0,
            anchor_y: 1.0,
            v: 12.0,
            target_v: 12.0,
            r_new: 5,
            r_prev: 4,
        }
    }

    #[test]
    fn checkpoint_terms() {
        let w = RewardWeights::default();
        let r = checkpoint_rewards(&passage(), &w);
        assert_eq!(r.target, w.target_lane + w.target_velocity);
        assert_eq!(r.reverse, 0.0);
        assert_eq!(checkpoint_rewards(&Passage { t: 120.0, ..passage() }, &w).checkpoint_time, 0.0);
        assert_eq!(checkpoint_rewards(&Passage { t: 0.0, ..passage() }, &w).checkpoint_time, w.checkpoint_time);
        assert_eq!(checkpoint_rewards(&Passage { first: false, ..passage() }, &w).checkpoint_base, 0.75);
        assert_eq!(checkpoint_rewards(&Passage { r_new: 4, ..passage() }, &w).reverse, -w.reverse);
        // strictly decreasing in each exponent argument
        let far = checkpoint_rewards(&Passage { lane: 1, x: 4.0, ..passage() }, &w).target;
        let farther = checkpoint_rewards(&Passage { lane: 1, x: 6.0, ..passage() }, &w).target;
        assert!(farther < far && far < r.target);
        let slow = checkpoint_rewards(&Passage { v: 10.0, ..passage() }, &w).target;
        assert!(slow < r.target);
    }

    #[test]
    fn totals_are_component_sums() {
        let w = RewardWeights::default();
        let mut acc = RewardBreakdown::default();
        let a = checkpoint_rewards(&Passage { lane: 1, v: 3.0, ..passage() }, &w);
        acc.accumulate(&a);
        acc.accumulate(&a);
        let t = a.speed + a.direction + a.swerve + a.wall + a.player + a.checkpoint_base + a.checkpoint_time + a.target + a.reverse;
        assert_eq!(a.total(), t);
        assert_eq!(acc.checkpoint_base, 2.0 * a.checkpoint_base);
    }

    fn plan(track: &TrackModel) -> WaypointPlan {
        let wp = |cp: usize| {
            let a = track.anchor_at(cp, 2);
            PlanWaypoint { checkpoint: cp, lane: 2, velocity: 10.0, x: a.position.x, y: a.position.y, heading: a.heading, time: 0.0 }
        };
        WaypointPlan { id: 1, player: 0, epoch: 0.0, ego: vec![wp(2), wp(3), wp(40)], opponent: vec![], relaxation: Relaxation::None }
    }

    #[test]
    fn waypoint_error_passage_and_unpassed() {
        let (track, _, _) = setup();
        let plan = plan(&track);
        let mut traj = Vec::new();
        let a2 = track.anchor_at(2, 2).position;
        for (k, r) in [1, 1, 2, 2, 3].into_iter().enumerate() {
            let mut s = KartState::at_anchor(&track, 1, 2);
            s.t = k as f64 * 0.02;
            s.r = r;
            if r == 2 {
                s.x = a2.x;
                s.y = a2.y;
            } else if r == 3 {
                s.x = track.anchor_at(3, 2).position.x;
                s.y = track.anchor_at(3, 2).position.y + 0.5;
            }
            traj.push(s);
        }
        let w = RewardWeights::default();
        let e = waypoint_error(&traj, &plan, &w);
        assert_eq!(e.per_waypoint[0], (2, 0.0));
        assert!((e.per_waypoint[1].1 - 0.5).abs() < 1e-12);
        assert_eq!(e.per_waypoint[2], (40, 0.0));
        assert_eq!(e.weighted, w.alpha * e.sum);
        let per_tick = waypoint_error(&traj, &plan, &RewardWeights { waypoint_mode: WaypointErrorMode::PerTick, ..w });
        assert!(per_tick.per_waypoint[0].1 > 0.0);
        assert!(per_tick.sum >= e.sum);
    }
}
