//! Safety and fairness rules: the asymmetric following gap with fault
//! attribution, the lane-change limit on straights, and track limits.

use crate::geometry;
use crate::track::{SegmentKind, TrackModel};
use crate::vehicle::{nose_distance, KartState, VehicleParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneCounterMode {
    /// Hold the count between changes, reset when the section kind changes.
    #[default]
    Hold,
    /// Reset whenever a tick has no lane change.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Side-by-side minimum gap, m.
    pub s0: f64,
    /// Following minimum gap, m.
    pub s1: f64,
    /// Lane changes allowed per straight section.
    pub lane_change_limit: u32,
    pub behind_cone_half_angle: f64,
    /// Same-lane arrival separation required by the planner, s.
    pub collision_time_threshold: f64,
    pub lane_counter_mode: LaneCounterMode,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            s0: 1.0,
            s1: 3.0,
            lane_change_limit: 2,
            behind_cone_half_angle: std::f64::consts::FRAC_PI_3,
            collision_time_threshold: 0.5,
            lane_counter_mode: LaneCounterMode::Hold,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.s0 > 0.0 && self.s1 > self.s0 && self.s1.is_finite()) {
            return Err(format!("rules need s1 > s0 > 0, got s0 = {}, s1 = {}", self.s0, self.s1));
        }
        if !(self.behind_cone_half_angle > 0.0 && self.behind_cone_half_angle <= std::f64::consts::PI) {
            return Err("rules.behind_cone_half_angle must lie in (0, π]".into());
        }
        if !(self.collision_time_threshold >= 0.0 && self.collision_time_threshold.is_finite()) {
            return Err("rules.collision_time_threshold must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CollisionAtFault,
    CollisionNoFault,
    IllegalLaneChange,
    OffTrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// 0-based player index.
    pub player: usize,
    pub time: f64,
}

/// Player `i` trails `j` along the centerline and `j` lies inside the forward
/// cone of `i`'s nose.
pub fn is_behind(i: &KartState, j: &KartState, track: &TrackModel, params: &VehicleParams, cfg: &RuleConfig) -> bool {
    let si = track.arc_progress(&i.position(), i.r);
    let sj = track.arc_progress(&j.position(), j.r);
    if si >= sj {
        return false;
    }
    let to_j = j.position() - i.nose(params);
    if to_j.norm_squared() == 0.0 {
        return true;
    }
    let bearing = geometry::wrap_angle(to_j.y.atan2(to_j.x) - i.theta);
    bearing.abs() <= cfg.behind_cone_half_angle
}

pub fn required_gap(i: &KartState, j: &KartState, track: &TrackModel, params: &VehicleParams, cfg: &RuleConfig) -> f64 {
    if is_behind(i, j, track, params, cfg) {
        cfg.s1
    } else {
        cfg.s0
    }
}

/// Debounces gap breaches of one ordered pair into contact events. Fault is
/// decided at onset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GapMonitor {
    open: bool,
}

impl GapMonitor {
    pub fn is_open(&self) -> bool {
        self.open
    }

    /// Call once per tick for the ordered pair `(i, j)`; `player` is `i`'s
    /// index.
    pub fn check(
        &mut self,
        player: usize,
        i: &KartState,
        j: &KartState,
        track: &TrackModel,
        params: &VehicleParams,
        cfg: &RuleConfig,
    ) -> Option<Violation> {
        let behind = is_behind(i, j, track, params, cfg);
        let gap = if behind { cfg.s1 } else { cfg.s0 };
        let breached = nose_distance(i, j, params) < gap;
        match (self.open, breached) {
            (false, true) => {
                self.open = true;
                let kind = if behind { ViolationKind::CollisionAtFault } else { ViolationKind::CollisionNoFault };
                Some(Violation { kind, player, time: i.t })
            }
            (true, false) => {
                self.open = false;
                None
            }
            _ => None,
        }
    }
}

/// Recent lane-change counter after moving from `prev` to `next`.
pub fn update_lane_counter(l_prev: u32, prev: &KartState, next: &KartState, track: &TrackModel, mode: LaneCounterMode) -> u32 {
    let kind_prev = track.segment_kind_at(&prev.position());
    let kind_next = track.segment_kind_at(&next.position());
    let changed = prev.lane != next.lane;
    match mode {
        LaneCounterMode::Hold => {
            if kind_prev != kind_next {
                0
            } else if changed {
                l_prev + 1
            } else {
                l_prev
            }
        }
        LaneCounterMode::Literal => {
            if kind_prev == kind_next && changed {
                l_prev + 1
            } else {
                0
            }
        }
    }
}

/// One violation per lane change that takes the counter past the limit on a
/// straight.
pub fn check_lane_limit(l_prev: u32, next: &KartState, player: usize, track: &TrackModel, cfg: &RuleConfig) -> Option<Violation> {
    let straight = track.segment_kind_at(&next.position()) == SegmentKind::Straight;
    (straight && next.l > cfg.lane_change_limit && next.l > l_prev).then_some(Violation {
        kind: ViolationKind::IllegalLaneChange,
        player,
        time: next.t,
    })
}

/// Emits once when a kart leaves the track bounds; re-arms on return.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OffTrackMonitor {
    out: bool,
}

impl OffTrackMonitor {
    pub fn check(&mut self, player: usize, outside: bool, time: f64) -> Option<Violation> {
        let fire = outside && !self.out;
        self.out = outside;
        fire.then_some(Violation { kind: ViolationKind::OffTrack, player, time })
    }
}

/// Streaming evaluation of every rule for both players over consecutive
/// ticks.
#[derive(Debug, Clone, Default)]
pub struct RuleTracker {
    gaps: [GapMonitor; 2],
    off: [OffTrackMonitor; 2],
}

impl RuleTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// `states` are the post-step states whose lane counters were already
    /// advanced from `l_prev`; `outside` flags wall contact this tick.
    /// Players that have finished are no longer checked.
    pub fn observe(
        &mut self,
        l_prev: [u32; 2],
        states: &[KartState; 2],
        outside: [bool; 2],
        track: &TrackModel,
        params: &VehicleParams,
        cfg: &RuleConfig,
    ) -> Vec<Violation> {
        let mut out = Vec::new();
        if states.iter().all(|s| s.gamma.is_none()) {
            for p in 0..2 {
                let q = 1 - p;
                out.extend(self.gaps[p].check(p, &states[p], &states[q], track, params, cfg));
            }
        }
        for p in (0..2).filter(|&p| states[p].gamma.is_none()) {
            out.extend(check_lane_limit(l_prev[p], &states[p], p, track, cfg));
            out.extend(self.off[p].check(p, outside[p], states[p].t));
        }
        out
    }
}
