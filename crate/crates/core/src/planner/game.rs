//! Turn-based discrete approximation of the race: players hop between lane
//! anchors of consecutive checkpoints at bucketed speeds, and whoever has the
//! smaller time state moves next.

use crate::geometry::{self, Point};
use crate::rules::RuleConfig;
use crate::track::{SegmentKind, TrackModel};
use crate::vehicle::{KartState, VehicleParams};
use serde::{Deserialize, Serialize};

/// Half-open speed buckets `[b_k, b_{k+1})`; the last one is unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPartition {
    bounds: Vec<f64>,
    top: f64,
}

impl SpeedPartition {
    /// `n` equal buckets over `[0, v_max]`.
    pub fn uniform(n: usize, v_max: f64) -> Self {
        let n = n.max(1);
        let bounds = (1..n).map(|k| v_max * k as f64 / n as f64).collect();
        Self { bounds, top: v_max }
    }

    /// Interior boundaries in increasing order; `top` closes the last bucket
    /// for its representative speed.
    pub fn from_bounds(bounds: Vec<f64>, top: f64) -> Self {
        Self { bounds, top }
    }

    pub fn len(&self) -> usize {
        self.bounds.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bucket(&self, v: f64) -> usize {
        self.bounds.iter().take_while(|b| **b <= v).count()
    }

    /// Representative (target) speed of a bucket: its midpoint.
    pub fn midpoint(&self, k: usize) -> f64 {
        let lo = if k == 0 { 0.0 } else { self.bounds[k - 1] };
        let hi = if k + 1 < self.len() { self.bounds[k] } else { self.top };
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WearPartition {
    pub step: f64,
}

impl WearPartition {
    pub fn len(&self) -> usize {
        (1.0 / self.step).ceil() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bucket(&self, wear: f64) -> usize {
        let mut k = (wear / self.step).floor().max(0.0) as usize;
        // guard against the quotient landing just below an exact boundary
        if (k + 1) as f64 * self.step <= wear + 1e-12 {
            k += 1;
        }
        k.min(self.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub speed: SpeedPartition,
    pub wear: WearPartition,
}

impl Partitions {
    pub fn new(speed_buckets: usize, wear_step: f64, params: &VehicleParams) -> Self {
        Self { speed: SpeedPartition::uniform(speed_buckets, params.v_max), wear: WearPartition { step: wear_step } }
    }
}

/// Per-player discrete state. Time is kept in integer centiseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteState {
    /// Progress ordinal of the checkpoint the player stands at.
    pub checkpoint: usize,
    pub lane: usize,
    pub speed: usize,
    pub wear_bucket: usize,
    /// Continuous wear estimate behind `wear_bucket`.
    pub wear: f64,
    pub time_cs: i64,
    pub l: u32,
    pub section: usize,
}

impl DiscreteState {
    pub fn time(&self) -> f64 {
        self.time_cs as f64 / 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteAction {
    pub lane: usize,
    pub speed: usize,
}

/// Seconds to centiseconds, rounding halves up.
pub fn to_centis(t: f64) -> i64 {
    (t * 100.0 + 0.5).floor() as i64
}

pub fn discretize(k: &KartState, track: &TrackModel, partitions: &Partitions) -> DiscreteState {
    DiscreteState {
        checkpoint: k.r,
        lane: k.lane,
        speed: partitions.speed.bucket(k.v),
        wear_bucket: partitions.wear.bucket(k.wear),
        wear: k.wear,
        time_cs: to_centis(k.t.max(0.0)),
        l: k.l,
        section: track.segment_id(track.index_of(k.r)),
    }
}

/// A checkpoint reached by a player in the lane at the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub checkpoint: usize,
    pub lane: usize,
    pub time_cs: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub players: [DiscreteState; 2],
    pub arrivals: [Vec<Arrival>; 2],
    /// Both players play until reaching this ordinal.
    pub frontier: usize,
}

/// Ascending time state, ties to the lower id.
pub fn turn_order(joint: &JointState) -> [usize; 2] {
    let [a, b] = &joint.players;
    if b.time_cs < a.time_cs {
        [1, 0]
    } else {
        [0, 1]
    }
}

/// Why an action was pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prune {
    Infeasible,
    LaneLimit,
    CollisionRisk,
}

/// A legal action with its precomputed outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub action: DiscreteAction,
    pub dt: f64,
    pub next: DiscreteState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relaxation {
    #[default]
    None,
    /// Same-lane arrival pruning dropped.
    CollisionRisk,
    /// Only the emergency braking action remained.
    Emergency,
}

#[derive(Debug, Clone, Copy)]
struct Upcoming {
    distance: f64,
    radius: f64,
}

/// Precomputed anchor geometry plus the parameters the discrete game needs.
#[derive(Debug, Clone)]
pub struct GameModel<'a> {
    pub track: &'a TrackModel,
    pub params: VehicleParams,
    pub rules: RuleConfig,
    pub partitions: Partitions,
    anchors: Vec<Vec<Point>>,
    radii: Vec<Vec<f64>>,
    upcoming: Vec<Vec<Vec<Upcoming>>>,
}

impl<'a> GameModel<'a> {
    pub fn new(track: &'a TrackModel, params: VehicleParams, rules: RuleConfig, partitions: Partitions) -> Self {
        let n = track.len();
        let lanes = track.lane_count();
        let anchors: Vec<Vec<Point>> = (1..=n)
            .map(|i| (1..=lanes).map(|a| track.lane_anchor(i, a).expect("in range").position).collect())
            .collect();
        let radii: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..lanes)
                    .map(|a| {
                        if track.checkpoints()[i].kind != SegmentKind::Curve {
                            return f64::INFINITY;
                        }
                        if !track.is_closed() && (i == 0 || i == n - 1) {
                            return track.curve_radius(i + 1);
                        }
                        let prev = anchors[(i + n - 1) % n][a];
                        let next = anchors[(i + 1) % n][a];
                        geometry::circumradius(&prev, &anchors[i][a], &next)
                    })
                    .collect()
            })
            .collect();
        // Curve checkpoints close enough that braking for them constrains the
        // speed chosen now.
        let reach = params.v_max * params.v_max / (2.0 * params.a_max);
        let upcoming = (0..n)
            .map(|i| {
                (0..lanes)
                    .map(|a| {
                        let mut out = Vec::new();
                        let mut dist = 0.0;
                        let mut j = i;
                        for _ in 1..n {
                            if !track.is_closed() && j + 1 >= n {
                                break;
                            }
                            let k = (j + 1) % n;
                            dist += (anchors[k][a] - anchors[j][a]).norm();
                            if dist > reach {
                                break;
                            }
                            if radii[k][a].is_finite() {
                                out.push(Upcoming { distance: dist, radius: radii[k][a] });
                            }
                            j = k;
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Self { track, params, rules, partitions, anchors, radii, upcoming }
    }

    pub fn lane_count(&self) -> usize {
        self.track.lane_count()
    }

    pub fn speed_buckets(&self) -> usize {
        self.partitions.speed.len()
    }

    /// Anchor position for a progress ordinal.
    pub fn anchor(&self, ordinal: usize, lane: usize) -> Point {
        self.anchors[self.track.index_of(ordinal) - 1][lane - 1]
    }

    /// Radius of the lane's path through a curve checkpoint (infinite on
    /// straights).
    pub fn lane_radius(&self, ordinal: usize, lane: usize) -> f64 {
        self.radii[self.track.index_of(ordinal) - 1][lane - 1]
    }

    /// Action index used for deterministic tie-breaking.
    pub fn action_index(&self, a: DiscreteAction) -> usize {
        (a.lane - 1) * self.speed_buckets() + a.speed
    }

    pub fn all_actions(&self) -> impl Iterator<Item = DiscreteAction> + '_ {
        let n = self.speed_buckets();
        (1..=self.lane_count()).flat_map(move |lane| (0..n).map(move |speed| DiscreteAction { lane, speed }))
    }

    fn can_advance(&self, s: &DiscreteState) -> bool {
        self.track.is_closed() || s.checkpoint < self.track.len()
    }

    /// Inverse-dynamics estimate of moving to the next checkpoint: the time
    /// taken and the resulting state, or `None` when the speed change or the
    /// curve speed limits make it infeasible.
    pub fn estimate_transition(&self, s: &DiscreteState, a: DiscreteAction) -> Option<(f64, DiscreteState)> {
        self.transition(s, a, true)
    }

    fn transition(&self, s: &DiscreteState, a: DiscreteAction, enforce_caps: bool) -> Option<(f64, DiscreteState)> {
        if !self.can_advance(s) || a.lane == 0 || a.lane > self.lane_count() || a.speed >= self.speed_buckets() {
            return None;
        }
        let p = &self.params;
        let to = s.checkpoint + 1;
        let from_idx = self.track.index_of(s.checkpoint);
        let to_idx = self.track.index_of(to);
        let d = (self.anchor(to, a.lane) - self.anchor(s.checkpoint, s.lane)).norm();
        let v0 = self.partitions.speed.midpoint(s.speed);
        let v1 = self.partitions.speed.midpoint(a.speed);
        let dv2 = (v1 * v1 - v0 * v0).abs();
        if dv2 > 2.0 * p.a_max * d + 1e-9 {
            return None;
        }
        if enforce_caps {
            let lat = p.lat_max * p.grip(s.wear);
            let r = self.radii[to_idx - 1][a.lane - 1];
            if v1 * v1 > lat * r + 1e-9 {
                return None;
            }
            // a lane shift h over chord d is an S-bend of radius d²/4h
            let h = (self.track.lane_offsets()[a.lane - 1] - self.track.lane_offsets()[s.lane - 1]).abs();
            if h > 0.0 && v0.max(v1).powi(2) > lat * d * d / (4.0 * h) + 1e-9 {
                return None;
            }
            for u in &self.upcoming[to_idx - 1][a.lane - 1] {
                if v1 * v1 > lat * u.radius + 2.0 * p.a_max * u.distance + 1e-9 {
                    return None;
                }
            }
        }
        let ramp = dv2 / (2.0 * p.a_max);
        let dt = (v1 - v0).abs() / p.a_max + (d - ramp).max(0.0) / v0.max(v1);
        let cps = self.track.checkpoints();
        let turn = geometry::wrap_angle(cps[to_idx - 1].heading - cps[from_idx - 1].heading).abs();
        let offsets = self.track.lane_offsets();
        let shift = (offsets[a.lane - 1] - offsets[s.lane - 1]).abs();
        let swerve = 2.0 * (shift / d).atan();
        let wear = 1.0 - (1.0 - s.wear) * (-p.wear_rate * (turn + swerve)).exp();
        let d_lane = s.lane.abs_diff(a.lane) as u32;
        let same_kind = cps[to_idx - 1].kind == cps[from_idx - 1].kind;
        let next = DiscreteState {
            checkpoint: to,
            lane: a.lane,
            speed: a.speed,
            wear_bucket: self.partitions.wear.bucket(wear),
            wear,
            time_cs: to_centis(s.time() + dt),
            l: if same_kind { s.l + d_lane } else { d_lane },
            section: self.track.segment_id(to_idx),
        };
        Some((dt, next))
    }

    /// Lane-change limit on straights, applied conservatively when the move
    /// crosses a section boundary.
    pub fn lane_change_allowed(&self, s: &DiscreteState, a: DiscreteAction) -> bool {
        let d = s.lane.abs_diff(a.lane) as u32;
        if d == 0 {
            return true;
        }
        let limit = self.rules.lane_change_limit;
        let cps = self.track.checkpoints();
        let from = cps[self.track.index_of(s.checkpoint) - 1].kind;
        let to = cps[self.track.index_of(s.checkpoint + 1) - 1].kind;
        if from == to {
            return to != SegmentKind::Straight || s.l + d <= limit;
        }
        (from != SegmentKind::Straight || s.l + d <= limit) && (to != SegmentKind::Straight || d <= limit)
    }

    /// Same lane as the opponent's committed arrival at the same checkpoint
    /// too close in time.
    pub fn collision_risk(&self, joint: &JointState, mover: usize, next: &DiscreteState) -> bool {
        let thr = to_centis(self.rules.collision_time_threshold);
        joint.arrivals[1 - mover]
            .iter()
            .any(|r| r.checkpoint == next.checkpoint && r.lane == next.lane && (r.time_cs - next.time_cs).abs() < thr)
    }

    /// Classifies one action for the mover: its outcome or the first rule
    /// that prunes it.
    pub fn classify(&self, joint: &JointState, mover: usize, a: DiscreteAction) -> Result<Move, Prune> {
        let s = &joint.players[mover];
        let (dt, next) = self.estimate_transition(s, a).ok_or(Prune::Infeasible)?;
        if !self.lane_change_allowed(s, a) {
            return Err(Prune::LaneLimit);
        }
        if self.collision_risk(joint, mover, &next) {
            return Err(Prune::CollisionRisk);
        }
        Ok(Move { action: a, dt, next })
    }

    /// Actions surviving every pruning rule, in action-index order.
    pub fn legal_actions(&self, joint: &JointState, mover: usize) -> Vec<Move> {
        self.all_actions().filter_map(|a| self.classify(joint, mover, a).ok()).collect()
    }

    /// Legal actions, relaxing the collision-risk prune and then falling back
    /// to hard braking in the current lane when nothing survives. Empty only
    /// when the player cannot advance at all.
    pub fn moves_with_fallback(&self, joint: &JointState, mover: usize) -> (Vec<Move>, Relaxation) {
        let strict = self.legal_actions(joint, mover);
        if !strict.is_empty() {
            return (strict, Relaxation::None);
        }
        let relaxed: Vec<Move> = self
            .all_actions()
            .filter_map(|a| match self.classify(joint, mover, a) {
                Ok(m) => Some(m),
                Err(Prune::CollisionRisk) => {
                    let (dt, next) = self.estimate_transition(&joint.players[mover], a)?;
                    Some(Move { action: a, dt, next })
                }
                Err(_) => None,
            })
            .collect();
        if !relaxed.is_empty() {
            return (relaxed, Relaxation::CollisionRisk);
        }
        let s = &joint.players[mover];
        for speed in 0..self.speed_buckets() {
            let a = DiscreteAction { lane: s.lane, speed };
            if let Some((dt, next)) = self.transition(s, a, false) {
                return (vec![Move { action: a, dt, next }], Relaxation::Emergency);
            }
        }
        (Vec::new(), Relaxation::Emergency)
    }

    /// Player to move: the smaller time state among those short of the
    /// frontier.
    pub fn mover(&self, joint: &JointState) -> Option<usize> {
        turn_order(joint)
            .into_iter()
            .find(|&p| joint.players[p].checkpoint < joint.frontier && self.can_advance(&joint.players[p]))
    }

    pub fn apply(&self, joint: &JointState, mover: usize, m: &Move) -> JointState {
        let mut next = joint.clone();
        next.players[mover] = m.next;
        next.arrivals[mover].push(Arrival { checkpoint: m.next.checkpoint, lane: m.next.lane, time_cs: m.next.time_cs });
        next
    }

    /// Time advantage of `ego` once play has stopped.
    pub fn value(&self, joint: &JointState, ego: usize) -> f64 {
        joint.players[1 - ego].time() - joint.players[ego].time()
    }

    /// Root of the game from the continuous race state. Each player's time is
    /// backdated to the moment it stood at its last checkpoint anchor, so the
    /// first transition is not double counted.
    pub fn root(&self, karts: &[KartState; 2], horizon: usize) -> JointState {
        let players = karts.map(|k| {
            let mut d = discretize(&k, self.track, &self.partitions);
            let past = (self.track.arc_progress(&k.position(), k.r) - self.track.arc_at_ordinal(k.r)).max(0.0);
            d.time_cs = to_centis((k.t - past / k.v.max(1.0)).max(0.0));
            d
        });
        let arrivals = players.map(|d| vec![Arrival { checkpoint: d.checkpoint, lane: d.lane, time_cs: d.time_cs }]);
        let mut frontier = players[0].checkpoint.max(players[1].checkpoint) + horizon.max(1);
        if !self.track.is_closed() {
            frontier = frontier.min(self.track.len());
        }
        JointState { players, arrivals, frontier }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{build_complex, build_oval};
    use crate::vehicle::{integrate, ControlInput};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(track: &TrackModel) -> GameModel<'_> {
        let p = VehicleParams::default();
        GameModel::new(track, p, RuleConfig::default(), Partitions::new(8, 0.05, &p))
    }

    fn node(cp: usize, lane: usize, speed: usize, t: f64, l: u32) -> DiscreteState {
        DiscreteState { checkpoint: cp, lane, speed, wear_bucket: 0, wear: 0.0, time_cs: to_centis(t), l, section: 0 }
    }

    #[test]
    fn bucket_examples() {
        let s = SpeedPartition::from_bounds(vec![2.0, 4.0], 6.0);
        assert_eq!(s.bucket(3.0), 1);
        assert_eq!(s.bucket(2.0), 1);
        assert_eq!(s.bucket(1.999), 0);
        assert_eq!(s.bucket(40.0), 2);
        let w = WearPartition { step: 0.05 };
        assert_eq!(w.bucket(0.12), 2);
        assert_eq!(w.bucket(0.15), 3);
        assert_eq!(w.bucket(1.0), 19);
        assert_eq!(to_centis(10.125), 1013);
        assert_eq!(to_centis(0.004999), 0);
    }

    #[test]
    fn constant_speed_transition() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let m = model(&track);
        let s = node(2, 2, 4, 0.0, 0);
        let (dt, next) = m.estimate_transition(&s, DiscreteAction { lane: 2, speed: 4 }).unwrap();
        let d = (m.anchor(3, 2) - m.anchor(2, 2)).norm();
        assert!((dt - d / m.partitions.speed.midpoint(4)).abs() < 1e-12);
        assert_eq!(next.checkpoint, 3);
        assert_eq!(next.time_cs, to_centis(dt));
    }

    #[test]
    fn acceleration_bound() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let m = model(&track);
        assert!(m.estimate_transition(&node(2, 2, 0, 0.0, 0), DiscreteAction { lane: 2, speed: 7 }).is_none());
    }

    #[test]
    fn lane_limit_on_straight() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let m = model(&track);
        let joint = JointState {
            players: [node(2, 2, 4, 0.0, 2), node(40, 2, 4, 50.0, 0)],
            arrivals: [vec![], vec![]],
            frontier: 10,
        };
        let legal = m.legal_actions(&joint, 0);
        assert!(!legal.is_empty());
        assert!(legal.iter().all(|mv| mv.action.lane == 2));
    }

    #[test]
    fn same_lane_arrival_is_pruned() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let m = model(&track);
        // slow enough that the neighbouring lanes are reachable
        let mover = node(2, 2, 1, 0.0, 0);
        let (_, reach) = m.estimate_transition(&mover, DiscreteAction { lane: 2, speed: 1 }).unwrap();
        let opp_t = reach.time_cs - 30;
        let joint = JointState {
            players: [mover, node(3, 2, 1, opp_t as f64 / 100.0, 0)],
            arrivals: [vec![], vec![Arrival { checkpoint: 3, lane: 2, time_cs: opp_t }]],
            frontier: 10,
        };
        let legal = m.legal_actions(&joint, 0);
        assert!(legal.iter().all(|mv| !(mv.action.lane == 2 && (mv.next.time_cs - opp_t).abs() < 50)));
        assert!(matches!(m.classify(&joint, 0, DiscreteAction { lane: 2, speed: 1 }), Err(Prune::CollisionRisk)));
        assert!(legal.iter().any(|mv| mv.action.lane != 2));
    }

    #[test]
    fn turn_order_ties_by_id() {
        let mk = |a: f64, b: f64| JointState {
            players: [node(1, 1, 0, a, 0), node(1, 2, 0, b, 0)],
            arrivals: [vec![], vec![]],
            frontier: 3,
        };
        assert_eq!(turn_order(&mk(10.0, 10.5)), [0, 1]);
        assert_eq!(turn_order(&mk(10.0, 10.0)), [0, 1]);
        assert_eq!(turn_order(&mk(11.0, 10.0)), [1, 0]);
    }

    #[test]
    fn curve_action_count_matches_exhaustive_filter() {
        let track = build_complex().unwrap();
        let m = model(&track);
        let p = VehicleParams::default();
        // a curve checkpoint
        let cp = (1..=track.len()).find(|&i| track.kind_of(i) == SegmentKind::Curve && track.kind_of(i + 1) == SegmentKind::Curve).unwrap();
        let s = node(cp, 2, 3, 5.0, 0);
        let joint = JointState { players: [s, node(cp + 20, 1, 3, 40.0, 0)], arrivals: [vec![], vec![]], frontier: cp + 5 };
        let mut want = 0;
        for lane in 1..=3 {
            for speed in 0..8 {
                let v0 = m.partitions.speed.midpoint(3);
                let v1 = m.partitions.speed.midpoint(speed);
                let d = (m.anchor(cp + 1, lane) - m.anchor(cp, 2)).norm();
                let kin = (v1 * v1 - v0 * v0).abs() <= 2.0 * p.a_max * d;
                let a0 = m.anchor(cp, lane);
                let a1 = m.anchor(cp + 1, lane);
                let a2 = m.anchor(cp + 2, lane);
                let r = geometry::circumradius(&a0, &a1, &a2);
                let mut ok = kin && v1 * v1 <= p.lat_max * r;
                // sideways shift taken as two opposite arcs over the chord
                let h = (track.lane_offsets()[lane - 1] - track.lane_offsets()[1]).abs();
                if h > 0.0 {
                    let half_chord = d / 2.0;
                    let half_shift = h / 2.0;
                    let radius = (half_chord * half_chord) / (2.0 * half_shift);
                    ok &= v0.max(v1).powi(2) <= p.lat_max * radius;
                }
                // braking envelope for the next curve points of the lane
                let mut dist = 0.0;
                for k in 1..track.len() {
                    let (b0, b1, b2) = (m.anchor(cp + k, lane), m.anchor(cp + k + 1, lane), m.anchor(cp + k + 2, lane));
                    dist += (b1 - b0).norm();
                    if dist > p.v_max * p.v_max / (2.0 * p.a_max) {
                        break;
                    }
                    if track.kind_of(track.index_of(cp + k + 1)) == SegmentKind::Curve {
                        let rr = geometry::circumradius(&b0, &b1, &b2);
                        ok &= v1 * v1 <= p.lat_max * rr + 2.0 * p.a_max * dist;
                    }
                }
                want += ok as usize;
            }
        }
        assert_eq!(m.legal_actions(&joint, 0).len(), want);
    }

    // Drive the point-mass kinematics along the chord between anchors with
    // the ramp-then-cruise / cruise-then-brake profile.
    fn simulate(m: &GameModel, s: &DiscreteState, a: DiscreteAction) -> f64 {
        let p = m.params;
        let start = m.anchor(s.checkpoint, s.lane);
        let end = m.anchor(s.checkpoint + 1, a.lane);
        let d = (end - start).norm();
        let v1 = m.partitions.speed.midpoint(a.speed);
        let mut k = KartState { x: 0.0, y: 0.0, v: m.partitions.speed.midpoint(s.speed), theta: 0.0, wear: 0.0, r: 1, l: 0, lane: 1, t: 0.0, gamma: None };
        let dt = 0.001;
        while k.x < d {
            let remaining = d - k.x;
            let acc = if k.v < v1 {
                ((v1 - k.v) / dt).min(p.a_max)
            } else if k.v > v1 && k.v * k.v - v1 * v1 >= 2.0 * p.a_max * remaining {
                -((k.v - v1) / dt).min(p.a_max)
            } else {
                0.0
            };
            let prev = k;
            k = integrate(&k, ControlInput::new(acc, 0.0), dt, &p);
            if k.x >= d {
                return prev.t + (d - prev.x) / (k.x - prev.x) * dt;
            }
        }
        k.t
    }

    #[test]
    fn transition_time_matches_forward_simulation() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let m = model(&track);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 200 {
            let s = node(rng.random_range(1..=track.len()), rng.random_range(1..=3), rng.random_range(0..8), 0.0, 0);
            let a = DiscreteAction { lane: rng.random_range(1..=3), speed: rng.random_range(0..8) };
            if let Some((dt, _)) = m.estimate_transition(&s, a) {
                let sim = simulate(&m, &s, a);
                assert!((dt - sim).abs() / sim < 0.05, "{dt} vs {sim}");
                checked += 1;
            }
        }
    }
}
