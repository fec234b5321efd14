//! Kart state and its fixed-step kinematic update with tire wear and a
//! grip-dependent cornering limit.

use crate::geometry::{self, OrientedBox, Point};
use crate::rules::{self, LaneCounterMode};
use crate::track::TrackModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub v_max: f64,
    pub a_max: f64,
    pub e_max: f64,
    /// Lateral acceleration limit on fresh tires, m/s².
    pub lat_max: f64,
    /// Wear accumulation per radian of yaw.
    pub wear_rate: f64,
    pub grip_floor: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub nose_offset: f64,
    pub lidar_range: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            v_max: 25.0,
            a_max: 8.0,
            e_max: 2.0,
            lat_max: 12.0,
            wear_rate: 0.005,
            grip_floor: 0.4,
            half_length: 0.75,
            half_width: 0.5,
            nose_offset: 0.75,
            lidar_range: 30.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("e_max", self.e_max),
            ("lat_max", self.lat_max),
            ("wear_rate", self.wear_rate),
            ("half_length", self.half_length),
            ("half_width", self.half_width),
            ("nose_offset", self.nose_offset),
            ("lidar_range", self.lidar_range),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("vehicle.{name} must be positive, got {v}"));
            }
        }
        if !(self.grip_floor > 0.0 && self.grip_floor < 1.0) {
            return Err(format!("vehicle.grip_floor must lie in (0, 1), got {}", self.grip_floor));
        }
        Ok(())
    }

    /// Remaining grip fraction for a wear level.
    pub fn grip(&self, wear: f64) -> f64 {
        self.grip_floor + (1.0 - self.grip_floor) * (1.0 - wear)
    }

    /// Highest speed sustainable through a curve of `radius`.
    pub fn curve_speed_cap(&self, radius: f64, wear: f64) -> f64 {
        (self.lat_max * self.grip(wear) * radius).sqrt().min(self.v_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Longitudinal acceleration, m/s².
    pub a: f64,
    /// Yaw rate, rad/s.
    pub e: f64,
}

impl ControlInput {
    pub fn new(a: f64, e: f64) -> Self {
        Self { a, e }
    }

    pub fn clamped(self, params: &VehicleParams) -> Self {
        let fix = |x: f64| if x.is_finite() { x } else { 0.0 };
        Self {
            a: fix(self.a).clamp(-params.a_max, params.a_max),
            e: fix(self.e).clamp(-params.e_max, params.e_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KartState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
    pub wear: f64,
    /// Progress ordinal of the last checkpoint passed.
    pub r: usize,
    /// Recent lane-change counter.
    pub l: u32,
    pub lane: usize,
    pub t: f64,
    /// Finish time, set once.
    pub gamma: Option<f64>,
}

impl KartState {
    /// Stationary kart on a lane anchor.
    pub fn at_anchor(track: &TrackModel, checkpoint: usize, lane: usize) -> Self {
        let a = track.anchor_at(checkpoint, lane);
        Self {
            x: a.position.x,
            y: a.position.y,
            v: 0.0,
            theta: a.heading,
            wear: 0.0,
            r: checkpoint,
            l: 0,
            lane: a.lane,
            t: 0.0,
            gamma: None,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn nose(&self, params: &VehicleParams) -> Point {
        self.position() + geometry::direction(self.theta) * params.nose_offset
    }

    pub fn footprint(&self, params: &VehicleParams) -> OrientedBox {
        OrientedBox {
            center: self.position(),
            heading: self.theta,
            half_length: params.half_length,
            half_width: params.half_width,
        }
    }
}

/// Yaw rate actually achieved once the cornering limit `|v·e| ≤ lat_max·grip`
/// is applied. Speed is never touched.
pub fn effective_yaw_rate(e: f64, v: f64, wear: f64, params: &VehicleParams) -> f64 {
    let lat = params.lat_max * params.grip(wear);
    if v * e.abs() <= lat {
        return e;
    }
    e.signum() * lat / v
}

/// `wear' = 1 − (1 − wear)·exp(−κ·|e|·dt)`.
pub fn update_wear(wear: f64, abs_e: f64, dt: f64, params: &VehicleParams) -> f64 {
    if abs_e * dt == 0.0 {
        return wear;
    }
    let w = 1.0 - (1.0 - wear) * (-params.wear_rate * abs_e * dt).exp();
    w.clamp(wear, 1.0)
}

/// Continuous part of the update: pose, speed, heading, wear and time.
/// Discrete counters are left as they were.
pub fn integrate(state: &KartState, u: ControlInput, dt: f64, params: &VehicleParams) -> KartState {
    let u = u.clamped(params);
    let e_eff = effective_yaw_rate(u.e, state.v, state.wear, params);
    let mut next = *state;
    next.x += state.v * state.theta.cos() * dt;
    next.y += state.v * state.theta.sin() * dt;
    next.v = (state.v + u.a * dt).clamp(0.0, params.v_max);
    next.theta = state.theta + e_eff * dt;
    next.wear = update_wear(state.wear, e_eff.abs(), dt, params);
    next.t = state.t + dt;
    next
}

/// Lane id of a position, defined everywhere (off-track positions take the
/// nearest lane).
pub fn lane_at(track: &TrackModel, p: &Point) -> usize {
    track.lane_for_offset(track.project(p).lateral)
}

/// Full step: integrate, then refresh checkpoint progress, lane and the
/// lane-change counter.
pub fn step(state: &KartState, u: ControlInput, dt: f64, params: &VehicleParams, track: &TrackModel) -> KartState {
    let mut next = integrate(state, u, dt, params);
    refresh_discrete(state, &mut next, track, LaneCounterMode::Hold);
    next
}

/// Recomputes `r`, `lane` and `l` of `next` from its position.
pub fn refresh_discrete(prev: &KartState, next: &mut KartState, track: &TrackModel, mode: LaneCounterMode) {
    let p = next.position();
    next.r = track.update_checkpoint_index(&p, prev.r);
    next.lane = lane_at(track, &p);
    next.l = rules::update_lane_counter(prev.l, prev, next, track, mode);
}

/// Distance from `me`'s nose to `other`'s footprint; 0 when the nose is
/// inside it.
pub fn nose_distance(me: &KartState, other: &KartState, params: &VehicleParams) -> f64 {
    other.footprint(params).distance_to(&me.nose(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::build_oval;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kart(x: f64, y: f64, v: f64, theta: f64) -> KartState {
        KartState { x, y, v, theta, wear: 0.0, r: 1, l: 0, lane: 2, t: 0.0, gamma: None }
    }

    #[test]
    fn straight_line_step() {
        let p = VehicleParams::default();
        let s = integrate(&kart(0.0, 0.0, 10.0, 0.0), ControlInput::default(), 0.02, &p);
        assert!((s.x - 0.2).abs() < 1e-15);
        assert_eq!((s.y, s.v, s.theta, s.wear), (0.0, 10.0, 0.0, 0.0));
        assert!((s.t - 0.02).abs() < 1e-15);
    }

    #[test]
    fn cornering_limit_scales_yaw() {
        let p = VehicleParams { lat_max: 10.0, ..Default::default() };
        assert!((effective_yaw_rate(1.0, 20.0, 0.0, &p) - 0.5).abs() < 1e-15);
        assert!((effective_yaw_rate(-1.0, 20.0, 0.0, &p) + 0.5).abs() < 1e-15);
        assert_eq!(effective_yaw_rate(0.3, 20.0, 0.0, &p), 0.3);
    }

    #[test]
    fn wear_identities() {
        let p = VehicleParams { wear_rate: 1.0, ..Default::default() };
        assert_eq!(update_wear(0.3, 0.0, 0.02, &p), 0.3);
        let half = update_wear(0.0, std::f64::consts::LN_2, 1.0, &p);
        assert!((half - 0.5).abs() < 1e-15);
        let p = VehicleParams::default();
        let full = update_wear(0.1, 1.7, 0.02, &p);
        let split = update_wear(update_wear(0.1, 1.7, 0.01, &p), 1.7, 0.01, &p);
        assert!((full - split).abs() < 1e-15);
    }

    #[test]
    fn zero_control_fixed_point() {
        let p = VehicleParams::default();
        let s0 = kart(3.0, -1.0, 0.0, 0.4);
        let s1 = integrate(&s0, ControlInput::default(), 0.02, &p);
        assert_eq!(KartState { t: s0.t, ..s1 }, s0);
    }

    #[test]
    fn nose_distance_cases() {
        let p = VehicleParams { nose_offset: 0.5, half_length: 0.5, ..Default::default() };
        let a = kart(0.0, 0.0, 0.0, 0.0);
        assert_eq!(nose_distance(&a, &a, &p), 0.0);
        let b = kart(5.0, 0.0, 0.0, 0.0);
        assert!((nose_distance(&a, &b, &p) - 4.0).abs() < 1e-12);
    }

    // Point-to-rectangle distance from the four edges.
    fn rect_distance_oracle(q: &Point, b: &OrientedBox) -> f64 {
        if b.contains(q) {
            return 0.0;
        }
        let c = b.corners();
        (0..4)
            .map(|k| {
                let (_, foot) = geometry::project_on_segment(q, &c[k], &c[(k + 1) % 4]);
                (q - foot).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn nose_distance_matches_edge_oracle() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let a = kart(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0, rng.random_range(-4.0..4.0));
            let b = kart(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0, rng.random_range(-4.0..4.0));
            let want = rect_distance_oracle(&a.nose(&p), &b.footprint(&p));
            assert!((nose_distance(&a, &b, &p) - want).abs() < 1e-6);
        }
    }

    #[test]
    fn euler_matches_fine_step_integration() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let controls: Vec<ControlInput> = (0..500)
                .map(|_| ControlInput::new(rng.random_range(-8.0..8.0), rng.random_range(-2.0..2.0)))
                .collect();
            let mut coarse = kart(0.0, 0.0, 12.0, 0.3);
            let mut fine = coarse;
            for u in &controls {
                coarse = integrate(&coarse, *u, 0.02, &p);
                for _ in 0..10 {
                    fine = integrate(&fine, *u, 0.002, &p);
                }
            }
            let err = (coarse.position() - fine.position()).norm();
            let scale = fine.position().norm().max(1.0);
            assert!(err / scale < 0.005, "relative error {}", err / scale);
        }
    }

    #[test]
    fn step_tracks_progress_and_lane() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let p = VehicleParams::default();
        let mut s = KartState::at_anchor(&track, 1, 3);
        s.v = 15.0;
        for _ in 0..100 {
            s = step(&s, ControlInput::default(), 0.02, &p, &track);
        }
        assert_eq!(s.lane, 3);
        assert!(s.r > 3, "r = {}", s.r);
        assert_eq!(s.l, 0);
    }

    proptest! {
        #[test]
        fn speed_bounds_and_monotone_wear(
            v in 0.0f64..25.0, wear in 0.0f64..1.0,
            controls in proptest::collection::vec((-20.0f64..20.0, -5.0f64..5.0), 1..60)
        ) {
            let p = VehicleParams::default();
            let mut s = kart(0.0, 0.0, v, 0.0);
            s.wear = wear;
            for (a, e) in controls {
                let n = integrate(&s, ControlInput::new(a, e), 0.02, &p);
                prop_assert!(n.v >= 0.0 && n.v <= p.v_max);
                prop_assert!(n.wear >= s.wear && n.wear <= 1.0);
                prop_assert!(p.grip(n.wear) <= p.grip(s.wear));
                prop_assert_eq!(n, integrate(&s, ControlInput::new(a, e), 0.02, &p));
                s = n;
            }
        }
    }
}
