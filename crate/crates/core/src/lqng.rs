//! Two-player linear-quadratic Nash controller. The joint kinematics are
//! linearized at the current state, both players' tracking and repulsion
//! costs become quadratic forms over an augmented state, and the coupled
//! Riccati recursion yields feedback Nash gains over a short horizon.

use crate::geometry::{self, Point};
use crate::vehicle::{ControlInput, KartState, VehicleParams};
use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `[x1, y1, v1, θ1, x2, y2, v2, θ2, 1]`.
pub const NZ: usize = 9;
pub type Mat9 = SMatrix<f64, NZ, NZ>;
pub type Mat92 = SMatrix<f64, NZ, 2>;
pub type Mat29 = SMatrix<f64, 2, NZ>;
pub type Mat2 = SMatrix<f64, 2, 2>;
pub type Vec9 = SVector<f64, NZ>;
pub type Vec2 = SVector<f64, 2>;

const CONST: usize = 8;
const RCOND_MIN: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LqError {
    #[error("coupled gain system is singular (rcond {0:.3e})")]
    SingularCoupling(f64),
    #[error("horizon must be at least one step")]
    HorizonZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LqWeights {
    /// Position, velocity, heading tracking; opponent-waypoint and collision
    /// repulsion.
    pub rho: [f64; 5],
    pub r_a: f64,
    pub r_e: f64,
    /// Repulsion terms only act while the karts are closer than this.
    pub proximity_radius: f64,
    /// Planning horizon, s.
    pub horizon: f64,
}

impl Default for LqWeights {
    fn default() -> Self {
        Self { rho: [4.0, 1.0, 1.0, 0.2, 1.5], r_a: 0.01, r_e: 0.01, proximity_radius: 8.0, horizon: 0.06 }
    }
}

impl LqWeights {
    pub fn validate(&self) -> Result<(), String> {
        if self.rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err("lq.rho entries must be finite and non-negative".into());
        }
        if !(self.r_a > 0.0 && self.r_e > 0.0) {
            return Err("lq.r_a and lq.r_e must be positive".into());
        }
        if !(self.horizon > 0.0 && self.proximity_radius >= 0.0) {
            return Err("lq.horizon must be positive and lq.proximity_radius non-negative".into());
        }
        Ok(())
    }

    pub fn steps(&self, dt: f64) -> usize {
        (self.horizon / dt).round() as usize
    }

    pub fn decoupled(&self) -> Self {
        Self { rho: [self.rho[0], self.rho[1], self.rho[2], 0.0, 0.0], ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetWaypoint {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
}

/// Joint linear dynamics `z' = A z + B1 u1 + B2 u2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLinearization {
    pub a: Mat9,
    pub b: [Mat92; 2],
}

impl JointLinearization {
    pub fn step(&self, z: &Vec9, u: &[Vec2; 2]) -> Vec9 {
        self.a * z + self.b[0] * u[0] + self.b[1] * u[1]
    }
}

/// Player state block in a frame shifted by `origin`.
fn block(k: &KartState, origin: &Point) -> [f64; 4] {
    [k.x - origin.x, k.y - origin.y, k.v, k.theta]
}

pub fn augmented_state(states: &[KartState; 2], origin: &Point) -> Vec9 {
    let a = block(&states[0], origin);
    let b = block(&states[1], origin);
    Vec9::from_column_slice(&[a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3], 1.0])
}

/// Per-player block
/// `[[1,0,cosθ₀dt,−v₀sinθ₀dt],[0,1,sinθ₀dt,v₀cosθ₀dt],[0,0,1,0],[0,0,0,1]]`
/// with `(a, e)` entering the `v` and `θ` rows through `dt`. The constant
/// column carries the drift that makes the model exact at the linearization
/// point.
pub fn linearize(states: &[KartState; 2], dt: f64) -> JointLinearization {
    let mut a = Mat9::identity();
    let mut b = [Mat92::zeros(); 2];
    for (p, k) in states.iter().enumerate() {
        let o = 4 * p;
        let (s, c) = k.theta.sin_cos();
        a[(o, o + 2)] = c * dt;
        a[(o, o + 3)] = -k.v * s * dt;
        a[(o + 1, o + 2)] = s * dt;
        a[(o + 1, o + 3)] = k.v * c * dt;
        a[(o, CONST)] = k.v * k.theta * s * dt;
        a[(o + 1, CONST)] = -k.v * k.theta * c * dt;
        b[p][(o + 2, 0)] = dt;
        b[p][(o + 3, 1)] = dt;
    }
    JointLinearization { a, b }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCost {
    pub q: Mat9,
    pub r: Mat2,
}

impl StageCost {
    pub fn state_cost(&self, z: &Vec9) -> f64 {
        (z.transpose() * self.q * z)[0]
    }

    pub fn control_cost(&self, u: &Vec2) -> f64 {
        (u.transpose() * self.r * u)[0]
    }
}

/// Adds `w·(aᵀz)²` to `q`.
fn add_residual(q: &mut Mat9, w: f64, terms: &[(usize, f64)]) {
    if w == 0.0 {
        return;
    }
    let mut a = Vec9::zeros();
    for &(i, c) in terms {
        a[i] += c;
    }
    *q += a * a.transpose() * w;
}

/// Whether the repulsion terms are active for this configuration.
pub fn repulsion_active(states: &[KartState; 2], weights: &LqWeights) -> bool {
    (states[0].position() - states[1].position()).norm() < weights.proximity_radius
}

/// Stage costs for both players in the frame shifted by `origin`. Target
/// headings are unwrapped next to each player's own heading.
pub fn build_costs(
    states: &[KartState; 2],
    targets: &[TargetWaypoint; 2],
    weights: &LqWeights,
    origin: &Point,
) -> [StageCost; 2] {
    let near = repulsion_active(states, weights);
    let [r1, r2, r3, r4, r5] = weights.rho;
    let (r4, r5) = if near { (r4, r5) } else { (0.0, 0.0) };
    let r = Mat2::new(weights.r_a, 0.0, 0.0, weights.r_e);
    let mut out = [StageCost { q: Mat9::zeros(), r }, StageCost { q: Mat9::zeros(), r }];
    for (i, cost) in out.iter_mut().enumerate() {
        let j = 1 - i;
        let (oi, oj) = (4 * i, 4 * j);
        let ti = &targets[i];
        let tj = &targets[j];
        let heading = states[i].theta + geometry::wrap_angle(ti.theta - states[i].theta);
        let q = &mut cost.q;
        add_residual(q, r1, &[(oi, 1.0), (CONST, -(ti.x - origin.x))]);
        add_residual(q, r1, &[(oi + 1, 1.0), (CONST, -(ti.y - origin.y))]);
        add_residual(q, r2, &[(oi + 2, 1.0), (CONST, -ti.v)]);
        add_residual(q, r3, &[(oi + 3, 1.0), (CONST, -heading)]);
        add_residual(q, -r4, &[(oj, 1.0), (CONST, -(tj.x - origin.x))]);
        add_residual(q, -r4, &[(oj + 1, 1.0), (CONST, -(tj.y - origin.y))]);
        add_residual(q, -r5, &[(oj, 1.0), (oi, -1.0)]);
        add_residual(q, -r5, &[(oj + 1, 1.0), (oi + 1, -1.0)]);
    }
    out
}

/// Feedback gains `u_i,t = −K_i,t z_t` for `t = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqGameSolution {
    pub gains: Vec<[Mat29; 2]>,
    /// Smallest reciprocal condition number met in the recursion.
    pub rcond: f64,
}

impl LqGameSolution {
    pub fn steps(&self) -> usize {
        self.gains.len()
    }

    pub fn control(&self, t: usize, player: usize, z: &Vec9) -> Vec2 {
        -(self.gains[t][player] * z)
    }

    /// Closed-loop trajectory and controls from `z0`.
    pub fn rollout(&self, lin: &JointLinearization, z0: &Vec9) -> (Vec<Vec9>, Vec<[Vec2; 2]>) {
        let mut zs = vec![*z0];
        let mut us = Vec::with_capacity(self.steps());
        for t in 0..self.steps() {
            let z = zs[t];
            let u = [self.control(t, 0, &z), self.control(t, 1, &z)];
            zs.push(lin.step(&z, &u));
            us.push(u);
        }
        (zs, us)
    }
}

/// Total cost of one player along a trajectory: controls `u_0..u_{N−1}` and
/// states `z_1..z_N`.
pub fn trajectory_cost(cost: &StageCost, player: usize, zs: &[Vec9], us: &[[Vec2; 2]]) -> f64 {
    let states: f64 = zs.iter().skip(1).map(|z| cost.state_cost(z)).sum();
    let controls: f64 = us.iter().map(|u| cost.control_cost(&u[player])).sum();
    states + controls
}

fn rcond(m: &SMatrix<f64, 4, 4>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Backward coupled Riccati recursion for the feedback Nash equilibrium.
///
/// With `Z_i = Q_i + P_i'` the gains solve
/// `[[R1 + B1ᵀZ1B1, B1ᵀZ1B2], [B2ᵀZ2B1, R2 + B2ᵀZ2B2]] [K1; K2] = [B1ᵀZ1A; B2ᵀZ2A]`
/// and `P_i = FᵀZ_iF + K_iᵀR_iK_i` with `F = A − B1K1 − B2K2`.
pub fn solve_coupled_riccati(
    lin: &JointLinearization,
    costs: &[StageCost; 2],
    steps: usize,
) -> Result<LqGameSolution, LqError> {
    if steps == 0 {
        return Err(LqError::HorizonZero);
    }
    let a = &lin.a;
    let [b1, b2] = &lin.b;
    let mut p = [Mat9::zeros(), Mat9::zeros()];
    let mut gains = vec![[Mat29::zeros(); 2]; steps];
    let mut worst = f64::INFINITY;
    for t in (0..steps).rev() {
        let z1 = costs[0].q + p[0];
        let z2 = costs[1].q + p[1];
        let mut m = SMatrix::<f64, 4, 4>::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(costs[0].r + b1.transpose() * z1 * b1));
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&(b1.transpose() * z1 * b2));
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&(b2.transpose() * z2 * b1));
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&(costs[1].r + b2.transpose() * z2 * b2));
        let rc = rcond(&m);
        worst = worst.min(rc);
        if !(rc >= RCOND_MIN) {
            return Err(LqError::SingularCoupling(rc));
        }
        let mut rhs = SMatrix::<f64, 4, NZ>::zeros();
        rhs.fixed_view_mut::<2, NZ>(0, 0).copy_from(&(b1.transpose() * z1 * a));
        rhs.fixed_view_mut::<2, NZ>(2, 0).copy_from(&(b2.transpose() * z2 * a));
        let k = m.lu().solve(&rhs).ok_or(LqError::SingularCoupling(rc))?;
        let k1: Mat29 = k.fixed_view::<2, NZ>(0, 0).into_owned();
        let k2: Mat29 = k.fixed_view::<2, NZ>(2, 0).into_owned();
        let f = a - b1 * k1 - b2 * k2;
        p[0] = f.transpose() * z1 * f + k1.transpose() * costs[0].r * k1;
        p[1] = f.transpose() * z2 * f + k2.transpose() * costs[1].r * k2;
        gains[t] = [k1, k2];
    }
    Ok(LqGameSolution { gains, rcond: worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub rcond: f64,
    /// The coupled game was singular and decoupled tracking was used.
    pub fallback: bool,
}

/// Ego's first-step Nash control. `states[0]` is the ego kart; targets are
/// the ego waypoint and the predicted opponent waypoint.
pub fn control(
    states: &[KartState; 2],
    targets: &[TargetWaypoint; 2],
    weights: &LqWeights,
    params: &VehicleParams,
    dt: f64,
) -> (ControlInput, SolveDiagnostics) {
    let origin = states[0].position();
    let steps = weights.steps(dt).max(1);
    let lin = linearize(states, dt);
    let z0 = augmented_state(states, &origin);
    let solve = |w: &LqWeights| solve_coupled_riccati(&lin, &build_costs(states, targets, w, &origin), steps);
    let (sol, fallback) = match solve(weights) {
        Ok(s) => (Some(s), false),
        Err(_) => (solve(&weights.decoupled()).ok(), true),
    };
    match sol {
        Some(s) => {
            let u = s.control(0, 0, &z0);
            (ControlInput::new(u[0], u[1]).clamped(params), SolveDiagnostics { rcond: s.rcond, fallback })
        }
        None => (ControlInput::default(), SolveDiagnostics { rcond: 0.0, fallback: true }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::integrate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kart(x: f64, y: f64, v: f64, theta: f64) -> KartState {
        KartState { x, y, v, theta, wear: 0.0, r: 1, l: 0, lane: 1, t: 0.0, gamma: None }
    }

    #[test]
    fn linearization_entries() {
        let lin = linearize(&[kart(0.0, 0.0, 10.0, 0.0), kart(5.0, 5.0, 3.0, 1.0)], 0.02);
        let row0: Vec<f64> = (0..4).map(|c| lin.a[(0, c)]).collect();
        let row1: Vec<f64> = (0..4).map(|c| lin.a[(1, c)]).collect();
        assert_eq!(row0, vec![1.0, 0.0, 0.02, 0.0]);
        assert!((row1[3] - 0.2).abs() < 1e-15 && row1[0] == 0.0 && row1[1] == 1.0 && row1[2] == 0.0);
        for p in 0..2 {
            let o = 4 * p;
            for r in 0..NZ {
                let want_a = if r == o + 2 { 0.02 } else { 0.0 };
                let want_e = if r == o + 3 { 0.02 } else { 0.0 };
                assert_eq!(lin.b[p][(r, 0)], want_a);
                assert_eq!(lin.b[p][(r, 1)], want_e);
            }
        }
    }

    #[test]
    fn linear_step_error_is_second_order() {
        let p = VehicleParams::default();
        let base = [kart(1.0, 2.0, 12.0, 0.7), kart(-3.0, 4.0, 8.0, -2.0)];
        let lin = linearize(&base, 0.02);
        let origin = Point::new(0.0, 0.0);
        let mut prev = f64::NAN;
        for eps in [1e-1, 1e-2, 1e-3] {
            let pert = [kart(1.0, 2.0, 12.0 + eps, 0.7 + eps), kart(-3.0, 4.0, 8.0 - eps, -2.0 + eps)];
            let z = augmented_state(&pert, &origin);
            let lz = lin.step(&z, &[Vec2::zeros(), Vec2::zeros()]);
            let nl = [integrate(&pert[0], ControlInput::default(), 0.02, &p), integrate(&pert[1], ControlInput::default(), 0.02, &p)];
            let err = (augmented_state(&nl, &origin) - lz).norm();
            assert!(err <= 0.02 * 20.0 * eps * eps, "eps {eps}: {err}");
            if prev.is_finite() {
                assert!(err < prev / 50.0);
            }
            prev = err;
        }
        // exact at the linearization point
        let z = augmented_state(&base, &origin);
        let nl = [integrate(&base[0], ControlInput::default(), 0.02, &p), integrate(&base[1], ControlInput::default(), 0.02, &p)];
        assert!((augmented_state(&nl, &origin) - lin.step(&z, &[Vec2::zeros(), Vec2::zeros()])).norm() < 1e-12);
    }

    // Direct evaluation of the stage cost formula for player `i`.
    fn direct_stage(z: &Vec9, targets: &[TargetWaypoint; 2], w: &LqWeights, i: usize, near: bool, heading: f64) -> f64 {
        let j = 1 - i;
        let (oi, oj) = (4 * i, 4 * j);
        let [r1, r2, r3, r4, r5] = w.rho;
        let (r4, r5) = if near { (r4, r5) } else { (0.0, 0.0) };
        let ti = targets[i];
        let tj = targets[j];
        r1 * ((z[oi] - ti.x).powi(2) + (z[oi + 1] - ti.y).powi(2))
            + r2 * (z[oi + 2] - ti.v).powi(2)
            + r3 * (z[oi + 3] - heading).powi(2)
            - r4 * ((z[oj] - tj.x).powi(2) + (z[oj + 1] - tj.y).powi(2))
            - r5 * ((z[oj] - z[oi]).powi(2) + (z[oj + 1] - z[oi + 1]).powi(2))
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> ([KartState; 2], [TargetWaypoint; 2]) {
        let s0 = kart(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(2.0..20.0), rng.random_range(-3.0..3.0));
        let s1 = kart(s0.x + rng.random_range(-5.0..5.0), s0.y + rng.random_range(-5.0..5.0), rng.random_range(2.0..20.0), rng.random_range(-3.0..3.0));
        let tgt = |k: &KartState, rng: &mut ChaCha8Rng| TargetWaypoint {
            x: k.x + rng.random_range(-8.0..8.0),
            y: k.y + rng.random_range(-8.0..8.0),
            v: rng.random_range(0.0..25.0),
            theta: k.theta + rng.random_range(-0.5..0.5),
        };
        let t0 = tgt(&s0, rng);
        let t1 = tgt(&s1, rng);
        ([s0, s1], [t0, t1])
    }

    #[test]
    fn quadratic_form_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = LqWeights::default();
        for _ in 0..200 {
            let (states, targets) = random_instance(&mut rng);
            let origin = Point::new(0.0, 0.0);
            let costs = build_costs(&states, &targets, &w, &origin);
            let near = repulsion_active(&states, &w);
            let z = Vec9::from_fn(|r, _| if r == CONST { 1.0 } else { rng.random_range(-10.0..10.0) });
            for i in 0..2 {
                let heading = states[i].theta + geometry::wrap_angle(targets[i].theta - states[i].theta);
                let want = direct_stage(&z, &targets, &w, i, near, heading);
                let got = costs[i].state_cost(&z);
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn cost_at_target_and_coincident_players() {
        let w = LqWeights { rho: [4.0, 1.0, 1.0, 0.0, 0.0], ..Default::default() };
        let s = [kart(2.0, 3.0, 5.0, 0.4), kart(40.0, 3.0, 5.0, 0.0)];
        let t = [TargetWaypoint { x: 2.0, y: 3.0, v: 5.0, theta: 0.4 }, TargetWaypoint { x: 50.0, y: 0.0, v: 1.0, theta: 0.0 }];
        let origin = Point::new(0.0, 0.0);
        let costs = build_costs(&s, &t, &w, &origin);
        assert!(costs[0].state_cost(&augmented_state(&s, &origin)).abs() < 1e-12);
        // coincident players: the collision term vanishes and has negative
        // curvature along the separation direction
        let w = LqWeights { rho: [0.0, 0.0, 0.0, 0.0, 1.5], ..Default::default() };
        let s = [kart(1.0, 1.0, 5.0, 0.0), kart(1.0, 1.0, 5.0, 0.0)];
        let costs = build_costs(&s, &t, &w, &origin);
        let z = augmented_state(&s, &origin);
        assert!(costs[0].state_cost(&z).abs() < 1e-12);
        let mut dir = Vec9::zeros();
        dir[0] = 1.0;
        dir[4] = -1.0;
        assert!((dir.transpose() * costs[0].q * dir)[0] < 0.0);
    }

    // Standalone finite-horizon tracking recursion for one player on its own
    // `[x, y, v, θ, 1]` system.
    fn standalone_gains(lin: &JointLinearization, cost: &StageCost, player: usize, steps: usize) -> Vec<SMatrix<f64, 2, 5>> {
        let idx = [4 * player, 4 * player + 1, 4 * player + 2, 4 * player + 3, CONST];
        let a = SMatrix::<f64, 5, 5>::from_fn(|r, c| lin.a[(idx[r], idx[c])]);
        let b = SMatrix::<f64, 5, 2>::from_fn(|r, c| lin.b[player][(idx[r], c)]);
        let q = SMatrix::<f64, 5, 5>::from_fn(|r, c| cost.q[(idx[r], idx[c])]);
        let mut p = SMatrix::<f64, 5, 5>::zeros();
        let mut out = vec![SMatrix::<f64, 2, 5>::zeros(); steps];
        for t in (0..steps).rev() {
            let z = q + p;
            let h = cost.r + b.transpose() * z * b;
            let k = h.try_inverse().unwrap() * b.transpose() * z * a;
            p = a.transpose() * z * a - a.transpose() * z * b * k;
            p = (p + p.transpose()) * 0.5;
            out[t] = k;
        }
        out
    }

    #[test]
    fn decoupled_game_reduces_to_standalone_tracking() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = LqWeights { rho: [4.0, 1.0, 1.0, 0.0, 0.0], ..Default::default() };
        for _ in 0..20 {
            let (states, targets) = random_instance(&mut rng);
            let origin = states[0].position();
            let lin = linearize(&states, 0.02);
            let costs = build_costs(&states, &targets, &w, &origin);
            let sol = solve_coupled_riccati(&lin, &costs, 3).unwrap();
            for p in 0..2 {
                let idx = [4 * p, 4 * p + 1, 4 * p + 2, 4 * p + 3, CONST];
                let other = 4 * (1 - p);
                for (t, k) in standalone_gains(&lin, &costs[p], p, 3).iter().enumerate() {
                    for r in 0..2 {
                        for (c, &ci) in idx.iter().enumerate() {
                            assert!((sol.gains[t][p][(r, ci)] - k[(r, c)]).abs() < 1e-9);
                        }
                        for c in other..other + 4 {
                            assert!(sol.gains[t][p][(r, c)].abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_step_gain_is_least_squares() {
        let (states, targets) = random_instance(&mut ChaCha8Rng::seed_from_u64(4));
        let w = LqWeights::default();
        let origin = states[0].position();
        let lin = linearize(&states, 0.02);
        let costs = build_costs(&states, &targets, &w, &origin);
        let sol = solve_coupled_riccati(&lin, &costs, 1).unwrap();
        let z = augmented_state(&states, &origin);
        // each player's control minimizes uᵀRu + z1ᵀQz1 given the other's
        let u = [sol.control(0, 0, &z), sol.control(0, 1, &z)];
        for i in 0..2 {
            let b = lin.b[i];
            let rest = lin.a * z + lin.b[1 - i] * u[1 - i];
            let h = costs[i].r + b.transpose() * costs[i].q * b;
            let want = -(h.try_inverse().unwrap() * b.transpose() * costs[i].q * rest);
            assert!((u[i] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn equilibrium_and_sign_checks() {
        let p = VehicleParams::default();
        let w = LqWeights::default();
        let ego = kart(10.0, 5.0, 0.0, 0.3);
        let far = kart(200.0, 200.0, 0.0, 0.0);
        let t = [TargetWaypoint { x: 10.0, y: 5.0, v: 0.0, theta: 0.3 }, TargetWaypoint { x: 200.0, y: 200.0, v: 0.0, theta: 0.0 }];
        let (u, _) = control(&[ego, far], &t, &w, &p, 0.02);
        assert!(u.a.abs() < 1e-6 && u.e.abs() < 1e-6, "{u:?}");
        let ego = kart(0.0, 0.0, 5.0, 0.0);
        let t = [TargetWaypoint { x: 8.0, y: 0.0, v: 15.0, theta: 0.0 }, t[1]];
        let (u, _) = control(&[ego, far], &t, &w, &p, 0.02);
        assert!(u.a > 0.0 && u.e.abs() < 1e-9, "{u:?}");
    }

    #[test]
    fn translation_invariance() {
        let p = VehicleParams::default();
        let w = LqWeights::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let (s, t) = random_instance(&mut rng);
            let (dx, dy) = (rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
            let shift = |k: &KartState| KartState { x: k.x + dx, y: k.y + dy, ..*k };
            let shift_t = |k: &TargetWaypoint| TargetWaypoint { x: k.x + dx, y: k.y + dy, ..*k };
            let (u0, _) = control(&s, &t, &w, &p, 0.02);
            let (u1, _) = control(&[shift(&s[0]), shift(&s[1])], &[shift_t(&t[0]), shift_t(&t[1])], &w, &p, 0.02);
            assert!((u0.a - u1.a).abs() < 1e-9 && (u0.e - u1.e).abs() < 1e-9);
        }
    }

    #[test]
    fn unilateral_deviation_does_not_pay() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = LqWeights::default();
        for _ in 0..20 {
            let (states, targets) = random_instance(&mut rng);
            let origin = states[0].position();
            let lin = linearize(&states, 0.02);
            let costs = build_costs(&states, &targets, &w, &origin);
            let sol = solve_coupled_riccati(&lin, &costs, 3).unwrap();
            let z0 = augmented_state(&states, &origin);
            let (zs, us) = sol.rollout(&lin, &z0);
            for i in 0..2 {
                let base = trajectory_cost(&costs[i], i, &zs, &us);
                for t in 0..3 {
                    for scale in [0.99, 1.01] {
                        let mut z = z0;
                        let mut zs2 = vec![z];
                        let mut us2 = Vec::new();
                        for s in 0..3 {
                            let mut u = [sol.control(s, 0, &z), sol.control(s, 1, &z)];
                            if s == t {
                                u[i] *= scale;
                            }
                            z = lin.step(&z, &u);
                            zs2.push(z);
                            us2.push(u);
                        }
                        let dev = trajectory_cost(&costs[i], i, &zs2, &us2);
                        assert!(dev >= base - 1e-6 * base.abs().max(1e-12), "{dev} < {base}");
                    }
                }
            }
        }
    }
}
