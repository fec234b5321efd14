//! Offline minimum-curvature racing line for the fixed-trajectory baseline.

use crate::geometry::{self, Point};
use crate::lqng::TargetWaypoint;
use crate::track::TrackModel;
use crate::vehicle::{KartState, VehicleParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const LINE_SEARCH_STEPS: usize = 48;
const TOLERANCE: f64 = 1e-6;
/// Extra clearance between kart side and wall.
pub const WALL_CLEARANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    /// Signed lateral offset from the checkpoint, positive left.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RacingLine {
    pub track_hash: String,
    pub closed: bool,
    /// One entry per checkpoint, index 0 is checkpoint 1.
    pub points: Vec<LinePoint>,
    pub iterations: usize,
    pub curvature_cost: f64,
    /// Objective after each sweep, starting with the centerline.
    pub history: Vec<f64>,
}

/// Menger curvature of three points.
pub fn menger_curvature(a: &Point, b: &Point, c: &Point) -> f64 {
    let r = geometry::circumradius(a, b, c);
    if r.is_finite() {
        1.0 / r
    } else {
        0.0
    }
}

struct Problem<'a> {
    track: &'a TrackModel,
    bound: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.track.len()
    }

    fn point(&self, offsets: &[f64], k: usize) -> Point {
        let cp = &self.track.checkpoints()[k];
        cp.position + geometry::left_normal(cp.heading) * offsets[k]
    }

    /// Squared curvature at vertex `k`; zero at the ends of an open track.
    fn term(&self, offsets: &[f64], k: usize) -> f64 {
        let n = self.n();
        if !self.track.is_closed() && (k == 0 || k + 1 == n) {
            return 0.0;
        }
        let prev = self.point(offsets, (k + n - 1) % n);
        let next = self.point(offsets, (k + 1) % n);
        menger_curvature(&prev, &self.point(offsets, k), &next).powi(2)
    }

    fn cost(&self, offsets: &[f64]) -> f64 {
        (0..self.n()).map(|k| self.term(offsets, k)).sum()
    }

    /// Objective terms touched by offset `k`.
    fn local(&self, offsets: &[f64], k: usize) -> f64 {
        let n = self.n();
        let mut ks = vec![k];
        if self.track.is_closed() || k > 0 {
            ks.push((k + n - 1) % n);
        }
        if self.track.is_closed() || k + 1 < n {
            ks.push((k + 1) % n);
        }
        ks.sort_unstable();
        ks.dedup();
        ks.into_iter().map(|j| self.term(offsets, j)).sum()
    }

    /// Golden-section search on coordinate `k`; keeps the old value unless
    /// the local objective strictly improves.
    fn relax(&self, offsets: &mut [f64], k: usize) {
        let old = offsets[k];
        let base = self.local(offsets, k);
        let eval = |x: f64, o: &mut [f64]| {
            o[k] = x;
            self.local(o, k)
        };
        let (mut lo, mut hi) = (-self.bound, self.bound);
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = eval(x1, offsets);
        let mut f2 = eval(x2, offsets);
        for _ in 0..LINE_SEARCH_STEPS {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLDEN * (hi - lo);
                f1 = eval(x1, offsets);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLDEN * (hi - lo);
                f2 = eval(x2, offsets);
            }
        }
        let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        offsets[k] = if f < base { x } else { old };
    }
}

/// Minimum-curvature lateral offsets by seeded coordinate descent, then a
/// fresh-grip speed profile with backward braking feasibility.
pub fn compute_racing_line(track: &TrackModel, params: &VehicleParams, iterations: usize, seed: u64) -> RacingLine {
    let margin = params.half_width + WALL_CLEARANCE;
    let problem = Problem { track, bound: (track.width() - margin).max(0.0) };
    let n = track.len();
    let mut offsets = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cost = problem.cost(&offsets);
    let mut history = vec![cost];
    let mut done = 0;
    while done < iterations && cost > 0.0 {
        order.shuffle(&mut rng);
        for &k in &order {
            problem.relax(&mut offsets, k);
        }
        done += 1;
        let next = problem.cost(&offsets);
        history.push(next);
        let improvement = (cost - next) / cost;
        cost = next;
        if improvement < TOLERANCE {
            break;
        }
    }

    let pts: Vec<Point> = (0..n).map(|k| problem.point(&offsets, k)).collect();
    let caps: Vec<f64> = (0..n)
        .map(|k| {
            let kappa = problem.term(&offsets, k).sqrt();
            if kappa > 0.0 {
                params.curve_speed_cap(1.0 / kappa, 0.0)
            } else {
                params.v_max
            }
        })
        .collect();
    let speeds = braking_pass(&pts, caps, params.a_max, track.is_closed());
    let points = (0..n)
        .map(|k| {
            let prev = if track.is_closed() || k > 0 { pts[(k + n - 1) % n] } else { pts[k] };
            let next = if track.is_closed() || k + 1 < n { pts[(k + 1) % n] } else { pts[k] };
            let chord = next - prev;
            let heading = if chord.norm() > 0.0 { chord.y.atan2(chord.x) } else { track.checkpoints()[k].heading };
            LinePoint { x: pts[k].x, y: pts[k].y, heading, v: speeds[k], offset: offsets[k] }
        })
        .collect();
    RacingLine { track_hash: track.content_hash(), closed: track.is_closed(), points, iterations: done, curvature_cost: cost, history }
}

/// Enforces `v_k ≤ sqrt(v_{k+1}² + 2·a_max·d_k)` from the end backwards,
/// wrapping around twice on closed tracks so the seam is consistent.
fn braking_pass(pts: &[Point], mut v: Vec<f64>, a_max: f64, closed: bool) -> Vec<f64> {
    let n = pts.len();
    let sweeps = if closed { 2 * n } else { n.saturating_sub(1) };
    for s in 0..sweeps {
        let k = if closed { (2 * n - 1 - s) % n } else { n - 2 - s };
        let next = (k + 1) % n;
        let d = (pts[next] - pts[k]).norm();
        v[k] = v[k].min((v[next] * v[next] + 2.0 * a_max * d).sqrt());
    }
    v
}

impl RacingLine {
    /// Entry for the checkpoint after progress ordinal `r`, wrapping on
    /// closed tracks and saturating at the last checkpoint otherwise.
    pub fn entry_after(&self, r: usize) -> &LinePoint {
        let n = self.points.len();
        let idx = if self.closed { r % n } else { r.min(n - 1) };
        &self.points[idx]
    }

    pub fn matches(&self, track: &TrackModel) -> bool {
        self.track_hash == track.content_hash() && self.points.len() == track.len()
    }

    /// Loads a cached line for `track`, recomputing and rewriting the cache
    /// when it is missing, unreadable or stale.
    pub fn load_or_compute(
        cache: &Path,
        track: &TrackModel,
        params: &VehicleParams,
        iterations: usize,
        seed: u64,
    ) -> std::io::Result<Self> {
        if let Ok(text) = std::fs::read_to_string(cache) {
            if let Ok(line) = serde_json::from_str::<RacingLine>(&text) {
                if line.matches(track) {
                    return Ok(line);
                }
            }
        }
        let line = compute_racing_line(track, params, iterations, seed);
        std::fs::write(cache, serde_json::to_string(&line)?)?;
        Ok(line)
    }
}

pub fn next_fixed_waypoint(state: &KartState, line: &RacingLine) -> TargetWaypoint {
    let p = line.entry_after(state.r);
    TargetWaypoint { x: p.x, y: p.y, v: p.v, theta: p.heading }
}
