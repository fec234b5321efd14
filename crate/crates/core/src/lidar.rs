//! Nine-ray range sensor over a 180° forward fan.

use crate::geometry::{self, OrientedBox, Point};
use crate::track::TrackModel;
use crate::vehicle::{KartState, VehicleParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const RAY_COUNT: usize = 9;
/// Rays pointing towards the front of the kart (0-based).
pub const FRONT_RAYS: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitKind {
    Wall,
    Player,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarReading {
    pub distance: f64,
    pub hit: HitKind,
}

/// Heading of ray `k` for a kart facing `theta`.
pub fn ray_heading(theta: f64, k: usize) -> f64 {
    theta + k as f64 * (PI / 8.0) - PI / 2.0
}

/// Distance along a ray from an in-bounds origin to the track wall, or
/// `None` beyond `max_range`.
///
/// The drivable area is the union of capsules of radius `w` around the
/// centerline edges. Each capsule is convex, so the ray meets it in one
/// interval; chaining the intervals outwards from the origin gives the exit
/// point.
pub fn wall_distance(track: &TrackModel, origin: &Point, dir: &Point, max_range: f64) -> Option<f64> {
    let w = track.width();
    let cps = track.checkpoints();
    let n = cps.len();
    let edges = if track.is_closed() { n } else { n - 1 };
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(8);
    for e in 0..edges {
        let a = cps[e].position;
        let b = cps[(e + 1) % n].position;
        let (_, foot) = geometry::project_on_segment(origin, &a, &b);
        if (origin - foot).norm() > max_range + w {
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut include = |s: Option<(f64, f64)>| {
            if let Some((t0, t1)) = s {
                lo = lo.min(t0);
                hi = hi.max(t1);
            }
        };
        include(geometry::ray_disc(origin, dir, &a, w));
        include(geometry::ray_disc(origin, dir, &b, w));
        let ab = b - a;
        let rect = OrientedBox {
            center: (a + b) * 0.5,
            heading: ab.y.atan2(ab.x),
            half_length: ab.norm() * 0.5,
            half_width: w,
        };
        include(rect.ray_interval(origin, dir));
        if hi > 0.0 && lo <= hi {
            spans.push((lo, hi));
        }
    }
    spans.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut reach = 0.0f64;
    for (t0, t1) in spans {
        if t0 > reach + 1e-12 {
            break;
        }
        reach = reach.max(t1);
    }
    (reach <= max_range).then_some(reach)
}

/// Readings for rays `k = 0..9` at headings `θ + kπ/8 − π/2`, cast from the
/// kart center. The nearest of wall and opponent footprint wins.
pub fn lidar_scan(me: &KartState, opponent: &KartState, track: &TrackModel, params: &VehicleParams) -> [LidarReading; RAY_COUNT] {
    let origin = me.position();
    let other = opponent.footprint(params);
    let mut out = [LidarReading { distance: params.lidar_range, hit: HitKind::None }; RAY_COUNT];
    for (k, slot) in out.iter_mut().enumerate() {
        let dir = geometry::direction(ray_heading(me.theta, k));
        let wall = wall_distance(track, &origin, &dir, params.lidar_range);
        let player = other.ray_hit(&origin, &dir).filter(|d| *d <= params.lidar_range);
        *slot = match (wall, player) {
            (_, Some(p)) if wall.is_none_or(|w| p < w) => LidarReading { distance: p, hit: HitKind::Player },
            (Some(w), _) => LidarReading { distance: w, hit: HitKind::Wall },
            _ => LidarReading { distance: params.lidar_range, hit: HitKind::None },
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{build_complex, build_oval};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kart(x: f64, y: f64, theta: f64) -> KartState {
        KartState { x, y, v: 0.0, theta, wear: 0.0, r: 1, l: 0, lane: 2, t: 0.0, gamma: None }
    }

    #[test]
    fn side_rays_read_half_width() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let p = VehicleParams::default();
        let mid = track.checkpoint(3).unwrap().position;
        let me = kart(mid.x, mid.y, 0.0);
        let far = kart(-500.0, -500.0, 0.0);
        let scan = lidar_scan(&me, &far, &track, &p);
        for k in [0, 8] {
            assert_eq!(scan[k].hit, HitKind::Wall);
            assert!((scan[k].distance - 6.0).abs() < 1e-9, "{:?}", scan[k]);
        }
    }

    #[test]
    fn opponent_dead_ahead() {
        let track = build_oval(320.0, 6.0, 3, 3.0).unwrap();
        let p = VehicleParams::default();
        let me = kart(10.0, 0.0, 0.0);
        let opp = kart(13.0, 0.0, 0.0);
        let scan = lidar_scan(&me, &opp, &track, &p);
        assert_eq!(scan[4].hit, HitKind::Player);
        assert!((scan[4].distance - (3.0 - p.half_length)).abs() < 1e-12);
    }

    // March along the ray in 1 cm steps until leaving the track or entering
    // the opponent footprint.
    fn march(track: &TrackModel, me: &KartState, opp: &KartState, k: usize, p: &VehicleParams) -> (f64, HitKind) {
        let dir = geometry::direction(ray_heading(me.theta, k));
        let other = opp.footprint(p);
        let mut s = 0.0;
        while s <= p.lidar_range {
            let q = me.position() + dir * s;
            if other.contains(&q) {
                return (s, HitKind::Player);
            }
            if track.centerline_distance(&q) > track.width() {
                return (s, HitKind::Wall);
            }
            s += 0.01;
        }
        (p.lidar_range, HitKind::None)
    }

    #[test]
    fn matches_ray_marching_oracle() {
        let track = build_complex().unwrap();
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let place = |rng: &mut ChaCha8Rng| {
            let c = track.checkpoint(rng.random_range(1..=track.len())).unwrap();
            let off = rng.random_range(-4.5..4.5);
            let pos = c.position + geometry::left_normal(c.heading) * off;
            kart(pos.x, pos.y, c.heading + rng.random_range(-0.6..0.6))
        };
        for _ in 0..40 {
            let me = place(&mut rng);
            let opp = if rng.random_bool(0.5) {
                let d = geometry::direction(me.theta + rng.random_range(-1.2..1.2)) * rng.random_range(2.0..12.0);
                kart(me.x + d.x, me.y + d.y, me.theta)
            } else {
                place(&mut rng)
            };
            let scan = lidar_scan(&me, &opp, &track, &p);
            for k in 0..RAY_COUNT {
                let (d, kind) = march(&track, &me, &opp, k, &p);
                assert!((scan[k].distance - d).abs() < 0.02, "ray {k}: {:?} vs {d}", scan[k]);
                if (scan[k].distance - d).abs() < 0.005 || kind == HitKind::None {
                    assert_eq!(scan[k].hit, kind, "ray {k}");
                }
            }
        }
    }
}
