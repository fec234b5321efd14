//! Procedural track construction and the bundled layouts.

use super::{parse_track, Checkpoint, SegmentKind, TrackError, TrackModel};
use crate::geometry::{self, Point};
use std::f64::consts::PI;

/// Shipped complex circuit: direction changes, a tight U-turn and turns whose
/// radius changes part-way through.
pub const COMPLEX_TRACK_DOC: &str = include_str!("../../assets/complex.track");

#[derive(Debug, Clone, Copy)]
enum Piece {
    Straight(f64),
    /// Signed sweep, positive turns left.
    Arc { radius: f64, sweep: f64 },
}

/// Turtle-style builder: chain straights and arcs, sampled into checkpoints
/// roughly `spacing` metres apart.
#[derive(Debug, Clone)]
pub struct TrackBuilder {
    start: Point,
    heading: f64,
    spacing: f64,
    pieces: Vec<Piece>,
}

impl TrackBuilder {
    pub fn new(start: Point, heading: f64, spacing: f64) -> Self {
        Self { start, heading, spacing, pieces: Vec::new() }
    }

    pub fn straight(mut self, length: f64) -> Self {
        self.pieces.push(Piece::Straight(length));
        self
    }

    /// Circular arc; `sweep` in radians, positive to the left.
    pub fn arc(mut self, radius: f64, sweep: f64) -> Self {
        self.pieces.push(Piece::Arc { radius, sweep });
        self
    }

    pub fn build(self, width: f64, lane_offsets: Vec<f64>, closed: bool) -> Result<TrackModel, TrackError> {
        let mut pos = self.start;
        let mut heading = self.heading;
        let mut cps = Vec::new();
        let mut last_kind = SegmentKind::Straight;
        for piece in &self.pieces {
            match *piece {
                Piece::Straight(len) => {
                    let n = ((len / self.spacing).ceil() as usize).max(1);
                    let dir = geometry::direction(heading);
                    for k in 0..n {
                        let f = k as f64 / n as f64;
                        cps.push(Checkpoint { position: pos + dir * (len * f), heading, kind: SegmentKind::Straight });
                    }
                    pos += dir * len;
                    last_kind = SegmentKind::Straight;
                }
                Piece::Arc { radius, sweep } => {
                    let len = radius * sweep.abs();
                    let n = ((len / self.spacing).ceil() as usize).max(1);
                    let s = sweep.signum();
                    let center = pos + geometry::left_normal(heading) * (s * radius);
                    let at = |h: f64| center - geometry::left_normal(h) * (s * radius);
                    for k in 0..n {
                        let h = heading + sweep * k as f64 / n as f64;
                        cps.push(Checkpoint { position: at(h), heading: h, kind: SegmentKind::Curve });
                    }
                    heading += sweep;
                    pos = at(heading);
                    last_kind = SegmentKind::Curve;
                }
            }
        }
        if closed {
            let gap = (pos - self.start).norm();
            if gap > 1e-6 {
                return Err(TrackError::Validation(format!("layout does not close (gap {gap:.6} m)")));
            }
        } else {
            cps.push(Checkpoint { position: pos, heading, kind: last_kind });
        }
        for c in &mut cps {
            c.heading = geometry::wrap_angle(c.heading);
        }
        TrackModel::new(cps, width, lane_offsets, closed)
    }
}

/// Symmetric lane offsets `spacing` apart.
pub fn symmetric_offsets(lane_count: usize, spacing: f64) -> Vec<f64> {
    let mid = (lane_count as f64 - 1.0) / 2.0;
    (0..lane_count).map(|k| (k as f64 - mid) * spacing).collect()
}

/// Closed oval of total centerline `length`: two straights each three turn
/// radii long joined by semicircles. Checkpoint 1 starts the first straight.
pub fn build_oval(length: f64, width: f64, lane_count: usize, lane_spacing: f64) -> Result<TrackModel, TrackError> {
    if !(length.is_finite() && length > 0.0) {
        return Err(TrackError::Validation(format!("oval length must be positive, got {length}")));
    }
    let radius = length / (6.0 + 2.0 * PI);
    TrackBuilder::new(Point::new(0.0, 0.0), 0.0, 8.0)
        .straight(3.0 * radius)
        .arc(radius, PI)
        .straight(3.0 * radius)
        .arc(radius, PI)
        .build(width, symmetric_offsets(lane_count, lane_spacing), true)
}

/// Procedural source of [`COMPLEX_TRACK_DOC`].
pub fn complex_layout() -> Result<TrackModel, TrackError> {
    let deg = PI / 180.0;
    TrackBuilder::new(Point::new(35.0, 0.0), 0.0, 8.0)
        .straight(85.0)
        .arc(30.0, 90.0 * deg)
        .arc(15.0, 90.0 * deg)
        .straight(25.0)
        .arc(15.0, -90.0 * deg)
        .straight(20.0)
        .arc(14.0, 180.0 * deg)
        .straight(20.0)
        .arc(15.0, -90.0 * deg)
        .straight(22.0)
        .arc(20.0, 90.0 * deg)
        .arc(25.0, 90.0 * deg)
        .build(6.0, symmetric_offsets(3, 3.0), true)
}

/// Loads the bundled complex circuit.
pub fn build_complex() -> Result<TrackModel, TrackError> {
    parse_track(COMPLEX_TRACK_DOC)
}
