//! Track geometry: checkpoints along the centerline, lanes across it and the
//! straight/curve classification used by the lane-change rule.
//!
//! Checkpoint and lane ids are 1-based throughout. Progress along a closed
//! track is an ordinal `lap * τ + index`, so it keeps growing across laps
//! while geometry queries wrap.

mod format;
mod layouts;

pub use format::{parse_track, write_track};
pub use layouts::{build_complex, build_oval, complex_layout, symmetric_offsets, TrackBuilder, COMPLEX_TRACK_DOC};

use crate::geometry::{self, Point};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid track: {0}")]
    Validation(String),
    #[error("position is off track ({distance:.3} m from centerline, half-width {width} m)")]
    OffTrack { distance: f64, width: f64 },
    #[error("checkpoint {0} out of range")]
    CheckpointOutOfRange(usize),
    #[error("lane {0} out of range")]
    LaneOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Straight,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub position: Point,
    /// Travel direction at the checkpoint, radians.
    pub heading: f64,
    pub kind: SegmentKind,
}

/// Contiguous run of checkpoints sharing a kind, `first..=last` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub first: usize,
    pub last: usize,
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneAnchor {
    pub checkpoint: usize,
    pub lane: usize,
    pub position: Point,
    pub heading: f64,
}

/// Nearest point on the centerline polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineProjection {
    /// Edge index (0-based), edge `e` joins checkpoints `e` and `e + 1`.
    pub edge: usize,
    pub t: f64,
    pub point: Point,
    pub distance: f64,
    /// Signed offset, positive to the left of travel.
    pub lateral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackModel {
    checkpoints: Vec<Checkpoint>,
    width: f64,
    lane_offsets: Vec<f64>,
    closed: bool,
    segments: Vec<Segment>,
    cumulative: Vec<f64>,
    edge_lengths: Vec<f64>,
    total_length: f64,
    radii: Vec<f64>,
}

impl TrackModel {
    /// Builds and validates a track. `width` is the centerline-to-wall
    /// half-width.
    pub fn new(
        checkpoints: Vec<Checkpoint>,
        width: f64,
        lane_offsets: Vec<f64>,
        closed: bool,
    ) -> Result<Self, TrackError> {
        validate(&checkpoints, width, &lane_offsets, closed)?;
        let n = checkpoints.len();
        let edges = if closed { n } else { n - 1 };
        let mut edge_lengths = Vec::with_capacity(edges);
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for e in 0..edges {
            cumulative.push(acc);
            let a = checkpoints[e].position;
            let b = checkpoints[(e + 1) % n].position;
            let len = (b - a).norm();
            edge_lengths.push(len);
            acc += len;
        }
        if !closed {
            cumulative.push(acc);
        }
        let radii = (0..n)
            .map(|i| {
                if !closed && (i == 0 || i == n - 1) {
                    return f64::INFINITY;
                }
                let prev = checkpoints[(i + n - 1) % n].position;
                let next = checkpoints[(i + 1) % n].position;
                geometry::circumradius(&prev, &checkpoints[i].position, &next)
            })
            .collect();
        let segments = runs(&checkpoints);
        Ok(Self {
            checkpoints,
            width,
            lane_offsets,
            closed,
            segments,
            cumulative,
            edge_lengths,
            total_length: acc,
            radii,
        })
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    /// Number of checkpoints τ.
    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn lane_count(&self) -> usize {
        self.lane_offsets.len()
    }

    pub fn lane_offsets(&self) -> &[f64] {
        &self.lane_offsets
    }

    /// Spacing between adjacent lanes, used as the lane-width unit.
    pub fn lane_spacing(&self) -> f64 {
        if self.lane_offsets.len() < 2 {
            return 2.0 * self.width;
        }
        (self.lane_offsets[self.lane_offsets.len() - 1] - self.lane_offsets[0])
            / (self.lane_offsets.len() - 1) as f64
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Checkpoint record by 1-based index.
    pub fn checkpoint(&self, index: usize) -> Result<&Checkpoint, TrackError> {
        if index == 0 || index > self.len() {
            return Err(TrackError::CheckpointOutOfRange(index));
        }
        Ok(&self.checkpoints[index - 1])
    }

    /// Maps a progress ordinal to its 1-based checkpoint index.
    pub fn index_of(&self, ordinal: usize) -> usize {
        debug_assert!(ordinal >= 1);
        if self.closed {
            (ordinal - 1) % self.len() + 1
        } else {
            ordinal.min(self.len())
        }
    }

    /// Progress ordinal reached when a race over `laps` laps is complete.
    pub fn finish_ordinal(&self, laps: usize) -> usize {
        if self.closed {
            laps.max(1) * self.len() + 1
        } else {
            self.len()
        }
    }

    /// Circumradius of the centerline at a checkpoint (infinite on
    /// straights and at open-track endpoints).
    pub fn curve_radius(&self, index: usize) -> f64 {
        self.radii[index - 1]
    }

    /// Segment id (position in [`TrackModel::segments`]) of a checkpoint.
    pub fn segment_id(&self, index: usize) -> usize {
        self.segments
            .iter()
            .position(|s| index >= s.first && index <= s.last)
            .expect("segments partition the checkpoints")
    }

    pub fn kind_of(&self, index: usize) -> SegmentKind {
        self.checkpoints[index - 1].kind
    }

    fn edge_count(&self) -> usize {
        self.edge_lengths.len()
    }

    fn edge(&self, e: usize) -> (Point, Point) {
        let n = self.len();
        (self.checkpoints[e].position, self.checkpoints[(e + 1) % n].position)
    }

    fn project_edge(&self, p: &Point, e: usize) -> CenterlineProjection {
        let (a, b) = self.edge(e);
        let (t, q) = geometry::project_on_segment(p, &a, &b);
        let d = p - q;
        let distance = d.norm();
        let side = geometry::cross(&(b - a), &d);
        let lateral = if side < 0.0 { -distance } else { distance };
        CenterlineProjection { edge: e, t, point: q, distance, lateral }
    }

    /// Nearest point on the whole centerline; the lowest edge wins ties.
    pub fn project(&self, p: &Point) -> CenterlineProjection {
        let mut best = self.project_edge(p, 0);
        for e in 1..self.edge_count() {
            let c = self.project_edge(p, e);
            if c.distance < best.distance {
                best = c;
            }
        }
        best
    }

    /// Distance q(x) from a position to the centerline.
    pub fn centerline_distance(&self, p: &Point) -> f64 {
        self.project(p).distance
    }

    pub fn is_on_track(&self, p: &Point) -> bool {
        self.centerline_distance(p) <= self.width
    }

    /// Lane id z(x): the lane whose offset is nearest the signed lateral
    /// offset; ties go to the lower id.
    pub fn lane_of(&self, p: &Point) -> Result<usize, TrackError> {
        let proj = self.project(p);
        if proj.distance > self.width {
            return Err(TrackError::OffTrack { distance: proj.distance, width: self.width });
        }
        Ok(self.lane_for_offset(proj.lateral))
    }

    pub fn lane_for_offset(&self, lateral: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, off) in self.lane_offsets.iter().enumerate() {
            let d = (lateral - off).abs();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best + 1
    }

    /// Index of the nearest checkpoint; the lower index wins ties.
    pub fn nearest_checkpoint(&self, p: &Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.checkpoints.iter().enumerate() {
            let d = (c.position - p).norm_squared();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best + 1
    }

    /// Segment kind of the nearest checkpoint, without a bounds check.
    pub fn segment_kind_at(&self, p: &Point) -> SegmentKind {
        self.kind_of(self.nearest_checkpoint(p))
    }

    /// Membership of a position in the straight set.
    pub fn in_straight(&self, p: &Point) -> Result<bool, TrackError> {
        let d = self.centerline_distance(p);
        if d > self.width {
            return Err(TrackError::OffTrack { distance: d, width: self.width });
        }
        Ok(self.segment_kind_at(p) == SegmentKind::Straight)
    }

    pub fn lane_anchor(&self, checkpoint: usize, lane: usize) -> Result<LaneAnchor, TrackError> {
        let c = self.checkpoint(checkpoint)?;
        if lane == 0 || lane > self.lane_count() {
            return Err(TrackError::LaneOutOfRange(lane));
        }
        let position = c.position + geometry::left_normal(c.heading) * self.lane_offsets[lane - 1];
        Ok(LaneAnchor { checkpoint, lane, position, heading: c.heading })
    }

    /// Anchor for a progress ordinal (wraps on closed tracks).
    pub fn anchor_at(&self, ordinal: usize, lane: usize) -> LaneAnchor {
        let mut a = self
            .lane_anchor(self.index_of(ordinal), lane.clamp(1, self.lane_count()))
            .expect("index_of stays in range");
        a.checkpoint = ordinal;
        a
    }

    /// Monotone checkpoint progress p(x, r): advances past every gate whose
    /// perpendicular plane the position has crossed, never decreasing.
    ///
    /// A gate counts as crossed when the position lies on its forward side,
    /// within the half-width laterally, and no further ahead than the next
    /// checkpoint.
    pub fn update_checkpoint_index(&self, p: &Point, r_prev: usize) -> usize {
        let n = self.len();
        let mut r = r_prev.max(1);
        for _ in 0..n {
            if !self.closed && r >= n {
                break;
            }
            let next = r + 1;
            let gate = self.index_of(next);
            let c = &self.checkpoints[gate - 1];
            let d = p - c.position;
            let ahead = d.dot(&geometry::direction(c.heading));
            let lateral = d.dot(&geometry::left_normal(c.heading)).abs();
            let depth = if !self.closed && gate == n {
                self.width
            } else {
                self.edge_lengths[(gate - 1) % self.edge_count()] + self.width
            };
            if ahead >= 0.0 && ahead <= depth && lateral <= self.width {
                r = next;
            } else {
                break;
            }
        }
        r
    }

    /// Centerline arc length travelled, measured from checkpoint 1 of lap 0
    /// and disambiguated by the holder's progress ordinal.
    pub fn arc_progress(&self, p: &Point, ordinal: usize) -> f64 {
        let edges = self.edge_count() as i64;
        let base = (ordinal.max(1) - 1) as i64;
        let mut best: Option<(i64, CenterlineProjection)> = None;
        for off in -2..=2i64 {
            let abs = base + off;
            let e = if self.closed {
                abs.rem_euclid(edges)
            } else {
                if abs < 0 || abs >= edges {
                    continue;
                }
                abs
            };
            let proj = self.project_edge(p, e as usize);
            if best.as_ref().is_none_or(|(_, b)| proj.distance < b.distance) {
                best = Some((abs, proj));
            }
        }
        let (abs, proj) = best.expect("window contains at least one edge");
        let lap = if self.closed { abs.div_euclid(edges) } else { 0 };
        lap as f64 * self.total_length
            + self.cumulative[proj.edge]
            + proj.t * self.edge_lengths[proj.edge]
    }

    /// Arc length at which the checkpoint of a progress ordinal sits.
    pub fn arc_at_ordinal(&self, ordinal: usize) -> f64 {
        let o = ordinal.max(1) - 1;
        if self.closed {
            let n = self.len();
            (o / n) as f64 * self.total_length + self.cumulative[o % n]
        } else {
            self.cumulative[o.min(self.len() - 1)]
        }
    }

    /// Stable content hash of the canonical track document.
    pub fn content_hash(&self) -> String {
        let doc = write_track(self);
        let digest = Sha256::digest(doc.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn runs(checkpoints: &[Checkpoint]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (i, c) in checkpoints.iter().enumerate() {
        match out.last_mut() {
            Some(s) if s.kind == c.kind => s.last = i + 1,
            _ => out.push(Segment { first: i + 1, last: i + 1, kind: c.kind }),
        }
    }
    out
}

fn validate(
    checkpoints: &[Checkpoint],
    width: f64,
    offsets: &[f64],
    closed: bool,
) -> Result<(), TrackError> {
    let fail = |m: String| Err(TrackError::Validation(m));
    if checkpoints.len() < 2 {
        return fail(format!("need at least 2 checkpoints, got {}", checkpoints.len()));
    }
    if !(width.is_finite() && width > 0.0) {
        return fail(format!("width must be positive, got {width}"));
    }
    if offsets.is_empty() {
        return fail("lane_count must be positive".into());
    }
    for (k, off) in offsets.iter().enumerate() {
        if !off.is_finite() || off.abs() >= width {
            return fail(format!("lane offset {} = {off} must satisfy |offset| < width {width}", k + 1));
        }
        if k > 0 && *off <= offsets[k - 1] {
            return fail(format!("lane offsets must be strictly increasing (lane {})", k + 1));
        }
    }
    let spread = offsets[offsets.len() - 1] - offsets[0];
    for (a, b) in offsets.iter().zip(offsets.iter().rev()) {
        if (a + b).abs() > 1e-9 * spread.max(1.0) {
            return fail("lane offsets must be symmetric about 0".into());
        }
    }
    for (i, c) in checkpoints.iter().enumerate() {
        if !(c.position.x.is_finite() && c.position.y.is_finite() && c.heading.is_finite()) {
            return fail(format!("checkpoint {} has non-finite coordinates", i + 1));
        }
    }
    let n = checkpoints.len();
    for i in 0..n {
        let j = (i + 1) % n;
        if !closed && j == 0 {
            break;
        }
        if (checkpoints[j].position - checkpoints[i].position).norm() <= 1e-9 {
            return fail(format!("checkpoints {} and {} coincide", i + 1, j + 1));
        }
        let travel = checkpoints[j].position - checkpoints[i].position;
        if travel.dot(&geometry::direction(checkpoints[i].heading)) <= 0.0 {
            return fail(format!(
                "checkpoint {} is not ahead of checkpoint {} along the travel direction",
                j + 1,
                i + 1
            ));
        }
    }
    if closed {
        // Non-adjacent edges of the loop must not touch.
        for a in 0..n {
            for b in (a + 2)..n {
                if a == 0 && b == n - 1 {
                    continue;
                }
                let (p1, p2) = (checkpoints[a].position, checkpoints[(a + 1) % n].position);
                let (q1, q2) = (checkpoints[b].position, checkpoints[(b + 1) % n].position);
                if geometry::segments_intersect(&p1, &p2, &q1, &q2) {
                    return fail(format!("centerline self-intersects (edges {} and {})", a + 1, b + 1));
                }
            }
        }
    }
    Ok(())
}
