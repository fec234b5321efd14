//! Plain-text track documents.
//!
//! ```text
//! # comments start with '#'
//! width = 6
//! lane_count = 3
//! lane_offsets = -3 0 3
//! closed = true
//!
//! [checkpoints]
//! # index x y heading kind
//! 1 0 0 0 straight
//! 2 8 0 0 straight
//! ```
//!
//! Every header key is required exactly once and unknown keys are rejected.
//! Checkpoint rows must be numbered `1..=τ` in order; `heading` is in
//! radians and `kind` is `straight` or `curve`. Floats are written in
//! shortest round-trip form, so save/load is lossless.

use super::{Checkpoint, SegmentKind, TrackError, TrackModel};
use crate::geometry::Point;
use std::fmt::Write;

const KEYS: [&str; 4] = ["width", "lane_count", "lane_offsets", "closed"];

fn parse_err(line: usize, message: impl Into<String>) -> TrackError {
    TrackError::Parse { line, message: message.into() }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, TrackError> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_track(doc: &str) -> Result<TrackModel, TrackError> {
    let mut width = None;
    let mut lane_count: Option<usize> = None;
    let mut offsets: Option<Vec<f64>> = None;
    let mut closed = None;
    let mut in_table = false;
    let mut checkpoints = Vec::new();

    for (i, raw) in doc.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[checkpoints]" {
            if in_table {
                return Err(parse_err(line_no, "duplicate [checkpoints] section"));
            }
            in_table = true;
            continue;
        }
        if !in_table {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let dup = || parse_err(line_no, format!("duplicate key '{key}'"));
            match key {
                "width" => {
                    if width.replace(parse_f64(value, line_no, "width")?).is_some() {
                        return Err(dup());
                    }
                }
                "lane_count" => {
                    let n = value
                        .parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("invalid lane_count '{value}'")))?;
                    if lane_count.replace(n).is_some() {
                        return Err(dup());
                    }
                }
                "lane_offsets" => {
                    let v = value
                        .split_whitespace()
                        .map(|t| parse_f64(t, line_no, "lane offset"))
                        .collect::<Result<Vec<_>, _>>()?;
                    if offsets.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "closed" => {
                    let b = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(parse_err(line_no, format!("invalid boolean '{value}'"))),
                    };
                    if closed.replace(b).is_some() {
                        return Err(dup());
                    }
                }
                other => return Err(parse_err(line_no, format!("unknown key '{other}'"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(line_no, format!("expected 5 fields, got {}", fields.len())));
        }
        let index = fields[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("invalid index '{}'", fields[0])))?;
        if index != checkpoints.len() + 1 {
            return Err(parse_err(
                line_no,
                format!("checkpoint index {index} out of order (expected {})", checkpoints.len() + 1),
            ));
        }
        let x = parse_f64(fields[1], line_no, "x")?;
        let y = parse_f64(fields[2], line_no, "y")?;
        let heading = parse_f64(fields[3], line_no, "heading")?;
        let kind = match fields[4] {
            "straight" => SegmentKind::Straight,
            "curve" => SegmentKind::Curve,
            k => return Err(parse_err(line_no, format!("unknown segment kind '{k}'"))),
        };
        checkpoints.push(Checkpoint { position: Point::new(x, y), heading, kind });
    }

    let missing = |k: &str| parse_err(0, format!("missing key '{k}'"));
    let width = width.ok_or_else(|| missing(KEYS[0]))?;
    let lane_count = lane_count.ok_or_else(|| missing(KEYS[1]))?;
    let offsets = offsets.ok_or_else(|| missing(KEYS[2]))?;
    let closed = closed.ok_or_else(|| missing(KEYS[3]))?;
    if !in_table {
        return Err(parse_err(0, "missing [checkpoints] section"));
    }
    if offsets.len() != lane_count {
        return Err(TrackError::Validation(format!(
            "lane_count {lane_count} does not match {} lane offsets",
            offsets.len()
        )));
    }
    TrackModel::new(checkpoints, width, offsets, closed)
}

pub fn write_track(track: &TrackModel) -> String {
    let mut out = String::new();
    let offsets: Vec<String> = track.lane_offsets().iter().map(|o| o.to_string()).collect();
    let _ = writeln!(out, "# racegame track");
    let _ = writeln!(out, "width = {}", track.width());
    let _ = writeln!(out, "lane_count = {}", track.lane_count());
    let _ = writeln!(out, "lane_offsets = {}", offsets.join(" "));
    let _ = writeln!(out, "closed = {}", track.is_closed());
    let _ = writeln!(out);
    let _ = writeln!(out, "[checkpoints]");
    let _ = writeln!(out, "# index x y heading kind");
    for (i, c) in track.checkpoints().iter().enumerate() {
        let kind = match c.kind {
            SegmentKind::Straight => "straight",
            SegmentKind::Curve => "curve",
        };
        let _ = writeln!(out, "{} {} {} {} {}", i + 1, c.position.x, c.position.y, c.heading, kind);
    }
    out
}
