//! On-disk formats: detection logs, event logs, correspondence dumps, tag
//! layouts and the CSV traces.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CommandSample, EventRecord, SimError, SimResult, SweepRow};
use crate::detection::{BoundingBox, Detection, DetectionFrame};
use crate::geometry::tags::TagSpec;
use crate::geometry::{Correspondence, PixelPoint, WorldPoint};

/// `{"t": float, "dets": [[x, y, w, h, conf], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogFrame {
    t: f64,
    dets: Vec<[f64; 5]>,
}

impl From<&DetectionFrame> for LogFrame {
    fn from(f: &DetectionFrame) -> Self {
        LogFrame {
            t: f.t,
            dets: f
                .detections
                .iter()
                .map(|d| [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.confidence])
                .collect(),
        }
    }
}

impl TryFrom<LogFrame> for DetectionFrame {
    type Error = SimError;

    fn try_from(f: LogFrame) -> Result<Self, SimError> {
        let detections = f
            .dets
            .into_iter()
            .map(|[x, y, w, h, c]| {
                let bbox = BoundingBox { x, y, w, h };
                if !bbox.is_valid() || !(0.0..=1.0).contains(&c) {
                    return Err(SimError::ConfigInvalid(format!(
                        "invalid detection [{x}, {y}, {w}, {h}, {c}] at t = {}",
                        f.t
                    )));
                }
                Ok(Detection::new(bbox, c))
            })
            .collect::<Result<_, _>>()?;
        Ok(DetectionFrame::new(f.t, detections))
    }
}

fn write_jsonl<W: Write, S: Serialize>(
    mut out: W,
    items: impl IntoIterator<Item = S>,
) -> Result<(), SimError> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_jsonl<R: BufRead, D: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<D>, SimError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_detection_log<W: Write>(out: W, frames: &[DetectionFrame]) -> Result<(), SimError> {
    write_jsonl(out, frames.iter().map(LogFrame::from))
}

/// Reads a detection log, rejecting timestamps that go backwards.
pub fn read_detection_log<R: BufRead>(input: R) -> Result<Vec<DetectionFrame>, SimError> {
    let raw: Vec<LogFrame> = read_jsonl(input)?;
    let frames: Vec<DetectionFrame> = raw
        .into_iter()
        .map(DetectionFrame::try_from)
        .collect::<Result<_, _>>()?;
    for w in frames.windows(2) {
        if w[1].t < w[0].t {
            return Err(crate::monitor::MonitorError::NonMonotonicTime {
                prev: w[0].t,
                curr: w[1].t,
            }
            .into());
        }
    }
    Ok(frames)
}

pub fn write_event_log<W: Write>(out: W, events: &[EventRecord]) -> Result<(), SimError> {
    write_jsonl(out, events)
}

pub fn read_event_log<R: BufRead>(input: R) -> Result<Vec<EventRecord>, SimError> {
    read_jsonl(input)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DumpPoint {
    tag: u32,
    corner: u8,
    world: [f64; 3],
    pixel: [f64; 2],
}

/// `{"view": int, "points": [{"tag", "corner", "world": [3], "pixel": [2]}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DumpView {
    view: u32,
    points: Vec<DumpPoint>,
}

pub fn write_correspondences<W: Write>(
    out: W,
    views: &[Vec<Correspondence>],
) -> Result<(), SimError> {
    write_jsonl(
        out,
        views.iter().enumerate().map(|(i, v)| DumpView {
            view: i as u32,
            points: v
                .iter()
                .map(|c| DumpPoint {
                    tag: c.tag_id,
                    corner: c.corner_index,
                    world: c.world.into(),
                    pixel: c.pixel.into(),
                })
                .collect(),
        }),
    )
}

/// Views in file order.
pub fn read_correspondences<R: BufRead>(input: R) -> Result<Vec<Vec<Correspondence>>, SimError> {
    let raw: Vec<DumpView> = read_jsonl(input)?;
    raw.into_iter()
        .map(|v| {
            v.points
                .into_iter()
                .map(|p| {
                    if p.corner > 3 {
                        return Err(SimError::ConfigInvalid(format!(
                            "view {}: corner index {} out of range",
                            v.view, p.corner
                        )));
                    }
                    Ok(Correspondence::new(
                        WorldPoint::from(p.world),
                        PixelPoint::from(p.pixel),
                        p.tag,
                        p.corner,
                    ))
                })
                .collect()
        })
        .collect()
}

pub fn read_tag_layout<R: std::io::Read>(input: R) -> Result<Vec<TagSpec>, SimError> {
    let tags: Vec<TagSpec> = serde_json::from_reader(input)?;
    for t in &tags {
        t.validate().map_err(SimError::ConfigInvalid)?;
    }
    Ok(tags)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `t, l1_x, l1_y, l1_z, l2_x, l2_y, l2_z, separation_m, mode`; Level I
/// columns are empty while it is absent.
pub fn write_trajectory_csv<W: Write>(out: W, result: &SimResult) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "l1_x",
        "l1_y",
        "l1_z",
        "l2_x",
        "l2_y",
        "l2_z",
        "separation_m",
        "mode",
    ])?;
    for s in &result.trajectory {
        w.write_record([
            s.t.to_string(),
            opt(s.level1.map(|p| p.x)),
            opt(s.level1.map(|p| p.y)),
            opt(s.level1.map(|p| p.z)),
            s.level2.x.to_string(),
            s.level2.y.to_string(),
            s.level2.z.to_string(),
            opt(s.separation_m),
            s.mode.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t, mode, vx_cmps, vy_cmps, vz_cmps`
pub fn write_command_csv<W: Write>(out: W, commands: &[CommandSample]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mode", "vx_cmps", "vy_cmps", "vz_cmps"])?;
    for c in commands {
        w.write_record([
            c.t.to_string(),
            c.mode.as_str().to_string(),
            c.vx_cmps.to_string(),
            c.vy_cmps.to_string(),
            c.vz_cmps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "verdict",
        "min_separation",
        "wait_start",
        "landing_detected_t",
        "level2_touchdown_t",
    ])?;
    for r in rows {
        let verdict = serde_json::to_value(r.verdict)?;
        w.write_record([
            r.seed.to_string(),
            verdict.as_str().unwrap_or_default().to_string(),
            opt(r.min_separation),
            opt(r.wait_start),
            opt(r.landing_detected_t),
            opt(r.level2_touchdown_t),
        ])?;
    }
    w.flush()?;
    Ok(())
}
