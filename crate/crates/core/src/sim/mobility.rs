//! Vehicle traces: a built-in Manhattan-grid generator and a plain-text
//! trace format.
//!
//! Trace file layout:
//!
//! ```text
//! #vanet-trace v1 <width> <height> <duration>
//! <t> <node_id> <x> <y>
//! ...
//! ```
//!
//! Records are sorted by time, then node id. Between samples a vehicle is
//! interpolated linearly; after its last sample it stays put.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::rng::{self, Purpose};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: node {node} at ({x}, {y}) lies outside the {width} x {height} area")]
    OutOfBounds {
        line: usize,
        node: usize,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("line {line}: timestamps of node {node} are not increasing")]
    NonMonotone { line: usize, node: usize },
    #[error("node {node} has no samples")]
    MissingNode { node: usize },
    #[error("node {node} is covered only up to t={last}, need {required}")]
    Coverage { node: usize, last: f64, required: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub width: f64,
    pub height: f64,
    pub duration: f64,
    nodes: Vec<Vec<Sample>>,
}

impl Trace {
    /// Builds a trace from per-node samples; samples must be time-ordered.
    pub fn new(width: f64, height: f64, duration: f64, nodes: Vec<Vec<Sample>>) -> Self {
        Self {
            width,
            height,
            duration,
            nodes,
        }
    }

    /// Vehicles parked at fixed positions for the whole run.
    pub fn stationary(width: f64, height: f64, duration: f64, positions: &[[f64; 2]]) -> Self {
        let nodes = positions
            .iter()
            .map(|&[x, y]| {
                vec![
                    Sample { t: 0.0, x, y },
                    Sample { t: duration, x, y },
                ]
            })
            .collect();
        Self::new(width, height, duration, nodes)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn samples(&self, node: usize) -> &[Sample] {
        &self.nodes[node]
    }

    pub fn position(&self, node: usize, t: f64) -> (f64, f64) {
        let s = &self.nodes[node];
        let idx = s.partition_point(|p| p.t <= t);
        if idx == 0 {
            return (s[0].x, s[0].y);
        }
        if idx == s.len() {
            let last = s[s.len() - 1];
            return (last.x, last.y);
        }
        let (a, b) = (s[idx - 1], s[idx]);
        let f = (t - a.t) / (b.t - a.t);
        (a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
    }

    /// Checks bounds, per-node ordering and coverage of `required` seconds.
    pub fn check(&self, required: f64) -> Result<(), TraceError> {
        for (node, samples) in self.nodes.iter().enumerate() {
            let last = samples.last().ok_or(TraceError::MissingNode { node })?;
            for w in samples.windows(2) {
                if w[1].t <= w[0].t {
                    return Err(TraceError::NonMonotone { line: 0, node });
                }
            }
            for s in samples {
                if !self.in_bounds(s.x, s.y) {
                    return Err(TraceError::OutOfBounds {
                        line: 0,
                        node,
                        x: s.x,
                        y: s.y,
                        width: self.width,
                        height: self.height,
                    });
                }
            }
            if last.t < required {
                return Err(TraceError::Coverage {
                    node,
                    last: last.t,
                    required,
                });
            }
        }
        Ok(())
    }

    fn in_bounds(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn to_text(&self) -> String {
        let mut rows: Vec<(f64, usize, f64, f64)> = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(id, s)| s.iter().map(move |p| (p.t, id, p.x, p.y)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = format!(
            "#vanet-trace v1 {:?} {:?} {:?}\n",
            self.width, self.height, self.duration
        );
        for (t, id, x, y) in rows {
            let _ = writeln!(out, "{t:?} {id} {x:?} {y:?}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate();
        let (width, height, duration) = match lines.next() {
            Some((_, header)) => parse_header(header)?,
            None => {
                return Err(TraceError::Parse {
                    line: 1,
                    message: "empty trace".into(),
                })
            }
        };
        let mut nodes: Vec<Vec<Sample>> = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(TraceError::Parse {
                    line,
                    message: format!("expected `t node_id x y`, got {body:?}"),
                });
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| TraceError::Parse {
                        line,
                        message: format!("bad {what} {s:?}"),
                    })
            };
            let t = num(fields[0], "time")?;
            let node: usize = fields[1].parse().map_err(|_| TraceError::Parse {
                line,
                message: format!("bad node id {:?}", fields[1]),
            })?;
            let x = num(fields[2], "x")?;
            let y = num(fields[3], "y")?;
            if !(0.0..=width).contains(&x) || !(0.0..=height).contains(&y) {
                return Err(TraceError::OutOfBounds {
                    line,
                    node,
                    x,
                    y,
                    width,
                    height,
                });
            }
            if node >= nodes.len() {
                nodes.resize_with(node + 1, Vec::new);
            }
            if nodes[node].last().is_some_and(|p| p.t >= t) {
                return Err(TraceError::NonMonotone { line, node });
            }
            nodes[node].push(Sample { t, x, y });
        }
        let trace = Self::new(width, height, duration, nodes);
        trace.check(duration)?;
        Ok(trace)
    }

    pub fn load(path: &Path) -> Result<Self, TraceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_header(header: &str) -> Result<(f64, f64, f64), TraceError> {
    let bad = |message: String| TraceError::Parse { line: 1, message };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "#vanet-trace" || fields[1] != "v1" {
        return Err(bad(format!(
            "expected `#vanet-trace v1 width height duration`, got {header:?}"
        )));
    }
    let mut vals = [0.0; 3];
    for (slot, f) in vals.iter_mut().zip(&fields[2..]) {
        *slot = f
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| bad(format!("bad header value {f:?}")))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

/// Parameters of the built-in grid mobility model.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMobility {
    pub block: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub seed: u64,
}

impl Default for GridMobility {
    fn default() -> Self {
        Self {
            block: 100.0,
            speed_min: 8.0,
            speed_max: 14.0,
            seed: 1,
        }
    }
}

/// Vehicles on a Manhattan grid: each starts at a random intersection,
/// keeps a constant speed drawn from `[speed_min, speed_max]` and turns at
/// random at every intersection (U-turns only at dead ends). Positions are
/// sampled once per second from 0 to `ceil(duration)`.
pub fn generate_grid(
    grid: &GridMobility,
    width: f64,
    height: f64,
    vehicles: usize,
    duration: f64,
) -> Trace {
    let cols = (width / grid.block).floor() as i64 + 1;
    let rows = (height / grid.block).floor() as i64 + 1;
    let steps = duration.ceil() as usize;
    let mut rng = rng::stream(grid.seed, Purpose::Mobility, 0, 0);
    let point = |c: i64, r: i64| (c as f64 * grid.block, r as f64 * grid.block);

    let nodes = (0..vehicles)
        .map(|_| {
            let mut at = (rng.random_range(0..cols), rng.random_range(0..rows));
            let speed = if grid.speed_max > grid.speed_min {
                rng.random_range(grid.speed_min..grid.speed_max)
            } else {
                grid.speed_min
            };
            let mut heading: Option<(i64, i64)> = None;
            let mut next = pick_next(&mut rng, at, heading, cols, rows);
            let (mut x, mut y) = point(at.0, at.1);
            let mut samples = Vec::with_capacity(steps + 1);
            samples.push(Sample { t: 0.0, x, y });
            for step in 1..=steps {
                let mut budget = speed;
                while let Some(dir) = next {
                    let target = point(at.0 + dir.0, at.1 + dir.1);
                    let dist = (target.0 - x).abs() + (target.1 - y).abs();
                    if budget < dist {
                        x += dir.0 as f64 * budget;
                        y += dir.1 as f64 * budget;
                        break;
                    }
                    budget -= dist;
                    (x, y) = target;
                    at = (at.0 + dir.0, at.1 + dir.1);
                    heading = Some(dir);
                    next = pick_next(&mut rng, at, heading, cols, rows);
                }
                samples.push(Sample {
                    t: step as f64,
                    x: x.clamp(0.0, width),
                    y: y.clamp(0.0, height),
                });
            }
            samples
        })
        .collect();
    Trace::new(width, height, duration, nodes)
}

const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn pick_next<R: Rng>(
    rng: &mut R,
    at: (i64, i64),
    heading: Option<(i64, i64)>,
    cols: i64,
    rows: i64,
) -> Option<(i64, i64)> {
    let inside = |d: &(i64, i64)| {
        let (c, r) = (at.0 + d.0, at.1 + d.1);
        (0..cols).contains(&c) && (0..rows).contains(&r)
    };
    let options: Vec<(i64, i64)> = DIRECTIONS.iter().copied().filter(inside).collect();
    let forward: Vec<(i64, i64)> = options
        .iter()
        .copied()
        .filter(|d| heading.is_none_or(|h| (d.0, d.1) != (-h.0, -h.1)))
        .collect();
    let pool = if forward.is_empty() { &options } else { &forward };
    if pool.is_empty() {
        None
    } else {
        Some(pool[rng.random_range(0..pool.len())])
    }
}
