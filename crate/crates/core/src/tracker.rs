//! Tracking by detection over sampled frames.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{BBox, Detection, MovableObject, ObjectSample, Vec3};

/// Minimum-cost assignment of rows to columns. Non-finite entries are
/// forbidden. Returns `assignment[row] = Some(col)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    // Forbidden pairs get a cost larger than any feasible assignment, then
    // are dropped from the result.
    let finite_max = cost.iter().flatten().filter(|c| c.is_finite()).fold(0.0f64, |a, &c| a.max(c.abs()));
    let big = (finite_max + 1.0) * (n.max(m) as f64 + 1.0);
    let size = n.max(m);
    let at = |i: usize, j: usize| -> f64 {
        if i < n && j < m {
            let c = cost[i][j];
            if c.is_finite() { c } else { big }
        } else {
            0.0
        }
    };

    // Shortest augmenting paths with potentials on a square matrix.
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=size {
        let i = p[j];
        if i >= 1 && i <= n && j <= m && cost[i - 1][j - 1].is_finite() {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

pub fn assignment_cost(cost: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment.iter().enumerate().filter_map(|(i, j)| j.map(|j| cost[i][j])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub iou_min: f64,
    /// Sampled frames a track may go unmatched before it is retired.
    pub max_age: usize,
    /// Weight of the newest displacement in the velocity average.
    pub alpha: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { iou_min: 0.1, max_age: 2, alpha: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub oid: String,
    pub object_type: String,
    pub last_bbox: BBox,
    pub last_frame: usize,
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub missed: usize,
    pub samples: Vec<ObjectSample>,
}

impl TrackState {
    pub fn predicted(&self, frame: usize) -> BBox {
        let gap = frame.saturating_sub(self.last_frame) as f64;
        self.last_bbox.translated(self.velocity.0 * gap, self.velocity.1 * gap)
    }

    pub fn into_object(self) -> MovableObject {
        MovableObject { oid: self.oid, object_type: self.object_type, samples: self.samples }
    }
}

/// A detection ready for association at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub detection: Detection,
    pub timestamp: f64,
    pub location: Option<Vec3>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameAssociation {
    /// `(track position, observation position)`.
    pub matches: Vec<(usize, usize)>,
    pub births: Vec<usize>,
    pub misses: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackerCounters {
    pub frames: u64,
    pub detections: u64,
    /// Cost-matrix cells filled; grows with tracks times detections.
    pub cost_cells: u64,
}

/// Matches observations to tracks by motion-predicted overlap; tracks and
/// detections of different types never match.
pub fn associate_frame(
    tracks: &[TrackState],
    obs: &[Observation],
    frame: usize,
    cfg: &TrackerConfig,
    counters: &mut TrackerCounters,
) -> FrameAssociation {
    let mut groups: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, t) in tracks.iter().enumerate() {
        groups.entry(t.object_type.as_str()).or_default().0.push(i);
    }
    for (j, o) in obs.iter().enumerate() {
        groups.entry(o.detection.class_label.as_str()).or_default().1.push(j);
    }
    let mut out = FrameAssociation::default();
    let mut matched_tracks = vec![false; tracks.len()];
    let mut matched_obs = vec![false; obs.len()];
    for (rows, cols) in groups.values() {
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        counters.cost_cells += (rows.len() * cols.len()) as u64;
        let cost: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| {
                let pred = tracks[i].predicted(frame);
                cols.iter()
                    .map(|&j| {
                        let iou = pred.iou(&obs[j].detection.bbox);
                        if iou < cfg.iou_min || iou <= 0.0 { f64::INFINITY } else { 1.0 - iou }
                    })
                    .collect()
            })
            .collect();
        for (r, c) in hungarian(&cost).into_iter().enumerate() {
            if let Some(c) = c {
                out.matches.push((rows[r], cols[c]));
                matched_tracks[rows[r]] = true;
                matched_obs[cols[c]] = true;
            }
        }
    }
    out.matches.sort();
    out.births = (0..obs.len()).filter(|&j| !matched_obs[j]).collect();
    out.misses = (0..tracks.len()).filter(|&i| !matched_tracks[i]).collect();
    out
}

/// Sequential tracker over sampled frames.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub cfg: TrackerConfig,
    active: Vec<TrackState>,
    finished: Vec<TrackState>,
    next_id: usize,
    pub counters: TrackerCounters,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self { cfg, active: Vec::new(), finished: Vec::new(), next_id: 0, counters: TrackerCounters::default() }
    }

    pub fn active(&self) -> &[TrackState] {
        &self.active
    }

    pub fn step(&mut self, frame: usize, obs: Vec<Observation>) {
        self.counters.frames += 1;
        self.counters.detections += obs.len() as u64;
        let assoc = associate_frame(&self.active, &obs, frame, &self.cfg, &mut self.counters);
        let alpha = self.cfg.alpha;
        for &(i, j) in &assoc.matches {
            let t = &mut self.active[i];
            let o = &obs[j];
            let gap = frame.saturating_sub(t.last_frame).max(1) as f64;
            let (cx, cy) = t.last_bbox.center();
            let (nx, ny) = o.detection.bbox.center();
            let step = ((nx - cx) / gap, (ny - cy) / gap);
            t.velocity = if t.samples.len() == 1 {
                step
            } else {
                (alpha * step.0 + (1.0 - alpha) * t.velocity.0, alpha * step.1 + (1.0 - alpha) * t.velocity.1)
            };
            t.last_bbox = o.detection.bbox;
            t.last_frame = frame;
            t.missed = 0;
            t.samples.push(sample(o, frame));
        }
        for &i in &assoc.misses {
            self.active[i].missed += 1;
        }
        for &j in &assoc.births {
            let o = &obs[j];
            self.active.push(TrackState {
                oid: format!("{}", self.next_id),
                object_type: o.detection.class_label.clone(),
                last_bbox: o.detection.bbox,
                last_frame: frame,
                velocity: (0.0, 0.0),
                missed: 0,
                samples: vec![sample(o, frame)],
            });
            self.next_id += 1;
        }
        let max_age = self.cfg.max_age;
        let (keep, retire): (Vec<_>, Vec<_>) = self.active.drain(..).partition(|t| t.missed <= max_age);
        self.active = keep;
        self.finished.extend(retire);
    }

    /// All tracks ordered by birth.
    pub fn finish(mut self) -> (Vec<MovableObject>, TrackerCounters) {
        self.finished.append(&mut self.active);
        self.finished.sort_by_key(|t| t.oid.parse::<usize>().unwrap_or(usize::MAX));
        (self.finished.into_iter().map(TrackState::into_object).collect(), self.counters)
    }
}

fn sample(o: &Observation, frame: usize) -> ObjectSample {
    ObjectSample { frame_index: frame, timestamp: o.timestamp, bbox: o.detection.bbox, location: o.location }
}

/// Folds association over sampled frames in order.
pub fn track_video(frames: impl IntoIterator<Item = (usize, Vec<Observation>)>, cfg: &TrackerConfig) -> (Vec<MovableObject>, TrackerCounters) {
    let mut tracker = Tracker::new(*cfg);
    for (f, obs) in frames {
        tracker.step(f, obs);
    }
    tracker.finish()
}

/// Fills samples for `available` frames the sampler skipped between two
/// samples taken at consecutive sampled frames, interpolating bbox and
/// location linearly.
pub fn interpolate_skipped(obj: &mut MovableObject, sampled: &[usize], available: &[usize], timestamp: impl Fn(usize) -> f64) {
    let mut filled = Vec::with_capacity(obj.samples.len());
    for w in obj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        filled.push(a.clone());
        let pa = sampled.binary_search(&a.frame_index);
        let pb = sampled.binary_search(&b.frame_index);
        let consecutive = matches!((pa, pb), (Ok(i), Ok(j)) if j == i + 1);
        if !consecutive {
            continue;
        }
        let span = (b.frame_index - a.frame_index) as f64;
        for f in a.frame_index + 1..b.frame_index {
            if available.binary_search(&f).is_err() {
                continue;
            }
            let t = (f - a.frame_index) as f64 / span;
            let location = match (a.location, b.location) {
                (Some(p), Some(q)) => Some(Vec3::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t, p.z + (q.z - p.z) * t)),
                _ => None,
            };
            filled.push(ObjectSample { frame_index: f, timestamp: timestamp(f), bbox: a.bbox.lerp(&b.bbox, t), location });
        }
    }
    if let Some(last) = obj.samples.last() {
        filled.push(last.clone());
    }
    obj.samples = filled;
}
