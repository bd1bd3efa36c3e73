//! Runs an execution plan over one video.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::estimator::{self, EstimateStats};
use crate::model::{CameraConfig, Detection, DetectionStream, MovableObject, ObjectSample, RoadNetwork};
use crate::planner::ExecutionPlan;
use crate::predicate::{self, Predicate};
use crate::pruners;
use crate::sampler::{self, FrameCars, SamplerConfig};
use crate::tracker::{self, Observation, TrackerConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoStats {
    pub camera_id: String,
    pub frames_total: usize,
    pub frames_pruned: usize,
    pub frames_decoded: usize,
    pub frames_detected: usize,
    pub frames_estimated: usize,
    pub frames_tracked: usize,
    pub detections_total: usize,
    pub detections_pruned: usize,
    pub detections_estimated: usize,
    pub detections_dropped: usize,
    pub detections_tracked: usize,
    pub sampled_frames: usize,
    pub skipping_ratio: f64,
    pub tracker_cost_cells: u64,
    /// Seconds per step.
    pub timings: BTreeMap<String, f64>,
}

impl VideoStats {
    /// Frames entering decode, detect, estimate and track, summed.
    pub fn frames_processed(&self) -> usize {
        self.frames_decoded + self.frames_detected + self.frames_estimated + self.frames_tracked
    }

    /// Detections entering estimation and tracking, summed.
    pub fn detections_processed(&self) -> usize {
        self.detections_estimated + self.detections_tracked
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoOutput {
    pub objects: Vec<MovableObject>,
    pub stats: VideoStats,
}

struct Timer<'a> {
    timings: &'a mut BTreeMap<String, f64>,
}

impl Timer<'_> {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(name.to_string()).or_default() += start.elapsed().as_secs_f64();
        out
    }
}

pub fn process_video(
    plan: &ExecutionPlan,
    p: &Predicate,
    camera: &CameraConfig,
    detections: &DetectionStream,
    roads: &RoadNetwork,
    tracker_cfg: &TrackerConfig,
) -> VideoOutput {
    let mut stats = VideoStats {
        camera_id: camera.camera_id.clone(),
        frames_total: camera.len(),
        detections_total: detections.len(),
        ..VideoStats::default()
    };
    let mut timings = BTreeMap::new();
    let mut timer = Timer { timings: &mut timings };

    let mut frames: Vec<usize> = (0..camera.len()).collect();
    if let Some((depth, _)) = plan.rvp() {
        frames = timer.time("road_visibility_prune", || {
            frames
                .into_iter()
                .filter(|&f| pruners::rvp_keep_frame(p, &pruners::visible_construct_types(&camera.frames[f], roads, depth)))
                .collect()
        });
        stats.frames_pruned = camera.len() - frames.len();
    }
    if !plan.has("Decode") {
        stats.timings = timings;
        return VideoOutput { objects: Vec::new(), stats };
    }
    stats.frames_decoded = frames.len();

    let mut detected: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
    if plan.has("Detect") {
        timer.time("detect", || {
            for &f in &frames {
                detected.insert(f, detections.at(f).to_vec());
            }
        });
        stats.frames_detected = frames.len();
    }
    if let Some(types) = plan.otp() {
        timer.time("object_type_prune", || {
            for dets in detected.values_mut() {
                let before = dets.len();
                *dets = pruners::otp_filter(dets, types);
                stats.detections_pruned += before - dets.len();
            }
        });
    }

    let Some(kind) = plan.estimator() else {
        // Without locations, each detection stands alone.
        stats.timings = timings;
        return VideoOutput { objects: singletons(&detected, camera), stats };
    };

    let mut est = EstimateStats::default();
    let mut located: HashMap<usize, Vec<Observation>> = HashMap::new();
    let locate = |f: usize, est: &mut EstimateStats, stats: &mut VideoStats| -> Vec<Observation> {
        let frame = &camera.frames[f];
        let dets = &detected[&f];
        stats.frames_estimated += 1;
        stats.detections_estimated += dets.len();
        dets.iter()
            .filter_map(|d| {
                let loc = estimator::estimate(d, frame, kind, est)?;
                Some(Observation { detection: d.clone(), timestamp: frame.timestamp, location: Some(loc) })
            })
            .collect()
    };

    let sampled: Vec<usize> = match plan.sampler() {
        Some((speed_mps, max_skip, depth)) => {
            let relevant = predicate::relevant_object_types(p);
            let is_relevant = |d: &Detection| relevant.as_ref().is_none_or(|t| t.contains(&d.class_label));
            let cfg = SamplerConfig { speed_mps, max_skip, frustum_depth: depth };
            let start = Instant::now();
            let mut estimate_time = 0.0;
            let out = sampler::sample_frames(
                &frames,
                camera,
                roads,
                &cfg,
                |f| detected[&f].iter().filter(|d| is_relevant(d)).count(),
                |f| {
                    let t = Instant::now();
                    let obs = locate(f, &mut est, &mut stats);
                    estimate_time += t.elapsed().as_secs_f64();
                    let count = detected[&f].iter().filter(|d| is_relevant(d)).count();
                    let locations = obs.iter().filter(|o| is_relevant(&o.detection)).filter_map(|o| o.location).collect();
                    located.insert(f, obs);
                    FrameCars { count, locations }
                },
            );
            // The sampler never looks at the final sample; locate it too.
            if let Some(&last) = out.last() {
                if let std::collections::hash_map::Entry::Vacant(slot) = located.entry(last) {
                    let t = Instant::now();
                    slot.insert(locate(last, &mut est, &mut stats));
                    estimate_time += t.elapsed().as_secs_f64();
                }
            }
            *timings.entry("estimate_3d".into()).or_default() += estimate_time;
            *timings.entry("exit_frame_sample".into()).or_default() += start.elapsed().as_secs_f64() - estimate_time;
            out
        }
        None => {
            let mut timer = Timer { timings: &mut timings };
            timer.time("estimate_3d", || {
                for &f in &frames {
                    let obs = locate(f, &mut est, &mut stats);
                    located.insert(f, obs);
                }
            });
            frames.clone()
        }
    };
    stats.detections_dropped = est.dropped as usize;
    stats.sampled_frames = sampled.len();
    // Only frames the sampler passed over count as skipped.
    stats.skipping_ratio = sampler::skipping_ratio(camera.len() - (frames.len() - sampled.len()), camera.len());

    if !plan.has("Track") {
        let mut objects = Vec::new();
        for f in &sampled {
            for (i, o) in located.remove(f).unwrap_or_default().into_iter().enumerate() {
                objects.push(MovableObject {
                    oid: format!("f{f}d{i}"),
                    object_type: o.detection.class_label.clone(),
                    samples: vec![ObjectSample { frame_index: *f, timestamp: o.timestamp, bbox: o.detection.bbox, location: o.location }],
                });
            }
        }
        stats.timings = timings;
        return VideoOutput { objects, stats };
    }

    let start = Instant::now();
    let inputs: Vec<(usize, Vec<Observation>)> =
        sampled.iter().map(|&f| (f, located.remove(&f).unwrap_or_default())).collect();
    stats.frames_tracked = inputs.len();
    stats.detections_tracked = inputs.iter().map(|(_, o)| o.len()).sum();
    let (mut objects, counters) = tracker::track_video(inputs, tracker_cfg);
    stats.tracker_cost_cells = counters.cost_cells;
    if plan.sampler().is_some() {
        for o in &mut objects {
            tracker::interpolate_skipped(o, &sampled, &frames, |f| camera.frames[f].timestamp);
        }
    }
    *timings.entry("track".into()).or_default() += start.elapsed().as_secs_f64();
    stats.timings = timings;
    VideoOutput { objects, stats }
}

fn singletons(detected: &BTreeMap<usize, Vec<Detection>>, camera: &CameraConfig) -> Vec<MovableObject> {
    let mut out = Vec::new();
    for (f, dets) in detected {
        for (i, d) in dets.iter().enumerate() {
            out.push(MovableObject {
                oid: format!("f{f}d{i}"),
                object_type: d.class_label.clone(),
                samples: vec![ObjectSample { frame_index: *f, timestamp: camera.frames[*f].timestamp, bbox: d.bbox, location: None }],
            });
        }
    }
    out
}

/// Frames of one video kept by the visibility pruner at depth `d`.
pub fn rvp_kept_frames(p: &Predicate, camera: &CameraConfig, roads: &RoadNetwork, d: f64) -> BTreeSet<usize> {
    (0..camera.len())
        .filter(|&f| pruners::rvp_keep_frame(p, &pruners::visible_construct_types(&camera.frames[f], roads, d)))
        .collect()
}
