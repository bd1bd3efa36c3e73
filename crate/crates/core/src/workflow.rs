//! Build, filter, observe: inputs and filters are recorded, and all work is
//! deferred until an observer runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::model::{CameraConfig, ConstructType, DetectionStream, MovableObject, RoadNetwork};
use crate::pipeline::{self, VideoStats};
use crate::planner::{self, ExecutionPlan, OptimizationToggles, PlannerConfig};
use crate::predicate::{self, CamRef, Declarations, EvalOptions, GeogRef, ObjRef, Predicate, PredicateError};
use crate::query::{self, QueryMatch, QueryOptions};
use crate::tracker::TrackerConfig;

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("a road network was already added")]
    DuplicateRoadNetwork,
    #[error("detection at frame {frame} but camera {camera_id} has {frames} frames")]
    FrameMismatch { camera_id: String, frame: usize, frames: usize },
    #[error(transparent)]
    UnknownReference(#[from] PredicateError),
    #[error("no video was added")]
    NoVideo,
    #[error("camera {0} is invalid: {1}")]
    InvalidCamera(String, String),
    #[error("writing output: {0}")]
    Write(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct Video {
    pub camera: CameraConfig,
    pub detections: DetectionStream,
    /// Directory of per-frame PNG images named by frame index.
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserveConfig {
    pub toggles: OptimizationToggles,
    pub planner: PlannerConfig,
    pub tracker: TrackerConfig,
    pub heading_window: usize,
    /// Context frames around each match in saved snippets.
    pub padding: usize,
    pub parallel: bool,
}

impl Default for ObserveConfig {
    fn default() -> Self {
        Self {
            toggles: OptimizationToggles::ALL,
            planner: PlannerConfig::default(),
            tracker: TrackerConfig::default(),
            heading_window: 1,
            padding: 0,
            parallel: true,
        }
    }
}

impl ObserveConfig {
    pub fn with_toggles(toggles: OptimizationToggles) -> Self {
        Self { toggles, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub frame_index: usize,
    /// Matched object tuples in variable order.
    pub matches: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub camera_id: String,
    pub frames: Vec<ManifestFrame>,
    /// Inclusive frame ranges covering the matches plus padding.
    pub snippets: Vec<(usize, usize)>,
}

impl VideoManifest {
    pub fn frame_set(&self) -> BTreeSet<usize> {
        self.frames.iter().map(|f| f.frame_index).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserveResult {
    /// Objects in at least one match, with their full tracks.
    pub objects: Vec<MovableObject>,
    /// Every object the pipeline recovered, matched or not.
    pub tracks: Vec<MovableObject>,
    pub manifest: Vec<VideoManifest>,
    pub stats: Vec<VideoStats>,
    pub plan: ExecutionPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObserveMode {
    GetObjects,
    SaveFrames { out: PathBuf, annotate: bool },
}

#[derive(Debug, Default)]
pub struct World {
    roads: Option<RoadNetwork>,
    videos: Vec<Video>,
    filters: Vec<Predicate>,
    objects: usize,
    camera: bool,
    geogs: Vec<GeogRef>,
    work: AtomicU64,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn object(&mut self) -> ObjRef {
        self.objects += 1;
        ObjRef(self.objects - 1)
    }

    pub fn camera(&mut self) -> CamRef {
        self.camera = true;
        CamRef
    }

    pub fn geog_construct(&mut self, construct_type: ConstructType) -> GeogRef {
        let g = GeogRef { id: self.geogs.len(), construct_type };
        self.geogs.push(g);
        g
    }

    pub fn add_geog_constructs(&mut self, roads: RoadNetwork) -> Result<&mut Self, WorkflowError> {
        if self.roads.is_some() {
            return Err(WorkflowError::DuplicateRoadNetwork);
        }
        self.roads = Some(roads);
        Ok(self)
    }

    pub fn add_video(&mut self, camera: CameraConfig, detections: DetectionStream, frames: Option<PathBuf>) -> Result<&mut Self, WorkflowError> {
        if let Some(frame) = detections.frame_indices().find(|&f| f >= camera.len()) {
            return Err(WorkflowError::FrameMismatch { camera_id: camera.camera_id.clone(), frame, frames: camera.len() });
        }
        self.videos.push(Video { camera, detections, frames });
        Ok(self)
    }

    pub fn filter(&mut self, p: Predicate) -> Result<&mut Self, WorkflowError> {
        let decl = Declarations { objects: self.objects, camera: self.camera, geogs: self.geogs.clone() };
        predicate::validate(&p, &decl)?;
        self.filters.push(p);
        Ok(self)
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn road_network(&self) -> Option<&RoadNetwork> {
        self.roads.as_ref()
    }

    /// Recorded filters joined by conjunction.
    pub fn predicate(&self) -> Predicate {
        predicate::conjoin(self.filters.iter().cloned())
    }

    /// Units of processing work done so far; stays 0 until an observer runs.
    pub fn work_done(&self) -> u64 {
        self.work.load(Ordering::Relaxed)
    }

    pub fn plan(&self, cfg: &ObserveConfig) -> ExecutionPlan {
        planner::make_plan(&self.predicate(), &cfg.toggles, &cfg.planner)
    }

    pub fn get_objects(&self, cfg: &ObserveConfig) -> Result<ObserveResult, WorkflowError> {
        self.observe(&ObserveMode::GetObjects, cfg)
    }

    pub fn save_videos(&self, out: impl AsRef<Path>, annotate: bool, cfg: &ObserveConfig) -> Result<ObserveResult, WorkflowError> {
        self.observe(&ObserveMode::SaveFrames { out: out.as_ref().to_path_buf(), annotate }, cfg)
    }

    pub fn observe(&self, mode: &ObserveMode, cfg: &ObserveConfig) -> Result<ObserveResult, WorkflowError> {
        if self.videos.is_empty() {
            return Err(WorkflowError::NoVideo);
        }
        for v in &self.videos {
            let bad = v.camera.violations();
            if let Some(first) = bad.first() {
                return Err(WorkflowError::InvalidCamera(v.camera.camera_id.clone(), first.to_string()));
            }
        }
        let p = self.predicate();
        let plan = planner::make_plan(&p, &cfg.toggles, &cfg.planner);
        let empty = RoadNetwork::default();
        let roads = self.roads.as_ref().unwrap_or(&empty);
        let qopts = QueryOptions { type_prefilter: true, eval: EvalOptions { heading_window: cfg.heading_window } };

        let run = |v: &Video| -> (Vec<MovableObject>, Vec<QueryMatch>, VideoStats) {
            let out = pipeline::process_video(&plan, &p, &v.camera, &v.detections, roads, &cfg.tracker);
            let q = query::execute_query(&out.objects, &v.camera, roads, &p, &qopts);
            (out.objects, q.matches, out.stats)
        };
        let results: Vec<_> = if cfg.parallel && self.videos.len() > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = self.videos.iter().map(|v| s.spawn(|| run(v))).collect();
                handles.into_iter().map(|h| h.join().expect("video worker panicked")).collect()
            })
        } else {
            self.videos.iter().map(run).collect()
        };

        let mut objects = Vec::new();
        let mut tracks = Vec::new();
        let mut manifest = Vec::new();
        let mut stats = Vec::new();
        for (v, (objs, matches, st)) in self.videos.iter().zip(results) {
            self.work.fetch_add((st.frames_processed() + st.detections_processed()).max(1) as u64, Ordering::Relaxed);
            let matched: BTreeSet<&str> = matches.iter().flat_map(|m| m.oids.iter().map(String::as_str)).collect();
            let prefix = |oid: &str| format!("{}:{oid}", v.camera.camera_id);
            for o in &objs {
                let named = MovableObject { oid: prefix(&o.oid), ..o.clone() };
                if matched.contains(o.oid.as_str()) {
                    objects.push(named.clone());
                }
                tracks.push(named);
            }
            let mut by_frame: BTreeMap<usize, Vec<Vec<String>>> = BTreeMap::new();
            for m in matches {
                by_frame.entry(m.frame_index).or_default().push(m.oids.iter().map(|o| prefix(o)).collect());
            }
            let frames: Vec<ManifestFrame> =
                by_frame.into_iter().map(|(frame_index, matches)| ManifestFrame { frame_index, matches }).collect();
            let snippets = snippets(frames.iter().map(|f| f.frame_index), cfg.padding, v.camera.len());
            manifest.push(VideoManifest { camera_id: v.camera.camera_id.clone(), frames, snippets });
            stats.push(st);
        }
        let result = ObserveResult { objects, tracks, manifest, stats, plan };

        if let ObserveMode::SaveFrames { out, annotate } = mode {
            std::fs::create_dir_all(out)?;
            crate::io::write_manifest(out.join("manifest.json"), &result.manifest).map_err(|e| WorkflowError::Write(e.to_string()))?;
            crate::io::write_tracks(out.join("tracks.json"), &result.objects).map_err(|e| WorkflowError::Write(e.to_string()))?;
            if *annotate {
                for (v, m) in self.videos.iter().zip(&result.manifest) {
                    if let Some(dir) = &v.frames {
                        annotate_frames(dir, &out.join("frames").join(&v.camera.camera_id), m, &result.objects).map_err(|e| WorkflowError::Write(e.to_string()))?;
                    }
                }
            }
        }
        Ok(result)
    }
}

/// Merges `[f - padding, f + padding]` ranges, clamped to the video.
pub fn snippets(frames: impl IntoIterator<Item = usize>, padding: usize, len: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for f in frames {
        let (lo, hi) = (f.saturating_sub(padding), (f + padding).min(len.saturating_sub(1)));
        match out.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn frame_image(dir: &Path, frame: usize) -> Option<PathBuf> {
    [format!("{frame}.png"), format!("{frame:06}.png")].into_iter().map(|n| dir.join(n)).find(|p| p.exists())
}

/// Draws the matched objects' boxes onto each manifest frame's image.
pub fn annotate_frames(src: &Path, dst: &Path, manifest: &VideoManifest, objects: &[MovableObject]) -> Result<usize, WorkflowError> {
    std::fs::create_dir_all(dst)?;
    let by_oid: BTreeMap<&str, &MovableObject> = objects.iter().map(|o| (o.oid.as_str(), o)).collect();
    let mut written = 0;
    for f in &manifest.frames {
        let Some(path) = frame_image(src, f.frame_index) else { continue };
        let mut img = image::open(&path)?.to_rgb8();
        let oids: BTreeSet<&str> = f.matches.iter().flatten().map(String::as_str).collect();
        for oid in oids {
            if let Some(s) = by_oid.get(oid).and_then(|o| o.sample_at(f.frame_index)) {
                draw_rect(&mut img, s.bbox.x1, s.bbox.y1, s.bbox.x2, s.bbox.y2, [255, 0, 0]);
            }
        }
        img.save(dst.join(format!("{}.png", f.frame_index)))?;
        written += 1;
    }
    Ok(written)
}

fn draw_rect(img: &mut image::RgbImage, x1: f64, y1: f64, x2: f64, y2: f64, color: [u8; 3]) {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return;
    }
    let cx = |x: f64| (x.round().max(0.0) as u32).min(w - 1);
    let cy = |y: f64| (y.round().max(0.0) as u32).min(h - 1);
    let (x1, x2, y1, y2) = (cx(x1), cx(x2), cy(y1), cy(y2));
    for x in x1..=x2 {
        img.put_pixel(x, y1, image::Rgb(color));
        img.put_pixel(x, y2, image::Rgb(color));
    }
    for y in y1..=y2 {
        img.put_pixel(x1, y, image::Rgb(color));
        img.put_pixel(x2, y, image::Rgb(color));
    }
}
