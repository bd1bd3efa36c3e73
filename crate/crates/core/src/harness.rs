//! Synthetic scenes with exact ground truth, evaluation metrics and the
//! ablation matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point2, Polygon2D};
use crate::model::{
    BBox, CameraConfig, CameraFrame, ConstructType, Detection, DetectionStream, GeographicConstruct, Intrinsic,
    MovableObject, ObjectSample, Quaternion, RoadNetwork, Vec3,
};
use crate::planner::OptimizationToggles;
use crate::predicate::{self, Bindings, CamRef, EvalOptions, GeogRef, ObjRef, Predicate};
use crate::tracker;
use crate::workflow::{ObserveConfig, World};

/// Length, width and height in meters.
pub fn extents(object_type: &str) -> (f64, f64, f64) {
    match object_type {
        "car" => (4.5, 1.8, 1.5),
        "truck" => (8.0, 2.5, 3.2),
        "bus" => (12.0, 2.6, 3.2),
        "human" | "pedestrian" => (0.5, 0.5, 1.7),
        "bicycle" | "motorcycle" => (1.8, 0.6, 1.5),
        _ => (1.0, 1.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub object_type: String,
    /// Piecewise-linear ground path.
    pub waypoints: Vec<Point2>,
    pub speed: f64,
    /// Seconds after the first frame at which the agent is at `waypoints[0]`.
    pub start: f64,
}

impl AgentSpec {
    /// Position and heading at time `t`, or `None` before the start or past
    /// the end of the path.
    pub fn state_at(&self, t: f64) -> Option<(Point2, f64)> {
        if t < self.start {
            return None;
        }
        let mut s = (t - self.start) * self.speed;
        for w in self.waypoints.windows(2) {
            let len = w[0].distance(&w[1]);
            if len == 0.0 {
                continue;
            }
            let heading = geometry::normalize_degrees((w[1].y - w[0].y).atan2(w[1].x - w[0].x).to_degrees());
            if s <= len {
                let f = s / len;
                return Some((Point2::new(w[0].x + (w[1].x - w[0].x) * f, w[0].y + (w[1].y - w[0].y) * f), heading));
            }
            s -= len;
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraKey {
    pub t: f64,
    pub position: Vec3,
    pub yaw: f64,
    pub pitch_down: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub duration_s: f64,
    pub frame_rate: f64,
    /// Epoch seconds of the first frame.
    pub start_time: f64,
    pub width: u32,
    pub height: u32,
    pub intrinsic: Intrinsic,
    pub roads: Vec<GeographicConstruct>,
    pub agents: Vec<AgentSpec>,
    /// Linearly interpolated camera poses, sorted by time.
    pub camera: Vec<CameraKey>,
    /// Standard deviation of bbox corner noise in pixels.
    pub pixel_noise: f64,
    /// Objects farther than this are not detected.
    pub max_range: f64,
}

fn rect(id: &str, ty: ConstructType, x0: f64, y0: f64, x1: f64, y1: f64, headings: &[f64]) -> GeographicConstruct {
    GeographicConstruct::new(id, ty, Polygon2D::rect(x0, y0, x1, y1).vertices, headings.to_vec())
}

/// Two crossing two-lane roads with lanes ending at a 14 m square
/// intersection centered on the origin. Right-hand traffic.
pub fn crossroads(reach: f64) -> Vec<GeographicConstruct> {
    let h = 7.0;
    vec![
        rect("int-0", ConstructType::Intersection, -h, -h, h, h, &[]),
        rect("lane-eb-w", ConstructType::Lane, -reach, -h, -h, 0.0, &[0.0]),
        rect("lane-eb-e", ConstructType::Lane, h, -h, reach, 0.0, &[0.0]),
        rect("lane-wb-w", ConstructType::Lane, -reach, 0.0, -h, h, &[180.0]),
        rect("lane-wb-e", ConstructType::Lane, h, 0.0, reach, h, &[180.0]),
        rect("lane-nb-s", ConstructType::Lane, 0.0, -reach, h, -h, &[90.0]),
        rect("lane-nb-n", ConstructType::Lane, 0.0, h, h, reach, &[90.0]),
        rect("lane-sb-s", ConstructType::Lane, -h, -reach, 0.0, -h, &[270.0]),
        rect("lane-sb-n", ConstructType::Lane, -h, h, 0.0, reach, &[270.0]),
        rect("road-ew", ConstructType::RoadSection, -reach, -h, reach, h, &[0.0, 180.0]),
        rect("road-ns", ConstructType::RoadSection, -h, -reach, h, reach, &[90.0, 270.0]),
    ]
}

const LANE_OFFSET: f64 = 3.5;

/// Straight route through the crossroads: approach direction 0 = from the
/// west (eastbound), 1 = from the south, 2 = from the east, 3 = from the
/// north. `turn` is -1 left, 0 straight, 1 right.
fn route(approach: usize, turn: i32, from: f64, to: f64) -> Vec<Point2> {
    let rot = |p: Point2, k: usize| -> Point2 {
        let (mut x, mut y) = (p.x, p.y);
        for _ in 0..k {
            (x, y) = (-y, x);
        }
        Point2::new(x, y)
    };
    // Eastbound canonical route, rotated by the approach.
    let start = Point2::new(-from, -LANE_OFFSET);
    let pts = match turn {
        0 => vec![start, Point2::new(to, -LANE_OFFSET)],
        1 => vec![start, Point2::new(-LANE_OFFSET, -LANE_OFFSET), Point2::new(-LANE_OFFSET, -to)],
        _ => vec![start, Point2::new(LANE_OFFSET, -LANE_OFFSET), Point2::new(LANE_OFFSET, to)],
    };
    pts.into_iter().map(|p| rot(p, approach)).collect()
}

impl SceneSpec {
    fn base(seed: u64) -> Self {
        Self {
            seed,
            duration_s: 20.0,
            frame_rate: 12.0,
            start_time: 1_700_000_000.0,
            width: 1280,
            height: 720,
            intrinsic: Intrinsic::new(800.0, 800.0, 0.0, 640.0, 360.0),
            roads: Vec::new(),
            agents: Vec::new(),
            camera: Vec::new(),
            pixel_noise: 0.0,
            max_range: 120.0,
        }
    }

    pub fn frames(&self) -> usize {
        (self.duration_s * self.frame_rate).round() as usize
    }

    /// Ego camera driving east through a crossroads with random traffic and
    /// pedestrians. One westbound car always crosses the intersection while
    /// the ego approaches it.
    pub fn intersection(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::base(seed);
        s.roads = crossroads(300.0);
        let ego_speed = rng.random_range(5.0..8.0);
        let x0 = rng.random_range(-110.0..-80.0);
        s.camera = vec![
            CameraKey { t: 0.0, position: Vec3::new(x0, -LANE_OFFSET, 1.6), yaw: 0.0, pitch_down: 5.0 },
            CameraKey {
                t: s.duration_s,
                position: Vec3::new(x0 + ego_speed * s.duration_s, -LANE_OFFSET, 1.6),
                yaw: 0.0,
                pitch_down: 5.0,
            },
        ];
        // The oncoming car reaches the intersection center when the ego is
        // 25 m short of it.
        let meet = (-25.0 - x0) / ego_speed;
        let v = rng.random_range(7.0..11.0);
        let lead = (v * meet).min(120.0);
        s.agents.push(AgentSpec { object_type: "car".into(), waypoints: route(2, 0, lead, 200.0), speed: v, start: meet - lead / v });

        let n = rng.random_range(3..7);
        for _ in 0..n {
            let approach = rng.random_range(0..4);
            let turn = [0, 0, 1, -1][rng.random_range(0..4)];
            let object_type = if rng.random_bool(0.25) { "truck" } else { "car" };
            s.agents.push(AgentSpec {
                object_type: object_type.into(),
                waypoints: route(approach, turn, rng.random_range(40.0..150.0), 200.0),
                speed: rng.random_range(5.0..11.0),
                start: rng.random_range(0.0..12.0),
            });
        }
        for _ in 0..rng.random_range(1..4) {
            let side = if rng.random_bool(0.5) { 9.0 } else { -9.0 };
            let x = rng.random_range(-40.0..40.0);
            let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            s.agents.push(AgentSpec {
                object_type: "human".into(),
                waypoints: vec![Point2::new(x, side), Point2::new(x + dir * 60.0, side)],
                speed: rng.random_range(1.0..1.8),
                start: rng.random_range(0.0..5.0),
            });
        }
        s
    }

    /// Stationary camera watching one car drive a long straight lane; the
    /// car stays in view for the whole video.
    pub fn straight_lane(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::base(seed);
        s.roads = vec![rect("lane-0", ConstructType::Lane, -400.0, -2.0, 400.0, 2.0, &[0.0])];
        let pose = CameraKey { t: 0.0, position: Vec3::new(0.0, -80.0, 5.0), yaw: 90.0, pitch_down: 3.0 };
        s.camera = vec![pose, CameraKey { t: s.duration_s, ..pose }];
        let speed = rng.random_range(4.0..5.0);
        s.agents.push(AgentSpec {
            object_type: "car".into(),
            waypoints: vec![Point2::new(-50.0, 0.0), Point2::new(300.0, 0.0)],
            speed,
            start: 0.0,
        });
        s
    }

    /// Stationary camera that watches the intersection, then pans away for
    /// the last `invisible` fraction of the video.
    pub fn partial_intersection(seed: u64, invisible: f64) -> Self {
        let mut s = Self::intersection(seed);
        let t_away = s.duration_s * (1.0 - invisible);
        let pos = Vec3::new(0.0, -40.0, 4.0);
        s.camera = vec![
            CameraKey { t: 0.0, position: pos, yaw: 90.0, pitch_down: 5.0 },
            CameraKey { t: t_away - 1.0, position: pos, yaw: 90.0, pitch_down: 5.0 },
            CameraKey { t: t_away, position: pos, yaw: 270.0, pitch_down: 5.0 },
            CameraKey { t: s.duration_s, position: pos, yaw: 270.0, pitch_down: 5.0 },
        ];
        s
    }

    /// Two cars passing each other in opposite lanes in front of a side
    /// camera; their boxes overlap mid-way.
    pub fn crossing(seed: u64) -> Self {
        let mut s = Self::base(seed);
        s.duration_s = 40.0 / s.frame_rate;
        s.roads = vec![
            rect("lane-eb", ConstructType::Lane, -100.0, -7.0, 100.0, 0.0, &[0.0]),
            rect("lane-wb", ConstructType::Lane, -100.0, 0.0, 100.0, 7.0, &[180.0]),
        ];
        let pose = CameraKey { t: 0.0, position: Vec3::new(0.0, -30.0, 4.0), yaw: 90.0, pitch_down: 5.0 };
        s.camera = vec![pose, CameraKey { t: s.duration_s, ..pose }];
        s.agents = vec![
            AgentSpec {
                object_type: "car".into(),
                waypoints: vec![Point2::new(-10.0, -3.5), Point2::new(50.0, -3.5)],
                speed: 6.0,
                start: 0.0,
            },
            AgentSpec {
                object_type: "car".into(),
                waypoints: vec![Point2::new(10.0, 3.5), Point2::new(-50.0, 3.5)],
                speed: 6.0,
                start: 0.0,
            },
        ];
        s
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        Some(match name {
            "intersection" => Self::intersection(seed),
            "straight-lane" => Self::straight_lane(seed),
            "partial-intersection" => Self::partial_intersection(seed, 0.35),
            "crossing" => Self::crossing(seed),
            _ => return None,
        })
    }

    pub const PRESETS: [&'static str; 4] = ["intersection", "straight-lane", "partial-intersection", "crossing"];

    fn camera_at(&self, t: f64) -> CameraKey {
        let keys = &self.camera;
        let i = keys.partition_point(|k| k.t <= t);
        if i == 0 {
            return keys[0];
        }
        if i == keys.len() {
            return keys[keys.len() - 1];
        }
        let (a, b) = (keys[i - 1], keys[i]);
        let f = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        let lerp = |x: f64, y: f64| x + (y - x) * f;
        CameraKey {
            t,
            position: Vec3::new(lerp(a.position.x, b.position.x), lerp(a.position.y, b.position.y), lerp(a.position.z, b.position.z)),
            yaw: lerp(a.yaw, b.yaw),
            pitch_down: lerp(a.pitch_down, b.pitch_down),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// One track per agent with samples at the frames it was detected; bbox
    /// is the noise-free box.
    pub tracks: Vec<MovableObject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub camera: CameraConfig,
    pub roads: RoadNetwork,
    pub detections: DetectionStream,
    pub truth: GroundTruth,
}

/// Projected bbox of an object standing at `foot` facing `heading`, with
/// its bottom center on the footprint pixel.
fn project_box(object_type: &str, foot: Point2, heading: f64, frame: &CameraFrame) -> Option<(BBox, f64)> {
    let (len, wid, hei) = extents(object_type);
    let (fp, depth) = geometry::world_to_pixel(Vec3::new(foot.x, foot.y, 0.0), frame).ok()?;
    let (w, h) = (frame.width as f64, frame.height as f64);
    if !(fp.x > 0.0 && fp.x < w && fp.y > 0.0 && fp.y <= h) {
        return None;
    }
    let u = geometry::unit_heading(heading);
    let n = Point2::new(-u.y, u.x);
    let (mut xmin, mut xmax, mut ymin) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        for z in [0.0, hei] {
            let p = Vec3::new(foot.x + a * u.x * len / 2.0 + b * n.x * wid / 2.0, foot.y + a * u.y * len / 2.0 + b * n.y * wid / 2.0, z);
            let (px, _) = geometry::world_to_pixel(p, frame).ok()?;
            xmin = xmin.min(px.x);
            xmax = xmax.max(px.x);
            ymin = ymin.min(px.y);
        }
    }
    // Centered on the footprint and clipped symmetrically so the bottom
    // center stays put.
    let hw = ((xmax - xmin) / 2.0).min(fp.x).min(w - fp.x).max(0.5f64.min(fp.x).min(w - fp.x));
    let top = ymin.min(fp.y - 1.0).max(0.0);
    let bbox = BBox::new(fp.x - hw, top, fp.x + hw, fp.y);
    bbox.is_valid().then_some((bbox, depth))
}

pub fn camera_frames(spec: &SceneSpec) -> CameraConfig {
    let frames = (0..spec.frames())
        .map(|i| {
            let t = i as f64 / spec.frame_rate;
            let k = spec.camera_at(t);
            CameraFrame {
                frame_index: i,
                translation: k.position,
                rotation: Quaternion::looking(k.yaw, k.pitch_down),
                intrinsic: spec.intrinsic,
                timestamp: spec.start_time + t,
                width: spec.width,
                height: spec.height,
            }
        })
        .collect();
    CameraConfig { camera_id: format!("scene-{}", spec.seed), frames }
}

pub fn generate_scene(spec: &SceneSpec) -> Scene {
    let camera = camera_frames(spec);
    let roads = RoadNetwork::new(spec.roads.clone()).expect("preset construct ids are unique");
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = (spec.pixel_noise > 0.0).then(|| Normal::new(0.0, spec.pixel_noise).expect("finite sigma"));
    let mut detections = DetectionStream::new();
    let mut tracks: Vec<MovableObject> = spec
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| MovableObject { oid: format!("gt{i}"), object_type: a.object_type.clone(), samples: Vec::new() })
        .collect();
    for frame in &camera.frames {
        let t = frame.timestamp - spec.start_time;
        for (i, agent) in spec.agents.iter().enumerate() {
            let Some((foot, heading)) = agent.state_at(t) else { continue };
            let loc = Vec3::new(foot.x, foot.y, 0.0);
            if loc.distance(&frame.translation) > spec.max_range {
                continue;
            }
            let Some((bbox, depth)) = project_box(&agent.object_type, foot, heading, frame) else { continue };
            let mut seen = bbox;
            if let Some(n) = &noise {
                let mut j = || n.sample(&mut noise_rng);
                let noisy = BBox::new(bbox.x1 + j(), bbox.y1 + j(), bbox.x2 + j(), bbox.y2 + j()).clamped(frame.width, frame.height);
                if noisy.is_valid() {
                    seen = noisy;
                }
            }
            detections.push(Detection::new(frame.frame_index, seen, agent.object_type.clone()).with_depth(depth));
            tracks[i].samples.push(ObjectSample { frame_index: frame.frame_index, timestamp: frame.timestamp, bbox, location: Some(loc) });
        }
    }
    Scene { camera, roads, detections, truth: GroundTruth { tracks } }
}

/// Example query: a car or truck within 50 m of the camera, inside an
/// intersection, driving roughly opposite to the camera.
pub fn oncoming_in_intersection() -> (Predicate, usize) {
    let obj = ObjRef(0);
    let int = GeogRef { id: 0, construct_type: ConstructType::Intersection };
    let p = (obj.type_eq("car") | obj.type_eq("truck"))
        & predicate::distance(obj, CamRef).lt(50.0)
        & predicate::contains(&int, &obj)
        & predicate::heading_diff(obj, CamRef, 135.0, 225.0);
    (p, 1)
}

/// World with the scene's inputs and `p` recorded as one filter.
pub fn world_for(scene: &Scene, p: &Predicate, objects: usize) -> World {
    let mut w = World::new();
    for _ in 0..objects {
        w.object();
    }
    w.camera();
    for g in p.geog_vars() {
        w.geog_construct(g.construct_type);
    }
    w.add_geog_constructs(scene.roads.clone()).expect("fresh world");
    w.add_video(scene.camera.clone(), scene.detections.clone(), None).expect("generated detections fit the camera");
    w.filter(p.clone()).expect("predicate uses declared variables");
    w
}

/// Every `(frame, ordered tuple of distinct track ids)` satisfying `p`,
/// by exhaustive enumeration.
pub fn brute_force_matches(
    tracks: &[MovableObject],
    camera: &CameraConfig,
    roads: &RoadNetwork,
    p: &Predicate,
    opts: &EvalOptions,
) -> BTreeSet<(usize, Vec<String>)> {
    let vars: Vec<ObjRef> = p.object_vars().into_iter().collect();
    let k = vars.len().max(1);
    let mut out = BTreeSet::new();
    for frame in &camera.frames {
        let f = frame.frame_index;
        let live: Vec<&MovableObject> = tracks.iter().filter(|t| t.sample_at(f).is_some()).collect();
        for tuple in distinct_tuples(live.len(), k) {
            let bound: Vec<(ObjRef, &MovableObject)> = if vars.is_empty() {
                vec![(ObjRef(0), live[tuple[0]])]
            } else {
                vars.iter().zip(&tuple).map(|(v, &i)| (*v, live[i])).collect()
            };
            let b = Bindings { objects: &bound, camera: frame, roads };
            if let Ok(true) = predicate::evaluate_with(p, &b, f, opts) {
                out.insert((f, bound.iter().map(|(_, o)| o.oid.clone()).collect()));
            }
        }
    }
    out
}

/// All ordered `k`-tuples of distinct indices below `n`.
pub fn distinct_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for head in distinct_tuples(n, k - 1) {
        for i in 0..n {
            if !head.contains(&i) {
                let mut t = head.clone();
                t.push(i);
                out.push(t);
            }
        }
    }
    out
}

/// Frames a plan outputs or drops in agreement with the baseline, over all
/// frames.
pub fn frame_output_accuracy(baseline: &BTreeSet<usize>, plan: &BTreeSet<usize>, total: usize) -> f64 {
    if total == 0 {
        return 1.0;
    }
    let disagree = baseline.symmetric_difference(plan).count();
    (total - disagree) as f64 / total as f64
}

/// Fraction of same-object ground-truth detection pairs that land in the
/// same predicted track. Detections match per frame by maximum IoU
/// assignment with IoU at least 0.5.
pub fn association_accuracy_simple(gt: &[MovableObject], pred: &[MovableObject]) -> f64 {
    let mut frames: BTreeMap<usize, (Vec<(usize, BBox)>, Vec<(usize, BBox)>)> = BTreeMap::new();
    for (i, t) in gt.iter().enumerate() {
        for s in &t.samples {
            frames.entry(s.frame_index).or_default().0.push((i, s.bbox));
        }
    }
    for (j, t) in pred.iter().enumerate() {
        for s in &t.samples {
            frames.entry(s.frame_index).or_default().1.push((j, s.bbox));
        }
    }
    // counts[gt][pred] = matched detections.
    let mut counts: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (g, p) in frames.values() {
        if g.is_empty() || p.is_empty() {
            continue;
        }
        let cost: Vec<Vec<f64>> = g
            .iter()
            .map(|(_, a)| {
                p.iter()
                    .map(|(_, b)| {
                        let iou = a.iou(b);
                        if iou >= 0.5 { 1.0 - iou } else { f64::INFINITY }
                    })
                    .collect()
            })
            .collect();
        for (r, c) in tracker::hungarian(&cost).into_iter().enumerate() {
            if let Some(c) = c {
                *counts.entry(g[r].0).or_default().entry(p[c].0).or_default() += 1;
            }
        }
    }
    let pairs = |n: usize| (n * n.saturating_sub(1) / 2) as u64;
    let total: u64 = gt.iter().map(|t| pairs(t.samples.len())).sum();
    if total == 0 {
        return 1.0;
    }
    let same: u64 = counts.values().flat_map(|m| m.values()).map(|&n| pairs(n)).sum();
    same as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setup {
    SB,
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl Setup {
    pub const ALL: [Setup; 7] = [Setup::SB, Setup::S1, Setup::S2, Setup::S3, Setup::S4, Setup::S5, Setup::S6];

    pub fn toggles(&self) -> OptimizationToggles {
        let none = OptimizationToggles::NONE;
        match self {
            Setup::SB => none,
            Setup::S1 => OptimizationToggles { rvp: true, ..none },
            Setup::S2 => OptimizationToggles { otp: true, ..none },
            Setup::S3 => OptimizationToggles { geo3d: true, ..none },
            Setup::S4 => OptimizationToggles { efs: true, ..none },
            Setup::S5 => OptimizationToggles { efs: false, ..OptimizationToggles::ALL },
            Setup::S6 => OptimizationToggles::ALL,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Setup::SB => "SB",
            Setup::S1 => "S1",
            Setup::S2 => "S2",
            Setup::S3 => "S3",
            Setup::S4 => "S4",
            Setup::S5 => "S5",
            Setup::S6 => "S6",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setup: Setup,
    pub runtime_s: f64,
    pub frames_processed: usize,
    pub detections_processed: usize,
    pub detections_tracked: usize,
    pub frames_pruned: usize,
    pub skipping_ratio: f64,
    pub output_frames: usize,
    pub frame_accuracy: f64,
    pub assoc_vs_baseline: f64,
    pub assoc_vs_truth: f64,
    pub output: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub total_frames: usize,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, setup: Setup) -> &AblationRow {
        self.rows.iter().find(|r| r.setup == setup).expect("every setup runs")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<5} {:>9} {:>8} {:>8} {:>8} {:>7} {:>6} {:>6} {:>7} {:>7} {:>7}",
            "setup", "runtime", "frames", "dets", "tracked", "pruned", "skip", "out", "acc", "assocSB", "assocGT"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<5} {:>8.3}s {:>8} {:>8} {:>8} {:>7} {:>6.3} {:>6} {:>7.4} {:>7.4} {:>7.4}",
                r.setup.name(),
                r.runtime_s,
                r.frames_processed,
                r.detections_processed,
                r.detections_tracked,
                r.frames_pruned,
                r.skipping_ratio,
                r.output_frames,
                r.frame_accuracy,
                r.assoc_vs_baseline,
                r.assoc_vs_truth
            );
        }
        s
    }
}

/// Tracks whose type can satisfy `p`.
fn relevant(tracks: &[MovableObject], p: &Predicate) -> Vec<MovableObject> {
    let types = predicate::relevant_object_types(p);
    tracks.iter().filter(|t| types.as_ref().is_none_or(|s| s.contains(&t.object_type))).cloned().collect()
}

pub fn ablation(scene: &Scene, p: &Predicate, objects: usize, base: &ObserveConfig) -> AblationTable {
    let world = world_for(scene, p, objects);
    let total = scene.camera.len();
    let truth = relevant(&scene.truth.tracks, p);
    let mut rows: Vec<AblationRow> = Vec::new();
    let mut baseline: Option<(BTreeSet<usize>, Vec<MovableObject>)> = None;
    for setup in Setup::ALL {
        let cfg = ObserveConfig { toggles: setup.toggles(), ..base.clone() };
        let start = Instant::now();
        let r = world.get_objects(&cfg).expect("scene world is valid");
        let runtime_s = start.elapsed().as_secs_f64();
        let st = &r.stats[0];
        let output = r.manifest[0].frame_set();
        let tracks = relevant(&r.tracks, p);
        let (base_frames, base_tracks) = baseline.get_or_insert_with(|| (output.clone(), tracks.clone()));
        rows.push(AblationRow {
            setup,
            runtime_s,
            frames_processed: st.frames_processed(),
            detections_processed: st.detections_processed(),
            detections_tracked: st.detections_tracked,
            frames_pruned: st.frames_pruned,
            skipping_ratio: st.skipping_ratio,
            output_frames: output.len(),
            frame_accuracy: frame_output_accuracy(base_frames, &output, total),
            assoc_vs_baseline: association_accuracy_simple(base_tracks, &tracks),
            assoc_vs_truth: association_accuracy_simple(&truth, &tracks),
            output,
        });
    }
    AblationTable { total_frames: total, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator;

    #[test]
    fn straight_lane_has_one_box_per_frame() {
        let scene = generate_scene(&SceneSpec::straight_lane(1));
        assert_eq!(scene.detections.len(), scene.camera.len());
        assert!(scene.camera.frames.iter().all(|f| scene.detections.at(f.frame_index).len() == 1));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_scene(&SceneSpec::intersection(5));
        let b = generate_scene(&SceneSpec::intersection(5));
        assert_eq!(a, b);
        assert_ne!(a.detections, generate_scene(&SceneSpec::intersection(6)).detections);
    }

    #[test]
    fn estimator_inverts_generator() {
        let scene = generate_scene(&SceneSpec::intersection(3));
        for t in &scene.truth.tracks {
            for s in &t.samples {
                let frame = &scene.camera.frames[s.frame_index];
                let got = estimator::ground_point_3d(&s.bbox, frame).unwrap();
                assert!(got.distance(&s.location.unwrap()) < 1e-6);
            }
        }
    }

    #[test]
    fn accuracy_examples() {
        let s = |xs: &[usize]| xs.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(frame_output_accuracy(&s(&[2]), &s(&[2, 3]), 4), 0.75);
        assert_eq!(frame_output_accuracy(&s(&[1, 2]), &s(&[1, 2]), 4), 1.0);
        assert_eq!(frame_output_accuracy(&s(&[0, 1]), &s(&[2, 3]), 4), 0.0);
    }

    fn track(oid: &str, frames: std::ops::Range<usize>) -> MovableObject {
        MovableObject {
            oid: oid.into(),
            object_type: "car".into(),
            samples: frames
                .map(|f| ObjectSample { frame_index: f, timestamp: f as f64, bbox: BBox::new(0.0, 0.0, 10.0, 10.0), location: None })
                .collect(),
        }
    }

    #[test]
    fn association_examples() {
        let gt = vec![track("a", 0..8)];
        assert_eq!(association_accuracy_simple(&gt, &gt), 1.0);
        let singles: Vec<MovableObject> = (0..8).map(|f| track(&format!("p{f}"), f..f + 1)).collect();
        assert_eq!(association_accuracy_simple(&gt, &singles), 0.0);
        let halves = vec![track("p", 0..4), track("q", 4..8)];
        assert!((association_accuracy_simple(&gt, &halves) - 12.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn agent_path() {
        let a = AgentSpec {
            object_type: "car".into(),
            waypoints: vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(10.0, 10.0)],
            speed: 2.0,
            start: 1.0,
        };
        assert_eq!(a.state_at(0.5), None);
        assert_eq!(a.state_at(3.5), Some((Point2::new(5.0, 0.0), 0.0)));
        assert_eq!(a.state_at(8.5), Some((Point2::new(10.0, 5.0), 90.0)));
        assert_eq!(a.state_at(20.0), None);
    }
}
