//! Exit Frame Sampler: picks the next frame that needs data association.
//!
//! Vehicles drive straight along their lane at the speed limit, so between
//! sample events nothing changes that the tracker could not bridge. The three
//! events are a car leaving its lane, a car leaving the camera view, and a new
//! car appearing.

use serde::{Deserialize, Serialize};

use crate::geometry::{self, normalize_degrees, unit_heading, Point2, Polygon2D};
use crate::model::{CameraConfig, ConstructType, GeographicConstruct, RoadNetwork, Vec3};

/// 25 mph.
pub const DEFAULT_SPEED_MPS: f64 = 11.176;
pub const DEFAULT_MAX_SKIP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub speed_mps: f64,
    /// `None` disables the clamp.
    pub max_skip: Option<usize>,
    pub frustum_depth: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { speed_mps: DEFAULT_SPEED_MPS, max_skip: Some(DEFAULT_MAX_SKIP), frustum_depth: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("lane has no direction")]
    NoHeading,
    #[error("car is not inside the lane")]
    OutsideLane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionTuple {
    pub location: Point2,
    pub direction: f64,
}

impl MotionTuple {
    pub fn new(location: Point2, direction: f64) -> Self {
        Self { location, direction: normalize_degrees(direction) }
    }

    pub fn moved(&self, speed: f64, dt: f64) -> Point2 {
        let u = unit_heading(self.direction);
        Point2::new(self.location.x + u.x * speed * dt, self.location.y + u.y * speed * dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneExit {
    pub exit_point: Point2,
    pub direction: f64,
    pub distance: f64,
    pub exit_time: f64,
    /// Last frame taken strictly before `exit_time`, never before the
    /// current frame.
    pub frame: usize,
}

/// Lane heading whose exit ray is shortest, with its exit point.
fn shortest_exit(origin: Point2, lane: &GeographicConstruct) -> Result<(f64, Point2), SampleError> {
    if lane.headings.is_empty() {
        return Err(SampleError::NoHeading);
    }
    if !geometry::point_in_polygon(origin, &lane.polygon) {
        return Err(SampleError::OutsideLane);
    }
    let mut best: Option<(f64, Point2, f64)> = None;
    for &h in &lane.headings {
        let exit = geometry::polygon_ray_exit(origin, h, &lane.polygon).map_err(|_| SampleError::OutsideLane)?;
        let dist = exit.distance(&origin);
        if best.is_none_or(|(_, _, d)| dist < d) {
            best = Some((h, exit, dist));
        }
    }
    let (h, exit, _) = best.expect("at least one heading");
    Ok((h, exit))
}

pub fn lane_exit(current: usize, car_loc: Vec3, lane: &GeographicConstruct, v: f64, cameras: &CameraConfig) -> Result<LaneExit, SampleError> {
    let origin = car_loc.xy();
    let (direction, exit_point) = shortest_exit(origin, lane)?;
    let distance = exit_point.distance(&origin);
    let now = cameras.frames[current].timestamp;
    let exit_time = now + distance / v;
    let frame = cameras.last_frame_before(exit_time).unwrap_or(current).max(current);
    Ok(LaneExit { exit_point, direction, distance, exit_time, frame })
}

pub fn exits_lane(current: usize, car_loc: Vec3, lane: &GeographicConstruct, v: f64, cameras: &CameraConfig) -> Result<usize, SampleError> {
    lane_exit(current, car_loc, lane, v, cameras).map(|e| e.frame)
}

/// Per-frame viewable areas at a fixed depth; degenerate views are `None`.
#[derive(Debug, Clone)]
pub struct Views {
    views: Vec<Option<Polygon2D>>,
}

impl Views {
    pub fn new(cameras: &CameraConfig, d: f64) -> Self {
        Self { views: cameras.frames.iter().map(|f| geometry::viewable_area(f, d).ok()).collect() }
    }

    pub fn get(&self, frame: usize) -> Option<&Polygon2D> {
        self.views.get(frame)?.as_ref()
    }

    pub fn contains(&self, frame: usize, p: Point2) -> bool {
        self.get(frame).is_some_and(|v| geometry::point_in_polygon(p, v))
    }
}

/// Frame before the first one whose view misses the car's predicted
/// position, or the last frame if the car stays in view.
pub fn exits_camera(
    current: usize,
    car_loc: Vec3,
    lane: &GeographicConstruct,
    v: f64,
    cameras: &CameraConfig,
    views: &Views,
) -> Result<usize, SampleError> {
    let (direction, _) = shortest_exit(car_loc.xy(), lane)?;
    let motion = MotionTuple::new(car_loc.xy(), direction);
    let t0 = cameras.frames[current].timestamp;
    for next in current + 1..cameras.len() {
        let p = motion.moved(v, cameras.frames[next].timestamp - t0);
        if !views.contains(next, p) {
            return Ok(next - 1);
        }
    }
    Ok(cameras.len().saturating_sub(1))
}

/// First position after `current` with strictly more cars, or the last one.
pub fn new_car(current: usize, counts: &[usize]) -> usize {
    let now = counts[current];
    (current + 1..counts.len()).find(|&i| counts[i] > now).unwrap_or(counts.len().saturating_sub(1).max(current))
}

/// Lane used to extrapolate a car: the smallest containing lane, ties by id.
pub fn lane_of(roads: &RoadNetwork, p: Point2) -> Option<&GeographicConstruct> {
    roads
        .containing(p, Some(ConstructType::Lane))
        .min_by(|a, b| a.polygon.area().total_cmp(&b.polygon.area()).then_with(|| a.id.cmp(&b.id)))
}

/// Frame a single car allows skipping to, or `None` when it forbids skipping.
pub fn car_event(current: usize, car_loc: Vec3, roads: &RoadNetwork, cameras: &CameraConfig, views: &Views, v: f64) -> Option<usize> {
    let p = car_loc.xy();
    if roads.any_contains(ConstructType::Intersection, p) {
        return None;
    }
    let lane = lane_of(roads, p)?;
    let a = exits_lane(current, car_loc, lane, v, cameras).ok()?;
    let b = exits_camera(current, car_loc, lane, v, cameras, views).ok()?;
    Some(a.min(b))
}

/// What the sampler sees at one candidate frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameCars {
    /// Relevant-type detections, located or not.
    pub count: usize,
    /// Locations of the detections the estimator could place.
    pub locations: Vec<Vec3>,
}

/// Samples frames from `available` (ascending frame indices). `count_at`
/// gives the relevant detection count at a frame without estimation;
/// `cars_at` locates them and is only called on sampled frames.
pub fn sample_frames(
    available: &[usize],
    cameras: &CameraConfig,
    roads: &RoadNetwork,
    cfg: &SamplerConfig,
    count_at: impl Fn(usize) -> usize,
    mut cars_at: impl FnMut(usize) -> FrameCars,
) -> Vec<usize> {
    if available.is_empty() {
        return Vec::new();
    }
    let views = Views::new(cameras, cfg.frustum_depth);
    let counts: Vec<usize> = available.iter().map(|&f| count_at(f)).collect();
    let last = available.len() - 1;
    let mut out = vec![available[0]];
    let mut pos = 0;
    while pos < last {
        let frame = available[pos];
        let cars = cars_at(frame);
        let mut next = pos + 1;
        if cars.count > 0 && cars.locations.len() == cars.count {
            let mut target = frame_to_pos(available, new_car_frame(pos, &counts, available));
            for loc in &cars.locations {
                match car_event(frame, *loc, roads, cameras, &views, cfg.speed_mps) {
                    Some(f) => target = target.min(frame_to_pos(available, f)),
                    None => target = pos,
                }
            }
            next = target.max(pos + 1);
        }
        if let Some(max) = cfg.max_skip {
            next = next.min(pos + max.max(1));
        }
        pos = next.min(last);
        out.push(available[pos]);
    }
    out
}

fn new_car_frame(pos: usize, counts: &[usize], available: &[usize]) -> usize {
    available[new_car(pos, counts)]
}

/// Last available position at or before frame `f`.
fn frame_to_pos(available: &[usize], f: usize) -> usize {
    available.partition_point(|&a| a <= f).saturating_sub(1)
}

/// Frames skipped over total frames.
pub fn skipping_ratio(sampled: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        1.0 - sampled as f64 / total as f64
    }
}
