//! World data model: cameras, geographic constructs, detections and movable
//! objects.
//!
//! Everything here is passive data. Types are immutable once built and can be
//! shared freely across per-video workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point2, Polygon2D};

/// A point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    /// Ground-plane projection (drops z).
    pub fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub(crate) fn to_na(self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, self.z)
    }

    pub(crate) fn from_na(v: &nalgebra::Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// Rotation quaternion in Hamilton convention, mapping camera coordinates to
/// world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Returns the unit quaternion, or `None` for a zero or non-finite input.
    /// Inputs already unit to rounding are returned unchanged.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Some(*self);
        }
        Some(Self::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    /// Camera-to-world rotation whose columns are the camera's right, down and
    /// forward axes expressed in world coordinates.
    pub fn from_camera_axes(right: Vec3, down: Vec3, forward: Vec3) -> Self {
        let m = nalgebra::Matrix3::from_columns(&[right.to_na(), down.to_na(), forward.to_na()]);
        let rot = nalgebra::Rotation3::from_matrix(&m);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
        Self::new(q.w, q.i, q.j, q.k)
    }

    /// Camera looking along `yaw_deg` (counterclockwise from east) and pitched
    /// down by `pitch_down_deg`, with no roll.
    pub fn looking(yaw_deg: f64, pitch_down_deg: f64) -> Self {
        let (yaw, pitch) = (yaw_deg.to_radians(), pitch_down_deg.to_radians());
        let forward = Vec3::new(yaw.cos() * pitch.cos(), yaw.sin() * pitch.cos(), -pitch.sin());
        let right = Vec3::new(yaw.sin(), -yaw.cos(), 0.0);
        // down = forward x right
        let down = Vec3::new(
            forward.y * right.z - forward.z * right.y,
            forward.z * right.x - forward.x * right.z,
            forward.x * right.y - forward.y * right.x,
        );
        Self::from_camera_axes(right, down, forward)
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsic {
    pub fx: f64,
    pub fy: f64,
    /// Skew coefficient.
    pub s: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Intrinsic {
    pub const fn new(fx: f64, fy: f64, s: f64, x0: f64, y0: f64) -> Self {
        Self { fx, fy, s, x0, y0 }
    }

    pub fn is_valid(&self) -> bool {
        self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.s.is_finite()
            && self.x0.is_finite()
            && self.y0.is_finite()
    }

    /// Row-major 3x3 matrix `[[fx, s, x0], [0, fy, y0], [0, 0, 1]]`.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [[self.fx, self.s, self.x0], [0.0, self.fy, self.y0], [0.0, 0.0, 1.0]]
    }
}

/// One camera pose paired with one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub frame_index: usize,
    pub translation: Vec3,
    pub rotation: Quaternion,
    pub intrinsic: Intrinsic,
    /// Epoch seconds.
    pub timestamp: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub camera_id: String,
    pub frames: Vec<CameraFrame>,
}

impl CameraConfig {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, index: usize) -> Option<&CameraFrame> {
        self.frames.get(index)
    }

    /// Last frame whose timestamp is strictly before `t`.
    pub fn last_frame_before(&self, t: f64) -> Option<usize> {
        let n = self.frames.partition_point(|f| f.timestamp < t);
        n.checked_sub(1)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let who = || format!("camera {}", self.camera_id);
        if self.frames.is_empty() {
            out.push(Violation::new(who(), "camera has no frames"));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.frame_index != i {
                out.push(Violation::new(
                    who(),
                    format!("frame_index {} at position {i} is not contiguous from 0", f.frame_index),
                ));
            }
            if f.width == 0 || f.height == 0 {
                out.push(Violation::new(who(), format!("frame {i} has zero width or height")));
            }
            if !f.intrinsic.is_valid() {
                out.push(Violation::new(who(), format!("frame {i} intrinsic has non-positive focal length")));
            }
            if !f.translation.is_finite() || !f.timestamp.is_finite() {
                out.push(Violation::new(who(), format!("frame {i} has non-finite pose or timestamp")));
            }
            if (f.rotation.norm() - 1.0).abs() > 1e-9 {
                out.push(Violation::new(who(), format!("frame {i} rotation is not a unit quaternion")));
            }
        }
        for (i, w) in self.frames.windows(2).enumerate() {
            if !(w[1].timestamp > w[0].timestamp) {
                out.push(Violation::new(
                    who(),
                    format!("timestamps not strictly increasing at frame {}", i + 1),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructType {
    Lane,
    Intersection,
    #[serde(rename = "roadsection")]
    RoadSection,
    #[serde(rename = "lanegroup")]
    LaneGroup,
}

impl ConstructType {
    pub const ALL: [ConstructType; 4] =
        [ConstructType::Lane, ConstructType::Intersection, ConstructType::RoadSection, ConstructType::LaneGroup];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConstructType::Lane => "lane",
            ConstructType::Intersection => "intersection",
            ConstructType::RoadSection => "roadsection",
            ConstructType::LaneGroup => "lanegroup",
        }
    }
}

impl fmt::Display for ConstructType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConstructType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lane" => Ok(ConstructType::Lane),
            "intersection" => Ok(ConstructType::Intersection),
            "roadsection" => Ok(ConstructType::RoadSection),
            "lanegroup" => Ok(ConstructType::LaneGroup),
            other => Err(format!("unknown construct type '{other}'")),
        }
    }
}

/// A typed ground-plane polygon with optional traffic headings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeographicConstruct {
    pub id: String,
    pub construct_type: ConstructType,
    pub polygon: Polygon2D,
    /// Degrees counterclockwise from east, in `[0, 360)`.
    pub headings: Vec<f64>,
}

impl GeographicConstruct {
    /// Builds a construct, normalizing the polygon to counterclockwise order and
    /// headings into `[0, 360)`. Invariants are checked by [`Self::violations`].
    pub fn new(
        id: impl Into<String>,
        construct_type: ConstructType,
        vertices: Vec<Point2>,
        headings: Vec<f64>,
    ) -> Self {
        let mut polygon = Polygon2D::new(vertices);
        if polygon.signed_area() < 0.0 {
            polygon.vertices.reverse();
        }
        Self {
            id: id.into(),
            construct_type,
            polygon,
            headings: headings.into_iter().map(geometry::normalize_degrees).collect(),
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let who = || format!("construct {}", self.id);
        let mut out = Vec::new();
        let v = &self.polygon.vertices;
        if v.len() < 3 {
            out.push(Violation::new(who(), "polygon has < 3 vertices"));
            return out;
        }
        if v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            out.push(Violation::new(who(), "polygon has non-finite vertices"));
        } else if !self.polygon.is_simple() {
            out.push(Violation::new(who(), "polygon is not simple"));
        }
        if self.headings.iter().any(|h| !(0.0..360.0).contains(h)) {
            out.push(Violation::new(who(), "heading outside [0, 360)"));
        }
        out
    }
}

/// Uniform grid over construct bounding boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridIndex {
    origin: Point2,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl GridIndex {
    /// Cell size is the median bounding-box diagonal of the inputs.
    pub fn build(boxes: &[(Point2, Point2)]) -> Self {
        if boxes.is_empty() {
            return Self { origin: Point2::new(0.0, 0.0), cell: 1.0, cols: 0, rows: 0, cells: Vec::new() };
        }
        let mut diagonals: Vec<f64> =
            boxes.iter().map(|(lo, hi)| ((hi.x - lo.x).powi(2) + (hi.y - lo.y).powi(2)).sqrt()).collect();
        diagonals.sort_by(f64::total_cmp);
        let mut cell = diagonals[diagonals.len() / 2];
        if !(cell > 0.0) || !cell.is_finite() {
            cell = 1.0;
        }
        let min_x = boxes.iter().map(|b| b.0.x).fold(f64::INFINITY, f64::min);
        let min_y = boxes.iter().map(|b| b.0.y).fold(f64::INFINITY, f64::min);
        let max_x = boxes.iter().map(|b| b.1.x).fold(f64::NEG_INFINITY, f64::max);
        let max_y = boxes.iter().map(|b| b.1.y).fold(f64::NEG_INFINITY, f64::max);
        // Keep the grid bounded for pathological inputs.
        let span = (max_x - min_x).max(max_y - min_y);
        if span / cell > 4096.0 {
            cell = span / 4096.0;
        }
        let cols = ((max_x - min_x) / cell).floor() as usize + 1;
        let rows = ((max_y - min_y) / cell).floor() as usize + 1;
        let mut index = Self { origin: Point2::new(min_x, min_y), cell, cols, rows, cells: vec![Vec::new(); cols * rows] };
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            let (c0, r0) = index.cell_of(*lo);
            let (c1, r1) = index.cell_of(*hi);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    index.cells[r * cols + c].push(i);
                }
            }
        }
        index
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let c = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        let r = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        (c, r)
    }

    /// Indices whose bounding boxes may intersect the query rectangle.
    pub fn query(&self, lo: Point2, hi: Point2) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if self.cells.is_empty() {
            return out;
        }
        let max = Point2::new(
            self.origin.x + self.cell * self.cols as f64,
            self.origin.y + self.cell * self.rows as f64,
        );
        if hi.x < self.origin.x || hi.y < self.origin.y || lo.x > max.x || lo.y > max.y {
            return out;
        }
        let (c0, r0) = self.cell_of(lo);
        let (c1, r1) = self.cell_of(hi);
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend(self.cells[r * self.cols + c].iter().copied());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoadNetworkError {
    #[error("duplicate construct id '{0}'")]
    DuplicateConstructId(String),
}

/// A collection of geographic constructs with a spatial index.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    constructs: Vec<GeographicConstruct>,
    bounds: Vec<(Point2, Point2)>,
    index: GridIndex,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self::new(Vec::new()).expect("empty network has no duplicates")
    }
}

impl RoadNetwork {
    pub fn new(constructs: Vec<GeographicConstruct>) -> Result<Self, RoadNetworkError> {
        let mut seen = BTreeSet::new();
        for c in &constructs {
            if !seen.insert(c.id.clone()) {
                return Err(RoadNetworkError::DuplicateConstructId(c.id.clone()));
            }
        }
        let bounds: Vec<_> = constructs.iter().map(|c| c.polygon.bounds()).collect();
        let index = GridIndex::build(&bounds);
        Ok(Self { constructs, bounds, index })
    }

    pub fn constructs(&self) -> &[GeographicConstruct] {
        &self.constructs
    }

    pub fn len(&self) -> usize {
        self.constructs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&GeographicConstruct> {
        self.constructs.iter().find(|c| c.id == id)
    }

    pub fn types_present(&self) -> BTreeSet<ConstructType> {
        self.constructs.iter().map(|c| c.construct_type).collect()
    }

    /// Constructs whose bounding boxes intersect the rectangle; a superset of
    /// the constructs whose polygons intersect it.
    pub fn candidates(&self, lo: Point2, hi: Point2) -> impl Iterator<Item = &GeographicConstruct> {
        self.index
            .query(lo, hi)
            .into_iter()
            .filter(move |&i| {
                let (blo, bhi) = self.bounds[i];
                !(bhi.x < lo.x || bhi.y < lo.y || blo.x > hi.x || blo.y > hi.y)
            })
            .map(move |i| &self.constructs[i])
    }

    /// Constructs of the given type containing the point (boundary included).
    pub fn containing(&self, p: Point2, ty: Option<ConstructType>) -> impl Iterator<Item = &GeographicConstruct> {
        self.candidates(p, p).filter(move |c| {
            ty.is_none_or(|t| c.construct_type == t) && geometry::point_in_polygon(p, &c.polygon)
        })
    }

    pub fn any_contains(&self, ty: ConstructType, p: Point2) -> bool {
        self.containing(p, Some(ty)).next().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn is_valid(&self) -> bool {
        [self.x1, self.y1, self.x2, self.y2].iter().all(|v| v.is_finite()) && self.x1 < self.x2 && self.y1 < self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// Middle of the lower border: where a grounded object touches the ground.
    pub fn bottom_center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, self.y2)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn clamped(&self, width: u32, height: u32) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self::new(self.x1.clamp(0.0, w), self.y1.clamp(0.0, h), self.x2.clamp(0.0, w), self.y2.clamp(0.0, h))
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let iy = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn lerp(&self, other: &BBox, t: f64) -> Self {
        let l = |a: f64, b: f64| a + (b - a) * t;
        Self::new(l(self.x1, other.x1), l(self.y1, other.y1), l(self.x2, other.x2), l(self.y2, other.y2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: usize,
    pub bbox: BBox,
    pub class_label: String,
    pub confidence: f64,
    /// Camera-frame depth in meters from an external depth source.
    pub depth_hint: Option<f64>,
}

impl Detection {
    pub fn new(frame_index: usize, bbox: BBox, class_label: impl Into<String>) -> Self {
        Self { frame_index, bbox, class_label: class_label.into(), confidence: 1.0, depth_hint: None }
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth_hint = Some(depth);
        self
    }
}

/// Per-video detections grouped by frame, in file order within a frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionStream {
    frames: BTreeMap<usize, Vec<Detection>>,
}

impl DetectionStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, det: Detection) {
        self.frames.entry(det.frame_index).or_default().push(det);
    }

    pub fn at(&self, frame_index: usize) -> &[Detection] {
        self.frames.get(&frame_index).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn frame_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.frames.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Detection> {
        self.frames.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromIterator<Detection> for DetectionStream {
    fn from_iter<I: IntoIterator<Item = Detection>>(iter: I) -> Self {
        let mut s = Self::new();
        for d in iter {
            s.push(d);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSample {
    pub frame_index: usize,
    pub timestamp: f64,
    pub bbox: BBox,
    /// World location; absent when the plan did not estimate 3D locations.
    pub location: Option<Vec3>,
}

/// An object identity and its time-ordered samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovableObject {
    pub oid: String,
    pub object_type: String,
    pub samples: Vec<ObjectSample>,
}

impl MovableObject {
    pub fn sample_at(&self, frame_index: usize) -> Option<&ObjectSample> {
        self.samples
            .binary_search_by_key(&frame_index, |s| s.frame_index)
            .ok()
            .map(|i| &self.samples[i])
    }

    pub fn sample_position(&self, frame_index: usize) -> Option<usize> {
        self.samples.binary_search_by_key(&frame_index, |s| s.frame_index).ok()
    }

    pub fn is_ordered(&self) -> bool {
        self.samples.windows(2).all(|w| w[0].frame_index < w[1].frame_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self { subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn detection_violations(det: &Detection, frame: Option<&CameraFrame>) -> Vec<Violation> {
    let who = || format!("detection at frame {}", det.frame_index);
    let mut out = Vec::new();
    if !det.bbox.is_valid() {
        out.push(Violation::new(who(), "bbox requires x1 < x2 and y1 < y2"));
    } else if let Some(f) = frame {
        if !det.bbox.clamped(f.width, f.height).is_valid() {
            out.push(Violation::new(who(), "bbox lies outside the frame"));
        }
    }
    if !(0.0..=1.0).contains(&det.confidence) {
        out.push(Violation::new(who(), "confidence outside [0, 1]"));
    }
    if let Some(d) = det.depth_hint {
        if !(d.is_finite() && d > 0.0) {
            out.push(Violation::new(who(), "depth hint must be positive"));
        }
    }
    out
}

/// Checks every model invariant; the report is empty iff all hold.
pub fn validate_world(
    roads: &RoadNetwork,
    cameras: &[CameraConfig],
    detections: &[DetectionStream],
) -> ValidationReport {
    let mut violations = Vec::new();
    for c in roads.constructs() {
        violations.extend(c.violations());
    }
    for cam in cameras {
        violations.extend(cam.violations());
    }
    for (vi, stream) in detections.iter().enumerate() {
        let cam = cameras.get(vi);
        for det in stream.iter() {
            let frame = cam.and_then(|c| c.frame(det.frame_index));
            if cam.is_some() && frame.is_none() {
                violations.push(Violation::new(
                    format!("detection at frame {}", det.frame_index),
                    "frame index not present in camera",
                ));
            }
            violations.extend(detection_violations(det, frame));
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, ty: ConstructType, x: f64, y: f64, s: f64) -> GeographicConstruct {
        GeographicConstruct::new(
            id,
            ty,
            vec![Point2::new(x, y), Point2::new(x + s, y), Point2::new(x + s, y + s), Point2::new(x, y + s)],
            vec![],
        )
    }

    fn frame(i: usize, t: f64) -> CameraFrame {
        CameraFrame {
            frame_index: i,
            translation: Vec3::default(),
            rotation: Quaternion::IDENTITY,
            intrinsic: Intrinsic::new(1.0, 1.0, 0.0, 0.0, 0.0),
            timestamp: t,
            width: 2,
            height: 2,
        }
    }

    #[test]
    fn well_formed_world_has_empty_report() {
        let rn = RoadNetwork::new(vec![square("a", ConstructType::Lane, 0.0, 0.0, 1.0)]).unwrap();
        let cam = CameraConfig { camera_id: "c".into(), frames: vec![frame(0, 0.0), frame(1, 0.1)] };
        let dets: DetectionStream = [Detection::new(1, BBox::new(0.0, 0.0, 1.0, 1.0), "car")].into_iter().collect();
        assert!(validate_world(&rn, &[cam], &[dets]).is_empty());
    }

    #[test]
    fn two_vertex_polygon_is_reported() {
        let c = GeographicConstruct::new("a", ConstructType::Lane, vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)], vec![]);
        let rn = RoadNetwork::new(vec![c]).unwrap();
        let report = validate_world(&rn, &[], &[]);
        assert!(report.contains("polygon has < 3 vertices"), "{report}");
    }

    #[test]
    fn repeated_timestamps_are_reported() {
        let cam = CameraConfig { camera_id: "c".into(), frames: vec![frame(0, 0.0), frame(1, 0.0)] };
        let report = validate_world(&RoadNetwork::default(), &[cam], &[]);
        assert!(report.contains("timestamps not strictly increasing"), "{report}");
    }

    #[test]
    fn bowtie_is_not_simple() {
        let c = GeographicConstruct::new(
            "b",
            ConstructType::Intersection,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![],
        );
        assert!(c.violations().iter().any(|v| v.message.contains("not simple")));
    }

    #[test]
    fn clockwise_polygons_are_reoriented_and_headings_wrapped() {
        let c = GeographicConstruct::new(
            "cw",
            ConstructType::Lane,
            vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0)],
            vec![-90.0, 720.0],
        );
        assert!(c.polygon.signed_area() > 0.0);
        assert_eq!(c.headings, vec![270.0, 0.0]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = square("x", ConstructType::Lane, 0.0, 0.0, 1.0);
        let b = square("x", ConstructType::Intersection, 5.0, 5.0, 1.0);
        assert_eq!(RoadNetwork::new(vec![a, b]), Err(RoadNetworkError::DuplicateConstructId("x".into())));
    }

    #[test]
    fn last_frame_before_is_strict() {
        let cam = CameraConfig { camera_id: "c".into(), frames: (0..5).map(|i| frame(i, i as f64)).collect() };
        assert_eq!(cam.last_frame_before(2.0), Some(1));
        assert_eq!(cam.last_frame_before(2.5), Some(2));
        assert_eq!(cam.last_frame_before(0.0), None);
        assert_eq!(cam.last_frame_before(99.0), Some(4));
    }

    #[test]
    fn iou_basics() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&BBox::new(2.0, 0.0, 4.0, 2.0)), 0.0);
        assert!((a.iou(&BBox::new(1.0, 0.0, 3.0, 2.0)) - 1.0 / 3.0).abs() < 1e-12);
    }
}
