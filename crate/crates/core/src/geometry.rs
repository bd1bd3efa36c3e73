//! Camera projection and planar geometry.
//!
//! Conventions: camera axes are x right, y down, z forward. A frame's rotation
//! maps camera coordinates to world coordinates, so `world = R * cam + t`.
//! Pixels have their origin at the top-left corner. The ground is the world
//! plane `z = 0` and every construct polygon lives on it.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::model::{CameraFrame, Intrinsic, Quaternion, Vec3};

/// Absolute tolerance (meters) for boundary membership tests.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("point is behind the camera (camera-frame z = {0})")]
    BehindCamera(f64),
    #[error("viewable area is degenerate (collinear points)")]
    DegenerateView,
    #[error("ray origin lies outside the polygon")]
    OriginOutside,
    #[error("camera forward axis is vertical")]
    VerticalCamera,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Orientation of `c` relative to the directed line `a -> b`.
fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    cross(b.sub(a), c.sub(a))
}

/// Whether `p` lies on segment `a-b` within [`BOUNDARY_EPS`].
pub fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b.sub(a);
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.distance(&a) <= BOUNDARY_EPS;
    }
    let t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
    let t = t.clamp(0.0, 1.0);
    let q = Point2::new(a.x + t * ab.x, a.y + t * ab.y);
    p.distance(&q) <= BOUNDARY_EPS
}

/// Closed-segment intersection test, touching included.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// Ordered polygon vertices on the ground plane; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon2D {
    pub vertices: Vec<Point2>,
}

impl Polygon2D {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive for counterclockwise order.
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// O(n^2) check that no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                    if n > 3 && (on_segment(other_j, a, b) || on_segment(other_i, c, d)) {
                        return false;
                    }
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        self.area() > 0.0
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut sign = 0.0;
        for i in 0..n {
            let o = orient(self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]);
            if o != 0.0 {
                if sign != 0.0 && o.signum() != sign {
                    return false;
                }
                sign = o.signum();
            }
        }
        sign != 0.0
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(p, self)
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub x: f64,
    pub y: f64,
}

impl Pixel {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Hamilton-convention rotation matrix of a (normalized) quaternion.
pub fn rotation_matrix(q: &Quaternion) -> Matrix3<f64> {
    let q = q.normalized().unwrap_or(Quaternion::IDENTITY);
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn intrinsic_matrix(k: &Intrinsic) -> Matrix3<f64> {
    Matrix3::new(k.fx, k.s, k.x0, 0.0, k.fy, k.y0, 0.0, 0.0, 1.0)
}

/// Closed-form inverse of the upper-triangular intrinsic matrix.
pub fn intrinsic_inverse(k: &Intrinsic) -> Matrix3<f64> {
    let fxfy = k.fx * k.fy;
    Matrix3::new(
        1.0 / k.fx,
        -k.s / fxfy,
        (k.s * k.y0 - k.fy * k.x0) / fxfy,
        0.0,
        1.0 / k.fy,
        -k.y0 / k.fy,
        0.0,
        0.0,
        1.0,
    )
}

/// The homogeneous pixel-to-camera matrix `C`, acting on
/// `[x_p * z_c, y_p * z_c, z_c, 1]`.
pub fn pixel_to_camera_matrix(k: &Intrinsic) -> Matrix4<f64> {
    let inv = intrinsic_inverse(k);
    let mut c = Matrix4::identity();
    c.fixed_view_mut::<3, 3>(0, 0).copy_from(&inv);
    c
}

/// The camera-to-world extrinsic `[R | t]`.
pub fn extrinsic(frame: &CameraFrame) -> Matrix3x4<f64> {
    let mut m = Matrix3x4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation_matrix(&frame.rotation));
    m.set_column(3, &frame.translation.to_na());
    m
}

/// Back-projects a pixel at camera-frame depth `depth` into world coordinates.
pub fn pixel_to_world(pixel: Pixel, depth: f64, frame: &CameraFrame) -> Result<Vec3, GeometryError> {
    if !(depth > 0.0) {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    let h = Vector4::new(pixel.x * depth, pixel.y * depth, depth, 1.0);
    let w = extrinsic(frame) * pixel_to_camera_matrix(&frame.intrinsic) * h;
    Ok(Vec3::from_na(&w))
}

/// World point expressed in the camera frame.
pub fn world_to_camera(point: Vec3, frame: &CameraFrame) -> Vec3 {
    let r = rotation_matrix(&frame.rotation);
    Vec3::from_na(&(r.transpose() * (point.to_na() - frame.translation.to_na())))
}

/// Projects a world point to a pixel, returning the pixel and its camera-frame depth.
pub fn world_to_pixel(point: Vec3, frame: &CameraFrame) -> Result<(Pixel, f64), GeometryError> {
    let cam = world_to_camera(point, frame);
    if cam.z <= 1e-12 {
        return Err(GeometryError::BehindCamera(cam.z));
    }
    let p = intrinsic_matrix(&frame.intrinsic) * Vector3::new(cam.x, cam.y, cam.z) / cam.z;
    Ok((Pixel::new(p.x, p.y), cam.z))
}

/// World positions of the top-left, top-right, bottom-right and bottom-left
/// frame corners at depth `d`, evaluated as one matrix product.
pub fn frame_corners_world(frame: &CameraFrame, d: f64) -> Result<[Vec3; 4], GeometryError> {
    if !(d > 0.0) {
        return Err(GeometryError::NonPositiveDepth(d));
    }
    let (w, h) = (frame.width as f64, frame.height as f64);
    #[rustfmt::skip]
    let corners = Matrix4::new(
        0.0, w * d, w * d, 0.0,
        0.0, 0.0,   h * d, h * d,
        d,   d,     d,     d,
        1.0, 1.0,   1.0,   1.0,
    );
    let world = extrinsic(frame) * pixel_to_camera_matrix(&frame.intrinsic) * corners;
    let col = |i: usize| Vec3::new(world[(0, i)], world[(1, i)], world[(2, i)]);
    Ok([col(0), col(1), col(2), col(3)])
}

/// Convex hull (Andrew's monotone chain), counterclockwise, collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Result<Polygon2D, GeometryError> {
    let mut pts: Vec<Point2> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateView);
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let poly = Polygon2D::new(hull);
    let (lo, hi) = poly.bounds();
    let scale = (hi.x - lo.x).max(hi.y - lo.y);
    if poly.vertices.len() < 3 || poly.area() <= 1e-12 * scale * scale {
        return Err(GeometryError::DegenerateView);
    }
    Ok(poly)
}

/// Top-down viewable area: hull of the camera position and the four frame
/// corners at depth `d`, all projected onto the ground. Corners above the
/// horizon are projected as they are, without clipping.
pub fn viewable_area(frame: &CameraFrame, d: f64) -> Result<Polygon2D, GeometryError> {
    let corners = frame_corners_world(frame, d)?;
    let mut pts = vec![frame.translation.xy()];
    pts.extend(corners.iter().map(Vec3::xy));
    convex_hull(&pts)
}

/// Point-in-polygon by crossing number; boundary points count as inside.
pub fn point_in_polygon(p: Point2, poly: &Polygon2D) -> bool {
    if poly.vertices.len() < 3 {
        return false;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Overlap of two simple polygons, boundary contact included.
pub fn polygons_overlap(a: &Polygon2D, b: &Polygon2D) -> bool {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let e = BOUNDARY_EPS;
    if ahi.x + e < blo.x || bhi.x + e < alo.x || ahi.y + e < blo.y || bhi.y + e < alo.y {
        return false;
    }
    if a.vertices.iter().any(|&v| point_in_polygon(v, b)) || b.vertices.iter().any(|&v| point_in_polygon(v, a)) {
        return true;
    }
    a.edges().any(|(p, q)| b.edges().any(|(r, s)| segments_intersect(p, q, r, s)))
}

pub fn unit_heading(deg: f64) -> Point2 {
    let r = deg.to_radians();
    Point2::new(r.cos(), r.sin())
}

/// Where the ray from `origin` along `heading_deg` first leaves the polygon.
pub fn polygon_ray_exit(origin: Point2, heading_deg: f64, poly: &Polygon2D) -> Result<Point2, GeometryError> {
    if !point_in_polygon(origin, poly) {
        return Err(GeometryError::OriginOutside);
    }
    let u = unit_heading(heading_deg);
    let at = |t: f64| Point2::new(origin.x + t * u.x, origin.y + t * u.y);
    let mut ts: Vec<f64> = Vec::new();
    for (a, b) in poly.edges() {
        let e = b.sub(a);
        let ao = a.sub(origin);
        let denom = cross(u, e);
        let len = (e.x * e.x + e.y * e.y).sqrt();
        if denom.abs() <= 1e-12 * len {
            // Parallel: only a collinear edge matters, via its endpoints.
            if cross(ao, u).abs() <= BOUNDARY_EPS {
                for p in [a, b] {
                    let t = (p.x - origin.x) * u.x + (p.y - origin.y) * u.y;
                    if t >= 0.0 {
                        ts.push(t);
                    }
                }
            }
            continue;
        }
        let t = cross(ao, e) / denom;
        let s = cross(ao, u) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&s) && t >= -1e-12 {
            ts.push(t.max(0.0));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    if ts.is_empty() {
        return Ok(origin);
    }
    if ts[0] > BOUNDARY_EPS && !point_in_polygon(at(ts[0] / 2.0), poly) {
        return Ok(origin);
    }
    for (i, &t) in ts.iter().enumerate() {
        let probe = match ts.get(i + 1) {
            Some(&next) => (t + next) / 2.0,
            None => t + t.max(1.0),
        };
        if !point_in_polygon(at(probe), poly) {
            return Ok(at(t));
        }
    }
    Ok(at(*ts.last().expect("non-empty")))
}

/// Camera forward axis (camera +z) in world coordinates.
pub fn camera_forward(frame: &CameraFrame) -> Vec3 {
    let r = rotation_matrix(&frame.rotation);
    Vec3::from_na(&r.column(2).into_owned())
}

/// Heading of the camera's ground-projected forward axis, degrees CCW from east.
pub fn camera_heading(frame: &CameraFrame) -> Result<f64, GeometryError> {
    let f = camera_forward(frame);
    if (f.x * f.x + f.y * f.y).sqrt() < 1e-9 {
        return Err(GeometryError::VerticalCamera);
    }
    Ok(normalize_degrees(f.y.atan2(f.x).to_degrees()))
}
