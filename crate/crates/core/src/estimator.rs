//! Geometry-based 3D location estimation.
//!
//! A grounded object touches the ground at the middle of its bounding box's
//! lower border. Back-projecting that pixel gives a ray `t + d * R * K^-1 p`
//! parameterized by the unknown depth `d`; intersecting it with the ground
//! plane pins `d` and therefore the world location.

use crate::geometry::{self, GeometryError, Pixel};
use crate::model::{BBox, CameraFrame, Detection, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("ground intersection lies behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("ray is parallel to the ground plane")]
    NoIntersection,
}

/// Plane `normal . x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl GroundPlane {
    pub const Z0: GroundPlane = GroundPlane { normal: Vec3::new(0.0, 0.0, 1.0), offset: 0.0 };

    fn residual(&self, p: &Vec3) -> f64 {
        self.normal.x * p.x + self.normal.y * p.y + self.normal.z * p.z - self.offset
    }
}

impl Default for GroundPlane {
    fn default() -> Self {
        Self::Z0
    }
}

/// Depth along the pixel's viewing ray at which it meets `plane`.
pub fn solve_depth(pixel: Pixel, frame: &CameraFrame, plane: &GroundPlane) -> Result<f64, EstimateError> {
    let at = |d: f64| -> Vec3 {
        match geometry::pixel_to_world(pixel, d, frame) {
            Ok(p) => p,
            Err(GeometryError::NonPositiveDepth(_)) | Err(_) => unreachable!("trial depths are positive"),
        }
    };
    // The residual is affine in depth; two trial depths determine it.
    let r1 = plane.residual(&at(1.0));
    let r2 = plane.residual(&at(2.0));
    let slope = r2 - r1;
    let scale = frame.translation.x.abs().max(frame.translation.y.abs()).max(frame.translation.z.abs()).max(1.0);
    if slope.abs() <= 1e-12 * scale {
        return Err(EstimateError::NoIntersection);
    }
    debug_assert!({
        let r3 = plane.residual(&at(3.0));
        (r3 - (r1 + 2.0 * slope)).abs() <= 1e-9 * (r1.abs() + slope.abs() + 1.0)
    });
    let depth = 1.0 - r1 / slope;
    if depth <= 0.0 {
        return Err(EstimateError::BehindCamera(depth));
    }
    Ok(depth)
}

pub fn plane_point_3d(bbox: &BBox, frame: &CameraFrame, plane: &GroundPlane) -> Result<Vec3, EstimateError> {
    let (x, y) = bbox.bottom_center();
    let pixel = Pixel::new(x, y);
    let depth = solve_depth(pixel, frame, plane)?;
    let p = geometry::pixel_to_world(pixel, depth, frame).map_err(|_| EstimateError::BehindCamera(depth))?;
    // Snap exactly onto the plane.
    let r = plane.residual(&p);
    let n2 = plane.normal.x.powi(2) + plane.normal.y.powi(2) + plane.normal.z.powi(2);
    Ok(Vec3::new(p.x - r * plane.normal.x / n2, p.y - r * plane.normal.y / n2, p.z - r * plane.normal.z / n2))
}

/// World location where the object's bounding box meets the ground `z = 0`.
pub fn ground_point_3d(bbox: &BBox, frame: &CameraFrame) -> Result<Vec3, EstimateError> {
    plane_point_3d(bbox, frame, &GroundPlane::Z0)
}

/// Location from an externally supplied camera-frame depth for the
/// bottom-center pixel.
pub fn depth_hint_point(det: &Detection, frame: &CameraFrame) -> Option<Vec3> {
    let depth = det.depth_hint?;
    let (x, y) = det.bbox.bottom_center();
    geometry::pixel_to_world(Pixel::new(x, y), depth, frame).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Ground-plane intersection, falling back to the depth hint.
    GeometryBased,
    /// Depth hint only.
    ExternalDepth,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateStats {
    pub geometry: u64,
    pub fallback: u64,
    pub dropped: u64,
}

/// Estimates a location, or `None` when the detection must be dropped.
pub fn estimate(det: &Detection, frame: &CameraFrame, kind: EstimatorKind, stats: &mut EstimateStats) -> Option<Vec3> {
    let located = match kind {
        EstimatorKind::GeometryBased => match ground_point_3d(&det.bbox, frame) {
            Ok(p) => {
                stats.geometry += 1;
                return Some(p);
            }
            Err(_) => depth_hint_point(det, frame).inspect(|_| stats.fallback += 1),
        },
        EstimatorKind::ExternalDepth => depth_hint_point(det, frame),
    };
    if located.is_none() {
        stats.dropped += 1;
    }
    located
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Intrinsic, Quaternion};

    fn pitched_camera() -> CameraFrame {
        // At (0, 0, 1.5) looking east, pitched so the optical axis meets the
        // ground at (10, 0, 0).
        let pitch = (1.5f64 / 10.0).atan().to_degrees();
        CameraFrame {
            frame_index: 0,
            translation: Vec3::new(0.0, 0.0, 1.5),
            rotation: Quaternion::looking(0.0, pitch),
            intrinsic: Intrinsic::new(800.0, 800.0, 0.0, 640.0, 360.0),
            timestamp: 0.0,
            width: 1280,
            height: 720,
        }
    }

    fn bbox_with_bottom_center(p: Pixel) -> BBox {
        BBox::new(p.x - 20.0, p.y - 30.0, p.x + 20.0, p.y)
    }

    #[test]
    fn recovers_forward_projected_ground_point() {
        let f = pitched_camera();
        let target = Vec3::new(10.0, 0.0, 0.0);
        let (pixel, _) = geometry::world_to_pixel(target, &f).unwrap();
        assert!((pixel.x - 640.0).abs() < 1e-9 && (pixel.y - 360.0).abs() < 1e-9);
        let got = ground_point_3d(&bbox_with_bottom_center(pixel), &f).unwrap();
        assert!(got.distance(&target) < 1e-6, "{got:?}");
    }

    #[test]
    fn horizon_ray_has_no_intersection() {
        let mut f = pitched_camera();
        f.rotation = Quaternion::looking(0.0, 0.0);
        // The principal point looks exactly along the horizon.
        let b = bbox_with_bottom_center(Pixel::new(640.0, 360.0));
        assert_eq!(ground_point_3d(&b, &f), Err(EstimateError::NoIntersection));
    }

    #[test]
    fn ray_above_horizon_is_behind() {
        let f = pitched_camera();
        let b = bbox_with_bottom_center(Pixel::new(640.0, 10.0));
        assert!(matches!(ground_point_3d(&b, &f), Err(EstimateError::BehindCamera(d)) if d < 0.0));
    }

    #[test]
    fn fallback_order() {
        let f = pitched_camera();
        let sky = Detection::new(0, bbox_with_bottom_center(Pixel::new(640.0, 10.0)), "car");
        let mut stats = EstimateStats::default();
        assert_eq!(estimate(&sky, &f, EstimatorKind::GeometryBased, &mut stats), None);
        let hinted = sky.clone().with_depth(12.0);
        let p = estimate(&hinted, &f, EstimatorKind::GeometryBased, &mut stats).unwrap();
        let (_, depth) = geometry::world_to_pixel(p, &f).unwrap();
        assert!((depth - 12.0).abs() < 1e-9);
        assert_eq!(stats, EstimateStats { geometry: 0, fallback: 1, dropped: 1 });
    }

    #[test]
    fn general_plane() {
        let f = pitched_camera();
        let plane = GroundPlane { normal: Vec3::new(0.0, 0.0, 1.0), offset: 0.5 };
        let target = Vec3::new(8.0, 1.0, 0.5);
        let (pixel, _) = geometry::world_to_pixel(target, &f).unwrap();
        let got = plane_point_3d(&bbox_with_bottom_center(pixel), &f, &plane).unwrap();
        assert!(got.distance(&target) < 1e-6);
    }
}
