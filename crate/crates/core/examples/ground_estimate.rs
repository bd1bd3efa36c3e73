//! Recovers world positions from bounding boxes by intersecting the
//! bottom-center ray with the ground.

use geovid::estimator::{self, EstimateStats, EstimatorKind};
use geovid::harness::{self, SceneSpec};

fn main() {
    let scene = harness::generate_scene(&SceneSpec::intersection(3));
    let mut stats = EstimateStats::default();
    let mut worst = 0.0f64;
    for t in &scene.truth.tracks {
        for s in &t.samples {
            let frame = &scene.camera.frames[s.frame_index];
            let got = estimator::ground_point_3d(&s.bbox, frame).unwrap();
            worst = worst.max(got.distance(&s.location.unwrap()));
        }
    }
    println!("max error over all ground-truth boxes: {worst:.2e} m");

    let frame = &scene.camera.frames[60];
    for det in scene.detections.at(60) {
        let geo = estimator::estimate(det, frame, EstimatorKind::GeometryBased, &mut stats).unwrap();
        let ext = estimator::estimate(det, frame, EstimatorKind::ExternalDepth, &mut stats).unwrap();
        println!(
            "{:<6} box bottom ({:.1}, {:.1}) -> ground ({:.2}, {:.2}, {:.2}), depth hint gives ({:.2}, {:.2}, {:.2})",
            det.class_label,
            det.bbox.bottom_center().0,
            det.bbox.bottom_center().1,
            geo.x,
            geo.y,
            geo.z,
            ext.x,
            ext.y,
            ext.z
        );
    }
    println!("{stats:?}");
}
