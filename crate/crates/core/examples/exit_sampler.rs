//! Lane exit prediction for one car, then exit frame sampling over a video.

use geovid::estimator;
use geovid::geometry::Point2;
use geovid::harness::{self, SceneSpec};
use geovid::model::{CameraConfig, ConstructType, GeographicConstruct, Vec3};
use geovid::sampler::{self, FrameCars, SamplerConfig, DEFAULT_SPEED_MPS};

fn main() {
    // A 4 m wide eastbound lane ending at x = 30.
    let lane = GeographicConstruct::new(
        "lane",
        ConstructType::Lane,
        vec![Point2::new(-100.0, -2.0), Point2::new(30.0, -2.0), Point2::new(30.0, 2.0), Point2::new(-100.0, 2.0)],
        vec![0.0],
    );
    let scene = harness::generate_scene(&SceneSpec::straight_lane(0));
    let cams: &CameraConfig = &scene.camera;
    let exit = sampler::lane_exit(0, Vec3::new(0.0, 0.0, 0.0), &lane, DEFAULT_SPEED_MPS, cams).unwrap();
    println!(
        "car at the origin leaves the lane at ({:.2}, {:.2}) after {:.3} s, last frame before that: {}",
        exit.exit_point.x,
        exit.exit_point.y,
        exit.exit_time - cams.frames[0].timestamp,
        exit.frame
    );

    let available: Vec<usize> = (0..cams.len()).collect();
    for max_skip in [Some(5), None] {
        let cfg = SamplerConfig { max_skip, ..SamplerConfig::default() };
        let sampled = sampler::sample_frames(&available, cams, &scene.roads, &cfg, |f| scene.detections.at(f).len(), |f| FrameCars {
            count: scene.detections.at(f).len(),
            locations: scene
                .detections
                .at(f)
                .iter()
                .filter_map(|d| estimator::ground_point_3d(&d.bbox, &cams.frames[f]).ok())
                .collect(),
        });
        println!(
            "max_skip {:?}: {} of {} frames sampled, skipping ratio {:.3}, first {:?}",
            max_skip,
            sampled.len(),
            cams.len(),
            sampler::skipping_ratio(sampled.len(), cams.len()),
            &sampled[..sampled.len().min(8)]
        );
    }
}
