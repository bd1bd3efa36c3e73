//! Tracking-by-detection on two cars whose boxes overlap as they pass.

use geovid::harness::{self, SceneSpec};
use geovid::tracker::{self, Observation, TrackerConfig};

fn main() {
    let scene = harness::generate_scene(&SceneSpec::crossing(0));
    let frames = scene.camera.frames.iter().map(|f| {
        let obs = scene
            .detections
            .at(f.frame_index)
            .iter()
            .map(|d| Observation { detection: d.clone(), timestamp: f.timestamp, location: None })
            .collect();
        (f.frame_index, obs)
    });
    let (tracks, counters) = tracker::track_video(frames, &TrackerConfig::default());
    for t in &tracks {
        let first = t.samples.first().unwrap();
        let last = t.samples.last().unwrap();
        println!(
            "track {} {}: frames {}..={}, x {:.0} -> {:.0}",
            t.oid,
            t.object_type,
            first.frame_index,
            last.frame_index,
            first.bbox.center().0,
            last.bbox.center().0
        );
    }
    println!("{counters:?}");
    println!("association accuracy vs truth: {:.3}", harness::association_accuracy_simple(&scene.truth.tracks, &tracks));

    // The assignment solver on its own.
    let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
    let a = tracker::hungarian(&cost);
    println!("assignment {:?} cost {}", a, tracker::assignment_cost(&cost, &a));
}
