//! Build, filter, observe: find frames with an oncoming car inside an
//! intersection within 50 m of the camera.
//!
//! cargo run --example oncoming_car -- [seed]

use geovid::harness::{self, SceneSpec};
use geovid::{contains, distance, heading_diff, ConstructType, ObserveConfig, ObserveMode, World};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let scene = harness::generate_scene(&SceneSpec::intersection(seed));

    let mut world = World::new();
    let obj = world.object();
    let cam = world.camera();
    let int = world.geog_construct(ConstructType::Intersection);
    world.add_geog_constructs(scene.roads.clone()).unwrap();
    world.add_video(scene.camera.clone(), scene.detections.clone(), None).unwrap();

    // Nothing runs until observe.
    world
        .filter((obj.type_eq("car") | obj.type_eq("truck")) & distance(obj, cam).lt(50.0))
        .unwrap()
        .filter(contains(&int, &obj) & heading_diff(obj, cam, 135.0, 225.0))
        .unwrap();

    let cfg = ObserveConfig::default();
    println!("{}", world.plan(&cfg));
    let result = world.observe(&ObserveMode::GetObjects, &cfg).unwrap();
    for m in &result.manifest {
        println!("{}: {} matching frames, snippets {:?}", m.camera_id, m.frames.len(), m.snippets);
        for f in m.frames.iter().take(5) {
            println!("  frame {:>3} {:?}", f.frame_index, f.matches);
        }
    }
    for o in &result.objects {
        println!("object {} ({}) tracked over {} frames", o.oid, o.object_type, o.samples.len());
    }
    let st = &result.stats[0];
    println!("{} of {} frames pruned, {} frame-steps processed", st.frames_pruned, st.frames_total, st.frames_processed());
}
