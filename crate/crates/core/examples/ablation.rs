//! Runs the seven ablation setups on a seeded synthetic scene.
//!
//! cargo run --example ablation -- [seed] [preset]

use geovid::harness::{self, SceneSpec};
use geovid::ObserveConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let preset = args.next().unwrap_or_else(|| "intersection".into());
    let spec = SceneSpec::preset(&preset, seed).expect("known preset");
    let scene = harness::generate_scene(&spec);
    let (p, objects) = harness::oncoming_in_intersection();
    println!("predicate: {p}");
    println!("{} frames, {} detections\n", scene.camera.len(), scene.detections.len());

    let table = harness::ablation(&scene, &p, objects, &ObserveConfig::default());
    print!("{}", table.to_text());
    println!();
    println!("{}", serde_json::to_string_pretty(&table).unwrap());
}
