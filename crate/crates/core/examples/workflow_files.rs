//! Writes a synthetic scene in the on-disk formats, loads the workflow file
//! back and runs it the way `geovid run` does.
//!
//! cargo run --example workflow_files -- [dir]

use std::path::PathBuf;

use geovid::cli;
use geovid::harness::{self, SceneSpec};
use geovid::io;

fn main() {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("geovid-example"));
    let scene = harness::generate_scene(&SceneSpec::intersection(2));
    cli::write_scene(&dir, &scene).unwrap();
    for entry in std::fs::read_dir(&dir).unwrap() {
        println!("wrote {}", entry.unwrap().path().display());
    }

    let wf = io::load_workflow(dir.join("workflow.json")).unwrap();
    println!("{}", wf.world.plan(&wf.config));
    let out = wf.out_dir();
    let result = wf.world.observe(&wf.mode(&out), &wf.config).unwrap();
    io::write_tracks(out.join("tracks.json"), &result.objects).unwrap();
    io::write_stats(out.join("stats.json"), &result.stats).unwrap();
    print!("{}", cli::stats_text(&result.stats));
    println!("outputs in {}", out.display());
}
