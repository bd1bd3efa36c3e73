use std::fs;
use std::path::Path;

use clap::Parser;

use geovid::cli::{self, Cli};
use geovid::io;

fn run(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("geovid").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    cli::execute(cli, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn synth(dir: &Path, seed: &str) {
    run(&["synth", "--seed", seed, "--out", dir.to_str().unwrap()]);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), "7");
    synth(b.path(), "7");
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.iter().any(|(n, _)| n == "workflow.json"));
    assert_eq!(sa, sb);
}

#[test]
fn plan_prints_the_full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let wf = dir.path().join("workflow.json");
    let text = run(&["plan", "--workflow", wf.to_str().unwrap()]);
    assert_eq!(
        text,
        "1. RoadVisibilityPrune depth=50 targets=intersection\n\
         2. Decode\n\
         3. Detect\n\
         4. ObjectTypePrune types=car,truck\n\
         5. Estimate3D estimator=geometry\n\
         6. ExitFrameSample speed_mps=11.176 max_skip=5 depth=50\n\
         7. Track\n"
    );
    let none = run(&["plan", "--workflow", wf.to_str().unwrap(), "--disable-all-opts"]);
    assert_eq!(none, "1. Decode\n2. Detect\n3. Estimate3D estimator=external-depth\n4. Track\n");
}

#[test]
fn optimized_run_processes_fewer_frames() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "3");
    let wf = dir.path().join("workflow.json");
    let (opt, base) = (dir.path().join("opt"), dir.path().join("base"));
    run(&["run", "--workflow", wf.to_str().unwrap(), "--out", opt.to_str().unwrap()]);
    run(&["run", "--workflow", wf.to_str().unwrap(), "--out", base.to_str().unwrap(), "--disable-all-opts"]);
    for d in [&opt, &base] {
        for f in ["tracks.json", "manifest.json", "stats.json"] {
            assert!(d.join(f).is_file(), "{} missing", f);
        }
    }
    let a = io::load_stats(opt.join("stats.json")).unwrap();
    let b = io::load_stats(base.join("stats.json")).unwrap();
    assert!(a[0].frames_processed() < b[0].frames_processed());
    assert!(a[0].detections_processed() < b[0].detections_processed());
    let ma = io::load_manifest(opt.join("manifest.json")).unwrap();
    let mb = io::load_manifest(base.join("manifest.json")).unwrap();
    assert_eq!(ma[0].frame_set(), mb[0].frame_set());

    let text = run(&["stats", "--out", opt.to_str().unwrap()]);
    assert!(text.contains(&format!("{:<22}{}", "frames processed", a[0].frames_processed())), "{text}");
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2");
    fs::write(dir.path().join("detections.ndjson"), "{\"frame\": 0, \"bbox\": [1, 2, 3]}\n").unwrap();
    let wf = dir.path().join("workflow.json");
    let cli = Cli::try_parse_from(["geovid", "run", "--workflow", wf.to_str().unwrap()]).unwrap();
    let err = cli::execute(cli, &mut Vec::new()).unwrap_err().to_string();
    assert!(err.contains("detections.ndjson"), "{err}");
    assert_eq!(cli::run_cli(["geovid", "synth", "--out", "x", "--preset", "nope"]), 1);
    assert_eq!(cli::run_cli(["geovid", "frobnicate"]), 2);
}
