//! Acceptance gate. One line per criterion; exits non-zero if any fails.
//!
//! Run with `cargo test -p geovid --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geovid::estimator;
use geovid::geometry::{self, Point2};
use geovid::harness::{self, AblationTable, Scene, SceneSpec, Setup};
use geovid::model::{CameraConfig, CameraFrame, ConstructType, GeographicConstruct, Intrinsic, MovableObject, Quaternion, Vec3};
use geovid::pipeline;
use geovid::planner::{self, OptimizationToggles, PlannerConfig};
use geovid::predicate::{self, CamRef, EvalOptions, ObjRef, Predicate};
use geovid::query::{self, QueryOptions};
use geovid::sampler::{self, FrameCars, SamplerConfig};
use geovid::tracker;
use geovid::workflow::ObserveConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_frame(rng: &mut impl Rng) -> CameraFrame {
    let q = Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        .normalized()
        .unwrap_or(Quaternion::IDENTITY);
    CameraFrame {
        frame_index: 0,
        translation: Vec3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(0.5..30.0)),
        rotation: q,
        intrinsic: random_intrinsic(rng),
        timestamp: 0.0,
        width: 1920,
        height: 1080,
    }
}

fn random_intrinsic(rng: &mut impl Rng) -> Intrinsic {
    Intrinsic::new(
        rng.random_range(100.0..3000.0),
        rng.random_range(100.0..3000.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(0.0..2000.0),
        rng.random_range(0.0..1200.0),
    )
}

fn c1_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let frame = random_frame(&mut rng);
        let mut points = Vec::with_capacity(100);
        while points.len() < 100 {
            let p = Vec3::new(
                frame.translation.x + rng.random_range(-200.0..200.0),
                frame.translation.y + rng.random_range(-200.0..200.0),
                rng.random_range(-50.0..50.0),
            );
            if geometry::world_to_camera(p, &frame).z >= 0.1 {
                points.push(p);
            }
        }
        cases.push((frame, points));
    }
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (frame, points) in &cases {
        for &p in points {
            let (px, depth) = geometry::world_to_pixel(p, frame).expect("in front");
            let back = geometry::pixel_to_world(px, depth, frame).expect("positive depth");
            worst = worst.max(back.distance(&p) / p.distance(&Vec3::new(0.0, 0.0, 0.0)).max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-9 && secs < 1.0, format!("max rel err {worst:.2e}, {secs:.3}s for 100000 points"))
}

fn c2_intrinsic_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = random_intrinsic(&mut rng);
        let closed = geometry::intrinsic_inverse(&k);
        let m = k.matrix();
        let numeric = Matrix3::from_fn(|r, c| m[r][c]).try_inverse().expect("invertible");
        for (a, b) in closed.iter().zip(numeric.iter()) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    outcome(worst <= 1e-12, format!("max err {worst:.2e}"))
}

fn frames_for(scene: &Scene, p: &Predicate, toggles: OptimizationToggles, cfg: &ObserveConfig) -> (BTreeSet<usize>, geovid::ObserveResult) {
    let world = harness::world_for(scene, p, p.object_vars().len());
    let r = world.get_objects(&ObserveConfig { toggles, ..cfg.clone() }).expect("valid world");
    (r.manifest[0].frame_set(), r)
}

fn c3_estimator() -> Outcome {
    let (p, _) = harness::oncoming_in_intersection();
    let mut worst = 0.0f64;
    let mut min_acc = 1.0f64;
    for seed in 0..5 {
        let scene = harness::generate_scene(&SceneSpec::intersection(seed));
        for t in &scene.truth.tracks {
            for s in &t.samples {
                let got = estimator::ground_point_3d(&s.bbox, &scene.camera.frames[s.frame_index]).expect("on ground");
                worst = worst.max(got.distance(&s.location.expect("truth is located")));
            }
        }
        let cfg = ObserveConfig::default();
        let (base, _) = frames_for(&scene, &p, Setup::SB.toggles(), &cfg);
        let (s3, _) = frames_for(&scene, &p, Setup::S3.toggles(), &cfg);
        min_acc = min_acc.min(harness::frame_output_accuracy(&base, &s3, scene.camera.len()));
    }
    outcome(worst <= 1e-6 && min_acc == 1.0, format!("max ground error {worst:.2e} m, S3 accuracy {min_acc}"))
}

fn c4_planner() -> Outcome {
    let cfg = PlannerConfig::default();
    let all = OptimizationToggles::ALL;
    let (p, _) = harness::oncoming_in_intersection();
    let full = planner::make_plan(&p, &all, &cfg).names();
    let expected = ["RoadVisibilityPrune", "Decode", "Detect", "ObjectTypePrune", "Estimate3D", "ExitFrameSample", "Track"];
    let type_only = planner::make_plan(&ObjRef(0).type_eq("car"), &all, &cfg).names();
    let o = ObjRef(0);
    let ped = o.type_eq("pedestrian") & predicate::heading_diff(o, CamRef, 45.0, 135.0);
    let ped_plan = planner::make_plan(&ped, &all, &cfg);
    let pass = full == expected && type_only == ["Decode", "Detect", "ObjectTypePrune"] && !ped_plan.has("ExitFrameSample");
    outcome(pass, format!("oncoming: {}; type-only: {}; pedestrian: {}", full.join(","), type_only.join(","), ped_plan.names().join(",")))
}

fn c5_rvp() -> Outcome {
    let (p, _) = harness::oncoming_in_intersection();
    let d = predicate::distance_bound(&p).expect("bounded");
    let opts = EvalOptions::default();
    let (mut satisfying, mut on_pruned, mut pruned) = (0, 0, 0);
    for seed in 0..20 {
        let scene = harness::generate_scene(&SceneSpec::intersection(seed));
        let kept = pipeline::rvp_kept_frames(&p, &scene.camera, &scene.roads, d);
        pruned += scene.camera.len() - kept.len();
        for (f, _) in harness::brute_force_matches(&scene.truth.tracks, &scene.camera, &scene.roads, &p, &opts) {
            satisfying += 1;
            on_pruned += usize::from(!kept.contains(&f));
        }
    }
    let partial = harness::generate_scene(&SceneSpec::partial_intersection(0, 0.3));
    let kept = pipeline::rvp_kept_frames(&p, &partial.camera, &partial.roads, d);
    let rate = 1.0 - kept.len() as f64 / partial.camera.len() as f64;
    outcome(
        on_pruned == 0 && satisfying > 0 && rate >= 0.3,
        format!("{on_pruned}/{satisfying} satisfying pairs on pruned frames ({pruned} pruned over 20 scenes); partial scene pruned {:.1}%", rate * 100.0),
    )
}

type TrackKey = Vec<(usize, [u64; 4], Option<[u64; 3]>)>;

/// Tracks as sets of samples, independent of oid numbering.
fn canonical(tracks: &[MovableObject], p: &Predicate) -> BTreeSet<(String, TrackKey)> {
    let types = predicate::relevant_object_types(p);
    tracks
        .iter()
        .filter(|t| types.as_ref().is_none_or(|s| s.contains(&t.object_type)))
        .map(|t| {
            let samples = t
                .samples
                .iter()
                .map(|s| {
                    let b = s.bbox;
                    let loc = s.location.map(|l| [l.x.to_bits(), l.y.to_bits(), l.z.to_bits()]);
                    (s.frame_index, [b.x1.to_bits(), b.y1.to_bits(), b.x2.to_bits(), b.y2.to_bits()], loc)
                })
                .collect();
            (t.object_type.clone(), samples)
        })
        .collect()
}

fn c6_otp() -> Outcome {
    let (p, _) = harness::oncoming_in_intersection();
    let cfg = ObserveConfig::default();
    let mut mismatches = Vec::new();
    let pairs = [
        (OptimizationToggles { geo3d: true, ..OptimizationToggles::NONE }, OptimizationToggles { geo3d: true, otp: true, ..OptimizationToggles::NONE }),
        (OptimizationToggles { otp: false, ..OptimizationToggles::ALL }, OptimizationToggles::ALL),
    ];
    let mut scenes = 0;
    for seed in 0..10 {
        for spec in [SceneSpec::intersection(seed), SceneSpec::partial_intersection(seed, 0.3)] {
            let scene = harness::generate_scene(&spec);
            scenes += 1;
            for (without, with) in pairs {
                let (_, a) = frames_for(&scene, &p, without, &cfg);
                let (_, b) = frames_for(&scene, &p, with, &cfg);
                if canonical(&a.tracks, &p) != canonical(&b.tracks, &p) {
                    mismatches.push(seed);
                }
            }
        }
    }
    outcome(mismatches.is_empty(), format!("{scenes} scenes x 2 toggle pairs, mismatching seeds {mismatches:?}"))
}

fn sampled_frames(scene: &Scene, cfg: &SamplerConfig) -> Vec<usize> {
    let cars = |f: usize| scene.detections.at(f).iter().filter(|d| d.class_label == "car" || d.class_label == "truck").cloned().collect::<Vec<_>>();
    let available: Vec<usize> = (0..scene.camera.len()).collect();
    sampler::sample_frames(&available, &scene.camera, &scene.roads, cfg, |f| cars(f).len(), |f| {
        let dets = cars(f);
        let locations = dets.iter().filter_map(|d| estimator::ground_point_3d(&d.bbox, &scene.camera.frames[f]).ok()).collect();
        FrameCars { count: dets.len(), locations }
    })
}

fn c7_efs() -> Outcome {
    let mut gaps_ok = true;
    for seed in 0..10 {
        let scene = harness::generate_scene(&SceneSpec::intersection(seed));
        let s = sampled_frames(&scene, &SamplerConfig { frustum_depth: 50.0, ..SamplerConfig::default() });
        gaps_ok &= s.windows(2).all(|w| w[0] < w[1] && w[1] - w[0] <= 5) && s.first() == Some(&0) && s.last() == Some(&(scene.camera.len() - 1));
    }

    let lane = harness::generate_scene(&SceneSpec::straight_lane(0));
    let o = ObjRef(0);
    let p = o.type_eq("car") & predicate::heading_diff(o, CamRef, 225.0, 315.0);
    let mut cfg = ObserveConfig::default();
    cfg.planner.max_skip = None;
    let (_, r) = frames_for(&lane, &p, OptimizationToggles::ALL, &cfg);
    let ratio = r.stats[0].skipping_ratio;

    let (q, _) = harness::oncoming_in_intersection();
    let mut min_acc = 1.0f64;
    for seed in 0..5 {
        let scene = harness::generate_scene(&SceneSpec::intersection(seed));
        let cfg = ObserveConfig::default();
        let (base, _) = frames_for(&scene, &q, Setup::SB.toggles(), &cfg);
        let (s6, _) = frames_for(&scene, &q, Setup::S6.toggles(), &cfg);
        min_acc = min_acc.min(harness::frame_output_accuracy(&base, &s6, scene.camera.len()));
    }
    outcome(
        gaps_ok && ratio >= 0.3 && min_acc >= 0.95,
        format!("gaps ok: {gaps_ok}; straight-lane skipping ratio {ratio:.3}; min S6 accuracy {min_acc:.4}"),
    )
}

fn c8_hungarian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut wrong = 0;
    for _ in 0..500 {
        let (r, c) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let cost: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(0..1000) as f64).collect()).collect();
        let assignment = tracker::hungarian(&cost);
        let cols: Vec<usize> = assignment.iter().flatten().copied().collect();
        let distinct = cols.iter().collect::<BTreeSet<_>>().len() == cols.len();
        let got = tracker::assignment_cost(&cost, &assignment);
        let best = if r <= c {
            harness::distinct_tuples(c, r).iter().map(|t| t.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>()).fold(f64::INFINITY, f64::min)
        } else {
            harness::distinct_tuples(r, c).iter().map(|t| t.iter().enumerate().map(|(j, &i)| cost[i][j]).sum::<f64>()).fold(f64::INFINITY, f64::min)
        };
        if got != best || !distinct || cols.len() != r.min(c) {
            wrong += 1;
        }
    }
    outcome(wrong == 0, format!("{wrong}/500 matrices differ from the permutation minimum"))
}

fn c9_metric() -> Outcome {
    let acc = harness::frame_output_accuracy(&BTreeSet::from([2]), &BTreeSet::from([2, 3]), 4);
    outcome(acc == 0.75, format!("accuracy {acc}"))
}

/// Brute-force matches folded onto one representative per symmetry orbit.
fn brute_canonical(tracks: &[MovableObject], camera: &CameraConfig, roads: &geovid::RoadNetwork, p: &Predicate) -> BTreeSet<(usize, Vec<String>)> {
    let vars: Vec<ObjRef> = p.object_vars().into_iter().collect();
    let syms = query::symmetries(p, &vars);
    harness::brute_force_matches(tracks, camera, roads, p, &EvalOptions::default())
        .into_iter()
        .map(|(f, t)| {
            let best = syms.iter().map(|perm| perm.iter().map(|&j| t[j].clone()).collect::<Vec<_>>()).fold(t.clone(), |a, b| a.min(b));
            (f, best)
        })
        .collect()
}

fn c10_query() -> Outcome {
    let start = Instant::now();
    let (p, _) = harness::oncoming_in_intersection();
    let (a, b, c) = (ObjRef(0), ObjRef(1), ObjRef(2));
    let triple = predicate::distance(a, b).lt(40.0) & predicate::distance(b, c).lt(40.0) & predicate::distance(a, c).lt(40.0);
    let (mut diffs, mut matches, mut max_objects, mut triples) = (0, 0, 0, 0);
    for seed in 0..20 {
        let scene = harness::generate_scene(&SceneSpec::intersection(seed));
        max_objects = max_objects.max(scene.truth.tracks.len());
        for (q, is_triple) in [(&p, false), (&triple, true)] {
            let got: BTreeSet<(usize, Vec<String>)> =
                query::execute_query(&scene.truth.tracks, &scene.camera, &scene.roads, q, &QueryOptions::default())
                    .matches
                    .into_iter()
                    .map(|m| (m.frame_index, m.oids))
                    .collect();
            let want = brute_canonical(&scene.truth.tracks, &scene.camera, &scene.roads, q);
            diffs += got.symmetric_difference(&want).count();
            matches += want.len();
            if is_triple {
                triples += want.len();
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        diffs == 0 && max_objects >= 5 && triples > 0 && secs < 10.0,
        format!("{diffs} differences over {matches} matches ({triples} triples, up to {max_objects} objects), {secs:.2}s"),
    )
}

fn c11_walkthrough() -> Outcome {
    let origin = Point2::new(70.92, 74.7);
    let published = Point2::new(66.3, 72.7);
    let heading = 181.0;
    // Lane body along the heading, ending where the published exit point
    // lies from the car.
    let ahead = origin.distance(&published);
    let u = geometry::unit_heading(heading);
    let n = Point2::new(-u.y, u.x);
    let at = |a: f64, b: f64| Point2::new(origin.x + u.x * a + n.x * b, origin.y + u.y * a + n.y * b);
    let lane = GeographicConstruct::new(
        "lane-walkthrough",
        ConstructType::Lane,
        vec![at(-30.0, -1.75), at(ahead, -1.75), at(ahead, 1.75), at(-30.0, 1.75)],
        vec![heading],
    );
    let frames = (0..24)
        .map(|i| CameraFrame {
            frame_index: i,
            translation: Vec3::new(60.0, 74.0, 1.6),
            rotation: Quaternion::looking(0.0, 5.0),
            intrinsic: Intrinsic::new(800.0, 800.0, 0.0, 640.0, 360.0),
            timestamp: i as f64 / 12.0,
            width: 1280,
            height: 720,
        })
        .collect();
    let cams = CameraConfig { camera_id: "walkthrough".into(), frames };
    let exit = sampler::lane_exit(0, Vec3::new(origin.x, origin.y, 0.0), &lane, sampler::DEFAULT_SPEED_MPS, &cams).expect("car is in the lane");
    let point_err = exit.exit_point.distance(&published);
    let delay = exit.exit_time - cams.frames[0].timestamp;
    outcome(
        point_err <= 0.05 && (delay - 0.45).abs() <= 0.01,
        format!(
            "exit point ({:.2}, {:.2}) is {point_err:.2} m from (66.3, 72.7) [tol 0.05]; delay {delay:.4}s [0.45 +- 0.01]",
            exit.exit_point.x, exit.exit_point.y
        ),
    )
}

fn c12_ablation() -> Outcome {
    let (p, objects) = harness::oncoming_in_intersection();
    let scene = harness::generate_scene(&SceneSpec::intersection(12));
    let start = Instant::now();
    let table: AblationTable = harness::ablation(&scene, &p, objects, &ObserveConfig::default());
    let secs = start.elapsed().as_secs_f64();
    let (sb, s6) = (table.row(Setup::SB), table.row(Setup::S6));
    print!("{}", table.to_text());
    outcome(
        scene.camera.len() == 240 && s6.frames_processed < sb.frames_processed && s6.detections_processed < sb.detections_processed && secs < 60.0,
        format!(
            "{} frames; frames {} vs {}; detections {} vs {}; matrix {secs:.2}s",
            scene.camera.len(),
            s6.frames_processed,
            sb.frames_processed,
            s6.detections_processed,
            sb.detections_processed
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("geometry round trip", c1_round_trip),
        ("closed-form intrinsic inverse", c2_intrinsic_inverse),
        ("estimator exactness", c3_estimator),
        ("planner golden plans", c4_planner),
        ("road visibility pruning soundness", c5_rvp),
        ("object type pruning exactness", c6_otp),
        ("exit frame sampler properties", c7_efs),
        ("hungarian optimality", c8_hungarian),
        ("frame-output accuracy example", c9_metric),
        ("query engine vs brute force", c10_query),
        ("sampler walk-through", c11_walkthrough),
        ("end-to-end ablation", c12_ablation),
    ];
    let mut results = BTreeMap::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("[{}] {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        results.insert(i + 1, o.pass);
    }
    let failed: Vec<usize> = results.iter().filter(|(_, &p)| !p).map(|(&i, _)| i).collect();
    println!("{}/{} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        std::process::exit(1);
    }
}
