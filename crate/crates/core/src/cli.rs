//! Command-line surface: `plan`, `run`, `stats`, `synth`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::harness::{self, SceneSpec};
use crate::io::{self, IoError, Names};
use crate::pipeline::VideoStats;
use crate::planner::OptimizationToggles;
use crate::workflow::ObserveConfig;

#[derive(Debug, Parser)]
#[command(name = "geovid", about = "Geospatial video queries over camera poses, road maps and detections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the execution plan of a workflow.
    Plan(RunArgs),
    /// Execute a workflow and write tracks, manifest and stats.
    Run(RunArgs),
    /// Print per-step statistics, from a workflow or a previous run's output.
    Stats(StatsArgs),
    /// Generate a synthetic scene and a matching workflow.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Toggles {
    #[arg(long)]
    pub disable_rvp: bool,
    #[arg(long)]
    pub disable_otp: bool,
    #[arg(long)]
    pub disable_geo3d: bool,
    #[arg(long)]
    pub disable_efs: bool,
    #[arg(long)]
    pub disable_all_opts: bool,
    #[arg(long)]
    pub speed_mps: Option<f64>,
    /// 0 disables the skip limit.
    #[arg(long)]
    pub max_skip: Option<usize>,
    #[arg(long)]
    pub frustum_depth: Option<f64>,
}

impl Toggles {
    fn apply(&self, cfg: &mut ObserveConfig) {
        let t = &mut cfg.toggles;
        if self.disable_all_opts {
            *t = OptimizationToggles::NONE;
        }
        t.rvp &= !self.disable_rvp;
        t.otp &= !self.disable_otp;
        t.geo3d &= !self.disable_geo3d;
        t.efs &= !self.disable_efs;
        if let Some(v) = self.speed_mps {
            cfg.planner.speed_mps = v;
        }
        if let Some(m) = self.max_skip {
            cfg.planner.max_skip = (m > 0).then_some(m);
        }
        if self.frustum_depth.is_some() {
            cfg.planner.frustum_depth = self.frustum_depth;
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub workflow: PathBuf,
    /// Output directory; defaults to the workflow's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub toggles: Toggles,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, conflicts_with = "out")]
    pub workflow: Option<PathBuf>,
    /// Directory holding a previous run's stats.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub toggles: Toggles,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// One of intersection, straight-lane, partial-intersection, crossing.
    #[arg(long, default_value = "intersection")]
    pub preset: String,
    #[arg(long, default_value_t = 0.0)]
    pub pixel_noise: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Workflow(#[from] crate::workflow::WorkflowError),
    #[error("{0}")]
    Usage(String),
}

pub fn stats_text(stats: &[VideoStats]) -> String {
    let mut s = String::new();
    for st in stats {
        s.push_str(&format!("video {}\n", st.camera_id));
        s.push_str(&format!("  {:<22}{}\n", "frames total", st.frames_total));
        s.push_str(&format!("  {:<22}{}\n", "frames pruned", st.frames_pruned));
        s.push_str(&format!("  {:<22}{}\n", "frames processed", st.frames_processed()));
        s.push_str(&format!("  {:<22}{}\n", "detections total", st.detections_total));
        s.push_str(&format!("  {:<22}{}\n", "detections pruned", st.detections_pruned));
        s.push_str(&format!("  {:<22}{}\n", "detections processed", st.detections_processed()));
        s.push_str(&format!("  {:<22}{}\n", "detections dropped", st.detections_dropped));
        s.push_str(&format!("  {:<22}{}\n", "sampled frames", st.sampled_frames));
        s.push_str(&format!("  {:<22}{:.4}\n", "skipping ratio", st.skipping_ratio));
        for (step, secs) in &st.timings {
            s.push_str(&format!("  {:<22}{:.6}s\n", format!("time {step}"), secs));
        }
    }
    s
}

fn load(path: &Path, toggles: &Toggles) -> Result<io::LoadedWorkflow, CliError> {
    let mut wf = io::load_workflow(path)?;
    toggles.apply(&mut wf.config);
    Ok(wf)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(|e| CliError::Usage(e.to_string()));
    match cli.command {
        Command::Plan(args) => {
            let wf = load(&args.workflow, &args.toggles)?;
            w(out, &wf.world.plan(&wf.config).to_string())
        }
        Command::Run(args) => {
            let wf = load(&args.workflow, &args.toggles)?;
            let dir = args.out.clone().unwrap_or_else(|| wf.out_dir());
            let result = wf.world.observe(&wf.mode(&dir), &wf.config)?;
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            io::write_tracks(dir.join("tracks.json"), &result.objects)?;
            io::write_manifest(dir.join("manifest.json"), &result.manifest)?;
            io::write_stats(dir.join("stats.json"), &result.stats)?;
            let frames: usize = result.manifest.iter().map(|m| m.frames.len()).sum();
            w(out, &format!("{} objects, {} matching frames, written to {}\n", result.objects.len(), frames, dir.display()))
        }
        Command::Stats(args) => {
            let stats = match (&args.workflow, &args.out) {
                (Some(path), _) => {
                    let wf = load(path, &args.toggles)?;
                    wf.world.get_objects(&wf.config)?.stats
                }
                (None, Some(dir)) => io::load_stats(dir.join("stats.json"))?,
                (None, None) => return Err(CliError::Usage("stats needs --workflow or --out".into())),
            };
            w(out, &stats_text(&stats))
        }
        Command::Synth(args) => {
            let mut spec = SceneSpec::preset(&args.preset, args.seed).ok_or_else(|| {
                CliError::Usage(format!("unknown preset `{}`; expected one of {}", args.preset, SceneSpec::PRESETS.join(", ")))
            })?;
            spec.pixel_noise = args.pixel_noise;
            let scene = harness::generate_scene(&spec);
            write_scene(&args.out, &scene)?;
            w(out, &format!("{} frames, {} detections, written to {}\n", scene.camera.len(), scene.detections.len(), args.out.display()))
        }
    }
}

/// Writes a scene in the input formats plus ground truth and a workflow
/// running the oncoming-car query on it.
pub fn write_scene(dir: &Path, scene: &harness::Scene) -> Result<(), CliError> {
    io::write_camera_config(dir.join("camera.json"), &scene.camera)?;
    io::write_detections(dir.join("detections.ndjson"), &scene.detections)?;
    io::write_road_network(dir.join("roads"), &scene.roads)?;
    io::write_tracks(dir.join("truth.json"), &scene.truth.tracks)?;
    let (p, _) = harness::oncoming_in_intersection();
    let names = Names { objects: vec!["o1".into()], ..Names::default() };
    let workflow = json!({
        "road_network": "roads",
        "videos": [{ "camera": "camera.json", "detections": "detections.ndjson" }],
        "objects": ["o1"],
        "filters": [io::encode_predicate(&p, &names)?],
        "observe": { "mode": "save_frames", "annotate": false, "padding": 0 },
        "out": "out",
    });
    io::write_json(&dir.join("workflow.json"), &workflow)?;
    Ok(())
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
