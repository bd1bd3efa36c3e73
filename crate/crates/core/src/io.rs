//! File formats. All writers emit canonical JSON: sorted keys and shortest
//! round-trip float formatting, so output is byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::geometry::{Point2, Polygon2D};
use crate::model::{
    self, BBox, CameraConfig, CameraFrame, ConstructType, Detection, DetectionStream, GeographicConstruct, Intrinsic,
    MovableObject, ObjectSample, Quaternion, RoadNetwork, RoadNetworkError, ValidationReport, Vec3, Violation,
};
use crate::pipeline::VideoStats;
use crate::predicate::{Comparator, GeogRef, ObjRef, Predicate, Subject};
use crate::workflow::{ObserveConfig, ObserveMode, VideoManifest, World, WorkflowError};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: invalid:\n{report}")]
    InvariantViolation { path: PathBuf, report: ValidationReport },
    #[error("{path}: {source}")]
    Road { path: PathBuf, source: RoadNetworkError },
    #[error("predicate: {0}")]
    Predicate(String),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line_offset: usize, e: serde_json::Error) -> IoError {
    IoError::Parse { path: path.to_path_buf(), line: e.line() + line_offset, column: e.column(), message: e.to_string() }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| parse_err(path, 0, e))
}

/// Canonical pretty JSON with a trailing newline.
pub fn to_canonical<T: Serialize>(x: &T) -> String {
    // Round-tripping through `Value` sorts every object's keys.
    let v = serde_json::to_value(x).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, x: &T) -> Result<(), IoError> {
    write_text(path, &to_canonical(x))
}

// Camera configs.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    camera_id: String,
    width: u32,
    height: u32,
    frames: Vec<FrameFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameFile {
    translation: [f64; 3],
    /// `[w, x, y, z]`.
    rotation: [f64; 4],
    intrinsic: [[f64; 3]; 3],
    timestamp: f64,
}

pub fn camera_from_str(path: &Path, text: &str) -> Result<CameraConfig, IoError> {
    let file: CameraFile = parse(path, text)?;
    let mut report = ValidationReport::default();
    let mut frames = Vec::with_capacity(file.frames.len());
    for (i, f) in file.frames.into_iter().enumerate() {
        let k = f.intrinsic;
        if k[1][0] != 0.0 || k[2][0] != 0.0 || k[2][1] != 0.0 || k[2][2] != 1.0 {
            report.violations.push(Violation::new(format!("frame {i}"), "intrinsic must be upper triangular with k[2][2] = 1"));
        }
        let q = Quaternion::new(f.rotation[0], f.rotation[1], f.rotation[2], f.rotation[3]);
        let rotation = match q.normalized() {
            Some(q) => q,
            None => {
                report.violations.push(Violation::new(format!("frame {i}"), "rotation quaternion has zero norm"));
                q
            }
        };
        frames.push(CameraFrame {
            frame_index: i,
            translation: Vec3::new(f.translation[0], f.translation[1], f.translation[2]),
            rotation,
            intrinsic: Intrinsic::new(k[0][0], k[1][1], k[0][1], k[0][2], k[1][2]),
            timestamp: f.timestamp,
            width: file.width,
            height: file.height,
        });
    }
    let cam = CameraConfig { camera_id: file.camera_id, frames };
    report.violations.extend(cam.violations());
    if !report.is_empty() {
        return Err(IoError::InvariantViolation { path: path.to_path_buf(), report });
    }
    Ok(cam)
}

pub fn load_camera_config(path: impl AsRef<Path>) -> Result<CameraConfig, IoError> {
    let path = path.as_ref();
    camera_from_str(path, &read(path)?)
}

pub fn camera_to_string(cam: &CameraConfig) -> String {
    let first = cam.frames.first();
    let file = CameraFile {
        camera_id: cam.camera_id.clone(),
        width: first.map_or(0, |f| f.width),
        height: first.map_or(0, |f| f.height),
        frames: cam
            .frames
            .iter()
            .map(|f| FrameFile {
                translation: [f.translation.x, f.translation.y, f.translation.z],
                rotation: [f.rotation.w, f.rotation.x, f.rotation.y, f.rotation.z],
                intrinsic: f.intrinsic.matrix(),
                timestamp: f.timestamp,
            })
            .collect(),
    };
    to_canonical(&file)
}

pub fn write_camera_config(path: impl AsRef<Path>, cam: &CameraConfig) -> Result<(), IoError> {
    write_text(path.as_ref(), &camera_to_string(cam))
}

// Road networks.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstructFile {
    id: String,
    polygon: Vec<[f64; 2]>,
    #[serde(default)]
    headings: Vec<f64>,
}

pub fn load_road_network(dir: impl AsRef<Path>) -> Result<RoadNetwork, IoError> {
    let dir = dir.as_ref();
    let mut constructs = Vec::new();
    let mut report = ValidationReport::default();
    for ty in ConstructType::ALL {
        let path = dir.join(format!("{}.json", ty.as_str()));
        if !path.exists() {
            continue;
        }
        let items: Vec<ConstructFile> = parse(&path, &read(&path)?)?;
        for item in items {
            let raw = Polygon2D::new(item.polygon.iter().map(|&p| Point2::from(p)).collect());
            if raw.vertices.len() < 3 || !raw.is_simple() {
                let c = GeographicConstruct { id: item.id, construct_type: ty, polygon: raw, headings: item.headings };
                report.violations.extend(c.violations());
                continue;
            }
            let c = GeographicConstruct::new(item.id, ty, raw.vertices, item.headings);
            report.violations.extend(c.violations());
            constructs.push(c);
        }
    }
    if !report.is_empty() {
        return Err(IoError::InvariantViolation { path: dir.to_path_buf(), report });
    }
    RoadNetwork::new(constructs).map_err(|source| IoError::Road { path: dir.to_path_buf(), source })
}

/// Writes one file per construct type present.
pub fn write_road_network(dir: impl AsRef<Path>, rn: &RoadNetwork) -> Result<(), IoError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut by_type: BTreeMap<ConstructType, Vec<ConstructFile>> = BTreeMap::new();
    for c in rn.constructs() {
        by_type.entry(c.construct_type).or_default().push(ConstructFile {
            id: c.id.clone(),
            polygon: c.polygon.vertices.iter().map(|&p| p.into()).collect(),
            headings: c.headings.clone(),
        });
    }
    for (ty, items) in by_type {
        write_json(&dir.join(format!("{}.json", ty.as_str())), &items)?;
    }
    Ok(())
}

// Detections.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    frame: usize,
    bbox: [f64; 4],
    class: String,
    #[serde(default = "one")]
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<f64>,
}

fn one() -> f64 {
    1.0
}

pub fn detections_from_str(path: &Path, text: &str) -> Result<DetectionStream, IoError> {
    let mut stream = DetectionStream::new();
    let mut report = ValidationReport::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: DetectionRecord = serde_json::from_str(line).map_err(|e| parse_err(path, i, e))?;
        let det = Detection {
            frame_index: r.frame,
            bbox: BBox::new(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]),
            class_label: r.class,
            confidence: r.confidence,
            depth_hint: r.depth,
        };
        for v in model::detection_violations(&det, None) {
            report.violations.push(Violation::new(format!("line {}", i + 1), v.message));
        }
        stream.push(det);
    }
    if !report.is_empty() {
        return Err(IoError::InvariantViolation { path: path.to_path_buf(), report });
    }
    Ok(stream)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionStream, IoError> {
    let path = path.as_ref();
    detections_from_str(path, &read(path)?)
}

pub fn detections_to_string(stream: &DetectionStream) -> String {
    let mut out = String::new();
    for d in stream.iter() {
        let r = DetectionRecord {
            frame: d.frame_index,
            bbox: [d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2],
            class: d.class_label.clone(),
            confidence: d.confidence,
            depth: d.depth_hint,
        };
        let v = serde_json::to_value(&r).expect("serializable");
        out.push_str(&serde_json::to_string(&v).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn write_detections(path: impl AsRef<Path>, stream: &DetectionStream) -> Result<(), IoError> {
    write_text(path.as_ref(), &detections_to_string(stream))
}

// Tracks.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackFile {
    oid: String,
    #[serde(rename = "type")]
    object_type: String,
    samples: Vec<SampleFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleFile {
    frame: usize,
    timestamp: f64,
    bbox: [f64; 4],
    location: Option<[f64; 3]>,
}

pub fn tracks_to_string(objects: &[MovableObject]) -> String {
    let files: Vec<TrackFile> = objects
        .iter()
        .map(|o| TrackFile {
            oid: o.oid.clone(),
            object_type: o.object_type.clone(),
            samples: o
                .samples
                .iter()
                .map(|s| SampleFile {
                    frame: s.frame_index,
                    timestamp: s.timestamp,
                    bbox: [s.bbox.x1, s.bbox.y1, s.bbox.x2, s.bbox.y2],
                    location: s.location.map(|l| [l.x, l.y, l.z]),
                })
                .collect(),
        })
        .collect();
    to_canonical(&files)
}

pub fn tracks_from_str(path: &Path, text: &str) -> Result<Vec<MovableObject>, IoError> {
    let files: Vec<TrackFile> = parse(path, text)?;
    Ok(files
        .into_iter()
        .map(|t| MovableObject {
            oid: t.oid,
            object_type: t.object_type,
            samples: t
                .samples
                .into_iter()
                .map(|s| ObjectSample {
                    frame_index: s.frame,
                    timestamp: s.timestamp,
                    bbox: BBox::new(s.bbox[0], s.bbox[1], s.bbox[2], s.bbox[3]),
                    location: s.location.map(|l| Vec3::new(l[0], l[1], l[2])),
                })
                .collect(),
        })
        .collect())
}

pub fn write_tracks(path: impl AsRef<Path>, objects: &[MovableObject]) -> Result<(), IoError> {
    write_text(path.as_ref(), &tracks_to_string(objects))
}

pub fn load_tracks(path: impl AsRef<Path>) -> Result<Vec<MovableObject>, IoError> {
    let path = path.as_ref();
    tracks_from_str(path, &read(path)?)
}

// Manifests and stats.

pub fn write_manifest(path: impl AsRef<Path>, manifest: &[VideoManifest]) -> Result<(), IoError> {
    write_json(path.as_ref(), &json!({ "videos": manifest }))
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<VideoManifest>, IoError> {
    #[derive(Deserialize)]
    struct File {
        videos: Vec<VideoManifest>,
    }
    let path = path.as_ref();
    Ok(parse::<File>(path, &read(path)?)?.videos)
}

pub fn write_stats(path: impl AsRef<Path>, stats: &[VideoStats]) -> Result<(), IoError> {
    write_json(path.as_ref(), &json!({ "videos": stats }))
}

pub fn load_stats(path: impl AsRef<Path>) -> Result<Vec<VideoStats>, IoError> {
    #[derive(Deserialize)]
    struct File {
        videos: Vec<VideoStats>,
    }
    let path = path.as_ref();
    Ok(parse::<File>(path, &read(path)?)?.videos)
}

// Predicates.

/// Variable names used by the JSON predicate encoding. Objects are named
/// freely; construct variables are named by their type; `"camera"` is the
/// camera.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Names {
    pub objects: Vec<String>,
    pub geogs: Vec<GeogRef>,
    pub camera: bool,
}

impl Names {
    fn object(&mut self, name: &str) -> ObjRef {
        match self.objects.iter().position(|n| n == name) {
            Some(i) => ObjRef(i),
            None => {
                self.objects.push(name.to_string());
                ObjRef(self.objects.len() - 1)
            }
        }
    }

    fn geog(&mut self, ty: ConstructType) -> GeogRef {
        if let Some(g) = self.geogs.iter().find(|g| g.construct_type == ty) {
            return *g;
        }
        let g = GeogRef { id: self.geogs.len(), construct_type: ty };
        self.geogs.push(g);
        g
    }

    fn subject(&mut self, name: &str) -> Subject {
        if name == "camera" {
            self.camera = true;
            Subject::Camera(crate::predicate::CamRef)
        } else {
            Subject::Object(self.object(name))
        }
    }

    fn object_name(&self, o: ObjRef) -> String {
        self.objects.get(o.0).cloned().unwrap_or_else(|| format!("o{}", o.0))
    }

    fn subject_name(&self, s: &Subject) -> String {
        match s {
            Subject::Camera(_) => "camera".into(),
            Subject::Object(o) => self.object_name(*o),
        }
    }
}

fn pred_err(msg: impl Into<String>) -> IoError {
    IoError::Predicate(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, IoError> {
    obj.get(key).ok_or_else(|| pred_err(format!("missing field `{key}`")))
}

fn str_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str, IoError> {
    field(obj, key)?.as_str().ok_or_else(|| pred_err(format!("`{key}` must be a string")))
}

fn num_field(obj: &Map<String, Value>, key: &str) -> Result<f64, IoError> {
    field(obj, key)?.as_f64().ok_or_else(|| pred_err(format!("`{key}` must be a number")))
}

pub fn decode_predicate(v: &Value, names: &mut Names) -> Result<Predicate, IoError> {
    if let Some(b) = v.as_bool() {
        return Ok(if b { Predicate::True } else { Predicate::False });
    }
    let obj = v.as_object().ok_or_else(|| pred_err(format!("expected an object, got {v}")))?;
    if obj.len() != 1 {
        return Err(pred_err(format!("expected exactly one operator key, got {}", obj.len())));
    }
    let (op, arg) = obj.iter().next().expect("one entry");
    let list = |arg: &Value, names: &mut Names| -> Result<Vec<Predicate>, IoError> {
        arg.as_array()
            .ok_or_else(|| pred_err(format!("`{op}` takes an array")))?
            .iter()
            .map(|x| decode_predicate(x, names))
            .collect()
    };
    let args = || arg.as_object().ok_or_else(|| pred_err(format!("`{op}` takes an object")));
    Ok(match op.as_str() {
        "and" => Predicate::And(list(arg, names)?),
        "or" => Predicate::Or(list(arg, names)?),
        "not" => Predicate::Not(Box::new(decode_predicate(arg, names)?)),
        "type_eq" => {
            let a = args()?;
            Predicate::TypeEq { obj: names.object(str_field(a, "obj")?), label: str_field(a, "label")?.to_string() }
        }
        "distance" => {
            let a = args()?;
            let cmp = str_field(a, "cmp")?;
            Predicate::Distance {
                a: names.subject(str_field(a, "a")?),
                b: names.subject(str_field(a, "b")?),
                cmp: Comparator::parse(cmp).ok_or_else(|| pred_err(format!("unknown comparator `{cmp}`")))?,
                meters: num_field(a, "meters")?,
            }
        }
        "contains" => {
            let a = args()?;
            let ty: ConstructType = str_field(a, "geog")?.parse().map_err(pred_err)?;
            Predicate::Contains { geog: names.geog(ty), obj: names.object(str_field(a, "obj")?) }
        }
        "heading_diff" => {
            let a = args()?;
            Predicate::HeadingDiff {
                a: names.subject(str_field(a, "a")?),
                b: names.subject(str_field(a, "b")?),
                lo: num_field(a, "lo")?,
                hi: num_field(a, "hi")?,
            }
        }
        other => return Err(pred_err(format!("unknown operator `{other}`"))),
    })
}

pub fn encode_predicate(p: &Predicate, names: &Names) -> Result<Value, IoError> {
    let many = |ps: &[Predicate]| -> Result<Value, IoError> {
        Ok(Value::Array(ps.iter().map(|x| encode_predicate(x, names)).collect::<Result<_, _>>()?))
    };
    Ok(match p {
        Predicate::True => Value::Bool(true),
        Predicate::False => Value::Bool(false),
        Predicate::And(ps) => json!({ "and": many(ps)? }),
        Predicate::Or(ps) => json!({ "or": many(ps)? }),
        Predicate::Not(x) => json!({ "not": encode_predicate(x, names)? }),
        Predicate::TypeEq { obj, label } => json!({ "type_eq": { "obj": names.object_name(*obj), "label": label } }),
        Predicate::Distance { a, b, cmp, meters } => json!({ "distance": {
            "a": names.subject_name(a), "b": names.subject_name(b), "cmp": cmp.symbol(), "meters": meters } }),
        Predicate::Contains { geog, obj } => {
            json!({ "contains": { "geog": geog.construct_type.as_str(), "obj": names.object_name(*obj) } })
        }
        Predicate::HeadingDiff { a, b, lo, hi } => json!({ "heading_diff": {
            "a": names.subject_name(a), "b": names.subject_name(b), "lo": lo, "hi": hi } }),
        Predicate::Custom(c) => return Err(pred_err(format!("custom predicate `{}` has no file form", c.name))),
    })
}

// Workflows.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoEntry {
    pub camera: PathBuf,
    pub detections: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeEntry {
    GetObjects,
    SaveFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveEntry {
    pub mode: ModeEntry,
    #[serde(default)]
    pub annotate: bool,
    #[serde(default)]
    pub padding: usize,
}

impl Default for ObserveEntry {
    fn default() -> Self {
        Self { mode: ModeEntry::GetObjects, annotate: false, padding: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    /// 0 disables the clamp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_skip: Option<usize>,
}

/// A workflow file; relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub road_network: Option<PathBuf>,
    pub videos: Vec<VideoEntry>,
    /// Object variable names in declaration order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<String>,
    /// Chained filters.
    #[serde(default)]
    pub filters: Vec<Value>,
    #[serde(default)]
    pub observe: ObserveEntry,
    #[serde(default)]
    pub optimizations: crate::planner::OptimizationToggles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frustum_depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub struct LoadedWorkflow {
    pub file: WorkflowFile,
    pub base: PathBuf,
    pub world: World,
    pub names: Names,
    pub config: ObserveConfig,
}

impl LoadedWorkflow {
    pub fn mode(&self, out: &Path) -> ObserveMode {
        match self.file.observe.mode {
            ModeEntry::GetObjects => ObserveMode::GetObjects,
            ModeEntry::SaveFrames => ObserveMode::SaveFrames { out: out.to_path_buf(), annotate: self.file.observe.annotate },
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.base.join(self.file.out.clone().unwrap_or_else(|| PathBuf::from("out")))
    }
}

pub fn load_workflow(path: impl AsRef<Path>) -> Result<LoadedWorkflow, IoError> {
    let path = path.as_ref();
    let file: WorkflowFile = parse(path, &read(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    let mut names = Names { objects: file.objects.clone(), ..Names::default() };
    let filters: Vec<Predicate> = file.filters.iter().map(|v| decode_predicate(v, &mut names)).collect::<Result<_, _>>()?;

    let mut world = World::new();
    for _ in &names.objects {
        world.object();
    }
    if names.camera {
        world.camera();
    }
    for g in &names.geogs {
        world.geog_construct(g.construct_type);
    }
    if let Some(dir) = &file.road_network {
        world.add_geog_constructs(load_road_network(resolve(dir))?)?;
    }
    for v in &file.videos {
        let cam = load_camera_config(resolve(&v.camera))?;
        let dets = load_detections(resolve(&v.detections))?;
        world.add_video(cam, dets, v.frames.as_deref().map(resolve))?;
    }
    for p in filters {
        world.filter(p)?;
    }

    let mut config = ObserveConfig { toggles: file.optimizations, padding: file.observe.padding, ..ObserveConfig::default() };
    config.planner.frustum_depth = file.frustum_depth;
    if let Some(s) = &file.sampler {
        if let Some(v) = s.speed_mps {
            config.planner.speed_mps = v;
        }
        if let Some(m) = s.max_skip {
            config.planner.max_skip = (m > 0).then_some(m);
        }
    }
    Ok(LoadedWorkflow { file, base, world, names, config })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_CAMERA: &str = r#"{
  "camera_id": "c0", "width": 1280, "height": 720,
  "frames": [{"translation": [0, 0, 1.5], "rotation": [1, 0, 0, 0],
              "intrinsic": [[800, 0, 640], [0, 800, 360], [0, 0, 1]], "timestamp": 0}]
}"#;

    #[test]
    fn minimal_camera() {
        let c = camera_from_str(Path::new("c.json"), MINIMAL_CAMERA).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.frames[0].intrinsic, Intrinsic::new(800.0, 800.0, 0.0, 640.0, 360.0));
        let again = camera_from_str(Path::new("c.json"), &camera_to_string(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn missing_intrinsic_names_the_field() {
        let text = MINIMAL_CAMERA.replace(r#""intrinsic": [[800, 0, 640], [0, 800, 360], [0, 0, 1]], "#, "");
        let err = camera_from_str(Path::new("c.json"), &text).unwrap_err();
        assert!(matches!(&err, IoError::Parse { .. }) && err.to_string().contains("intrinsic"), "{err}");
    }

    #[test]
    fn repeated_timestamp_is_invalid() {
        let text = r#"{"camera_id": "c0", "width": 10, "height": 10, "frames": [
            {"translation": [0,0,1], "rotation": [1,0,0,0], "intrinsic": [[5,0,5],[0,5,5],[0,0,1]], "timestamp": 1},
            {"translation": [0,0,1], "rotation": [1,0,0,0], "intrinsic": [[5,0,5],[0,5,5],[0,0,1]], "timestamp": 1}]}"#;
        let err = camera_from_str(Path::new("c.json"), text).unwrap_err();
        assert!(matches!(err, IoError::InvariantViolation { .. }), "{err}");
    }

    #[test]
    fn quaternions_are_normalized() {
        let text = MINIMAL_CAMERA.replace("[1, 0, 0, 0]", "[2, 0, 0, 0]");
        let c = camera_from_str(Path::new("c.json"), &text).unwrap();
        assert_eq!(c.frames[0].rotation, Quaternion::IDENTITY);
    }

    #[test]
    fn detections_lines() {
        let text = r#"{"frame": 0, "bbox": [0, 0, 10, 10], "class": "car", "confidence": 0.9}
{"frame": 0, "bbox": [5, 5, 20, 20], "class": "human", "confidence": 0.8, "depth": 7.5}

{"frame": 2, "bbox": [1, 1, 2, 2], "class": "car", "confidence": 1.0}
"#;
        let s = detections_from_str(Path::new("d.ndjson"), text).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.at(0)[1].depth_hint, Some(7.5));
        assert_eq!(detections_from_str(Path::new("d"), &detections_to_string(&s)).unwrap(), s);
        assert!(detections_from_str(Path::new("d"), "").unwrap().is_empty());
        let bad = r#"{"frame": 0, "bbox": [10, 0, 10, 10], "class": "car", "confidence": 1}"#;
        assert!(matches!(detections_from_str(Path::new("d"), bad), Err(IoError::InvariantViolation { .. })));
        let broken = "{\"frame\": 0}\n{";
        assert!(matches!(detections_from_str(Path::new("d"), broken), Err(IoError::Parse { line: 1, .. })));
    }

    #[test]
    fn predicate_round_trip() {
        let v: Value = serde_json::from_str(
            r#"{"and": [
                {"or": [{"type_eq": {"obj": "o1", "label": "car"}}, {"type_eq": {"obj": "o1", "label": "truck"}}]},
                {"distance": {"a": "o1", "b": "camera", "cmp": "<", "meters": 50}},
                {"contains": {"geog": "intersection", "obj": "o1"}},
                {"heading_diff": {"a": "o1", "b": "camera", "lo": 135, "hi": 225}},
                {"not": false}
            ]}"#,
        )
        .unwrap();
        let mut names = Names::default();
        let p = decode_predicate(&v, &mut names).unwrap();
        assert_eq!(names.objects, ["o1"]);
        assert!(names.camera);
        let back = encode_predicate(&p, &names).unwrap();
        assert_eq!(decode_predicate(&back, &mut names.clone()).unwrap(), p);
        assert!(decode_predicate(&serde_json::json!({"nope": 1}), &mut Names::default()).is_err());
    }
}
