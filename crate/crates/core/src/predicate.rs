//! Filter predicates over objects, the camera and road constructs.
//!
//! A [`Predicate`] is a plain boolean AST. Besides evaluation, this module
//! holds the static analyses the planner and the pruners rely on: which
//! processing steps a predicate needs, which object types can possibly
//! satisfy it, which construct types it tests containment against, and the
//! camera-distance bound it implies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{BitAnd, BitOr, Not};
use std::sync::Arc;

use crate::geometry;
use crate::model::{CameraFrame, ConstructType, MovableObject, RoadNetwork, Vec3};
use crate::query;

/// An object variable, identified by declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjRef(pub usize);

/// The camera of whichever video is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CamRef;

/// A construct variable; it ranges over every construct of one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeogRef {
    pub id: usize,
    pub construct_type: ConstructType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Object(ObjRef),
    Camera(CamRef),
}

impl From<ObjRef> for Subject {
    fn from(o: ObjRef) -> Self {
        Subject::Object(o)
    }
}

impl From<CamRef> for Subject {
    fn from(c: CamRef) -> Self {
        Subject::Camera(c)
    }
}

impl From<&ObjRef> for Subject {
    fn from(o: &ObjRef) -> Self {
        Subject::Object(*o)
    }
}

impl From<&CamRef> for Subject {
    fn from(c: &CamRef) -> Self {
        Subject::Camera(*c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn apply(&self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            _ => return None,
        })
    }
}

/// Arguments handed to a user-defined leaf.
pub struct CustomArgs<'a> {
    pub objects: Vec<&'a MovableObject>,
    pub frame_index: usize,
    pub camera: &'a CameraFrame,
    pub roads: &'a RoadNetwork,
}

pub type CustomFn = dyn Fn(&CustomArgs<'_>) -> bool + Send + Sync;

/// An opaque, named predicate over some object variables.
#[derive(Clone)]
pub struct CustomPredicate {
    pub name: String,
    pub objects: Vec<ObjRef>,
    pub func: Arc<CustomFn>,
}

impl fmt::Debug for CustomPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPredicate").field("name", &self.name).field("objects", &self.objects).finish()
    }
}

impl PartialEq for CustomPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.objects == other.objects && Arc::ptr_eq(&self.func, &other.func)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    True,
    False,
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
    TypeEq { obj: ObjRef, label: String },
    Distance { a: Subject, b: Subject, cmp: Comparator, meters: f64 },
    Contains { geog: GeogRef, obj: ObjRef },
    /// `(heading(a) - heading(b)) mod 360` within `[lo, hi]`, inclusive. When
    /// `lo > hi` the interval wraps through 0.
    HeadingDiff { a: Subject, b: Subject, lo: f64, hi: f64 },
    Custom(CustomPredicate),
}

impl BitAnd for Predicate {
    type Output = Predicate;

    fn bitand(self, rhs: Predicate) -> Predicate {
        match self {
            Predicate::And(mut v) => {
                v.push(rhs);
                Predicate::And(v)
            }
            lhs => Predicate::And(vec![lhs, rhs]),
        }
    }
}

impl BitOr for Predicate {
    type Output = Predicate;

    fn bitor(self, rhs: Predicate) -> Predicate {
        match self {
            Predicate::Or(mut v) => {
                v.push(rhs);
                Predicate::Or(v)
            }
            lhs => Predicate::Or(vec![lhs, rhs]),
        }
    }
}

impl Not for Predicate {
    type Output = Predicate;

    fn not(self) -> Predicate {
        Predicate::Not(Box::new(self))
    }
}

impl ObjRef {
    pub fn type_eq(&self, label: impl Into<String>) -> Predicate {
        Predicate::TypeEq { obj: *self, label: label.into() }
    }
}

pub struct DistanceExpr {
    a: Subject,
    b: Subject,
}

impl DistanceExpr {
    fn with(self, cmp: Comparator, meters: f64) -> Predicate {
        Predicate::Distance { a: self.a, b: self.b, cmp, meters }
    }

    pub fn lt(self, meters: f64) -> Predicate {
        self.with(Comparator::Lt, meters)
    }

    pub fn le(self, meters: f64) -> Predicate {
        self.with(Comparator::Le, meters)
    }

    pub fn gt(self, meters: f64) -> Predicate {
        self.with(Comparator::Gt, meters)
    }

    pub fn ge(self, meters: f64) -> Predicate {
        self.with(Comparator::Ge, meters)
    }
}

/// Euclidean 3D distance between two subjects, finished with a comparison.
pub fn distance(a: impl Into<Subject>, b: impl Into<Subject>) -> DistanceExpr {
    DistanceExpr { a: a.into(), b: b.into() }
}

pub fn contains(geog: &GeogRef, obj: &ObjRef) -> Predicate {
    Predicate::Contains { geog: *geog, obj: *obj }
}

pub fn heading_diff(a: impl Into<Subject>, b: impl Into<Subject>, lo: f64, hi: f64) -> Predicate {
    Predicate::HeadingDiff { a: a.into(), b: b.into(), lo, hi }
}

pub fn custom<F>(name: impl Into<String>, objects: &[ObjRef], func: F) -> Predicate
where
    F: Fn(&CustomArgs<'_>) -> bool + Send + Sync + 'static,
{
    Predicate::Custom(CustomPredicate { name: name.into(), objects: objects.to_vec(), func: Arc::new(func) })
}

/// Conjunction of a list; the empty conjunction is `True`.
pub fn conjoin(preds: impl IntoIterator<Item = Predicate>) -> Predicate {
    let mut v: Vec<Predicate> = preds.into_iter().collect();
    match v.len() {
        0 => Predicate::True,
        1 => v.pop().expect("one element"),
        _ => Predicate::And(v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessingStep {
    Decode,
    Detect,
    Estimate3D,
    Track,
}

impl ProcessingStep {
    pub const ALL: [ProcessingStep; 4] =
        [ProcessingStep::Decode, ProcessingStep::Detect, ProcessingStep::Estimate3D, ProcessingStep::Track];
}

/// A prefix of the processing pipeline `Decode -> Detect -> Estimate3D -> Track`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepSet {
    last: Option<ProcessingStep>,
}

impl StepSet {
    pub const EMPTY: StepSet = StepSet { last: None };
    pub const FULL: StepSet = StepSet { last: Some(ProcessingStep::Track) };

    /// The smallest prefix-closed set containing `step`.
    pub fn through(step: ProcessingStep) -> Self {
        Self { last: Some(step) }
    }

    pub fn contains(&self, step: ProcessingStep) -> bool {
        self.last.is_some_and(|l| step <= l)
    }

    pub fn union(self, other: StepSet) -> StepSet {
        self.max(other)
    }

    pub fn steps(&self) -> Vec<ProcessingStep> {
        ProcessingStep::ALL.into_iter().filter(|s| self.contains(*s)).collect()
    }

    pub fn from_steps(steps: impl IntoIterator<Item = ProcessingStep>) -> Self {
        steps.into_iter().fold(StepSet::EMPTY, |acc, s| acc.union(StepSet::through(s)))
    }
}

fn involves_object(a: &Subject, b: &Subject) -> bool {
    matches!(a, Subject::Object(_)) || matches!(b, Subject::Object(_))
}

impl Predicate {
    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Predicate)) {
        f(self);
        match self {
            Predicate::And(v) | Predicate::Or(v) => v.iter().for_each(|c| c.walk(f)),
            Predicate::Not(c) => c.walk(f),
            _ => {}
        }
    }

    /// Boolean evaluation with leaves decided by `atom`.
    pub fn eval_atoms(&self, atom: &mut impl FnMut(&Predicate) -> bool) -> bool {
        match self {
            Predicate::True => true,
            Predicate::False => false,
            Predicate::And(v) => v.iter().all(|c| c.eval_atoms(atom)),
            Predicate::Or(v) => v.iter().any(|c| c.eval_atoms(atom)),
            Predicate::Not(c) => !c.eval_atoms(atom),
            leaf => atom(leaf),
        }
    }

    pub fn object_vars(&self) -> BTreeSet<ObjRef> {
        let mut out = BTreeSet::new();
        self.walk(&mut |p| match p {
            Predicate::TypeEq { obj, .. } | Predicate::Contains { obj, .. } => {
                out.insert(*obj);
            }
            Predicate::Distance { a, b, .. } | Predicate::HeadingDiff { a, b, .. } => {
                for s in [a, b] {
                    if let Subject::Object(o) = s {
                        out.insert(*o);
                    }
                }
            }
            Predicate::Custom(c) => out.extend(c.objects.iter().copied()),
            _ => {}
        });
        out
    }

    pub fn geog_vars(&self) -> BTreeSet<GeogRef> {
        let mut out = BTreeSet::new();
        self.walk(&mut |p| {
            if let Predicate::Contains { geog, .. } = p {
                out.insert(*geog);
            }
        });
        out
    }

    pub fn uses_camera(&self) -> bool {
        let mut found = false;
        self.walk(&mut |p| {
            if let Predicate::Distance { a, b, .. } | Predicate::HeadingDiff { a, b, .. } = p {
                found |= matches!(a, Subject::Camera(_)) || matches!(b, Subject::Camera(_));
            }
        });
        found
    }

    pub fn has_custom(&self) -> bool {
        let mut found = false;
        self.walk(&mut |p| found |= matches!(p, Predicate::Custom(_)));
        found
    }

    /// Renames object variables.
    pub fn rename(&self, map: &impl Fn(ObjRef) -> ObjRef) -> Predicate {
        let subj = |s: &Subject| match s {
            Subject::Object(o) => Subject::Object(map(*o)),
            c => *c,
        };
        match self {
            Predicate::True => Predicate::True,
            Predicate::False => Predicate::False,
            Predicate::And(v) => Predicate::And(v.iter().map(|c| c.rename(map)).collect()),
            Predicate::Or(v) => Predicate::Or(v.iter().map(|c| c.rename(map)).collect()),
            Predicate::Not(c) => Predicate::Not(Box::new(c.rename(map))),
            Predicate::TypeEq { obj, label } => Predicate::TypeEq { obj: map(*obj), label: label.clone() },
            Predicate::Distance { a, b, cmp, meters } => {
                Predicate::Distance { a: subj(a), b: subj(b), cmp: *cmp, meters: *meters }
            }
            Predicate::Contains { geog, obj } => Predicate::Contains { geog: *geog, obj: map(*obj) },
            Predicate::HeadingDiff { a, b, lo, hi } => Predicate::HeadingDiff { a: subj(a), b: subj(b), lo: *lo, hi: *hi },
            Predicate::Custom(c) => Predicate::Custom(CustomPredicate {
                name: c.name.clone(),
                objects: c.objects.iter().map(|o| map(*o)).collect(),
                func: c.func.clone(),
            }),
        }
    }

    /// Order-insensitive structural key: `And`/`Or` children are sorted and the
    /// operands of symmetric atoms (distance) are ordered.
    pub fn canonical_key(&self) -> String {
        fn subj(s: &Subject) -> String {
            match s {
                Subject::Object(o) => format!("o{}", o.0),
                Subject::Camera(_) => "cam".to_string(),
            }
        }
        match self {
            Predicate::True => "T".into(),
            Predicate::False => "F".into(),
            Predicate::And(v) | Predicate::Or(v) => {
                let mut keys: Vec<String> = v.iter().map(Predicate::canonical_key).collect();
                keys.sort();
                let op = if matches!(self, Predicate::And(_)) { "and" } else { "or" };
                format!("{op}({})", keys.join(","))
            }
            Predicate::Not(c) => format!("not({})", c.canonical_key()),
            Predicate::TypeEq { obj, label } => format!("type(o{})={label:?}", obj.0),
            Predicate::Distance { a, b, cmp, meters } => {
                let mut s = [subj(a), subj(b)];
                s.sort();
                format!("dist({},{}){}{meters:?}", s[0], s[1], cmp.symbol())
            }
            Predicate::Contains { geog, obj } => format!("contains({},o{})", geog.construct_type, obj.0),
            Predicate::HeadingDiff { a, b, lo, hi } => {
                let key = format!("hd({},{})[{lo:?},{hi:?}]", subj(a), subj(b));
                // Swapping operands mirrors the interval around 360.
                if *lo > 0.0 && *hi < 360.0 && lo <= hi {
                    let mirrored = format!("hd({},{})[{:?},{:?}]", subj(b), subj(a), 360.0 - hi, 360.0 - lo);
                    key.min(mirrored)
                } else {
                    key
                }
            }
            Predicate::Custom(c) => {
                let objs: Vec<String> = c.objects.iter().map(|o| format!("o{}", o.0)).collect();
                format!("custom:{}@{:p}({})", c.name, Arc::as_ptr(&c.func) as *const (), objs.join(","))
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn subj(s: &Subject) -> String {
            match s {
                Subject::Object(o) => format!("o{}", o.0),
                Subject::Camera(_) => "cam".into(),
            }
        }
        fn join(f: &mut fmt::Formatter<'_>, v: &[Predicate], op: &str) -> fmt::Result {
            write!(f, "(")?;
            for (i, c) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        }
        match self {
            Predicate::True => write!(f, "true"),
            Predicate::False => write!(f, "false"),
            Predicate::And(v) => join(f, v, "&"),
            Predicate::Or(v) => join(f, v, "|"),
            Predicate::Not(c) => write!(f, "!{c}"),
            Predicate::TypeEq { obj, label } => write!(f, "o{}.type == '{label}'", obj.0),
            Predicate::Distance { a, b, cmp, meters } => {
                write!(f, "distance({}, {}) {} {meters}", subj(a), subj(b), cmp.symbol())
            }
            Predicate::Contains { geog, obj } => write!(f, "contains({}, o{})", geog.construct_type, obj.0),
            Predicate::HeadingDiff { a, b, lo, hi } => {
                write!(f, "headingDiff({}, {}, between=[{lo}, {hi}])", subj(a), subj(b))
            }
            Predicate::Custom(c) => {
                let objs: Vec<String> = c.objects.iter().map(|o| format!("o{}", o.0)).collect();
                write!(f, "{}({})", c.name, objs.join(", "))
            }
        }
    }
}

/// Processing steps needed to evaluate `p`.
pub fn required_steps(p: &Predicate) -> StepSet {
    match p {
        Predicate::True | Predicate::False => StepSet::EMPTY,
        Predicate::And(v) | Predicate::Or(v) => v.iter().map(required_steps).fold(StepSet::EMPTY, StepSet::union),
        Predicate::Not(c) => required_steps(c),
        Predicate::TypeEq { .. } => StepSet::through(ProcessingStep::Detect),
        Predicate::Contains { .. } => StepSet::through(ProcessingStep::Estimate3D),
        Predicate::Distance { a, b, .. } => {
            if involves_object(a, b) {
                StepSet::through(ProcessingStep::Estimate3D)
            } else {
                StepSet::EMPTY
            }
        }
        Predicate::HeadingDiff { a, b, .. } => {
            if involves_object(a, b) {
                StepSet::FULL
            } else {
                StepSet::EMPTY
            }
        }
        Predicate::Custom(_) => StepSet::FULL,
    }
}

/// Labels an object bound to `var` must carry for `p` to hold, or `None`
/// when no finite set is derivable.
pub fn allowed_types(p: &Predicate, var: ObjRef) -> Option<BTreeSet<String>> {
    match p {
        // `False` admits nothing.
        Predicate::False => Some(BTreeSet::new()),
        Predicate::TypeEq { obj, label } if *obj == var => Some(BTreeSet::from([label.clone()])),
        Predicate::And(v) => v.iter().filter_map(|c| allowed_types(c, var)).reduce(|a, b| &a & &b),
        Predicate::Or(v) => {
            let mut acc = BTreeSet::new();
            for c in v {
                acc.extend(allowed_types(c, var)?);
            }
            Some(acc)
        }
        // Negation and every other atom leave the type unconstrained.
        _ => None,
    }
}

/// Per-variable type constraints, for every object variable in `p`.
pub fn type_constraints(p: &Predicate) -> BTreeMap<ObjRef, Option<BTreeSet<String>>> {
    p.object_vars().into_iter().map(|v| (v, allowed_types(p, v))).collect()
}

/// Labels outside which no object can take part in a satisfying binding.
/// `None` disables type-based pruning.
pub fn relevant_object_types(p: &Predicate) -> Option<BTreeSet<String>> {
    if p.has_custom() {
        return None;
    }
    let vars = p.object_vars();
    if vars.is_empty() {
        return None;
    }
    let mut out = BTreeSet::new();
    for v in vars {
        out.extend(allowed_types(p, v)?);
    }
    Some(out)
}

/// Construct types tested by `contains` anywhere in `p`.
pub fn contains_targets(p: &Predicate) -> BTreeSet<ConstructType> {
    p.geog_vars().into_iter().map(|g| g.construct_type).collect()
}

/// Largest `d` over conjunctively required `distance(obj, cam) < d` atoms.
pub fn distance_bound(p: &Predicate) -> Option<f64> {
    match p {
        Predicate::Distance { a, b, cmp: Comparator::Lt | Comparator::Le, meters } => {
            let obj_cam = matches!((a, b), (Subject::Object(_), Subject::Camera(_)) | (Subject::Camera(_), Subject::Object(_)));
            obj_cam.then_some(*meters)
        }
        Predicate::And(v) => v.iter().filter_map(distance_bound).reduce(f64::max),
        Predicate::Or(v) => {
            let mut best: Option<f64> = None;
            for c in v {
                let d = distance_bound(c)?;
                best = Some(best.map_or(d, |b| b.max(d)));
            }
            best
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredicateError {
    #[error("unknown reference: {0}")]
    UnknownReference(String),
    #[error("heading interval [{0}, {1}] must lie within [0, 360]")]
    InvalidInterval(f64, f64),
    #[error("non-finite distance threshold")]
    InvalidDistance,
}

/// Variables declared by a world.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Declarations {
    pub objects: usize,
    pub camera: bool,
    pub geogs: Vec<GeogRef>,
}

pub fn validate(p: &Predicate, decl: &Declarations) -> Result<(), PredicateError> {
    let mut err = None;
    p.walk(&mut |node| {
        if err.is_some() {
            return;
        }
        match node {
            Predicate::HeadingDiff { lo, hi, .. } => {
                if !(0.0..=360.0).contains(lo) || !(0.0..=360.0).contains(hi) {
                    err = Some(PredicateError::InvalidInterval(*lo, *hi));
                }
            }
            Predicate::Distance { meters, .. } if !meters.is_finite() => err = Some(PredicateError::InvalidDistance),
            _ => {}
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if let Some(o) = p.object_vars().into_iter().find(|o| o.0 >= decl.objects) {
        return Err(PredicateError::UnknownReference(format!("object o{}", o.0)));
    }
    if p.uses_camera() && !decl.camera {
        return Err(PredicateError::UnknownReference("camera".into()));
    }
    if let Some(g) = p.geog_vars().into_iter().find(|g| !decl.geogs.contains(g)) {
        return Err(PredicateError::UnknownReference(format!("construct variable {} ({})", g.id, g.construct_type)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("object {oid} has no sample at frame {frame_index}")]
    MissingSample { oid: String, frame_index: usize },
    #[error("object variable o{0} is not bound")]
    Unbound(usize),
}

/// Values bound to the variables of a predicate at one frame.
pub struct Bindings<'a> {
    pub objects: &'a [(ObjRef, &'a MovableObject)],
    pub camera: &'a CameraFrame,
    pub roads: &'a RoadNetwork,
}

impl<'a> Bindings<'a> {
    fn object(&self, v: ObjRef) -> Result<&'a MovableObject, EvalError> {
        self.objects.iter().find(|(r, _)| *r == v).map(|(_, o)| *o).ok_or(EvalError::Unbound(v.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Number of samples back used to derive object headings.
    pub heading_window: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { heading_window: 1 }
    }
}

pub fn heading_in(diff: f64, lo: f64, hi: f64) -> bool {
    if lo <= hi {
        (lo..=hi).contains(&diff)
    } else {
        diff >= lo || diff <= hi
    }
}

pub fn evaluate(p: &Predicate, b: &Bindings<'_>, frame_index: usize) -> Result<bool, EvalError> {
    evaluate_with(p, b, frame_index, &EvalOptions::default())
}

pub fn evaluate_with(p: &Predicate, b: &Bindings<'_>, frame_index: usize, opts: &EvalOptions) -> Result<bool, EvalError> {
    for v in p.object_vars() {
        let obj = b.object(v)?;
        if obj.sample_at(frame_index).is_none() {
            return Err(EvalError::MissingSample { oid: obj.oid.clone(), frame_index });
        }
    }
    let location = |s: &Subject| -> Option<Vec3> {
        match s {
            Subject::Camera(_) => Some(b.camera.translation),
            Subject::Object(o) => b.object(*o).ok()?.sample_at(frame_index)?.location,
        }
    };
    let heading = |s: &Subject| -> Option<f64> {
        match s {
            Subject::Camera(_) => geometry::camera_heading(b.camera).ok(),
            Subject::Object(o) => query::object_heading(b.object(*o).ok()?, frame_index, opts.heading_window).ok(),
        }
    };
    Ok(p.eval_atoms(&mut |atom| match atom {
        Predicate::TypeEq { obj, label } => b.object(*obj).map(|o| &o.object_type == label).unwrap_or(false),
        Predicate::Distance { a, b: other, cmp, meters } => match (location(a), location(other)) {
            (Some(x), Some(y)) => cmp.apply(x.distance(&y), *meters),
            _ => false,
        },
        Predicate::Contains { geog, obj } => location(&Subject::Object(*obj))
            .map(|l| b.roads.any_contains(geog.construct_type, l.xy()))
            .unwrap_or(false),
        Predicate::HeadingDiff { a, b: other, lo, hi } => match (heading(a), heading(other)) {
            (Some(ha), Some(hb)) => heading_in(geometry::normalize_degrees(ha - hb), *lo, *hi),
            _ => false,
        },
        Predicate::Custom(c) => {
            let objects: Option<Vec<&MovableObject>> = c.objects.iter().map(|o| b.object(*o).ok()).collect();
            match objects {
                Some(objects) => {
                    (c.func)(&CustomArgs { objects, frame_index, camera: b.camera, roads: b.roads })
                }
                None => false,
            }
        }
        _ => unreachable!("connectives are handled by eval_atoms"),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, GeographicConstruct, Intrinsic, ObjectSample, Quaternion};

    fn vars() -> (ObjRef, CamRef, GeogRef) {
        (ObjRef(0), CamRef, GeogRef { id: 0, construct_type: ConstructType::Intersection })
    }

    pub(crate) fn oncoming() -> Predicate {
        let (obj, cam, intersection) = vars();
        (obj.type_eq("car") | obj.type_eq("truck"))
            & distance(obj, cam).lt(50.0)
            & contains(&intersection, &obj)
            & heading_diff(obj, cam, 135.0, 225.0)
    }

    #[test]
    fn required_steps_examples() {
        let (obj, _, intersection) = vars();
        assert_eq!(required_steps(&obj.type_eq("car")).steps(), vec![ProcessingStep::Decode, ProcessingStep::Detect]);
        assert_eq!(
            required_steps(&contains(&intersection, &obj)).steps(),
            vec![ProcessingStep::Decode, ProcessingStep::Detect, ProcessingStep::Estimate3D]
        );
        assert_eq!(required_steps(&oncoming()), StepSet::FULL);
    }

    #[test]
    fn relevant_types_examples() {
        let (obj, _, intersection) = vars();
        assert_eq!(relevant_object_types(&oncoming()), Some(BTreeSet::from(["car".to_string(), "truck".to_string()])));
        let p = obj.type_eq("human") & contains(&intersection, &obj);
        assert_eq!(relevant_object_types(&p), Some(BTreeSet::from(["human".to_string()])));
        assert_eq!(relevant_object_types(&!obj.type_eq("car")), None);
        let contradiction = obj.type_eq("car") & obj.type_eq("truck");
        assert_eq!(relevant_object_types(&contradiction), Some(BTreeSet::new()));
    }

    #[test]
    fn relevant_types_need_every_variable_bounded() {
        let (a, b) = (ObjRef(0), ObjRef(1));
        let p = a.type_eq("car") & distance(a, b).lt(5.0);
        assert_eq!(relevant_object_types(&p), None);
        let q = a.type_eq("car") & b.type_eq("human");
        assert_eq!(relevant_object_types(&q), Some(BTreeSet::from(["car".to_string(), "human".to_string()])));
    }

    #[test]
    fn contains_targets_examples() {
        let (a, b) = (ObjRef(0), ObjRef(1));
        let lane = GeogRef { id: 1, construct_type: ConstructType::Lane };
        let (_, _, intersection) = vars();
        assert_eq!(contains_targets(&oncoming()), BTreeSet::from([ConstructType::Intersection]));
        assert!(contains_targets(&a.type_eq("car")).is_empty());
        let p = contains(&lane, &a) & contains(&intersection, &b);
        assert_eq!(contains_targets(&p), BTreeSet::from([ConstructType::Lane, ConstructType::Intersection]));
    }

    #[test]
    fn distance_bound_examples() {
        let (obj, cam, _) = vars();
        assert_eq!(distance_bound(&oncoming()), Some(50.0));
        assert_eq!(distance_bound(&obj.type_eq("car")), None);
        let p = (distance(obj, cam).lt(50.0) | distance(obj, cam).lt(80.0)) & obj.type_eq("car");
        assert_eq!(distance_bound(&p), Some(80.0));
        assert_eq!(distance_bound(&distance(obj, cam).gt(10.0)), None);
        assert_eq!(distance_bound(&(distance(obj, cam).lt(10.0) | obj.type_eq("car"))), None);
    }

    fn object(oid: &str, ty: &str, pts: &[(usize, f64, f64)]) -> MovableObject {
        MovableObject {
            oid: oid.into(),
            object_type: ty.into(),
            samples: pts
                .iter()
                .map(|&(f, x, y)| ObjectSample {
                    frame_index: f,
                    timestamp: f as f64,
                    bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
                    location: Some(Vec3::new(x, y, 0.0)),
                })
                .collect(),
        }
    }

    fn camera_at(x: f64, y: f64, yaw: f64) -> CameraFrame {
        CameraFrame {
            frame_index: 1,
            translation: Vec3::new(x, y, 0.0),
            rotation: Quaternion::looking(yaw, 0.0),
            intrinsic: Intrinsic::new(1.0, 1.0, 0.0, 0.0, 0.0),
            timestamp: 1.0,
            width: 2,
            height: 2,
        }
    }

    #[test]
    fn evaluate_examples() {
        let (obj, cam, intersection) = vars();
        let roads = RoadNetwork::new(vec![GeographicConstruct::new(
            "i",
            ConstructType::Intersection,
            crate::geometry::Polygon2D::rect(0.0, 0.0, 1.0, 1.0).vertices,
            vec![],
        )])
        .unwrap();
        let cam_frame = camera_at(0.0, 0.0, 0.0);

        let car = object("a", "car", &[(0, 4.0, 4.0), (1, 3.0, 4.0)]);
        let binding = [(obj, &car)];
        let b = Bindings { objects: &binding, camera: &cam_frame, roads: &roads };
        assert!(evaluate(&distance(obj, cam).lt(6.0), &b, 1).unwrap());
        assert!(!evaluate(&distance(obj, cam).lt(5.0), &b, 1).unwrap());
        // Heading 180 (moving west) against camera heading 0.
        assert!(evaluate(&heading_diff(obj, cam, 135.0, 225.0), &b, 1).unwrap());
        assert!(!evaluate(&contains(&intersection, &obj), &b, 1).unwrap());

        let inside = object("b", "car", &[(1, 0.5, 0.5)]);
        let binding = [(obj, &inside)];
        let b = Bindings { objects: &binding, camera: &cam_frame, roads: &roads };
        assert!(evaluate(&contains(&intersection, &obj), &b, 1).unwrap());
        assert!(matches!(evaluate(&obj.type_eq("car"), &b, 0), Err(EvalError::MissingSample { .. })));
    }

    #[test]
    fn empty_network_never_contains() {
        let (obj, _, intersection) = vars();
        let car = object("a", "car", &[(0, 0.0, 0.0)]);
        let roads = RoadNetwork::default();
        let cam_frame = camera_at(0.0, 0.0, 0.0);
        let binding = [(obj, &car)];
        let b = Bindings { objects: &binding, camera: &cam_frame, roads: &roads };
        assert!(!evaluate(&contains(&intersection, &obj), &b, 0).unwrap());
    }

    #[test]
    fn wrapping_interval() {
        assert!(heading_in(350.0, 315.0, 45.0));
        assert!(heading_in(10.0, 315.0, 45.0));
        assert!(!heading_in(180.0, 315.0, 45.0));
        assert!(heading_in(135.0, 135.0, 225.0));
        assert!(heading_in(225.0, 135.0, 225.0));
    }

    #[test]
    fn validate_rejects_undeclared() {
        let (obj, _, intersection) = vars();
        let decl = Declarations { objects: 1, camera: true, geogs: vec![intersection] };
        assert!(validate(&oncoming(), &decl).is_ok());
        let p = ObjRef(3).type_eq("car");
        assert!(matches!(validate(&p, &decl), Err(PredicateError::UnknownReference(_))));
        let no_cam = Declarations { camera: false, ..decl.clone() };
        assert!(validate(&oncoming(), &no_cam).is_err());
        let bad = heading_diff(obj, CamRef, -5.0, 10.0);
        assert!(matches!(validate(&bad, &decl), Err(PredicateError::InvalidInterval(..))));
    }

    #[test]
    fn canonical_key_ignores_child_order() {
        let (a, b) = (ObjRef(0), ObjRef(1));
        let p = a.type_eq("car") & b.type_eq("car") & distance(a, b).lt(3.0);
        let swapped = p.rename(&|o| ObjRef(1 - o.0));
        assert_eq!(p.canonical_key(), swapped.canonical_key());
        let asym = a.type_eq("car") & b.type_eq("truck");
        assert_ne!(asym.canonical_key(), asym.rename(&|o| ObjRef(1 - o.0)).canonical_key());
    }

    #[test]
    fn custom_leaves_are_opaque() {
        let (obj, _, _) = vars();
        let p = obj.type_eq("car") & custom("big", &[obj], |_| true);
        assert_eq!(required_steps(&p), StepSet::FULL);
        assert_eq!(relevant_object_types(&p), None);
    }

    #[test]
    fn stepset_is_prefix_closed() {
        let s = StepSet::from_steps([ProcessingStep::Estimate3D]);
        assert!(s.contains(ProcessingStep::Decode) && s.contains(ProcessingStep::Detect));
        assert!(!s.contains(ProcessingStep::Track));
    }
}
