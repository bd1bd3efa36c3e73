//! Rule-based video processing plans.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::estimator::EstimatorKind;
use crate::model::ConstructType;
use crate::predicate::{self, Predicate, ProcessingStep};
use crate::sampler::{DEFAULT_MAX_SKIP, DEFAULT_SPEED_MPS};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanStep {
    RoadVisibilityPrune { depth: f64, targets: BTreeSet<ConstructType> },
    Decode,
    Detect,
    ObjectTypePrune { types: BTreeSet<String> },
    Estimate3D(EstimatorKind),
    ExitFrameSample { speed_mps: f64, max_skip: Option<usize>, depth: f64 },
    Track,
}

impl PlanStep {
    pub fn name(&self) -> &'static str {
        match self {
            PlanStep::RoadVisibilityPrune { .. } => "RoadVisibilityPrune",
            PlanStep::Decode => "Decode",
            PlanStep::Detect => "Detect",
            PlanStep::ObjectTypePrune { .. } => "ObjectTypePrune",
            PlanStep::Estimate3D(_) => "Estimate3D",
            PlanStep::ExitFrameSample { .. } => "ExitFrameSample",
            PlanStep::Track => "Track",
        }
    }
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            PlanStep::RoadVisibilityPrune { depth, targets } => write!(f, " depth={depth} targets={}", join(targets)),
            PlanStep::ObjectTypePrune { types } => write!(f, " types={}", join(types)),
            PlanStep::Estimate3D(kind) => write!(
                f,
                " estimator={}",
                match kind {
                    EstimatorKind::GeometryBased => "geometry",
                    EstimatorKind::ExternalDepth => "external-depth",
                }
            ),
            PlanStep::ExitFrameSample { speed_mps, max_skip, depth } => {
                let skip = max_skip.map_or("none".to_string(), |m| m.to_string());
                write!(f, " speed_mps={speed_mps} max_skip={skip} depth={depth}")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
}

impl ExecutionPlan {
    pub fn names(&self) -> Vec<&'static str> {
        self.steps.iter().map(PlanStep::name).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.steps.iter().any(|s| s.name() == name)
    }

    pub fn rvp(&self) -> Option<(f64, &BTreeSet<ConstructType>)> {
        self.steps.iter().find_map(|s| match s {
            PlanStep::RoadVisibilityPrune { depth, targets } => Some((*depth, targets)),
            _ => None,
        })
    }

    pub fn otp(&self) -> Option<&BTreeSet<String>> {
        self.steps.iter().find_map(|s| match s {
            PlanStep::ObjectTypePrune { types } => Some(types),
            _ => None,
        })
    }

    pub fn estimator(&self) -> Option<EstimatorKind> {
        self.steps.iter().find_map(|s| match s {
            PlanStep::Estimate3D(k) => Some(*k),
            _ => None,
        })
    }

    pub fn sampler(&self) -> Option<(f64, Option<usize>, f64)> {
        self.steps.iter().find_map(|s| match s {
            PlanStep::ExitFrameSample { speed_mps, max_skip, depth } => Some((*speed_mps, *max_skip, *depth)),
            _ => None,
        })
    }

    /// Checks the placement rules; returns the first one broken.
    pub fn check_order(&self) -> Result<(), String> {
        let pos = |name: &str| self.steps.iter().position(|s| s.name() == name);
        if let Some(i) = pos("RoadVisibilityPrune") {
            if i != 0 {
                return Err("RoadVisibilityPrune must be first".into());
            }
        }
        if let Some(i) = pos("ObjectTypePrune") {
            if pos("Detect").map(|d| d + 1) != Some(i) {
                return Err("ObjectTypePrune must follow Detect".into());
            }
        }
        if let Some(i) = pos("ExitFrameSample") {
            if pos("Estimate3D").is_none_or(|e| e + 1 != i) || pos("Track") != Some(i + 1) {
                return Err("ExitFrameSample must sit between Estimate3D and Track".into());
            }
        }
        let order: Vec<usize> = ["Decode", "Detect", "Estimate3D", "Track"].iter().filter_map(|n| pos(n)).collect();
        if order.windows(2).any(|w| w[0] > w[1]) {
            return Err("processing steps out of order".into());
        }
        Ok(())
    }
}

impl fmt::Display for ExecutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "{}. {s}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizationToggles {
    pub rvp: bool,
    pub otp: bool,
    pub geo3d: bool,
    pub efs: bool,
}

impl OptimizationToggles {
    pub const ALL: Self = Self { rvp: true, otp: true, geo3d: true, efs: true };
    pub const NONE: Self = Self { rvp: false, otp: false, geo3d: false, efs: false };
}

impl Default for OptimizationToggles {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub groundable: BTreeSet<String>,
    pub vehicles: BTreeSet<String>,
    /// Frustum depth when the predicate bounds no camera distance.
    pub default_depth: f64,
    /// Overrides the predicate's distance bound.
    pub frustum_depth: Option<f64>,
    pub speed_mps: f64,
    pub max_skip: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            groundable: set(&["bicycle", "bus", "car", "human", "motorcycle", "pedestrian", "truck"]),
            vehicles: set(&["bus", "car", "truck"]),
            default_depth: 100.0,
            frustum_depth: None,
            speed_mps: DEFAULT_SPEED_MPS,
            max_skip: Some(DEFAULT_MAX_SKIP),
        }
    }
}

pub fn make_plan(p: &Predicate, toggles: &OptimizationToggles, cfg: &PlannerConfig) -> ExecutionPlan {
    let required = predicate::required_steps(p);
    let relevant = predicate::relevant_object_types(p);
    let depth = cfg.frustum_depth.or_else(|| predicate::distance_bound(p)).unwrap_or(cfg.default_depth);
    let mut steps = Vec::new();

    let targets = predicate::contains_targets(p);
    if toggles.rvp && !targets.is_empty() {
        steps.push(PlanStep::RoadVisibilityPrune { depth, targets });
    }
    for step in required.steps() {
        match step {
            ProcessingStep::Decode => steps.push(PlanStep::Decode),
            ProcessingStep::Detect => {
                steps.push(PlanStep::Detect);
                if let (true, Some(types)) = (toggles.otp, &relevant) {
                    steps.push(PlanStep::ObjectTypePrune { types: types.clone() });
                }
            }
            ProcessingStep::Estimate3D => {
                let grounded = relevant.as_ref().is_some_and(|t| t.is_subset(&cfg.groundable));
                let kind = if toggles.geo3d && grounded { EstimatorKind::GeometryBased } else { EstimatorKind::ExternalDepth };
                steps.push(PlanStep::Estimate3D(kind));
            }
            ProcessingStep::Track => {
                let vehicles = relevant.as_ref().is_some_and(|t| t.is_subset(&cfg.vehicles));
                if toggles.efs && vehicles && required.contains(ProcessingStep::Estimate3D) {
                    steps.push(PlanStep::ExitFrameSample { speed_mps: cfg.speed_mps, max_skip: cfg.max_skip, depth });
                }
                steps.push(PlanStep::Track);
            }
        }
    }
    ExecutionPlan { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::{contains, distance, heading_diff, CamRef, GeogRef, ObjRef};

    fn oncoming() -> Predicate {
        let obj = ObjRef(0);
        let intersection = GeogRef { id: 0, construct_type: ConstructType::Intersection };
        (obj.type_eq("car") | obj.type_eq("truck"))
            & distance(obj, CamRef).lt(50.0)
            & contains(&intersection, &obj)
            & heading_diff(obj, CamRef, 135.0, 225.0)
    }

    #[test]
    fn oncoming_plan() {
        let plan = make_plan(&oncoming(), &OptimizationToggles::ALL, &PlannerConfig::default());
        assert_eq!(
            plan.names(),
            ["RoadVisibilityPrune", "Decode", "Detect", "ObjectTypePrune", "Estimate3D", "ExitFrameSample", "Track"]
        );
        assert_eq!(plan.estimator(), Some(EstimatorKind::GeometryBased));
        assert_eq!(plan.rvp().unwrap().0, 50.0);
        plan.check_order().unwrap();
        let text = plan.to_string();
        assert!(text.starts_with("1. RoadVisibilityPrune depth=50 targets=intersection\n2. Decode\n"), "{text}");
    }

    #[test]
    fn type_only_plan() {
        let plan = make_plan(&ObjRef(0).type_eq("car"), &OptimizationToggles::ALL, &PlannerConfig::default());
        assert_eq!(plan.names(), ["Decode", "Detect", "ObjectTypePrune"]);
    }

    #[test]
    fn pedestrians_are_not_sampled() {
        let obj = ObjRef(0);
        let p = obj.type_eq("human") & heading_diff(obj, CamRef, 80.0, 100.0);
        let plan = make_plan(&p, &OptimizationToggles::ALL, &PlannerConfig::default());
        assert!(!plan.has("ExitFrameSample"));
        assert_eq!(plan.estimator(), Some(EstimatorKind::GeometryBased));
        assert!(plan.has("Track"));
    }

    #[test]
    fn disabled_is_baseline() {
        let plan = make_plan(&oncoming(), &OptimizationToggles::NONE, &PlannerConfig::default());
        assert_eq!(plan.steps, vec![PlanStep::Decode, PlanStep::Detect, PlanStep::Estimate3D(EstimatorKind::ExternalDepth), PlanStep::Track]);
    }

    #[test]
    fn mixed_groundability_uses_external_depth() {
        let obj = ObjRef(0);
        let int = GeogRef { id: 0, construct_type: ConstructType::Intersection };
        let p = (obj.type_eq("car") | obj.type_eq("traffic light")) & contains(&int, &obj);
        let plan = make_plan(&p, &OptimizationToggles::ALL, &PlannerConfig::default());
        assert_eq!(plan.estimator(), Some(EstimatorKind::ExternalDepth));
        assert_eq!(plan.rvp().unwrap().0, 100.0);
    }
}
