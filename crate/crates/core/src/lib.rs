//! Geospatial queries over videos with known camera poses.
//!
//! Build a [`workflow::World`] from a road network, camera configs and
//! per-frame detections, record predicates with [`workflow::World::filter`],
//! and observe the result. Observing plans the video processing, applies the
//! enabled optimizations (road visibility pruning, object type pruning,
//! ground-plane location estimation, exit frame sampling), tracks objects and
//! evaluates the predicate per frame.

pub mod cli;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod predicate;
pub mod pruners;
pub mod query;
pub mod sampler;
pub mod tracker;
pub mod workflow;

pub use geometry::{Pixel, Point2, Polygon2D};
pub use model::{
    BBox, CameraConfig, CameraFrame, ConstructType, Detection, DetectionStream, GeographicConstruct, Intrinsic,
    MovableObject, ObjectSample, Quaternion, RoadNetwork, Vec3,
};
pub use predicate::{contains, distance, heading_diff, CamRef, GeogRef, ObjRef, Predicate};
pub use workflow::{ObserveConfig, ObserveMode, ObserveResult, World};
