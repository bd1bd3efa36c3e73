//! Frame pruning by road-construct visibility and detection pruning by type.

use std::collections::BTreeSet;

use crate::geometry::{self, Polygon2D};
use crate::model::{CameraFrame, ConstructType, Detection, RoadNetwork};
use crate::predicate::Predicate;

/// Construct types overlapping a frame's viewable area at depth `d`. A
/// degenerate view sees nothing.
pub fn visible_construct_types(frame: &CameraFrame, roads: &RoadNetwork, d: f64) -> BTreeSet<ConstructType> {
    match geometry::viewable_area(frame, d) {
        Ok(view) => visible_in(&view, roads),
        Err(_) => BTreeSet::new(),
    }
}

pub fn visible_in(view: &Polygon2D, roads: &RoadNetwork) -> BTreeSet<ConstructType> {
    let (lo, hi) = view.bounds();
    let mut out = BTreeSet::new();
    for c in roads.candidates(lo, hi) {
        if !out.contains(&c.construct_type) && geometry::polygons_overlap(view, &c.polygon) {
            out.insert(c.construct_type);
        }
    }
    out
}

/// Keeps a frame unless the predicate is false once every `contains` atom is
/// replaced by visibility of its construct type and every other atom by true.
pub fn rvp_keep_frame(p: &Predicate, visible: &BTreeSet<ConstructType>) -> bool {
    p.eval_atoms(&mut |atom| match atom {
        Predicate::Contains { geog, .. } => visible.contains(&geog.construct_type),
        _ => true,
    })
}

/// Detections whose label is in `types`, in their original order.
pub fn otp_filter(dets: &[Detection], types: &BTreeSet<String>) -> Vec<Detection> {
    dets.iter().filter(|d| types.contains(&d.class_label)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::model::{BBox, GeographicConstruct, Intrinsic, Quaternion, Vec3};
    use crate::predicate::{contains, distance, heading_diff, CamRef, GeogRef, ObjRef};

    fn oncoming() -> Predicate {
        let obj = ObjRef(0);
        let intersection = GeogRef { id: 0, construct_type: ConstructType::Intersection };
        (obj.type_eq("car") | obj.type_eq("truck"))
            & distance(obj, CamRef).lt(50.0)
            & contains(&intersection, &obj)
            & heading_diff(obj, CamRef, 135.0, 225.0)
    }

    fn camera(yaw: f64) -> CameraFrame {
        CameraFrame {
            frame_index: 0,
            translation: Vec3::new(0.0, 0.0, 1.5),
            rotation: Quaternion::looking(yaw, 5.0),
            intrinsic: Intrinsic::new(800.0, 800.0, 0.0, 640.0, 360.0),
            timestamp: 0.0,
            width: 1280,
            height: 720,
        }
    }

    fn roads() -> RoadNetwork {
        let int = GeographicConstruct::new(
            "int",
            ConstructType::Intersection,
            Polygon2D::rect(10.0, -5.0, 20.0, 5.0).vertices,
            vec![],
        );
        let lane = GeographicConstruct::new("lane", ConstructType::Lane, Polygon2D::rect(-50.0, -4.0, 10.0, -2.0).vertices, vec![0.0]);
        RoadNetwork::new(vec![int, lane]).unwrap()
    }

    #[test]
    fn intersection_ahead_is_visible() {
        let vis = visible_construct_types(&camera(0.0), &roads(), 50.0);
        assert!(vis.contains(&ConstructType::Intersection));
    }

    #[test]
    fn looking_away_sees_nothing() {
        let vis = visible_construct_types(&camera(90.0), &roads(), 50.0);
        assert!(vis.is_empty(), "{vis:?}");
    }

    #[test]
    fn boundary_touch_counts() {
        let view = Polygon2D::rect(0.0, 0.0, 10.0, 10.0);
        let rn = RoadNetwork::new(vec![GeographicConstruct::new(
            "t",
            ConstructType::Intersection,
            Polygon2D::rect(10.0, 0.0, 12.0, 2.0).vertices,
            vec![],
        )])
        .unwrap();
        assert!(visible_in(&view, &rn).contains(&ConstructType::Intersection));
    }

    #[test]
    fn rvp_rule_application() {
        let p = oncoming();
        assert!(!rvp_keep_frame(&p, &BTreeSet::from([ConstructType::Lane])));
        assert!(rvp_keep_frame(&p, &BTreeSet::from([ConstructType::Lane, ConstructType::Intersection])));
        let lane = GeogRef { id: 1, construct_type: ConstructType::Lane };
        let int = GeogRef { id: 0, construct_type: ConstructType::Intersection };
        let q = contains(&lane, &ObjRef(0)) | contains(&int, &ObjRef(1));
        assert!(rvp_keep_frame(&q, &BTreeSet::from([ConstructType::Lane])));
        assert!(!rvp_keep_frame(&q, &BTreeSet::new()));
    }

    #[test]
    fn otp_examples() {
        let dets: Vec<Detection> = ["car", "human", "truck"]
            .iter()
            .map(|l| Detection::new(0, BBox::new(0.0, 0.0, 1.0, 1.0), *l))
            .collect();
        let kept = otp_filter(&dets, &BTreeSet::from(["car".to_string(), "truck".to_string()]));
        assert_eq!(kept.iter().map(|d| d.class_label.as_str()).collect::<Vec<_>>(), ["car", "truck"]);
        let all: BTreeSet<String> = dets.iter().map(|d| d.class_label.clone()).collect();
        assert_eq!(otp_filter(&dets, &all), dets);
        assert!(otp_filter(&dets, &BTreeSet::new()).is_empty());
        let _ = Point2::new(0.0, 0.0);
    }
}
