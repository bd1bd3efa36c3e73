//! Execution plans for a few predicates, with and without optimizations.

use geovid::planner::{self, OptimizationToggles, PlannerConfig};
use geovid::{contains, distance, heading_diff, CamRef, ConstructType, GeogRef, ObjRef, Predicate};

fn main() {
    let o = ObjRef(0);
    let int = GeogRef { id: 0, construct_type: ConstructType::Intersection };
    let cases: Vec<(&str, Predicate)> = vec![
        (
            "oncoming vehicle in an intersection",
            (o.type_eq("car") | o.type_eq("truck")) & distance(o, CamRef).lt(50.0) & contains(&int, &o) & heading_diff(o, CamRef, 135.0, 225.0),
        ),
        ("any car", o.type_eq("car")),
        ("pedestrian walking across", o.type_eq("pedestrian") & heading_diff(o, CamRef, 45.0, 135.0)),
        ("anything near the camera", distance(o, CamRef).lt(10.0)),
    ];
    let cfg = PlannerConfig::default();
    for (name, p) in &cases {
        println!("{name}: {p}");
        for (label, t) in [("optimized", OptimizationToggles::ALL), ("baseline", OptimizationToggles::NONE)] {
            println!("  {label}");
            for line in planner::make_plan(p, &t, &cfg).to_string().lines() {
                println!("    {line}");
            }
        }
    }
}
