//! Ground footprint of a camera frame and the road constructs it sees.
//!
//! cargo run --example viewable_area -- [depth]

use geovid::geometry;
use geovid::harness::{self, SceneSpec};
use geovid::pruners;

fn main() {
    let depth: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50.0);
    let scene = harness::generate_scene(&SceneSpec::partial_intersection(0, 0.3));
    for f in [0, 120, 165, 200] {
        let frame = &scene.camera.frames[f];
        let heading = geometry::camera_heading(frame).unwrap_or(f64::NAN);
        match geometry::viewable_area(frame, depth) {
            Ok(view) => {
                let pts: Vec<String> = view.vertices.iter().map(|p| format!("({:.1}, {:.1})", p.x, p.y)).collect();
                let seen = pruners::visible_in(&view, &scene.roads);
                println!("frame {f:>3} heading {heading:>5.1}  area {:>7.1} m2  sees {:?}", view.area(), seen);
                println!("          {}", pts.join(" "));
            }
            Err(e) => println!("frame {f:>3}: {e}"),
        }
    }
}
