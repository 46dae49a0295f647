//! Scratch: dissect one exploration episode.
use occmap::explore::*;
use occmap::sensor::Action;
use occmap::world::{FloorplanParams, generate_floorplan};

fn main() {
    let layout = generate_floorplan(&FloorplanParams {
        extent_m: 12.0, rooms: (3, 5), obstacle_density: 0.06, seed: 300,
        ..FloorplanParams::default()
    }).unwrap();
    let free_cells = layout.cells().iter().filter(|c| **c == occmap::grid::LayoutCell::Free).count();
    println!("layout free cells: {} ({:.1} m2), non-void {}", free_cells, free_cells as f64 * 0.0025, layout.non_void_count());
    let cfg = EpisodeConfig {
        t_budget: 500, delta: 25, seed: 1000, v: 41, n_rays: 128,
        policy: Policy::FrontierCoverage,
        anticipator: AnticipatorKind::VisibleOnly,
        ..EpisodeConfig::default()
    };
    let r = run_exploration(&layout, &cfg).unwrap();
    let mut fwd = 0; let mut left = 0; let mut right = 0; let mut none = 0; let mut coll = 0;
    for s in &r.steps {
        match s.action {
            Some(Action::MoveForward) => fwd += 1,
            Some(Action::TurnLeft) => left += 1,
            Some(Action::TurnRight) => right += 1,
            _ => none += 1,
        }
        if s.collided { coll += 1; }
    }
    println!("actions: fwd {fwd} left {left} right {right} none {none} collisions {coll}");
    for m in &r.series {
        println!("t={} acc={} area={:.1} iou={:.3}", m.step, m.accuracy_cells, m.area_seen_m2, m.iou_mean());
    }
    println!("initial {} final {}", r.initial_accuracy, r.final_accuracy);
    // where did it spend time?
    let mut min_x = f64::MAX; let mut max_x: f64 = 0.0; let mut min_y = f64::MAX; let mut max_y: f64 = 0.0;
    for s in &r.steps {
        min_x = min_x.min(s.true_pose.x); max_x = max_x.max(s.true_pose.x);
        min_y = min_y.min(s.true_pose.y); max_y = max_y.max(s.true_pose.y);
    }
    println!("bbox x [{min_x:.2},{max_x:.2}] y [{min_y:.2},{max_y:.2}]");
}
