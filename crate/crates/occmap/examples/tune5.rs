//! Scratch: reachability from the agent on its own final map.
use occmap::explore::*;
use occmap::grid::*;
use occmap::plan::*;
use occmap::world::{FloorplanParams, generate_floorplan};

fn main() {
    let layout = generate_floorplan(&FloorplanParams {
        extent_m: 12.0, rooms: (3, 5), obstacle_density: 0.06, seed: 300,
        ..FloorplanParams::default()
    }).unwrap();
    let cfg = EpisodeConfig {
        t_budget: 100, delta: 25, seed: 1000, v: 41, n_rays: 128,
        policy: Policy::FrontierCoverage,
        anticipator: AnticipatorKind::VisibleOnly,
        ..EpisodeConfig::default()
    };
    let r = run_exploration(&layout, &cfg).unwrap();
    let last = r.steps.last().unwrap();
    let spec = layout.spec();
    let here = world_to_cell(last.est_pose.position(), spec).unwrap();
    let bins = r.final_global.binarize(0.5);
    let trav = inflate(&bins, spec.side, 0.0, spec.cell_size, UnknownPolicy::Passable { penalty: 2.0 });
    let dist = dijkstra_distances(&trav, here);
    let n_reach = dist.iter().filter(|d| d.is_finite()).count();
    println!("agent cell ({},{}), reachable cells: {n_reach}", here.x, here.y);
    for dy in (-16i64..=16).rev() {
        let mut row = String::new();
        for dx in -16i64..=16 {
            let (x, y) = (here.x as i64 + dx, here.y as i64 + dy);
            if x < 0 || y < 0 || x >= spec.side as i64 || y >= spec.side as i64 {
                row.push('~');
                continue;
            }
            let i = y as usize * spec.side + x as usize;
            let c = if dx == 0 && dy == 0 {
                'A'
            } else if dist[i].is_finite() {
                'o'
            } else {
                match bins[i] {
                    BinCell::Free => '.',
                    BinCell::Occupied => '#',
                    BinCell::Unexplored => ' ',
                }
            };
            row.push(c);
        }
        println!("{row}");
    }
}
