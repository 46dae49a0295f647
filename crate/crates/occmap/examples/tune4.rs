//! Scratch: dump the agent's map neighborhood as text.
use occmap::explore::*;
use occmap::grid::*;
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
    println!("agent at cell ({}, {}), pose ({:.2},{:.2})", here.x, here.y, last.est_pose.x, last.est_pose.y);
    let bins = r.final_global.binarize(0.5);
    // print a 61x61 window around the agent: map state + layout truth
    for dy in (-30i64..=30).rev() {
        let mut row = String::new();
        for dx in -30i64..=30 {
            let (x, y) = (here.x as i64 + dx, here.y as i64 + dy);
            if x < 0 || y < 0 || x >= spec.side as i64 || y >= spec.side as i64 {
                row.push('~');
                continue;
            }
            let c = if dx == 0 && dy == 0 { 'A' } else {
                match bins[y as usize * spec.side + x as usize] {
                    BinCell::Free => '.',
                    BinCell::Occupied => '#',
                    BinCell::Unexplored => ' ',
                }
            };
            row.push(c);
        }
        // layout truth row alongside
        let mut truth = String::new();
        for dx in -30i64..=30 {
            let (x, y) = (here.x as i64 + dx, here.y as i64 + dy);
            if x < 0 || y < 0 || x >= spec.side as i64 || y >= spec.side as i64 {
                truth.push('~');
                continue;
            }
            truth.push(match layout.get(CellIndex::new(x as usize, y as usize)) {
                LayoutCell::Free => '.',
                LayoutCell::Occupied => '#',
                LayoutCell::Void => ' ',
            });
        }
        println!("{row}   |   {truth}");
    }
}
