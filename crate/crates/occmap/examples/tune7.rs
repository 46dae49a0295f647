//! Scratch: phantom counter on a real episode map.
use occmap::explore::*;
use occmap::grid::*;
use occmap::world::{FloorplanParams, generate_floorplan};

fn main() {
    let layout = generate_floorplan(&FloorplanParams {
        extent_m: 12.0, rooms: (3, 5), obstacle_density: 0.06, seed: 300,
        ..FloorplanParams::default()
    }).unwrap();
    for t_budget in [30usize, 60, 100] {
        let cfg = EpisodeConfig {
            t_budget, delta: 25, seed: 1000, v: 41, n_rays: 128,
            policy: Policy::FrontierCoverage,
            anticipator: AnticipatorKind::VisibleOnly,
            ..EpisodeConfig::default()
        };
        let r = run_exploration(&layout, &cfg).unwrap();
        let spec = layout.spec();
        let side = spec.side;
        let bins = r.final_global.binarize(0.5);
        let mut phantom = 0;
        let mut occ = 0;
        let mut worst: Vec<(usize, usize)> = Vec::new();
        for y in 0..side {
            for x in 0..side {
                if bins[y * side + x] != BinCell::Occupied { continue; }
                occ += 1;
                let mut near = false;
                'n: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx >= 0 && ny >= 0 && (nx as usize) < side && (ny as usize) < side
                            && layout.get(CellIndex::new(nx as usize, ny as usize)) == LayoutCell::Occupied {
                            near = true; break 'n;
                        }
                    }
                }
                if !near { phantom += 1; if worst.len() < 12 { worst.push((x, y)); } }
            }
        }
        let coll = r.steps.iter().filter(|s| s.collided).count();
        println!("T={t_budget}: occ {occ} phantom {phantom} collisions {coll} sample {worst:?}");
    }
}
