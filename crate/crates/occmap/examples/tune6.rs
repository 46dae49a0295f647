//! Scratch: registration fidelity, turn-in-place in a boxed room.
use occmap::anticipate::entropy_filter;
use occmap::grid::*;
use occmap::mapper::MapperState;
use occmap::sensor::project_scan;
use occmap::world::simulate_depth_scan;

fn main() {
    let side = 81;
    let spec = MapSpec::new(0.05, side, (0.0, 0.0)).unwrap();
    let mut layout = GroundTruthLayout::filled(spec, LayoutCell::Free);
    for i in 0..side {
        for (x, y) in [(i, 0), (i, side - 1), (0, i), (side - 1, i)] {
            layout.set(CellIndex::new(x, y), LayoutCell::Occupied);
        }
    }
    let c = spec.cell_center(CellIndex::new(40, 40));
    let mut state = MapperState::new(spec, 0.9, Pose::new(c.0, c.1, 0.0));
    for k in 0..72 {
        let pose = Pose::new(c.0, c.1, k as f64 * 5f64.to_radians());
        let scan = simulate_depth_scan(&layout, pose, std::f64::consts::FRAC_PI_2, 128, f64::INFINITY).unwrap();
        let visible = project_scan(&scan, 81, 0.05);
        let filtered = entropy_filter(&visible, 0.5624);
        state.register(&filtered, pose);
    }
    let bins = state.global.binarize(0.5);
    let mut phantom = 0;
    let mut missed_free = 0;
    let mut total_occ = 0;
    for y in 0..side {
        for x in 0..side {
            let i = y * side + x;
            let truth = layout.get(CellIndex::new(x, y));
            match bins[i] {
                BinCell::Occupied => {
                    total_occ += 1;
                    // phantom if no true occupied within 1 cell
                    let mut near = false;
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx >= 0 && ny >= 0 && (nx as usize) < side && (ny as usize) < side
                                && layout.get(CellIndex::new(nx as usize, ny as usize)) == LayoutCell::Occupied {
                                near = true;
                            }
                        }
                    }
                    if !near { phantom += 1; }
                }
                BinCell::Free => {
                    if truth == LayoutCell::Occupied { missed_free += 1; }
                }
                BinCell::Unexplored => {}
            }
        }
    }
    println!("occupied cells {total_occ}, phantom (no true wall within 1 cell): {phantom}, free-but-true-wall: {missed_free}");
    // agent cell state
    let i = 40 * side + 40;
    println!("agent cell binarized {:?}, probs {:?}", bins[i], state.global.probs(CellIndex::new(40, 40)));
    // dump a horizontal strip at the east wall
    let y = 40;
    let strip: String = (60..side).map(|x| match bins[y * side + x] {
        BinCell::Free => '.', BinCell::Occupied => '#', BinCell::Unexplored => ' ',
    }).collect();
    println!("map east strip:   {strip}");
    let strip: String = (60..side).map(|x| match layout.get(CellIndex::new(x, y)) {
        LayoutCell::Free => '.', LayoutCell::Occupied => '#', LayoutCell::Void => ' ',
    }).collect();
    println!("truth east strip: {strip}");
}
