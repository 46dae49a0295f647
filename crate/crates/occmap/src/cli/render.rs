//! Map rendering to plain portable-graymap/pixmap text images.
//!
//! Palette: free white (255), occupied black (0), unexplored mid-gray (127),
//! void light gray (200). Row zero of the image is the top of the map
//! (highest y index).

use crate::grid::{BinCell, CellIndex, GlobalOccupancy, GroundTruthLayout, LayoutCell};

pub const SHADE_FREE: u8 = 255;
pub const SHADE_OCCUPIED: u8 = 0;
pub const SHADE_UNEXPLORED: u8 = 127;
pub const SHADE_VOID: u8 = 200;
/// Trajectory overlay color in PPM renders.
pub const TRAJECTORY_RGB: (u8, u8, u8) = (220, 30, 30);

fn pgm(side: usize, shade: impl Fn(usize, usize) -> u8) -> String {
    let mut out = format!("P2\n{side} {side}\n255\n");
    for y in (0..side).rev() {
        let row: Vec<String> = (0..side).map(|x| shade(x, y).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn ppm(side: usize, color: impl Fn(usize, usize) -> (u8, u8, u8)) -> String {
    let mut out = format!("P3\n{side} {side}\n255\n");
    for y in (0..side).rev() {
        let row: Vec<String> = (0..side)
            .map(|x| {
                let (r, g, b) = color(x, y);
                format!("{r} {g} {b}")
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn layout_shade(cell: LayoutCell) -> u8 {
    match cell {
        LayoutCell::Free => SHADE_FREE,
        LayoutCell::Occupied => SHADE_OCCUPIED,
        LayoutCell::Void => SHADE_VOID,
    }
}

pub fn bin_shade(cell: BinCell) -> u8 {
    match cell {
        BinCell::Free => SHADE_FREE,
        BinCell::Occupied => SHADE_OCCUPIED,
        BinCell::Unexplored => SHADE_UNEXPLORED,
    }
}

/// Render a ground-truth layout as plain PGM text.
pub fn render_layout_pgm(layout: &GroundTruthLayout) -> String {
    pgm(layout.spec().side, |x, y| {
        layout_shade(layout.get(CellIndex::new(x, y)))
    })
}

/// Render a binarized global map as plain PGM text.
pub fn render_global_pgm(global: &GlobalOccupancy, threshold: f64) -> String {
    let side = global.spec().side;
    let bins = global.binarize(threshold);
    pgm(side, |x, y| bin_shade(bins[y * side + x]))
}

/// Render a layout with a trajectory overlay as plain PPM text.
///
/// Trajectory points are world coordinates; points falling outside the grid
/// are skipped.
pub fn render_layout_with_trajectory_ppm(
    layout: &GroundTruthLayout,
    trajectory: &[(f64, f64)],
) -> String {
    let spec = layout.spec();
    let side = spec.side;
    let mut overlay = vec![false; side * side];
    for &p in trajectory {
        if let Ok(cell) = crate::grid::world_to_cell(p, spec) {
            overlay[spec.linear(cell)] = true;
        }
    }
    ppm(side, |x, y| {
        if overlay[y * side + x] {
            TRAJECTORY_RGB
        } else {
            let s = layout_shade(layout.get(CellIndex::new(x, y)));
            (s, s, s)
        }
    })
}
