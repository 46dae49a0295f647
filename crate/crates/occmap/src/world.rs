//! Environment generation, raycast geometry and anticipation targets.
//!
//! Layouts are procedural floorplans: rectangular rooms joined by corridors,
//! with rectangular obstacles scattered inside rooms, walls around every free
//! region, and void outside. Generation is deterministic in the seed and
//! guarantees a single 4-connected free component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{
    CellIndex, GridError, GroundTruthLayout, LayoutCell, LocalOccupancy, MapSpec, Pose,
    world_to_cell,
};
use crate::sensor;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("layout generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("pose ({0:.3}, {1:.3}) is not in free space")]
    PoseInObstacle(f64, f64),
    #[error("invalid floorplan params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Parameters for procedural floorplan generation.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorplanParams {
    /// World extent per side, in meters.
    pub extent_m: f64,
    /// Inclusive range for the number of rooms.
    pub rooms: (usize, usize),
    pub corridor_width_m: f64,
    /// Fraction of room area covered by rectangular obstacles.
    pub obstacle_density: f64,
    pub cell_size_m: f64,
    pub seed: u64,
}

impl Default for FloorplanParams {
    fn default() -> Self {
        Self {
            extent_m: 16.0,
            rooms: (3, 6),
            corridor_width_m: 1.0,
            obstacle_density: 0.05,
            cell_size_m: crate::grid::DEFAULT_CELL_SIZE_M,
            seed: 0,
        }
    }
}

impl FloorplanParams {
    fn validate(&self) -> Result<(), WorldError> {
        if self.extent_m < 4.0 {
            return Err(WorldError::InvalidParams(format!(
                "extent must be >= 4 m, got {}",
                self.extent_m
            )));
        }
        if self.corridor_width_m < 3.0 * self.cell_size_m {
            return Err(WorldError::InvalidParams(format!(
                "corridor width {} must be >= 3 cells ({})",
                self.corridor_width_m,
                3.0 * self.cell_size_m
            )));
        }
        if self.rooms.0 == 0 || self.rooms.0 > self.rooms.1 {
            return Err(WorldError::InvalidParams(format!(
                "bad room count range {:?}",
                self.rooms
            )));
        }
        if !(0.0..=0.5).contains(&self.obstacle_density) {
            return Err(WorldError::InvalidParams(format!(
                "obstacle density {} outside [0, 0.5]",
                self.obstacle_density
            )));
        }
        Ok(())
    }
}

/// One depth scan: ranges in meters, one per ray, fanned across `fov`.
///
/// A ray that hits nothing within range carries `+inf`.
#[derive(Debug, Clone)]
pub struct DepthScan {
    pub ranges: Vec<f64>,
    pub fov: f64,
    pub pose_at_capture: Pose,
}

impl DepthScan {
    /// Angle of ray `i` relative to the capture heading.
    pub fn ray_angle(&self, i: usize) -> f64 {
        ray_offset(self.fov, self.ranges.len(), i)
    }
}

pub(crate) fn ray_offset(fov: f64, n_rays: usize, i: usize) -> f64 {
    if n_rays <= 1 {
        0.0
    } else {
        fov * (i as f64 / (n_rays - 1) as f64 - 0.5)
    }
}

const MAX_GENERATION_ATTEMPTS: usize = 32;

/// Generate a floorplan: deterministic in the seed, connected free space.
pub fn generate_floorplan(params: &FloorplanParams) -> Result<GroundTruthLayout, WorldError> {
    params.validate()?;
    let side = (params.extent_m / params.cell_size_m).round() as usize;
    let spec = MapSpec::new(params.cell_size_m, side, (0.0, 0.0))?;
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(
            (attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ));
        if let Some(layout) = try_generate(params, spec, &mut rng) {
            return Ok(layout);
        }
    }
    Err(WorldError::GenerationFailed(MAX_GENERATION_ATTEMPTS))
}

#[derive(Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize, // inclusive
    y1: usize, // inclusive
}

impl Rect {
    fn center(&self) -> (usize, usize) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }
    fn area(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }
}

fn try_generate(
    params: &FloorplanParams,
    spec: MapSpec,
    rng: &mut ChaCha8Rng,
) -> Option<GroundTruthLayout> {
    let side = spec.side;
    let corridor_cells = (params.corridor_width_m / params.cell_size_m).round() as usize;
    let n_rooms = rng.random_range(params.rooms.0..=params.rooms.1);

    // Leave a one-cell rim so walls always fit inside the grid.
    let lo = 1usize;
    let hi = side - 2;
    let min_room = (corridor_cells + 2).max(side / 8).min(hi - lo);
    let max_room = (side / 2).max(min_room + 1);

    let mut rooms: Vec<Rect> = Vec::new();
    for _ in 0..n_rooms {
        for _try in 0..64 {
            let w = rng.random_range(min_room..=max_room);
            let h = rng.random_range(min_room..=max_room);
            if hi <= lo + w || hi <= lo + h {
                continue;
            }
            let x0 = rng.random_range(lo..=hi - w);
            let y0 = rng.random_range(lo..=hi - h);
            rooms.push(Rect {
                x0,
                y0,
                x1: x0 + w,
                y1: y0 + h,
            });
            break;
        }
    }
    if rooms.is_empty() {
        return None;
    }

    let mut free = vec![false; side * side];
    let carve = |free: &mut Vec<bool>, r: &Rect| {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                free[y * side + x] = true;
            }
        }
    };
    for r in &rooms {
        carve(&mut free, r);
    }

    // L-shaped corridors between consecutive room centers.
    for pair in rooms.windows(2) {
        let (ax, ay) = pair[0].center();
        let (bx, by) = pair[1].center();
        let half = corridor_cells / 2;
        let band = |c: usize| (c.saturating_sub(half).max(lo), (c + half).min(hi));
        let (hx0, hx1) = (ax.min(bx), ax.max(bx));
        let (y0, y1) = band(ay);
        carve(
            &mut free,
            &Rect {
                x0: hx0,
                y0,
                x1: hx1,
                y1,
            },
        );
        let (vy0, vy1) = (ay.min(by), ay.max(by));
        let (x0, x1) = band(bx);
        carve(
            &mut free,
            &Rect {
                x0,
                y0: vy0,
                x1,
                y1: vy1,
            },
        );
    }

    // Rectangular obstacles inside rooms.
    let mut obstacle = vec![false; side * side];
    if params.obstacle_density > 0.0 {
        for r in &rooms {
            let mut budget = (params.obstacle_density * r.area() as f64) as i64;
            let mut tries = 0;
            while budget > 0 && tries < 64 {
                tries += 1;
                let w = rng.random_range(1..=4usize);
                let h = rng.random_range(1..=4usize);
                if r.x1 - r.x0 < w + 2 || r.y1 - r.y0 < h + 2 {
                    continue;
                }
                let x0 = rng.random_range(r.x0 + 1..=r.x1 - 1 - w);
                let y0 = rng.random_range(r.y0 + 1..=r.y1 - 1 - h);
                for y in y0..y0 + h {
                    for x in x0..x0 + w {
                        obstacle[y * side + x] = true;
                    }
                }
                budget -= (w * h) as i64;
            }
        }
    }

    let mut cells = vec![LayoutCell::Void; side * side];
    for i in 0..side * side {
        if free[i] && !obstacle[i] {
            cells[i] = LayoutCell::Free;
        } else if free[i] && obstacle[i] {
            cells[i] = LayoutCell::Occupied;
        }
    }
    // Walls: void cells 8-adjacent to free become occupied.
    let mut walls = Vec::new();
    for y in 0..side {
        for x in 0..side {
            if cells[y * side + x] != LayoutCell::Void {
                continue;
            }
            'scan: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= side as i64 || ny >= side as i64 {
                        continue;
                    }
                    if cells[ny as usize * side + nx as usize] == LayoutCell::Free {
                        walls.push(y * side + x);
                        break 'scan;
                    }
                }
            }
        }
    }
    for i in walls {
        cells[i] = LayoutCell::Occupied;
    }

    let layout = GroundTruthLayout::new(spec, cells).ok()?;
    if free_space_connected(&layout) {
        Some(layout)
    } else {
        None
    }
}

/// True when all free cells form one 4-connected component.
pub fn free_space_connected(layout: &GroundTruthLayout) -> bool {
    let side = layout.spec().side;
    let total_free = layout.count(LayoutCell::Free);
    if total_free == 0 {
        return false;
    }
    let start = layout
        .cells()
        .iter()
        .position(|c| *c == LayoutCell::Free)
        .unwrap();
    let mut seen = vec![false; side * side];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(i) = stack.pop() {
        reached += 1;
        let (x, y) = (i % side, i / side);
        let push = |nx: i64, ny: i64, seen: &mut Vec<bool>, stack: &mut Vec<usize>| {
            if nx < 0 || ny < 0 || nx >= side as i64 || ny >= side as i64 {
                return;
            }
            let j = ny as usize * side + nx as usize;
            if !seen[j] && layout.cells()[j] == LayoutCell::Free {
                seen[j] = true;
                stack.push(j);
            }
        };
        push(x as i64 - 1, y as i64, &mut seen, &mut stack);
        push(x as i64 + 1, y as i64, &mut seen, &mut stack);
        push(x as i64, y as i64 - 1, &mut seen, &mut stack);
        push(x as i64, y as i64 + 1, &mut seen, &mut stack);
    }
    reached == total_free
}

/// Exact grid traversal from `origin` along `angle`, returning the distance
/// to the boundary of the first occupied or void cell, or `+inf` when nothing
/// blocks the ray within `max_range`.
pub(crate) fn raycast(
    layout: &GroundTruthLayout,
    origin: (f64, f64),
    angle: f64,
    max_range: f64,
) -> f64 {
    let spec = layout.spec();
    let s = spec.cell_size;
    let (dy, dx) = angle.sin_cos();
    let gx = (origin.0 - spec.origin.0) / s;
    let gy = (origin.1 - spec.origin.1) / s;
    let mut cx = gx.floor() as i64;
    let mut cy = gy.floor() as i64;

    let blocked = |x: i64, y: i64| -> bool {
        if x < 0 || y < 0 || x >= spec.side as i64 || y >= spec.side as i64 {
            return true; // off-grid counts as void
        }
        !matches!(
            layout.get(CellIndex::new(x as usize, y as usize)),
            LayoutCell::Free
        )
    };

    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // Distance along the ray to the next vertical / horizontal grid line.
    let mut t_max_x = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else if dx > 0.0 {
        ((cx as f64 + 1.0) - gx) * s / dx
    } else {
        (gx - cx as f64) * s / -dx
    };
    let mut t_max_y = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else if dy > 0.0 {
        ((cy as f64 + 1.0) - gy) * s / dy
    } else {
        (gy - cy as f64) * s / -dy
    };
    let t_delta_x = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else {
        s / dx.abs()
    };
    let t_delta_y = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else {
        s / dy.abs()
    };

    loop {
        let t;
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            cx += step_x;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            cy += step_y;
        }
        if t > max_range {
            return f64::INFINITY;
        }
        if blocked(cx, cy) {
            return t;
        }
    }
}

/// Simulate a depth scan: `n_rays` rays fanned uniformly across `fov`.
pub fn simulate_depth_scan(
    layout: &GroundTruthLayout,
    pose: Pose,
    fov: f64,
    n_rays: usize,
    max_range: f64,
) -> Result<DepthScan, WorldError> {
    if !layout.is_free_point(pose.position()) {
        return Err(WorldError::PoseInObstacle(pose.x, pose.y));
    }
    let ranges = (0..n_rays)
        .map(|i| {
            let angle = pose.theta + ray_offset(fov, n_rays, i);
            raycast(layout, pose.position(), angle, max_range)
        })
        .collect();
    Ok(DepthScan {
        ranges,
        fov,
        pose_at_capture: pose,
    })
}

/// Fill holes: complement regions not 4-connected to the border are absorbed.
pub(crate) fn hole_fill(mask: &[bool], side: usize) -> Vec<bool> {
    let mut outside = vec![false; side * side];
    let mut stack = Vec::new();
    for y in 0..side {
        for x in 0..side {
            if (x == 0 || y == 0 || x == side - 1 || y == side - 1) && !mask[y * side + x] {
                let i = y * side + x;
                if !outside[i] {
                    outside[i] = true;
                    stack.push(i);
                }
            }
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % side, i / side);
        for (nx, ny) in [
            (x as i64 - 1, y as i64),
            (x as i64 + 1, y as i64),
            (x as i64, y as i64 - 1),
            (x as i64, y as i64 + 1),
        ] {
            if nx < 0 || ny < 0 || nx >= side as i64 || ny >= side as i64 {
                continue;
            }
            let j = ny as usize * side + nx as usize;
            if !mask[j] && !outside[j] {
                outside[j] = true;
                stack.push(j);
            }
        }
    }
    (0..side * side).map(|i| mask[i] || !outside[i]).collect()
}

/// Dilate with a full 3x3 structuring element.
pub(crate) fn dilate3x3(mask: &[bool], side: usize) -> Vec<bool> {
    let mut out = vec![false; side * side];
    for y in 0..side {
        for x in 0..side {
            if !mask[y * side + x] {
                continue;
            }
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && nx < side as i64 && ny < side as i64 {
                        out[ny as usize * side + nx as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// Ground-truth anticipation target for the V x V window around the pose.
///
/// The visible occupancy seeds a mask that is grown by two rounds of
/// hole-filling and 3x3 dilation; inside the mask the target takes the layout
/// values (occupied -> (1,1), free -> (0,1)), outside it stays invalid. Void
/// cells are always invalid.
pub fn gt_anticipation_target(
    layout: &GroundTruthLayout,
    pose: Pose,
    v: usize,
    fov: f64,
    n_rays: usize,
) -> Result<LocalOccupancy, WorldError> {
    if !layout.is_free_point(pose.position()) {
        return Err(WorldError::PoseInObstacle(pose.x, pose.y));
    }
    let scan = simulate_depth_scan(layout, pose, fov, n_rays, f64::INFINITY)?;
    let visible = sensor::project_scan(&scan, v, layout.spec().cell_size);

    let crop = crop_window(layout, pose, v);
    let mut mask: Vec<bool> = (0..v * v)
        .map(|i| visible.is_valid(i % v, i / v))
        .collect();
    for _ in 0..2 {
        mask = hole_fill(&mask, v);
        mask = dilate3x3(&mask, v);
    }

    let mut target = LocalOccupancy::unknown(v);
    for y in 0..v {
        for x in 0..v {
            if !mask[y * v + x] {
                continue;
            }
            match crop[y * v + x] {
                LayoutCell::Occupied => target.set(x, y, 1.0, 1.0),
                LayoutCell::Free => target.set(x, y, 0.0, 1.0),
                LayoutCell::Void => {}
            }
        }
    }
    Ok(target)
}

/// Nearest-cell resample of the layout over the egocentric V x V window.
pub fn crop_window(layout: &GroundTruthLayout, pose: Pose, v: usize) -> Vec<LayoutCell> {
    let s = layout.spec().cell_size;
    let c = ((v - 1) / 2) as f64;
    let (sin_t, cos_t) = pose.theta.sin_cos();
    let mut out = vec![LayoutCell::Void; v * v];
    for y in 0..v {
        for x in 0..v {
            let ax = (x as f64 - c) * s;
            let ay = (y as f64 - c) * s;
            let wx = pose.x + cos_t * ax - sin_t * ay;
            let wy = pose.y + sin_t * ax + cos_t * ay;
            out[y * v + x] = layout.at_point((wx, wy));
        }
    }
    out
}

/// Sample a pose uniformly over free cells at least `clearance_m` from any
/// non-free cell, with a uniform random heading.
pub fn sample_free_pose(
    layout: &GroundTruthLayout,
    clearance_m: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Pose> {
    let cells = clear_free_cells(layout, clearance_m);
    if cells.is_empty() {
        return None;
    }
    let cell = cells[rng.random_range(0..cells.len())];
    let (x, y) = layout.spec().cell_center(cell);
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Some(Pose::new(x, y, theta))
}

/// Free cells whose distance to the nearest non-free cell is >= `clearance_m`.
pub fn clear_free_cells(layout: &GroundTruthLayout, clearance_m: f64) -> Vec<CellIndex> {
    let spec = layout.spec();
    let side = spec.side;
    let r_cells = (clearance_m / spec.cell_size).ceil() as i64;
    let r2 = (clearance_m / spec.cell_size).powi(2);
    let clear = |x: usize, y: usize| -> bool {
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                let blocked = if nx < 0 || ny < 0 || nx >= side as i64 || ny >= side as i64 {
                    true
                } else {
                    layout.get(CellIndex::new(nx as usize, ny as usize)) != LayoutCell::Free
                };
                if blocked {
                    return false;
                }
            }
        }
        true
    };
    let mut out = Vec::new();
    for y in 0..side {
        for x in 0..side {
            if layout.get(CellIndex::new(x, y)) == LayoutCell::Free && clear(x, y) {
                out.push(CellIndex::new(x, y));
            }
        }
    }
    out
}

/// Place a point into its containing layout cell, if any.
pub fn layout_cell_at(layout: &GroundTruthLayout, point: (f64, f64)) -> Option<CellIndex> {
    world_to_cell(point, layout.spec()).ok()
}
