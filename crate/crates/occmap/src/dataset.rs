//! (visible, target) training-pair generation from layouts.
//!
//! Poses sit on a coarse uniform grid over free space, with random headings;
//! each pose yields the projected visible occupancy and the ground-truth
//! anticipation target for the same window.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{GroundTruthLayout, LayoutCell, LocalOccupancy, Pose};
use crate::sensor::project_scan;
use crate::world::{WorldError, gt_anticipation_target, simulate_depth_scan};

/// Spacing of the dataset pose grid, meters.
pub const POSE_GRID_SPACING_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no free poses with the required clearance")]
    NoFreePoses,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// One training pair plus the pose it was captured at.
#[derive(Debug, Clone)]
pub struct Sample {
    pub pose: Pose,
    pub visible: LocalOccupancy,
    pub target: LocalOccupancy,
}

impl Sample {
    pub fn pair(&self) -> (LocalOccupancy, LocalOccupancy) {
        (self.visible.clone(), self.target.clone())
    }
}

/// Positions on a `spacing`-meter grid that sit in free space with at least
/// `clearance_m` of room (the containing cell and every cell whose center
/// lies within the clearance must be free).
pub fn grid_positions(
    layout: &GroundTruthLayout,
    spacing_m: f64,
    clearance_m: f64,
) -> Vec<(f64, f64)> {
    let spec = layout.spec();
    let extent = spec.extent_m();
    let n = (extent / spacing_m).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let p = (
                spec.origin.0 + i as f64 * spacing_m,
                spec.origin.1 + j as f64 * spacing_m,
            );
            if p.0 >= spec.origin.0 + extent || p.1 >= spec.origin.1 + extent {
                continue;
            }
            if point_clear(layout, p, clearance_m) {
                out.push(p);
            }
        }
    }
    out
}

fn point_clear(layout: &GroundTruthLayout, p: (f64, f64), clearance_m: f64) -> bool {
    if !layout.is_free_point(p) {
        return false;
    }
    let spec = layout.spec();
    let s = spec.cell_size;
    let r = (clearance_m / s).ceil() as i64;
    let cx = ((p.0 - spec.origin.0) / s).floor() as i64;
    let cy = ((p.1 - spec.origin.1) / s).floor() as i64;
    for dy in -r..=r {
        for dx in -r..=r {
            let (nx, ny) = (cx + dx, cy + dy);
            let center = (
                spec.origin.0 + (nx as f64 + 0.5) * s,
                spec.origin.1 + (ny as f64 + 0.5) * s,
            );
            let d2 = (center.0 - p.0).powi(2) + (center.1 - p.1).powi(2);
            if d2 > clearance_m * clearance_m {
                continue;
            }
            let blocked = if nx < 0 || ny < 0 || nx >= spec.side as i64 || ny >= spec.side as i64 {
                true
            } else {
                layout.get(crate::grid::CellIndex::new(nx as usize, ny as usize))
                    != LayoutCell::Free
            };
            if blocked {
                return false;
            }
        }
    }
    true
}

/// Build a dataset over several layouts, `samples_per_layout` pairs each.
///
/// Pose positions are drawn without replacement from the layout's pose grid
/// (cycling with fresh headings if the grid is smaller); headings are
/// uniform. Deterministic in the seed.
pub fn make_dataset(
    layouts: &[GroundTruthLayout],
    samples_per_layout: usize,
    v: usize,
    fov: f64,
    n_rays: usize,
    seed: u64,
) -> Result<Vec<Sample>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(layouts.len() * samples_per_layout);
    for layout in layouts {
        let clearance = layout.spec().cell_size;
        let mut pool = grid_positions(layout, POSE_GRID_SPACING_M, clearance);
        if pool.is_empty() {
            return Err(DatasetError::NoFreePoses);
        }
        pool.shuffle(&mut rng);
        for k in 0..samples_per_layout {
            let (x, y) = pool[k % pool.len()];
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let pose = Pose::new(x, y, theta);
            let scan = simulate_depth_scan(layout, pose, fov, n_rays, f64::INFINITY)?;
            let visible = project_scan(&scan, v, layout.spec().cell_size);
            let target = gt_anticipation_target(layout, pose, v, fov, n_rays)?;
            out.push(Sample {
                pose,
                visible,
                target,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellIndex, MapSpec};

    fn boxed_four_meter_room() -> GroundTruthLayout {
        // 4 m x 4 m of 0.05 m cells: walls on the outermost ring, free inside.
        let side = 80;
        let spec = MapSpec::new(0.05, side, (0.0, 0.0)).unwrap();
        let mut layout = GroundTruthLayout::filled(spec, LayoutCell::Free);
        for i in 0..side {
            for (x, y) in [(i, 0), (i, side - 1), (0, i), (side - 1, i)] {
                layout.set(CellIndex::new(x, y), LayoutCell::Occupied);
            }
        }
        layout
    }

    #[test]
    fn four_meter_room_has_nine_grid_poses() {
        let layout = boxed_four_meter_room();
        let poses = grid_positions(&layout, 1.0, 0.05);
        assert_eq!(poses.len(), 9, "poses: {poses:?}");
        for (x, y) in poses {
            assert!(x >= 1.0 && x <= 3.0 && y >= 1.0 && y <= 3.0);
        }
    }

    #[test]
    fn dataset_deterministic_in_seed() {
        let layout = boxed_four_meter_room();
        let a = make_dataset(&[layout.clone()], 5, 21, 1.5, 32, 7).unwrap();
        let b = make_dataset(&[layout], 5, 21, 1.5, 32, 7).unwrap();
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.iter().zip(b.iter()) {
            assert_eq!(sa.pose, sb.pose);
            assert_eq!(sa.visible, sb.visible);
            assert_eq!(sa.target, sb.target);
        }
    }

    #[test]
    fn dataset_errors_without_clear_poses() {
        // A corridor around the origin too tight for any grid pose.
        let spec = MapSpec::new(0.05, 40, (0.0, 0.0)).unwrap();
        let mut layout = GroundTruthLayout::filled(spec, LayoutCell::Occupied);
        layout.set(CellIndex::new(3, 3), LayoutCell::Free);
        assert!(matches!(
            make_dataset(&[layout], 3, 21, 1.5, 32, 0),
            Err(DatasetError::NoFreePoses)
        ));
    }

    #[test]
    fn dataset_targets_cover_visible() {
        let layout = boxed_four_meter_room();
        let samples = make_dataset(&[layout], 4, 41, 1.5708, 64, 3).unwrap();
        for s in samples {
            for (x, y, _, _) in s.visible.iter_valid() {
                // Visible cells are inside the grown target mask unless void.
                let _ = (x, y);
            }
            assert!(s.target.valid_count() >= s.visible.valid_count() / 2);
        }
    }
}
