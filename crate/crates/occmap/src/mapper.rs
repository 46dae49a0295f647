//! Global map maintenance: moving-average registration, the anticipation
//! reward, area-seen accounting and collision marks.
//!
//! Every mutation of the global map is recorded as a pending write; the
//! reward drains the pending list and adjusts the running accuracy ledger
//! incrementally, so the telescoping identity
//! `sum of rewards == final accuracy - initial accuracy` holds exactly.

use crate::grid::{
    self, BinCell, CellIndex, GlobalOccupancy, GridError, GroundTruthLayout, LocalOccupancy,
    MapSpec, Pose, binarize_cell, cell_match_count, transform_local_to_global, world_to_cell,
};
use crate::sensor;
use crate::world::DepthScan;

/// Moving-average aggregation factor.
pub const DEFAULT_ALPHA: f64 = 0.9;
/// Reward scaling applied when the raw accuracy delta feeds policy scoring.
pub const GLOBAL_REWARD_SCALE: f64 = 1e-4;

/// One recorded global-map mutation, with enough state to undo its effect on
/// the accuracy ledger.
#[derive(Debug, Clone, Copy)]
struct CellWrite {
    cell: CellIndex,
    was_touched: bool,
    old_occupied: f64,
    old_explored: f64,
}

/// Anticipation reward for one step: raw accuracy delta in cell-channel
/// counts, and the same delta under the policy reward scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnticipationReward {
    pub raw: i64,
    pub scaled: f64,
}

/// Per-episode mapping state.
#[derive(Debug, Clone)]
pub struct MapperState {
    pub global: GlobalOccupancy,
    pub pose_est: Pose,
    pub step: u64,
    pub alpha: f64,
    seen_mask: Vec<bool>,
    last_accuracy: Option<u64>,
    pending: Vec<CellWrite>,
}

impl MapperState {
    pub fn new(spec: MapSpec, alpha: f64, pose_est: Pose) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        Self {
            global: GlobalOccupancy::new(spec),
            pose_est,
            step: 0,
            alpha,
            seen_mask: vec![false; spec.cell_count()],
            last_accuracy: None,
            pending: Vec::new(),
        }
    }

    /// Fuse an entropy-filtered local map into the global map at the
    /// estimated pose: `m <- alpha * m + (1 - alpha) * p` on every surviving
    /// cell. Returns the number of cells written.
    pub fn register(&mut self, filtered: &LocalOccupancy, pose_est: Pose) -> usize {
        self.pose_est = pose_est;
        let writes = transform_local_to_global(filtered, pose_est, self.global.spec());
        let n = writes.len();
        for (cell, occ, exp) in writes {
            let (old_occ, old_exp) = self.global.probs(cell);
            self.pending.push(CellWrite {
                cell,
                was_touched: self.global.is_touched(cell),
                old_occupied: old_occ,
                old_explored: old_exp,
            });
            self.global.set(
                cell,
                self.alpha * old_occ + (1.0 - self.alpha) * occ,
                self.alpha * old_exp + (1.0 - self.alpha) * exp,
            );
        }
        n
    }

    /// Stamp the cell one body radius ahead of the pose estimate as occupied
    /// after a collision.
    pub fn mark_collision(&mut self, pose_est: Pose) {
        let spec = *self.global.spec();
        let ahead = (
            pose_est.x + pose_est.theta.cos() * spec.cell_size,
            pose_est.y + pose_est.theta.sin() * spec.cell_size,
        );
        let Ok(cell) = world_to_cell(ahead, &spec) else {
            return;
        };
        let (old_occ, old_exp) = self.global.probs(cell);
        let new_occ = old_occ.max(0.95);
        if self.global.is_touched(cell) && new_occ == old_occ && old_exp == 1.0 {
            return;
        }
        self.pending.push(CellWrite {
            cell,
            was_touched: self.global.is_touched(cell),
            old_occupied: old_occ,
            old_explored: old_exp,
        });
        self.global.set(cell, new_occ, 1.0);
    }

    /// Drain pending writes and return the accuracy delta they caused.
    ///
    /// The ledger updates incrementally over written cells only; the first
    /// call anchors it with one full recomputation.
    pub fn anticipation_reward(
        &mut self,
        gt: &GroundTruthLayout,
        threshold: f64,
    ) -> Result<AnticipationReward, GridError> {
        let mut delta = 0i64;
        let writes = std::mem::take(&mut self.pending);
        for w in &writes {
            let gt_cell = gt.get(w.cell);
            let old_bin = if w.was_touched {
                binarize_cell(w.old_occupied, w.old_explored, threshold)
            } else {
                BinCell::Unexplored
            };
            let new_bin = self.global.binarize_cell_at(w.cell, threshold);
            delta += cell_match_count(new_bin, gt_cell) as i64
                - cell_match_count(old_bin, gt_cell) as i64;
        }
        let after = match self.last_accuracy {
            Some(a) => (a as i64 + delta) as u64,
            None => grid::map_accuracy(&self.global, gt, threshold)?,
        };
        self.last_accuracy = Some(after);
        Ok(AnticipationReward {
            raw: delta,
            scaled: delta as f64 * GLOBAL_REWARD_SCALE,
        })
    }

    pub fn accuracy(&self) -> Option<u64> {
        self.last_accuracy
    }

    /// Full-recompute cross-check of the incremental accuracy ledger.
    pub fn verify_accuracy(
        &self,
        gt: &GroundTruthLayout,
        threshold: f64,
    ) -> Result<bool, GridError> {
        let full = grid::map_accuracy(&self.global, gt, threshold)?;
        Ok(self.pending.is_empty() && self.last_accuracy == Some(full))
    }

    /// Fold a scan's directly-seen cells (true pose, no anticipation) into
    /// the seen mask; returns the total area seen so far in square meters.
    pub fn update_area_seen(&mut self, scan: &DepthScan, v: usize) -> f64 {
        let spec = *self.global.spec();
        let visible = sensor::project_scan(scan, v, spec.cell_size);
        for (cell, _, _) in transform_local_to_global(&visible, scan.pose_at_capture, &spec) {
            self.seen_mask[spec.linear(cell)] = true;
        }
        self.area_seen_m2()
    }

    pub fn area_seen_m2(&self) -> f64 {
        let s = self.global.spec().cell_size;
        self.seen_mask.iter().filter(|b| **b).count() as f64 * s * s
    }

    pub fn seen_mask(&self) -> &[bool] {
        &self.seen_mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LayoutCell;
    use crate::world::{FloorplanParams, generate_floorplan, simulate_depth_scan};

    fn spec(side: usize) -> MapSpec {
        MapSpec::new(0.05, side, (0.0, 0.0)).unwrap()
    }

    fn full_window(v: usize, occ: f64, exp: f64) -> LocalOccupancy {
        let mut m = LocalOccupancy::unknown(v);
        for y in 0..v {
            for x in 0..v {
                m.set(x, y, occ, exp);
            }
        }
        m
    }

    #[test]
    fn register_moving_average_from_prior() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.0));
        let local = full_window(5, 1.0, 1.0);
        state.register(&local, state.pose_est);
        // Prior 0.5, incoming 1.0, alpha 0.9 -> 0.55.
        let (occ, _) = state.global.probs(CellIndex::new(15, 15));
        assert!((occ - 0.55).abs() < 1e-12);
    }

    #[test]
    fn register_skips_masked_cells() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.0));
        let mut local = LocalOccupancy::unknown(5);
        local.set(2, 2, 1.0, 1.0); // only the agent cell survives the filter
        state.register(&local, state.pose_est);
        assert!(state.global.is_touched(CellIndex::new(15, 15)));
        assert!(!state.global.is_touched(CellIndex::new(16, 15)));
        assert_eq!(state.global.probs(CellIndex::new(16, 15)), (0.5, 0.5));
    }

    #[test]
    fn repeated_registration_matches_geometric_series() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.0));
        let local = full_window(5, 1.0, 1.0);
        let n = 20;
        for _ in 0..n {
            state.register(&local, state.pose_est);
        }
        // Iterative oracle: p0 * a^n + v * (1 - a^n).
        let want = 0.5 * 0.9f64.powi(n) + 1.0 * (1.0 - 0.9f64.powi(n));
        let (occ, exp) = state.global.probs(CellIndex::new(15, 15));
        assert!((occ - want).abs() < 1e-12, "occ {occ} want {want}");
        assert!((exp - want).abs() < 1e-12);
    }

    #[test]
    fn register_keeps_probabilities_in_unit_interval() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.7));
        for i in 0..50 {
            let local = full_window(7, (i % 2) as f64, 1.0);
            state.register(&local, state.pose_est);
        }
        for y in 0..31 {
            for x in 0..31 {
                let (occ, exp) = state.global.probs(CellIndex::new(x, y));
                assert!((0.0..=1.0).contains(&occ) && (0.0..=1.0).contains(&exp));
            }
        }
    }

    #[test]
    fn reward_direct_delta_and_telescoping() {
        let sp = spec(31);
        let mut gt = GroundTruthLayout::filled(sp, LayoutCell::Free);
        gt.set(CellIndex::new(17, 15), LayoutCell::Occupied);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let pose = Pose::new(center.0, center.1, 0.0);
        let mut state = MapperState::new(sp, 0.9, pose);

        let initial = grid::map_accuracy(&state.global, &gt, 0.5).unwrap();
        let mut reward_sum = 0i64;
        // Confident free window, repeatedly fused.
        let local = full_window(5, 0.0, 1.0);
        for _ in 0..12 {
            state.register(&local, pose);
            let r = state.anticipation_reward(&gt, 0.5).unwrap();
            reward_sum += r.raw;
            assert!((r.scaled - r.raw as f64 * 1e-4).abs() < 1e-15);
        }
        let final_acc = grid::map_accuracy(&state.global, &gt, 0.5).unwrap();
        assert_eq!(reward_sum, final_acc as i64 - initial as i64);
        assert!(state.verify_accuracy(&gt, 0.5).unwrap());
    }

    #[test]
    fn reward_zero_when_nothing_changes() {
        let sp = spec(31);
        let gt = GroundTruthLayout::filled(sp, LayoutCell::Free);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.0));
        let r = state.anticipation_reward(&gt, 0.5).unwrap();
        assert_eq!(r.raw, 0);
        let r = state.anticipation_reward(&gt, 0.5).unwrap();
        assert_eq!(r.raw, 0);
    }

    #[test]
    fn collision_mark_sets_cell_ahead_of_estimate() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        // Estimate deliberately offset from anywhere "true": the contract is
        // that the mark lands relative to the estimate.
        let est = Pose::new(center.0, center.1, 0.0);
        let mut state = MapperState::new(sp, 0.9, est);
        state.mark_collision(est);
        let (occ, exp) = state.global.probs(CellIndex::new(16, 15));
        assert!(occ >= 0.95);
        assert_eq!(exp, 1.0);
        assert!(!state.global.is_touched(CellIndex::new(14, 15)));
    }

    #[test]
    fn collision_mark_respects_max_rule() {
        let sp = spec(31);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let est = Pose::new(center.0, center.1, 0.0);
        let mut state = MapperState::new(sp, 0.9, est);
        state.global.set(CellIndex::new(16, 15), 1.0, 1.0);
        state.mark_collision(est);
        assert_eq!(state.global.probs(CellIndex::new(16, 15)), (1.0, 1.0));
    }

    #[test]
    fn collision_mark_enters_reward_ledger() {
        let sp = spec(31);
        let mut gt = GroundTruthLayout::filled(sp, LayoutCell::Free);
        gt.set(CellIndex::new(16, 15), LayoutCell::Occupied);
        let center = sp.cell_center(CellIndex::new(15, 15));
        let est = Pose::new(center.0, center.1, 0.0);
        let mut state = MapperState::new(sp, 0.9, est);
        let initial = grid::map_accuracy(&state.global, &gt, 0.5).unwrap();
        state.mark_collision(est);
        let r = state.anticipation_reward(&gt, 0.5).unwrap();
        let final_acc = grid::map_accuracy(&state.global, &gt, 0.5).unwrap();
        assert_eq!(r.raw, final_acc as i64 - initial as i64);
        assert_eq!(r.raw, 2); // occupied+explored channels both now match
    }

    #[test]
    fn area_seen_idempotent_for_repeated_scans() {
        let params = FloorplanParams {
            extent_m: 8.0,
            rooms: (1, 1),
            obstacle_density: 0.0,
            seed: 2,
            ..FloorplanParams::default()
        };
        let layout = generate_floorplan(&params).unwrap();
        let free = crate::world::clear_free_cells(&layout, 0.3);
        let cell = free[free.len() / 2];
        let c = layout.spec().cell_center(cell);
        let pose = Pose::new(c.0, c.1, 0.0);
        let mut state = MapperState::new(*layout.spec(), 0.9, pose);
        assert_eq!(state.area_seen_m2(), 0.0);
        let scan = simulate_depth_scan(&layout, pose, 1.5, 64, f64::INFINITY).unwrap();
        let a1 = state.update_area_seen(&scan, 41);
        let a2 = state.update_area_seen(&scan, 41);
        assert!(a1 > 0.0);
        assert_eq!(a1, a2);
    }

    #[test]
    fn area_seen_full_revolution_disc() {
        // 36 turn-in-place scans covering a full revolution in a big room:
        // the union approaches the rasterized 3 m disc, pi * 9 m^2.
        let side = 301; // 15 m
        let sp = spec(side);
        let mut layout = GroundTruthLayout::filled(sp, LayoutCell::Free);
        for i in 0..side {
            for (x, y) in [(i, 0), (i, side - 1), (0, i), (side - 1, i)] {
                layout.set(CellIndex::new(x, y), LayoutCell::Occupied);
            }
        }
        let center = sp.cell_center(CellIndex::new(150, 150));
        let mut state = MapperState::new(sp, 0.9, Pose::new(center.0, center.1, 0.0));
        let mut area = 0.0;
        for k in 0..36 {
            let pose = Pose::new(center.0, center.1, k as f64 * crate::sensor::TURN_STEP_RAD);
            let scan =
                simulate_depth_scan(&layout, pose, crate::sensor::DEFAULT_FOV_RAD, 128, f64::INFINITY)
                    .unwrap();
            let next = state.update_area_seen(&scan, 125);
            assert!(next >= area, "area seen must be nondecreasing");
            area = next;
        }
        let want = std::f64::consts::PI * 9.0;
        assert!(
            (area - want).abs() / want < 0.10,
            "area {area:.2} vs disc {want:.2}"
        );
    }
}
