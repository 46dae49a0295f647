//! Core grid/coordinate types, binarization, and map-comparison metrics.
//!
//! Maps are two-channel probability grids: channel 0 is the probability that
//! a cell is occupied, channel 1 the probability that it is explored (i.e.
//! that its state is claimed known). Metrics compare a binarized prediction
//! against a categorical ground-truth layout; cells outside the environment
//! (void) are excluded throughout.

use std::collections::BTreeMap;

use thiserror::Error;

/// Meters per cell, the map scale shared by local and global grids.
pub const DEFAULT_CELL_SIZE_M: f64 = 0.05;
/// Side length of the egocentric local map, in cells.
pub const DEFAULT_LOCAL_SIDE: usize = 101;
/// Side length of the global map, in cells.
pub const DEFAULT_GLOBAL_SIDE: usize = 961;
/// Probability threshold used when discretizing map channels.
pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.5;
/// Prior probability held by never-written global cells, both channels.
pub const PRIOR_PROB: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("point ({x:.3}, {y:.3}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid map spec: {0}")]
    InvalidSpec(String),
    #[error("map specs do not match: {0}")]
    SpecMismatch(String),
    #[error("grid shapes do not match: {0} vs {1}")]
    ShapeMismatch(usize, usize),
}

/// Geometry of a square grid: cell size, side length and world origin.
///
/// The origin is the world coordinate of the low corner of cell (0, 0);
/// cell (x, y) covers the half-open square
/// `[origin + (x, y)*cell_size, origin + (x+1, y+1)*cell_size)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSpec {
    pub cell_size: f64,
    pub side: usize,
    pub origin: (f64, f64),
}

impl MapSpec {
    pub fn new(cell_size: f64, side: usize, origin: (f64, f64)) -> Result<Self, GridError> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(GridError::InvalidSpec(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if side < 3 {
            return Err(GridError::InvalidSpec(format!(
                "side must be at least 3, got {side}"
            )));
        }
        Ok(Self {
            cell_size,
            side,
            origin,
        })
    }

    /// Spec for an agent-centered local map; the side must be odd.
    pub fn local(cell_size: f64, side: usize) -> Result<Self, GridError> {
        if side % 2 == 0 {
            return Err(GridError::InvalidSpec(format!(
                "local map side must be odd, got {side}"
            )));
        }
        Self::new(cell_size, side, (0.0, 0.0))
    }

    pub fn extent_m(&self) -> f64 {
        self.cell_size * self.side as f64
    }

    pub fn cell_count(&self) -> usize {
        self.side * self.side
    }

    /// World coordinates of a cell's center.
    pub fn cell_center(&self, cell: CellIndex) -> (f64, f64) {
        (
            self.origin.0 + (cell.x as f64 + 0.5) * self.cell_size,
            self.origin.1 + (cell.y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn linear(&self, cell: CellIndex) -> usize {
        cell.y * self.side + cell.x
    }

    pub fn from_linear(&self, idx: usize) -> CellIndex {
        CellIndex {
            x: idx % self.side,
            y: idx / self.side,
        }
    }
}

/// Index of a grid cell; `x` runs along world x, `y` along world y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Map a world point to its containing cell, `floor((point - origin)/cell_size)`.
pub fn world_to_cell(point: (f64, f64), spec: &MapSpec) -> Result<CellIndex, GridError> {
    let gx = ((point.0 - spec.origin.0) / spec.cell_size).floor();
    let gy = ((point.1 - spec.origin.1) / spec.cell_size).floor();
    if gx < 0.0 || gy < 0.0 || gx >= spec.side as f64 || gy >= spec.side as f64 {
        return Err(GridError::OutOfBounds {
            x: point.0,
            y: point.1,
        });
    }
    Ok(CellIndex {
        x: gx as usize,
        y: gy as usize,
    })
}

/// Ground-truth state of a layout cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutCell {
    Free,
    Occupied,
    /// Outside the environment; excluded from metrics and targets.
    Void,
}

/// Discretized state of a predicted map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinCell {
    Free,
    Occupied,
    Unexplored,
}

/// Class selector for per-class map scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccClass {
    Free,
    Occupied,
}

/// Planar position in meters plus heading in radians, normalized to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn distance_to(&self, point: (f64, f64)) -> f64 {
        ((self.x - point.0).powi(2) + (self.y - point.1).powi(2)).sqrt()
    }
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let a = theta.rem_euclid(two_pi);
    if a > std::f64::consts::PI {
        a - two_pi
    } else {
        a
    }
}

/// Egocentric two-channel probability map over a V x V window.
///
/// The agent sits at the center cell; local +x is the agent's heading and
/// local +y its left. Cells with `valid == false` carry no prediction and are
/// ignored by every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOccupancy {
    side: usize,
    occupied: Vec<f64>,
    explored: Vec<f64>,
    valid: Vec<bool>,
}

impl LocalOccupancy {
    /// All-unknown map: probabilities zero, nothing valid.
    pub fn unknown(side: usize) -> Self {
        assert!(side >= 3 && side % 2 == 1, "local side must be odd and >= 3");
        let n = side * side;
        Self {
            side,
            occupied: vec![0.0; n],
            explored: vec![0.0; n],
            valid: vec![false; n],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Index of the agent-centered cell along one axis.
    pub fn center(&self) -> usize {
        (self.side - 1) / 2
    }

    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.side && y < self.side);
        y * self.side + x
    }

    pub fn probs(&self, x: usize, y: usize) -> (f64, f64) {
        let i = self.idx(x, y);
        (self.occupied[i], self.explored[i])
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.idx(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, occupied: f64, explored: f64) {
        debug_assert!((0.0..=1.0).contains(&occupied) && (0.0..=1.0).contains(&explored));
        let i = self.idx(x, y);
        self.occupied[i] = occupied;
        self.explored[i] = explored;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        self.valid[i] = false;
        self.occupied[i] = 0.0;
        self.explored[i] = 0.0;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Iterate `(x, y, occupied, explored)` over valid cells in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.side * self.side).filter_map(move |i| {
            if self.valid[i] {
                Some((
                    i % self.side,
                    i / self.side,
                    self.occupied[i],
                    self.explored[i],
                ))
            } else {
                None
            }
        })
    }

    /// Discretize each cell; invalid cells are unexplored by definition.
    pub fn binarize(&self, threshold: f64) -> Vec<BinCell> {
        (0..self.side * self.side)
            .map(|i| {
                if !self.valid[i] {
                    BinCell::Unexplored
                } else {
                    binarize_cell(self.occupied[i], self.explored[i], threshold)
                }
            })
            .collect()
    }
}

/// Global two-channel probability map with a fixed world origin.
///
/// Cells never written hold the prior 0.5 in both channels and binarize to
/// unexplored.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOccupancy {
    spec: MapSpec,
    occupied: Vec<f64>,
    explored: Vec<f64>,
    touched: Vec<bool>,
}

impl GlobalOccupancy {
    pub fn new(spec: MapSpec) -> Self {
        let n = spec.cell_count();
        Self {
            spec,
            occupied: vec![PRIOR_PROB; n],
            explored: vec![PRIOR_PROB; n],
            touched: vec![false; n],
        }
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn probs(&self, cell: CellIndex) -> (f64, f64) {
        let i = self.spec.linear(cell);
        (self.occupied[i], self.explored[i])
    }

    pub fn is_touched(&self, cell: CellIndex) -> bool {
        self.touched[self.spec.linear(cell)]
    }

    pub fn set(&mut self, cell: CellIndex, occupied: f64, explored: f64) {
        debug_assert!((0.0..=1.0).contains(&occupied) && (0.0..=1.0).contains(&explored));
        let i = self.spec.linear(cell);
        self.occupied[i] = occupied;
        self.explored[i] = explored;
        self.touched[i] = true;
    }

    pub fn touched_count(&self) -> usize {
        self.touched.iter().filter(|t| **t).count()
    }

    /// Discretize each cell; untouched cells are unexplored by definition.
    pub fn binarize(&self, threshold: f64) -> Vec<BinCell> {
        (0..self.spec.cell_count())
            .map(|i| {
                if !self.touched[i] {
                    BinCell::Unexplored
                } else {
                    binarize_cell(self.occupied[i], self.explored[i], threshold)
                }
            })
            .collect()
    }

    pub fn binarize_cell_at(&self, cell: CellIndex, threshold: f64) -> BinCell {
        let i = self.spec.linear(cell);
        if !self.touched[i] {
            BinCell::Unexplored
        } else {
            binarize_cell(self.occupied[i], self.explored[i], threshold)
        }
    }
}

/// Discretize one (occupied, explored) probability pair.
///
/// The explored channel gates the result: a cell not credibly explored is
/// unexplored regardless of its occupied probability.
pub fn binarize_cell(occupied: f64, explored: f64, threshold: f64) -> BinCell {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    if explored < threshold {
        BinCell::Unexplored
    } else if occupied >= threshold {
        BinCell::Occupied
    } else {
        BinCell::Free
    }
}

/// Channel embedding of a binarized cell as (occupied, explored) bits.
fn bin_channels(cell: BinCell) -> (bool, bool) {
    match cell {
        BinCell::Occupied => (true, true),
        BinCell::Free => (false, true),
        BinCell::Unexplored => (false, false),
    }
}

/// Channel embedding of a ground-truth cell; void has no embedding.
fn gt_channels(cell: LayoutCell) -> Option<(bool, bool)> {
    match cell {
        LayoutCell::Occupied => Some((true, true)),
        LayoutCell::Free => Some((false, true)),
        LayoutCell::Void => None,
    }
}

/// Number of channels (0..=2) on which a binarized cell matches ground truth.
pub fn cell_match_count(pred: BinCell, gt: LayoutCell) -> u64 {
    let Some((gt_occ, gt_exp)) = gt_channels(gt) else {
        return 0;
    };
    let (p_occ, p_exp) = bin_channels(pred);
    (p_occ == gt_occ) as u64 + (p_exp == gt_exp) as u64
}

/// Categorical ground-truth layout of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLayout {
    spec: MapSpec,
    cells: Vec<LayoutCell>,
}

impl GroundTruthLayout {
    pub fn new(spec: MapSpec, cells: Vec<LayoutCell>) -> Result<Self, GridError> {
        if cells.len() != spec.cell_count() {
            return Err(GridError::ShapeMismatch(cells.len(), spec.cell_count()));
        }
        Ok(Self { spec, cells })
    }

    pub fn filled(spec: MapSpec, fill: LayoutCell) -> Self {
        let n = spec.cell_count();
        Self {
            spec,
            cells: vec![fill; n],
        }
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[LayoutCell] {
        &self.cells
    }

    pub fn get(&self, cell: CellIndex) -> LayoutCell {
        self.cells[self.spec.linear(cell)]
    }

    pub fn set(&mut self, cell: CellIndex, value: LayoutCell) {
        let i = self.spec.linear(cell);
        self.cells[i] = value;
    }

    /// Layout state at a world point; anything off-grid is void.
    pub fn at_point(&self, point: (f64, f64)) -> LayoutCell {
        match world_to_cell(point, &self.spec) {
            Ok(cell) => self.get(cell),
            Err(_) => LayoutCell::Void,
        }
    }

    pub fn is_free_point(&self, point: (f64, f64)) -> bool {
        self.at_point(point) == LayoutCell::Free
    }

    pub fn count(&self, state: LayoutCell) -> usize {
        self.cells.iter().filter(|c| **c == state).count()
    }

    pub fn non_void_count(&self) -> usize {
        self.cells.iter().filter(|c| **c != LayoutCell::Void).count()
    }
}

/// Unnormalized map accuracy: matched channels over all non-void cells.
///
/// The prediction is binarized per cell, embedded back as channel bits and
/// compared with the ground-truth embedding (occupied -> (1,1), free ->
/// (0,1)). The result is a cell-channel count; multiply by `cell_size^2` for
/// square meters.
pub fn map_accuracy(
    pred: &GlobalOccupancy,
    gt: &GroundTruthLayout,
    threshold: f64,
) -> Result<u64, GridError> {
    check_same_spec(pred.spec(), gt.spec())?;
    let bins = pred.binarize(threshold);
    Ok(bins
        .iter()
        .zip(gt.cells.iter())
        .map(|(&p, &g)| cell_match_count(p, g))
        .sum())
}

fn check_same_spec(a: &MapSpec, b: &MapSpec) -> Result<(), GridError> {
    if a.side != b.side || (a.cell_size - b.cell_size).abs() > 1e-12 {
        return Err(GridError::SpecMismatch(format!(
            "side {} vs {}, cell_size {} vs {}",
            a.side, b.side, a.cell_size, b.cell_size
        )));
    }
    Ok(())
}

/// Per-class IoU and F1 between two categorical grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub iou: f64,
    pub f1: f64,
}

/// Per-class scores with void cells excluded from both sides.
///
/// Both scores fall back to zero when their denominators are empty.
pub fn class_scores(
    pred: &[BinCell],
    gt: &[LayoutCell],
    class: OccClass,
) -> Result<ClassScores, GridError> {
    if pred.len() != gt.len() {
        return Err(GridError::ShapeMismatch(pred.len(), gt.len()));
    }
    let pred_is = |p: BinCell| match class {
        OccClass::Free => p == BinCell::Free,
        OccClass::Occupied => p == BinCell::Occupied,
    };
    let gt_is = |g: LayoutCell| match class {
        OccClass::Free => g == LayoutCell::Free,
        OccClass::Occupied => g == LayoutCell::Occupied,
    };
    let mut inter = 0u64;
    let mut pred_n = 0u64;
    let mut gt_n = 0u64;
    for (&p, &g) in pred.iter().zip(gt.iter()) {
        if g == LayoutCell::Void {
            continue;
        }
        let pi = pred_is(p);
        let gi = gt_is(g);
        if pi {
            pred_n += 1;
        }
        if gi {
            gt_n += 1;
        }
        if pi && gi {
            inter += 1;
        }
    }
    let union = pred_n + gt_n - inter;
    let iou = if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    };
    let f1 = if pred_n == 0 || gt_n == 0 {
        0.0
    } else {
        let precision = inter as f64 / pred_n as f64;
        let recall = inter as f64 / gt_n as f64;
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    };
    Ok(ClassScores { iou, f1 })
}

/// Register an egocentric map into global coordinates.
///
/// Each valid local cell center is rotated by the pose heading, translated by
/// its position, and dropped if it lands outside the global grid. When
/// several local cells land on the same global cell their probabilities are
/// averaged. Returns `(cell, occupied, explored)` triples ordered by linear
/// index.
pub fn transform_local_to_global(
    local: &LocalOccupancy,
    pose: Pose,
    spec: &MapSpec,
) -> Vec<(CellIndex, f64, f64)> {
    let c = local.center() as f64;
    let s = spec.cell_size;
    let (sin_t, cos_t) = pose.theta.sin_cos();
    let mut acc: BTreeMap<usize, (f64, f64, u32)> = BTreeMap::new();
    for (lx, ly, occ, exp) in local.iter_valid() {
        // Cell center in the agent frame: +x forward, +y left.
        let ax = (lx as f64 - c) * s;
        let ay = (ly as f64 - c) * s;
        let wx = pose.x + cos_t * ax - sin_t * ay;
        let wy = pose.y + sin_t * ax + cos_t * ay;
        if let Ok(cell) = world_to_cell((wx, wy), spec) {
            let e = acc.entry(spec.linear(cell)).or_insert((0.0, 0.0, 0));
            e.0 += occ;
            e.1 += exp;
            e.2 += 1;
        }
    }
    acc.into_iter()
        .map(|(lin, (occ, exp, n))| {
            (
                spec.from_linear(lin),
                occ / n as f64,
                exp / n as f64,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(side: usize) -> MapSpec {
        MapSpec::new(0.05, side, (0.0, 0.0)).unwrap()
    }

    #[test]
    fn world_to_cell_floor_arithmetic() {
        let sp = spec(10);
        assert_eq!(
            world_to_cell((0.12, 0.26), &sp).unwrap(),
            CellIndex::new(2, 5)
        );
    }

    #[test]
    fn world_to_cell_origin_is_zero_zero() {
        let sp = spec(10);
        assert_eq!(world_to_cell((0.0, 0.0), &sp).unwrap(), CellIndex::new(0, 0));
    }

    #[test]
    fn world_to_cell_rejects_outside() {
        let sp = spec(10);
        assert!(matches!(
            world_to_cell((-0.01, 0.0), &sp),
            Err(GridError::OutOfBounds { .. })
        ));
        assert!(world_to_cell((0.5, 0.0), &sp).is_err());
    }

    #[test]
    fn binarize_cases() {
        assert_eq!(binarize_cell(0.9, 0.9, 0.5), BinCell::Occupied);
        assert_eq!(binarize_cell(0.9, 0.1, 0.5), BinCell::Unexplored);
        assert_eq!(binarize_cell(0.2, 0.8, 0.5), BinCell::Free);
    }

    #[test]
    fn binarize_idempotent_on_reembedded_categories() {
        for cell in [BinCell::Free, BinCell::Occupied, BinCell::Unexplored] {
            let (occ, exp) = bin_channels(cell);
            let again = binarize_cell(occ as u8 as f64, exp as u8 as f64, 0.5);
            assert_eq!(again, cell);
        }
    }

    #[test]
    fn map_accuracy_perfect_and_flipped() {
        let sp = spec(3);
        // gt: 2x2 block free/occupied inside, rest void.
        let mut gt = GroundTruthLayout::filled(sp, LayoutCell::Void);
        gt.set(CellIndex::new(0, 0), LayoutCell::Free);
        gt.set(CellIndex::new(1, 0), LayoutCell::Occupied);
        gt.set(CellIndex::new(0, 1), LayoutCell::Occupied);
        gt.set(CellIndex::new(1, 1), LayoutCell::Free);
        let mut pred = GlobalOccupancy::new(sp);
        pred.set(CellIndex::new(0, 0), 0.1, 0.9);
        pred.set(CellIndex::new(1, 0), 0.9, 0.9);
        pred.set(CellIndex::new(0, 1), 0.9, 0.9);
        pred.set(CellIndex::new(1, 1), 0.1, 0.9);
        // 4 cells x 2 channels, all matched.
        assert_eq!(map_accuracy(&pred, &gt, 0.5).unwrap(), 8);
        // Flip one channel of one cell: occupied prob now reads free.
        pred.set(CellIndex::new(1, 0), 0.1, 0.9);
        assert_eq!(map_accuracy(&pred, &gt, 0.5).unwrap(), 7);
    }

    #[test]
    fn map_accuracy_all_unexplored_vs_all_free() {
        // Oracle: enumerate the indicator per channel with the stated
        // binarization. Unexplored embeds as (0,0); gt free as (0,1), so the
        // occupied channel matches on every cell and the explored channel on
        // none: 4 cells -> 4.
        let sp = spec(3);
        let mut gt = GroundTruthLayout::filled(sp, LayoutCell::Void);
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            gt.set(CellIndex::new(x, y), LayoutCell::Free);
        }
        let pred = GlobalOccupancy::new(sp); // untouched prior everywhere
        assert_eq!(map_accuracy(&pred, &gt, 0.5).unwrap(), 4);
    }

    #[test]
    fn map_accuracy_upper_bound_iff_exact() {
        let sp = spec(4);
        let mut gt = GroundTruthLayout::filled(sp, LayoutCell::Free);
        gt.set(CellIndex::new(2, 2), LayoutCell::Occupied);
        gt.set(CellIndex::new(0, 3), LayoutCell::Void);
        let mut pred = GlobalOccupancy::new(sp);
        for y in 0..4 {
            for x in 0..4 {
                let cell = CellIndex::new(x, y);
                match gt.get(cell) {
                    LayoutCell::Free => pred.set(cell, 0.0, 1.0),
                    LayoutCell::Occupied => pred.set(cell, 1.0, 1.0),
                    LayoutCell::Void => {}
                }
            }
        }
        let max = 2 * gt.non_void_count() as u64;
        assert_eq!(map_accuracy(&pred, &gt, 0.5).unwrap(), max);
    }

    #[test]
    fn map_accuracy_spec_mismatch() {
        let pred = GlobalOccupancy::new(spec(3));
        let gt = GroundTruthLayout::filled(spec(4), LayoutCell::Free);
        assert!(matches!(
            map_accuracy(&pred, &gt, 0.5),
            Err(GridError::SpecMismatch(_))
        ));
    }

    #[test]
    fn class_scores_identity_and_partial() {
        let gt = vec![LayoutCell::Free, LayoutCell::Occupied, LayoutCell::Free];
        let pred = vec![BinCell::Free, BinCell::Occupied, BinCell::Free];
        let s = class_scores(&pred, &gt, OccClass::Free).unwrap();
        assert_eq!(s.iou, 1.0);
        assert_eq!(s.f1, 1.0);

        // pred {a,b}, gt {b,c}: iou 1/3, f1 1/2.
        let gt = vec![LayoutCell::Free, LayoutCell::Free, LayoutCell::Occupied];
        let pred = vec![BinCell::Unexplored, BinCell::Free, BinCell::Free];
        let s = class_scores(&pred, &gt, OccClass::Free).unwrap();
        assert!((s.iou - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn class_scores_empty_prediction() {
        let gt = vec![LayoutCell::Occupied, LayoutCell::Occupied];
        let pred = vec![BinCell::Free, BinCell::Unexplored];
        let s = class_scores(&pred, &gt, OccClass::Occupied).unwrap();
        assert_eq!(s.iou, 0.0);
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn class_scores_shape_mismatch() {
        let gt = vec![LayoutCell::Free];
        let pred = vec![BinCell::Free, BinCell::Free];
        assert!(class_scores(&pred, &gt, OccClass::Free).is_err());
    }

    #[test]
    fn transform_identity_pose_is_pure_shift() {
        // Agent at the center of global cell (10, 10), heading 0: local cell
        // (ix, iy) must land exactly on global cell (10 + ix - c, 10 + iy - c).
        let sp = spec(21);
        let mut local = LocalOccupancy::unknown(5);
        for y in 0..5 {
            for x in 0..5 {
                local.set(x, y, 0.25 * x as f64, 1.0);
            }
        }
        let pose = Pose::new(
            sp.cell_center(CellIndex::new(10, 10)).0,
            sp.cell_center(CellIndex::new(10, 10)).1,
            0.0,
        );
        let out = transform_local_to_global(&local, pose, &sp);
        assert_eq!(out.len(), 25);
        let c = local.center() as isize;
        for (cell, occ, exp) in out {
            let ix = cell.x as isize - 10 + c;
            let iy = cell.y as isize - 10 + c;
            assert!((0..5).contains(&ix) && (0..5).contains(&iy));
            let (want_occ, want_exp) = local.probs(ix as usize, iy as usize);
            assert_eq!(occ, want_occ);
            assert_eq!(exp, want_exp);
        }
    }

    #[test]
    fn transform_rotation_by_pi_reflects() {
        let sp = spec(21);
        let mut local = LocalOccupancy::unknown(5);
        // One cell ahead of the agent.
        local.set(3, 2, 1.0, 1.0);
        let center = sp.cell_center(CellIndex::new(10, 10));
        let fwd = transform_local_to_global(&local, Pose::new(center.0, center.1, 0.0), &sp);
        let bwd = transform_local_to_global(
            &local,
            Pose::new(center.0, center.1, std::f64::consts::PI),
            &sp,
        );
        assert_eq!(fwd.len(), 1);
        assert_eq!(bwd.len(), 1);
        assert_eq!(fwd[0].0, CellIndex::new(11, 10));
        assert_eq!(bwd[0].0, CellIndex::new(9, 10));
    }

    #[test]
    fn transform_matches_bruteforce_affine_oracle() {
        // Independent per-cell affine oracle on a 5x5 local map at a rotated
        // pose, accumulating averages the slow way.
        let sp = spec(64);
        let mut local = LocalOccupancy::unknown(5);
        for y in 0..5 {
            for x in 0..5 {
                if (x + y) % 2 == 0 {
                    local.set(x, y, 0.1 * (x + 1) as f64, 0.9);
                }
            }
        }
        let pose = Pose::new(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let got = transform_local_to_global(&local, pose, &sp);

        let mut oracle: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
        let c = 2.0;
        for y in 0..5usize {
            for x in 0..5usize {
                if !local.is_valid(x, y) {
                    continue;
                }
                let ax = (x as f64 - c) * 0.05;
                let ay = (y as f64 - c) * 0.05;
                let wx = pose.x + pose.theta.cos() * ax - pose.theta.sin() * ay;
                let wy = pose.y + pose.theta.sin() * ax + pose.theta.cos() * ay;
                let gx = (wx / 0.05).floor();
                let gy = (wy / 0.05).floor();
                if gx >= 0.0 && gy >= 0.0 && gx < 64.0 && gy < 64.0 {
                    oracle
                        .entry((gx as usize, gy as usize))
                        .or_default()
                        .push(local.probs(x, y));
                }
            }
        }
        assert_eq!(got.len(), oracle.len());
        for (cell, occ, exp) in got {
            let vals = &oracle[&(cell.x, cell.y)];
            let mean_occ = vals.iter().map(|v| v.0).sum::<f64>() / vals.len() as f64;
            let mean_exp = vals.iter().map(|v| v.1).sum::<f64>() / vals.len() as f64;
            assert!((occ - mean_occ).abs() < 1e-12);
            assert!((exp - mean_exp).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_probs_stay_in_unit_interval() {
        let sp = spec(16);
        let mut local = LocalOccupancy::unknown(7);
        for y in 0..7 {
            for x in 0..7 {
                local.set(x, y, (x as f64 / 6.0).clamp(0.0, 1.0), 1.0);
            }
        }
        let pose = Pose::new(0.4, 0.4, 0.7);
        for (_, occ, exp) in transform_local_to_global(&local, pose, &sp) {
            assert!((0.0..=1.0).contains(&occ));
            assert!((0.0..=1.0).contains(&exp));
        }
    }

    #[test]
    fn normalize_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!(normalize_angle(0.1 - 2.0 * PI) - 0.1 < 1e-12);
    }

    #[test]
    fn class_scores_iou_symmetric_under_swap() {
        // Swap pred and gt roles by re-encoding; iou and f1 are symmetric.
        let gt = vec![
            LayoutCell::Free,
            LayoutCell::Free,
            LayoutCell::Occupied,
            LayoutCell::Free,
        ];
        let pred = vec![
            BinCell::Free,
            BinCell::Occupied,
            BinCell::Occupied,
            BinCell::Unexplored,
        ];
        let fwd = class_scores(&pred, &gt, OccClass::Free).unwrap();
        // Unexplored is outside the Free class either way, so Occupied is a
        // faithful stand-in when the prediction becomes the reference.
        let swapped_gt: Vec<LayoutCell> = pred
            .iter()
            .map(|p| match p {
                BinCell::Free => LayoutCell::Free,
                BinCell::Occupied => LayoutCell::Occupied,
                BinCell::Unexplored => LayoutCell::Occupied,
            })
            .collect();
        let swapped_pred: Vec<BinCell> = gt
            .iter()
            .map(|g| match g {
                LayoutCell::Free => BinCell::Free,
                LayoutCell::Occupied => BinCell::Occupied,
                LayoutCell::Void => BinCell::Unexplored,
            })
            .collect();
        let bwd = class_scores(&swapped_pred, &swapped_gt, OccClass::Free).unwrap();
        assert!((fwd.iou - bwd.iou).abs() < 1e-12);
        assert!((fwd.f1 - bwd.f1).abs() < 1e-12);
    }
}
