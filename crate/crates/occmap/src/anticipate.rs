//! Anticipators, the binary-cross-entropy training objective, and entropy
//! filtering of low-confidence predictions.
//!
//! An anticipator turns the visible egocentric occupancy into a completed
//! one. Three are provided: the identity baseline, a rule-based heuristic,
//! and a trainable per-cell logistic model over local patch features. All of
//! them preserve direct occupancy evidence: a cell the input marks occupied
//! stays occupied.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::LocalOccupancy;

/// Default entropy threshold, in nats. A cell predicted with confidence 0.75
/// has binary entropy 0.56234 nats; this default keeps such cells and masks
/// anything less confident.
pub const DEFAULT_TAU_ENT: f64 = 0.5624;

/// Probability clamp for the cross-entropy loss.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum AnticipateError {
    #[error("target mask has no valid cells")]
    NoValidCells,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("bad model dimensions: {0}")]
    BadModel(String),
    #[error("local map sides differ: {0} vs {1}")]
    SideMismatch(usize, usize),
}

/// Binary entropy in nats, with 0 ln 0 = 0.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Completes a visible occupancy map into an anticipated one.
pub trait Anticipator {
    fn anticipate(&self, visible: &LocalOccupancy) -> LocalOccupancy;
}

/// Identity baseline: predicts exactly what was seen.
#[derive(Debug, Clone, Copy, Default)]
pub struct VisibleOnly;

impl Anticipator for VisibleOnly {
    fn anticipate(&self, visible: &LocalOccupancy) -> LocalOccupancy {
        visible.clone()
    }
}

/// Rule-based anticipator: fills enclosed unknown pockets as free and
/// extends straight wall segments, both at confidence 0.75.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicAnticipator;

const HEURISTIC_CONF: f64 = 0.75;

impl Anticipator for HeuristicAnticipator {
    fn anticipate(&self, visible: &LocalOccupancy) -> LocalOccupancy {
        let v = visible.side();
        let mut out = visible.clone();

        let occupied_at = |x: i64, y: i64| -> bool {
            x >= 0
                && y >= 0
                && x < v as i64
                && y < v as i64
                && visible.is_valid(x as usize, y as usize)
                && visible.probs(x as usize, y as usize).0 >= 0.5
        };

        // Unknown pockets enclosed by free cells become free.
        let hole_free = enclosed_by_free(visible);
        // Unknown cells continuing >= 2 collinear occupied cells become walls.
        let mut wall_ext = vec![false; v * v];
        for y in 0..v as i64 {
            for x in 0..v as i64 {
                if visible.is_valid(x as usize, y as usize) {
                    continue;
                }
                let dirs = [
                    (1i64, 0i64),
                    (-1, 0),
                    (0, 1),
                    (0, -1),
                    (1, 1),
                    (1, -1),
                    (-1, 1),
                    (-1, -1),
                ];
                if dirs
                    .iter()
                    .any(|(dx, dy)| occupied_at(x - dx, y - dy) && occupied_at(x - 2 * dx, y - 2 * dy))
                {
                    wall_ext[y as usize * v + x as usize] = true;
                }
            }
        }

        for y in 0..v {
            for x in 0..v {
                if visible.is_valid(x, y) {
                    continue;
                }
                let i = y * v + x;
                if wall_ext[i] {
                    out.set(x, y, HEURISTIC_CONF, HEURISTIC_CONF);
                } else if hole_free[i] {
                    out.set(x, y, 1.0 - HEURISTIC_CONF, HEURISTIC_CONF);
                } else {
                    // No evidence either way: maximal entropy, so downstream
                    // filtering drops it.
                    out.set(x, y, 0.5, 0.5);
                }
            }
        }
        out
    }
}

/// Unknown cells belonging to a 4-connected unknown component that does not
/// touch the window border and whose known neighbors are all free.
fn enclosed_by_free(visible: &LocalOccupancy) -> Vec<bool> {
    let v = visible.side();
    let mut component = vec![usize::MAX; v * v];
    let mut comps: Vec<(bool, bool)> = Vec::new(); // (touches_border, all_free_boundary)
    for start in 0..v * v {
        if visible.is_valid(start % v, start / v) || component[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut touches = false;
        let mut all_free = true;
        let mut stack = vec![start];
        component[start] = id;
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % v) as i64, (i / v) as i64);
            if x == 0 || y == 0 || x == v as i64 - 1 || y == v as i64 - 1 {
                touches = true;
            }
            for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                if nx < 0 || ny < 0 || nx >= v as i64 || ny >= v as i64 {
                    continue;
                }
                let j = ny as usize * v + nx as usize;
                if visible.is_valid(nx as usize, ny as usize) {
                    if visible.probs(nx as usize, ny as usize).0 >= 0.5 {
                        all_free = false;
                    }
                } else if component[j] == usize::MAX {
                    component[j] = id;
                    stack.push(j);
                }
            }
        }
        comps.push((touches, all_free));
    }
    (0..v * v)
        .map(|i| {
            component[i] != usize::MAX && {
                let (touches, all_free) = comps[component[i]];
                !touches && all_free
            }
        })
        .collect()
}

/// Features per neighborhood cell: occupied prob, explored prob, and an
/// unknown indicator. Cells outside the window share the unknown encoding.
const FEATURES_PER_CELL: usize = 3;

/// Per-cell logistic model over k x k patch features, one weight vector per
/// output channel plus a bias each.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchModel {
    k: usize,
    weights: Vec<f64>,
}

impl PatchModel {
    /// Weights per output channel, including the bias.
    pub fn weights_per_channel(k: usize) -> usize {
        FEATURES_PER_CELL * k * k + 1
    }

    pub fn zeros(k: usize) -> Result<Self, AnticipateError> {
        if k % 2 == 0 || k == 0 {
            return Err(AnticipateError::BadModel(format!("k must be odd, got {k}")));
        }
        Ok(Self {
            k,
            weights: vec![0.0; 2 * Self::weights_per_channel(k)],
        })
    }

    pub fn from_weights(k: usize, weights: Vec<f64>) -> Result<Self, AnticipateError> {
        if k % 2 == 0 || k == 0 {
            return Err(AnticipateError::BadModel(format!("k must be odd, got {k}")));
        }
        let want = 2 * Self::weights_per_channel(k);
        if weights.len() != want {
            return Err(AnticipateError::BadModel(format!(
                "expected {want} weights for k={k}, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(AnticipateError::BadModel("non-finite weight".into()));
        }
        Ok(Self { k, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn channel(&self, c: usize) -> &[f64] {
        let n = Self::weights_per_channel(self.k);
        &self.weights[c * n..(c + 1) * n]
    }

    /// Pre-sigmoid activations (occupied, explored) for one window cell.
    fn logits(&self, visible: &LocalOccupancy, x: usize, y: usize) -> (f64, f64) {
        let v = visible.side();
        let h = (self.k / 2) as i64;
        let w_occ = self.channel(0);
        let w_exp = self.channel(1);
        let mut z = (
            *w_occ.last().unwrap(), // bias
            *w_exp.last().unwrap(),
        );
        let mut f = 0usize;
        for dy in -h..=h {
            for dx in -h..=h {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                let (occ, exp, unk) = if nx < 0 || ny < 0 || nx >= v as i64 || ny >= v as i64 {
                    (0.0, 0.0, 1.0)
                } else if visible.is_valid(nx as usize, ny as usize) {
                    let (o, e) = visible.probs(nx as usize, ny as usize);
                    (o, e, 0.0)
                } else {
                    (0.0, 0.0, 1.0)
                };
                z.0 += w_occ[f] * occ + w_occ[f + 1] * exp + w_occ[f + 2] * unk;
                z.1 += w_exp[f] * occ + w_exp[f + 1] * exp + w_exp[f + 2] * unk;
                f += FEATURES_PER_CELL;
            }
        }
        z
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl PatchModel {
    /// Predict both channels for every window cell with no support mask;
    /// cells valid in the input keep their observed values. This is the
    /// model the training objective and gradient refer to.
    pub fn predict_raw(&self, visible: &LocalOccupancy) -> LocalOccupancy {
        let v = visible.side();
        let mut out = LocalOccupancy::unknown(v);
        for y in 0..v {
            for x in 0..v {
                if visible.is_valid(x, y) {
                    let (o, e) = visible.probs(x, y);
                    out.set(x, y, o, e);
                } else {
                    let (z_occ, z_exp) = self.logits(visible, x, y);
                    out.set(x, y, sigmoid(z_occ), sigmoid(z_exp));
                }
            }
        }
        out
    }
}

impl Anticipator for PatchModel {
    /// Deployment prediction: like [`PatchModel::predict_raw`], but clipped
    /// to the anticipation support -- the visible mask grown by two rounds
    /// of hole-filling and dilation, the same region the training targets
    /// cover. Beyond it the model would extrapolate outside its training
    /// distribution, so those cells stay unknown.
    fn anticipate(&self, visible: &LocalOccupancy) -> LocalOccupancy {
        let v = visible.side();
        let support = anticipation_support(visible);
        let mut out = self.predict_raw(visible);
        for y in 0..v {
            for x in 0..v {
                if !support[y * v + x] && !visible.is_valid(x, y) {
                    out.invalidate(x, y);
                }
            }
        }
        out
    }
}

/// Cells near enough to evidence to anticipate: the visible mask grown by
/// two rounds of hole-filling and 3x3 dilation.
pub fn anticipation_support(visible: &LocalOccupancy) -> Vec<bool> {
    let v = visible.side();
    let mut mask: Vec<bool> = (0..v * v).map(|i| visible.is_valid(i % v, i / v)).collect();
    for _ in 0..2 {
        mask = crate::world::hole_fill(&mask, v);
        mask = crate::world::dilate3x3(&mask, v);
    }
    mask
}

/// Cells near enough to evidence to anticipate: the visible mask grown by
/// two rounds of hole-filling and 3x3 dilation.
pub fn anticipation_support(visible: &LocalOccupancy) -> Vec<bool> {
    let v = visible.side();
    let mut mask: Vec<bool> = (0..v * v).map(|i| visible.is_valid(i % v, i / v)).collect();
    for _ in 0..2 {
        mask = crate::world::hole_fill(&mask, v);
        mask = crate::world::dilate3x3(&mask, v);
    }
    mask
}

/// Mean binary cross entropy over target-valid cells, both channels.
pub fn bce_loss(pred: &LocalOccupancy, target: &LocalOccupancy) -> Result<f64, AnticipateError> {
    if pred.side() != target.side() {
        return Err(AnticipateError::SideMismatch(pred.side(), target.side()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y, t_occ, t_exp) in target.iter_valid() {
        let (p_occ, p_exp) = pred.probs(x, y);
        sum += bce_term(p_occ, t_occ) + bce_term(p_exp, t_exp);
        n += 1;
    }
    if n == 0 {
        return Err(AnticipateError::NoValidCells);
    }
    Ok(sum / (2 * n) as f64)
}

fn bce_term(p: f64, t: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// BCE loss of `model.anticipate(visible)` against `target`, plus its
/// analytic gradient with respect to the model weights.
///
/// Cells covered by direct evidence are constants of the model, so they
/// contribute loss but no gradient.
pub fn loss_and_gradient(
    model: &PatchModel,
    visible: &LocalOccupancy,
    target: &LocalOccupancy,
) -> Result<(f64, Vec<f64>), AnticipateError> {
    if visible.side() != target.side() {
        return Err(AnticipateError::SideMismatch(visible.side(), target.side()));
    }
    let v = visible.side();
    let n_per = PatchModel::weights_per_channel(model.k);
    let mut grad = vec![0.0; 2 * n_per];
    let mut loss = 0.0;
    let mut n_valid = 0usize;

    // First pass to know the normalizer.
    for (_x, _y, _o, _e) in target.iter_valid() {
        n_valid += 1;
    }
    if n_valid == 0 {
        return Err(AnticipateError::NoValidCells);
    }
    let norm = 1.0 / (2 * n_valid) as f64;

    let h = (model.k / 2) as i64;
    for (x, y, t_occ, t_exp) in target.iter_valid() {
        if visible.is_valid(x, y) {
            let (p_occ, p_exp) = visible.probs(x, y);
            loss += (bce_term(p_occ, t_occ) + bce_term(p_exp, t_exp)) * norm;
            continue;
        }
        let (z_occ, z_exp) = model.logits(visible, x, y);
        let p_occ = sigmoid(z_occ);
        let p_exp = sigmoid(z_exp);
        loss += (bce_term(p_occ, t_occ) + bce_term(p_exp, t_exp)) * norm;
        // d(bce)/dz = p - t while the clamp is inactive; clamped cells are
        // flat in the weights.
        let d_occ = if p_occ < BCE_EPS || p_occ > 1.0 - BCE_EPS {
            0.0
        } else {
            (p_occ - t_occ) * norm
        };
        let d_exp = if p_exp < BCE_EPS || p_exp > 1.0 - BCE_EPS {
            0.0
        } else {
            (p_exp - t_exp) * norm
        };
        let mut f = 0usize;
        for dy in -h..=h {
            for dx in -h..=h {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                let (occ, exp, unk) = if nx < 0 || ny < 0 || nx >= v as i64 || ny >= v as i64 {
                    (0.0, 0.0, 1.0)
                } else if visible.is_valid(nx as usize, ny as usize) {
                    let (o, e) = visible.probs(nx as usize, ny as usize);
                    (o, e, 0.0)
                } else {
                    (0.0, 0.0, 1.0)
                };
                grad[f] += d_occ * occ;
                grad[f + 1] += d_occ * exp;
                grad[f + 2] += d_occ * unk;
                grad[n_per + f] += d_exp * occ;
                grad[n_per + f + 1] += d_exp * exp;
                grad[n_per + f + 2] += d_exp * unk;
                f += FEATURES_PER_CELL;
            }
        }
        grad[n_per - 1] += d_occ; // biases
        grad[2 * n_per - 1] += d_exp;
    }
    Ok((loss, grad))
}

/// Mini-batch gradient-descent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 50,
            batch_size: 8,
            l2: 1e-4,
            seed: 0,
            k: 9,
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PatchModel,
    /// Mean training objective after each epoch (data loss + L2 penalty).
    pub loss_trace: Vec<f64>,
    /// Set when the loss failed to decrease over some 5-epoch window.
    pub plateau_warning: bool,
}

/// Train a patch model by mini-batch gradient descent on the BCE objective.
/// Deterministic in the seed.
pub fn train_patch(
    dataset: &[(LocalOccupancy, LocalOccupancy)],
    config: &TrainConfig,
) -> Result<TrainOutcome, AnticipateError> {
    if dataset.is_empty() {
        return Err(AnticipateError::EmptyDataset);
    }
    if config.learning_rate <= 0.0 {
        return Err(AnticipateError::BadModel(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    let mut model = PatchModel::zeros(config.k)?;
    let n_weights = model.weights.len();
    let n_per = PatchModel::weights_per_channel(config.k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    let penalty = |w: &[f64]| -> f64 {
        if config.l2 == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let is_bias = i == n_per - 1 || i == 2 * n_per - 1;
            if !is_bias {
                s += wi * wi;
            }
        }
        config.l2 * s
    };

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let mut grad = vec![0.0; n_weights];
            let mut used = 0usize;
            for &i in batch {
                let (visible, target) = &dataset[i];
                match loss_and_gradient(&model, visible, target) {
                    Ok((_, g)) => {
                        for (a, b) in grad.iter_mut().zip(g.iter()) {
                            *a += b;
                        }
                        used += 1;
                    }
                    Err(AnticipateError::NoValidCells) => continue,
                    Err(e) => return Err(e),
                }
            }
            if used == 0 {
                continue;
            }
            let inv = 1.0 / used as f64;
            for (i, w) in model.weights.iter_mut().enumerate() {
                let is_bias = i == n_per - 1 || i == 2 * n_per - 1;
                let l2_term = if is_bias { 0.0 } else { 2.0 * config.l2 * *w };
                *w -= config.learning_rate * (grad[i] * inv + l2_term);
            }
        }
        // Full-train-set objective for the trace.
        let mut total = 0.0;
        let mut counted = 0usize;
        for (visible, target) in dataset {
            let pred = model.anticipate(visible);
            match bce_loss(&pred, target) {
                Ok(l) => {
                    total += l;
                    counted += 1;
                }
                Err(AnticipateError::NoValidCells) => continue,
                Err(e) => return Err(e),
            }
        }
        let mean = if counted == 0 { 0.0 } else { total / counted as f64 };
        trace.push(mean + penalty(&model.weights));
    }

    let plateau_warning = trace
        .iter()
        .enumerate()
        .skip(5)
        .any(|(i, &l)| l > trace[i - 5] + 1e-12);
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
        plateau_warning,
    })
}

/// Mask out cells whose prediction is too uncertain.
///
/// A valid cell is dropped when the binary entropy of either channel exceeds
/// `tau` nats; everything else passes through unchanged.
pub fn entropy_filter(local: &LocalOccupancy, tau: f64) -> LocalOccupancy {
    assert!(
        tau > 0.0 && tau <= std::f64::consts::LN_2 + 1e-12,
        "tau must lie in (0, ln 2], got {tau}"
    );
    let v = local.side();
    let mut out = local.clone();
    for y in 0..v {
        for x in 0..v {
            if !local.is_valid(x, y) {
                continue;
            }
            let (occ, exp) = local.probs(x, y);
            if binary_entropy(occ) > tau || binary_entropy(exp) > tau {
                out.invalidate(x, y);
            }
        }
    }
    out
}
