//! Depth projection, actuation and odometry noise, dead reckoning.
//!
//! Noise follows truncated Gaussians; odometry carries a per-episode bias
//! sign so readings systematically over- or under-report motion, which is
//! what makes dead-reckoned pose estimates drift.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{GroundTruthLayout, LocalOccupancy, Pose, normalize_angle};
use crate::world::DepthScan;

/// Forward step length, meters.
pub const FORWARD_STEP_M: f64 = 0.25;
/// Turn step, radians (10 degrees).
pub const TURN_STEP_RAD: f64 = 0.17453292519943295;
/// Depth projections beyond this range are discarded.
pub const PROJECTION_RANGE_M: f64 = 3.0;
/// Default sensor field of view, radians (90 degrees).
pub const DEFAULT_FOV_RAD: f64 = std::f64::consts::FRAC_PI_2;
/// Default ray count, matching a 128-pixel-wide depth image.
pub const DEFAULT_N_RAYS: usize = 128;

/// Discrete action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::MoveForward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
            Action::Stop => "stop",
        }
    }
}

/// Truncated Gaussian: N(mean, std^2) conditioned on
/// |sample - mean| <= truncation * std.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncGaussParams {
    pub mean: f64,
    pub std: f64,
    /// Truncation half-width in multiples of std.
    pub truncation: f64,
}

impl TruncGaussParams {
    pub fn new(mean: f64, std: f64) -> Self {
        Self {
            mean,
            std,
            truncation: 2.0,
        }
    }
}

/// Noise configuration for odometry and actuation.
///
/// Odometry defaults are the reference values: translation error with mean
/// 0.025 m / std 0.001, rotation error with mean 0.9 deg / std 0.057 deg,
/// both truncated at two standard deviations. Actuation defaults are
/// zero-mean stand-ins for an external robot model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub odom_translation: TruncGaussParams,
    pub odom_rotation: TruncGaussParams,
    pub act_translation: TruncGaussParams,
    pub act_rotation: TruncGaussParams,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            odom_translation: TruncGaussParams::new(0.025, 0.001),
            odom_rotation: TruncGaussParams::new(0.9_f64.to_radians(), 0.057_f64.to_radians()),
            act_translation: TruncGaussParams::new(0.0, 0.01),
            act_rotation: TruncGaussParams::new(0.0, 1.0_f64.to_radians()),
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

/// Relative pose change reported by the odometer, in the previous pose frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryReading {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

/// Per-episode direction of the odometry bias, one sign per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdomSigns {
    pub translation: f64,
    pub rotation: f64,
}

impl OdomSigns {
    pub fn draw(rng: &mut impl Rng) -> Self {
        Self {
            translation: if rng.random::<bool>() { 1.0 } else { -1.0 },
            rotation: if rng.random::<bool>() { 1.0 } else { -1.0 },
        }
    }

    pub fn positive() -> Self {
        Self {
            translation: 1.0,
            rotation: 1.0,
        }
    }
}

/// Draw from a truncated Gaussian by rejection.
pub fn sample_trunc_gauss(params: &TruncGaussParams, rng: &mut impl Rng) -> f64 {
    if params.std <= 0.0 {
        return params.mean;
    }
    let normal = Normal::new(params.mean, params.std).expect("std checked positive");
    let bound = params.truncation * params.std;
    loop {
        let s = normal.sample(rng);
        if (s - params.mean).abs() <= bound {
            return s;
        }
    }
}

/// Body radius used for collision clearance, in cells.
const BODY_RADIUS_CELLS: f64 = 1.0;
/// Sweep resolution for forward motion, as a fraction of a cell.
const SWEEP_STEP_FRACTION: f64 = 0.1;

fn pose_clear(layout: &GroundTruthLayout, x: f64, y: f64, clearance_m: f64) -> bool {
    if !layout.is_free_point((x, y)) {
        return false;
    }
    let s = layout.spec().cell_size;
    let r_cells = (clearance_m / s).ceil() as i64;
    let spec = layout.spec();
    let cx = ((x - spec.origin.0) / s).floor() as i64;
    let cy = ((y - spec.origin.1) / s).floor() as i64;
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx < 0 || ny < 0 || nx >= spec.side as i64 || ny >= spec.side as i64 {
                continue;
            }
            let center = spec.cell_center(crate::grid::CellIndex::new(nx as usize, ny as usize));
            let dist2 = (center.0 - x).powi(2) + (center.1 - y).powi(2);
            if dist2 <= clearance_m * clearance_m
                && layout.get(crate::grid::CellIndex::new(nx as usize, ny as usize))
                    != crate::grid::LayoutCell::Free
            {
                return false;
            }
        }
    }
    true
}

/// Execute one action on the true pose.
///
/// Forward motion is swept along the heading and clipped at the last position
/// that keeps a one-cell body clearance from occupied or void cells; a
/// clipped move reports a collision. Turns and Stop never collide. When noise
/// is enabled the commanded motion is perturbed before the sweep.
pub fn apply_actuation(
    layout: &GroundTruthLayout,
    pose: Pose,
    action: Action,
    noise: &NoiseConfig,
    rng: &mut impl Rng,
) -> (Pose, bool) {
    match action {
        Action::Stop => (pose, false),
        Action::TurnLeft | Action::TurnRight => {
            let sign = if action == Action::TurnLeft { 1.0 } else { -1.0 };
            let mut dtheta = sign * TURN_STEP_RAD;
            if noise.enabled {
                dtheta += sample_trunc_gauss(&noise.act_rotation, rng);
            }
            (Pose::new(pose.x, pose.y, pose.theta + dtheta), false)
        }
        Action::MoveForward => {
            let mut theta = pose.theta;
            let mut dist = FORWARD_STEP_M;
            if noise.enabled {
                theta += sample_trunc_gauss(&noise.act_rotation, rng);
                dist += sample_trunc_gauss(&noise.act_translation, rng);
            }
            let theta = normalize_angle(theta);
            if dist <= 0.0 {
                return (Pose::new(pose.x, pose.y, theta), false);
            }
            let s = layout.spec().cell_size;
            let clearance = BODY_RADIUS_CELLS * s;
            let (dy, dx) = theta.sin_cos();
            let n_steps = (dist / (s * SWEEP_STEP_FRACTION)).ceil() as usize;
            let mut reached = 0usize;
            for i in 1..=n_steps {
                let t = dist * i as f64 / n_steps as f64;
                if pose_clear(layout, pose.x + dx * t, pose.y + dy * t, clearance) {
                    reached = i;
                } else {
                    break;
                }
            }
            let collided = reached < n_steps;
            let t = dist * reached as f64 / n_steps as f64;
            (
                Pose::new(pose.x + dx * t, pose.y + dy * t, theta),
                collided,
            )
        }
    }
}

/// Report the pose change between two true poses, in the previous pose frame.
///
/// With noise enabled, the translation magnitude picks up an additive
/// truncated-Gaussian error and the rotation an analogous one, each flipped
/// by the per-episode sign. Errors apply only to components that actually
/// moved, so a pure turn reports no translation error and vice versa.
pub fn read_odometry(
    prev: Pose,
    cur: Pose,
    noise: &NoiseConfig,
    signs: OdomSigns,
    rng: &mut impl Rng,
) -> OdometryReading {
    let wx = cur.x - prev.x;
    let wy = cur.y - prev.y;
    let (sin_t, cos_t) = prev.theta.sin_cos();
    let mut dx = cos_t * wx + sin_t * wy;
    let mut dy = -sin_t * wx + cos_t * wy;
    let mut dtheta = normalize_angle(cur.theta - prev.theta);
    if noise.enabled {
        let mag = (dx * dx + dy * dy).sqrt();
        if mag > 1e-12 {
            let err = signs.translation * sample_trunc_gauss(&noise.odom_translation, rng);
            let scale = (mag + err).max(0.0) / mag;
            dx *= scale;
            dy *= scale;
        }
        if dtheta.abs() > 1e-12 {
            dtheta += signs.rotation * sample_trunc_gauss(&noise.odom_rotation, rng);
        }
    }
    OdometryReading { dx, dy, dtheta }
}

/// Dead reckoning: compose a reading onto the current pose estimate.
pub fn integrate_odometry(est: Pose, reading: &OdometryReading) -> Pose {
    let (sin_t, cos_t) = est.theta.sin_cos();
    Pose::new(
        est.x + cos_t * reading.dx - sin_t * reading.dy,
        est.y + sin_t * reading.dx + cos_t * reading.dy,
        est.theta + reading.dtheta,
    )
}

/// Project a depth scan into an egocentric visible-occupancy map.
///
/// Every cell a ray traverses within `min(range, PROJECTION_RANGE_M)` is
/// marked free-explored; the hit cell is marked occupied-explored when the
/// hit lies within projection range. Untouched cells stay invalid.
pub fn project_scan(scan: &DepthScan, v: usize, cell_size: f64) -> LocalOccupancy {
    let mut local = LocalOccupancy::unknown(v);
    let c = local.center() as f64;
    // Agent at the center of the center cell, in window coordinates.
    let o = (c + 0.5) * cell_size;
    let window = v as f64 * cell_size;
    let mut hits: Vec<(usize, usize)> = Vec::new();
    for (i, &range) in scan.ranges.iter().enumerate() {
        let angle = scan.ray_angle(i);
        let (dy, dx) = angle.sin_cos();
        let stop = range.min(PROJECTION_RANGE_M);

        // Walk the local grid, marking every cell entered before `stop`.
        let mut cx = (o / cell_size).floor() as i64;
        let mut cy = cx;
        let gx = o / cell_size;
        let gy = gx;
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        let mut t_max_x = if dx.abs() < 1e-15 {
            f64::INFINITY
        } else if dx > 0.0 {
            ((cx as f64 + 1.0) - gx) * cell_size / dx
        } else {
            (gx - cx as f64) * cell_size / -dx
        };
        let mut t_max_y = if dy.abs() < 1e-15 {
            f64::INFINITY
        } else if dy > 0.0 {
            ((cy as f64 + 1.0) - gy) * cell_size / dy
        } else {
            (gy - cy as f64) * cell_size / -dy
        };
        let t_delta_x = if dx.abs() < 1e-15 {
            f64::INFINITY
        } else {
            cell_size / dx.abs()
        };
        let t_delta_y = if dy.abs() < 1e-15 {
            f64::INFINITY
        } else {
            cell_size / dy.abs()
        };

        let in_window = |x: i64, y: i64| x >= 0 && y >= 0 && x < v as i64 && y < v as i64;
        let mark_free = |x: i64, y: i64, local: &mut LocalOccupancy| {
            if in_window(x, y) {
                local.set(x as usize, y as usize, 0.0, 1.0);
            }
        };
        mark_free(cx, cy, &mut local);
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
            if t >= stop || !in_window(cx, cy) {
                break;
            }
            mark_free(cx, cy, &mut local);
        }

        // The hit cell: only when the ray actually hit within range. The
        // boundary point is pushed a fraction of a cell along the ray so
        // that, after the egocentric-to-global rotation, the occupied
        // evidence tends to land inside the obstacle instead of straddling
        // its near face. 0.45 cells is the most that still keeps an
        // axis-aligned hit inside its true cell.
        if range <= PROJECTION_RANGE_M {
            let depth = range + 0.45 * cell_size;
            let hx = o + dx * depth;
            let hy = o + dy * depth;
            if hx >= 0.0 && hy >= 0.0 && hx < window && hy < window {
                hits.push((
                    (hx / cell_size).floor() as usize,
                    (hy / cell_size).floor() as usize,
                ));
            }
        }
    }
    // Occupied evidence beats free marks from grazing rays.
    for (x, y) in hits {
        local.set(x, y, 1.0, 1.0);
    }
    local
}
