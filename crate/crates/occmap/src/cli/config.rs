//! Experiment configuration: flat `key = value` text with dotted section
//! prefixes. Angles are written in degrees and converted once at load;
//! lengths are meters.

use std::path::{Path, PathBuf};

use crate::cli::CliError;
use crate::explore::{EpisodeConfig, Policy};
use crate::world::FloorplanParams;

/// Where the layout for a run comes from.
#[derive(Debug, Clone)]
pub enum LayoutSource {
    File(PathBuf),
    Generate(FloorplanParams),
}

/// Which anticipator to instantiate, with the model path for the patch kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnticipatorSpec {
    Visible,
    Heuristic,
    Patch(PathBuf),
    GroundTruth,
}

impl AnticipatorSpec {
    /// Parse the `--anticipator` flag syntax: visible|heuristic|patch:PATH|gt.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "visible" => Ok(Self::Visible),
            "heuristic" => Ok(Self::Heuristic),
            "gt" => Ok(Self::GroundTruth),
            other => {
                if let Some(path) = other.strip_prefix("patch:") {
                    Ok(Self::Patch(PathBuf::from(path)))
                } else {
                    Err(CliError::Usage(format!(
                        "unknown anticipator '{other}' (expected visible|heuristic|patch:PATH|gt)"
                    )))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Visible => "visible",
            Self::Heuristic => "heuristic",
            Self::Patch(_) => "patch",
            Self::GroundTruth => "gt",
        }
    }
}

/// How the PointNav goal is placed relative to the sampled start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointNavGoal {
    pub dx: f64,
    pub dy: f64,
}

/// Full experiment configuration for the suite runners.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub layout: LayoutSource,
    pub episode: EpisodeConfig,
    pub anticipator: AnticipatorSpec,
    pub episodes: usize,
    pub base_seed: u64,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub pointnav_goal: PointNavGoal,
    pub render_maps: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layout: LayoutSource::Generate(FloorplanParams::default()),
            episode: EpisodeConfig::default(),
            anticipator: AnticipatorSpec::Visible,
            episodes: 1,
            base_seed: 1,
            jobs: 1,
            out_dir: PathBuf::from("results"),
            pointnav_goal: PointNavGoal { dx: 4.0, dy: 0.0 },
            render_maps: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::from_str_config(&text)
    }

    pub fn from_str_config(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut gen = FloorplanParams::default();
        let mut layout_file: Option<PathBuf> = None;
        let mut rooms_min = gen.rooms.0;
        let mut rooms_max = gen.rooms.1;

        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Data(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    i + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| CliError::Data(format!("line {}: bad {what} '{value}'", i + 1));

            macro_rules! num {
                ($what:expr) => {
                    value.parse().map_err(|_| bad($what))?
                };
            }

            match key {
                "layout.file" => layout_file = Some(PathBuf::from(value)),
                "layout.generate.extent" => gen.extent_m = num!("extent"),
                "layout.generate.rooms_min" => rooms_min = num!("rooms_min"),
                "layout.generate.rooms_max" => rooms_max = num!("rooms_max"),
                "layout.generate.corridor_width" => gen.corridor_width_m = num!("corridor width"),
                "layout.generate.obstacle_density" => gen.obstacle_density = num!("density"),
                "layout.generate.cell_size" => gen.cell_size_m = num!("cell size"),
                "layout.generate.seed" => gen.seed = num!("seed"),
                "map.v" => cfg.episode.v = num!("v"),
                "map.alpha" => cfg.episode.alpha = num!("alpha"),
                "map.binarize_threshold" => cfg.episode.binarize_threshold = num!("threshold"),
                "map.tau_ent" => cfg.episode.tau_ent = num!("tau"),
                "episode.t" => cfg.episode.t_budget = num!("t"),
                "episode.delta" => cfg.episode.delta = num!("delta"),
                "episode.policy" => {
                    cfg.episode.policy = match value {
                        "frontier" => Policy::FrontierCoverage,
                        "anticipation" => Policy::AnticipationScored,
                        "random" => Policy::RandomGoal,
                        _ => return Err(bad("policy")),
                    }
                }
                "episode.lookahead" => cfg.episode.lookahead_m = num!("lookahead"),
                "episode.goal_reached_dist" => cfg.episode.goal_reached_dist_m = num!("distance"),
                "episode.start_clearance" => cfg.episode.start_clearance_m = num!("clearance"),
                "plan.inflation_radius" => cfg.episode.inflation_radius_m = num!("radius"),
                "plan.astar_weight" => cfg.episode.astar_weight = num!("weight"),
                "plan.unknown_penalty" => cfg.episode.unknown_penalty = num!("penalty"),
                "sensor.fov_deg" => {
                    let deg: f64 = num!("fov");
                    cfg.episode.fov_rad = deg.to_radians();
                }
                "sensor.rays" => cfg.episode.n_rays = num!("ray count"),
                "sensor.max_range" => cfg.episode.scan_max_range_m = num!("range"),
                "sensor.sensing_range" => cfg.episode.sensing_range_m = num!("range"),
                "noise.enabled" => {
                    cfg.episode.noise.enabled = match value {
                        "true" | "on" => true,
                        "false" | "off" => false,
                        _ => return Err(bad("boolean")),
                    }
                }
                "noise.truncation" => {
                    let t: f64 = num!("truncation");
                    for p in [
                        &mut cfg.episode.noise.odom_translation,
                        &mut cfg.episode.noise.odom_rotation,
                        &mut cfg.episode.noise.act_translation,
                        &mut cfg.episode.noise.act_rotation,
                    ] {
                        p.truncation = t;
                    }
                }
                "noise.odom_translation.mean" => cfg.episode.noise.odom_translation.mean = num!("mean"),
                "noise.odom_translation.std" => cfg.episode.noise.odom_translation.std = num!("std"),
                "noise.odom_rotation.mean_deg" => {
                    let deg: f64 = num!("mean");
                    cfg.episode.noise.odom_rotation.mean = deg.to_radians();
                }
                "noise.odom_rotation.std_deg" => {
                    let deg: f64 = num!("std");
                    cfg.episode.noise.odom_rotation.std = deg.to_radians();
                }
                "noise.act_translation.mean" => cfg.episode.noise.act_translation.mean = num!("mean"),
                "noise.act_translation.std" => cfg.episode.noise.act_translation.std = num!("std"),
                "noise.act_rotation.mean_deg" => {
                    let deg: f64 = num!("mean");
                    cfg.episode.noise.act_rotation.mean = deg.to_radians();
                }
                "noise.act_rotation.std_deg" => {
                    let deg: f64 = num!("std");
                    cfg.episode.noise.act_rotation.std = deg.to_radians();
                }
                "anticipator.kind" => {
                    cfg.anticipator = match value {
                        "visible" => AnticipatorSpec::Visible,
                        "heuristic" => AnticipatorSpec::Heuristic,
                        "gt" => AnticipatorSpec::GroundTruth,
                        "patch" => match &cfg.anticipator {
                            AnticipatorSpec::Patch(p) => AnticipatorSpec::Patch(p.clone()),
                            _ => AnticipatorSpec::Patch(PathBuf::new()),
                        },
                        _ => return Err(bad("anticipator kind")),
                    }
                }
                "anticipator.model" => cfg.anticipator = AnticipatorSpec::Patch(PathBuf::from(value)),
                "run.episodes" => cfg.episodes = num!("episode count"),
                "run.base_seed" => cfg.base_seed = num!("seed"),
                "run.jobs" => cfg.jobs = num!("job count"),
                "run.render_maps" => {
                    cfg.render_maps = match value {
                        "true" | "on" => true,
                        "false" | "off" => false,
                        _ => return Err(bad("boolean")),
                    }
                }
                "out.dir" => cfg.out_dir = PathBuf::from(value),
                "pointnav.goal_dx" => cfg.pointnav_goal.dx = num!("dx"),
                "pointnav.goal_dy" => cfg.pointnav_goal.dy = num!("dy"),
                "pointnav.stop_distance" => cfg.episode.stop_distance_m = num!("distance"),
                other => {
                    return Err(CliError::Data(format!(
                        "line {}: unknown key '{other}'",
                        i + 1
                    )));
                }
            }
        }
        gen.rooms = (rooms_min, rooms_max);
        cfg.layout = match layout_file {
            Some(path) => LayoutSource::File(path),
            None => LayoutSource::Generate(gen),
        };
        Ok(cfg)
    }

    /// Validate and load the layout this config names.
    pub fn load_layout(&self) -> Result<crate::grid::GroundTruthLayout, CliError> {
        match &self.layout {
            LayoutSource::File(path) => crate::cli::formats::read_layout(path),
            LayoutSource::Generate(params) => {
                crate::world::generate_floorplan(params).map_err(CliError::from)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys_and_degree_conversion() {
        let text = "\
# comment
episode.t = 200
episode.policy = anticipation
sensor.fov_deg = 90
noise.enabled = on
noise.odom_rotation.mean_deg = 0.9
run.episodes = 20
run.base_seed = 7
anticipator.kind = heuristic
";
        let cfg = ExperimentConfig::from_str_config(text).unwrap();
        assert_eq!(cfg.episode.t_budget, 200);
        assert_eq!(cfg.episode.policy, Policy::AnticipationScored);
        assert!((cfg.episode.fov_rad - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(cfg.episode.noise.enabled);
        assert!((cfg.episode.noise.odom_rotation.mean - 0.9_f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.episodes, 20);
        assert_eq!(cfg.base_seed, 7);
        assert_eq!(cfg.anticipator, AnticipatorSpec::Heuristic);
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let err = ExperimentConfig::from_str_config("episode.t = 10\nbogus.key = 1\n").unwrap_err();
        match err {
            CliError::Data(msg) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("wrong error kind: {other:?}"),
        }
    }

    #[test]
    fn anticipator_flag_syntax() {
        assert_eq!(
            AnticipatorSpec::parse("patch:model.pm").unwrap(),
            AnticipatorSpec::Patch(PathBuf::from("model.pm"))
        );
        assert_eq!(AnticipatorSpec::parse("gt").unwrap(), AnticipatorSpec::GroundTruth);
        assert!(AnticipatorSpec::parse("nope").is_err());
    }

    #[test]
    fn noise_defaults_match_reference_values() {
        let cfg = ExperimentConfig::default();
        let n = &cfg.episode.noise;
        assert_eq!(
            n.odom_translation,
            crate::sensor::TruncGaussParams::new(0.025, 0.001)
        );
        assert!((n.odom_rotation.mean - 0.9f64.to_radians()).abs() < 1e-15);
        assert!((n.odom_rotation.std - 0.057f64.to_radians()).abs() < 1e-15);
        assert_eq!(n.odom_translation.truncation, 2.0);
    }
}
