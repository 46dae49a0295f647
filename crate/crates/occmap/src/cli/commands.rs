//! Command implementations behind the CLI surface.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::anticipate::{Anticipator, TrainConfig, VisibleOnly, HeuristicAnticipator, train_patch};
use crate::cli::config::{AnticipatorSpec, ExperimentConfig};
use crate::cli::records::{exploration_record, pointnav_record, Record};
use crate::cli::{formats, render, report, CliError};
use crate::dataset::Sample;
use crate::explore::{
    run_exploration, run_pointnav, sample_start_pose, AnticipatorKind, EpisodeConfig,
};
use crate::grid::{class_scores, GroundTruthLayout, LocalOccupancy, OccClass};
use crate::world::FloorplanParams;

pub fn cmd_gen_env(params: &FloorplanParams, out: &Path) -> Result<(), CliError> {
    let layout = crate::world::generate_floorplan(params)?;
    formats::write_layout(&layout, out)?;
    Ok(())
}

pub fn cmd_make_dataset(
    layout_paths: &[PathBuf],
    samples_per_layout: usize,
    v: usize,
    fov_rad: f64,
    n_rays: usize,
    seed: u64,
    out: &Path,
) -> Result<usize, CliError> {
    let layouts: Vec<GroundTruthLayout> = layout_paths
        .iter()
        .map(|p| formats::read_layout(p))
        .collect::<Result<_, _>>()?;
    if layouts.is_empty() {
        return Err(CliError::Usage("at least one --layout is required".into()));
    }
    let samples = crate::dataset::make_dataset(&layouts, samples_per_layout, v, fov_rad, n_rays, seed)?;
    formats::write_dataset(&samples, v, out)?;
    Ok(samples.len())
}

pub fn cmd_train(
    dataset_path: &Path,
    config: &TrainConfig,
    out_model: &Path,
) -> Result<(f64, bool), CliError> {
    let samples = formats::read_dataset(dataset_path)?;
    let pairs: Vec<(LocalOccupancy, LocalOccupancy)> =
        samples.iter().map(|s| s.pair()).collect();
    let outcome = train_patch(&pairs, config)?;
    formats::write_model(&outcome.model, out_model)?;
    let final_loss = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    Ok((final_loss, outcome.plateau_warning))
}

/// Per-class IoU/F1 table over a dataset, pooled across samples on
/// target-valid cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalTable {
    pub iou_free: f64,
    pub iou_occupied: f64,
    pub f1_free: f64,
    pub f1_occupied: f64,
}

impl EvalTable {
    pub fn iou_mean(&self) -> f64 {
        0.5 * (self.iou_free + self.iou_occupied)
    }
    pub fn f1_mean(&self) -> f64 {
        0.5 * (self.f1_free + self.f1_occupied)
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        out.push_str("metric    free      occ.      mean\n");
        out.push_str(&format!(
            "IoU %     {:<9.1} {:<9.1} {:<9.1}\n",
            self.iou_free * 100.0,
            self.iou_occupied * 100.0,
            self.iou_mean() * 100.0
        ));
        out.push_str(&format!(
            "F1 %      {:<9.1} {:<9.1} {:<9.1}\n",
            self.f1_free * 100.0,
            self.f1_occupied * 100.0,
            self.f1_mean() * 100.0
        ));
        out
    }
}

/// Evaluate an anticipator against dataset targets.
///
/// Predictions and targets are binarized at 0.5 and compared per class over
/// target-valid cells, pooled over the whole dataset.
pub fn eval_anticipator_on_samples(
    samples: &[Sample],
    anticipator: &AnticipatorSpec,
) -> Result<EvalTable, CliError> {
    use crate::grid::{BinCell, LayoutCell};
    let model = match anticipator {
        AnticipatorSpec::Patch(path) => Some(formats::read_model(path)?),
        _ => None,
    };
    let mut pred_all: Vec<BinCell> = Vec::new();
    let mut gt_all: Vec<LayoutCell> = Vec::new();
    for s in samples {
        let pred = match anticipator {
            AnticipatorSpec::Visible => VisibleOnly.anticipate(&s.visible),
            AnticipatorSpec::Heuristic => HeuristicAnticipator.anticipate(&s.visible),
            AnticipatorSpec::Patch(_) => model.as_ref().unwrap().anticipate(&s.visible),
            AnticipatorSpec::GroundTruth => s.target.clone(),
        };
        let v = s.target.side();
        let pred_bins = pred.binarize(0.5);
        for y in 0..v {
            for x in 0..v {
                if !s.target.is_valid(x, y) {
                    continue; // outside the supervised mask
                }
                let t = if s.target.probs(x, y).0 >= 0.5 {
                    LayoutCell::Occupied
                } else {
                    LayoutCell::Free
                };
                pred_all.push(pred_bins[y * v + x]);
                gt_all.push(t);
            }
        }
    }
    let free = class_scores(&pred_all, &gt_all, OccClass::Free)?;
    let occ = class_scores(&pred_all, &gt_all, OccClass::Occupied)?;
    Ok(EvalTable {
        iou_free: free.iou,
        iou_occupied: occ.iou,
        f1_free: free.f1,
        f1_occupied: occ.f1,
    })
}

pub fn cmd_eval_anticipator(
    dataset_path: &Path,
    anticipator: &AnticipatorSpec,
) -> Result<EvalTable, CliError> {
    let samples = formats::read_dataset(dataset_path)?;
    if samples.is_empty() {
        return Err(CliError::Data("dataset has no samples".into()));
    }
    eval_anticipator_on_samples(&samples, anticipator)
}

/// Resolve an anticipator spec into a runnable kind (loads patch weights).
pub fn resolve_anticipator(spec: &AnticipatorSpec) -> Result<AnticipatorKind, CliError> {
    Ok(match spec {
        AnticipatorSpec::Visible => AnticipatorKind::VisibleOnly,
        AnticipatorSpec::Heuristic => AnticipatorKind::Heuristic,
        AnticipatorSpec::Patch(path) => AnticipatorKind::Patch(formats::read_model(path)?),
        AnticipatorSpec::GroundTruth => AnticipatorKind::GroundTruth,
    })
}

fn episode_config_for(base: &EpisodeConfig, kind: &AnticipatorKind, seed: u64) -> EpisodeConfig {
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.anticipator = kind.clone();
    cfg
}

fn run_jobs<T: Send>(
    jobs: usize,
    seeds: &[u64],
    f: impl Fn(u64) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
    } else {
        seeds.iter().map(|&s| f(s)).collect()
    }
}

/// Run the exploration suite: one episode per seed, records ordered by seed
/// regardless of the worker schedule.
pub fn run_explore_suite(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let layout = cfg.load_layout()?;
    let kind = resolve_anticipator(&cfg.anticipator)?;
    let seeds: Vec<u64> = (0..cfg.episodes).map(|i| cfg.base_seed + i as u64).collect();
    let cell = layout.spec().cell_size;
    let records = run_jobs(cfg.jobs, &seeds, |seed| {
        let ep_cfg = episode_config_for(&cfg.episode, &kind, seed);
        let result = run_exploration(&layout, &ep_cfg)?;
        if !result.telescoping_holds() {
            return Err(CliError::Runtime(format!(
                "episode seed={seed}: reward ledger out of balance"
            )));
        }
        Ok(exploration_record(
            &result,
            ep_cfg.policy.name(),
            cfg.anticipator.name(),
            cell,
        ))
    })?;
    Ok(records)
}

/// Run the PointNav suite; the goal is the configured displacement from each
/// episode's sampled start.
pub fn run_pointnav_suite(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let layout = cfg.load_layout()?;
    let kind = resolve_anticipator(&cfg.anticipator)?;
    let seeds: Vec<u64> = (0..cfg.episodes).map(|i| cfg.base_seed + i as u64).collect();
    let records = run_jobs(cfg.jobs, &seeds, |seed| {
        let ep_cfg = episode_config_for(&cfg.episode, &kind, seed);
        let start = sample_start_pose(&layout, &ep_cfg)?;
        let goal = (start.x + cfg.pointnav_goal.dx, start.y + cfg.pointnav_goal.dy);
        let nav = run_pointnav(&layout, goal, &ep_cfg)?;
        Ok(pointnav_record(
            &nav,
            ep_cfg.policy.name(),
            cfg.anticipator.name(),
            goal,
        ))
    })?;
    Ok(records)
}

/// Write suite records plus the derived report into the output directory.
pub fn write_suite_outputs(
    cfg: &ExperimentConfig,
    records: &[String],
    stem: &str,
) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let records_path = cfg.out_dir.join(format!("{stem}.records"));
    let mut text = records.join("\n");
    text.push('\n');
    fs::write(&records_path, &text)?;
    let parsed: Vec<Record> = crate::cli::records::parse_records(&text)?;
    let report_text = report::generate_report(&parsed)?;
    let report_path = cfg.out_dir.join(format!("{stem}.report"));
    fs::write(&report_path, report_text)?;
    if cfg.render_maps {
        let layout = cfg.load_layout()?;
        for (i, rec) in parsed.iter().enumerate() {
            let traj = rec.get_trajectory()?;
            let img = render::render_layout_with_trajectory_ppm(&layout, &traj);
            fs::write(cfg.out_dir.join(format!("{stem}_ep{i}.ppm")), img)?;
        }
    }
    Ok((records_path, report_path))
}

pub fn cmd_render(
    layout_path: &Path,
    records_path: Option<&Path>,
    episode_index: usize,
    out: &Path,
) -> Result<(), CliError> {
    let layout = formats::read_layout(layout_path)?;
    match records_path {
        None => {
            fs::write(out, render::render_layout_pgm(&layout))?;
        }
        Some(rp) => {
            let text = fs::read_to_string(rp)
                .map_err(|e| CliError::Data(format!("{}: {e}", rp.display())))?;
            let recs = crate::cli::records::parse_records(&text)?;
            let rec = recs.get(episode_index).ok_or_else(|| {
                CliError::Data(format!(
                    "records file has {} episodes, wanted index {episode_index}",
                    recs.len()
                ))
            })?;
            let traj = rec.get_trajectory()?;
            fs::write(out, render::render_layout_with_trajectory_ppm(&layout, &traj))?;
        }
    }
    Ok(())
}

pub fn cmd_report(records_path: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let text = fs::read_to_string(records_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", records_path.display())))?;
    let recs = crate::cli::records::parse_records(&text)?;
    let report_text = report::generate_report(&recs)?;
    if let Some(path) = out {
        fs::write(path, &report_text)?;
    }
    Ok(report_text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::LayoutSource;

    fn tiny_experiment() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.layout = LayoutSource::Generate(FloorplanParams {
            extent_m: 8.0,
            rooms: (2, 2),
            obstacle_density: 0.02,
            seed: 5,
            ..FloorplanParams::default()
        });
        cfg.episode.t_budget = 30;
        cfg.episode.delta = 10;
        cfg.episode.v = 41;
        cfg.episode.n_rays = 48;
        cfg.episodes = 2;
        cfg.base_seed = 3;
        cfg
    }

    #[test]
    fn explore_suite_reruns_identically() {
        let cfg = tiny_experiment();
        let a = run_explore_suite(&cfg).unwrap();
        let b = run_explore_suite(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn explore_suite_parallel_matches_serial() {
        let mut cfg = tiny_experiment();
        let serial = run_explore_suite(&cfg).unwrap();
        cfg.jobs = 4;
        let parallel = run_explore_suite(&cfg).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn report_regeneration_is_bit_identical() {
        let cfg = tiny_experiment();
        let recs = run_explore_suite(&cfg).unwrap();
        let text = recs.join("\n");
        let parsed = crate::cli::records::parse_records(&text).unwrap();
        let r1 = report::generate_report(&parsed).unwrap();
        let r2 = report::generate_report(&parsed).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.contains("## exploration"));
    }
}
