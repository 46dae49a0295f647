//! Aggregate reports derived purely from record lines, so regenerating a
//! report from the same records is bit-identical.

use std::collections::BTreeMap;

use crate::cli::records::Record;
use crate::cli::CliError;

/// Build the aggregate report for a batch of episode records.
///
/// Exploration records yield mean map accuracy / IoU at fixed checkpoints
/// plus accuracy-vs-step and accuracy-vs-area series; PointNav records yield
/// success rate, mean SPL and mean steps.
pub fn generate_report(records: &[Record]) -> Result<String, CliError> {
    let mut out = String::new();
    let explore: Vec<&Record> = records
        .iter()
        .filter(|r| r.get("task").map(|t| t == "explore").unwrap_or(false))
        .collect();
    let pointnav: Vec<&Record> = records
        .iter()
        .filter(|r| r.get("task").map(|t| t == "pointnav").unwrap_or(false))
        .collect();

    if !explore.is_empty() {
        out.push_str(&exploration_section(&explore)?);
    }
    if !pointnav.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&pointnav_section(&pointnav)?);
    }
    if out.is_empty() {
        out.push_str("no episode records\n");
    }
    Ok(out)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn exploration_section(records: &[&Record]) -> Result<String, CliError> {
    let mut out = String::new();
    out.push_str("## exploration\n");
    out.push_str(&format!("episodes = {}\n", records.len()));

    for (label, key) in [
        ("final_acc_m2", "final_acc_m2"),
        ("iou_free", "iou_free"),
        ("iou_occ", "iou_occ"),
        ("iou_mean", "iou_mean"),
        ("area_seen_m2", "area_seen_m2"),
    ] {
        let vals: Vec<f64> = records
            .iter()
            .filter_map(|r| r.get_f64(key).ok())
            .collect();
        if !vals.is_empty() {
            out.push_str(&format!("mean_{label} = {:.4}\n", mean(&vals)));
        }
    }

    // Checkpoint accuracies from the per-episode series.
    let mut by_step: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut area_pairs: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let acc = r.get_series("acc_series")?;
        let area = r.get_series("area_series")?;
        for (t, v) in &acc {
            by_step.entry(*t).or_default().push(*v);
        }
        for ((t, a), (t2, ar)) in acc.iter().zip(area.iter()) {
            if t == t2 {
                let e = area_pairs.entry(*t).or_default();
                e.0.push(*a);
                e.1.push(*ar);
            }
        }
    }
    for t in [250usize, 500, 1000] {
        if let Some(vals) = by_step.get(&t) {
            out.push_str(&format!("mean_acc_m2_at_t{t} = {:.4}\n", mean(vals)));
        }
    }
    out.push_str("# accuracy (m2) vs step, mean over episodes\n");
    for (t, vals) in &by_step {
        out.push_str(&format!("acc_vs_step {t} {:.4}\n", mean(vals)));
    }
    out.push_str("# accuracy (m2) vs area seen (m2), mean over episodes\n");
    for (t, (acc, area)) in &area_pairs {
        out.push_str(&format!(
            "acc_vs_area {t} {:.4} {:.4}\n",
            mean(area),
            mean(acc)
        ));
    }
    Ok(out)
}

fn pointnav_section(records: &[&Record]) -> Result<String, CliError> {
    let mut out = String::new();
    out.push_str("## pointnav\n");
    out.push_str(&format!("episodes = {}\n", records.len()));
    let successes = records
        .iter()
        .filter(|r| r.get("success").map(|s| s == "true").unwrap_or(false))
        .count();
    out.push_str(&format!(
        "success_rate = {:.4}\n",
        successes as f64 / records.len() as f64
    ));
    let spl: Vec<f64> = records.iter().filter_map(|r| r.get_f64("spl").ok()).collect();
    out.push_str(&format!("mean_spl = {:.4}\n", mean(&spl)));
    let steps: Vec<f64> = records
        .iter()
        .filter_map(|r| r.get_u64("steps").ok().map(|s| s as f64))
        .collect();
    out.push_str(&format!("mean_steps = {:.4}\n", mean(&steps)));
    let dist: Vec<f64> = records
        .iter()
        .filter_map(|r| r.get_f64("final_dist").ok())
        .collect();
    out.push_str(&format!("mean_final_dist = {:.4}\n", mean(&dist)));
    Ok(out)
}
