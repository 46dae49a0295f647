//! Line-delimited episode records: one episode per line, self-describing
//! `key=value` fields. Stream-appendable and diff-able; reports are derived
//! from these lines alone.

use std::collections::BTreeMap;

use crate::cli::CliError;
use crate::explore::{EpisodeResult, NavResult};

/// Format an exploration episode as one record line.
pub fn exploration_record(
    result: &EpisodeResult,
    policy: &str,
    anticipator: &str,
    cell_size: f64,
) -> String {
    let collisions = result.steps.iter().filter(|s| s.collided).count();
    let last = result.series.last();
    let mut line = format!(
        "episode task=explore seed={} policy={} anticipator={} steps={} collisions={} \
         initial_acc={} final_acc={} final_acc_m2={} reward_sum={}",
        result.seed,
        policy,
        anticipator,
        result.steps.len(),
        collisions,
        result.initial_accuracy,
        result.final_accuracy,
        fmt_f64(result.final_accuracy as f64 * cell_size * cell_size),
        result.reward_sum(),
    );
    if let Some(m) = last {
        line.push_str(&format!(
            " iou_free={} iou_occ={} iou_mean={} area_seen_m2={}",
            fmt_f64(m.iou_free),
            fmt_f64(m.iou_occupied),
            fmt_f64(m.iou_mean()),
            fmt_f64(m.area_seen_m2),
        ));
    }
    line.push_str(" acc_series=");
    line.push_str(&series_field(result, |m| fmt_f64(m.accuracy_m2)));
    line.push_str(" area_series=");
    line.push_str(&series_field(result, |m| fmt_f64(m.area_seen_m2)));
    line.push_str(" iou_series=");
    line.push_str(&series_field(result, |m| fmt_f64(m.iou_mean())));
    line.push_str(" traj=");
    line.push_str(&trajectory_field(result));
    line
}

/// Format a PointNav episode as one record line.
pub fn pointnav_record(
    nav: &NavResult,
    policy: &str,
    anticipator: &str,
    goal: (f64, f64),
) -> String {
    let collisions = nav.episode.steps.iter().filter(|s| s.collided).count();
    let mut line = format!(
        "episode task=pointnav seed={} policy={} anticipator={} steps={} collisions={} \
         success={} stopped={} spl={} final_dist={} shortest={} path_len={} goal_x={} goal_y={} reward_sum={}",
        nav.episode.seed,
        policy,
        anticipator,
        nav.steps,
        collisions,
        nav.success,
        nav.stopped,
        fmt_f64(nav.spl),
        fmt_f64(nav.final_distance_m),
        fmt_f64(nav.shortest_m),
        fmt_f64(nav.path_length_m),
        fmt_f64(goal.0),
        fmt_f64(goal.1),
        nav.episode.reward_sum(),
    );
    line.push_str(" traj=");
    line.push_str(&trajectory_field(&nav.episode));
    line
}

fn series_field(result: &EpisodeResult, f: impl Fn(&crate::explore::MetricsSample) -> String) -> String {
    result
        .series
        .iter()
        .map(|m| format!("{}:{}", m.step, f(m)))
        .collect::<Vec<_>>()
        .join(",")
}

fn trajectory_field(result: &EpisodeResult) -> String {
    result
        .steps
        .iter()
        .map(|s| format!("{:.4}:{:.4}", s.true_pose.x, s.true_pose.y))
        .collect::<Vec<_>>()
        .join(";")
}

/// Shortest-round-trip decimal, with infinities spelled out.
fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// One parsed record: field map plus access helpers.
#[derive(Debug, Clone)]
pub struct Record {
    pub fields: BTreeMap<String, String>,
}

impl Record {
    pub fn parse(line: &str) -> Result<Self, CliError> {
        let mut fields = BTreeMap::new();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("episode") => {}
            other => {
                return Err(CliError::Data(format!(
                    "record must start with 'episode', got {other:?}"
                )));
            }
        }
        for part in parts {
            let Some((k, v)) = part.split_once('=') else {
                return Err(CliError::Data(format!("bad record field '{part}'")));
            };
            fields.insert(k.to_string(), v.to_string());
        }
        Ok(Self { fields })
    }

    pub fn get(&self, key: &str) -> Result<&str, CliError> {
        self.fields
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| CliError::Data(format!("record missing field '{key}'")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.get(key)?;
        match raw {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => raw
                .parse()
                .map_err(|_| CliError::Data(format!("field '{key}' is not a number: '{raw}'"))),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<u64, CliError> {
        self.get(key)?
            .parse()
            .map_err(|_| CliError::Data(format!("field '{key}' is not an integer")))
    }

    /// Parse a `t:value,t:value,...` series field.
    pub fn get_series(&self, key: &str) -> Result<Vec<(usize, f64)>, CliError> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|pair| {
                let (t, v) = pair
                    .split_once(':')
                    .ok_or_else(|| CliError::Data(format!("bad series entry '{pair}'")))?;
                Ok((
                    t.parse()
                        .map_err(|_| CliError::Data(format!("bad series step '{t}'")))?,
                    v.parse()
                        .map_err(|_| CliError::Data(format!("bad series value '{v}'")))?,
                ))
            })
            .collect()
    }

    /// Parse the `x:y;x:y;...` trajectory field.
    pub fn get_trajectory(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let raw = self.get("traj")?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(';')
            .map(|pair| {
                let (x, y) = pair
                    .split_once(':')
                    .ok_or_else(|| CliError::Data(format!("bad trajectory point '{pair}'")))?;
                Ok((
                    x.parse()
                        .map_err(|_| CliError::Data(format!("bad trajectory x '{x}'")))?,
                    y.parse()
                        .map_err(|_| CliError::Data(format!("bad trajectory y '{y}'")))?,
                ))
            })
            .collect()
    }
}

/// Parse every record line in a file's text.
pub fn parse_records(text: &str) -> Result<Vec<Record>, CliError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(Record::parse)
        .collect()
}
