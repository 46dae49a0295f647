//! File formats: layout maps, patch models, datasets.
//!
//! All three formats round-trip bit-exactly. Floats are written in Rust's
//! shortest round-trip decimal form.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::anticipate::PatchModel;
use crate::cli::CliError;
use crate::dataset::Sample;
use crate::grid::{CellIndex, GroundTruthLayout, LayoutCell, LocalOccupancy, MapSpec, Pose};

pub const LAYOUT_MAGIC: &str = "occmap v1";
pub const MODEL_MAGIC: &str = "patchmodel v1";
pub const DATASET_MAGIC: &str = "occdataset v1";

/// Serialize a layout: header line `occmap v1 <rows> <cols> <cell_size_m>`,
/// then one row per line, top row first ('#' occupied, '.' free, ' ' void).
pub fn layout_to_string(layout: &GroundTruthLayout) -> String {
    let side = layout.spec().side;
    let mut out = format!(
        "{LAYOUT_MAGIC} {side} {side} {}\n",
        layout.spec().cell_size
    );
    for y in (0..side).rev() {
        for x in 0..side {
            out.push(match layout.get(CellIndex::new(x, y)) {
                LayoutCell::Occupied => '#',
                LayoutCell::Free => '.',
                LayoutCell::Void => ' ',
            });
        }
        out.push('\n');
    }
    out
}

pub fn layout_from_str(text: &str) -> Result<GroundTruthLayout, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data("empty layout file".into()))?;
    let rest = header
        .strip_prefix(LAYOUT_MAGIC)
        .ok_or_else(|| CliError::Data(format!("line 1: bad magic, expected '{LAYOUT_MAGIC}'")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(CliError::Data(format!(
            "line 1: expected '<rows> <cols> <cell_size_m>', got '{rest}'"
        )));
    }
    let rows: usize = fields[0]
        .parse()
        .map_err(|_| CliError::Data(format!("line 1: bad rows '{}'", fields[0])))?;
    let cols: usize = fields[1]
        .parse()
        .map_err(|_| CliError::Data(format!("line 1: bad cols '{}'", fields[1])))?;
    let cell_size: f64 = fields[2]
        .parse()
        .map_err(|_| CliError::Data(format!("line 1: bad cell size '{}'", fields[2])))?;
    if rows != cols {
        return Err(CliError::Data(format!(
            "line 1: only square grids are supported, got {rows}x{cols}"
        )));
    }
    let spec = MapSpec::new(cell_size, rows, (0.0, 0.0))
        .map_err(|e| CliError::Data(format!("line 1: {e}")))?;
    let mut cells = vec![LayoutCell::Void; rows * cols];
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(CliError::Data(format!(
                "line {}: more rows than the header's {rows}",
                i + 2
            )));
        }
        let y = rows - 1 - i;
        let mut count = 0usize;
        for (x, ch) in line.chars().enumerate() {
            if x >= cols {
                return Err(CliError::Data(format!(
                    "line {}: row wider than the header's {cols}",
                    i + 2
                )));
            }
            cells[y * cols + x] = match ch {
                '#' => LayoutCell::Occupied,
                '.' => LayoutCell::Free,
                ' ' => LayoutCell::Void,
                other => {
                    return Err(CliError::Data(format!(
                        "line {}: unexpected character '{other}'",
                        i + 2
                    )));
                }
            };
            count += 1;
        }
        // Short rows are padded with void.
        let _ = count;
    }
    GroundTruthLayout::new(spec, cells).map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_layout(layout: &GroundTruthLayout, path: &Path) -> Result<(), CliError> {
    fs::write(path, layout_to_string(layout))?;
    Ok(())
}

pub fn read_layout(path: &Path) -> Result<GroundTruthLayout, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    layout_from_str(&text)
}

/// Serialize a patch model: ASCII header `patchmodel v1 <k>` and a newline,
/// then the weights as a flat little-endian f64 array (occupied channel
/// first).
pub fn model_to_bytes(model: &PatchModel) -> Vec<u8> {
    let mut out = format!("{MODEL_MAGIC} {}\n", model.k()).into_bytes();
    for w in model.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<PatchModel, CliError> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::Data("model file: missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| CliError::Data("model file: header is not UTF-8".into()))?;
    let rest = header
        .strip_prefix(MODEL_MAGIC)
        .ok_or_else(|| CliError::Data(format!("model file: bad magic, expected '{MODEL_MAGIC}'")))?;
    let k: usize = rest
        .trim()
        .parse()
        .map_err(|_| CliError::Data(format!("model file: bad k '{}'", rest.trim())))?;
    let body = &bytes[newline + 1..];
    if body.len() % 8 != 0 {
        return Err(CliError::Data(format!(
            "model file: weight payload of {} bytes is not a multiple of 8",
            body.len()
        )));
    }
    let weights: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PatchModel::from_weights(k, weights).map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_model(model: &PatchModel, path: &Path) -> Result<(), CliError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&model_to_bytes(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<PatchModel, CliError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    model_from_bytes(&bytes)
}

/// Serialize a dataset of (visible, target) pairs.
///
/// Projected maps and targets are binary, so character grids are lossless:
/// visible uses '?' unknown / '.' free / '#' occupied; targets use 'x'
/// invalid / '.' free / '#' occupied.
pub fn dataset_to_string(samples: &[Sample], v: usize) -> String {
    let mut out = format!("{DATASET_MAGIC} {} {v}\n", samples.len());
    for (i, s) in samples.iter().enumerate() {
        out.push_str(&format!(
            "sample {i} {} {} {}\n",
            s.pose.x, s.pose.y, s.pose.theta
        ));
        push_local_chars(&mut out, &s.visible, '?');
        push_local_chars(&mut out, &s.target, 'x');
    }
    out
}

fn push_local_chars(out: &mut String, local: &LocalOccupancy, invalid: char) {
    let v = local.side();
    for y in 0..v {
        for x in 0..v {
            out.push(if !local.is_valid(x, y) {
                invalid
            } else if local.probs(x, y).0 >= 0.5 {
                '#'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
}

pub fn dataset_from_str(text: &str) -> Result<Vec<Sample>, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Data("empty dataset file".into()))?;
    let rest = header
        .strip_prefix(DATASET_MAGIC)
        .ok_or_else(|| CliError::Data(format!("line 1: bad magic, expected '{DATASET_MAGIC}'")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(CliError::Data("line 1: expected '<n> <v>'".into()));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| CliError::Data("line 1: bad sample count".into()))?;
    let v: usize = fields[1]
        .parse()
        .map_err(|_| CliError::Data("line 1: bad window size".into()))?;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, head) = lines
            .next()
            .ok_or_else(|| CliError::Data("dataset truncated at sample header".into()))?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "sample" {
            return Err(CliError::Data(format!("line {}: bad sample header", ln + 1)));
        }
        let x: f64 = parts[2]
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: bad pose x", ln + 1)))?;
        let y: f64 = parts[3]
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: bad pose y", ln + 1)))?;
        let theta: f64 = parts[4]
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: bad pose theta", ln + 1)))?;
        let visible = read_local_chars(&mut lines, v, '?', false)?;
        let target = read_local_chars(&mut lines, v, 'x', true)?;
        samples.push(Sample {
            pose: Pose::new(x, y, theta),
            visible,
            target,
        });
    }
    Ok(samples)
}

fn read_local_chars<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    v: usize,
    invalid: char,
    _target: bool,
) -> Result<LocalOccupancy, CliError> {
    let mut local = LocalOccupancy::unknown(v);
    for y in 0..v {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| CliError::Data("dataset truncated inside a map".into()))?;
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != v {
            return Err(CliError::Data(format!(
                "line {}: expected {v} cells, got {}",
                ln + 1,
                chars.len()
            )));
        }
        for (x, ch) in chars.iter().enumerate() {
            match *ch {
                '#' => local.set(x, y, 1.0, 1.0),
                '.' => local.set(x, y, 0.0, 1.0),
                c if c == invalid => {}
                other => {
                    return Err(CliError::Data(format!(
                        "line {}: unexpected character '{other}'",
                        ln + 1
                    )));
                }
            }
        }
    }
    Ok(local)
}

pub fn write_dataset(samples: &[Sample], v: usize, path: &Path) -> Result<(), CliError> {
    fs::write(path, dataset_to_string(samples, v))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    dataset_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{FloorplanParams, generate_floorplan};

    #[test]
    fn layout_round_trips_bit_exactly() {
        let layout = generate_floorplan(&FloorplanParams {
            extent_m: 6.0,
            seed: 13,
            ..FloorplanParams::default()
        })
        .unwrap();
        let text = layout_to_string(&layout);
        let back = layout_from_str(&text).unwrap();
        assert_eq!(back, layout);
        assert_eq!(layout_to_string(&back), text);
    }

    #[test]
    fn layout_parse_errors_carry_line_numbers() {
        assert!(matches!(
            layout_from_str("bogus header\n"),
            Err(CliError::Data(msg)) if msg.contains("line 1")
        ));
        let bad = format!("{LAYOUT_MAGIC} 3 3 0.05\n..Z\n...\n...\n");
        assert!(matches!(
            layout_from_str(&bad),
            Err(CliError::Data(msg)) if msg.contains("line 2")
        ));
    }

    #[test]
    fn model_round_trips_bit_exactly() {
        let n = PatchModel::weights_per_channel(3);
        let weights: Vec<f64> = (0..2 * n).map(|i| (i as f64) * 0.125 - 3.0).collect();
        let model = PatchModel::from_weights(3, weights).unwrap();
        let bytes = model_to_bytes(&model);
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_bytes(&back), bytes);
    }

    #[test]
    fn dataset_round_trips_bit_exactly() {
        let layout = generate_floorplan(&FloorplanParams {
            extent_m: 6.0,
            rooms: (1, 2),
            seed: 3,
            ..FloorplanParams::default()
        })
        .unwrap();
        let samples = crate::dataset::make_dataset(&[layout], 3, 21, 1.5, 32, 11).unwrap();
        let text = dataset_to_string(&samples, 21);
        let back = dataset_from_str(&text).unwrap();
        assert_eq!(dataset_to_string(&back, 21), text);
        for (a, b) in samples.iter().zip(back.iter()) {
            assert_eq!(a.visible, b.visible);
            // Targets carry binary probabilities, also preserved exactly.
            assert_eq!(a.target, b.target);
        }
    }
}
