//! Scratch: tune training and episode parameters.
use occmap::anticipate::*;
use occmap::cli::commands::eval_anticipator_on_samples;
use occmap::cli::config::AnticipatorSpec;
use occmap::dataset::make_dataset;
use occmap::explore::*;
use occmap::world::{FloorplanParams, generate_floorplan};
use std::time::Instant;

fn layouts(seeds: std::ops::Range<u64>) -> Vec<occmap::grid::GroundTruthLayout> {
    seeds
        .map(|seed| {
            generate_floorplan(&FloorplanParams {
                extent_m: 12.0,
                rooms: (3, 5),
                obstacle_density: 0.06,
                seed,
                ..FloorplanParams::default()
            })
            .unwrap()
        })
        .collect()
}

fn main() {
    let fov = std::f64::consts::FRAC_PI_2;
    let v = 41;
    let t0 = Instant::now();
    let train_layouts = layouts(100..110);
    let eval_layouts = layouts(200..210);
    println!("layouts: {:?}", t0.elapsed());

    let t0 = Instant::now();
    let train = make_dataset(&train_layouts, 30, v, fov, 128, 42).unwrap();
    let eval = make_dataset(&eval_layouts, 20, v, fov, 128, 43).unwrap();
    println!("datasets: train {} eval {} in {:?}", train.len(), eval.len(), t0.elapsed());

    let pairs: Vec<_> = train.iter().map(|s| s.pair()).collect();
    for (lr, epochs, k, l2) in [(0.3, 20, 9, 1e-5), (0.5, 30, 9, 1e-5), (1.0, 30, 7, 1e-5)] {
        let t0 = Instant::now();
        let cfg = TrainConfig { learning_rate: lr, epochs, batch_size: 8, l2, seed: 7, k };
        let out = train_patch(&pairs, &cfg).unwrap();
        let dt = t0.elapsed();
        // eval via in-memory table
        let table_vis = eval_anticipator_on_samples(&eval, &AnticipatorSpec::Visible).unwrap();
        // patch: write to temp
        let dir = std::env::temp_dir().join("occmap_tune");
        std::fs::create_dir_all(&dir).unwrap();
        let mp = dir.join(format!("m_{lr}_{epochs}_{k}.pm"));
        occmap::cli::formats::write_model(&out.model, &mp).unwrap();
        let table_patch = eval_anticipator_on_samples(&eval, &AnticipatorSpec::Patch(mp)).unwrap();
        println!(
            "lr={lr} epochs={epochs} k={k} l2={l2}: train {dt:?} loss_end={:.4} warn={} | vis mean IoU {:.3} (f {:.3} o {:.3}) | patch mean IoU {:.3} (f {:.3} o {:.3}) | gap {:.1} pts",
            out.loss_trace.last().unwrap(),
            out.plateau_warning,
            table_vis.iou_mean(), table_vis.iou_free, table_vis.iou_occupied,
            table_patch.iou_mean(), table_patch.iou_free, table_patch.iou_occupied,
            (table_patch.iou_mean() - table_vis.iou_mean()) * 100.0
        );
    }
}
