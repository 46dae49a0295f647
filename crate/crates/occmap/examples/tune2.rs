//! Scratch: paired-episode criteria validation.
use occmap::anticipate::*;
use occmap::dataset::make_dataset;
use occmap::explore::*;
use occmap::world::{FloorplanParams, generate_floorplan};
use std::time::Instant;

fn main() {
    let fov = std::f64::consts::FRAC_PI_2;
    let v = 41;
    let train_layouts: Vec<_> = (100u64..110)
        .map(|seed| {
            generate_floorplan(&FloorplanParams {
                extent_m: 12.0, rooms: (3, 5), obstacle_density: 0.06, seed,
                ..FloorplanParams::default()
            }).unwrap()
        })
        .collect();
    let train = make_dataset(&train_layouts, 30, v, fov, 128, 42).unwrap();
    let pairs: Vec<_> = train.iter().map(|s| s.pair()).collect();
    let cfg = TrainConfig { learning_rate: 0.5, epochs: 30, batch_size: 8, l2: 1e-5, seed: 7, k: 9 };
    let model = train_patch(&pairs, &cfg).unwrap().model;

    let mut c2_pass = 0;
    let mut c3_vis = 0;
    let mut c3_patch = 0;
    let n = 20;
    let t_total = Instant::now();
    for i in 0..n {
        let layout = generate_floorplan(&FloorplanParams {
            extent_m: 12.0, rooms: (3, 5), obstacle_density: 0.06, seed: 300 + i,
            ..FloorplanParams::default()
        }).unwrap();
        let base = EpisodeConfig {
            t_budget: 500, delta: 25, seed: 1000 + i, v, n_rays: 128,
            policy: Policy::FrontierCoverage,
            ..EpisodeConfig::default()
        };
        let run = |kind: AnticipatorKind| {
            let mut c = base.clone();
            c.anticipator = kind;
            let t0 = Instant::now();
            let r = run_exploration(&layout, &c).unwrap();
            (r, t0.elapsed())
        };
        let (vis, dt_v) = run(AnticipatorKind::VisibleOnly);
        let (patch, dt_p) = run(AnticipatorKind::Patch(model.clone()));
        let (gt, dt_g) = run(AnticipatorKind::GroundTruth);

        // criterion 2
        let thr = (0.7 * vis.final_accuracy as f64).ceil() as u64;
        let first = |r: &EpisodeResult| -> Option<usize> {
            r.accuracy_by_step().iter().position(|&a| a >= thr).map(|p| p + 1)
        };
        let tv = first(&vis);
        let tp = first(&patch);
        let pass2 = match (tp, tv) {
            (Some(tp), Some(tv)) => (tp as f64) <= 0.8 * tv as f64,
            _ => false,
        };
        if pass2 { c2_pass += 1; }

        // criterion 3: final IoU mean
        let iou = |r: &EpisodeResult| r.series.last().unwrap().iou_mean();
        let (iv, ip, ig) = (iou(&vis), iou(&patch), iou(&gt));
        if ig >= iv { c3_vis += 1; }
        if ig >= ip { c3_patch += 1; }
        println!(
            "pair {i}: tv={tv:?} tp={tp:?} pass2={pass2} | iou v={iv:.3} p={ip:.3} g={ig:.3} | times {dt_v:?}/{dt_p:?}/{dt_g:?}"
        );
    }
    println!(
        "criterion2: {c2_pass}/{n} (need >= 14)  criterion3: gt>=vis {c3_vis}/{n} (need 20), gt>=patch {c3_patch}/{n} (need >= 18), total {:?}",
        t_total.elapsed()
    );
}
