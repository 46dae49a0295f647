//! `occmap` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use occmap::anticipate::TrainConfig;
use occmap::cli::commands;
use occmap::cli::config::{AnticipatorSpec, ExperimentConfig};
use occmap::cli::CliError;
use occmap::world::FloorplanParams;

#[derive(Parser)]
#[command(
    name = "occmap",
    about = "2D occupancy-anticipation exploration and navigation simulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SuiteArgs {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; episode i runs with base seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory for records and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel episodes.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override noise: on|off.
    #[arg(long)]
    noise: Option<String>,
    /// Anticipator: visible|heuristic|patch:PATH|gt.
    #[arg(long)]
    anticipator: Option<String>,
}

impl SuiteArgs {
    fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(n) = self.episodes {
            cfg.episodes = n;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs.max(1);
        }
        if let Some(noise) = &self.noise {
            cfg.episode.noise.enabled = match noise.as_str() {
                "on" => true,
                "off" => false,
                other => {
                    return Err(CliError::Usage(format!(
                        "--noise expects on|off, got '{other}'"
                    )));
                }
            };
        }
        if let Some(a) = &self.anticipator {
            cfg.anticipator = AnticipatorSpec::parse(a)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a floorplan layout file.
    GenEnv {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16.0)]
        extent: f64,
        #[arg(long, default_value_t = 3)]
        rooms_min: usize,
        #[arg(long, default_value_t = 6)]
        rooms_max: usize,
        #[arg(long, default_value_t = 1.0)]
        corridor_width: f64,
        #[arg(long, default_value_t = 0.05)]
        obstacle_density: f64,
        #[arg(long, default_value_t = 0.05)]
        cell_size: f64,
    },
    /// Sample (visible, target) training pairs from layout files.
    MakeDataset {
        /// Layout file; repeat for several layouts.
        #[arg(long = "layout", required = true)]
        layouts: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        samples_per_layout: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Local window side, cells (odd).
        #[arg(long, default_value_t = 41)]
        v: usize,
        #[arg(long, default_value_t = 90.0)]
        fov_deg: f64,
        #[arg(long, default_value_t = 128)]
        rays: usize,
    },
    /// Train the patch anticipator on a dataset file.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Patch side, cells (odd).
        #[arg(long, default_value_t = 9)]
        k: usize,
    },
    /// Evaluate an anticipator against dataset targets (IoU/F1 table).
    EvalAnticipator {
        #[arg(long)]
        dataset: PathBuf,
        /// visible|heuristic|patch:PATH|gt
        #[arg(long)]
        anticipator: String,
    },
    /// Run seeded exploration episodes and write records + report.
    Explore(SuiteArgs),
    /// Run seeded PointNav episodes and write records + report.
    Pointnav(SuiteArgs),
    /// Render a layout (PGM), optionally with an episode trajectory (PPM).
    Render {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        episode: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the aggregate report from a records file.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenEnv {
            out,
            seed,
            extent,
            rooms_min,
            rooms_max,
            corridor_width,
            obstacle_density,
            cell_size,
        } => {
            let params = FloorplanParams {
                extent_m: extent,
                rooms: (rooms_min, rooms_max),
                corridor_width_m: corridor_width,
                obstacle_density,
                cell_size_m: cell_size,
                seed,
            };
            commands::cmd_gen_env(&params, &out)?;
            println!("wrote {}", out.display());
        }
        Command::MakeDataset {
            layouts,
            samples_per_layout,
            out,
            seed,
            v,
            fov_deg,
            rays,
        } => {
            let n = commands::cmd_make_dataset(
                &layouts,
                samples_per_layout,
                v,
                fov_deg.to_radians(),
                rays,
                seed,
                &out,
            )?;
            println!("wrote {n} samples to {}", out.display());
        }
        Command::Train {
            dataset,
            out,
            epochs,
            lr,
            batch_size,
            l2,
            seed,
            k,
        } => {
            let cfg = TrainConfig {
                learning_rate: lr,
                epochs,
                batch_size,
                l2,
                seed,
                k,
            };
            let (loss, warned) = commands::cmd_train(&dataset, &cfg, &out)?;
            println!("final training loss {loss:.6}, model at {}", out.display());
            if warned {
                eprintln!("warning: loss failed to decrease over a 5-epoch window");
            }
        }
        Command::EvalAnticipator {
            dataset,
            anticipator,
        } => {
            let spec = AnticipatorSpec::parse(&anticipator)?;
            let table = commands::cmd_eval_anticipator(&dataset, &spec)?;
            print!("{}", table.format());
        }
        Command::Explore(args) => {
            let cfg = args.experiment()?;
            let records = commands::run_explore_suite(&cfg)?;
            let (rp, pp) = commands::write_suite_outputs(&cfg, &records, "explore")?;
            println!("wrote {} and {}", rp.display(), pp.display());
        }
        Command::Pointnav(args) => {
            let cfg = args.experiment()?;
            let records = commands::run_pointnav_suite(&cfg)?;
            let (rp, pp) = commands::write_suite_outputs(&cfg, &records, "pointnav")?;
            println!("wrote {} and {}", rp.display(), pp.display());
        }
        Command::Render {
            layout,
            records,
            episode,
            out,
        } => {
            commands::cmd_render(&layout, records.as_deref(), episode, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Report { records, out } => {
            let text = commands::cmd_report(&records, out.as_deref())?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
