use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use landing_core::geometry::tags::{observe_corners, planar_board};
use landing_core::geometry::{calibrate_intrinsics, CameraIntrinsics, Pose};
use landing_core::monitor::MonitorConfig;
use landing_core::sim::{self, io, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Vision-based landing deconfliction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Baseline,
    Crossing,
    NoLevel1,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the detection stream seen by the monitor (JSONL).
        #[arg(long)]
        record_detections: Option<PathBuf>,
        /// Write the result as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the event log (JSONL).
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        trajectory_csv: Option<PathBuf>,
        /// Write the issued command trace (CSV).
        #[arg(long)]
        commands_csv: Option<PathBuf>,
    },
    /// Feed a recorded detection log through the landing monitor.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        monitor: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form intrinsics from a correspondence dump.
    Calibrate {
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario over consecutive seeds and summarize.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one of the built-in scenarios as JSON.
    Scenario {
        #[arg(long, value_enum)]
        name: Builtin,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write synthetic planar-board views for `calibrate`.
    SynthViews {
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(path)?, value)?;
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            record_detections,
            out,
            events,
            trajectory_csv,
            commands_csv,
        } => {
            let mut config: ScenarioConfig = read_json(&scenario)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let rec = sim::run_scenario_recorded(&config)?;
            let r = &rec.result;
            if let Some(p) = record_detections {
                io::write_detection_log(create(&p)?, &rec.detections)?;
            }
            if let Some(p) = events {
                io::write_event_log(create(&p)?, &r.events)?;
            }
            if let Some(p) = trajectory_csv {
                io::write_trajectory_csv(create(&p)?, r)?;
            }
            if let Some(p) = commands_csv {
                io::write_command_csv(create(&p)?, &r.commands)?;
            }
            if let Some(p) = out {
                serde_json::to_writer(create(&p)?, r)?;
            }
            println!(
                "verdict={} min_separation={} wait_start={:?} landing_detected_t={:?} touchdown_t={:?}",
                serde_json::to_value(r.verdict)?.as_str().unwrap_or_default(),
                r.min_separation,
                r.wait_start,
                r.landing_detected_t,
                r.level2_touchdown_t
            );
        }
        Command::Replay { log, monitor, out } => {
            let frames = io::read_detection_log(open(&log)?)?;
            let config: MonitorConfig = read_json(&monitor)?;
            let events = sim::replay(&frames, &config)?;
            io::write_event_log(create(&out)?, &events)?;
            println!("{} frames, {} events", frames.len(), events.len());
        }
        Command::Calibrate { views, out } => {
            let views = io::read_correspondences(open(&views)?)?;
            let k = calibrate_intrinsics(&views)?;
            write_json(&out, &k)?;
            println!(
                "fx={} fy={} cx={} cy={} skew={}",
                k.fx(),
                k.fy(),
                k.cx(),
                k.cy(),
                k.skew()
            );
        }
        Command::Sweep {
            scenario,
            seeds,
            out,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let config: ScenarioConfig = read_json(&scenario)?;
            let rows = sim::sweep(&config, seeds)?;
            io::write_sweep_csv(create(&out)?, &rows)?;
            let safe = rows
                .iter()
                .filter(|r| r.verdict == sim::Verdict::SafeLanded)
                .count();
            println!("{safe}/{} SAFE_LANDED", rows.len());
        }
        Command::Scenario { name, out } => {
            let config = match name {
                Builtin::Baseline => sim::baseline(),
                Builtin::Crossing => sim::crossing_ablation(),
                Builtin::NoLevel1 => sim::no_level1(),
            };
            write_json(&out, &config)?;
        }
        Command::SynthViews {
            intrinsics,
            count,
            out,
        } => {
            let k: CameraIntrinsics = read_json(&intrinsics)?;
            let board = planar_board(0.2, 0.3);
            let views = (0..count)
                .map(|i| {
                    let a = i as f64 * 2.0 * std::f64::consts::PI / count as f64;
                    let tilt =
                        nalgebra::Vector3::new(0.35 * a.cos(), 0.35 * a.sin(), 0.1 * i as f64);
                    let pose =
                        Pose::from_axis_angle(tilt, nalgebra::Vector3::new(0.05, -0.03, 1.5));
                    observe_corners(&board, &pose, &k)
                })
                .collect::<Result<Vec<_>, _>>()?;
            io::write_correspondences(create(&out)?, &views)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
