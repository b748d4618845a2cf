//! `crowdgen` command-line interface: dataset generation, single-scenario
//! simulation, re-annotation, trajectory classification, and evaluation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
//! error. Verbosity comes from the `LCROWD_LOG` environment variable
//! (error, warn, info, debug; default warn).

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use crowdgen::behavior::{build_class_table, ClassTable};
use crowdgen::classify::{classify_video, evaluate, ObservedVideo};
use crowdgen::dataset::{
    environment_preset, run_sweep, write_scenario, Manifest, ScenarioFile, ScenarioSpec, SweepSpec,
};
use crowdgen::io::{parse_trajectory_csv, rows_to_log};
use crowdgen::labeling::boxes_csv;

#[derive(Parser)]
#[command(name = "crowdgen", version, about = "Procedural crowd video dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOut {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; default uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full label-axis sweep from a sweep configuration file.
    Generate {
        /// Sweep configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_root` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Base seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip rendered frames; trajectories and labels only.
        #[arg(long)]
        no_frames: bool,
    },
    /// Simulate a single scenario configuration.
    Simulate {
        /// Scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: CommonOut,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_frames: bool,
    },
    /// Recompute labels for a stored scenario from its trajectory file.
    Annotate {
        /// Resolved scenario file (scenario.json) written by simulate or
        /// generate; trajectories.csv is read from the same directory.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the scenario directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify one trajectory file against a class table.
    Classify {
        /// Trajectory CSV file.
        #[arg(long)]
        config: PathBuf,
        /// Class table JSON.
        #[arg(long)]
        table: PathBuf,
        /// Result JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Frame interval in seconds.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Classify every video in a dataset manifest and report a confusion
    /// matrix against the generating classes.
    Eval {
        /// Dataset manifest (manifest.json).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Confusion matrix JSON path; stdout table otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Build a class table by rejection sampling.
    Table {
        /// Class table JSON path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Entries per class.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Argmax margin for accepted entries.
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
    },
}

/// Log level from LCROWD_LOG: error=0, warn=1, info=2, debug=3.
fn log_level() -> u8 {
    match std::env::var("LCROWD_LOG").as_deref() {
        Ok("error") => 0,
        Ok("info") => 2,
        Ok("debug") => 3,
        _ => 1,
    }
}

macro_rules! info {
    ($($arg:tt)*) => {
        if log_level() >= 2 {
            eprintln!($($arg)*);
        }
    };
}

/// Configuration problems exit with 2, runtime failures with 1.
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            CliError::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {what} {path:?}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid {what} {path:?}: {e}")))
}

fn init_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate {
            config,
            out,
            workers,
            seed,
            no_frames,
        } => {
            init_workers(workers)?;
            let mut sweep: SweepSpec = read_json(&config, "sweep config")?;
            if let Some(s) = seed {
                sweep.base_seed = s;
            }
            sweep
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let root = out
                .or_else(|| sweep.output_root.clone())
                .ok_or_else(|| {
                    CliError::Config("no output directory: pass --out or set output_root".into())
                })?;
            info!("generating {} scenarios into {root:?}", sweep.scenario_count());
            let manifest = run_sweep(&sweep, &root, !no_frames)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            info!(
                "done: {} ok, {} failed",
                manifest.records.len(),
                manifest.failures.len()
            );
            if manifest.records.is_empty() {
                return Err(CliError::Runtime("every scenario failed".into()));
            }
            for f in &manifest.failures {
                eprintln!("warning: scenario {} failed: {}", f.index, f.error);
            }
            Ok(())
        }
        Command::Simulate {
            config,
            out,
            seed,
            no_frames,
        } => {
            init_workers(out.workers)?;
            let mut spec: ScenarioSpec = read_json(&config, "scenario config")?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let rec = write_scenario(&spec, 0, &out.out, !no_frames)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            info!("scenario written to {:?}", out.out.join(rec.dir));
            Ok(())
        }
        Command::Annotate { config, out } => {
            let file: ScenarioFile = read_json(&config, "scenario file")?;
            let dir = config
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let csv_path = dir.join("trajectories.csv");
            let text = std::fs::read_to_string(&csv_path)
                .map_err(|e| CliError::Config(format!("cannot read {csv_path:?}: {e}")))?;
            let rows = parse_trajectory_csv(&text)
                .map_err(|e| CliError::Runtime(format!("{csv_path:?}: {e}")))?;
            let log = rows_to_log(&rows, file.spec.dt)
                .map_err(|e| CliError::Runtime(format!("{csv_path:?}: {e}")))?;
            let preset = environment_preset(&file.spec.environment).ok_or_else(|| {
                CliError::Config(format!("unknown environment {:?}", file.spec.environment))
            })?;
            let radii: Vec<f64> = log
                .agent_ids
                .iter()
                .map(|id| {
                    file.agents
                        .iter()
                        .find(|a| a.id == *id)
                        .map(|a| a.params.radius)
                        .ok_or_else(|| {
                            CliError::Config(format!("agent {id} missing from scenario file"))
                        })
                })
                .collect::<Result<_, _>>()?;
            let snapshots = crowdgen::dataset::log_snapshots(&log, &radii);
            let ann = crowdgen::labeling::annotate_log(&snapshots, &file.spec.camera, &preset.flows)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let out_dir = out.unwrap_or(dir);
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            std::fs::write(
                out_dir.join("annotations.json"),
                serde_json::to_string_pretty(&ann).expect("annotation serialization"),
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            std::fs::write(out_dir.join("boxes.csv"), boxes_csv(&ann))
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            info!("labels written to {out_dir:?}");
            Ok(())
        }
        Command::Classify {
            config,
            table,
            out,
            dt,
        } => {
            if !(dt > 0.0 && dt <= 0.5) {
                return Err(CliError::Config("--dt must be in (0, 0.5]".into()));
            }
            let table_text = std::fs::read_to_string(&table)
                .map_err(|e| CliError::Config(format!("cannot read class table {table:?}: {e}")))?;
            let table = ClassTable::from_json(&table_text)
                .map_err(|e| CliError::Config(format!("invalid class table: {e}")))?;
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read {config:?}: {e}")))?;
            let rows = parse_trajectory_csv(&text)
                .map_err(|e| CliError::Runtime(format!("{config:?}: {e}")))?;
            let log = rows_to_log(&rows, dt)
                .map_err(|e| CliError::Runtime(format!("{config:?}: {e}")))?;
            let video = ObservedVideo::from_log(&log);
            let result =
                classify_video(&video, &table).map_err(|e| CliError::Runtime(e.to_string()))?;
            let json = serde_json::to_string_pretty(&result).expect("result serialization");
            match out {
                Some(p) => std::fs::write(&p, json)
                    .map_err(|e| CliError::Runtime(e.to_string()))?,
                None => println!("{json}"),
            }
            info!("class: {}", result.class);
            Ok(())
        }
        Command::Eval {
            config,
            table,
            out,
            workers,
        } => {
            init_workers(workers)?;
            let manifest: Manifest = read_json(&config, "manifest")?;
            let root = config
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let table_text = std::fs::read_to_string(&table)
                .map_err(|e| CliError::Config(format!("cannot read class table {table:?}: {e}")))?;
            let table = ClassTable::from_json(&table_text)
                .map_err(|e| CliError::Config(format!("invalid class table: {e}")))?;
            let mut videos = Vec::new();
            for rec in &manifest.records {
                let path = root.join(&rec.trajectories);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Runtime(format!("cannot read {path:?}: {e}")))?;
                let rows = parse_trajectory_csv(&text)
                    .map_err(|e| CliError::Runtime(format!("{path:?}: {e}")))?;
                let log = rows_to_log(&rows, rec.scenario.dt)
                    .map_err(|e| CliError::Runtime(format!("{path:?}: {e}")))?;
                videos.push((rec.scenario.behavior_class, ObservedVideo::from_log(&log)));
            }
            if videos.is_empty() {
                return Err(CliError::Runtime("manifest has no records".into()));
            }
            info!("classifying {} videos", videos.len());
            let matrix =
                evaluate(&videos, &table).map_err(|e| CliError::Runtime(e.to_string()))?;
            print!("{}", matrix.render());
            println!("accuracy: {:.3}", matrix.accuracy());
            if let Some(p) = out {
                std::fs::write(
                    &p,
                    serde_json::to_string_pretty(&matrix).expect("matrix serialization"),
                )
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            Ok(())
        }
        Command::Table {
            out,
            seed,
            samples,
            margin,
        } => {
            if samples == 0 {
                return Err(CliError::Config("--samples must be at least 1".into()));
            }
            if !(0.0..1.0).contains(&margin) {
                return Err(CliError::Config("--margin must be in [0, 1)".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = build_class_table(samples, margin, &mut rng)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            std::fs::write(&out, table.to_json())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            info!("class table with {} entries written to {out:?}", table.len());
            Ok(())
        }
    }
}
