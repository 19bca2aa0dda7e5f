//! Command-line front end: scene generation, episode execution, batch
//! evaluation, policy training, debug artifact emission, and log replay.
//!
//! Every command is deterministic given its config file and seeds, and no
//! command mutates an input file. Exit codes: 0 on success, 2 for
//! configuration errors (including bad flags and missing input files),
//! 3 for runtime failures.

mod artifacts;
mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spec::PolicySpec;

#[derive(Debug, Parser)]
#[command(name = "voxnav", version, about = "Voxel-world aerial object search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Values given here override the
/// corresponding fields of the config file.
#[derive(Debug, Args)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root seed for the command.
    #[arg(long)]
    seed: Option<u64>,
    /// Step budget per episode.
    #[arg(long, value_name = "N")]
    max_steps: Option<usize>,
    /// Detection drop probability in [0, 1].
    #[arg(long, value_name = "P")]
    detector_miss_prob: Option<f64>,
    /// Bounding-box corner jitter in pixels.
    #[arg(long, value_name = "PX")]
    detector_jitter: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate procedural scenes and write them as JSON files.
    GenScenes {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Number of scenes to generate.
        #[arg(long, default_value_t = 1, value_name = "N")]
        count: usize,
    },
    /// Run a single episode and write its trajectory log.
    Run {
        #[command(flatten)]
        common: Common,
        /// Target object class.
        target: String,
        /// Scene file.
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
        /// Policy to run.
        #[arg(long, default_value = "scripted-dual")]
        policy: PolicySpec,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run the scenes x targets x seeds episode matrix and write logs
    /// plus a metrics report.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Target classes; defaults to each scene's own target candidates.
        targets: Vec<String>,
        /// Scene file; repeat for several scenes.
        #[arg(long, required = true, value_name = "FILE")]
        scene: Vec<PathBuf>,
        /// Policy to evaluate.
        #[arg(long, default_value = "scripted-dual")]
        policy: PolicySpec,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Seeds per scene-target pair.
        #[arg(long, value_name = "N")]
        episodes: Option<usize>,
        /// Worker threads for the episode pool; 0 picks the machine default.
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
    },
    /// Train an actor-critic policy and write the checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Target object class.
        target: String,
        /// Scene file; repeat to rotate training scenes.
        #[arg(long, required = true, value_name = "FILE")]
        scene: Vec<PathBuf>,
        /// Which engine to train: explore-only or goal-only.
        #[arg(long, default_value = "explore-only")]
        policy: PolicySpec,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Training episode count.
        #[arg(long, value_name = "N")]
        episodes: Option<usize>,
    },
    /// Render one viewpoint and write the perception debug artifacts.
    RenderDebug {
        #[command(flatten)]
        common: Common,
        /// Target object class for the similarity map.
        target: String,
        /// Scene file.
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Camera pose; defaults to the scene's start pose.
        #[arg(long, value_name = "X,Y,Z,YAW", allow_hyphen_values = true)]
        pose: Option<String>,
    },
    /// Re-simulate a trajectory log, verify it, and render the path.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Trajectory log to validate.
        log: PathBuf,
        /// Scene file the log was recorded in.
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
        /// Output directory for the top-down image.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenScenes { common, out, count } => commands::gen_scenes(&common, &out, count),
        Command::Run { common, target, scene, policy, out } => {
            commands::run(&common, &target, &scene, &policy, &out)
        }
        Command::Eval { common, targets, scene, policy, out, episodes, workers } => {
            commands::eval(&common, &targets, &scene, &policy, &out, episodes, workers)
        }
        Command::Train { common, target, scene, policy, out, episodes } => {
            commands::train(&common, &target, &scene, &policy, &out, episodes)
        }
        Command::RenderDebug { common, target, scene, out, pose } => {
            commands::render_debug(&common, &target, &scene, &out, pose.as_deref())
        }
        Command::Replay { common, log, scene, out } => {
            commands::replay(&common, &log, &scene, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
