//! `nervetrace`: batch entry points for ingesting, annotating, augmenting,
//! splitting and evaluating ultrasound nerve datasets.
//!
//! Exit status is 0 on success, 1 when a command fails and 2 on a usage
//! error.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nervetrace::metrics::ClassSelection;
use nervetrace::BoundingBox;

#[derive(Debug, Parser)]
#[command(name = "nervetrace", version, about)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DatasetArg {
    /// Dataset root.
    #[arg(long, env = "NERVETRACE_DATA")]
    dataset: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Add a video (frame directory or animated GIF) to the dataset.
    Ingest {
        #[command(flatten)]
        dataset: DatasetArg,
        /// Directory of frame images, or a GIF.
        #[arg(long)]
        source: PathBuf,
        /// JSON file with the video metadata.
        #[arg(long)]
        meta: PathBuf,
        /// Overrides the id in the metadata file.
        #[arg(long)]
        id: Option<String>,
    },
    /// Replay an annotation event log and write the resulting labels.
    AnnotateReplay {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        video: String,
        /// Event log; defaults to the video's session log in the dataset.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Track boxes forward from a seed frame.
    Track {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        video: String,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Seed box as x,y,w,h; repeat for several boxes.
        #[arg(long = "box", value_parser = parse_box, required = true)]
        boxes: Vec<BoundingBox>,
        /// Frames to track; defaults to the rest of the video.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine boxes into a contour and store it as a frame's ground truth.
    Refine {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        video: String,
        #[arg(long)]
        frame: usize,
        /// Box as x,y,w,h; repeat for several boxes.
        #[arg(long = "box", value_parser = parse_box, required = true)]
        boxes: Vec<BoundingBox>,
        /// JSON file with contour parameters; defaults apply otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also write the mask as a PNG here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an augmented copy of the dataset.
    Augment {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with augmentation settings; `--seed` takes precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Stratified k-fold train/validation/test splits.
    Split {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value = "splits.json")]
        out: PathBuf,
    },
    /// Score predicted masks against the dataset's ground truth.
    Evaluate {
        /// Ground-truth dataset root.
        #[arg(long, env = "NERVETRACE_DATA")]
        gt: PathBuf,
        /// Prediction directory.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "both")]
        class: ClassSelection,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// JSON file with metric settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these videos, e.g. one fold's test set.
        #[arg(long = "video")]
        videos: Vec<String>,
        /// Write PR curves from probability maps here, one CSV per class
        /// and IoU threshold.
        #[arg(long)]
        pr_dir: Option<PathBuf>,
    },
    /// Dataset composition summary.
    Stats {
        #[command(flatten)]
        dataset: DatasetArg,
        /// Output file; standard output otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP API for the review UI.
    Serve {
        #[command(flatten)]
        dataset: DatasetArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Allowed CORS origin; repeatable. Any origin when omitted.
        #[arg(long = "origin")]
        origins: Vec<String>,
    },
}

fn parse_box(s: &str) -> Result<BoundingBox, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x,y,w,h, got {s:?}"));
    }
    let x = parts[0].parse::<i32>().map_err(|e| format!("x: {e}"))?;
    let y = parts[1].parse::<i32>().map_err(|e| format!("y: {e}"))?;
    let w = parts[2].parse::<u32>().map_err(|e| format!("w: {e}"))?;
    let h = parts[3].parse::<u32>().map_err(|e| format!("h: {e}"))?;
    Ok(BoundingBox::new(x, y, w, h))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
