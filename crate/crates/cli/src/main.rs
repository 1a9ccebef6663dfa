//! `deep-logismos`: segment lesions from a probability map with the
//! optimal-surface graph search, and the supporting refine / metrics /
//! phantom tools.
//!
//! Exit status: 0 success, 1 internal error, 2 bad input.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_center, ConfigArgs};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "DEEP_LOGISMOS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "deep-logismos",
    version,
    about = "Optimal-surface lesion segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline around one or more clicked centers.
    Segment {
        /// Intensity volume (.mha).
        #[arg(long)]
        intensity: PathBuf,
        /// Probability volume (.mha, values in [0, 1]).
        #[arg(long)]
        prob: PathBuf,
        /// ROI center as a voxel index `x,y,z`; repeat for batch runs.
        #[arg(long, required = true, value_parser = parse_center)]
        center: Vec<[i64; 3]>,
        /// Output directory; batch runs write one subdirectory per center.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Threshold and refine a probability map (GMM suppression, opening,
    /// largest component, closing).
    Refine {
        #[arg(long)]
        intensity: PathBuf,
        #[arg(long)]
        prob: PathBuf,
        /// Restrict to the ROI around this voxel index `x,y,z`.
        #[arg(long, value_parser = parse_center)]
        center: Option<[i64; 3]>,
        /// Directory for `refined.mha`; omit to print the report only.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print {"dsc": …, "rvd": …} for a segmentation against a reference.
    Metrics {
        #[arg(long)]
        seg: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Generate an intensity / label / probability phantom triple.
    Phantom {
        /// JSON phantom recipe.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Error carrying the exit status class.
#[derive(Debug)]
pub struct CliError {
    bad_input: bool,
    message: String,
}

impl CliError {
    pub fn bad_input(message: impl Into<String>) -> Self {
        Self {
            bad_input: true,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            bad_input: false,
            message: message.into(),
        }
    }

    pub fn is_bad_input(&self) -> bool {
        self.bad_input
    }

    fn exit_code(&self) -> u8 {
        if self.bad_input {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<logismos_core::Error> for CliError {
    fn from(e: logismos_core::Error) -> Self {
        Self {
            bad_input: e.is_bad_input(),
            message: e.to_string(),
        }
    }
}

impl From<logismos_core::pipeline::StageError> for CliError {
    fn from(e: logismos_core::pipeline::StageError) -> Self {
        Self {
            bad_input: e.is_bad_input(),
            message: e.to_string(),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::bad_input(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Segment {
            intensity,
            prob,
            center,
            out,
            config,
        } => commands::segment(&intensity, &prob, &center, &out, &config.resolve()?),
        Command::Refine {
            intensity,
            prob,
            center,
            out,
            config,
        } => commands::refine(
            &intensity,
            &prob,
            center,
            out.as_deref(),
            &config.resolve()?,
        ),
        Command::Metrics { seg, reference } => commands::metrics(&seg, &reference),
        Command::Phantom { spec, out } => commands::phantom(&spec, &out),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching "bad input"
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
