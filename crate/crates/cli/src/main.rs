//! `plumbline`: lens distortion self-calibration from straight lines.

mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plumbline::synth::ClutterKind;

#[derive(Debug, Parser)]
#[command(name = "plumbline", version, about = "Lens distortion self-calibration from straight lines")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "PLUMBLINE_THREADS", value_parser = parse_threads)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate distortion parameters from one or more images of the same camera.
    Calibrate(CalibrateArgs),
    /// Resample an image through a correction.
    Undistort(UndistortArgs),
    /// Run a synthetic recovery study and write per-trial and summary CSVs.
    Synth(SynthArgs),
    /// Dump extracted edgels and their orientation histogram.
    Inspect(InspectArgs),
    /// Rerun the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// Number of edgels to keep per image.
    #[arg(long = "edgels", default_value_t = 100_000, value_parser = parse_positive_usize)]
    pub edgels: usize,
    /// Tensor voting scale in pixels.
    #[arg(long = "sigma-vote", default_value_t = 0.5, value_parser = parse_positive_f64)]
    pub sigma_vote: f64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Input images; all must share one size.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Params JSON to write. The manifest goes next to it.
    #[arg(long, default_value = "params.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = plumbline::hough::DEFAULT_BINS, value_parser = parse_bins)]
    pub bins: usize,
    #[arg(long, default_value_t = 120, value_parser = parse_positive_usize)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit only the center and γ; keep the anisotropy terms at zero.
    #[arg(long = "radial-only")]
    pub radial_only: bool,
    #[command(flatten)]
    pub extract: ExtractArgs,
    /// Refuse to calibrate from fewer edgels than this.
    #[arg(long = "min-edgels", default_value_t = 100)]
    pub min_edgels: usize,
    /// Also write a per-restart CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UndistortArgs {
    pub image: PathBuf,
    /// Params JSON, as written by `calibrate`.
    #[arg(long)]
    pub params: PathBuf,
    /// Corrected image to write (PNG, or PGM for .pgm/.pnm).
    #[arg(long)]
    pub out: PathBuf,
    /// Output canvas `WxH` in the input's pixel frame (default: input size).
    #[arg(long, value_parser = parse_size)]
    pub size: Option<(usize, usize)>,
    /// Write a 1-bit PNG marking pixels sampled from the input.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for trials.csv, summary.csv and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20, value_parser = parse_positive_usize)]
    pub trials: usize,
    /// Distortion coefficients to test, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-5,2e-5", value_parser = parse_finite)]
    pub gammas: Vec<f64>,
    /// Clutter fractions in [0, 1), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0", value_parser = parse_noise)]
    pub noise: Vec<f64>,
    #[arg(long, default_value = "points", value_parser = parse_clutter)]
    pub clutter: ClutterKind,
    #[arg(long, default_value_t = plumbline::hough::DEFAULT_BINS, value_parser = parse_bins)]
    pub bins: usize,
    #[arg(long, default_value_t = 120, value_parser = parse_positive_usize)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "radial-only")]
    pub radial_only: bool,
    /// Side of the square scene in pixels.
    #[arg(long = "scene-size", default_value_t = 250)]
    pub scene_size: usize,
    #[arg(long, default_value_t = 5)]
    pub lines: usize,
    #[arg(long = "points-per-line", default_value_t = 10)]
    pub points_per_line: usize,
    /// Standard deviation of edgel orientation errors, radians.
    #[arg(long = "orientation-noise", default_value_t = 0.02)]
    pub orientation_noise: f64,
    #[arg(long = "min-edgels", default_value_t = 10)]
    pub min_edgels: usize,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub image: PathBuf,
    /// Correct edgels with these params before histogramming.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Directory for edgels.csv, histogram.csv and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = plumbline::hough::DEFAULT_BINS, value_parser = parse_bins)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub extract: ExtractArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Process exit statuses besides success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Io = 3,
    Numeric = 4,
}

/// An error carrying the exit status it should produce.
#[derive(Debug)]
pub struct Coded {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Coded {}

pub fn fail(kind: ExitKind, message: impl Into<String>) -> anyhow::Error {
    Coded {
        kind,
        message: message.into(),
    }
    .into()
}

fn exit_kind(err: &anyhow::Error) -> ExitKind {
    use plumbline::Error as E;
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.kind;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidInput(_) => ExitKind::Usage,
                E::Io(_) | E::Image(_) => ExitKind::Io,
                E::Domain(_) | E::TooFewEdgels { .. } | E::SceneGeneration(_) => ExitKind::Numeric,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<png::EncodingError>() {
            return ExitKind::Io;
        }
    }
    ExitKind::Io
}

fn parse_threads(s: &str) -> Result<usize, String> {
    parse_positive_usize(s).map_err(|_| format!("thread count must be a positive integer, got {s:?}"))
}

fn parse_positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("need at least 2 bins, got {s:?}")),
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {s:?}")),
    }
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    match parse_finite(s)? {
        v if v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_noise(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("noise fraction must lie in [0, 1), got {v}"))
    }
}

fn parse_clutter(s: &str) -> Result<ClutterKind, String> {
    s.parse().map_err(|e: plumbline::Error| e.to_string())
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let err = || format!("expected WxH with positive integers, got {s:?}");
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(err)?;
    let w = parse_positive_usize(w).map_err(|_| err())?;
    let h = parse_positive_usize(h).map_err(|_| err())?;
    Ok((w, h))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(ExitKind::Usage as u8);
        }
    }
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_kind(&err) as u8)
        }
    }
}
