//! Command-line surface for the scene-text kernels: each pipeline stage is
//! independently invocable and produces diffable, byte-stable outputs.

mod commands;
mod docs;
mod io;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "craft-kernels",
    version,
    about = "Scene-text geometry and numerics pipeline",
    propagate_version = true
)]
struct Cli {
    /// Optional JSON config file (same shapes as the library configs);
    /// explicit flags win over config-file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate deterministic synthetic scenes (annotation JSON + CRMAP1).
    Synth(SynthArgs),
    /// Render ground-truth detector maps from an annotation file.
    Gtgen(GtgenArgs),
    /// Extract oriented boxes (and optionally polygons) from detector maps.
    Infer(InferArgs),
    /// Iteratively rectify each detected word and export its control points.
    Rectify(RectifyArgs),
    /// Match predictions against ground truth and report P/R/H-mean.
    Eval(EvalArgs),
    /// Verify analytic loss gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Render CRMAP1 channels as PNG heatmaps.
    Render(RenderArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Seed of the first scene.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of scenes (seeds seed..seed+count).
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Output directory for scene_<seed>.json / scene_<seed>.crmap pairs.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Words per scene.
    #[arg(long)]
    words: Option<usize>,
    /// Additive Gaussian noise sigma on the rendered maps.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Comma-separated layout set: horizontal, rotated, arc.
    #[arg(long, value_delimiter = ',')]
    layouts: Option<Vec<String>>,
}

#[derive(Args)]
struct GtgenArgs {
    /// Annotation JSON file.
    annotation: PathBuf,
    /// Output CRMAP1 path (region, link, sin, cos channels).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Link thickness scaling coefficient.
    #[arg(long)]
    alpha: Option<f64>,
    /// Peak value of the region Gaussians.
    #[arg(long)]
    gaussian_peak: Option<f64>,
    /// Gaussian radius as a fraction of the character box.
    #[arg(long)]
    radius_ratio: Option<f64>,
    /// Append a fifth channel with the polygon-based link-refinement GT.
    #[arg(long)]
    link_refiner: bool,
    /// Width-to-height proportionality of the link-refinement strokes.
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
}

#[derive(Args)]
struct InferArgs {
    /// Input CRMAP1 files (4 channels: region, link, sin, cos).
    #[arg(required = true)]
    maps: Vec<PathBuf>,
    /// Output JSON path (single input only).
    #[arg(long, value_name = "FILE", conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Output directory: one <stem>.boxes.json per input.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Also trace curved-text polygons.
    #[arg(long)]
    polygons: bool,
    /// Stations per polygon.
    #[arg(long, default_value_t = 10)]
    stations: usize,
    #[arg(long)]
    region_threshold: Option<f64>,
    #[arg(long)]
    link_threshold: Option<f64>,
    #[arg(long)]
    min_blob_area: Option<usize>,
    #[arg(long)]
    expand_ratio: Option<f64>,
}

#[derive(Args)]
struct RectifyArgs {
    /// Input CRMAP1 file.
    maps: PathBuf,
    /// Output directory for per-word rectified maps and control points.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// TPS refinement iterations.
    #[arg(long, default_value_t = 3)]
    iters: usize,
    /// Polynomial degree for boundary smoothing (0 disables).
    #[arg(long, default_value_t = 2)]
    smooth_degree: usize,
    #[arg(long)]
    region_threshold: Option<f64>,
    #[arg(long)]
    link_threshold: Option<f64>,
    #[arg(long)]
    min_blob_area: Option<usize>,
    #[arg(long)]
    expand_ratio: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions: boxes JSON (or an annotation file).
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Ground truth: boxes JSON or annotation file.
    #[arg(long, value_name = "FILE")]
    gt: PathBuf,
    /// IoU threshold for a true positive.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Report path; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random instances per loss.
    #[arg(long, default_value_t = 20)]
    instances: u64,
    /// Square map side length.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Maximum acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct RenderArgs {
    /// Input CRMAP1 files.
    #[arg(required = true)]
    maps: Vec<PathBuf>,
    /// Output directory: one <stem>_c<channel>.png per channel.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => commands::synth::run(args, &cli),
        Command::Gtgen(args) => commands::gtgen::run(args, &cli),
        Command::Infer(args) => commands::infer::run(args, &cli),
        Command::Rectify(args) => commands::rectify::run(args, &cli),
        Command::Eval(args) => commands::eval::run(args, &cli),
        Command::Gradcheck(args) => commands::gradcheck::run(args, &cli),
        Command::Render(args) => commands::render::run(args, &cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
