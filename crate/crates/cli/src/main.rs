mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, CliResult};

/// Environment variable holding the worker thread count (0 = automatic).
const THREADS_ENV: &str = "AMPI_THREADS";

#[derive(Parser)]
#[command(name = "ampi", version, about = "Adaptive multiplane images from single RGB-D views")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an MPI container from an image and its depth map.
    Build(BuildArgs),
    /// Render the frames of a camera path from an MPI container.
    Render(RenderArgs),
    /// Generate warp-back stereo pairs.
    Genpairs(GenpairsArgs),
    /// Score predicted images against ground truth.
    Eval(EvalArgs),
    /// Dump the alpha-multiplied color of every plane.
    Inspect(InspectArgs),
}

#[derive(Args)]
pub struct DepthInput {
    /// Scene units per integer step of a 16-bit PNG depth map.
    #[arg(long)]
    pub depth_scale: Option<f64>,
}

#[derive(Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Depth map, PFM or 16-bit PNG (the latter needs --depth-scale).
    #[arg(long)]
    pub depth: PathBuf,
    #[command(flatten)]
    pub depth_input: DepthInput,
    #[arg(long)]
    pub planes: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Soft-assignment temperature, as a fraction of the disparity span.
    #[arg(long, default_value_t = 0.002)]
    pub tau: f64,
    /// Width in pixels of the occlusion backfill band.
    #[arg(long, default_value_t = 16)]
    pub band: usize,
    /// Disparity step treated as a depth discontinuity.
    #[arg(long, default_value_t = 0.04)]
    pub grad_thresh: f64,
    /// Keep the disparity-uniform initial planes.
    #[arg(long)]
    pub no_adjust: bool,
    /// Horizontal field of view of the source camera, degrees.
    #[arg(long, default_value_t = 60.0)]
    pub fov: f64,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub mpi: PathBuf,
    /// Camera path file.
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output size as WIDTHxHEIGHT; defaults to the MPI size.
    #[arg(long)]
    pub size: Option<String>,
}

#[derive(Args)]
pub struct GenpairsArgs {
    /// Source images; pairs cycle through them.
    #[arg(long = "image", required = true)]
    pub images: Vec<PathBuf>,
    /// One depth map per image.
    #[arg(long = "depth", required = true)]
    pub depths: Vec<PathBuf>,
    #[command(flatten)]
    pub depth_input: DepthInput,
    #[arg(long)]
    pub count: usize,
    /// Seed of the first pair; pair k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Translation half-range along x, fraction of the median depth.
    #[arg(long, default_value_t = 0.10)]
    pub tx: f64,
    #[arg(long, default_value_t = 0.10)]
    pub ty: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tz: f64,
    /// Rotation half-range about each axis, degrees.
    #[arg(long, default_value_t = 3.0)]
    pub rot: f64,
    #[arg(long, default_value_t = 45.0)]
    pub fov_min: f64,
    #[arg(long, default_value_t = 65.0)]
    pub fov_max: f64,
    /// Long-edge threshold of the lifted mesh, disparity per pixel.
    #[arg(long, default_value_t = 0.04)]
    pub grad_thresh: f64,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Predicted image or directory of PNGs.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth image or directory with the same file names.
    #[arg(long)]
    pub gt: PathBuf,
    /// Border fraction removed before scoring.
    #[arg(long, default_value_t = 0.05)]
    pub crop: f64,
}

#[derive(Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub mpi: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("{THREADS_ENV} must be a non-negative integer, got {value:?}")))?;
    if n > 0 {
        // a second initialization only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Build(a) => commands::build(&a),
        Command::Render(a) => commands::render(&a),
        Command::Genpairs(a) => commands::genpairs(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ampi: {e}");
            e.exit_code()
        }
    }
}
