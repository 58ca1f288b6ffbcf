//! `lumiprobe` command-line tool.
//!
//! Every subcommand prints its results as `key=value` lines on stdout.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance failure.

mod commands;
mod preview;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lumiprobe", version, about = "Environment maps from specular highlights on a probe")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render every probe of a scene into diffuse, highlight and composite layers.
    Render(RenderArgs),
    /// Split a batch of aligned composites into highlight and diffuse layers.
    Separate(SeparateArgs),
    /// Estimate an environment map from a probe's highlight layer.
    Estimate(EstimateArgs),
    /// Deconvolve a traced map with its kernel parameters.
    Deconv(DeconvArgs),
    /// Detect point lights in an environment map.
    Lights(LightsArgs),
    /// Match lights seen by several probes and locate them in 3D.
    Triangulate(TriangulateArgs),
    /// Compare an estimated map to ground truth, or two images.
    Evaluate(EvaluateArgs),
    /// Render, estimate and evaluate a scene; checks its acceptance thresholds.
    Roundtrip(RoundtripArgs),
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    /// Aligned 3-channel composites; saturation comes from `.mask.pfm` sidecars.
    #[arg(long, num_args = 2.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// 1-channel PFM, non-zero where pixels take part in the loss.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Illuminant color shared by the batch, as `r,g,b`.
    #[arg(long, value_parser = commands::parse_triple, default_value = "1,1,1")]
    pub illuminant: [f64; 3],
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    /// Write the optimizer trace here, one record per line.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub highlight: PathBuf,
    /// 3-channel normal map, zero outside the silhouette.
    #[arg(long)]
    pub normals: PathBuf,
    /// Material JSON with per-region `ks` and `alpha`.
    #[arg(long)]
    pub config: PathBuf,
    /// 1-channel region ids aligned with the normal map.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// Diffuse shading chromaticity (3-channel) enabling highlight recoloring.
    #[arg(long)]
    pub shading: Option<PathBuf>,
    /// LDR composite whose clipped samples mark saturation for recoloring.
    #[arg(long)]
    pub ldr: Option<PathBuf>,
    #[arg(long, value_parser = commands::parse_direction, default_value = "0,0,1")]
    pub view: lumiprobe::Direction,
    #[arg(long)]
    pub map_height: Option<usize>,
    /// Final map; intermediate maps are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DeconvArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Kernel parameter map written by `estimate`.
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LightsArgs {
    #[arg(long)]
    pub env: PathBuf,
    /// Fraction of the map maximum a peak must reach.
    #[arg(long, default_value_t = lumiprobe::lights::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = lumiprobe::lights::DEFAULT_NMS_RADIUS_DEG)]
    pub nms_deg: f64,
    /// Scene position of the probe, recorded for triangulation.
    #[arg(long, value_parser = commands::parse_triple)]
    pub probe_position: Option<[f64; 3]>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TriangulateArgs {
    /// Light lists of each probe; the first three decide ambiguous pairings.
    #[arg(long, num_args = 2.., required = true)]
    pub lights: Vec<PathBuf>,
    #[arg(long, default_value_t = lumiprobe::lights::DEFAULT_COLOR_TOLERANCE)]
    pub color_tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub est: PathBuf,
    /// Compare two images with RMSE and SSIM instead of relighting two maps.
    #[arg(long)]
    pub images: bool,
    /// Signal range L of the SSIM constants.
    #[arg(long, default_value_t = 1.0)]
    pub dynamic_range: f64,
    /// Side of the relit test spheres.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Normal map used as the relighting object instead of spheres.
    #[arg(long)]
    pub normals: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    pub scene: PathBuf,
    /// Also write every rendered layer and estimated map here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Render(a) => commands::render(&a),
        Command::Separate(a) => commands::separate(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Deconv(a) => commands::deconv(&a),
        Command::Lights(a) => commands::lights(&a),
        Command::Triangulate(a) => commands::triangulate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Roundtrip(a) => commands::roundtrip(&a),
    };
    match outcome {
        Ok(commands::Status::Done) => ExitCode::SUCCESS,
        Ok(commands::Status::AcceptanceFailed(reasons)) => {
            for r in reasons {
                eprintln!("acceptance: {r}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
