//! Thin command-line front end over the `region_refine` library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use region_refine::backend::{build_refiner, BackendConfig};
use region_refine::boundary::boundary_band;
use region_refine::degrade::{generate_dataset, DegradeConfig};
use region_refine::error::Error;
use region_refine::eval::{aggregate_csv, run_benchmark};
use region_refine::focus::BBox;
use region_refine::pasteback::{blend_mask, canvas_soft_mask};
use region_refine::raster::{write_soft_mask_png, BinaryMask, RasterImage};
use region_refine::{refine_image, PipelineConfig};

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success
  2  usage error
  3  file I/O error
  4  image decode error
  5  invalid geometry, mask, or config (including empty regions)
  6  refiner backend error
  7  no samples produced or found";

#[derive(Parser)]
#[command(
    name = "region-refine",
    version,
    about = "Region-specific image refinement: focus, refine, paste back",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine one image region and write the result.
    Refine(RefineArgs),
    /// Build a degraded dataset from ground-truth images and object masks.
    Degrade(DegradeArgs),
    /// Run a refiner backend over a dataset and report fg/bg metrics.
    Eval(EvalArgs),
    /// Dump the boundary band of a mask as a PNG.
    Band(BandArgs),
}

#[derive(Args)]
struct RefineArgs {
    /// Input image (8-bit PNG, gray or RGB).
    input: PathBuf,
    /// Region mask PNG; omit when passing --box.
    mask: Option<PathBuf>,
    /// Region as x1,y1,x2,y2 (inclusive), instead of a mask file.
    #[arg(long, value_name = "X1,Y1,X2,Y2", conflicts_with = "mask")]
    r#box: Option<String>,
    /// Optional reference image.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    instruction: String,
    /// Pipeline config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the focused crop, blend masks, and crop spec here.
    #[arg(long, value_name = "DIR")]
    dump_debug: Option<PathBuf>,
}

#[derive(Args)]
struct DegradeArgs {
    /// Directory of per-sample folders holding gt.png + object_mask.png.
    gt_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Degrade config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct EvalArgs {
    dataset_dir: PathBuf,
    /// Pipeline config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Backend override on top of the config.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct BandArgs {
    mask: PathBuf,
    /// Pipeline config JSON (band kernel sizes come from its `band` block).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Identity,
    Oracle,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Decode { .. } | Error::Encode(_) => 4,
        Error::BadKernelSize(_)
        | Error::ShapeMismatch(_)
        | Error::InvalidParameter(_)
        | Error::EmptyRegion(_)
        | Error::OutOfCanvas { .. }
        | Error::Config(_) => 5,
        Error::Backend(_) => 6,
        Error::NoSamples(_) => 7,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn load_pipeline_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_json_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn parse_box(text: &str) -> Result<BBox, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "--box wants x1,y1,x2,y2, got {text:?}"
        )));
    }
    let mut nums = [0usize; 4];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("--box coordinate {part:?} is not a number"))
        })?;
    }
    BBox::new(nums[0], nums[1], nums[2], nums[3])
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Refine(args) => cmd_refine(args),
        Command::Degrade(args) => cmd_degrade(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Band(args) => cmd_band(args),
    }
}

fn cmd_refine(args: RefineArgs) -> Result<ExitCode, Error> {
    let config = load_pipeline_config(&args.config)?;
    eprintln!("resolved config: {}", config.resolved_json());
    let input = RasterImage::read_png(&args.input)?;
    let mask = match (&args.mask, &args.r#box) {
        (Some(path), None) => BinaryMask::read_png(path)?,
        (None, Some(text)) => parse_box(text)?.to_mask(input.height(), input.width())?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "pass a mask PNG or --box x1,y1,x2,y2".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let reference = match &args.reference {
        Some(path) => Some(RasterImage::read_png(path)?),
        None => None,
    };
    let refiner = build_refiner(&config.backend)?;
    let outcome = refine_image(
        &input,
        &mask,
        reference.as_ref(),
        &args.instruction,
        &config,
        refiner.as_ref(),
    )?;
    outcome.output.write_png(&args.out)?;
    if let Some(dir) = &args.dump_debug {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        outcome.focused_input.write_png(dir.join("crop.png"))?;
        outcome.refined_crop.write_png(dir.join("refined_crop.png"))?;
        let soft = blend_mask(&outcome.region_mask, &config.blend)?;
        write_soft_mask_png(&soft, dir.join("blend_mask.png"))?;
        let canvas = canvas_soft_mask(&outcome.region_mask, &outcome.crop_spec, &config.blend)?;
        write_soft_mask_png(&canvas, dir.join("canvas_mask.png"))?;
        let spec_path = dir.join("crop_spec.json");
        let text = serde_json::to_string_pretty(&outcome.crop_spec).expect("spec serializes");
        std::fs::write(&spec_path, text + "\n").map_err(|e| Error::io(&spec_path, e))?;
    }
    println!(
        "refined {} -> {} (backend {}, {} ms, crop {}x{} -> {}x{})",
        args.input.display(),
        args.out.display(),
        outcome.backend_id,
        outcome.latency_ms,
        outcome.crop_spec.rect.width(),
        outcome.crop_spec.rect.height(),
        outcome.crop_spec.target.w,
        outcome.crop_spec.target.h,
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_degrade(args: DegradeArgs) -> Result<ExitCode, Error> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<DegradeConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => DegradeConfig::default(),
    };
    eprintln!(
        "resolved config: {}",
        serde_json::to_string_pretty(&config).expect("config serializes")
    );
    let summary = generate_dataset(&args.gt_dir, &args.out, &config, args.seed, args.workers)?;
    for (id, why) in &summary.skipped {
        eprintln!("skipped {id}: {why}");
    }
    for (id, why) in &summary.rejected {
        eprintln!("rejected {id}: {why}");
    }
    println!(
        "wrote {} samples to {} ({} skipped, {} rejected)",
        summary.written,
        args.out.display(),
        summary.skipped.len(),
        summary.rejected.len()
    );
    if summary.written == 0 {
        return Err(Error::NoSamples(args.gt_dir));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, Error> {
    let mut config = load_pipeline_config(&args.config)?;
    if let Some(backend) = args.backend {
        config.backend = match backend {
            BackendArg::Identity => BackendConfig::Identity,
            BackendArg::Oracle => BackendConfig::Oracle { gt_path: None },
            BackendArg::External => BackendConfig::External {
                base_url: None,
                timeout_ms: 10_000,
                retries: 0,
                max_concurrent: 4,
            },
        };
    }
    eprintln!("resolved config: {}", config.resolved_json());
    let report = run_benchmark(&args.dataset_dir, &config, args.workers)?;
    let body = match args.format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => aggregate_csv(&report),
    };
    std::fs::write(&args.out, &body).map_err(|e| Error::io(&args.out, e))?;
    let a = &report.aggregate;
    println!(
        "backend={} samples={} mse={:.6} ssim={:.6} mse_bg={:.3} ssim_bg={:.4} failures={}",
        report.backend_id,
        report.counts.samples,
        a.mse,
        a.ssim,
        a.mse_bg,
        a.ssim_bg,
        report.counts.failures
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_band(args: BandArgs) -> Result<ExitCode, Error> {
    let config = load_pipeline_config(&args.config)?;
    let mask = BinaryMask::read_png(&args.mask)?;
    let band = boundary_band(&mask, &config.band)?;
    band.write_png(&args.out)?;
    println!(
        "band of {} written to {} ({} pixels)",
        args.mask.display(),
        args.out.display(),
        band.count_ones()
    );
    Ok(ExitCode::SUCCESS)
}
