use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symdetect_cli::{
    convert_gt, detect_batch, detect_one, evaluate, expand_inputs, load_config, parse_gt_format,
    render_overlay, write_pr_curve, write_report, CliError, CliResult, Dumps,
};

/// Reflection symmetry axis detection.
#[derive(Parser)]
#[command(name = "symdetect", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set density.g=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect symmetry axes in one image or a batch of images.
    Detect {
        /// Image files, directories or glob patterns.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output JSON for a single image, or output directory in batch mode.
        #[arg(short, long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write extracted features as JSON (single image only).
        #[arg(long)]
        features_out: Option<PathBuf>,
        /// Write axis candidates as CSV (single image only).
        #[arg(long)]
        candidates_out: Option<PathBuf>,
        /// Write the density grid to PREFIX.csv and PREFIX.json (single image only).
        #[arg(long, value_name = "PREFIX")]
        density_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Draw detected axes over an image.
    Render {
        image: PathBuf,
        detections: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Density export prefix (from `detect --density-out`) to show as a side panel.
        #[arg(long, value_name = "PREFIX")]
        heatmap: Option<PathBuf>,
    },
    /// Evaluate detections against ground truth.
    Eval {
        /// Benchmark manifest JSON.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding `<name>.json` detection files.
        #[arg(long)]
        detections: PathBuf,
        /// Report JSON at the max-F1 threshold.
        #[arg(long)]
        report: PathBuf,
        /// Also write the precision-recall curve as CSV.
        #[arg(long)]
        pr_curve: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write the precision-recall curve of a set of detections.
    PrCurve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Convert PSU or NY ground truth to `x1 y1 x2 y2` lines.
    ConvertGt {
        input: PathBuf,
        /// Source format: psu, ny or canonical.
        #[arg(long)]
        format: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the effective configuration as TOML.
    PrintConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Detect {
            inputs,
            out,
            threads,
            features_out,
            candidates_out,
            density_out,
            config,
        } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
            }
            let dumps = Dumps {
                features: features_out,
                candidates: candidates_out,
                density: density_out,
            };
            let batch = inputs.len() > 1 || inputs[0].is_dir() || !inputs[0].exists();
            if batch {
                if !dumps.is_empty() {
                    return Err(CliError::Input(
                        "debug dumps need a single input image".into(),
                    ));
                }
                detect_batch(&expand_inputs(&inputs)?, &out, &cfg)
            } else {
                let n = detect_one(&inputs[0], &out, &cfg, &dumps)?;
                eprintln!("{}: {n} axes", inputs[0].display());
                Ok(())
            }
        }
        Command::Render {
            image,
            detections,
            out,
            heatmap,
        } => {
            render_overlay(&image, &detections, &out, heatmap.as_deref())?;
            Ok(())
        }
        Command::Eval {
            manifest,
            detections,
            report,
            pr_curve,
            config,
        } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            let eval = evaluate(&manifest, &detections, &cfg)?;
            write_report(&report, &eval.report)?;
            if let Some(p) = pr_curve {
                write_pr_curve(&p, &eval.curve)?;
            }
            println!("{}", eval.summary());
            Ok(())
        }
        Command::PrCurve {
            manifest,
            detections,
            out,
            config,
        } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            let eval = evaluate(&manifest, &detections, &cfg)?;
            write_pr_curve(&out, &eval.curve)?;
            println!("{}", eval.summary());
            Ok(())
        }
        Command::ConvertGt { input, format, out } => {
            let n = convert_gt(&input, parse_gt_format(&format)?, &out)?;
            eprintln!("{}: {n} axes", out.display());
            Ok(())
        }
        Command::PrintConfig { config } => {
            let cfg = load_config(config.config.as_deref(), &config.overrides)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
