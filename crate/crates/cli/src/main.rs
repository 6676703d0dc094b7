use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use follicle_cli::commands::{
    cmd_analyze, cmd_batch, cmd_calibrate, cmd_compare, cmd_synth, AnalyzeConfig, BatchConfig,
    CalibrateConfig, CompareConfig, SynthConfig, EXIT_USAGE,
};
use follicle_cli::profiles::{load_profiles, mag_from_u32};

/// Automatic nongrowing-follicle counting for PCNA-stained ovarian
/// micrographs.
#[derive(Parser)]
#[command(name = "follicle", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DetectArgs {
    /// Magnification of the input images: 100 or 200.
    #[arg(long)]
    mag: u32,
    /// Profile source: `builtin` or a profile TOML path.
    #[arg(long, default_value = "builtin")]
    profiles: String,
    /// Report CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Optional directory for per-stage overlay PNGs.
    #[arg(long)]
    overlays: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Count follicles in the given images.
    Analyze {
        #[command(flatten)]
        detect: DetectArgs,
        /// Input images (PNG or TIFF).
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Count follicles in every image of a directory.
    Batch {
        #[command(flatten)]
        detect: DetectArgs,
        /// Concurrent per-image workers.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Directory of input images.
        dir: PathBuf,
    },
    /// Compare an automated report against human expert counts.
    Compare {
        /// Report CSV produced by analyze/batch.
        report: PathBuf,
        /// Human counts CSV (`image,expert,con,lib`).
        #[arg(long)]
        human: PathBuf,
        /// Comparison CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON output with deviations and band verdicts.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with ground-truth manifest.
    Synth {
        /// Magnification the corpus mimics: 100 or 200.
        #[arg(long)]
        mag: u32,
        /// Base seed; image i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of images.
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search detection profiles against a synthetic corpus.
    Calibrate {
        /// Corpus directory containing manifest.json.
        corpus: PathBuf,
        /// Output profile TOML path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Analyze { detect, images } => {
            let magnification = mag_from_u32(detect.mag)?;
            let profiles = load_profiles(&detect.profiles, magnification)?;
            cmd_analyze(&AnalyzeConfig {
                magnification,
                profiles,
                images,
                out: detect.out,
                json: detect.json,
                overlays: detect.overlays,
            })
        }
        Command::Batch { detect, workers, dir } => {
            let magnification = mag_from_u32(detect.mag)?;
            let profiles = load_profiles(&detect.profiles, magnification)?;
            cmd_batch(&BatchConfig {
                magnification,
                profiles,
                dir,
                out: detect.out,
                json: detect.json,
                overlays: detect.overlays,
                workers,
            })
        }
        Command::Compare { report, human, out, json } => cmd_compare(&CompareConfig {
            report,
            human,
            out,
            json,
        }),
        Command::Synth { mag, seed, n, out } => cmd_synth(&SynthConfig {
            magnification: mag_from_u32(mag)?,
            seed,
            n,
            out,
        }),
        Command::Calibrate { corpus, out } => cmd_calibrate(&CalibrateConfig { corpus, out }),
    }
}

fn main() -> ExitCode {
    // Usage problems exit 1 per the documented contract (clap defaults to 2).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful explicit requests.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
