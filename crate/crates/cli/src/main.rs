use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use zakotfs_cli::config::{ExperimentConfig, Mode};
use zakotfs_cli::{experiments, CliError};

#[derive(Parser)]
#[command(
    name = "zakotfs",
    about = "Zak-OTFS delay-Doppler link-level experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override one config field: --set dotted.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Override the PAPR/measurement oversampling factor.
    #[arg(long)]
    oversample: Option<usize>,

    /// Override the frame-detection threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER vs SNR sweep.
    BerSweep(RunArgs),
    /// PAPR comparison: point pilot vs spread pilot.
    Papr(RunArgs),
    /// Spread-pilot sensing map plus post-cancellation data recovery.
    IsacSense(RunArgs),
    /// Zero-noise identity-channel self-test.
    Loopback(RunArgs),
    /// Demodulate a recorded IQ capture.
    DemodCapture(RunArgs),
    /// Write a default config for an experiment mode.
    GenConfig {
        /// ber-sweep | papr | isac-sense | loopback | demod-capture
        #[arg(long)]
        mode: String,
        /// Output path (stdout when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut overrides: Vec<(String, String)> = Vec::new();
    for item in &args.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {item}: expected KEY=VALUE")))?;
        overrides.push((key.to_string(), value.to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(ov) = args.oversample {
        overrides.push(("oversample".into(), ov.to_string()));
    }
    if let Some(th) = args.threshold {
        overrides.push(("threshold".into(), th.to_string()));
    }
    ExperimentConfig::load(&args.config, &overrides)
}

fn parse_mode(text: &str) -> Result<Mode, CliError> {
    match text {
        "ber-sweep" => Ok(Mode::BerSweep),
        "papr" => Ok(Mode::Papr),
        "isac-sense" => Ok(Mode::IsacSense),
        "loopback" => Ok(Mode::Loopback),
        "demod-capture" => Ok(Mode::DemodCapture),
        other => Err(CliError::Config(format!("unknown mode {other:?}"))),
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::BerSweep(args) => {
            let cfg = load(&args)?;
            experiments::run_ber_sweep(&cfg, &args.out)?;
        }
        Command::Papr(args) => {
            let cfg = load(&args)?;
            experiments::run_papr_compare(&cfg, &args.out)?;
        }
        Command::IsacSense(args) => {
            let cfg = load(&args)?;
            experiments::run_isac_sense(&cfg, &args.out)?;
        }
        Command::Loopback(args) => {
            let cfg = load(&args)?;
            experiments::run_loopback(&cfg, &args.out)?;
        }
        Command::DemodCapture(args) => {
            let cfg = load(&args)?;
            experiments::run_demod_capture(&cfg, &args.out)?;
        }
        Command::GenConfig { mode, config } => {
            let cfg = ExperimentConfig::default_for(parse_mode(&mode)?);
            let text = serde_json::to_string_pretty(&cfg)
                .map_err(|e| CliError::Io(format!("encoding config: {e}")))?;
            match config {
                Some(path) => {
                    std::fs::write(&path, text + "\n")
                        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
                    println!("wrote {}", path.display());
                }
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
