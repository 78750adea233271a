use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gaitguard::gaitsim::DatasetConfig;
use gaitguard::nets::ScorerKind;
use gaitguard::pipeline::{
    cmd_calibrate, cmd_evaluate, cmd_generate, cmd_replay, cmd_report, cmd_train, render_report, EvaluateOptions,
    GenerateOptions, Pacing, ReplayOptions, TrainOptions, DEFAULT_HZ,
};
use gaitguard::training::{TrainConfig, DEFAULT_QUANTILE};
use gaitguard::uncertainty::DEFAULT_FILTER_WINDOW;
use gaitguard::Error;

#[derive(Parser)]
#[command(name = "gaitguard", version, about = "Uncertainty-gated exoskeleton control on synthetic gait data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic training and validation sensor logs.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Length of the walk-only and jump-only logs per unseen subject (s).
        #[arg(long, default_value_t = 60.0)]
        single_task_seconds: f64,
        /// Length of each validation protocol segment (s).
        #[arg(long)]
        segment_seconds: Option<f64>,
        /// Length of each training recording (s).
        #[arg(long)]
        train_seconds: Option<f64>,
    },
    /// Train a scorer on an in-distribution log and calibrate its threshold.
    Train(TrainArgs),
    /// Recompute a bundle's threshold from a training log.
    Calibrate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUANTILE)]
        threshold_quantile: f64,
        #[arg(long, default_value_t = DEFAULT_FILTER_WINDOW)]
        filter_window: usize,
    },
    /// Stream a log through a bundle and write decision records.
    Replay(ReplayArgs),
    /// Compare decision records with the log's ground truth.
    Evaluate {
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Directory for report.json and report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 175)]
        window: usize,
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// Half-width of the transition region around ID/OOD flips (s).
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
    },
    /// Summarize a training run and/or an evaluation report.
    Report {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        evaluation: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, alias = "out")]
    bundle: PathBuf,
    #[arg(long, default_value = "ensemble-phase", value_parser = parse_scorer)]
    scorer: ScorerKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    ensemble_size: usize,
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    threshold_quantile: f64,
    #[arg(long, default_value_t = DEFAULT_FILTER_WINDOW)]
    filter_window: usize,
    #[arg(long, default_value_t = 175)]
    window: usize,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Fixed epoch count (skips the held-out-subject search).
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Limit the early-stop rotation to this many subjects.
    #[arg(long)]
    rotation_subjects: Option<usize>,
    #[arg(long)]
    windows_per_epoch: Option<usize>,
    #[arg(long)]
    autoencoder_epochs: Option<usize>,
    #[arg(long)]
    gan_epochs: Option<usize>,
    /// Latent dimension of the autoencoder and GAN noise.
    #[arg(long)]
    latent: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    log: PathBuf,
    /// Decision records (JSON lines); replay statistics go to <out>.stats.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Decision emission rate when paced.
    #[arg(long, default_value_t = DEFAULT_HZ)]
    hz: f64,
    /// Ignore --hz and run as fast as possible.
    #[arg(long)]
    max_speed: bool,
    /// Expected scorer; rejected if the bundle holds a different one.
    #[arg(long, value_parser = parse_scorer)]
    scorer: Option<ScorerKind>,
    /// Linear torque ramp-down time on OOD (s); off by default.
    #[arg(long)]
    ramp: Option<f64>,
    /// Override the calibrated threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    filter_window: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
}

fn parse_scorer(s: &str) -> Result<ScorerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate { out, seed, single_task_seconds, segment_seconds, train_seconds } => {
            let mut config = DatasetConfig { seed, ..DatasetConfig::default() };
            if let Some(s) = segment_seconds {
                config.val_segments.iter_mut().for_each(|g| g.seconds = s);
            }
            if let Some(s) = train_seconds {
                config.train_tasks.iter_mut().for_each(|g| g.seconds = s);
            }
            let m = cmd_generate(&GenerateOptions { out: out.clone(), config, single_task_seconds })?;
            println!("wrote {} to {}", m.files.join(", "), out.display());
        }
        Command::Train(a) => {
            let mut cfg = TrainConfig::seeded(a.seed, a.ensemble_size);
            cfg.window = a.window;
            cfg.stride = a.stride;
            cfg.autoencoder.length = a.window;
            cfg.gan.length = a.window;
            cfg.epochs = a.epochs;
            if let Some(v) = a.max_epochs {
                cfg.max_epochs = v;
            }
            cfg.rotation_subjects = a.rotation_subjects.or(cfg.rotation_subjects);
            if let Some(v) = a.windows_per_epoch {
                cfg.windows_per_epoch = Some(v);
            }
            if let Some(v) = a.autoencoder_epochs {
                cfg.autoencoder_epochs = v;
            }
            if let Some(v) = a.gan_epochs {
                cfg.gan_epochs = v;
            }
            if let Some(v) = a.latent {
                cfg.autoencoder.latent = v;
                cfg.gan.noise = v;
            }
            let run = cmd_train(&TrainOptions {
                log: a.log,
                bundle: a.bundle.clone(),
                scorer: a.scorer,
                config: cfg,
                quantile: a.threshold_quantile,
                filter_window: a.filter_window,
            })?;
            print!("{}", render_report(Some(&run), None));
            println!("bundle written to {}", a.bundle.display());
        }
        Command::Calibrate { bundle, log, threshold_quantile, filter_window } => {
            let c = cmd_calibrate(&bundle, &log, threshold_quantile, filter_window)?;
            println!("threshold {} (quantile {}, {} scores)", c.threshold, c.quantile, c.count);
        }
        Command::Replay(a) => {
            if let Some(expected) = a.scorer {
                let m = gaitguard::nets::BundleManifest::read(&a.bundle)?;
                if m.scorer != expected {
                    return Err(Error::InvalidArgument(format!("bundle holds a {} scorer, not {expected}", m.scorer)).into());
                }
            }
            let pacing = if a.max_speed { Pacing::MaxSpeed } else { Pacing::Hz(a.hz) };
            let (records, stats) = cmd_replay(&ReplayOptions {
                bundle: a.bundle,
                log: a.log,
                out: a.out.clone(),
                pacing,
                ramp_seconds: a.ramp,
                threshold: a.threshold,
                filter_window: a.filter_window,
                window: a.window,
                stride: a.stride,
            })?;
            let ood = records.iter().filter(|r| r.ood).count();
            println!(
                "{} decisions ({} OOD) in {:.2} s: {:.1} windows/s, p99 latency {:.3} ms",
                stats.windows, ood, stats.elapsed_seconds, stats.throughput, stats.latency_p99_ms
            );
            if let Some(out) = a.out {
                println!("records written to {}", out.display());
            }
        }
        Command::Evaluate { decisions, log, out, window, stride, margin } => {
            let r = cmd_evaluate(&EvaluateOptions { decisions, log, out, window, stride, margin })?;
            print!("{}", render_report(None, Some(&r)));
        }
        Command::Report { bundle, evaluation } => {
            print!("{}", cmd_report(bundle.as_deref(), evaluation.as_deref()).context("building report")?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_validation));
            ExitCode::from(if validation { 2 } else { 3 })
        }
    }
}
