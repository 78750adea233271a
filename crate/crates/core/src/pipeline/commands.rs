use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::replay::{replay, Pacing, ReplayStats};
use super::runtime::RuntimeConfig;
use super::scorer::{ModelBundle, Scorer};
use crate::error::{invalid, Error, Result};
use crate::evalkit::{evaluate_stream, EvalReport, TruthLabel};
use crate::gaitsim::{
    build_dataset, generate_gait, generate_ood, read_log_file, write_log_file, DatasetConfig, Recording,
    ScaledStream, SubjectProfile, Task, TaskSpec, TrainingSet, SAMPLE_RATE,
};
use crate::nets::{BundleManifest, ScorerKind, BUNDLE_FORMAT_VERSION};
use crate::outlier::DEFAULT_K;
use crate::training::{
    calibrate_threshold, train_autoencoder, train_ensemble, train_gan, CalibrationResult, EnsembleTarget, RunManifest,
    TrainConfig, RUN_MANIFEST_VERSION,
};
use crate::uncertainty::{read_records, write_records, DecisionRecord, MedianFilterState};

pub const TRAIN_LOG: &str = "train.csv";
pub const VAL_LOG: &str = "val.csv";
pub const WALK_LOG: &str = "walk.csv";
pub const JUMP_LOG: &str = "jump.csv";
pub const DATASET_MANIFEST: &str = "dataset.json";
pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Written by `generate` next to the logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config: DatasetConfig,
    pub train_subjects: Vec<u32>,
    pub val_subjects: Vec<u32>,
    /// Validation subjects never seen in training.
    pub unseen_subjects: Vec<u32>,
    pub files: Vec<String>,
    pub single_task_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub out: PathBuf,
    pub config: DatasetConfig,
    /// Length of the walk-only and jump-only logs per unseen subject.
    pub single_task_seconds: f64,
}

/// Writes the training log, the mixed validation log and walk-only /
/// jump-only logs of the unseen validation subjects.
pub fn cmd_generate(opts: &GenerateOptions) -> Result<DatasetManifest> {
    std::fs::create_dir_all(&opts.out)?;
    let d = build_dataset(&opts.config)?;
    write_log_file(&opts.out.join(TRAIN_LOG), d.train.recordings())?;
    write_log_file(&opts.out.join(VAL_LOG), &d.validation)?;
    let train_ids = d.train.subjects();
    let unseen: Vec<&SubjectProfile> = d.val_profiles.iter().filter(|p| !train_ids.contains(&p.id)).collect();
    let secs = opts.single_task_seconds;
    let seed = opts.config.seed;
    let walk = unseen
        .iter()
        .map(|p| generate_gait(p, TaskSpec::walk(1.0), secs, seed ^ 0x3a1c ^ u64::from(p.id)))
        .collect::<Result<Vec<_>>>()?;
    let jump = unseen
        .iter()
        .map(|p| generate_ood(p, Task::Jump, secs, seed ^ 0x7b2d ^ u64::from(p.id)))
        .collect::<Result<Vec<_>>>()?;
    write_log_file(&opts.out.join(WALK_LOG), &walk)?;
    write_log_file(&opts.out.join(JUMP_LOG), &jump)?;
    let manifest = DatasetManifest {
        format_version: 1,
        config: opts.config.clone(),
        train_subjects: train_ids,
        val_subjects: d.val_profiles.iter().map(|p| p.id).collect(),
        unseen_subjects: unseen.iter().map(|p| p.id).collect(),
        files: [TRAIN_LOG, VAL_LOG, WALK_LOG, JUMP_LOG].map(String::from).to_vec(),
        single_task_seconds: secs,
    };
    std::fs::write(opts.out.join(DATASET_MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub log: PathBuf,
    pub bundle: PathBuf,
    pub scorer: ScorerKind,
    pub config: TrainConfig,
    pub quantile: f64,
    pub filter_window: usize,
}

/// Filtered scores of every window of every recording, filter restarted per recording.
pub fn filtered_scores(
    recordings: &[Recording],
    scorer: &Scorer,
    bundle: &ModelBundle,
    window: usize,
    stride: usize,
    filter_window: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for rec in recordings {
        if rec.len() < window {
            continue;
        }
        let s = ScaledStream::new(rec, &bundle.scaler)?;
        let mut f = MedianFilterState::new(filter_window);
        for w in s.windows(window, stride) {
            out.push(f.push(scorer.score(&w.data)?.raw));
        }
    }
    Ok(out)
}

/// Calibrates the bundle's threshold from its training log and rewrites the manifest.
pub fn calibrate_bundle(bundle_dir: &Path, set: &TrainingSet, quantile: f64, filter_window: usize) -> Result<CalibrationResult> {
    let bundle = ModelBundle::load(bundle_dir)?;
    let m = &bundle.manifest;
    let scores = filtered_scores(set.recordings(), &bundle.scorer, &bundle, m.window, m.stride, filter_window)?;
    let cal = calibrate_threshold(&scores, quantile)?;
    let mut manifest = bundle.manifest.clone();
    manifest.threshold = Some(cal.threshold);
    manifest.quantile = quantile;
    manifest.filter_window = filter_window;
    manifest.calibration_count = Some(cal.count);
    manifest.write(bundle_dir)?;
    Ok(cal)
}

fn load_training_set(log: &Path) -> Result<TrainingSet> {
    TrainingSet::new(read_log_file(log)?)
}

/// Trains one scorer, writes the bundle and calibrates its threshold.
pub fn cmd_train(opts: &TrainOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let set = load_training_set(&opts.log)?;
    let cfg = &opts.config;
    cfg.validate()?;
    std::fs::create_dir_all(&opts.bundle)?;
    let mut members = Vec::new();
    let mut reference = None;
    let (seeds, epochs, final_losses, early, d_real, d_fake, warnings, scaler);
    match opts.scorer {
        ScorerKind::EnsemblePhase | ScorerKind::EnsembleSynthetic => {
            let target = if opts.scorer == ScorerKind::EnsemblePhase {
                EnsembleTarget::Phase
            } else {
                EnsembleTarget::Correlation
            };
            let r = train_ensemble(&set, cfg, target)?;
            for (i, p) in r.to_params()?.iter().enumerate() {
                let name = format!("member_{i:02}.ggnp");
                p.save(&opts.bundle.join(&name))?;
                members.push(name);
            }
            seeds = r.members.iter().map(|m| m.seed).collect::<Vec<_>>();
            epochs = r.epochs;
            final_losses = r.members.iter().map(|m| m.losses.last().copied().unwrap_or(f64::NAN)).collect();
            early = r.early_stop.as_ref().map(|e| e.rotations.iter().map(|x| x.best_epoch).collect()).unwrap_or_default();
            (d_real, d_fake) = (Vec::new(), Vec::new());
            warnings = r.warnings.clone();
            scaler = r.scaler.stats().clone();
        }
        ScorerKind::AutoencoderLof => {
            let r = train_autoencoder(&set, cfg)?;
            let (model, refset) = r.to_params()?;
            model.save(&opts.bundle.join("autoencoder.ggnp"))?;
            refset.save(&opts.bundle.join("latent_reference.ggnp"))?;
            members.push("autoencoder.ggnp".to_string());
            reference = Some("latent_reference.ggnp".to_string());
            seeds = vec![r.seed];
            epochs = cfg.autoencoder_epochs;
            final_losses = vec![r.losses.last().copied().unwrap_or(f64::NAN)];
            early = Vec::new();
            (d_real, d_fake) = (Vec::new(), Vec::new());
            warnings = Vec::new();
            scaler = r.scaler.stats().clone();
        }
        ScorerKind::Gan => {
            let r = train_gan(&set, cfg)?;
            r.to_params()?.save(&opts.bundle.join("gan.ggnp"))?;
            members.push("gan.ggnp".to_string());
            seeds = vec![r.seed];
            epochs = cfg.gan_epochs;
            final_losses = Vec::new();
            early = Vec::new();
            (d_real, d_fake) = (r.d_real.clone(), r.d_fake.clone());
            warnings = r.warnings.clone();
            scaler = r.scaler.stats().clone();
        }
    }
    let manifest = BundleManifest {
        format_version: BUNDLE_FORMAT_VERSION,
        scorer: opts.scorer,
        members,
        seeds: seeds.clone(),
        reference,
        lof_k: (opts.scorer == ScorerKind::AutoencoderLof).then_some(DEFAULT_K),
        scaler,
        window: cfg.window,
        stride: cfg.stride,
        sample_rate: SAMPLE_RATE,
        filter_window: opts.filter_window,
        quantile: opts.quantile,
        threshold: None,
        calibration_count: None,
    };
    manifest.write(&opts.bundle)?;
    let cal = calibrate_bundle(&opts.bundle, &set, opts.quantile, opts.filter_window)?;
    info!("calibrated threshold {} from {} filtered training scores", cal.threshold, cal.count);
    let run = RunManifest {
        format_version: RUN_MANIFEST_VERSION,
        scorer: opts.scorer,
        config: cfg.clone(),
        seeds,
        epochs,
        final_losses,
        calibration: Some(cal),
        early_stop_epochs: early,
        d_real,
        d_fake,
        warnings,
        train_seconds: start.elapsed().as_secs_f64(),
    };
    run.write(&opts.bundle.join(RUN_MANIFEST))?;
    Ok(run)
}

pub fn cmd_calibrate(bundle: &Path, log: &Path, quantile: f64, filter_window: usize) -> Result<CalibrationResult> {
    let set = load_training_set(log)?;
    let cal = calibrate_bundle(bundle, &set, quantile, filter_window)?;
    let run_path = bundle.join(RUN_MANIFEST);
    if run_path.exists() {
        let mut run = RunManifest::read(&run_path)?;
        run.calibration = Some(cal);
        run.write(&run_path)?;
    }
    Ok(cal)
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub bundle: PathBuf,
    pub log: PathBuf,
    /// Decision records (JSON lines); stats go to `<out>.stats.json`.
    pub out: Option<PathBuf>,
    pub pacing: Pacing,
    pub ramp_seconds: Option<f64>,
    pub threshold: Option<f64>,
    pub filter_window: Option<usize>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
}

pub fn stats_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".stats.json");
    PathBuf::from(s)
}

pub fn cmd_replay(opts: &ReplayOptions) -> Result<(Vec<DecisionRecord>, ReplayStats)> {
    let bundle = ModelBundle::load(&opts.bundle)?;
    let mut cfg = match opts.threshold {
        Some(t) => {
            let mut b = bundle.clone();
            b.manifest.threshold = Some(t);
            RuntimeConfig::from_bundle(&b)?
        }
        None => RuntimeConfig::from_bundle(&bundle)?,
    };
    cfg.ramp_seconds = opts.ramp_seconds;
    if let Some(f) = opts.filter_window {
        cfg.filter_window = f;
    }
    if let Some(w) = opts.window {
        cfg.window = w;
    }
    if let Some(s) = opts.stride {
        cfg.stride = s;
    }
    let recordings = read_log_file(&opts.log)?;
    let (records, stats) = replay(&recordings, &bundle, &cfg, opts.pacing)?;
    if let Some(out) = &opts.out {
        write_records(BufWriter::new(File::create(out)?), &records)?;
        std::fs::write(stats_path(out), serde_json::to_vec_pretty(&stats)?)?;
    }
    Ok((records, stats))
}

/// Ground truth for each decision: the label of the window's final frame.
pub fn align_truth(records: &[DecisionRecord], recordings: &[Recording], window: usize, stride: usize) -> Result<Vec<TruthLabel>> {
    records
        .iter()
        .map(|r| {
            let rec = recordings
                .get(r.segment)
                .ok_or_else(|| Error::Stream(format!("decision refers to missing segment {}", r.segment)))?;
            let idx = r.window_index * stride + window - 1;
            let (f, l) = rec
                .frames
                .get(idx)
                .zip(rec.labels.get(idx))
                .ok_or_else(|| Error::Stream(format!("decision {} of segment {} is past the log end", r.window_index, r.segment)))?;
            if (f.timestamp - r.timestamp).abs() > 1e-9 {
                return Err(Error::Stream(format!(
                    "decision at t={} does not line up with log frame at t={} (segment {}, window {})",
                    r.timestamp, f.timestamp, r.segment, r.window_index
                )));
            }
            Ok(TruthLabel { segment: r.segment, timestamp: r.timestamp, group: l.task.name().to_string(), is_ood: l.is_ood })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub decisions: PathBuf,
    pub log: PathBuf,
    /// Output directory for `report.json` and `report.csv`.
    pub out: Option<PathBuf>,
    pub window: usize,
    pub stride: usize,
    pub margin: f64,
}

pub fn evaluate_records(
    records: &[DecisionRecord],
    recordings: &[Recording],
    window: usize,
    stride: usize,
    margin: f64,
) -> Result<EvalReport> {
    if window == 0 || stride == 0 {
        return Err(invalid("window and stride must be >= 1"));
    }
    let truth = align_truth(records, recordings, window, stride)?;
    let pred: Vec<bool> = records.iter().map(|r| r.ood).collect();
    evaluate_stream(&pred, &truth, margin)
}

pub fn cmd_evaluate(opts: &EvaluateOptions) -> Result<EvalReport> {
    let records = read_records(BufReader::new(File::open(&opts.decisions)?))?;
    let recordings = read_log_file(&opts.log)?;
    let report = evaluate_records(&records, &recordings, opts.window, opts.stride, opts.margin)?;
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        report.write_json(BufWriter::new(File::create(dir.join("report.json"))?))?;
        report.write_csv(BufWriter::new(File::create(dir.join("report.csv"))?))?;
    }
    Ok(report)
}

/// Plain-text summary of a training run and/or an evaluation report.
pub fn render_report(run: Option<&RunManifest>, eval: Option<&EvalReport>) -> String {
    let mut s = String::new();
    if let Some(r) = run {
        let _ = writeln!(s, "scorer: {}", r.scorer);
        let _ = writeln!(s, "seeds: {:?}", r.seeds);
        let _ = writeln!(s, "epochs: {}", r.epochs);
        if !r.early_stop_epochs.is_empty() {
            let _ = writeln!(s, "early-stop epochs per rotation: {:?}", r.early_stop_epochs);
        }
        if !r.final_losses.is_empty() {
            let _ = writeln!(s, "final losses: {:?}", r.final_losses);
        }
        if let (Some(a), Some(b)) = (r.d_real.last(), r.d_fake.last()) {
            let _ = writeln!(s, "final mean D(real) {a:.4}, D(fake) {b:.4}");
        }
        if let Some(c) = &r.calibration {
            let _ = writeln!(s, "threshold: {} (quantile {}, {} scores)", c.threshold, c.quantile, c.count);
        }
        let _ = writeln!(s, "training time: {:.1} s", r.train_seconds);
        for w in &r.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    if let Some(e) = eval {
        let _ = writeln!(s, "{:<32} {:>8} {:>9} {:>9} {:>9} {:>9}", "variant", "windows", "accuracy", "f1", "j", "recall");
        for v in &e.variants {
            let m = &v.metrics;
            let pct = |x: crate::evalkit::Metric| x.value().map_or("undefined".to_string(), |v| format!("{:.1}", 100.0 * v));
            let _ = writeln!(
                s,
                "{:<32} {:>8} {:>9} {:>9} {:>9} {:>9}",
                v.name,
                v.counts.total(),
                pct(m.accuracy),
                pct(m.f1),
                pct(m.j),
                pct(m.recall)
            );
        }
        let all = e.overall();
        let _ = writeln!(s, "per-group accuracy (all windows):");
        for (g, r) in &all.groups {
            let acc = r.accuracy.value().map_or("undefined".to_string(), |v| format!("{:.1}", 100.0 * v));
            let _ = writeln!(s, "  {g:<10} {acc:>6} % of {} windows", r.windows);
        }
    }
    s
}

pub fn cmd_report(bundle: Option<&Path>, evaluation: Option<&Path>) -> Result<String> {
    if bundle.is_none() && evaluation.is_none() {
        return Err(invalid("report needs a bundle and/or an evaluation report"));
    }
    let run = bundle.map(|b| RunManifest::read(&b.join(RUN_MANIFEST))).transpose()?;
    let eval: Option<EvalReport> = evaluation
        .map(|p| -> Result<EvalReport> { Ok(serde_json::from_reader(BufReader::new(File::open(p)?))?) })
        .transpose()?;
    Ok(render_report(run.as_ref(), eval.as_ref()))
}
