use log::{info, warn};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{SubjectPolicy, TrainConfig};
use super::data::{bootstrap_subjects, epoch_sample, spread_subset, WindowPool, WindowRef};
use crate::error::{invalid, Error, Result};
use crate::gaitsim::{ChannelScaler, TrainingSet};
use crate::nets::{correlation_pairs, correlation_target, init_regressor, ModelKind, NetworkParams};
use crate::numcore::{mse, Activation, Grads, Network, Optimizer, Tensor2};

/// What the ensemble members regress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleTarget {
    /// Sine of the left and right gait phase.
    Phase,
    /// Channel-correlation sum divided by the pair count.
    Correlation,
}

impl EnsembleTarget {
    pub fn outputs(self) -> usize {
        match self {
            EnsembleTarget::Phase => 2,
            EnsembleTarget::Correlation => 1,
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            EnsembleTarget::Phase => ModelKind::PhaseRegressor,
            EnsembleTarget::Correlation => ModelKind::CorrelationRegressor,
        }
    }

    fn head(self) -> Activation {
        match self {
            EnsembleTarget::Phase => Activation::Tanh,
            EnsembleTarget::Correlation => Activation::Identity,
        }
    }

    fn target(self, pool: &WindowPool, r: &WindowRef, x: &Tensor2<f64>) -> Result<Vec<f64>> {
        match self {
            EnsembleTarget::Phase => Ok(pool.phase_target(r)?.to_vec()),
            EnsembleTarget::Correlation => {
                Ok(vec![correlation_target(x)? / correlation_pairs(x.channels()).max(1) as f64])
            }
        }
    }
}

fn new_net(cfg: &TrainConfig, target: EnsembleTarget, seed: u64) -> Result<Network<f64>> {
    init_regressor(&cfg.tcn.regressor(target.outputs(), target.head())?, seed)
}

fn train_epoch(
    net: &mut Network<f64>,
    opt: &mut Optimizer<f64>,
    pool: &WindowPool,
    refs: &[WindowRef],
    target: EnsembleTarget,
    batch: usize,
    lr: f64,
    clip: Option<f64>,
) -> Result<f64> {
    let mut grads = Grads::zeros_like(net);
    let mut total = 0.0;
    for (b, chunk) in refs.chunks(batch).enumerate() {
        grads.zero();
        let mut batch_loss = 0.0;
        for r in chunk {
            let x = pool.tensor(r);
            let y = target.target(pool, r, &x)?;
            let (out, tape) = net.forward_taped(&x)?;
            let (loss, g) = mse(out.data(), &y)?;
            batch_loss += loss;
            net.backward_into(&tape, &Tensor2::column(g), &mut grads)?;
        }
        if !batch_loss.is_finite() {
            return Err(Error::Diverged(format!("non-finite training loss in batch {b}")));
        }
        total += batch_loss;
        grads.scale(1.0 / chunk.len() as f64);
        clip_grad_norm(&mut grads, clip);
        opt.step_network(net, &grads, lr).map_err(|e| Error::Diverged(format!("batch {b}: {e}")))?;
    }
    Ok(total / refs.len().max(1) as f64)
}

/// Rescales gradients whose global L2 norm exceeds `max`.
pub fn clip_grad_norm(grads: &mut Grads<f64>, max: Option<f64>) -> f64 {
    let norm = grads.tensors.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if let Some(m) = max {
        if norm > m && norm.is_finite() {
            grads.scale(m / norm);
        }
    }
    norm
}

/// Mean loss over `refs` without updating the network.
pub fn evaluate_loss(net: &Network<f64>, pool: &WindowPool, refs: &[WindowRef], target: EnsembleTarget) -> Result<f64> {
    let mut total = 0.0;
    for r in refs {
        let x = pool.tensor(r);
        let y = target.target(pool, r, &x)?;
        total += mse(net.forward(&x)?.data(), &y)?.0;
    }
    Ok(total / refs.len().max(1) as f64)
}

/// Rounded mean of per-rotation best epochs (halves round up).
pub fn mean_epoch(best: &[usize]) -> Result<usize> {
    if best.is_empty() {
        return Err(invalid("no rotation results"));
    }
    let sum: usize = best.iter().sum();
    Ok(((2 * sum + best.len()) / (2 * best.len())).max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub held_out: u32,
    /// 1-based epoch with the lowest held-out loss.
    pub best_epoch: usize,
    pub held_out_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopReport {
    pub epochs: usize,
    pub rotations: Vec<Rotation>,
}

/// Trains once per held-out subject, records the epoch of minimum held-out
/// loss and returns the rounded mean.
pub fn find_early_stop_epochs(pool: &WindowPool, cfg: &TrainConfig, target: EnsembleTarget) -> Result<EarlyStopReport> {
    cfg.validate()?;
    let subjects = pool.subjects();
    if subjects.len() < 2 {
        return Err(Error::Dataset(format!("early stopping needs at least 2 subjects, got {}", subjects.len())));
    }
    let held: Vec<u32> = match cfg.rotation_subjects {
        Some(n) => subjects.iter().copied().take(n.max(1)).collect(),
        None => subjects.clone(),
    };
    let mut rotations = Vec::new();
    for &h in &held {
        let train_subjects: Vec<u32> = subjects.iter().copied().filter(|&s| s != h).collect();
        let train_refs = pool.by_subjects(&train_subjects);
        let eval_refs = spread_subset(&pool.by_subjects(&[h]), cfg.eval_windows);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (h as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
        let mut net = new_net(cfg, target, cfg.seed)?;
        let mut opt = Optimizer::for_network(cfg.optimizer, &net);
        let mut losses = Vec::with_capacity(cfg.max_epochs);
        for _ in 0..cfg.max_epochs {
            let refs = epoch_sample(&train_refs, cfg.windows_per_epoch, &mut rng);
            train_epoch(&mut net, &mut opt, pool, &refs, target, cfg.batch_size, cfg.lr_ensemble, cfg.clip_norm)?;
            losses.push(evaluate_loss(&net, pool, &eval_refs, target)?);
        }
        let best = losses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i + 1)
            .unwrap_or(1);
        info!("early-stop rotation: held-out subject {h}, best epoch {best}");
        rotations.push(Rotation { held_out: h, best_epoch: best, held_out_losses: losses });
    }
    let epochs = mean_epoch(&rotations.iter().map(|r| r.best_epoch).collect::<Vec<_>>())?;
    Ok(EarlyStopReport { epochs, rotations })
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub net: Network<f64>,
    pub seed: u64,
    /// Subjects drawn for this member (with repeats under bootstrap).
    pub subjects: Vec<u32>,
    /// Mean training loss per epoch.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub target: EnsembleTarget,
    pub members: Vec<EnsembleMember>,
    pub epochs: usize,
    pub early_stop: Option<EarlyStopReport>,
    pub scaler: ChannelScaler,
    pub warnings: Vec<String>,
}

impl EnsembleResult {
    pub fn to_params(&self) -> Result<Vec<NetworkParams>> {
        self.members
            .iter()
            .map(|m| NetworkParams::from_networks(self.target.model_kind(), &[&m.net], &self.scaler, m.seed))
            .collect()
    }
}

/// Trains one member per seed on its subject draw for the agreed epoch count.
pub fn train_ensemble(set: &TrainingSet, cfg: &TrainConfig, target: EnsembleTarget) -> Result<EnsembleResult> {
    cfg.validate()?;
    let scaler = ChannelScaler::fit(set.recordings())?;
    let pool = WindowPool::new(set, &scaler, cfg.window, cfg.stride)?;
    train_ensemble_on(&pool, scaler, cfg, target)
}

pub fn train_ensemble_on(
    pool: &WindowPool,
    scaler: ChannelScaler,
    cfg: &TrainConfig,
    target: EnsembleTarget,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    if cfg.ensemble_seeds.len() < 2 {
        return Err(invalid(format!("an ensemble needs at least 2 members, got {}", cfg.ensemble_seeds.len())));
    }
    let mut warnings = Vec::new();
    let (epochs, early_stop) = match cfg.epochs {
        Some(e) => (e, None),
        None if cfg.early_stop_rotation => {
            let r = find_early_stop_epochs(pool, cfg, target)?;
            (r.epochs, Some(r))
        }
        None => (cfg.max_epochs, None),
    };
    let subjects = pool.subjects();
    let mut seen = std::collections::HashSet::new();
    if cfg.subject_policy == SubjectPolicy::All && cfg.ensemble_seeds.iter().any(|s| !seen.insert(*s)) {
        let msg = "degenerate ensemble: repeated seeds with identical training subjects give identical members";
        warn!("{msg}");
        warnings.push(msg.to_string());
    }
    let mut members = Vec::with_capacity(cfg.ensemble_seeds.len());
    for (i, &seed) in cfg.ensemble_seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let drawn = match cfg.subject_policy {
            SubjectPolicy::All => subjects.clone(),
            SubjectPolicy::Bootstrap => bootstrap_subjects(&subjects, &mut rng),
        };
        let refs = pool.by_subjects(&drawn);
        let mut net = new_net(cfg, target, seed)?;
        let mut opt = Optimizer::for_network(cfg.optimizer, &net);
        let mut losses = Vec::with_capacity(epochs);
        for e in 0..epochs {
            let sample = epoch_sample(&refs, cfg.windows_per_epoch, &mut rng);
            let loss = train_epoch(&mut net, &mut opt, pool, &sample, target, cfg.batch_size, cfg.lr_ensemble, cfg.clip_norm)
                .map_err(|err| match err {
                    Error::Diverged(m) => Error::Diverged(format!("member {i} (seed {seed}) epoch {}: {m}", e + 1)),
                    other => other,
                })?;
            losses.push(loss);
        }
        let last = losses.last().copied().unwrap_or(f64::NAN);
        info!("ensemble member {i} (seed {seed}): final loss {last:.5}");
        if target == EnsembleTarget::Phase && last > 0.5 {
            // predicting zero everywhere already scores 0.5
            let msg = format!("ensemble member {i} (seed {seed}) did not learn: final loss {last:.3}");
            warn!("{msg}");
            warnings.push(msg);
        }
        members.push(EnsembleMember { net, seed, subjects: drawn, losses });
    }
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            if members[i].net == members[j].net {
                let msg = format!("degenerate ensemble: members {i} and {j} have identical weights");
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Ok(EnsembleResult { target, members, epochs, early_stop, scaler, warnings })
}
