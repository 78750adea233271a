use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaitsim::{STRIDE, WINDOW};
use crate::nets::{AutoencoderConfig, GanConfig, TcnConfig};
use crate::numcore::OptimizerKind;

/// How each ensemble member picks its training subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectPolicy {
    /// Every member sees every subject.
    All,
    /// Subjects drawn with replacement, one draw per available subject.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Fixed epoch count; `None` runs the held-out-subject rotation.
    pub epochs: Option<usize>,
    /// Upper bound searched by the rotation.
    pub max_epochs: usize,
    pub early_stop_rotation: bool,
    /// Restrict the rotation to the first `n` subjects.
    pub rotation_subjects: Option<usize>,
    pub batch_size: usize,
    /// Cap on windows visited per epoch (a fresh shuffled subset each epoch).
    pub windows_per_epoch: Option<usize>,
    /// Cap on held-out windows scored per rotation epoch.
    pub eval_windows: usize,
    pub lr_ensemble: f64,
    pub lr_autoencoder: f64,
    /// Generator rate; the discriminator uses `d_lr_ratio` times this.
    pub lr_gan: f64,
    pub d_lr_ratio: f64,
    /// One discriminator update per this many generator updates.
    pub d_every: usize,
    pub optimizer: OptimizerKind,
    /// Optimizer for both GAN networks.
    pub gan_optimizer: OptimizerKind,
    /// Global gradient-norm clip for supervised and autoencoder updates.
    pub clip_norm: Option<f64>,
    pub ensemble_seeds: Vec<u64>,
    pub subject_policy: SubjectPolicy,
    pub autoencoder_epochs: usize,
    pub gan_epochs: usize,
    pub latent_cap: usize,
    pub window: usize,
    pub stride: usize,
    pub tcn: TcnConfig,
    pub autoencoder: AutoencoderConfig,
    pub gan: GanConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: None,
            max_epochs: 35,
            early_stop_rotation: true,
            rotation_subjects: None,
            batch_size: 32,
            windows_per_epoch: Some(2000),
            eval_windows: 600,
            lr_ensemble: 2e-3,
            lr_autoencoder: 3e-3,
            lr_gan: 1e-4,
            d_lr_ratio: 2.0,
            d_every: 2,
            optimizer: OptimizerKind::adam(),
            gan_optimizer: OptimizerKind::Adam { beta1: 0.5, beta2: 0.999, eps: 1e-8 },
            clip_norm: Some(1.0),
            ensemble_seeds: member_seeds(42, 7),
            subject_policy: SubjectPolicy::Bootstrap,
            autoencoder_epochs: 12,
            gan_epochs: 20,
            latent_cap: 5000,
            window: WINDOW,
            stride: STRIDE,
            tcn: TcnConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            gan: GanConfig::default(),
            seed: 42,
        }
    }
}

/// Member seeds derived from a run seed.
pub fn member_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| seed.wrapping_mul(1000).wrapping_add(i + 1)).collect()
}

impl TrainConfig {
    /// Default settings with every seed derived from `seed`.
    pub fn seeded(seed: u64, ensemble_size: usize) -> Self {
        Self { seed, ensemble_seeds: member_seeds(seed, ensemble_size), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, lr) in
            [("ensemble", self.lr_ensemble), ("autoencoder", self.lr_autoencoder), ("gan", self.lr_gan)]
        {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(invalid(format!("{name} learning rate must be > 0, got {lr}")));
            }
        }
        if !(self.d_lr_ratio > 0.0) {
            return Err(invalid("discriminator learning-rate ratio must be > 0"));
        }
        if self.batch_size == 0 || self.window == 0 || self.stride == 0 || self.d_every == 0 {
            return Err(invalid("batch size, window, stride and d_every must be >= 1"));
        }
        if self.epochs == Some(0) || self.max_epochs == 0 {
            return Err(invalid("epoch counts must be >= 1"));
        }
        if self.ensemble_seeds.is_empty() {
            return Err(invalid("ensemble needs at least one seed"));
        }
        if self.windows_per_epoch == Some(0) || self.eval_windows == 0 || self.latent_cap == 0 {
            return Err(invalid("window caps must be >= 1"));
        }
        self.tcn.validate()?;
        self.autoencoder.validate()?;
        self.gan.validate()
    }
}
