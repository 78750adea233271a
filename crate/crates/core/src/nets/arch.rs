use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaitsim::{CHANNELS, WINDOW};
use crate::numcore::{Activation, StageArch};

/// Dilated causal trunk shared by the regressors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcnConfig {
    pub channels: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub dilations: Vec<usize>,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self { channels: CHANNELS, hidden: 16, kernel: 2, dilations: vec![1, 2, 4, 8, 16, 32] }
    }
}

impl TcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.hidden == 0 || self.kernel == 0 || self.dilations.is_empty() {
            return Err(invalid(format!("degenerate TCN config {self:?}")));
        }
        if self.dilations.contains(&0) {
            return Err(invalid("dilation must be >= 1"));
        }
        Ok(())
    }

    /// Samples of history seen by the last output step.
    pub fn receptive_field(&self) -> usize {
        1 + self.dilations.iter().map(|d| d * (self.kernel - 1)).sum::<usize>()
    }

    /// Trunk, last-step readout and a dense head.
    pub fn regressor(&self, outputs: usize, head: Activation) -> Result<Vec<StageArch>> {
        self.validate()?;
        let mut arch = Vec::with_capacity(self.dilations.len() + 2);
        let mut c = self.channels;
        for &d in &self.dilations {
            arch.push(StageArch::block(c, self.hidden, self.kernel, d, Activation::Relu));
            c = self.hidden;
        }
        arch.push(StageArch::LastStep);
        arch.push(StageArch::dense(self.hidden, outputs, head));
        Ok(arch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub channels: usize,
    pub length: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub latent: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self { channels: CHANNELS, length: WINDOW, hidden: 8, kernel: 3, latent: 16 }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.channels, self.length, self.hidden, self.kernel, self.latent].contains(&0) {
            return Err(invalid(format!("degenerate autoencoder config {self:?}")));
        }
        Ok(())
    }

    pub fn encoder(&self) -> Result<Vec<StageArch>> {
        self.validate()?;
        let h = self.hidden;
        Ok(vec![
            StageArch::block(self.channels, h, self.kernel, 1, Activation::Relu),
            StageArch::block(h, h, self.kernel, 2, Activation::Relu),
            StageArch::Flatten,
            StageArch::dense(h * self.length, self.latent, Activation::Identity),
        ])
    }

    pub fn decoder(&self) -> Result<Vec<StageArch>> {
        self.validate()?;
        let h = self.hidden;
        Ok(vec![
            StageArch::dense(self.latent, h * self.length, Activation::Identity),
            StageArch::Reshape { channels: h, length: self.length },
            StageArch::block(h, h, self.kernel, 1, Activation::Relu),
            StageArch::block(h, self.channels, self.kernel, 1, Activation::Identity),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanConfig {
    pub channels: usize,
    pub length: usize,
    pub hidden: usize,
    pub kernel: usize,
    /// Noise dimension of the generator input.
    pub noise: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self { channels: CHANNELS, length: WINDOW, hidden: 4, kernel: 3, noise: 16 }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.channels, self.length, self.hidden, self.kernel, self.noise].contains(&0) {
            return Err(invalid(format!("degenerate GAN config {self:?}")));
        }
        Ok(())
    }

    pub fn generator(&self) -> Result<Vec<StageArch>> {
        self.validate()?;
        let h = self.hidden;
        Ok(vec![
            StageArch::dense(self.noise, h * self.length, Activation::Identity),
            StageArch::Reshape { channels: h, length: self.length },
            StageArch::block(h, h, self.kernel, 1, Activation::Relu),
            StageArch::block(h, h, self.kernel, 4, Activation::Relu),
            StageArch::block(h, self.channels, self.kernel, 1, Activation::Identity),
        ])
    }

    /// Ends in a single logit; the sigmoid is applied by the caller.
    pub fn discriminator(&self) -> Result<Vec<StageArch>> {
        self.validate()?;
        let h = self.hidden;
        Ok(vec![
            StageArch::block(self.channels, h, self.kernel, 1, Activation::Relu),
            StageArch::block(h, h, self.kernel, 4, Activation::Relu),
            StageArch::Flatten,
            StageArch::dense(h * self.length, 1, Activation::Identity),
        ])
    }
}
