use log::{info, warn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::data::{epoch_sample, WindowPool};
use crate::error::{Error, Result};
use crate::gaitsim::{ChannelScaler, TrainingSet};
use crate::nets::{latent_reference_params, Autoencoder, GanPair, ModelKind, NetworkParams};
use crate::numcore::{bce_with_logit, mse, Grads, Optimizer, SpectralConstraint, Tensor2};

/// Generator output variance (mean over elements, across a batch) below
/// which a collapse warning is raised.
pub const MODE_COLLAPSE_VARIANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct AutoencoderResult {
    pub model: Autoencoder<f64>,
    /// Latent codes of a uniform subsample of training windows.
    pub reference: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub scaler: ChannelScaler,
    pub seed: u64,
}

impl AutoencoderResult {
    /// Model file and reference-set file.
    pub fn to_params(&self) -> Result<(NetworkParams, NetworkParams)> {
        let m = NetworkParams::from_networks(
            ModelKind::Autoencoder,
            &[&self.model.encoder, &self.model.decoder],
            &self.scaler,
            self.seed,
        )?;
        let r = latent_reference_params(&self.reference, &self.scaler, self.seed)?;
        Ok((m, r))
    }
}

fn check_shape(pool: &WindowPool, channels: usize, length: usize, cfg: &TrainConfig) -> Result<()> {
    let x = pool.tensor(&pool.refs()[0]);
    if x.channels() != channels || length != cfg.window {
        return Err(Error::InvalidArgument(format!(
            "model expects {channels}x{length} windows, data gives {}x{}",
            x.channels(),
            cfg.window
        )));
    }
    Ok(())
}

pub fn train_autoencoder(set: &TrainingSet, cfg: &TrainConfig) -> Result<AutoencoderResult> {
    cfg.validate()?;
    let scaler = ChannelScaler::fit(set.recordings())?;
    let pool = WindowPool::new(set, &scaler, cfg.window, cfg.stride)?;
    train_autoencoder_on(&pool, scaler, cfg)
}

pub fn train_autoencoder_on(pool: &WindowPool, scaler: ChannelScaler, cfg: &TrainConfig) -> Result<AutoencoderResult> {
    cfg.validate()?;
    check_shape(pool, cfg.autoencoder.channels, cfg.autoencoder.length, cfg)?;
    let seed = cfg.seed;
    let mut model = Autoencoder::<f64>::new(&cfg.autoencoder, seed)?;
    let mut opt_e = Optimizer::for_network(cfg.optimizer, &model.encoder);
    let mut opt_d = Optimizer::for_network(cfg.optimizer, &model.decoder);
    let mut ge = Grads::zeros_like(&model.encoder);
    let mut gd = Grads::zeros_like(&model.decoder);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xae);
    let mut losses = Vec::with_capacity(cfg.autoencoder_epochs);
    for epoch in 0..cfg.autoencoder_epochs {
        let refs = epoch_sample(pool.refs(), cfg.windows_per_epoch, &mut rng);
        let mut total = 0.0;
        for chunk in refs.chunks(cfg.batch_size) {
            ge.zero();
            gd.zero();
            for r in chunk {
                let x = pool.tensor(r);
                let (z, te) = model.encoder.forward_taped(&x)?;
                let (xh, td) = model.decoder.forward_taped(&z)?;
                let (loss, g) = mse(xh.data(), x.data())?;
                if !loss.is_finite() {
                    return Err(Error::Diverged(format!("autoencoder loss is not finite in epoch {}", epoch + 1)));
                }
                total += loss;
                let gx = Tensor2::new(xh.channels(), xh.length(), g)?;
                let gz = model.decoder.backward_into(&td, &gx, &mut gd)?;
                model.encoder.backward_into(&te, &gz, &mut ge)?;
            }
            let k = 1.0 / chunk.len() as f64;
            ge.scale(k);
            gd.scale(k);
            if let Some(max) = cfg.clip_norm {
                // one global norm across encoder and decoder
                let norm = ge.tensors.iter().chain(&gd.tensors).flatten().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max && norm.is_finite() {
                    ge.scale(max / norm);
                    gd.scale(max / norm);
                }
            }
            opt_e.step_network(&mut model.encoder, &ge, cfg.lr_autoencoder).map_err(|e| Error::Diverged(e.to_string()))?;
            opt_d.step_network(&mut model.decoder, &gd, cfg.lr_autoencoder).map_err(|e| Error::Diverged(e.to_string()))?;
        }
        let mean = total / refs.len() as f64;
        info!("autoencoder epoch {}: reconstruction mse {mean:.5}", epoch + 1);
        losses.push(mean);
    }
    let reference = reservoir_latents(&model, pool, cfg.latent_cap, seed)?;
    Ok(AutoencoderResult { model, reference, losses, scaler, seed })
}

/// Reservoir sample of training latents, size `min(cap, windows)`.
fn reservoir_latents(model: &Autoencoder<f64>, pool: &WindowPool, cap: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a7e);
    let mut keep: Vec<usize> = Vec::with_capacity(cap.min(pool.len()));
    for i in 0..pool.len() {
        if keep.len() < cap {
            keep.push(i);
        } else {
            let j = rng.gen_range(0..=i);
            if j < cap {
                keep[j] = i;
            }
        }
    }
    keep.sort_unstable();
    keep.iter()
        .map(|&i| Ok(model.encoder.forward(&pool.tensor(&pool.refs()[i]))?.into_data()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct GanResult {
    pub model: GanPair<f64>,
    /// Mean D on real windows seen by discriminator updates, per epoch.
    pub d_real: Vec<f64>,
    pub d_fake: Vec<f64>,
    pub g_updates: u64,
    pub d_updates: u64,
    pub warnings: Vec<String>,
    pub scaler: ChannelScaler,
    pub seed: u64,
}

impl GanResult {
    pub fn to_params(&self) -> Result<NetworkParams> {
        NetworkParams::from_networks(
            ModelKind::Gan,
            &[&self.model.generator, &self.model.discriminator],
            &self.scaler,
            self.seed,
        )
    }
}

pub fn train_gan(set: &TrainingSet, cfg: &TrainConfig) -> Result<GanResult> {
    cfg.validate()?;
    let scaler = ChannelScaler::fit(set.recordings())?;
    let pool = WindowPool::new(set, &scaler, cfg.window, cfg.stride)?;
    train_gan_on(&pool, scaler, cfg)
}

fn batch_variance(batch: &[Tensor2<f64>]) -> f64 {
    let n = batch.len() as f64;
    let m = batch[0].data().len();
    let mut acc = 0.0;
    for i in 0..m {
        let mean = batch.iter().map(|t| t.data()[i]).sum::<f64>() / n;
        acc += batch.iter().map(|t| (t.data()[i] - mean).powi(2)).sum::<f64>() / n;
    }
    acc / m as f64
}

/// Non-saturating adversarial training; the discriminator is updated once
/// per `d_every` generator updates at `d_lr_ratio` times the generator rate
/// and is projected to unit spectral norm after every update.
pub fn train_gan_on(pool: &WindowPool, scaler: ChannelScaler, cfg: &TrainConfig) -> Result<GanResult> {
    cfg.validate()?;
    check_shape(pool, cfg.gan.channels, cfg.gan.length, cfg)?;
    let seed = cfg.seed;
    let mut model = GanPair::<f64>::new(&cfg.gan, seed)?;
    let mut sn = SpectralConstraint::new(&model.discriminator, seed ^ 0x5e);
    sn.project(&mut model.discriminator);
    let mut opt_g = Optimizer::for_network(cfg.gan_optimizer, &model.generator);
    let mut opt_d = Optimizer::for_network(cfg.gan_optimizer, &model.discriminator);
    let mut gg = Grads::zeros_like(&model.generator);
    let mut gd = Grads::zeros_like(&model.discriminator);
    let mut scratch = Grads::zeros_like(&model.discriminator);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a);
    let (lr_g, lr_d) = (cfg.lr_gan, cfg.lr_gan * cfg.d_lr_ratio);
    let (mut g_updates, mut d_updates) = (0u64, 0u64);
    let mut d_real = Vec::new();
    let mut d_fake = Vec::new();
    let mut warnings = Vec::new();
    let diverged = |what: &str, e: Error| Error::Diverged(format!("{what}: {e}"));

    for epoch in 0..cfg.gan_epochs {
        let refs = epoch_sample(pool.refs(), cfg.windows_per_epoch, &mut rng);
        let (mut real_sum, mut fake_sum, mut seen) = (0.0, 0.0, 0usize);
        let mut collapsed = false;
        for chunk in refs.chunks(cfg.batch_size) {
            let b = chunk.len();
            if g_updates % cfg.d_every as u64 == 0 {
                gd.zero();
                for r in chunk {
                    let x = pool.tensor(r);
                    let (out, tape) = model.discriminator.forward_taped(&x)?;
                    let (_, dl) = bce_with_logit(out.data()[0], true);
                    real_sum += crate::numcore::sigmoid(out.data()[0]);
                    model.discriminator.backward_into(&tape, &Tensor2::column(vec![dl]), &mut gd)?;
                    let fake = model.generate(&model.sample_noise(&mut rng))?;
                    let (out, tape) = model.discriminator.forward_taped(&fake)?;
                    let (_, dl) = bce_with_logit(out.data()[0], false);
                    fake_sum += crate::numcore::sigmoid(out.data()[0]);
                    model.discriminator.backward_into(&tape, &Tensor2::column(vec![dl]), &mut gd)?;
                }
                seen += b;
                gd.scale(0.5 / b as f64);
                opt_d.step_network(&mut model.discriminator, &gd, lr_d).map_err(|e| diverged("discriminator", e))?;
                sn.project(&mut model.discriminator);
                d_updates += 1;
            }
            gg.zero();
            let mut fakes = Vec::with_capacity(b);
            for _ in 0..b {
                let z = model.sample_noise(&mut rng);
                let (fake, tg) = model.generator.forward_taped(&z)?;
                let (out, td) = model.discriminator.forward_taped(&fake)?;
                let (loss, dl) = bce_with_logit(out.data()[0], true);
                if !loss.is_finite() {
                    return Err(Error::Diverged(format!("generator loss not finite in epoch {}", epoch + 1)));
                }
                let gx = model.discriminator.backward_into(&td, &Tensor2::column(vec![dl]), &mut scratch)?;
                model.generator.backward_into(&tg, &gx, &mut gg)?;
                fakes.push(fake);
            }
            scratch.zero();
            gg.scale(1.0 / b as f64);
            opt_g.step_network(&mut model.generator, &gg, lr_g).map_err(|e| diverged("generator", e))?;
            g_updates += 1;
            if b > 1 && !collapsed && batch_variance(&fakes) < MODE_COLLAPSE_VARIANCE {
                collapsed = true;
                let msg = format!("possible mode collapse in epoch {}: generator output variance below {MODE_COLLAPSE_VARIANCE}", epoch + 1);
                warn!("{msg}");
                warnings.push(msg);
            }
        }
        let (r, f) = if seen > 0 { (real_sum / seen as f64, fake_sum / seen as f64) } else { (f64::NAN, f64::NAN) };
        info!("gan epoch {}: mean D(real) {r:.3}, D(fake) {f:.3}", epoch + 1);
        d_real.push(r);
        d_fake.push(f);
    }
    Ok(GanResult { model, d_real, d_fake, g_updates, d_updates, warnings, scaler, seed })
}
