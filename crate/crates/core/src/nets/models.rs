use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::arch::{AutoencoderConfig, GanConfig, TcnConfig};
use crate::error::{shape, Error, Result};
use crate::numcore::{sigmoid, Activation, Network, StageArch, Tensor2};
use crate::scalar::Scalar;

fn check_input<T: Scalar>(x: &Tensor2<T>, channels: usize) -> Result<()> {
    if x.channels() != channels {
        return Err(shape(format!("expected {channels} channels, got {}", x.channels())));
    }
    x.ensure_finite("network input")
}

fn in_channels<T: Scalar>(net: &Network<T>) -> Option<usize> {
    net.arch().first().and_then(|a| match a {
        StageArch::Block { conv, .. } => Some(conv.in_channels),
        StageArch::Dense { inputs, .. } => Some(*inputs),
        _ => None,
    })
}

fn out_width(arch: &[StageArch]) -> Option<usize> {
    match arch.last()? {
        StageArch::Dense { outputs, .. } => Some(*outputs),
        _ => None,
    }
}

/// Scale applied to the randomly initialized output layer of the
/// regressors so the tanh head starts unsaturated.
pub const HEAD_INIT_SCALE: f64 = 0.1;

/// Random regressor with a shrunken output layer.
pub fn init_regressor<T: Scalar>(arch: &[StageArch], seed: u64) -> Result<Network<T>> {
    let mut net = Network::random(arch, seed)?;
    if let Some(crate::numcore::Stage::Dense(d)) = net.stages_mut().last_mut() {
        d.weights.iter_mut().for_each(|w| *w *= T::of(HEAD_INIT_SCALE));
    }
    Ok(net)
}

/// Two sine-of-phase heads (left, right) on one shared trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRegressor<T> {
    pub net: Network<T>,
}

impl<T: Scalar> PhaseRegressor<T> {
    pub fn new(config: &TcnConfig, seed: u64) -> Result<Self> {
        Ok(Self { net: init_regressor(&config.regressor(2, Activation::Tanh)?, seed)? })
    }

    pub fn zeros(config: &TcnConfig) -> Result<Self> {
        Ok(Self { net: Network::zeros(&config.regressor(2, Activation::Tanh)?)? })
    }

    pub fn from_network(net: Network<T>) -> Result<Self> {
        let arch = net.arch();
        match arch.last() {
            Some(StageArch::Dense { outputs: 2, activation: Activation::Tanh, .. }) => Ok(Self { net }),
            _ => Err(Error::Format("phase regressor must end in a 2-output tanh dense layer".into())),
        }
    }

    pub fn channels(&self) -> usize {
        in_channels(&self.net).unwrap_or(0)
    }
}

/// Sine-of-phase estimates `(l, r)` for one scaled window.
pub fn phase_forward<T: Scalar>(model: &PhaseRegressor<T>, x: &Tensor2<T>) -> Result<(T, T)> {
    check_input(x, model.channels())?;
    let y = model.net.forward(x)?;
    Ok((y.data()[0], y.data()[1]))
}

/// Single linear head regressing the normalized channel-correlation sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRegressor<T> {
    pub net: Network<T>,
}

impl<T: Scalar> CorrelationRegressor<T> {
    pub fn new(config: &TcnConfig, seed: u64) -> Result<Self> {
        Ok(Self { net: init_regressor(&config.regressor(1, Activation::Identity)?, seed)? })
    }

    pub fn from_network(net: Network<T>) -> Result<Self> {
        if out_width(&net.arch()) != Some(1) {
            return Err(Error::Format("correlation regressor must end in a 1-output dense layer".into()));
        }
        Ok(Self { net })
    }

    pub fn forward(&self, x: &Tensor2<T>) -> Result<T> {
        check_input(x, in_channels(&self.net).unwrap_or(0))?;
        Ok(self.net.forward(x)?.data()[0])
    }
}

/// Number of unordered channel pairs, used to normalize the correlation target.
pub fn correlation_pairs(channels: usize) -> usize {
    channels * channels.saturating_sub(1) / 2
}

/// Sum of Pearson correlations over all unordered channel pairs. Channels
/// with zero variance contribute 0 to every pair.
pub fn correlation_target<T: Scalar>(x: &Tensor2<T>) -> Result<T> {
    let (c, n) = (x.channels(), x.length());
    if n < 2 {
        return Err(shape(format!("correlation needs at least 2 samples, got {n}")));
    }
    x.ensure_finite("correlation input")?;
    let nf = T::of(n as f64);
    let centered: Vec<Option<(Vec<T>, T)>> = (0..c)
        .map(|ch| {
            let row = x.row(ch);
            if row.iter().all(|&v| v == row[0]) {
                return None;
            }
            let mean = row.iter().copied().sum::<T>() / nf;
            let dev: Vec<T> = row.iter().map(|&v| v - mean).collect();
            let ss = dev.iter().map(|&d| d * d).sum::<T>().sqrt();
            (ss > T::zero()).then_some((dev, ss))
        })
        .collect();
    let mut total = T::zero();
    for i in 0..c {
        let Some((a, sa)) = &centered[i] else { continue };
        for cj in centered.iter().skip(i + 1) {
            let Some((b, sb)) = cj else { continue };
            let dot = a.iter().zip(b).map(|(&p, &q)| p * q).sum::<T>();
            total += (dot / (*sa * *sb)).max(-T::one()).min(T::one());
        }
    }
    Ok(total)
}

/// Convolutional encoder to a latent vector and a decoder back to the window shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    pub encoder: Network<T>,
    pub decoder: Network<T>,
    pub channels: usize,
    pub length: usize,
    pub latent: usize,
}

impl<T: Scalar> Autoencoder<T> {
    pub fn new(config: &AutoencoderConfig, seed: u64) -> Result<Self> {
        let encoder = Network::random(&config.encoder()?, seed)?;
        let decoder = Network::random(&config.decoder()?, seed.wrapping_add(0x9e37_79b9))?;
        Self::from_parts(encoder, decoder, config.channels, config.length)
    }

    /// Checks that the parts compose to a `(channels, length)` round trip.
    pub fn from_parts(encoder: Network<T>, decoder: Network<T>, channels: usize, length: usize) -> Result<Self> {
        let probe = Tensor2::zeros(channels, length);
        let z = encoder.forward(&probe)?;
        if z.length() != 1 {
            return Err(shape("encoder must produce a latent column"));
        }
        let xh = decoder.forward(&z)?;
        if xh.channels() != channels || xh.length() != length {
            return Err(shape(format!(
                "decoder produces {}x{}, expected {channels}x{length}",
                xh.channels(),
                xh.length()
            )));
        }
        let latent = z.channels();
        Ok(Self { encoder, decoder, channels, length, latent })
    }
}

/// Latent code and reconstruction of one window.
pub fn autoencode<T: Scalar>(model: &Autoencoder<T>, x: &Tensor2<T>) -> Result<(Vec<T>, Tensor2<T>)> {
    check_input(x, model.channels)?;
    if x.length() != model.length {
        return Err(shape(format!("expected window length {}, got {}", model.length, x.length())));
    }
    let z = model.encoder.forward(x)?;
    let xh = model.decoder.forward(&z)?;
    if !z.is_finite() || !xh.is_finite() {
        return Err(Error::NonFinite("autoencoder output".into()));
    }
    Ok((z.into_data(), xh))
}

/// Generator and spectrally constrained discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct GanPair<T> {
    pub generator: Network<T>,
    /// Produces a logit; see [`discriminate`].
    pub discriminator: Network<T>,
    pub channels: usize,
    pub length: usize,
    pub noise: usize,
}

/// Keeps the discriminator output strictly inside (0, 1).
pub const D_OUTPUT_MARGIN: f64 = 1e-12;

impl<T: Scalar> GanPair<T> {
    pub fn new(config: &GanConfig, seed: u64) -> Result<Self> {
        let generator = Network::random(&config.generator()?, seed)?;
        let discriminator = Network::random(&config.discriminator()?, seed.wrapping_add(0x51ed_270b))?;
        Self::from_parts(generator, discriminator, config.channels, config.length)
    }

    pub fn from_parts(generator: Network<T>, discriminator: Network<T>, channels: usize, length: usize) -> Result<Self> {
        let noise = in_channels(&generator).ok_or_else(|| shape("generator must start with a dense layer"))?;
        let fake = generator.forward(&Tensor2::zeros(noise, 1))?;
        if fake.channels() != channels || fake.length() != length {
            return Err(shape("generator output does not match the window shape"));
        }
        let d = discriminator.forward(&fake)?;
        if d.data().len() != 1 {
            return Err(shape("discriminator must produce one logit"));
        }
        Ok(Self { generator, discriminator, channels, length, noise })
    }

    pub fn sample_noise(&self, rng: &mut impl Rng) -> Tensor2<T> {
        Tensor2::column((0..self.noise).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect())
    }

    pub fn generate(&self, z: &Tensor2<T>) -> Result<Tensor2<T>> {
        self.generator.forward(z)
    }

    pub fn logit(&self, x: &Tensor2<T>) -> Result<T> {
        check_input(x, self.channels)?;
        Ok(self.discriminator.forward(x)?.data()[0])
    }
}

/// D(x), clamped strictly inside (0, 1).
pub fn discriminate<T: Scalar>(model: &GanPair<T>, x: &Tensor2<T>) -> Result<T> {
    let p = sigmoid(model.logit(x)?);
    let m = T::of(D_OUTPUT_MARGIN);
    Ok(p.max(m).min(T::one() - m))
}

/// Deterministic noise batch for evaluation.
pub fn noise_batch<T: Scalar>(gan: &GanPair<T>, count: usize, seed: u64) -> Vec<Tensor2<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| gan.sample_noise(&mut rng)).collect()
}
