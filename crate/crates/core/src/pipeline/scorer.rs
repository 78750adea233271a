use std::path::Path;

use crate::error::{Error, Result};
use crate::gaitsim::ChannelScaler;
use crate::nets::{
    autoencode, discriminate, latent_reference_points, Autoencoder, BundleManifest, GanPair, ModelKind,
    NetworkParams, ScorerKind,
};
use crate::numcore::{Network, Tensor2};
use crate::outlier::{LofIndex, DEFAULT_K};
use crate::uncertainty::{ensemble_score, gan_score, latent_score};

/// A loaded uncertainty scorer.
#[derive(Debug, Clone)]
pub enum Scorer {
    /// Sine-of-phase members; the member mean feeds the phase tracker.
    EnsemblePhase { members: Vec<Network<f64>> },
    /// Correlation-target members; each member output counts as both heads.
    EnsembleSynthetic { members: Vec<Network<f64>> },
    AutoencoderLof { model: Autoencoder<f64>, index: LofIndex<f64> },
    Gan { model: GanPair<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOutput {
    pub raw: f64,
    /// Ensemble-mean sine of phase per leg, when the scorer predicts it.
    pub sines: Option<[f64; 2]>,
}

impl Scorer {
    pub fn kind(&self) -> ScorerKind {
        match self {
            Scorer::EnsemblePhase { .. } => ScorerKind::EnsemblePhase,
            Scorer::EnsembleSynthetic { .. } => ScorerKind::EnsembleSynthetic,
            Scorer::AutoencoderLof { .. } => ScorerKind::AutoencoderLof,
            Scorer::Gan { .. } => ScorerKind::Gan,
        }
    }

    /// Scores one scaled window; larger means less familiar.
    pub fn score(&self, x: &Tensor2<f64>) -> Result<ScoreOutput> {
        x.ensure_finite("scaled window")?;
        match self {
            Scorer::EnsemblePhase { members } => {
                let mut outs = Vec::with_capacity(members.len());
                for m in members {
                    let y = m.forward(x)?;
                    outs.push((y.data()[0], y.data()[1]));
                }
                let n = outs.len() as f64;
                let l = outs.iter().map(|o| o.0).sum::<f64>() / n;
                let r = outs.iter().map(|o| o.1).sum::<f64>() / n;
                Ok(ScoreOutput { raw: ensemble_score(&outs)?, sines: Some([l, r]) })
            }
            Scorer::EnsembleSynthetic { members } => {
                let mut outs = Vec::with_capacity(members.len());
                for m in members {
                    let y = m.forward(x)?.data()[0];
                    outs.push((y, y));
                }
                Ok(ScoreOutput { raw: ensemble_score(&outs)?, sines: None })
            }
            Scorer::AutoencoderLof { model, index } => {
                let (z, _) = autoencode(model, x)?;
                Ok(ScoreOutput { raw: latent_score(index, &z)?, sines: None })
            }
            Scorer::Gan { model } => Ok(ScoreOutput { raw: gan_score(discriminate(model, x)?)?, sines: None }),
        }
    }
}

/// Bundle manifest, scorer and scaler loaded from a bundle directory.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub manifest: BundleManifest,
    pub scorer: Scorer,
    pub scaler: ChannelScaler,
}

fn expect_kind(p: &NetworkParams, kind: ModelKind, file: &str) -> Result<()> {
    if p.kind != kind {
        return Err(Error::Format(format!("{file}: expected a {kind:?} file, found {:?}", p.kind)));
    }
    Ok(())
}

impl ModelBundle {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = BundleManifest::read(dir)?;
        let scaler = ChannelScaler::from_stats(manifest.scaler.clone())?;
        let params: Vec<NetworkParams> = manifest
            .member_paths(dir)
            .iter()
            .map(|p| NetworkParams::load(p))
            .collect::<Result<_>>()?;
        for (p, name) in params.iter().zip(&manifest.members) {
            if p.scaler != manifest.scaler {
                return Err(Error::Format(format!("{name}: scaler differs from the bundle manifest")));
            }
        }
        let first_net = |p: &NetworkParams| -> Result<Network<f64>> {
            p.networks::<f64>()?.into_iter().next().ok_or_else(|| Error::Format("empty model file".into()))
        };
        let scorer = match manifest.scorer {
            ScorerKind::EnsemblePhase | ScorerKind::EnsembleSynthetic => {
                let kind = if manifest.scorer == ScorerKind::EnsemblePhase {
                    ModelKind::PhaseRegressor
                } else {
                    ModelKind::CorrelationRegressor
                };
                let mut members = Vec::new();
                for (p, name) in params.iter().zip(&manifest.members) {
                    expect_kind(p, kind, name)?;
                    members.push(first_net(p)?);
                }
                if members.len() < 2 {
                    return Err(Error::Format("an ensemble bundle needs at least 2 members".into()));
                }
                if manifest.scorer == ScorerKind::EnsemblePhase {
                    Scorer::EnsemblePhase { members }
                } else {
                    Scorer::EnsembleSynthetic { members }
                }
            }
            ScorerKind::AutoencoderLof => {
                expect_kind(&params[0], ModelKind::Autoencoder, &manifest.members[0])?;
                let mut nets = params[0].networks::<f64>()?.into_iter();
                let (enc, dec) = match (nets.next(), nets.next()) {
                    (Some(e), Some(d)) => (e, d),
                    _ => return Err(Error::Format("autoencoder file needs encoder and decoder".into())),
                };
                let model = Autoencoder::from_parts(enc, dec, manifest.channels(), manifest.window)?;
                let reference = manifest
                    .reference
                    .as_ref()
                    .ok_or_else(|| Error::Format("autoencoder bundle has no latent reference file".into()))?;
                let pts = latent_reference_points(&NetworkParams::load(&dir.join(reference))?)?;
                let dim = pts[0].len();
                let index = LofIndex::build(pts.concat(), dim, manifest.lof_k.unwrap_or(DEFAULT_K))?;
                Scorer::AutoencoderLof { model, index }
            }
            ScorerKind::Gan => {
                expect_kind(&params[0], ModelKind::Gan, &manifest.members[0])?;
                let mut nets = params[0].networks::<f64>()?.into_iter();
                let (g, d) = match (nets.next(), nets.next()) {
                    (Some(g), Some(d)) => (g, d),
                    _ => return Err(Error::Format("GAN file needs generator and discriminator".into())),
                };
                Scorer::Gan { model: GanPair::from_parts(g, d, manifest.channels(), manifest.window)? }
            }
        };
        Ok(Self { manifest, scorer, scaler })
    }
}
