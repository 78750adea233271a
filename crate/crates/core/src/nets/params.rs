use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaitsim::ChannelScaler;
use crate::numcore::{read_params, write_params, Network, ParamsHeader, ScalerStats, StageArch, FORMAT_VERSION};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    EnsemblePhase,
    EnsembleSynthetic,
    AutoencoderLof,
    Gan,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 4] =
        [ScorerKind::EnsemblePhase, ScorerKind::EnsembleSynthetic, ScorerKind::AutoencoderLof, ScorerKind::Gan];

    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::EnsemblePhase => "ensemble-phase",
            ScorerKind::EnsembleSynthetic => "ensemble-synthetic",
            ScorerKind::AutoencoderLof => "autoencoder-lof",
            ScorerKind::Gan => "gan",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown scorer '{s}' (expected one of ensemble-phase, ensemble-synthetic, autoencoder-lof, gan)")))
    }
}

/// What a parameter file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PhaseRegressor,
    CorrelationRegressor,
    /// Encoder then decoder.
    Autoencoder,
    /// Generator then discriminator.
    Gan,
    /// A point cloud; `parts` is empty and `extra` holds `{rows, dim}`.
    LatentReference,
}

impl ModelKind {
    fn tag(self) -> &'static str {
        match self {
            ModelKind::PhaseRegressor => "phase_regressor",
            ModelKind::CorrelationRegressor => "correlation_regressor",
            ModelKind::Autoencoder => "autoencoder",
            ModelKind::Gan => "gan",
            ModelKind::LatentReference => "latent_reference",
        }
    }

    fn from_tag(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::Format(format!("unknown model kind '{s}'")))
    }
}

/// Architecture, flat weights, scaler and seed of one trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub kind: ModelKind,
    /// One architecture per sub-network, in storage order.
    pub parts: Vec<Vec<StageArch>>,
    pub weights: Vec<f64>,
    pub scaler: ScalerStats,
    pub seed: u64,
    pub extra: serde_json::Value,
}

fn check_scaler(s: &ScalerStats) -> Result<()> {
    if s.mean.len() != s.std.len() {
        return Err(Error::Format("scaler mean/std lengths differ".into()));
    }
    if s.std.iter().any(|&v| !(v > 0.0 && v.is_finite())) || s.mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("scaler std must be finite and > 0 for every channel".into()));
    }
    Ok(())
}

impl NetworkParams {
    pub fn from_networks<T: Scalar>(
        kind: ModelKind,
        nets: &[&Network<T>],
        scaler: &ChannelScaler,
        seed: u64,
    ) -> Result<Self> {
        let stats = scaler.stats().clone();
        check_scaler(&stats)?;
        let mut weights = Vec::new();
        for n in nets {
            weights.extend(n.flat_params().iter().map(|v| v.as_f64()));
        }
        Ok(Self {
            kind,
            parts: nets.iter().map(|n| n.arch()).collect(),
            weights,
            scaler: stats,
            seed,
            extra: serde_json::Value::Null,
        })
    }

    /// Rebuilds every sub-network in the requested precision.
    pub fn networks<T: Scalar>(&self) -> Result<Vec<Network<T>>> {
        let mut out = Vec::with_capacity(self.parts.len());
        let mut off = 0;
        for arch in &self.parts {
            let mut net = Network::<T>::zeros(arch)?;
            let n = net.param_count();
            let slice = self
                .weights
                .get(off..off + n)
                .ok_or_else(|| Error::Format("weight payload shorter than the architecture".into()))?;
            let cast: Vec<T> = slice.iter().map(|&v| T::of(v)).collect();
            net.load_flat(&cast)?;
            off += n;
            out.push(net);
        }
        if off != self.weights.len() {
            return Err(Error::Format("weight payload longer than the architecture".into()));
        }
        Ok(out)
    }

    pub fn scaler(&self) -> Result<ChannelScaler> {
        ChannelScaler::from_stats(self.scaler.clone())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        check_scaler(&self.scaler)?;
        let shapes = self
            .parts
            .iter()
            .map(|a| Network::<f64>::zeros(a).map(|n| n.param_count()))
            .collect::<Result<Vec<_>>>()?;
        let header = ParamsHeader {
            format_version: FORMAT_VERSION,
            kind: self.kind.tag().into(),
            architecture: serde_json::to_value(&self.parts)?,
            shapes,
            scaler: Some(self.scaler.clone()),
            seed: self.seed,
            dtype: f64::DTYPE.into(),
            payload_len: self.weights.len(),
            extra: self.extra.clone(),
        };
        write_params(out, &header, &self.weights)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let (h, weights) = read_params::<f64, _>(input)?;
        let parts: Vec<Vec<StageArch>> = serde_json::from_value(h.architecture)
            .map_err(|e| Error::Format(format!("bad architecture descriptor: {e}")))?;
        let scaler = h.scaler.ok_or_else(|| Error::Format("parameter file has no scaler".into()))?;
        check_scaler(&scaler)?;
        let p = Self { kind: ModelKind::from_tag(&h.kind)?, parts, weights, scaler, seed: h.seed, extra: h.extra };
        if p.kind != ModelKind::LatentReference {
            p.networks::<f64>()?;
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

/// Stores a point cloud (rows of equal dimension) in the parameter file format.
pub fn latent_reference_params(points: &[Vec<f64>], scaler: &ChannelScaler, seed: u64) -> Result<NetworkParams> {
    let dim = points.first().map_or(0, |p| p.len());
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(invalid("latent reference needs non-empty rows of equal dimension"));
    }
    Ok(NetworkParams {
        kind: ModelKind::LatentReference,
        parts: Vec::new(),
        weights: points.concat(),
        scaler: scaler.stats().clone(),
        seed,
        extra: serde_json::json!({ "rows": points.len(), "dim": dim }),
    })
}

pub fn latent_reference_points(p: &NetworkParams) -> Result<Vec<Vec<f64>>> {
    if p.kind != ModelKind::LatentReference {
        return Err(Error::Format("not a latent reference file".into()));
    }
    let dim = p.extra.get("dim").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    let rows = p.extra.get("rows").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    if dim == 0 || rows * dim != p.weights.len() {
        return Err(Error::Format("latent reference shape does not match payload".into()));
    }
    Ok(p.weights.chunks(dim).map(|c| c.to_vec()).collect())
}

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Directory of model files plus this manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub scorer: ScorerKind,
    /// Member parameter files, relative to the bundle directory.
    pub members: Vec<String>,
    pub seeds: Vec<u64>,
    /// LOF reference set file (autoencoder scorer only).
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default)]
    pub lof_k: Option<usize>,
    pub scaler: ScalerStats,
    pub window: usize,
    pub stride: usize,
    pub sample_rate: f64,
    pub filter_window: usize,
    pub quantile: f64,
    /// Calibrated on median-filtered training scores; absent until calibration.
    pub threshold: Option<f64>,
    pub calibration_count: Option<usize>,
}

impl BundleManifest {
    pub fn channels(&self) -> usize {
        self.scaler.mean.len()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let f = File::open(dir.join(MANIFEST_FILE))
            .map_err(|e| Error::Format(format!("cannot open bundle manifest in {}: {e}", dir.display())))?;
        let m: Self = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| Error::Format(format!("bad bundle manifest: {e}")))?;
        if m.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported bundle format_version {}", m.format_version)));
        }
        check_scaler(&m.scaler)?;
        if m.members.is_empty() {
            return Err(Error::Format("bundle lists no members".into()));
        }
        Ok(m)
    }

    pub fn member_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.members.iter().map(|m| dir.join(m)).collect()
    }
}
