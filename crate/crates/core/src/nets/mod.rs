//! Model definitions for the four scorers and their on-disk form.

mod arch;
mod models;
mod params;

pub use arch::{AutoencoderConfig, GanConfig, TcnConfig};
pub use models::{
    autoencode, correlation_pairs, correlation_target, discriminate, noise_batch, phase_forward, Autoencoder,
    CorrelationRegressor, GanPair, PhaseRegressor, D_OUTPUT_MARGIN, HEAD_INIT_SCALE,
    init_regressor,
};
pub use params::{
    latent_reference_params, latent_reference_points, BundleManifest, ModelKind, NetworkParams, ScorerKind,
    BUNDLE_FORMAT_VERSION, MANIFEST_FILE,
};
