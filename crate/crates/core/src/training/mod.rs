//! Training protocols for the four scorers and threshold calibration.

mod calibrate;
mod config;
mod data;
mod manifest;
mod supervised;
mod unsupervised;

pub use calibrate::{calibrate_threshold, CalibrationResult, DEFAULT_QUANTILE, MIN_CALIBRATION_SCORES};
pub use config::{member_seeds, SubjectPolicy, TrainConfig};
pub use data::{bootstrap_subjects, epoch_sample, spread_subset, WindowPool, WindowRef};
pub use manifest::{RunManifest, RUN_MANIFEST_VERSION};
pub use supervised::{
    evaluate_loss, find_early_stop_epochs, mean_epoch, train_ensemble, train_ensemble_on, EarlyStopReport,
    EnsembleMember, EnsembleResult, EnsembleTarget, Rotation,
};
pub use unsupervised::{
    train_autoencoder, train_autoencoder_on, train_gan, train_gan_on, AutoencoderResult, GanResult,
    MODE_COLLAPSE_VARIANCE,
};
