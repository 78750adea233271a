//! Streaming runtime and the command implementations behind the CLI.

mod commands;
mod replay;
mod runtime;
mod scorer;

pub use commands::{
    align_truth, calibrate_bundle, cmd_calibrate, cmd_evaluate, cmd_generate, cmd_replay, cmd_report, cmd_train,
    evaluate_records, filtered_scores, render_report, stats_path, DatasetManifest, EvaluateOptions, GenerateOptions,
    ReplayOptions, TrainOptions, DATASET_MANIFEST, JUMP_LOG, RUN_MANIFEST, TRAIN_LOG, VAL_LOG, WALK_LOG,
};
pub use replay::{percentile, replay, Pacing, ReplayStats, DEFAULT_HZ};
pub use runtime::{Emitted, RuntimeConfig, StreamRuntime};
pub use scorer::{ModelBundle, ScoreOutput, Scorer};
