//! Detection metrics, stream evaluation and per-group reports.

mod metrics;
mod report;

pub use metrics::{metrics, ConfusionCounts, Metric, Metrics};
pub use report::{
    evaluate_stream, majority_label, transition_mask, EvalReport, GroupReport, TruthLabel, VariantReport,
    DEFAULT_TRANSITION_MARGIN, REPORT_FORMAT_VERSION,
};
