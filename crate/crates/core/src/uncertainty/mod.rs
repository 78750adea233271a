//! Uncertainty scorers, the causal median filter and the threshold gate.

mod gate;
mod median;
mod record;
mod scores;

pub use gate::{gate, ControlSource, Gate, GateConfig, GateDecision, TieRule};
pub use median::{median_filter_push, MedianFilterState, DEFAULT_FILTER_WINDOW};
pub use record::{read_records, unsafe_records, write_records, DecisionRecord, UncertaintyScore, RECORD_FORMAT_VERSION};
pub use scores::{ensemble_score, gan_score, latent_score};
