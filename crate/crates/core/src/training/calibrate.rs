use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_QUANTILE: f64 = 0.995;
/// Below this many scores the quantile is reported but flagged.
pub const MIN_CALIBRATION_SCORES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub threshold: f64,
    pub quantile: f64,
    pub count: usize,
    pub small_sample: bool,
}

/// Smallest score `s` in the set with `fraction(scores <= s) >= quantile`.
pub fn calibrate_threshold(scores: &[f64], quantile: f64) -> Result<CalibrationResult> {
    if scores.is_empty() {
        return Err(invalid("cannot calibrate a threshold from an empty score list"));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(invalid(format!("quantile must be in (0, 1], got {quantile}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("calibration score".into()));
    }
    let n = scores.len();
    let small_sample = n < MIN_CALIBRATION_SCORES;
    if small_sample {
        warn!("calibrating a {quantile} quantile from only {n} scores");
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let frac = |k: usize| k as f64 / n as f64;
    let mut k = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && frac(k - 1) >= quantile {
        k -= 1;
    }
    while k < n && frac(k) < quantile {
        k += 1;
    }
    Ok(CalibrationResult { threshold: sorted[k - 1], quantile, count: n, small_sample })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousand_fixture() {
        let s: Vec<f64> = (1..=1000).map(f64::from).collect();
        let c = calibrate_threshold(&s, 0.995).unwrap();
        assert_eq!(c.threshold, 995.0);
        assert!(!c.small_sample);
    }

    #[test]
    fn constant_scores() {
        assert_eq!(calibrate_threshold(&[2.5; 300], 0.995).unwrap().threshold, 2.5);
    }

    #[test]
    fn errors_and_flags() {
        assert!(calibrate_threshold(&[], 0.9).is_err());
        assert!(calibrate_threshold(&[1.0], 0.0).is_err());
        assert!(calibrate_threshold(&[1.0, f64::NAN], 0.5).is_err());
        assert!(calibrate_threshold(&[1.0, 2.0], 0.5).unwrap().small_sample);
        assert_eq!(calibrate_threshold(&[3.0, 1.0, 2.0], 1.0).unwrap().threshold, 3.0);
    }
}
