use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Per-leg gait phase in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub phase: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Expected phase advance per decision (cycles).
    pub nominal_advance: f64,
    /// Fraction of the phase error removed per decision.
    pub gain: f64,
    /// Largest correction applied in one decision (cycles).
    pub max_correction: f64,
}

impl TrackerConfig {
    /// Typical walking cadence at the given decision period.
    pub fn for_period(decision_period: f64) -> Self {
        Self { nominal_advance: 0.9 * decision_period, gain: 0.7, max_correction: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nominal_advance.is_finite()
            && (0.0..1.0).contains(&self.gain)
            && self.gain > 0.0
            && self.max_correction.is_finite()
            && self.max_correction >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid tracker config {self:?}")))
        }
    }
}

/// Signed circular difference a - b in [-0.5, 0.5).
pub fn wrap_diff(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}

fn track_leg(prev: f64, sine: f64, cfg: &TrackerConfig) -> f64 {
    let predicted = (prev + cfg.nominal_advance).rem_euclid(1.0);
    if !sine.is_finite() {
        return predicted;
    }
    let a = sine.clamp(-1.0, 1.0).asin() / TAU;
    let candidates = [a.rem_euclid(1.0), (0.5 - a).rem_euclid(1.0)];
    let err = candidates
        .iter()
        .map(|&c| wrap_diff(c, predicted))
        .min_by(|x, y| x.abs().total_cmp(&y.abs()))
        .unwrap();
    let corr = (cfg.gain * err).clamp(-cfg.max_correction, cfg.max_correction);
    (predicted + corr).rem_euclid(1.0)
}

/// Advances each leg by the nominal step and pulls it toward the
/// sine-consistent phase closest to that prediction.
pub fn track_phase(prev: &PhaseEstimate, sines: [f64; 2], cfg: &TrackerConfig) -> PhaseEstimate {
    PhaseEstimate { phase: [track_leg(prev.phase[0], sines[0], cfg), track_leg(prev.phase[1], sines[1], cfg)] }
}

/// Stateful wrapper used by the streaming runtime.
#[derive(Debug, Clone)]
pub struct PhaseTracker {
    config: TrackerConfig,
    state: PhaseEstimate,
}

impl PhaseTracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, state: PhaseEstimate::default() })
    }

    pub fn update(&mut self, sines: [f64; 2]) -> PhaseEstimate {
        self.state = track_phase(&self.state, sines, &self.config);
        self.state
    }

    pub fn current(&self) -> PhaseEstimate {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = PhaseEstimate::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_sine_is_pure_advance() {
        let cfg = TrackerConfig { nominal_advance: 0.05, gain: 0.7, max_correction: 0.05 };
        let prev = PhaseEstimate { phase: [0.1, 0.6] };
        let s = [(TAU * 0.15).sin(), (TAU * 0.65).sin()];
        let next = track_phase(&prev, s, &cfg);
        assert!((next.phase[0] - 0.15).abs() < 1e-12);
        assert!((next.phase[1] - 0.65).abs() < 1e-12);
    }

    #[test]
    fn contradictory_sine_saturates() {
        let cfg = TrackerConfig { nominal_advance: 0.05, gain: 0.7, max_correction: 0.02 };
        // predicted 0.25 (sine 1), observation -1 -> candidates at 0.75 only
        let prev = PhaseEstimate { phase: [0.2, 0.2] };
        let next = track_phase(&prev, [-1.0, -1.0], &cfg);
        let step = wrap_diff(next.phase[0], 0.2);
        assert!((step.abs() - 0.05).abs() <= 0.02 + 1e-12);
        assert!(((step - 0.05).abs() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn locks_onto_clean_sinusoid_with_cadence_mismatch() {
        let dt = 10.0 / 175.0;
        let cfg = TrackerConfig::for_period(dt);
        let mut tr = PhaseTracker::new(cfg).unwrap();
        let true_adv = 1.0 * dt;
        let mut sq = 0.0;
        let mut n = 0;
        for k in 0..400 {
            let truth = (0.37 + k as f64 * true_adv).rem_euclid(1.0);
            let s = (TAU * truth).sin();
            let est = tr.update([s, s]);
            if k >= 100 {
                let e = wrap_diff(est.phase[0], truth);
                sq += e * e;
                n += 1;
            }
        }
        let rmse = (sq / n as f64).sqrt();
        assert!(rmse < 0.05, "rmse {rmse}");
    }
}
