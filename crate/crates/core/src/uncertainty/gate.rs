use serde::{Deserialize, Serialize};

/// Which side of the threshold an exact tie falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    InDistribution,
    OutOfDistribution,
}

/// Controller responsible for the commanded torque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSource {
    Phase,
    ZeroImpedance,
    /// Torque decaying toward zero after an out-of-distribution onset
    /// (only with a ramp configured).
    RampDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub ood: bool,
    /// Commanded torque (N m), left then right.
    pub torque: [f64; 2],
    pub source: ControlSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub threshold: f64,
    pub tie: TieRule,
    /// Linear torque ramp duration in seconds; `None` switches instantly.
    pub ramp_seconds: Option<f64>,
    /// Time between consecutive decisions in seconds.
    pub decision_period: f64,
}

impl GateConfig {
    pub fn new(threshold: f64, decision_period: f64) -> Self {
        Self { threshold, tie: TieRule::InDistribution, ramp_seconds: None, decision_period }
    }

    pub fn is_ood(&self, filtered: f64) -> bool {
        // a NaN score cannot be trusted and is treated as unfamiliar
        if filtered.is_nan() {
            return true;
        }
        match self.tie {
            TieRule::InDistribution => filtered > self.threshold,
            TieRule::OutOfDistribution => filtered >= self.threshold,
        }
    }
}

/// Stateless comparator: above the threshold means zero impedance, a tie is
/// in-distribution.
pub fn gate(filtered: f64, threshold: f64, phase_torque: [f64; 2]) -> GateDecision {
    if GateConfig::new(threshold, 0.0).is_ood(filtered) {
        GateDecision { ood: true, torque: [0.0, 0.0], source: ControlSource::ZeroImpedance }
    } else {
        GateDecision { ood: false, torque: phase_torque, source: ControlSource::Phase }
    }
}

/// Per-stream gate with an optional linear torque ramp.
///
/// Without a ramp an out-of-distribution decision always carries zero
/// torque. With a ramp, the last in-distribution torque is held and scaled
/// down linearly, reaching zero within the ramp time; re-engagement scales
/// the phase torque up over the same time.
#[derive(Debug, Clone)]
pub struct Gate {
    config: GateConfig,
    // engagement in ramp steps: 0 is disengaged, `ramp_steps` is full torque
    level: u32,
    held: [f64; 2],
    held_level: u32,
}

impl Gate {
    pub fn new(config: GateConfig) -> Self {
        let mut g = Self { config, level: 0, held: [0.0; 2], held_level: 0 };
        g.reset();
        g
    }

    pub fn config(&self) -> &GateConfig {
        &self.config
    }

    pub fn reset(&mut self) {
        self.level = self.ramp_steps();
        self.held = [0.0; 2];
        self.held_level = self.level;
    }

    /// Decisions needed to ramp fully; zero is reached no later than the ramp time.
    fn ramp_steps(&self) -> u32 {
        match self.config.ramp_seconds {
            Some(r) if r > 0.0 && self.config.decision_period > 0.0 => {
                ((r / self.config.decision_period + 1e-9).floor() as u32).max(1)
            }
            _ => 1,
        }
    }

    pub fn decide(&mut self, filtered: f64, phase_torque: [f64; 2]) -> GateDecision {
        let ood = self.config.is_ood(filtered);
        let Some(_) = self.config.ramp_seconds.filter(|r| *r > 0.0) else {
            return gate_plain(ood, phase_torque);
        };
        let full = self.ramp_steps();
        if ood {
            self.level = self.level.saturating_sub(1);
            let frac = if self.held_level > 0 { self.level as f64 / self.held_level as f64 } else { 0.0 };
            let torque = [self.held[0] * frac, self.held[1] * frac];
            let source = if frac > 0.0 && (torque[0] != 0.0 || torque[1] != 0.0) {
                ControlSource::RampDown
            } else {
                ControlSource::ZeroImpedance
            };
            GateDecision { ood, torque, source }
        } else {
            self.level = (self.level + 1).min(full);
            let f = self.level as f64 / full as f64;
            let torque = [phase_torque[0] * f, phase_torque[1] * f];
            self.held = torque;
            self.held_level = self.level;
            GateDecision { ood, torque, source: ControlSource::Phase }
        }
    }
}

fn gate_plain(ood: bool, phase_torque: [f64; 2]) -> GateDecision {
    if ood {
        GateDecision { ood, torque: [0.0, 0.0], source: ControlSource::ZeroImpedance }
    } else {
        GateDecision { ood, torque: phase_torque, source: ControlSource::Phase }
    }
}
