use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_PEAK_TORQUE: f64 = 20.0;

/// Phase-to-torque curve: piecewise cubic Hermite with Fritsch–Carlson
/// slopes, so no segment overshoots its endpoint torques.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineKnots", into = "SplineKnots")]
pub struct TorqueSpline {
    phases: Vec<f64>,
    torques: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineKnots {
    pub phases: Vec<f64>,
    pub torques: Vec<f64>,
}

impl TryFrom<SplineKnots> for TorqueSpline {
    type Error = Error;
    fn try_from(k: SplineKnots) -> Result<Self> {
        TorqueSpline::new(k.phases, k.torques)
    }
}

impl From<TorqueSpline> for SplineKnots {
    fn from(s: TorqueSpline) -> Self {
        SplineKnots { phases: s.phases, torques: s.torques }
    }
}

impl TorqueSpline {
    pub fn new(phases: Vec<f64>, torques: Vec<f64>) -> Result<Self> {
        if phases.len() != torques.len() || phases.len() < 2 {
            return Err(invalid("spline needs matching phase/torque lists with at least 2 knots"));
        }
        if phases.iter().chain(&torques).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spline knot".into()));
        }
        if phases[0] != 0.0 || *phases.last().unwrap() != 1.0 {
            return Err(invalid("spline knots must start at phase 0 and end at phase 1"));
        }
        if phases.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("spline knot phases must be strictly increasing"));
        }
        if torques.iter().any(|&t| t < 0.0) {
            return Err(invalid("spline knot torques must be >= 0"));
        }
        if torques[0] != 0.0 || *torques.last().unwrap() != 0.0 {
            return Err(invalid("spline torque must be 0 at phase 0 and 1"));
        }
        let slopes = pchip_slopes(&phases, &torques);
        Ok(Self { phases, torques, slopes })
    }

    /// Push-off shaped default scaled by `peak` N·m.
    pub fn default_with_peak(peak: f64) -> Result<Self> {
        Self::new(vec![0.0, 0.4, 0.55, 0.7, 1.0], vec![0.0, 0.3 * peak, peak, 0.2 * peak, 0.0])
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn max_torque(&self) -> f64 {
        self.torques.iter().copied().fold(0.0, f64::max)
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.phases.len();
        let i = match self.phases.partition_point(|&p| p <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.phases[i], self.phases[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.torques[i], self.torques[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1
    }
}

impl Default for TorqueSpline {
    fn default() -> Self {
        Self::default_with_peak(DEFAULT_PEAK_TORQUE).expect("default spline is valid")
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m[0] = end_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

// one-sided three-point estimate, limited to preserve shape
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Torque at `phase`; values outside [0, 1) wrap around the gait cycle.
pub fn torque_from_phase(spline: &TorqueSpline, phase: f64) -> Result<f64> {
    if !phase.is_finite() {
        return Err(invalid(format!("phase must be finite, got {phase}")));
    }
    let p = phase.rem_euclid(1.0);
    Ok(spline.eval(p).clamp(0.0, spline.max_torque()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_at_knots() {
        let s = TorqueSpline::default_with_peak(30.0).unwrap();
        for (&p, &t) in s.phases().iter().zip(s.torques()) {
            if p < 1.0 {
                assert_eq!(torque_from_phase(&s, p).unwrap(), t);
            }
        }
        assert_eq!(torque_from_phase(&s, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sweep_stays_in_envelope() {
        let s = TorqueSpline::default();
        for i in 0..=10_000 {
            let p = i as f64 / 10_000.0;
            let t = s.eval(p);
            assert!((0.0..=DEFAULT_PEAK_TORQUE).contains(&t), "phase {p}: {t}");
        }
    }

    #[test]
    fn rejects_nan_and_bad_knots() {
        let s = TorqueSpline::default();
        assert!(torque_from_phase(&s, f64::NAN).is_err());
        assert!(TorqueSpline::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0, 1.0, 0.0]).is_err());
        assert!(TorqueSpline::new(vec![0.0, 0.5, 1.0], vec![0.0, -1.0, 0.0]).is_err());
        assert!(TorqueSpline::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = TorqueSpline::default();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<TorqueSpline>(&j).unwrap(), s);
        assert!(serde_json::from_str::<TorqueSpline>(r#"{"phases":[0,1],"torques":[0,-1]}"#).is_err());
    }
}
