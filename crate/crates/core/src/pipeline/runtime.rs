use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::scorer::ModelBundle;
use crate::controller::{torque_from_phase, PhaseTracker, TorqueSpline, TrackerConfig};
use crate::error::{invalid, Error, Result};
use crate::gaitsim::{SensorFrame, CHANNELS};
use crate::numcore::Tensor2;
use crate::uncertainty::{DecisionRecord, Gate, GateConfig, MedianFilterState, TieRule, RECORD_FORMAT_VERSION};

/// Streaming settings; window geometry must match the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub window: usize,
    pub stride: usize,
    pub sample_rate: f64,
    pub filter_window: usize,
    pub threshold: f64,
    pub tie: TieRule,
    pub ramp_seconds: Option<f64>,
    pub peak_torque: f64,
}

impl RuntimeConfig {
    /// Settings stored in the bundle; fails if the bundle is uncalibrated.
    pub fn from_bundle(bundle: &ModelBundle) -> Result<Self> {
        let m = &bundle.manifest;
        let threshold = m.threshold.ok_or_else(|| invalid("bundle has no calibrated threshold; run calibrate"))?;
        Ok(Self {
            window: m.window,
            stride: m.stride,
            sample_rate: m.sample_rate,
            filter_window: m.filter_window,
            threshold,
            tie: TieRule::InDistribution,
            ramp_seconds: None,
            peak_torque: crate::controller::DEFAULT_PEAK_TORQUE,
        })
    }

    pub fn decision_period(&self) -> f64 {
        self.stride as f64 / self.sample_rate
    }

    fn validate(&self, bundle: &ModelBundle) -> Result<()> {
        if self.window != bundle.manifest.window {
            return Err(invalid(format!(
                "window {} does not match the bundle's {}",
                self.window, bundle.manifest.window
            )));
        }
        if self.stride == 0 || self.filter_window == 0 || !(self.sample_rate > 0.0) {
            return Err(invalid("stride, filter window and sample rate must be positive"));
        }
        if !self.threshold.is_finite() {
            return Err(invalid("threshold must be finite"));
        }
        if bundle.scaler.channels() != CHANNELS {
            return Err(Error::Format(format!("bundle scaler has {} channels, logs have {CHANNELS}", bundle.scaler.channels())));
        }
        Ok(())
    }
}

/// Per-segment streaming state: frame buffer, filter, gate and controller.
pub struct StreamRuntime<'a> {
    bundle: &'a ModelBundle,
    cfg: RuntimeConfig,
    segment: usize,
    buffer: VecDeque<[f64; CHANNELS]>,
    frames: usize,
    windows: usize,
    last_ts: Option<f64>,
    filter: MedianFilterState,
    gate: Gate,
    tracker: PhaseTracker,
    spline: TorqueSpline,
}

/// A decision plus the compute time it took (seconds).
pub struct Emitted {
    pub record: DecisionRecord,
    pub latency: f64,
}

impl<'a> StreamRuntime<'a> {
    pub fn new(bundle: &'a ModelBundle, cfg: RuntimeConfig, segment: usize) -> Result<Self> {
        cfg.validate(bundle)?;
        let mut gc = GateConfig::new(cfg.threshold, cfg.decision_period());
        gc.tie = cfg.tie;
        gc.ramp_seconds = cfg.ramp_seconds;
        Ok(Self {
            bundle,
            segment,
            buffer: VecDeque::with_capacity(cfg.window),
            frames: 0,
            windows: 0,
            last_ts: None,
            filter: MedianFilterState::new(cfg.filter_window),
            gate: Gate::new(gc),
            tracker: PhaseTracker::new(TrackerConfig::for_period(cfg.decision_period()))?,
            spline: TorqueSpline::default_with_peak(cfg.peak_torque)?,
            cfg,
        })
    }

    /// Feeds one frame; returns a decision each time a stride completes.
    pub fn push(&mut self, frame: &SensorFrame) -> Result<Option<Emitted>> {
        if let Some(prev) = self.last_ts {
            let dt = frame.timestamp - prev;
            if !(dt > 0.0) || dt > 1.5 / self.cfg.sample_rate {
                return Err(Error::Stream(format!(
                    "frame gap in segment {} at t={:.4}s (step {dt:.4}s)",
                    self.segment, frame.timestamp
                )));
            }
        }
        self.last_ts = Some(frame.timestamp);
        let t0 = Instant::now();
        let mut scaled = [0.0; CHANNELS];
        for (c, v) in scaled.iter_mut().enumerate() {
            *v = self.bundle.scaler.scale(c, frame.channels[c]);
        }
        if self.buffer.len() == self.cfg.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(scaled);
        self.frames += 1;
        if self.frames < self.cfg.window || !(self.frames - self.cfg.window).is_multiple_of(self.cfg.stride) {
            return Ok(None);
        }
        let x = Tensor2::from_fn(CHANNELS, self.cfg.window, |c, s| self.buffer[s][c]);
        let out = self.bundle.scorer.score(&x)?;
        let filtered = self.filter.push(out.raw);
        let phase = self.tracker.update(out.sines.unwrap_or([f64::NAN; 2])).phase;
        let torque = [torque_from_phase(&self.spline, phase[0])?, torque_from_phase(&self.spline, phase[1])?];
        let d = self.gate.decide(filtered, torque);
        let record = DecisionRecord {
            format_version: RECORD_FORMAT_VERSION,
            segment: self.segment,
            window_index: self.windows,
            timestamp: frame.timestamp,
            raw: out.raw,
            filtered,
            threshold: self.cfg.threshold,
            ood: d.ood,
            torque_l: d.torque[0],
            torque_r: d.torque[1],
            phase_l: phase[0],
            phase_r: phase[1],
            source: d.source,
        };
        self.windows += 1;
        Ok(Some(Emitted { record, latency: t0.elapsed().as_secs_f64() }))
    }
}

impl StreamRuntime<'_> {
    pub fn segment(&self) -> usize {
        self.segment
    }
}
