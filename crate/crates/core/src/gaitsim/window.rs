use super::{FrameLabel, Recording, Task, CHANNELS};
use crate::error::{invalid, shape, Error, Result};
use crate::numcore::{ScalerStats, Tensor2};

/// Per-channel z-scoring fit on training frames only.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScaler {
    stats: ScalerStats,
}

impl ChannelScaler {
    pub const STD_FLOOR: f64 = 1e-8;

    pub fn fit<'a>(recordings: impl IntoIterator<Item = &'a Recording>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = [0.0f64; CHANNELS];
        let recs: Vec<&Recording> = recordings.into_iter().collect();
        for r in &recs {
            for f in &r.frames {
                for (s, v) in sum.iter_mut().zip(&f.channels) {
                    *s += v;
                }
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Dataset("cannot fit a scaler on zero frames".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut sq = [0.0f64; CHANNELS];
        for r in &recs {
            for f in &r.frames {
                for c in 0..CHANNELS {
                    let d = f.channels[c] - mean[c];
                    sq[c] += d * d;
                }
            }
        }
        let std = sq.iter().map(|s| (s / n as f64).sqrt().max(Self::STD_FLOOR)).collect();
        Ok(Self { stats: ScalerStats { mean, std } })
    }

    pub fn from_stats(stats: ScalerStats) -> Result<Self> {
        if stats.mean.len() != stats.std.len() || stats.mean.is_empty() {
            return Err(shape("scaler mean/std lengths differ"));
        }
        if stats.std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || stats.mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid("scaler std must be finite and > 0"));
        }
        Ok(Self { stats })
    }

    pub fn stats(&self) -> &ScalerStats {
        &self.stats
    }

    pub fn channels(&self) -> usize {
        self.stats.mean.len()
    }

    #[inline]
    pub fn scale(&self, channel: usize, value: f64) -> f64 {
        (value - self.stats.mean[channel]) / self.stats.std[channel]
    }
}

/// Labels of a window, taken from its final frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowLabel {
    pub subject: u32,
    pub task: Task,
    pub is_ood: bool,
    pub phase_l: Option<f64>,
    pub phase_r: Option<f64>,
    pub timestamp: f64,
}

/// Scaled `channels x window` slice of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorWindow {
    pub data: Tensor2<f64>,
    /// Index of the first frame in the source stream.
    pub start: usize,
    pub label: WindowLabel,
}

impl SensorWindow {
    /// Index of the final frame in the source stream.
    pub fn end(&self) -> usize {
        self.start + self.data.length() - 1
    }
}

pub fn window_count(frames: usize, window: usize, stride: usize) -> usize {
    if window == 0 || stride == 0 || frames < window {
        0
    } else {
        (frames - window) / stride + 1
    }
}

/// A recording after scaling, stored channel-major so windows are cheap
/// slices.
#[derive(Debug, Clone)]
pub struct ScaledStream {
    data: Tensor2<f64>,
    labels: Vec<FrameLabel>,
    timestamps: Vec<f64>,
}

impl ScaledStream {
    pub fn new(rec: &Recording, scaler: &ChannelScaler) -> Result<Self> {
        if scaler.channels() != CHANNELS {
            return Err(shape(format!("scaler has {} channels, stream has {}", scaler.channels(), CHANNELS)));
        }
        let n = rec.frames.len();
        let data = Tensor2::from_fn(CHANNELS, n, |c, s| scaler.scale(c, rec.frames[s].channels[c]));
        data.ensure_finite("scaled stream")?;
        Ok(Self { data, labels: rec.labels.clone(), timestamps: rec.frames.iter().map(|f| f.timestamp).collect() })
    }

    pub fn len(&self) -> usize {
        self.data.length()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[FrameLabel] {
        &self.labels
    }

    pub fn window_count(&self, window: usize, stride: usize) -> usize {
        window_count(self.len(), window, stride)
    }

    pub fn label_at(&self, frame: usize) -> WindowLabel {
        let l = &self.labels[frame];
        WindowLabel {
            subject: l.subject,
            task: l.task,
            is_ood: l.is_ood,
            phase_l: l.phase_l,
            phase_r: l.phase_r,
            timestamp: self.timestamps[frame],
        }
    }

    pub fn window(&self, start: usize, window: usize) -> SensorWindow {
        let data = Tensor2::from_fn(CHANNELS, window, |c, s| self.data.get(c, start + s));
        SensorWindow { data, start, label: self.label_at(start + window - 1) }
    }

    pub fn windows(&self, window: usize, stride: usize) -> impl Iterator<Item = SensorWindow> + '_ {
        (0..self.window_count(window, stride)).map(move |i| self.window(i * stride, window))
    }
}

/// Cuts a recording into overlapping scaled windows starting at
/// `0, stride, 2*stride, ...`.
pub fn window_stream(rec: &Recording, scaler: &ChannelScaler, window: usize, stride: usize) -> Result<Vec<SensorWindow>> {
    if window == 0 || stride == 0 {
        return Err(invalid("window and stride must be >= 1"));
    }
    if rec.len() < window {
        return Err(Error::Stream(format!("stream has {} frames, a window needs {}", rec.len(), window)));
    }
    let stream = ScaledStream::new(rec, scaler)?;
    Ok(stream.windows(window, stride).collect())
}
