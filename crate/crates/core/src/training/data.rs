use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaitsim::{ChannelScaler, ScaledStream, TrainingSet};
use crate::numcore::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRef {
    pub stream: usize,
    pub start: usize,
    pub subject: u32,
}

/// Scaled training streams plus an index of every window start.
#[derive(Debug, Clone)]
pub struct WindowPool {
    streams: Vec<ScaledStream>,
    refs: Vec<WindowRef>,
    window: usize,
}

impl WindowPool {
    pub fn new(set: &TrainingSet, scaler: &ChannelScaler, window: usize, stride: usize) -> Result<Self> {
        let mut streams = Vec::new();
        let mut refs = Vec::new();
        for rec in set.recordings() {
            if rec.len() < window {
                continue;
            }
            let s = ScaledStream::new(rec, scaler)?;
            let id = streams.len();
            for i in 0..s.window_count(window, stride) {
                let start = i * stride;
                refs.push(WindowRef { stream: id, start, subject: s.labels()[start + window - 1].subject });
            }
            streams.push(s);
        }
        if refs.is_empty() {
            return Err(Error::Dataset(format!("no recording is long enough for a {window}-frame window")));
        }
        Ok(Self { streams, refs, window })
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn refs(&self) -> &[WindowRef] {
        &self.refs
    }

    pub fn subjects(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.refs.iter().map(|r| r.subject).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn tensor(&self, r: &WindowRef) -> Tensor2<f64> {
        self.streams[r.stream].window(r.start, self.window).data
    }

    /// Sine-of-phase targets at the window's final frame.
    pub fn phase_target(&self, r: &WindowRef) -> Result<[f64; 2]> {
        let l = &self.streams[r.stream].labels()[r.start + self.window - 1];
        match (l.phase_l, l.phase_r) {
            (Some(a), Some(b)) => Ok([(std::f64::consts::TAU * a).sin(), (std::f64::consts::TAU * b).sin()]),
            _ => Err(Error::Dataset("training window without a gait phase label".into())),
        }
    }

    pub fn by_subjects(&self, subjects: &[u32]) -> Vec<WindowRef> {
        let mut out = Vec::new();
        for &s in subjects {
            out.extend(self.refs.iter().filter(|r| r.subject == s));
        }
        out
    }
}

/// Shuffles and truncates a window list.
pub fn epoch_sample(refs: &[WindowRef], cap: Option<usize>, rng: &mut impl Rng) -> Vec<WindowRef> {
    let mut v = refs.to_vec();
    v.shuffle(rng);
    if let Some(c) = cap {
        v.truncate(c);
    }
    v
}

/// Evenly spaced subset of at most `cap` windows.
pub fn spread_subset(refs: &[WindowRef], cap: usize) -> Vec<WindowRef> {
    if refs.len() <= cap {
        return refs.to_vec();
    }
    (0..cap).map(|i| refs[i * refs.len() / cap]).collect()
}

/// Subjects drawn with replacement, one draw per subject.
pub fn bootstrap_subjects(subjects: &[u32], rng: &mut impl Rng) -> Vec<u32> {
    (0..subjects.len()).map(|_| subjects[rng.gen_range(0..subjects.len())]).collect()
}
