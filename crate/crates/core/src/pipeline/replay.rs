use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::runtime::{RuntimeConfig, StreamRuntime};
use super::scorer::ModelBundle;
use crate::error::{invalid, Error, Result};
use crate::gaitsim::{Recording, SensorFrame};
use crate::uncertainty::DecisionRecord;

pub const DEFAULT_HZ: f64 = 105.0;
const QUEUE_FRAMES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    MaxSpeed,
    /// Decisions emitted at this rate.
    Hz(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplayStats {
    pub frames: usize,
    pub windows: usize,
    pub segments: usize,
    pub elapsed_seconds: f64,
    /// Windows per wall-clock second.
    pub throughput: f64,
    pub latency_p50_ms: f64,
    pub latency_p99_ms: f64,
    pub latency_max_ms: f64,
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

enum Msg {
    Frame(usize, SensorFrame),
}

/// Streams every recording through a fresh runtime. A reader thread feeds
/// frames through a bounded queue; decisions keep input order.
pub fn replay(
    recordings: &[Recording],
    bundle: &ModelBundle,
    cfg: &RuntimeConfig,
    pacing: Pacing,
) -> Result<(Vec<DecisionRecord>, ReplayStats)> {
    if let Pacing::Hz(hz) = pacing {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(invalid(format!("pacing rate must be > 0, got {hz}")));
        }
    }
    // fail fast on configuration errors before starting the reader
    StreamRuntime::new(bundle, cfg.clone(), 0)?;
    let (tx, rx) = sync_channel::<Msg>(QUEUE_FRAMES);
    let mut records = Vec::new();
    let mut latencies = Vec::new();
    let mut frames = 0usize;
    let start = Instant::now();
    let result: Result<()> = thread::scope(|s| {
        s.spawn(move || {
            for (seg, rec) in recordings.iter().enumerate() {
                for f in &rec.frames {
                    if tx.send(Msg::Frame(seg, *f)).is_err() {
                        return;
                    }
                }
            }
        });
        let mut current: Option<StreamRuntime> = None;
        for Msg::Frame(seg, frame) in rx.iter() {
            if current.as_ref().is_none_or(|r| r.segment() != seg) {
                current = Some(StreamRuntime::new(bundle, cfg.clone(), seg)?);
            }
            frames += 1;
            if let Some(e) = current.as_mut().expect("runtime").push(&frame)? {
                latencies.push(e.latency);
                records.push(e.record);
                if let Pacing::Hz(hz) = pacing {
                    let due = start + Duration::from_secs_f64(records.len() as f64 / hz);
                    let now = Instant::now();
                    if due > now {
                        thread::sleep(due - now);
                    }
                }
            }
        }
        Ok(())
    });
    // dropping the receiver on error unblocks the reader
    result?;
    let elapsed = start.elapsed().as_secs_f64();
    let stats = ReplayStats {
        frames,
        windows: records.len(),
        segments: recordings.len(),
        elapsed_seconds: elapsed,
        throughput: if elapsed > 0.0 { records.len() as f64 / elapsed } else { f64::INFINITY },
        latency_p50_ms: percentile(&latencies, 50.0) * 1e3,
        latency_p99_ms: percentile(&latencies, 99.0) * 1e3,
        latency_max_ms: latencies.iter().copied().fold(0.0, f64::max) * 1e3,
    };
    if records.is_empty() && frames > 0 {
        return Err(Error::Stream(format!("no recording reaches the {}-frame window", cfg.window)));
    }
    Ok((records, stats))
}
