//! Per-window decision records, written as JSON lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::gate::ControlSource;
use crate::error::{Error, Result};

pub const RECORD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub format_version: u32,
    /// Continuous stream within the replayed log.
    pub segment: usize,
    pub window_index: usize,
    /// Stream time of the window's final frame (s).
    pub timestamp: f64,
    pub raw: f64,
    pub filtered: f64,
    pub threshold: f64,
    pub ood: bool,
    pub torque_l: f64,
    pub torque_r: f64,
    pub phase_l: f64,
    pub phase_r: f64,
    pub source: ControlSource,
}

/// Raw and filtered score of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyScore {
    pub raw: f64,
    pub filtered: f64,
    pub window_index: usize,
    /// Wall-clock seconds since the start of the run.
    pub wall_time: f64,
}

pub fn write_records<W: Write>(mut out: W, records: &[DecisionRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<DecisionRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: DecisionRecord =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("decision line {}: {e}", i + 1)))?;
        if r.format_version != RECORD_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported decision format_version {}", r.format_version)));
        }
        out.push(r);
    }
    Ok(out)
}

/// Records that claim out-of-distribution while commanding torque.
pub fn unsafe_records(records: &[DecisionRecord]) -> Vec<&DecisionRecord> {
    records.iter().filter(|r| r.ood && (r.torque_l != 0.0 || r.torque_r != 0.0)).collect()
}
