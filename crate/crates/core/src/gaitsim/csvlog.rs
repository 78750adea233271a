//! Sensor log CSV: optional `# format_version: 1` comment line, a header
//! row (`timestamp`, the 16 channel names, `subject`, `task`, `is_ood`,
//! `phase_l`, `phase_r`), then one row per frame. Undefined phases are
//! empty fields. A timestamp that does not increase starts a new
//! recording.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FrameLabel, Recording, SensorFrame, Task, CHANNELS, CHANNEL_NAMES};
use crate::error::{Error, Result};

pub const LOG_FORMAT_VERSION: u32 = 1;

fn header() -> Vec<&'static str> {
    let mut h = vec!["timestamp"];
    h.extend(CHANNEL_NAMES);
    h.extend(["subject", "task", "is_ood", "phase_l", "phase_r"]);
    h
}

pub fn write_log<W: Write>(out: W, recordings: &[Recording]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# format_version: {LOG_FORMAT_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    let mut row: Vec<String> = Vec::with_capacity(CHANNELS + 6);
    for rec in recordings {
        for (f, l) in rec.frames.iter().zip(&rec.labels) {
            row.clear();
            row.push(f.timestamp.to_string());
            row.extend(f.channels.iter().map(|v| v.to_string()));
            row.push(l.subject.to_string());
            row.push(l.task.name().to_string());
            row.push(u8::from(l.is_ood).to_string());
            row.push(l.phase_l.map(|p| p.to_string()).unwrap_or_default());
            row.push(l.phase_r.map(|p| p.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_log_file(path: &Path, recordings: &[Recording]) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_log(f, recordings)
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Format(format!("line {line}: bad {what} '{field}'")))
}

pub fn read_log<R: Read>(input: R) -> Result<Vec<Recording>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let expected = header();
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Format(format!("unexpected log header: {}", got.join(","))));
    }
    let mut out: Vec<Recording> = Vec::new();
    let mut current = Recording::default();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let timestamp = parse_f64(&rec[0], "timestamp", line)?;
        let mut channels = [0.0; CHANNELS];
        for (c, v) in channels.iter_mut().enumerate() {
            *v = parse_f64(&rec[1 + c], CHANNEL_NAMES[c], line)?;
        }
        if !timestamp.is_finite() || channels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("line {line}: non-finite value")));
        }
        let subject = rec[CHANNELS + 1]
            .trim()
            .parse::<u32>()
            .map_err(|_| Error::Format(format!("line {line}: bad subject")))?;
        let task = Task::parse(rec[CHANNELS + 2].trim()).map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        let is_ood = match rec[CHANNELS + 3].trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(Error::Format(format!("line {line}: bad is_ood '{other}'"))),
        };
        let phase = |i: usize| -> Result<Option<f64>> {
            let f = rec[i].trim();
            if f.is_empty() {
                Ok(None)
            } else {
                parse_f64(f, "phase", line).map(Some)
            }
        };
        let phase_l = phase(CHANNELS + 4)?;
        let phase_r = phase(CHANNELS + 5)?;
        if current.frames.last().is_some_and(|f| timestamp <= f.timestamp) {
            out.push(std::mem::take(&mut current));
        }
        current.frames.push(SensorFrame { timestamp, channels });
        current.labels.push(FrameLabel { subject, task, is_ood, phase_l, phase_r });
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

pub fn read_log_file(path: &Path) -> Result<Vec<Recording>> {
    read_log(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::super::{generate_ood, generate_sequence, SubjectProfile, TaskSpec};
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let p = SubjectProfile::sample(2, 3);
        let a = generate_sequence(&p, &[(TaskSpec::walk(1.0), 2.0), (TaskSpec::new(Task::Jump), 2.0)], 1).unwrap();
        let b = generate_ood(&p, Task::Sit, 1.5, 2).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_log(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_log("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }
}
