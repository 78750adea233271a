use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{metrics, ConfusionCounts, Metric, Metrics};
use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TRANSITION_MARGIN: f64 = 0.5;

/// Ground truth of one decision window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLabel {
    /// Continuous stream id; flips are never detected across streams.
    pub segment: usize,
    pub timestamp: f64,
    /// Task group name (e.g. "walk", "stairs").
    pub group: String,
    pub is_ood: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub windows: u64,
    pub counts: ConfusionCounts,
    pub accuracy: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub transitions_included: bool,
    pub excluded_group: Option<String>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub groups: BTreeMap<String, GroupReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub transition_margin: f64,
    pub variants: Vec<VariantReport>,
}

impl EvalReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }

    /// The report over every window.
    pub fn overall(&self) -> &VariantReport {
        &self.variants[0]
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One row per variant and group; the group `ALL` row carries the full metrics.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "format_version", "variant", "group", "windows", "tp", "fp", "tn", "fn", "accuracy", "precision", "recall",
            "specificity", "f1", "j",
        ])?;
        let ver = self.format_version.to_string();
        for v in &self.variants {
            let c = &v.counts;
            let m = &v.metrics;
            let row = [
                ver.clone(),
                v.name.clone(),
                "ALL".into(),
                c.total().to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.specificity.to_string(),
                m.f1.to_string(),
                m.j.to_string(),
            ];
            w.write_record(&row)?;
            for (name, g) in &v.groups {
                let gm = metrics(&g.counts);
                let c = &g.counts;
                w.write_record(&[
                    ver.clone(),
                    v.name.clone(),
                    name.clone(),
                    g.windows.to_string(),
                    c.tp.to_string(),
                    c.fp.to_string(),
                    c.tn.to_string(),
                    c.fn_.to_string(),
                    g.accuracy.to_string(),
                    gm.precision.to_string(),
                    gm.recall.to_string(),
                    gm.specificity.to_string(),
                    gm.f1.to_string(),
                    gm.j.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Marks windows within `margin` seconds of any ID/OOD flip in the same segment.
/// The flip time is the midpoint between the two windows that disagree.
pub fn transition_mask(labels: &[TruthLabel], margin: f64) -> Vec<bool> {
    let mut flips: Vec<(usize, f64)> = Vec::new();
    for pair in labels.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.segment == b.segment && a.is_ood != b.is_ood {
            flips.push((a.segment, 0.5 * (a.timestamp + b.timestamp)));
        }
    }
    labels
        .iter()
        .map(|l| flips.iter().any(|&(seg, t)| seg == l.segment && (l.timestamp - t).abs() <= margin))
        .collect()
}

fn accumulate<'a>(
    name: String,
    transitions_included: bool,
    excluded_group: Option<String>,
    rows: impl Iterator<Item = (&'a TruthLabel, bool)>,
) -> VariantReport {
    let mut counts = ConfusionCounts::default();
    let mut groups: BTreeMap<String, GroupReport> = BTreeMap::new();
    for (truth, pred) in rows {
        counts.record(truth.is_ood, pred);
        let g = groups.entry(truth.group.clone()).or_insert_with(|| GroupReport {
            windows: 0,
            counts: ConfusionCounts::default(),
            accuracy: Metric(None),
        });
        g.windows += 1;
        g.counts.record(truth.is_ood, pred);
    }
    for g in groups.values_mut() {
        g.accuracy = metrics(&g.counts).accuracy;
    }
    VariantReport { name, transitions_included, excluded_group, metrics: metrics(&counts), counts, groups }
}

/// Compares per-window decisions with ground truth and builds every report variant:
/// `all`, `no_transitions`, and for each group `without_<group>` with and without transitions.
pub fn evaluate_stream(predicted_ood: &[bool], truth: &[TruthLabel], margin: f64) -> Result<EvalReport> {
    if predicted_ood.len() != truth.len() {
        return Err(Error::Stream(format!(
            "{} decisions but {} ground-truth labels",
            predicted_ood.len(),
            truth.len()
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("transition margin must be >= 0, got {margin}")));
    }
    let mask = transition_mask(truth, margin);
    let rows = || truth.iter().zip(predicted_ood.iter().copied());
    let steady = || rows().zip(mask.iter()).filter(|(_, &m)| !m).map(|(r, _)| r);

    let mut variants = vec![
        accumulate("all".into(), true, None, rows()),
        accumulate("no_transitions".into(), false, None, steady()),
    ];
    let names: std::collections::BTreeSet<&str> = truth.iter().map(|t| t.group.as_str()).collect();
    for g in names {
        variants.push(accumulate(format!("without_{g}"), true, Some(g.into()), rows().filter(|(t, _)| t.group != g)));
        variants.push(accumulate(
            format!("without_{g}_no_transitions"),
            false,
            Some(g.into()),
            steady().filter(|(t, _)| t.group != g),
        ));
    }
    Ok(EvalReport { format_version: REPORT_FORMAT_VERSION, transition_margin: margin, variants })
}

/// Per-timestamp majority vote over at least three labelers. A tie is rejected.
pub fn majority_label(labelers: &[Vec<bool>]) -> Result<Vec<bool>> {
    if labelers.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 labelers, got {}", labelers.len())));
    }
    let n = labelers[0].len();
    if labelers.iter().any(|l| l.len() != n) {
        return Err(Error::Shape("labeler sequences differ in length".into()));
    }
    let half = labelers.len();
    (0..n)
        .map(|i| {
            let yes = labelers.iter().filter(|l| l[i]).count();
            let no = half - yes;
            if yes == no {
                Err(Error::InvalidArgument(format!("labeler tie at index {i}; use an odd number of labelers")))
            } else {
                Ok(yes > no)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(seg: usize, t: f64, group: &str, ood: bool) -> TruthLabel {
        TruthLabel { segment: seg, timestamp: t, group: group.into(), is_ood: ood }
    }

    fn stream(n: usize, flip_at: Option<usize>) -> Vec<TruthLabel> {
        (0..n)
            .map(|i| {
                let ood = flip_at.is_some_and(|f| i >= f);
                lab(0, i as f64 * 0.1, if ood { "jump" } else { "walk" }, ood)
            })
            .collect()
    }

    #[test]
    fn all_id_is_perfect() {
        let t = stream(50, None);
        let r = evaluate_stream(&vec![false; 50], &t, 0.5).unwrap();
        assert_eq!(r.overall().metrics.accuracy.value(), Some(1.0));
        assert!(!r.overall().metrics.recall.is_defined());
    }

    #[test]
    fn no_flip_empty_mask() {
        assert!(transition_mask(&stream(30, None), 0.5).iter().all(|m| !m));
    }

    #[test]
    fn single_flip_mask_is_exact_interval() {
        // flip between 1.95 and 2.05 -> t = 2.0
        let t: Vec<_> = (0..41).map(|i| lab(0, i as f64 * 0.1 - 0.05, "g", i >= 21)).collect();
        let m = transition_mask(&t, 0.5);
        for (l, &mk) in t.iter().zip(&m) {
            assert_eq!(mk, (l.timestamp - 2.0).abs() <= 0.5 + 1e-12, "t={}", l.timestamp);
        }
    }

    #[test]
    fn flips_do_not_cross_segments() {
        let t = vec![lab(0, 0.0, "a", false), lab(1, 0.1, "b", true)];
        assert_eq!(transition_mask(&t, 0.5), vec![false, false]);
    }

    #[test]
    fn length_mismatch() {
        assert!(evaluate_stream(&[true], &stream(2, None), 0.5).is_err());
    }

    #[test]
    fn without_group_variant() {
        let t = stream(40, Some(20));
        let mut p = vec![false; 40];
        p[30] = true;
        let r = evaluate_stream(&p, &t, 0.5).unwrap();
        let v = r.variant("without_jump").unwrap();
        assert_eq!(v.counts.total(), 20);
        assert_eq!(v.groups.len(), 1);
        assert!(r.variant("without_walk_no_transitions").is_some());
    }

    #[test]
    fn csv_has_row_per_variant_group() {
        let t = stream(40, Some(20));
        let r = evaluate_stream(&vec![false; 40], &t, 0.5).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected: usize = r.variants.iter().map(|v| 1 + v.groups.len()).sum();
        assert_eq!(text.lines().count(), expected + 1);
        assert!(text.contains("undefined"));
    }

    #[test]
    fn majority_votes() {
        let l = vec![vec![true, false, true], vec![true, true, false], vec![true, false, false]];
        assert_eq!(majority_label(&l).unwrap(), vec![true, false, false]);
        assert!(majority_label(&l[..2]).is_err());
        let four = vec![vec![true], vec![true], vec![false], vec![false]];
        assert!(majority_label(&four).is_err());
    }
}
