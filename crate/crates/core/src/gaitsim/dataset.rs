use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::generate::generate_sequence;
use super::profile::{SubjectProfile, TaskSpec};
use super::{Recording, Task};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub spec: TaskSpec,
    pub seconds: f64,
}

impl Segment {
    pub fn new(spec: TaskSpec, seconds: f64) -> Self {
        Self { spec, seconds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_train_subjects: usize,
    /// Validation subjects whose profiles never appear in training.
    pub n_val_new_subjects: usize,
    /// Validation subjects re-recorded from the training pool.
    pub n_val_seen_subjects: usize,
    /// In-distribution recordings made by every training subject.
    pub train_tasks: Vec<Segment>,
    /// Mixed in/out-of-distribution protocol walked by each validation subject.
    pub val_segments: Vec<Segment>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let train_tasks = vec![
            Segment::new(TaskSpec::walk(0.8), 30.0),
            Segment::new(TaskSpec::walk(1.0), 30.0),
            Segment::new(TaskSpec::walk(1.2), 30.0),
            Segment::new(TaskSpec::jog(0.0), 30.0),
            Segment::new(TaskSpec::jog(0.05), 30.0),
        ];
        let s = 90.0;
        let val_segments = vec![
            Segment::new(TaskSpec::walk(1.0), s),
            Segment::new(TaskSpec::new(Task::Stand), s),
            Segment::new(TaskSpec::walk(0.8), s),
            Segment::new(TaskSpec::new(Task::Jump), s),
            Segment::new(TaskSpec::jog(0.0), s),
            Segment::new(TaskSpec::new(Task::Sit), s),
            Segment::new(TaskSpec::walk(1.2), s),
            Segment::new(TaskSpec::new(Task::Backward), s),
            Segment::new(TaskSpec::jog(0.05), s),
            Segment::new(TaskSpec::new(Task::Skip), s),
            Segment::new(TaskSpec::walk(1.0), s),
            Segment::new(TaskSpec::new(Task::Stairs), s),
            Segment::new(TaskSpec::walk(1.0), s),
        ];
        Self {
            n_train_subjects: 9,
            n_val_new_subjects: 2,
            n_val_seen_subjects: 1,
            train_tasks,
            val_segments,
            noise: 0.03,
            seed: 7,
        }
    }
}

/// In-distribution recordings only; construction rejects any frame labeled
/// out-of-distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    recordings: Vec<Recording>,
}

impl TrainingSet {
    pub fn new(recordings: Vec<Recording>) -> Result<Self> {
        if let Some(r) = recordings.iter().find(|r| r.has_ood()) {
            let l = r.labels.iter().find(|l| l.is_ood).expect("has_ood");
            return Err(Error::Dataset(format!(
                "training data contains out-of-distribution frames (subject {}, task {})",
                l.subject, l.task
            )));
        }
        if recordings.iter().all(|r| r.is_empty()) {
            return Err(Error::Dataset("training set is empty".into()));
        }
        Ok(Self { recordings })
    }

    pub fn recordings(&self) -> &[Recording] {
        &self.recordings
    }

    pub fn into_recordings(self) -> Vec<Recording> {
        self.recordings
    }

    pub fn subjects(&self) -> Vec<u32> {
        let set: BTreeSet<u32> =
            self.recordings.iter().filter_map(|r| r.labels.first().map(|l| l.subject)).collect();
        set.into_iter().collect()
    }

    /// Recordings whose subject satisfies `keep`.
    pub fn filter_subjects(&self, keep: impl Fn(u32) -> bool) -> Vec<&Recording> {
        self.recordings.iter().filter(|r| r.labels.first().is_some_and(|l| keep(l.subject))).collect()
    }

    pub fn frame_count(&self) -> usize {
        self.recordings.iter().map(Recording::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: TrainingSet,
    /// One continuous mixed stream per validation subject.
    pub validation: Vec<Recording>,
    pub train_profiles: Vec<SubjectProfile>,
    pub val_profiles: Vec<SubjectProfile>,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generates the synthetic training and validation sets.
///
/// Training subjects get ids `0..n_train_subjects`; new validation
/// subjects continue the numbering, and re-recorded subjects reuse the
/// lowest training ids with fresh noise and phase.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    if config.n_train_subjects < 2 {
        return Err(invalid("need at least two training subjects"));
    }
    if config.n_val_seen_subjects > config.n_train_subjects {
        return Err(invalid("more re-recorded validation subjects than training subjects"));
    }
    if config.train_tasks.iter().any(|s| s.spec.task.is_ood()) {
        return Err(invalid("training tasks must be in-distribution"));
    }
    let profile = |id: u32| SubjectProfile::sample(id, config.seed).with_noise(config.noise);
    let train_profiles: Vec<SubjectProfile> = (0..config.n_train_subjects as u32).map(profile).collect();
    let mut recordings = Vec::new();
    for p in &train_profiles {
        for (ti, seg) in config.train_tasks.iter().enumerate() {
            let seed = mix(config.seed, u64::from(p.id), ti as u64);
            recordings.push(generate_sequence(p, &[(seg.spec, seg.seconds)], seed)?);
        }
    }
    let train = TrainingSet::new(recordings)?;

    let mut val_profiles: Vec<SubjectProfile> = train_profiles[..config.n_val_seen_subjects].to_vec();
    let first_new = config.n_train_subjects as u32;
    val_profiles.extend((first_new..first_new + config.n_val_new_subjects as u32).map(profile));
    let segments: Vec<(TaskSpec, f64)> = config.val_segments.iter().map(|s| (s.spec, s.seconds)).collect();
    let validation = val_profiles
        .iter()
        .map(|p| generate_sequence(p, &segments, mix(config.seed, u64::from(p.id), 0xfa11)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { train, validation, train_profiles, val_profiles })
}
