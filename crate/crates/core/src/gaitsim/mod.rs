//! Synthetic stand-in for recorded exoskeleton gait data.
//!
//! Each boot contributes eight channels: three gyro axes (rad/s), three
//! accelerometer axes (m/s^2), ankle angle (rad) and ankle velocity
//! (rad/s, finite difference of the angle). Walking and jogging are
//! harmonic mixtures of the gait phase, so the ground-truth phase of every
//! frame is known exactly.

mod csvlog;
mod dataset;
mod generate;
mod profile;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use csvlog::{read_log, read_log_file, write_log, write_log_file};
pub use dataset::{build_dataset, Dataset, DatasetConfig, Segment, TrainingSet};
pub use generate::{generate_gait, generate_ood, generate_sequence};
pub use profile::{GaitTemplate, SubjectProfile, TaskSpec};
pub use window::{window_count, window_stream, ChannelScaler, ScaledStream, SensorWindow, WindowLabel};

/// Sensor sample rate; 175 samples span about one second.
pub const SAMPLE_RATE: f64 = 175.0;
pub const CHANNELS: usize = 16;
pub const CHANNELS_PER_BOOT: usize = 8;
pub const WINDOW: usize = 175;
pub const STRIDE: usize = 10;

pub const CHANNEL_NAMES: [&str; CHANNELS] = [
    "l_gyro_x", "l_gyro_y", "l_gyro_z", "l_accel_x", "l_accel_y", "l_accel_z", "l_ankle_angle", "l_ankle_vel",
    "r_gyro_x", "r_gyro_y", "r_gyro_z", "r_accel_x", "r_accel_y", "r_accel_z", "r_ankle_angle", "r_ankle_vel",
];

/// Index of the ankle angle channel within a boot.
pub const ANGLE: usize = 6;
/// Index of the ankle velocity channel within a boot.
pub const VELOCITY: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Walk,
    Jog,
    Stand,
    Sit,
    Jump,
    Backward,
    Skip,
    Stairs,
}

impl Task {
    pub const ALL: [Task; 8] =
        [Task::Walk, Task::Jog, Task::Stand, Task::Sit, Task::Jump, Task::Backward, Task::Skip, Task::Stairs];

    pub fn is_ood(self) -> bool {
        !matches!(self, Task::Walk | Task::Jog)
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Walk => "walk",
            Task::Jog => "jog",
            Task::Stand => "stand",
            Task::Sit => "sit",
            Task::Jump => "jump",
            Task::Backward => "backward",
            Task::Skip => "skip",
            Task::Stairs => "stairs",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| invalid(format!("unknown task kind '{s}'")))
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub timestamp: f64,
    pub channels: [f64; CHANNELS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLabel {
    pub subject: u32,
    pub task: Task,
    pub is_ood: bool,
    /// Gait phase in `[0, 1)`; only defined for cyclic in-distribution tasks.
    pub phase_l: Option<f64>,
    pub phase_r: Option<f64>,
}

/// One continuous, labeled sensor stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recording {
    pub frames: Vec<SensorFrame>,
    pub labels: Vec<FrameLabel>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn has_ood(&self) -> bool {
        self.labels.iter().any(|l| l.is_ood)
    }
}
