use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Task, CHANNELS, CHANNELS_PER_BOOT};

pub const HARMONICS: usize = 4;
/// Channels driven directly by the phase (everything but ankle velocity).
pub const KINEMATIC: usize = CHANNELS_PER_BOOT - 1;

const TEMPLATE_SEED: u64 = 0x6a17_0b00;

/// Population-level gait waveform shared by all subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitTemplate {
    pub offset: [f64; KINEMATIC],
    pub scale: [f64; KINEMATIC],
    pub amplitude: [[f64; HARMONICS]; KINEMATIC],
    pub phase: [[f64; HARMONICS]; KINEMATIC],
    /// Per-channel phase shift used by the stair-like variant.
    pub stair_shift: [f64; KINEMATIC],
}

impl GaitTemplate {
    pub fn standard() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(TEMPLATE_SEED);
        // gyro x/y/z, accel x/y/z, ankle angle
        let scale = [3.0, 1.2, 0.8, 8.0, 6.0, 3.0, 0.25];
        let offset = [0.0, 0.0, 0.0, 0.0, 9.81, 0.0, 0.05];
        let decay = [1.0, 0.55, 0.3, 0.15];
        let mut amplitude = [[0.0; HARMONICS]; KINEMATIC];
        let mut phase = [[0.0; HARMONICS]; KINEMATIC];
        let mut stair_shift = [0.0; KINEMATIC];
        for c in 0..KINEMATIC {
            for h in 0..HARMONICS {
                amplitude[c][h] = scale[c] * decay[h] * rng.gen_range(0.7..1.3);
                phase[c][h] = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            }
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            stair_shift[c] = sign * rng.gen_range(0.5..0.9);
        }
        Self { offset, scale, amplitude, phase, stair_shift }
    }
}

/// Per-subject variation around the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub id: u32,
    /// Step frequency of normal-speed walking (Hz).
    pub cadence: f64,
    /// Gain on each of the 16 channels.
    pub gains: [f64; CHANNELS],
    /// Extra harmonic phase per boot, channel and harmonic.
    pub jitter: [[[f64; HARMONICS]; KINEMATIC]; 2],
    /// Right-leg phase lead as a fraction of the cycle (about one half).
    pub lr_offset: f64,
    /// Noise level relative to each channel's scale.
    pub noise: f64,
    /// Static posture offsets used by stationary tasks.
    pub posture: [f64; CHANNELS],
}

impl SubjectProfile {
    pub fn sample(id: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(id) << 32) ^ 0x5eed);
        let mut gains = [1.0; CHANNELS];
        gains.iter_mut().for_each(|g| *g = rng.gen_range(0.85..1.15));
        let mut jitter = [[[0.0; HARMONICS]; KINEMATIC]; 2];
        for boot in jitter.iter_mut() {
            for ch in boot.iter_mut() {
                for v in ch.iter_mut() {
                    *v = rng.gen_range(-0.15..0.15);
                }
            }
        }
        let mut posture = [0.0; CHANNELS];
        posture.iter_mut().for_each(|p| *p = rng.gen_range(-0.05..0.05));
        Self {
            id,
            cadence: rng.gen_range(0.85..1.0),
            gains,
            jitter,
            lr_offset: 0.5 + rng.gen_range(-0.02..0.02),
            noise: 0.03,
            posture,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

/// Task plus its speed / incline modifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    /// Relative speed; 1.0 is the subject's normal pace.
    pub speed: f64,
    /// Ramp incline as a grade fraction.
    pub incline: f64,
}

impl TaskSpec {
    pub fn new(task: Task) -> Self {
        Self { task, speed: 1.0, incline: 0.0 }
    }

    pub fn walk(speed: f64) -> Self {
        Self { task: Task::Walk, speed, incline: 0.0 }
    }

    pub fn jog(incline: f64) -> Self {
        Self { task: Task::Jog, speed: 1.0, incline }
    }
}
