use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::profile::{GaitTemplate, SubjectProfile, TaskSpec, HARMONICS, KINEMATIC};
use super::{FrameLabel, Recording, SensorFrame, Task, ANGLE, CHANNELS, CHANNELS_PER_BOOT, SAMPLE_RATE, VELOCITY};
use crate::error::{invalid, Result};

type Kinematic = [f64; 2 * KINEMATIC];

/// Noise scale relative to channel scale; the angle encoder is far cleaner
/// than the IMU so its finite difference stays usable.
const NOISE_SHAPE: [f64; KINEMATIC] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.02];

#[derive(Debug, Clone)]
struct GaitMotion {
    cadence: f64,
    amp: f64,
    harmonic_gain: [f64; HARMONICS],
    direction: f64,
    lr_offset: f64,
    phase0: f64,
    angle_offset: f64,
    angle_gain: f64,
    stair: bool,
    skip: bool,
    mod_depth: f64,
    mod_freq: f64,
    mod_phase: f64,
}

#[derive(Debug, Clone)]
enum Motion {
    Gait(GaitMotion),
    Still { base: Kinematic, sway: f64, sway_freq: f64, sway_phase: f64 },
    Jump { base: Kinematic, takeoffs: Vec<f64> },
}

struct Model<'a> {
    tpl: GaitTemplate,
    profile: &'a SubjectProfile,
}

impl Model<'_> {
    fn gain(&self, boot: usize, k: usize) -> f64 {
        self.profile.gains[boot * CHANNELS_PER_BOOT + k]
    }

    fn waveform(&self, boot: usize, k: usize, phase: f64, g: &GaitMotion) -> f64 {
        let shift = if g.stair { self.tpl.stair_shift[k] } else { 0.0 };
        let mut v = 0.0;
        for h in 0..HARMONICS {
            let theta = self.tpl.phase[k][h] + self.profile.jitter[boot][k][h] + shift;
            v += self.tpl.amplitude[k][h] * g.harmonic_gain[h] * (TAU * (h + 1) as f64 * phase + theta).cos();
        }
        let mut amp = g.amp * self.gain(boot, k);
        if k == ANGLE {
            amp *= g.angle_gain;
        }
        amp * v
    }

    fn gait_phase(&self, g: &GaitMotion, t: f64) -> f64 {
        let wobble = if g.mod_depth > 0.0 {
            g.mod_depth / (TAU * g.mod_freq) * ((TAU * g.mod_freq * t + g.mod_phase).sin() - g.mod_phase.sin())
        } else {
            0.0
        };
        g.phase0 + g.cadence * (t + wobble)
    }

    /// Noise-free kinematic channels at time `t` plus the left/right phase.
    fn sample(&self, motion: &Motion, t: f64) -> (Kinematic, Option<(f64, f64)>) {
        let mut out = [0.0; 2 * KINEMATIC];
        match motion {
            Motion::Gait(g) => {
                let phase = self.gait_phase(g, t);
                for boot in 0..2 {
                    let p = g.direction * phase + boot as f64 * g.lr_offset;
                    for k in 0..KINEMATIC {
                        let mut v = if g.skip {
                            0.65 * self.waveform(boot, k, p, g) + 0.55 * self.waveform(boot, k, 2.0 * p + 0.17, g)
                        } else {
                            self.waveform(boot, k, p, g)
                        };
                        v += self.tpl.offset[k];
                        if k == ANGLE {
                            v += g.angle_offset;
                        }
                        out[boot * KINEMATIC + k] = v;
                    }
                }
                let cyclic = g.direction > 0.0 && !g.stair && !g.skip;
                let labels = cyclic.then(|| (phase.rem_euclid(1.0), (phase + g.lr_offset).rem_euclid(1.0)));
                (out, labels)
            }
            Motion::Still { base, sway, sway_freq, sway_phase } => {
                let s = (TAU * sway_freq * t + sway_phase).sin();
                for (i, v) in out.iter_mut().enumerate() {
                    *v = base[i] + sway * self.tpl.scale[i % KINEMATIC] * s;
                }
                (out, None)
            }
            Motion::Jump { base, takeoffs } => {
                out = *base;
                for &t0 in takeoffs {
                    if (t - t0).abs() > 1.5 {
                        continue;
                    }
                    let pulse = |center: f64, width: f64| (-(t - center).powi(2) / (2.0 * width * width)).exp();
                    let push = pulse(t0, 0.05);
                    let land = pulse(t0 + 0.38, 0.03);
                    let flight = pulse(t0 + 0.19, 0.12);
                    for boot in 0..2 {
                        let b = boot * KINEMATIC;
                        out[b] += 6.0 * (push - land);
                        out[b + 1] += 2.0 * push;
                        out[b + 3] += 25.0 * push - 35.0 * land;
                        out[b + 4] += 45.0 * push + 85.0 * land;
                        out[b + 5] += 18.0 * land;
                        out[b + ANGLE] += -0.35 * flight + 0.25 * land;
                    }
                }
                (out, None)
            }
        }
    }
}

fn still_base(model: &Model, sitting: bool) -> Kinematic {
    let mut base = [0.0; 2 * KINEMATIC];
    for boot in 0..2 {
        for k in 0..KINEMATIC {
            let posture = model.profile.posture[boot * CHANNELS_PER_BOOT + k] * model.tpl.scale[k];
            let nominal = match (sitting, k) {
                (false, 3) => 0.3,
                (false, 4) => 9.81,
                (false, 5) => -0.2,
                (false, ANGLE) => 0.02,
                (true, 3) => 5.0,
                (true, 4) => 8.3,
                (true, 5) => 0.5,
                (true, ANGLE) => 0.35,
                _ => 0.0,
            };
            base[boot * KINEMATIC + k] = nominal + posture;
        }
    }
    base
}

fn motion_for(model: &Model, spec: &TaskSpec, rng: &mut ChaCha8Rng) -> Motion {
    let p = model.profile;
    let mut gait = GaitMotion {
        cadence: p.cadence,
        amp: 1.0,
        harmonic_gain: [1.0; HARMONICS],
        direction: 1.0,
        lr_offset: p.lr_offset,
        phase0: rng.gen_range(0.0..1.0),
        angle_offset: 0.0,
        angle_gain: 1.0,
        stair: false,
        skip: false,
        // stride-to-stride cadence variability scales with the noise level
        mod_depth: p.noise,
        mod_freq: rng.gen_range(0.08..0.15),
        mod_phase: rng.gen_range(0.0..TAU),
    };
    match spec.task {
        Task::Walk => {
            gait.cadence = p.cadence * (0.6 + 0.4 * spec.speed);
            gait.amp = 0.7 + 0.3 * spec.speed;
            gait.angle_offset = 0.4 * spec.incline;
            Motion::Gait(gait)
        }
        Task::Jog => {
            gait.cadence = p.cadence * 1.45 * (0.9 + 0.1 * spec.speed);
            gait.amp = 1.5;
            gait.harmonic_gain = [1.0, 1.3, 1.1, 1.0];
            gait.angle_offset = 0.6 * spec.incline;
            Motion::Gait(gait)
        }
        Task::Stairs => {
            gait.cadence = p.cadence * 0.8;
            gait.stair = true;
            gait.angle_gain = 1.4;
            Motion::Gait(gait)
        }
        Task::Backward => {
            gait.direction = -1.0;
            Motion::Gait(gait)
        }
        Task::Skip => {
            gait.cadence = p.cadence * 0.75;
            gait.amp = 1.2;
            gait.skip = true;
            gait.lr_offset = 0.25;
            Motion::Gait(gait)
        }
        Task::Stand | Task::Sit => Motion::Still {
            base: still_base(model, spec.task == Task::Sit),
            sway: if spec.task == Task::Sit { 0.03 } else { 0.02 },
            sway_freq: rng.gen_range(0.2..0.4),
            sway_phase: rng.gen_range(0.0..TAU),
        },
        Task::Jump => {
            let mut takeoffs = Vec::new();
            let mut t = rng.gen_range(0.3..0.6);
            // generous horizon; segments longer than this simply stand still
            while t < 3600.0 {
                takeoffs.push(t);
                t += rng.gen_range(1.1..1.6);
            }
            Motion::Jump { base: still_base(model, false), takeoffs }
        }
    }
}

/// Generates consecutive task segments as one continuous stream.
///
/// Timestamps start at zero and advance by `1 / SAMPLE_RATE`. The ankle
/// velocity channel is the finite difference of the (noisy) ankle angle
/// across the whole stream, segment boundaries included.
pub fn generate_sequence(profile: &SubjectProfile, segments: &[(TaskSpec, f64)], seed: u64) -> Result<Recording> {
    if profile.cadence <= 0.0 || profile.noise < 0.0 {
        return Err(invalid("profile cadence must be > 0 and noise >= 0"));
    }
    let model = Model { tpl: GaitTemplate::standard(), profile };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = segments.iter().map(|(_, d)| (d * SAMPLE_RATE).round() as usize).sum();
    let mut kin: Vec<Kinematic> = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut pre_angle = [0.0; 2];
    for (si, (spec, duration)) in segments.iter().enumerate() {
        if !(duration.is_finite() && *duration > 0.0) {
            return Err(invalid("segment duration must be positive"));
        }
        let motion = motion_for(&model, spec, &mut rng);
        if si == 0 {
            let (k, _) = model.sample(&motion, -1.0 / SAMPLE_RATE);
            pre_angle = [k[ANGLE], k[KINEMATIC + ANGLE]];
        }
        let n = (duration * SAMPLE_RATE).round() as usize;
        for i in 0..n {
            let t = i as f64 / SAMPLE_RATE;
            let (mut k, phases) = model.sample(&motion, t);
            if profile.noise > 0.0 {
                for (c, v) in k.iter_mut().enumerate() {
                    let kc = c % KINEMATIC;
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += profile.noise * NOISE_SHAPE[kc] * model.tpl.scale[kc] * z;
                }
            }
            kin.push(k);
            labels.push(FrameLabel {
                subject: profile.id,
                task: spec.task,
                is_ood: spec.task.is_ood(),
                phase_l: phases.map(|p| p.0),
                phase_r: phases.map(|p| p.1),
            });
        }
    }
    let mut frames = Vec::with_capacity(kin.len());
    let mut prev = pre_angle;
    for (i, k) in kin.iter().enumerate() {
        let mut channels = [0.0; CHANNELS];
        for boot in 0..2 {
            let src = &k[boot * KINEMATIC..(boot + 1) * KINEMATIC];
            let dst = &mut channels[boot * CHANNELS_PER_BOOT..(boot + 1) * CHANNELS_PER_BOOT];
            dst[..KINEMATIC].copy_from_slice(src);
            dst[VELOCITY] = (src[ANGLE] - prev[boot]) * SAMPLE_RATE;
            prev[boot] = src[ANGLE];
        }
        frames.push(SensorFrame { timestamp: i as f64 / SAMPLE_RATE, channels });
    }
    Ok(Recording { frames, labels })
}

/// In-distribution walking or jogging with exact phase labels.
pub fn generate_gait(profile: &SubjectProfile, spec: TaskSpec, duration: f64, seed: u64) -> Result<Recording> {
    if spec.task.is_ood() {
        return Err(invalid(format!("{} is not a gait task", spec.task)));
    }
    let cadence = match spec.task {
        Task::Jog => profile.cadence * 1.45 * (0.9 + 0.1 * spec.speed),
        _ => profile.cadence * (0.6 + 0.4 * spec.speed),
    };
    if duration * cadence <= 2.0 {
        return Err(invalid("duration must cover more than two gait cycles"));
    }
    generate_sequence(profile, &[(spec, duration)], seed)
}

/// Out-of-distribution activity of the given kind.
pub fn generate_ood(profile: &SubjectProfile, kind: Task, duration: f64, seed: u64) -> Result<Recording> {
    if !kind.is_ood() {
        return Err(invalid(format!("{kind} is an in-distribution task")));
    }
    if duration <= 1.0 {
        return Err(invalid("out-of-distribution segments must last more than 1 s"));
    }
    generate_sequence(profile, &[(TaskSpec::new(kind), duration)], seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_profile() -> SubjectProfile {
        let mut p = SubjectProfile::sample(3, 11).with_noise(0.0);
        p.cadence = 1.25; // 140 samples per cycle at speed 1.0
        p
    }

    fn channel(rec: &Recording, c: usize) -> Vec<f64> {
        rec.frames.iter().map(|f| f.channels[c]).collect()
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn noiseless_gait_is_periodic() {
        let rec = generate_gait(&quiet_profile(), TaskSpec::walk(1.0), 6.0, 1).unwrap();
        let period = 140;
        for c in 0..CHANNELS {
            let x = channel(&rec, c);
            for n in 0..x.len() - period {
                assert!((x[n] - x[n + period]).abs() < 1e-9, "channel {c} sample {n}");
            }
        }
    }

    #[test]
    fn phase_labels_wrap_and_advance() {
        let rec = generate_gait(&SubjectProfile::sample(1, 2), TaskSpec::jog(0.0), 8.0, 5).unwrap();
        let mut wraps = 0;
        for w in rec.labels.windows(2) {
            let (a, b) = (w[0].phase_l.unwrap(), w[1].phase_l.unwrap());
            assert!((0.0..1.0).contains(&a));
            let step = (b - a).rem_euclid(1.0);
            assert!(step > 0.0 && step < 0.05);
            if b < a {
                wraps += 1;
            }
            let lr = (w[0].phase_r.unwrap() - a).rem_euclid(1.0);
            assert!((lr - 0.5).abs() < 0.03);
        }
        assert!(wraps >= 8);
    }

    #[test]
    fn velocity_is_finite_difference_of_angle() {
        let rec = generate_gait(&SubjectProfile::sample(2, 9), TaskSpec::walk(1.2), 5.0, 3).unwrap();
        for boot in 0..2 {
            let a = channel(&rec, boot * CHANNELS_PER_BOOT + ANGLE);
            let v = channel(&rec, boot * CHANNELS_PER_BOOT + VELOCITY);
            for n in 1..a.len() {
                assert!((v[n] - (a[n] - a[n - 1]) * SAMPLE_RATE).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn stand_is_nearly_still() {
        let p = SubjectProfile::sample(4, 1);
        let walk = generate_gait(&p, TaskSpec::walk(1.0), 20.0, 1).unwrap();
        let stand = generate_ood(&p, Task::Stand, 20.0, 2).unwrap();
        for c in 0..CHANNELS {
            let (vw, vs) = (variance(&channel(&walk, c)), variance(&channel(&stand, c)));
            assert!(vs < 0.01 * vw, "channel {c}: stand {vs} walk {vw}");
        }
    }

    #[test]
    fn jump_has_large_impacts() {
        let p = SubjectProfile::sample(5, 1);
        let walk = generate_gait(&p, TaskSpec::walk(1.0), 20.0, 1).unwrap();
        let jump = generate_ood(&p, Task::Jump, 20.0, 2).unwrap();
        let max_accel = |r: &Recording| {
            r.frames
                .iter()
                .flat_map(|f| [3, 4, 5, 11, 12, 13].map(|c| f.channels[c].abs()))
                .fold(0.0, f64::max)
        };
        assert!(max_accel(&jump) > 3.0 * max_accel(&walk));
    }

    /// Complex amplitude of harmonic `h` of the cadence, via a direct DFT
    /// over a whole number of cycles.
    fn harmonic(x: &[f64], samples_per_cycle: usize, h: usize) -> (f64, f64) {
        let cycles = x.len() / samples_per_cycle;
        let n = cycles * samples_per_cycle;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x[..n].iter().enumerate() {
            let a = TAU * (h * cycles) as f64 * i as f64 / n as f64;
            re += v * a.cos();
            im -= v * a.sin();
        }
        (re / n as f64, im / n as f64)
    }

    #[test]
    fn backward_keeps_spectra_and_changes_phase_relations() {
        let p = quiet_profile();
        let walk = generate_gait(&p, TaskSpec::walk(1.0), 11.2, 7).unwrap();
        let back = generate_ood(&p, Task::Backward, 11.2, 7).unwrap();
        let mut phase_change = 0.0f64;
        for c in [0usize, 1, 3, 4, 6] {
            let (w, b) = (channel(&walk, c), channel(&back, c));
            for h in 1..=HARMONICS {
                let (wr, wi) = harmonic(&w, 140, h);
                let (br, bi) = harmonic(&b, 140, h);
                let (mw, mb) = ((wr * wr + wi * wi).sqrt(), (br * br + bi * bi).sqrt());
                assert!((mw - mb).abs() <= 1e-9 * mw.max(1.0), "channel {c} harmonic {h}: {mw} vs {mb}");
            }
            // cross-channel relative phase against channel 6 at the fundamental
            let rel = |x: &[f64], y: &[f64]| {
                let (a, b) = (harmonic(x, 140, 1), harmonic(y, 140, 1));
                (a.1.atan2(a.0) - b.1.atan2(b.0)).rem_euclid(TAU)
            };
            let dw = rel(&w, &channel(&walk, 6));
            let db = rel(&b, &channel(&back, 6));
            phase_change = phase_change.max((dw - db).abs().min(TAU - (dw - db).abs()));
        }
        assert!(phase_change > 0.3);
    }

    #[test]
    fn wrong_task_kinds_rejected() {
        let p = SubjectProfile::sample(1, 1);
        assert!(generate_gait(&p, TaskSpec::new(Task::Stand), 10.0, 1).is_err());
        assert!(generate_ood(&p, Task::Walk, 10.0, 1).is_err());
        assert!(generate_ood(&p, Task::Sit, 0.5, 1).is_err());
        assert!(generate_gait(&p, TaskSpec::walk(1.0), 1.0, 1).is_err());
    }
}
