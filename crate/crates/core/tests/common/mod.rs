//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use gaitguard::numcore::{Activation, Network, StageArch, Tensor2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------- LOF, straight from the textbook definitions ----------

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt().max(1e-12)
}

/// Sorted distances from `q` to every row except `skip`.
fn neighbors(rows: &[Vec<f64>], q: &[f64], skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> =
        rows.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(j, r)| (j, euclid(q, r))).collect();
    d.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    d
}

fn k_dist(rows: &[Vec<f64>], i: usize, k: usize) -> f64 {
    neighbors(rows, &rows[i], Some(i))[k - 1].1
}

fn lrd(rows: &[Vec<f64>], q: &[f64], skip: Option<usize>, k: usize) -> f64 {
    let nb = neighbors(rows, q, skip);
    let kd = nb[k - 1].1;
    let hood: Vec<&(usize, f64)> = nb.iter().filter(|(_, d)| *d <= kd).collect();
    let reach: f64 = hood.iter().map(|(j, d)| k_dist(rows, *j, k).max(*d)).sum();
    hood.len() as f64 / reach
}

/// Random instance: reference rows, queries and k.
pub fn lof_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, usize) {
    let mut r = rng(seed);
    let d = r.gen_range(1..=8);
    let n = r.gen_range(12..=64);
    let k = r.gen_range(2..=10);
    let clusters = r.gen_range(1..4);
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| (0..d).map(|_| r.gen_range(-5.0..5.0)).collect()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let c = &centers[r.gen_range(0..clusters)];
            c.iter().map(|v| v + r.gen_range(-1.0..1.0)).collect()
        })
        .collect();
    let queries = (0..5).map(|_| (0..d).map(|_| r.gen_range(-8.0..8.0)).collect()).collect();
    (rows, queries, k)
}

/// LOF of an external query against `rows`.
pub fn brute_lof(rows: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
    let nb = neighbors(rows, q, None);
    let kd = nb[k - 1].1;
    let hood: Vec<usize> = nb.iter().filter(|(_, d)| *d <= kd).map(|(j, _)| *j).collect();
    let mean = hood.iter().map(|&j| lrd(rows, &rows[j], Some(j), k)).sum::<f64>() / hood.len() as f64;
    mean / lrd(rows, q, None, k)
}

pub fn brute_reference_lof(rows: &[Vec<f64>], i: usize, k: usize) -> f64 {
    let nb = neighbors(rows, &rows[i], Some(i));
    let kd = nb[k - 1].1;
    let hood: Vec<usize> = nb.iter().filter(|(_, d)| *d <= kd).map(|(j, _)| *j).collect();
    let mean = hood.iter().map(|&j| lrd(rows, &rows[j], Some(j), k)).sum::<f64>() / hood.len() as f64;
    mean / lrd(rows, &rows[i], Some(i), k)
}

// ---------- median and variance ----------

/// Median of the last `window` values ending at each index, by sorting.
pub fn sorted_running_median(xs: &[f64], window: usize) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let mut w = xs[lo..=i].to_vec();
            w.sort_by(f64::total_cmp);
            let n = w.len();
            if n % 2 == 1 {
                w[n / 2]
            } else {
                (w[n / 2 - 1] + w[n / 2]) / 2.0
            }
        })
        .collect()
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

// ---------- calibration ----------

pub fn frac_at_most(xs: &[f64], t: f64) -> f64 {
    xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64
}

/// The order-statistic property: the threshold reaches the quantile and the
/// next distinct value below it does not.
pub fn order_statistic_holds(xs: &[f64], q: f64, thr: f64) -> bool {
    if !xs.contains(&thr) || frac_at_most(xs, thr) < q {
        return false;
    }
    match xs.iter().copied().filter(|&x| x < thr).max_by(f64::total_cmp) {
        Some(prev) => frac_at_most(xs, prev) < q,
        None => true,
    }
}

// ---------- finite differences ----------

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error between backprop and central differences over
/// every parameter and every input element, for `L = sum(w * net(x))`.
pub fn gradient_check(net: &Network<f64>, x: &Tensor2<f64>, seed: u64) -> f64 {
    let mut r = rng(seed);
    let y = net.forward(x).unwrap();
    let w = Tensor2::from_fn(y.channels(), y.length(), |_, _| r.gen_range(-1.0..1.0));
    let loss = |n: &Network<f64>, x: &Tensor2<f64>| {
        n.forward(x).unwrap().data().iter().zip(w.data()).map(|(a, b)| a * b).sum::<f64>()
    };
    let (_, tape) = net.forward_taped(x).unwrap();
    let (grads, gx) = net.backward(&tape, &w).unwrap();
    let analytic = grads.flat();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let base = net.flat_params();
    let mut probe = net.clone();
    for (i, &g) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.load_flat(&p).unwrap();
        let up = loss(&probe, x);
        p[i] = base[i] - h;
        probe.load_flat(&p).unwrap();
        let down = loss(&probe, x);
        worst = worst.max(rel_err(g, (up - down) / (2.0 * h)));
    }
    for i in 0..x.data().len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let up = loss(net, &xp);
        xp.data_mut()[i] -= 2.0 * h;
        let down = loss(net, &xp);
        worst = worst.max(rel_err(gx.data()[i], (up - down) / (2.0 * h)));
    }
    worst
}

/// Random network with random (nonzero) biases.
pub fn random_net(arch: &[StageArch], seed: u64) -> Network<f64> {
    let mut net = Network::<f64>::random(arch, seed).unwrap();
    let mut r = rng(seed ^ 0xb1a5);
    let p: Vec<f64> = net.flat_params().iter().map(|v| v + r.gen_range(-0.3..0.3)).collect();
    net.load_flat(&p).unwrap();
    net
}

pub fn random_input(channels: usize, length: usize, seed: u64) -> Tensor2<f64> {
    let mut r = rng(seed);
    Tensor2::from_fn(channels, length, |_, _| r.gen_range(-1.5..1.5))
}

pub const ACTIVATIONS: [Activation; 4] = [Activation::Identity, Activation::Relu, Activation::Tanh, Activation::Sigmoid];

/// One randomly shaped single-layer network of the given family, plus an input.
pub fn layer_case(kind: &str, seed: u64) -> (Network<f64>, Tensor2<f64>) {
    let mut r = rng(seed);
    let act = ACTIVATIONS[r.gen_range(0..ACTIVATIONS.len())];
    match kind {
        "conv" => {
            let (ci, co) = (r.gen_range(1..4), r.gen_range(1..4));
            let (k, d) = (r.gen_range(1..4), r.gen_range(1..4));
            let len = r.gen_range(3..12);
            let arch = [StageArch::Block {
                conv: gaitguard::numcore::ConvShape { in_channels: ci, out_channels: co, kernel: k, dilation: d },
                activation: act,
                residual: false,
            }];
            (random_net(&arch, seed), random_input(ci, len, seed + 1))
        }
        "residual" => {
            let c = r.gen_range(1..4);
            let (k, d) = (r.gen_range(1..4), r.gen_range(1..4));
            let len = r.gen_range(3..12);
            let arch = [StageArch::block(c, c, k, d, act)];
            (random_net(&arch, seed), random_input(c, len, seed + 1))
        }
        "dense" => {
            let (i, o) = (r.gen_range(1..7), r.gen_range(1..5));
            let arch = [StageArch::dense(i, o, act)];
            (random_net(&arch, seed), random_input(i, 1, seed + 1))
        }
        "stack" => {
            // block -> flatten -> dense -> reshape -> block -> last step -> dense
            let (c, len) = (r.gen_range(1..3), r.gen_range(2..6));
            let h = r.gen_range(1..4);
            let arch = [
                StageArch::block(c, h, 2, 1, Activation::Tanh),
                StageArch::Flatten,
                StageArch::dense(h * len, 2 * len, act),
                StageArch::Reshape { channels: 2, length: len },
                StageArch::block(2, 2, 2, 2, Activation::Tanh),
                StageArch::LastStep,
                StageArch::dense(2, 2, Activation::Tanh),
            ];
            (random_net(&arch, seed), random_input(c, len, seed + 1))
        }
        other => panic!("unknown layer family {other}"),
    }
}

pub const LAYER_FAMILIES: [&str; 4] = ["conv", "residual", "dense", "stack"];

// ---------- transition fixture ----------

use gaitguard::evalkit::TruthLabel;

/// Two segments of alternating 6 s ID/OOD blocks sampled every 1/17.5 s,
/// with predictions wrong on every window within 0.4 s of a flip and right
/// everywhere else.
pub fn transition_fixture() -> (Vec<bool>, Vec<TruthLabel>) {
    let dt = 1.0 / 17.5;
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for seg in 0..2 {
        let n = (36.0 / dt) as usize;
        let labels: Vec<bool> = (0..n).map(|i| ((i as f64 * dt) / 6.0) as usize % 2 == 1).collect();
        let flips: Vec<f64> = (1..n)
            .filter(|&i| labels[i] != labels[i - 1])
            .map(|i| 0.5 * ((i - 1) as f64 + i as f64) * dt)
            .collect();
        for (i, &ood) in labels.iter().enumerate() {
            let t = i as f64 * dt;
            let near = flips.iter().any(|f| (t - f).abs() <= 0.4);
            truth.push(TruthLabel { segment: seg, timestamp: t, group: if ood { "jump".into() } else { "walk".into() }, is_ood: ood });
            pred.push(if near { !ood } else { ood });
        }
    }
    (pred, truth)
}
