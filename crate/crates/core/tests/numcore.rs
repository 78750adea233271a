mod common;

use common::*;
use gaitguard::numcore::{dilated_causal_conv, ConvShape, ConvSpec, Network, SpectralConstraint, StageArch, Tensor2};
use gaitguard::numcore::{power_iteration, Activation};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn finite_difference_gradients_per_layer_family() {
    for family in LAYER_FAMILIES {
        for case in 0..25u64 {
            let (net, x) = layer_case(family, 1000 * case + 17);
            let err = gradient_check(&net, &x, case);
            assert!(err <= 1e-4, "{family} case {case}: relative error {err:e}");
        }
    }
}

fn conv_strategy() -> impl Strategy<Value = (ConvShape, u64, usize)> {
    (1usize..4, 1usize..4, 1usize..4, 1usize..5, any::<u64>(), 2usize..20).prop_map(|(ci, co, k, d, seed, len)| {
        (ConvShape { in_channels: ci, out_channels: co, kernel: k, dilation: d }, seed, len)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_is_causal((shape, seed, len) in conv_strategy(), t in 0usize..20, bump in -3.0f64..3.0) {
        let t = t % len;
        let mut r = rng(seed);
        let w = (0..shape.weight_count()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b = (0..shape.out_channels).map(|_| r.gen_range(-1.0..1.0)).collect();
        let spec = ConvSpec::new(shape, w, b).unwrap();
        let x = random_input(shape.in_channels, len, seed ^ 1);
        let mut x2 = x.clone();
        let c = (seed as usize) % shape.in_channels;
        x2.set(c, t, x.get(c, t) + bump);
        let (y, y2) = (dilated_causal_conv(&x, &spec).unwrap(), dilated_causal_conv(&x2, &spec).unwrap());
        for o in 0..shape.out_channels {
            for s in 0..t {
                prop_assert_eq!(y.get(o, s), y2.get(o, s));
            }
        }
        prop_assert_eq!(y.length(), len);
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>()) {
        let (net, x) = layer_case("stack", seed);
        let again = layer_case("stack", seed).0;
        prop_assert_eq!(net.forward(&x).unwrap(), again.forward(&x).unwrap());
    }
}

#[test]
fn conv_matches_direct_sum() {
    // y[o, t] = b[o] + sum_i sum_j w[o, i, j] * x[i, t - d * j]
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let shape = ConvShape {
            in_channels: r.gen_range(1..4),
            out_channels: r.gen_range(1..4),
            kernel: r.gen_range(1..4),
            dilation: r.gen_range(1..4),
        };
        let spec = ConvSpec::new(
            shape,
            (0..shape.weight_count()).map(|_| r.gen_range(-1.0..1.0)).collect(),
            (0..shape.out_channels).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let x = random_input(shape.in_channels, 15, seed);
        let y = dilated_causal_conv(&x, &spec).unwrap();
        for o in 0..shape.out_channels {
            for t in 0..15 {
                let mut acc = spec.bias[o];
                for i in 0..shape.in_channels {
                    for j in 0..shape.kernel {
                        let back = shape.dilation * j;
                        if t >= back {
                            acc += spec.weight(o, i, j) * x.get(i, t - back);
                        }
                    }
                }
                assert!((acc - y.get(o, t)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let (net, x) = layer_case("stack", 5);
    let y64 = net.forward(&x).unwrap();
    let y32 = net.cast::<f32>().forward(&x.cast::<f32>()).unwrap();
    for (a, b) in y64.data().iter().zip(y32.data()) {
        assert!((a - *b as f64).abs() < 1e-4);
    }
}

fn largest_singular_value(w: &[f64], rows: usize, cols: usize) -> f64 {
    DMatrix::from_row_slice(rows, cols, w).singular_values().max()
}

#[test]
fn power_iteration_matches_svd() {
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let (rows, cols) = (r.gen_range(1..9), r.gen_range(1..9));
        let w: Vec<f64> = (0..rows * cols).map(|_| r.gen_range(-2.0..2.0)).collect();
        let mut u: Vec<f64> = (0..rows).map(|_| r.gen_range(0.1..1.0)).collect();
        let est = power_iteration(&w, rows, cols, &mut u, 500);
        let exact = largest_singular_value(&w, rows, cols);
        assert!((est - exact).abs() <= 1e-6 * exact.max(1.0), "{est} vs {exact}");
    }
}

#[test]
fn spectral_projection_bounds_every_layer() {
    let arch = [
        StageArch::block(3, 4, 3, 1, Activation::Relu),
        StageArch::block(4, 4, 3, 2, Activation::Relu),
        StageArch::Flatten,
        StageArch::dense(4 * 10, 1, Activation::Identity),
    ];
    let mut net = random_net(&arch, 3);
    // inflate the weights well past unit norm
    let p: Vec<f64> = net.flat_params().iter().map(|v| v * 7.0).collect();
    net.load_flat(&p).unwrap();
    let mut sn = SpectralConstraint::new(&net, 1);
    for _ in 0..5 {
        sn.project(&mut net);
    }
    for stage in net.stages() {
        let (w, rows, cols) = match stage {
            gaitguard::numcore::Stage::Block(b) => {
                let s = b.conv.shape;
                (b.conv.weights.clone(), s.out_channels, s.in_channels * s.kernel)
            }
            gaitguard::numcore::Stage::Dense(d) => (d.weights.clone(), d.outputs, d.inputs),
            _ => continue,
        };
        let sigma = largest_singular_value(&w, rows, cols);
        assert!(sigma <= 1.0 + 1e-3, "largest singular value {sigma}");
    }
}

#[test]
fn zero_network_outputs_bias_free_zeros() {
    let arch = [StageArch::block(2, 3, 2, 1, Activation::Tanh), StageArch::LastStep, StageArch::dense(3, 2, Activation::Identity)];
    let net = Network::<f64>::zeros(&arch).unwrap();
    let y = net.forward(&Tensor2::from_fn(2, 9, |c, s| (c * s) as f64)).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
}
