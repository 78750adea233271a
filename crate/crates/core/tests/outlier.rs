mod common;

use common::*;
use gaitguard::outlier::{build_index, lof_score, LofIndex};
use proptest::prelude::*;
use rand::Rng;

fn index_of(rows: &[Vec<f64>], k: usize) -> LofIndex<f64> {
    build_index(rows.concat(), rows[0].len(), k).unwrap()
}

#[test]
fn matches_brute_force_on_random_instances() {
    for seed in 0..120u64 {
        let (rows, queries, k) = lof_instance(seed);
        let idx = index_of(&rows, k);
        for q in &queries {
            let (a, b) = (lof_score(&idx, q).unwrap(), brute_lof(&rows, q, k));
            assert!((a - b).abs() <= 1e-9 * b.abs(), "seed {seed}: {a} vs {b}");
        }
        for i in 0..rows.len() {
            let (a, b) = (idx.reference_lof(i), brute_reference_lof(&rows, i, k));
            assert!((a - b).abs() <= 1e-9 * b.abs(), "seed {seed} point {i}: {a} vs {b}");
        }
    }
}

#[test]
fn tied_distances_join_the_neighborhood() {
    // a square lattice has many exact ties
    let rows: Vec<Vec<f64>> = (0..5).flat_map(|i| (0..5).map(move |j| vec![i as f64, j as f64])).collect();
    let idx = index_of(&rows, 3);
    for q in [[2.0, 2.0], [0.5, 0.5], [7.0, -1.0], [2.0, 2.5]] {
        let (a, b) = (idx.score(&q).unwrap(), brute_lof(&rows, &q, 3));
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }
}

#[test]
fn duplicates_stay_finite() {
    let mut rows = vec![vec![0.0, 0.0]; 6];
    rows.extend((0..6).map(|i| vec![i as f64 + 1.0, 0.5]));
    let idx = index_of(&rows, 3);
    assert!(idx.score(&[0.0, 0.0]).unwrap().is_finite());
    assert!(idx.score(&[30.0, 0.0]).unwrap() > 1.0);
}

#[test]
fn cluster_inliers_near_one_outliers_high() {
    let mut r = rng(9);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let idx = index_of(&rows, 20);
    let inlier = idx.score(&[0.0, 0.1, -0.1]).unwrap();
    assert!((0.8..1.3).contains(&inlier), "{inlier}");
    assert!(idx.score(&[6.0, 6.0, 6.0]).unwrap() > 3.0);
}

#[test]
fn monotone_beyond_the_k_distance_shell() {
    let mut r = rng(4);
    for trial in 0..10 {
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..2).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let idx = index_of(&rows, 5);
        let angle = trial as f64 * 0.6;
        let dir = [angle.cos(), angle.sin()];
        let mut prev = 0.0;
        // from radius 3 outward every query sees the same k nearest shell
        for step in 0..40 {
            let rad = 3.0 + step as f64 * 0.5;
            let s = idx.score(&[dir[0] * rad, dir[1] * rad]).unwrap();
            assert!(s >= prev, "trial {trial} radius {rad}: {s} < {prev}");
            prev = s;
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(build_index(vec![0.0; 10], 2, 5).is_err());
    assert!(build_index(vec![0.0; 9], 2, 2).is_err());
    assert!(build_index(vec![1.0, 2.0, f64::NAN, 0.0, 3.0, 3.0, 5.0, 1.0], 2, 2).is_err());
    let idx = build_index((0..20).map(f64::from).collect(), 2, 3).unwrap();
    assert!(idx.score(&[1.0]).is_err());
    assert!(idx.score(&[1.0, f64::INFINITY]).is_err());
}

fn rotate(p: &[f64], theta: f64) -> Vec<f64> {
    // rotate the first two coordinates, keep the rest
    let mut q = p.to_vec();
    if q.len() >= 2 {
        let (c, s) = (theta.cos(), theta.sin());
        q[0] = c * p[0] - s * p[1];
        q[1] = s * p[0] + c * p[1];
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn translation_and_rotation_invariant(seed in any::<u64>(), shift in -50.0f64..50.0, theta in 0.0f64..6.283) {
        let (rows, queries, k) = lof_instance(seed);
        let base = index_of(&rows, k);
        let moved: Vec<Vec<f64>> = rows.iter().map(|p| rotate(p, theta).iter().map(|v| v + shift).collect()).collect();
        let idx = index_of(&moved, k);
        for q in &queries {
            let q2: Vec<f64> = rotate(q, theta).iter().map(|v| v + shift).collect();
            let (a, b) = (base.score(q).unwrap(), idx.score(&q2).unwrap());
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }
}
