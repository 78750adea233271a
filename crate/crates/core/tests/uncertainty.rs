mod common;

use common::*;
use gaitguard::outlier::build_index;
use gaitguard::training::calibrate_threshold;
use gaitguard::uncertainty::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn median_filter_matches_sorting_oracle() {
    let mut r = rng(21);
    // heavy duplicates in half the stream, continuous values in the other
    let xs: Vec<f64> = (0..100_000)
        .map(|i| if i % 2 == 0 { r.gen_range(0..20) as f64 } else { r.gen_range(-1.0..1.0) })
        .collect();
    let oracle = sorted_running_median(&xs, DEFAULT_FILTER_WINDOW);
    let mut f = MedianFilterState::new(DEFAULT_FILTER_WINDOW);
    for (i, (&x, &want)) in xs.iter().zip(&oracle).enumerate() {
        assert_eq!(median_filter_push(&mut f, x), want, "index {i}");
    }
}

#[test]
fn step_response_delay_is_half_the_window() {
    let mut f = MedianFilterState::new(DEFAULT_FILTER_WINDOW);
    let onset = 300;
    let out: Vec<f64> = (0..600).map(|i| f.push(if i >= onset { 1.0 } else { 0.0 })).collect();
    let crossing = out.iter().position(|&y| y > 0.5).unwrap();
    assert_eq!(crossing - onset, 44);
    assert_eq!(crossing - onset, DEFAULT_FILTER_WINDOW / 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_is_causal(xs in prop::collection::vec(-5.0f64..5.0, 1..300), tail in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        let mut a = MedianFilterState::new(88);
        let mut b = MedianFilterState::new(88);
        let pa: Vec<f64> = xs.iter().map(|&x| a.push(x)).collect();
        let mut longer = xs.clone();
        longer.extend(tail);
        let pb: Vec<f64> = longer.iter().map(|&x| b.push(x)).collect();
        prop_assert_eq!(&pa[..], &pb[..xs.len()]);
    }

    #[test]
    fn ensemble_variance_matches_oracle_and_ignores_order(
        outs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..12),
        seed in any::<u64>(),
    ) {
        let s = ensemble_score(&outs).unwrap();
        let left: Vec<f64> = outs.iter().map(|o| o.0).collect();
        let right: Vec<f64> = outs.iter().map(|o| o.1).collect();
        let want = (population_variance(&left) + population_variance(&right)) / 2.0;
        prop_assert!((s - want).abs() <= 1e-15 + 1e-12 * want);
        prop_assert!(s >= 0.0);
        let mut shuffled = outs.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng(seed));
        prop_assert_eq!(ensemble_score(&shuffled).unwrap().to_bits(), s.to_bits());
    }

    #[test]
    fn ensemble_variance_is_exact_on_dyadic_inputs(
        outs in (1u32..4).prop_flat_map(|p| prop::collection::vec((-64i32..=64, -64i32..=64), 1usize << p)),
    ) {
        let outs: Vec<(f64, f64)> = outs.iter().map(|&(a, b)| (f64::from(a) / 64.0, f64::from(b) / 64.0)).collect();
        let (left, right): (Vec<f64>, Vec<f64>) = outs.iter().copied().unzip();
        let want = (population_variance(&left) + population_variance(&right)) / 2.0;
        prop_assert_eq!(ensemble_score(&outs).unwrap(), want);
    }

    #[test]
    fn calibration_is_an_exact_order_statistic(
        xs in prop::collection::vec(prop_oneof![0u8..10u8, any::<u8>()].prop_map(f64::from), 1..600),
        q in 0.01f64..1.0,
    ) {
        let c = calibrate_threshold(&xs, q).unwrap();
        prop_assert!(order_statistic_holds(&xs, q, c.threshold));
    }

    #[test]
    fn plain_gate_never_pairs_ood_with_torque(
        scores in prop::collection::vec(prop_oneof![Just(f64::NAN), 0.0f64..2.0], 1..200),
        thr in 0.0f64..2.0,
        torque in 0.0f64..40.0,
    ) {
        let mut g = Gate::new(GateConfig::new(thr, 1.0 / 17.5));
        for s in scores {
            let d = g.decide(s, [torque, torque * 0.5]);
            if d.ood {
                prop_assert_eq!(d.torque, [0.0, 0.0]);
            }
            prop_assert_eq!(d, gate(s, thr, [torque, torque * 0.5]));
        }
    }
}

#[test]
fn ensemble_fixture_from_worked_example() {
    // six members agree on 0, one says 7: variance 6 on the left head, 0 on the right
    let mut out = vec![(0.0, 0.5); 7];
    out[6].0 = 7.0;
    assert_eq!(ensemble_score(&out).unwrap(), 3.0);
}

#[test]
fn calibration_fixture() {
    let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
    let c = calibrate_threshold(&xs, 0.995).unwrap();
    assert_eq!(c.threshold, 995.0);
    assert!(!c.small_sample);
    let c = calibrate_threshold(&xs[..100], 0.995).unwrap();
    assert_eq!(c.threshold, 100.0);
    assert!(c.small_sample);
}

#[test]
fn tie_rule_and_nan() {
    assert!(!gate(1.0, 1.0, [5.0, 5.0]).ood);
    assert!(gate(1.0 + 1e-12, 1.0, [5.0, 5.0]).ood);
    assert!(gate(f64::NAN, 1.0, [5.0, 5.0]).ood);
    let mut cfg = GateConfig::new(1.0, 0.1);
    cfg.tie = TieRule::OutOfDistribution;
    assert!(cfg.is_ood(1.0));
}

#[test]
fn ramp_decays_monotonically_to_zero_within_ramp_time() {
    let period = 1.0 / 17.5;
    let mut cfg = GateConfig::new(0.5, period);
    cfg.ramp_seconds = Some(0.3);
    let mut g = Gate::new(cfg);
    for _ in 0..10 {
        g.decide(0.0, [10.0, 4.0]);
    }
    let mut prev = 10.0;
    let mut zero_at = None;
    for i in 1..=20 {
        let d = g.decide(1.0, [10.0, 4.0]);
        assert!(d.ood);
        assert!(d.torque[0] <= prev);
        prev = d.torque[0];
        if d.torque == [0.0, 0.0] && zero_at.is_none() {
            zero_at = Some(i);
        }
    }
    assert!(zero_at.unwrap() as f64 * period <= 0.3 + 1e-9);
}

#[test]
fn scorers_grow_with_anomaly() {
    // variance: spread members apart
    let tight = ensemble_score(&[(0.1, 0.1), (0.12, 0.1), (0.11, 0.09)]).unwrap();
    let spread = ensemble_score(&[(0.1, 0.1), (0.6, -0.4), (-0.3, 0.8)]).unwrap();
    assert!(spread > tight);
    // LOF: move away from the cluster
    let mut r = rng(2);
    let pts: Vec<f64> = (0..120).map(|_| r.gen_range(-1.0..1.0)).collect();
    let idx = build_index(pts, 2, 10).unwrap();
    assert!(latent_score(&idx, &[5.0, 5.0]).unwrap() > latent_score(&idx, &[0.0, 0.0]).unwrap());
    // GAN: lower belief in "real"
    assert!(gan_score(0.1).unwrap() > gan_score(0.9).unwrap());
}

#[test]
fn records_round_trip_as_json_lines() {
    let rec = DecisionRecord {
        format_version: RECORD_FORMAT_VERSION,
        segment: 1,
        window_index: 3,
        timestamp: 1.25,
        raw: 0.5,
        filtered: 0.25,
        threshold: 0.3,
        ood: false,
        torque_l: 4.0,
        torque_r: 0.0,
        phase_l: 0.6,
        phase_r: 0.1,
        source: ControlSource::Phase,
    };
    let mut bad = rec.clone();
    bad.ood = true;
    let mut buf = Vec::new();
    write_records(&mut buf, &[rec.clone(), bad.clone()]).unwrap();
    let back = read_records(&buf[..]).unwrap();
    assert_eq!(back, vec![rec, bad.clone()]);
    assert_eq!(unsafe_records(&back), vec![&bad]);
}
