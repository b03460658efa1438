use detmip::balance::{
    assign_nodes, detect_critical, fit_linear, median, record_outcome, BalancerConfig,
    DiveFeatures, RecordOutcome, WorkloadModel,
};
use proptest::prelude::*;

fn makespan_brute(work: &[f64], k: usize) -> f64 {
    let mut best = f64::INFINITY;
    let total = k.pow(work.len() as u32);
    for code in 0..total {
        let mut loads = vec![0.0; k];
        let mut c = code;
        for w in work {
            loads[c % k] += w;
            c /= k;
        }
        best = best.min(loads.iter().cloned().fold(0.0, f64::max));
    }
    best
}

#[test]
fn mad_flags_only_the_outlier() {
    let r = detect_critical(&[1.0, 2.0, 3.0, 4.0, 100.0], &[10.0, 10.0], 0.25);
    assert_eq!(r.flagged, vec![false, false, false, false, true]);
    assert_eq!(r.threshold, 6.0);
    assert!(!r.rebalance);
}

#[test]
fn lpt_example_loads() {
    let preds: Vec<(u64, f64)> = [9.0, 5.0, 4.0, 3.0, 3.0].iter().copied().enumerate().map(|(i, w)| (i as u64, w)).collect();
    let a = assign_nodes(&preds, 2);
    assert_eq!(a.loads, vec![12.0, 12.0]);
}

#[test]
fn retrain_exactly_on_fifth_bad_prediction() {
    let mut m = WorkloadModel::new(BalancerConfig::default());
    let f = DiveFeatures::default();
    // APE exactly 0.5 never counts.
    for _ in 0..10 {
        assert_eq!(record_outcome(&mut m, &f, 150.0, 100.0), RecordOutcome::Ok);
    }
    for i in 1..=5 {
        let out = record_outcome(&mut m, &f, 300.0, 100.0);
        if i < 5 {
            assert_eq!(out, RecordOutcome::Ok);
        } else {
            assert_eq!(out, RecordOutcome::RetrainTriggered);
        }
    }
    assert_eq!(m.retrain_count, 1);
}

#[test]
fn ols_recovers_planted_hyperplane() {
    let w = [2.0, -1.5, 0.25, 4.0];
    let xs: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let i = i as f64;
            vec![i, (i * 7.0) % 11.0, (i * i) % 13.0, (i * 3.0) % 5.0]
        })
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| 3.0 + x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let model = fit_linear(&xs, &ys, 0.0, 1e-6);
    for (got, want) in model.weights().iter().zip(&w) {
        assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
    }
    assert!((model.raw_intercept() - 3.0).abs() <= 1e-6);
}

proptest! {
    #[test]
    fn lpt_is_within_four_thirds(work in prop::collection::vec(1u32..50, 1..8), k in 2usize..4) {
        let work: Vec<f64> = work.into_iter().map(f64::from).collect();
        let preds: Vec<(u64, f64)> = work.iter().copied().enumerate().map(|(i, w)| (i as u64, w)).collect();
        let a = assign_nodes(&preds, k);
        let mut seen: Vec<usize> = a.per_worker.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..work.len()).collect::<Vec<_>>());
        let lpt = a.loads.iter().cloned().fold(0.0, f64::max);
        let opt = makespan_brute(&work, k);
        prop_assert!(lpt <= opt * (4.0 / 3.0 - 1.0 / (3.0 * k as f64)) + 1e-9);
        prop_assert!((a.loads.iter().sum::<f64>() - work.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn mad_threshold_bounds_flags(values in prop::collection::vec(0.0f64..1000.0, 1..20)) {
        let r = detect_critical(&values, &[1.0], 0.25);
        let med = median(&values);
        prop_assert!(r.threshold >= med);
        for (v, f) in values.iter().zip(&r.flagged) {
            prop_assert_eq!(*f, *v > r.threshold);
        }
    }
}
