mod common;

use common::*;
use febaa::evaluation::{
    self, generate_splits, linear_evaluate, mean_std, micro_f1, EvalConfig, EvalResult,
};
use febaa::seed;
use proptest::prelude::*;

proptest! {
    #[test]
    fn micro_f1_equals_accuracy(pairs in prop::collection::vec((0usize..7, 0usize..7), 1..300)) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let correct = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
        prop_assert_eq!(micro_f1(&pred, &truth).unwrap(), correct as f64 / pred.len() as f64);
    }

    #[test]
    fn mean_std_is_recomputable(values in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let r = EvalResult::from_scores(values.clone());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!((r.mean_f1 - mean).abs() < 1e-9);
        prop_assert!((r.std_f1 - std).abs() < 1e-9);
        prop_assert_eq!(mean_std(&values), (r.mean_f1, r.std_f1));
        prop_assert_eq!(r.per_split_scores, values);
    }
}

/// Embeddings independent of balanced labels score 100/C within three
/// binomial standard deviations of the test-set accuracy.
#[test]
fn random_embeddings_score_near_chance() {
    let n = 400;
    for c in [2usize, 4] {
        let mut rng = seed::rng(77 + c as u64);
        let h = random_matrix(n, 8, &mut rng);
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        let splits = generate_splits(n, 0.1, 20, 1).unwrap();
        let r = linear_evaluate(&h, &labels, &splits, &EvalConfig::default()).unwrap();
        let p = 1.0 / c as f64;
        let sigma = 100.0 * (p * (1.0 - p) / splits.splits[0].test.len() as f64).sqrt();
        assert!(
            (r.mean_f1 - 100.0 * p).abs() <= 3.0 * sigma,
            "C={c}: {r}, σ={sigma:.2}"
        );
    }
}

#[test]
fn splits_partition_nodes_and_depend_on_seed() {
    let a = generate_splits(50, 0.2, 4, 9).unwrap();
    for s in &a.splits {
        assert_eq!(s.train.len(), 10);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }
    assert_eq!(a, generate_splits(50, 0.2, 4, 9).unwrap());
    assert_ne!(a.splits, generate_splits(50, 0.2, 4, 10).unwrap().splits);
}

#[test]
fn logreg_objective_decreases_from_zero_init() {
    let mut rng = seed::rng(2);
    let x = random_matrix(40, 3, &mut rng);
    let y: Vec<usize> = (0..40)
        .map(|i| usize::from(x[(i, 0)] + x[(i, 1)] > 0.0))
        .collect();
    let zero = evaluation::LogisticRegression::zeros(3, 2);
    let fit = evaluation::fit_logreg(&x, &y, 2, 1e-3, 300).unwrap();
    let before = zero.objective(&x, &y, 1e-3).unwrap();
    let after = fit.objective(&x, &y, 1e-3).unwrap();
    assert!(after < before, "{before} -> {after}");
    let acc = micro_f1(&fit.predict(&x).unwrap(), &y).unwrap();
    assert!(acc > 0.9, "{acc}");
}
