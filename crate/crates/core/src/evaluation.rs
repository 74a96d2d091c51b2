//! Linear evaluation of frozen embeddings: an L2-regularized multinomial
//! logistic regression fit on a random split of the labeled nodes, scored by
//! micro-averaged F1, repeated over independent splits.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub num_splits: usize,
    /// Weight of the `|W|²` penalty.
    pub l2: f64,
    pub iters: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.1,
            num_splits: 20,
            l2: 1e-3,
            iters: 500,
        }
    }
}

impl EvalConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            out.push(format!(
                "eval.train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self.num_splits == 0 {
            out.push("eval.num_splits must be at least 1".into());
        }
        if !(self.l2 >= 0.0) {
            out.push(format!("eval.l2 must be non-negative, got {}", self.l2));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub splits: Vec<Split>,
    pub train_fraction: f64,
    pub seed: u64,
}

/// Draws `n_splits` independent train/test partitions of `0..num_labeled`.
/// Each train part holds `round(train_fraction * num_labeled)` nodes.
pub fn generate_splits(
    num_labeled: usize,
    train_fraction: f64,
    n_splits: usize,
    seed: u64,
) -> Result<SplitSet> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    if n_splits == 0 {
        return Err(Error::DegenerateSplit("zero splits requested".into()));
    }
    let train_size = (train_fraction * num_labeled as f64 + 0.5).floor() as usize;
    if train_size == 0 || train_size >= num_labeled {
        return Err(Error::DegenerateSplit(format!(
            "{train_size} of {num_labeled} nodes in the training part"
        )));
    }
    let splits = (0..n_splits)
        .map(|s| {
            let mut rng = seed::rng_for(seed, &[seed::TAG_SPLIT, s as u64]);
            let mut order: Vec<usize> = (0..num_labeled).collect();
            order.shuffle(&mut rng);
            let mut train = order[..train_size].to_vec();
            let mut test = order[train_size..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect();
    Ok(SplitSet {
        splits,
        train_fraction,
        seed,
    })
}

/// Multinomial logistic regression weights: `logits = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LogisticRegression {
    pub fn zeros(dim: usize, num_classes: usize) -> Self {
        Self {
            weights: Matrix::zeros(dim, num_classes),
            bias: vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    /// Row-wise class probabilities.
    pub fn probabilities(&self, x: &Matrix) -> Result<Matrix> {
        let mut logits = x.matmul(&self.weights)?;
        for i in 0..logits.rows() {
            let row = logits.row_mut(i);
            for (l, b) in row.iter_mut().zip(&self.bias) {
                *l += b;
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for l in row.iter_mut() {
                *l = (*l - max).exp();
                sum += *l;
            }
            for l in row.iter_mut() {
                *l /= sum;
            }
        }
        Ok(logits)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.probabilities(x)?;
        Ok((0..p.rows())
            .map(|i| {
                let row = p.row(i);
                (0..row.len()).fold(0, |best, c| if row[c] > row[best] { c } else { best })
            })
            .collect())
    }

    /// Mean cross-entropy plus `l2 * |W|²` (bias unpenalized).
    pub fn objective(&self, x: &Matrix, y: &[usize], l2: f64) -> Result<f64> {
        let p = self.probabilities(x)?;
        let ce: f64 = y
            .iter()
            .enumerate()
            .map(|(i, &c)| -p[(i, c)].max(f64::MIN_POSITIVE).ln())
            .sum();
        Ok(ce / y.len() as f64 + l2 * self.weights.frobenius_sq())
    }

    /// Gradient of [`Self::objective`] as `(dW, db)`.
    pub fn gradient(&self, x: &Matrix, y: &[usize], l2: f64) -> Result<(Matrix, Vec<f64>)> {
        let mut residual = self.probabilities(x)?;
        let inv_n = 1.0 / y.len() as f64;
        for (i, &c) in y.iter().enumerate() {
            residual[(i, c)] -= 1.0;
        }
        let mut d_w = x.t_matmul(&residual)?.scale(inv_n);
        d_w.add_scaled(&self.weights, 2.0 * l2);
        let mut d_b = vec![0.0; self.num_classes()];
        for i in 0..residual.rows() {
            for (d, r) in d_b.iter_mut().zip(residual.row(i)) {
                *d += r;
            }
        }
        for d in &mut d_b {
            *d *= inv_n;
        }
        Ok((d_w, d_b))
    }
}

/// Full-batch gradient descent from zero weights for a fixed number of iterations.
///
/// The step is `1 / L` for the smoothness bound `L = mean|[x, 1]|² / 2 + 2 * l2`.
pub fn fit_logreg(
    x: &Matrix,
    y: &[usize],
    num_classes: usize,
    l2: f64,
    iters: usize,
) -> Result<LogisticRegression> {
    if y.is_empty() || x.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows with {} labels",
            x.rows(),
            y.len()
        )));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::DimensionMismatch(format!(
            "label {c} with {num_classes} classes"
        )));
    }
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::SingleClass);
    }
    let mean_sq = (0..x.rows())
        .map(|i| 1.0 + x.row(i).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / x.rows() as f64;
    let step = 1.0 / (0.5 * mean_sq + 2.0 * l2);

    let mut model = LogisticRegression::zeros(x.cols(), num_classes);
    for _ in 0..iters {
        let (d_w, d_b) = model.gradient(x, y, l2)?;
        model.weights.add_scaled(&d_w, -step);
        for (b, d) in model.bias.iter_mut().zip(&d_b) {
            *b -= step * d;
        }
    }
    Ok(model)
}

/// Micro-averaged F1: `2 TP / (2 TP + FP + FN)` summed over classes.
pub fn micro_f1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let classes = predictions.iter().chain(truth).max().map_or(0, |&m| m + 1);
    let (mut tp, mut fp, mut fn_) = (
        vec![0u64; classes],
        vec![0u64; classes],
        vec![0u64; classes],
    );
    for (&p, &t) in predictions.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let tp: u64 = tp.iter().sum();
    let fp: u64 = fp.iter().sum();
    let fn_: u64 = fn_.iter().sum();
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Mean and standard deviation of per-split micro-F1, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub mean_f1: f64,
    pub std_f1: f64,
    pub per_split_scores: Vec<f64>,
}

impl EvalResult {
    pub fn from_scores(per_split_scores: Vec<f64>) -> Self {
        let (mean_f1, std_f1) = mean_std(&per_split_scores);
        Self {
            mean_f1,
            std_f1,
            per_split_scores,
        }
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean_f1, self.std_f1)
    }
}

/// Mean and population standard deviation. Empty input gives `(NaN, NaN)`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes columns with statistics from `fit_rows`; constant columns are only centred.
fn standardize(h: &Matrix, fit_rows: &[usize]) -> Matrix {
    let n = fit_rows.len() as f64;
    let mut out = h.clone();
    for j in 0..h.cols() {
        let mean = fit_rows.iter().map(|&i| h[(i, j)]).sum::<f64>() / n;
        let var = fit_rows
            .iter()
            .map(|&i| (h[(i, j)] - mean).powi(2))
            .sum::<f64>()
            / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..h.rows() {
            out[(i, j)] = (h[(i, j)] - mean) / std;
        }
    }
    out
}

/// Fits one classifier per split on frozen embeddings and scores the test part.
pub fn linear_evaluate(
    h: &Matrix,
    labels: &[usize],
    splits: &SplitSet,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    if h.rows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} embeddings for {} labels",
            h.rows(),
            labels.len()
        )));
    }
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut scores = Vec::with_capacity(splits.splits.len());
    for split in &splits.splits {
        let z = standardize(h, &split.train);
        let y_train: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
        let model = fit_logreg(
            &z.select_rows(&split.train),
            &y_train,
            num_classes,
            cfg.l2,
            cfg.iters,
        )?;
        let predicted = model.predict(&z.select_rows(&split.test))?;
        let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
        scores.push(100.0 * micro_f1(&predicted, &truth)?);
    }
    Ok(EvalResult::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_partition() {
        let s = generate_splits(10, 0.8, 1, 3).unwrap();
        let split = &s.splits[0];
        assert_eq!((split.train.len(), split.test.len()), (8, 2));
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn twenty_distinct_splits() {
        let s = generate_splits(100, 0.1, 20, 5).unwrap();
        assert_eq!(s.splits.len(), 20);
        for a in 0..20 {
            for b in a + 1..20 {
                assert_ne!(s.splits[a], s.splits[b]);
            }
        }
        assert_eq!(s, generate_splits(100, 0.1, 20, 5).unwrap());
    }

    #[test]
    fn degenerate_splits_rejected() {
        assert!(generate_splits(3, 0.1, 1, 0).is_err());
        assert!(generate_splits(3, 0.99, 1, 0).is_err());
        assert!(generate_splits(10, 1.0, 1, 0).is_err());
        assert!(generate_splits(10, 0.5, 0, 0).is_err());
    }

    #[test]
    fn separable_toy_set_fits_perfectly() {
        let x = Matrix::from_rows(&[
            vec![2.0, 1.0],
            vec![1.5, 2.0],
            vec![3.0, 0.5],
            vec![-2.0, -1.0],
            vec![-1.0, -2.5],
            vec![-3.0, 0.2],
        ])
        .unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let model = fit_logreg(&x, &y, 2, 0.0, 500).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn heavy_regularization_shrinks_weights() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let y = [0, 1, 1];
        let model = fit_logreg(&x, &y, 2, 1e6, 500).unwrap();
        assert!(model.weights.as_slice().iter().all(|w| w.abs() < 1e-6));
        // with W ~ 0 the bias alone tilts every prediction to the majority class
        assert_eq!(model.predict(&x).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::zeros(3, 2);
        assert!(matches!(
            fit_logreg(&x, &[1, 1, 1], 2, 0.1, 10),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn micro_f1_cases() {
        assert_eq!(micro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(micro_f1(&[1, 2, 0], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(micro_f1(&[0, 1, 2, 2], &[0, 1, 2, 1]).unwrap(), 0.75);
        assert!(matches!(micro_f1(&[], &[]), Err(Error::EmptyInput)));
        assert!(micro_f1(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn one_hot_embeddings_score_perfectly() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&c| (0..3).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
            .collect();
        let h = Matrix::from_rows(&rows).unwrap();
        let splits = generate_splits(60, 0.2, 5, 1).unwrap();
        let r = linear_evaluate(&h, &labels, &splits, &EvalConfig::default()).unwrap();
        assert_eq!(r.mean_f1, 100.0);
        assert_eq!(r.std_f1, 0.0);
        assert_eq!(r.to_string(), "100.00±0.00");
    }
}
