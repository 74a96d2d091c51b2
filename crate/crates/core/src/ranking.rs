//! Feature influence ranking.
//!
//! Each feature is scored by masking its column alone and handing the masked
//! graph to a pluggable scorer (by default: contrastive pre-training followed
//! by linear evaluation). Scores are averaged over rounds and sorted ascending,
//! so the front of the ranking holds the features whose removal hurts most.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{self, EvalConfig};
use crate::gcl::{self, TrainConfig};
use crate::graph::AttributedGraph;
use crate::matrix::Matrix;
use crate::seed;

pub const CSV_HEADER: &str = "rank,feature_index,mean_score";

/// Features sorted ascending by mean score, ties broken by feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    entries: Vec<(usize, f64)>,
    rounds: usize,
    epochs_per_run: usize,
}

impl FeatureRanking {
    /// Sorts per-feature mean scores (indexed by feature) into a ranking.
    pub fn from_scores(mean_scores: &[f64], rounds: usize, epochs_per_run: usize) -> Self {
        let mut entries: Vec<(usize, f64)> = mean_scores.iter().copied().enumerate().collect();
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Self {
            entries,
            rounds,
            epochs_per_run,
        }
    }

    /// Validates already-ordered entries: a permutation of `0..F` with non-decreasing scores.
    pub fn from_entries(
        entries: Vec<(usize, f64)>,
        rounds: usize,
        epochs_per_run: usize,
    ) -> Result<Self> {
        let f = entries.len();
        let mut seen = vec![false; f];
        for &(j, score) in &entries {
            if j >= f {
                return Err(Error::InvalidRanking(format!(
                    "feature index {j} outside 0..{f}"
                )));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidRanking(format!(
                    "duplicate feature index {j}"
                )));
            }
            if !score.is_finite() {
                return Err(Error::InvalidRanking(format!(
                    "non-finite score for feature {j}"
                )));
            }
        }
        for w in entries.windows(2) {
            let ((ja, sa), (jb, sb)) = (w[0], w[1]);
            if sb < sa || (sb == sa && jb < ja) {
                return Err(Error::InvalidRanking(format!(
                    "entries not sorted: feature {jb} ({sb}) follows feature {ja} ({sa})"
                )));
            }
        }
        Ok(Self {
            entries,
            rounds,
            epochs_per_run,
        })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Feature indices in rank order.
    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|&(j, _)| j).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn epochs_per_run(&self) -> usize {
        self.epochs_per_run
    }

    /// Zero-based rank of feature `j`.
    pub fn rank_of(&self, j: usize) -> Option<usize> {
        self.entries.iter().position(|&(f, _)| f == j)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# rounds={} epochs_per_run={}\n{CSV_HEADER}\n",
            self.rounds, self.epochs_per_run
        );
        for (rank, (j, score)) in self.entries.iter().enumerate() {
            writeln!(out, "{rank},{j},{score}").unwrap();
        }
        out
    }

    /// Parses the CSV form. The leading `# rounds=.. epochs_per_run=..` line is
    /// optional; without it both counts are 0.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::InvalidRanking(format!("line {line}: {msg}"));
        let mut rounds = 0;
        let mut epochs = 0;
        let mut header_seen = false;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() {
                continue;
            }
            if let Some(meta) = content.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("rounds", v)) => {
                            rounds = v.parse().map_err(|e| bad(line, format!("rounds: {e}")))?
                        }
                        Some(("epochs_per_run", v)) => {
                            epochs = v
                                .parse()
                                .map_err(|e| bad(line, format!("epochs_per_run: {e}")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if content != CSV_HEADER {
                    return Err(bad(line, format!("expected header {CSV_HEADER:?}")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad(
                    line,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            let rank: usize = fields[0]
                .parse()
                .map_err(|e| bad(line, format!("rank: {e}")))?;
            if rank != entries.len() {
                return Err(bad(
                    line,
                    format!("expected rank {}, found {rank}", entries.len()),
                ));
            }
            let j: usize = fields[1]
                .parse()
                .map_err(|e| bad(line, format!("feature_index: {e}")))?;
            let score: f64 = fields[2]
                .parse()
                .map_err(|e| bad(line, format!("mean_score: {e}")))?;
            entries.push((j, score));
        }
        if !header_seen {
            return Err(Error::InvalidRanking("missing header".into()));
        }
        Self::from_entries(entries, rounds, epochs)
    }
}

pub fn save_ranking(ranking: &FeatureRanking, path: &Path) -> Result<()> {
    fs::write(path, ranking.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn load_ranking(path: &Path) -> Result<FeatureRanking> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FeatureRanking::from_csv(&text)
}

/// Pre-training iteration budget `F * i * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankingBudget {
    pub total_iterations: u64,
    pub num_features: u64,
    pub epochs: u64,
    pub rounds: u64,
}

impl RankingBudget {
    /// Number of scorer invocations: one per (round, feature).
    pub fn scorer_calls(&self) -> u64 {
        self.num_features * self.rounds
    }
}

pub fn pretraining_budget(num_features: usize, epochs: usize, rounds: usize) -> RankingBudget {
    let (f, i, n) = (num_features as u64, epochs as u64, rounds as u64);
    RankingBudget {
        total_iterations: f * i * n,
        num_features: f,
        epochs: i,
        rounds: n,
    }
}

/// Copy of `x` with column `j` zeroed.
pub fn mask_single_feature(x: &Matrix, j: usize) -> Result<Matrix> {
    if j >= x.cols() {
        return Err(Error::FeatureOutOfRange {
            index: j,
            num_features: x.cols(),
        });
    }
    let mut out = x.clone();
    out.zero_column(j);
    Ok(out)
}

/// One scorer invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringTask {
    /// 1-based round.
    pub round: usize,
    pub feature: usize,
    pub epochs: usize,
    /// Seed unique to (round, feature).
    pub seed: u64,
    /// Seed shared by every feature within a round; used for the evaluation split.
    pub split_seed: u64,
}

/// Maps a graph with one column masked to an accuracy-like scalar (lower means
/// the masked feature mattered more).
pub trait FeatureScorer: Sync {
    fn score(&self, masked: &AttributedGraph, task: &ScoringTask) -> Result<f64>;
}

impl<F> FeatureScorer for F
where
    F: Fn(&AttributedGraph, &ScoringTask) -> Result<f64> + Sync,
{
    fn score(&self, masked: &AttributedGraph, task: &ScoringTask) -> Result<f64> {
        self(masked, task)
    }
}

/// Runs `rounds` passes over all features, averages per feature and sorts.
///
/// The scorer is called exactly `F * rounds` times.
pub fn rank_features(
    graph: &AttributedGraph,
    scorer: &dyn FeatureScorer,
    epochs: usize,
    rounds: usize,
    base_seed: u64,
) -> Result<FeatureRanking> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let f = graph.num_features();
    let mut sums = vec![0.0; f];
    for round in 1..=rounds {
        let split_seed = seed::derive(base_seed, &[seed::TAG_RANKING, round as u64]);
        for (feature, sum) in sums.iter_mut().enumerate() {
            let task = ScoringTask {
                round,
                feature,
                epochs,
                seed: seed::derive(
                    base_seed,
                    &[seed::TAG_RANKING, round as u64, feature as u64],
                ),
                split_seed,
            };
            let masked = graph.with_features(mask_single_feature(graph.features(), feature)?);
            let score = scorer
                .score(&masked, &task)
                .and_then(|s| {
                    if s.is_finite() {
                        Ok(s)
                    } else {
                        Err(Error::InvalidRanking(format!("non-finite score {s}")))
                    }
                })
                .map_err(|e| Error::Scorer {
                    round,
                    feature,
                    source: Box::new(e),
                })?;
            *sum += score;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / rounds as f64).collect();
    Ok(FeatureRanking::from_scores(&means, rounds, epochs))
}

/// Analytic stand-in scorer: the total column variance left after masking.
///
/// Masking a high-variance column lowers the score most, so the ranking is the
/// columns in descending variance order (the order of negative column variance).
#[derive(Debug, Clone, Copy, Default)]
pub struct VarianceScorer;

pub fn column_variance(x: &Matrix, j: usize) -> f64 {
    let n = x.rows();
    if n == 0 {
        return 0.0;
    }
    let col = x.column(j);
    let mean = col.iter().sum::<f64>() / n as f64;
    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
}

impl FeatureScorer for VarianceScorer {
    fn score(&self, masked: &AttributedGraph, _task: &ScoringTask) -> Result<f64> {
        let x = masked.features();
        Ok((0..x.cols()).map(|j| column_variance(x, j)).sum())
    }
}

/// Default scorer: short contrastive pre-training, then linear evaluation.
///
/// Returns the mean micro-F1 as a fraction in [0, 1].
#[derive(Debug, Clone)]
pub struct GclScorer {
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl GclScorer {
    pub fn new(train: TrainConfig, eval: EvalConfig) -> Self {
        Self { train, eval }
    }
}

impl FeatureScorer for GclScorer {
    fn score(&self, masked: &AttributedGraph, task: &ScoringTask) -> Result<f64> {
        let labels = masked.labels().ok_or(Error::LabelsRequired)?;
        let cfg = TrainConfig {
            epochs: task.epochs,
            seed: task.seed,
            ..self.train.clone()
        };
        let run = gcl::train(masked, None, &cfg)?;
        let splits = evaluation::generate_splits(
            labels.len(),
            self.eval.train_fraction,
            self.eval.num_splits,
            task.split_seed,
        )?;
        let result = evaluation::linear_evaluate(&run.embeddings, labels, &splits, &self.eval)?;
        Ok(result.mean_f1 / 100.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn graph(x: Matrix) -> AttributedGraph {
        AttributedGraph::new(x, &[], None).unwrap()
    }

    #[test]
    fn mask_single_feature_cases() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = mask_single_feature(&x, 0).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 2.0, 0.0, 4.0]);
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mask_single_feature(&out, 0).unwrap(), out);
        assert!(matches!(
            mask_single_feature(&x, 2),
            Err(Error::FeatureOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn constant_scorer_yields_identity_order() {
        let g = graph(Matrix::zeros(3, 6));
        let calls = AtomicUsize::new(0);
        let scorer = |_: &AttributedGraph, _: &ScoringTask| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok(0.5)
        };
        let r = rank_features(&g, &scorer, 4, 3, 9).unwrap();
        assert_eq!(r.order(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(calls.load(Ordering::Relaxed), 18);
        assert_eq!((r.rounds(), r.epochs_per_run()), (3, 4));
    }

    #[test]
    fn variance_stub_orders_by_descending_variance() {
        // column variances: 0, 4, 1, 9 (population)
        let x =
            Matrix::from_rows(&[vec![5.0, -2.0, 1.0, -3.0], vec![5.0, 2.0, -1.0, 3.0]]).unwrap();
        let r = rank_features(&graph(x), &VarianceScorer, 1, 1, 0).unwrap();
        assert_eq!(r.order(), vec![3, 1, 2, 0]);
    }

    #[test]
    fn scorer_failure_names_the_pair() {
        let g = graph(Matrix::zeros(2, 3));
        let scorer = |_: &AttributedGraph, t: &ScoringTask| {
            if t.round == 2 && t.feature == 1 {
                Err(Error::EmptyInput)
            } else {
                Ok(0.0)
            }
        };
        let err = rank_features(&g, &scorer, 1, 3, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::Scorer {
                round: 2,
                feature: 1,
                ..
            }
        ));
    }

    #[test]
    fn budget_products() {
        assert_eq!(pretraining_budget(1433, 150, 3).total_iterations, 644_850);
        assert_eq!(pretraining_budget(1, 1, 1).total_iterations, 1);
        assert_eq!(pretraining_budget(300, 150, 3).total_iterations, 135_000);
        assert_eq!(pretraining_budget(1433, 150, 3).scorer_calls(), 4299);
    }

    #[test]
    fn golden_csv_parses() {
        let text = "rank,feature_index,mean_score\n0,2,0.25\n1,0,0.5\n2,1,0.5\n";
        let r = FeatureRanking::from_csv(text).unwrap();
        assert_eq!(r.entries(), &[(2, 0.25), (0, 0.5), (1, 0.5)]);
        assert_eq!(r.rounds(), 0);
    }

    #[test]
    fn malformed_csv_rejected() {
        let missing = "rank,feature_index,mean_score\n0,0,0.1\n1,2,0.2\n";
        assert!(FeatureRanking::from_csv(missing).is_err());
        let dup = "rank,feature_index,mean_score\n0,0,0.1\n1,0,0.2\n";
        assert!(FeatureRanking::from_csv(dup).is_err());
        let unsorted = "rank,feature_index,mean_score\n0,0,0.3\n1,1,0.2\n";
        assert!(FeatureRanking::from_csv(unsorted).is_err());
        let tie_order = "rank,feature_index,mean_score\n0,1,0.2\n1,0,0.2\n";
        assert!(FeatureRanking::from_csv(tie_order).is_err());
        assert!(FeatureRanking::from_csv("0,0,0.1\n").is_err());
    }
}
