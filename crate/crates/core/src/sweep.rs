//! Grid analysis over feature masking ratio, masking probability and starting
//! position, L-vs-M win counting, and the edge-drop ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::augmentation::{Position, SelectionMode, ViewConfig};
use crate::error::{Error, Result};
use crate::evaluation::{self, mean_std, EvalConfig};
use crate::gcl::{self, TrainConfig};
use crate::graph::AttributedGraph;
use crate::ranking::FeatureRanking;
use crate::seed;

pub const TABLE_HEADER: &str = "ratio,probability,pos,mean_f1,std_f1,runs";
pub const PLOT_HEADER: &str = "ratio,probability,mean_f1,std_f1";

/// Which of the two training views carries the adaptive (grid) settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptiveView {
    #[serde(rename = "view1")]
    View1,
    #[serde(rename = "view2")]
    View2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub ratios: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub positions: Vec<Position>,
    pub runs_per_cell: usize,
    pub base: TrainConfig,
    pub eval: EvalConfig,
    pub adaptive_view: AdaptiveView,
    pub seed: u64,
}

impl SweepGrid {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.ratios.is_empty() || self.probabilities.is_empty() || self.positions.is_empty() {
            out.push("sweep grid must be non-empty in every dimension".to_string());
        }
        for (name, values) in [
            ("ratios", &self.ratios),
            ("probabilities", &self.probabilities),
        ] {
            for v in values {
                if !(0.0..=1.0).contains(v) {
                    out.push(format!("sweep.{name} value {v} outside [0, 1]"));
                }
            }
        }
        if self.runs_per_cell == 0 {
            out.push("sweep.runs must be at least 1".to_string());
        }
        out
    }

    /// Cells in ratio-major, then probability, then position order.
    pub fn cells(&self) -> Vec<(f64, f64, Position)> {
        let mut out = Vec::new();
        for &r in &self.ratios {
            for &p in &self.probabilities {
                for &pos in &self.positions {
                    out.push((r, p, pos));
                }
            }
        }
        out
    }

    /// Training config for one cell: the adaptive view switches to influential
    /// selection with the cell's settings, keeping its edge drop probability.
    pub fn cell_config(&self, ratio: f64, probability: f64, pos: Position) -> TrainConfig {
        let mut cfg = self.base.clone();
        let view = match self.adaptive_view {
            AdaptiveView::View1 => &mut cfg.view1,
            AdaptiveView::View2 => &mut cfg.view2,
        };
        *view = ViewConfig {
            selection_mode: SelectionMode::Influential,
            feature_masking_ratio: ratio,
            feature_masking_probability: probability,
            starting_position: Some(pos),
            edge_drop_probability: view.edge_drop_probability,
            rng_seed: view.rng_seed,
        };
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub probability: f64,
    pub pos: Position,
    pub mean_f1: f64,
    pub std_f1: f64,
    /// Mean micro-F1 (percent) of each completed run.
    pub scores: Vec<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn runs(&self) -> usize {
        self.scores.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// Train on `graph` with `cfg` (seed overridden) and return the mean micro-F1
/// over the evaluation splits drawn from the same seed.
pub fn train_and_evaluate(
    graph: &AttributedGraph,
    ranking: Option<&FeatureRanking>,
    cfg: &TrainConfig,
    eval: &EvalConfig,
    run_seed: u64,
) -> Result<f64> {
    let labels = graph.labels().ok_or(Error::LabelsRequired)?;
    let cfg = TrainConfig {
        seed: run_seed,
        ..cfg.clone()
    };
    let run = gcl::train(graph, ranking, &cfg)?;
    let splits =
        evaluation::generate_splits(labels.len(), eval.train_fraction, eval.num_splits, run_seed)?;
    Ok(evaluation::linear_evaluate(&run.embeddings, labels, &splits, eval)?.mean_f1)
}

pub fn run_seed(sweep_seed: u64, cell: usize, run: usize) -> u64 {
    seed::derive(sweep_seed, &[seed::TAG_SWEEP, cell as u64, run as u64])
}

/// Trains and evaluates every cell `runs_per_cell` times. A failing run marks
/// its cell with the error and the sweep moves on.
pub fn run_sweep(
    graph: &AttributedGraph,
    ranking: &FeatureRanking,
    grid: &SweepGrid,
) -> Result<SweepTable> {
    let violations = grid.violations();
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations.join("; ")));
    }
    let rows = grid
        .cells()
        .into_iter()
        .enumerate()
        .map(|(cell, (ratio, probability, pos))| {
            let cfg = grid.cell_config(ratio, probability, pos);
            let mut scores = Vec::with_capacity(grid.runs_per_cell);
            let mut error = None;
            for run in 0..grid.runs_per_cell {
                let seed = run_seed(grid.seed, cell, run);
                match train_and_evaluate(graph, Some(ranking), &cfg, &grid.eval, seed) {
                    Ok(s) => scores.push(s),
                    Err(e) => {
                        error = Some(format!("run {run}: {e}"));
                        break;
                    }
                }
            }
            let (mean_f1, std_f1) = mean_std(&scores);
            SweepRow {
                ratio,
                probability,
                pos,
                mean_f1,
                std_f1,
                scores,
                error,
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TABLE_HEADER}\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{}",
                r.ratio,
                r.probability,
                r.pos,
                r.mean_f1,
                r.std_f1,
                r.runs()
            )
            .unwrap();
        }
        out
    }

    /// Bar-group data for one starting position.
    pub fn plot_csv(&self, pos: Position) -> String {
        let mut out = format!("{PLOT_HEADER}\n");
        for r in self.rows.iter().filter(|r| r.pos == pos) {
            writeln!(
                out,
                "{},{},{:.4},{:.4}",
                r.ratio, r.probability, r.mean_f1, r.std_f1
            )
            .unwrap();
        }
        out
    }
}

/// L and M win counts over matched cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WinCount {
    pub l_wins: usize,
    pub m_wins: usize,
}

impl WinCount {
    pub fn pairs(&self) -> usize {
        self.l_wins + self.m_wins
    }

    fn percent(&self, wins: usize) -> f64 {
        if self.pairs() == 0 {
            0.0
        } else {
            100.0 * wins as f64 / self.pairs() as f64
        }
    }

    pub fn l_percent(&self) -> f64 {
        self.percent(self.l_wins)
    }

    pub fn m_percent(&self) -> f64 {
        self.percent(self.m_wins)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinReport {
    pub per_dataset: Vec<(String, WinCount)>,
    pub total: WinCount,
    /// Cells without a completed L/M partner.
    pub unmatched: Vec<String>,
}

/// Compares L and M cells sharing ratio and probability; the higher mean wins
/// and an exact tie goes to L.
pub fn count_wins(table: &SweepTable) -> (WinCount, Vec<String>) {
    let mut by_key: BTreeMap<(u64, u64), [Option<f64>; 2]> = BTreeMap::new();
    let mut unmatched = Vec::new();
    for r in &table.rows {
        if r.error.is_some() || r.scores.is_empty() {
            unmatched.push(format!(
                "{}x{} {}: no result",
                r.probability, r.ratio, r.pos
            ));
            continue;
        }
        let slot = match r.pos {
            Position::L => 0,
            Position::M => 1,
        };
        by_key
            .entry((r.ratio.to_bits(), r.probability.to_bits()))
            .or_default()[slot] = Some(r.mean_f1);
    }
    let mut wins = WinCount::default();
    for ((ratio, prob), pair) in by_key {
        match pair {
            [Some(l), Some(m)] => {
                if m > l {
                    wins.m_wins += 1;
                } else {
                    wins.l_wins += 1;
                }
            }
            _ => unmatched.push(format!(
                "{}x{}: missing partner",
                f64::from_bits(prob),
                f64::from_bits(ratio)
            )),
        }
    }
    (wins, unmatched)
}

pub fn pos_win_analysis(tables: &[(String, SweepTable)]) -> WinReport {
    let mut per_dataset = Vec::new();
    let mut total = WinCount::default();
    let mut unmatched = Vec::new();
    for (name, table) in tables {
        let (wins, skipped) = count_wins(table);
        total.l_wins += wins.l_wins;
        total.m_wins += wins.m_wins;
        unmatched.extend(skipped.into_iter().map(|s| format!("{name}: {s}")));
        per_dataset.push((name.clone(), wins));
    }
    WinReport {
        per_dataset,
        total,
        unmatched,
    }
}

impl WinReport {
    /// Per-dataset and total win counts with percentages.
    pub fn to_csv(&self) -> String {
        let cell = |w: usize, p: f64| format!("{w} ({p:.2}%)");
        let mut out = String::from("dataset,pos=l,pos=m\n");
        for (name, w) in self
            .per_dataset
            .iter()
            .map(|(n, w)| (n.as_str(), w))
            .chain(std::iter::once(("Total", &self.total)))
        {
            writeln!(
                out,
                "{name},{},{}",
                cell(w.l_wins, w.l_percent()),
                cell(w.m_wins, w.m_percent())
            )
            .unwrap();
        }
        out
    }
}

/// Mean and standard deviation over runs, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub mean_f1: f64,
    pub std_f1: f64,
    pub scores: Vec<f64>,
}

impl ArmResult {
    fn from_scores(scores: Vec<f64>) -> Self {
        let (mean_f1, std_f1) = mean_std(&scores);
        Self {
            mean_f1,
            std_f1,
            scores,
        }
    }
}

impl std::fmt::Display for ArmResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean_f1, self.std_f1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ablation {
    pub dataset: String,
    pub with_edge_drop: ArmResult,
    pub only_feature_drop: ArmResult,
}

/// `cfg` with edge dropping disabled on both views.
pub fn ofd_config(cfg: &TrainConfig) -> TrainConfig {
    let mut ofd = cfg.clone();
    ofd.view1.edge_drop_probability = 0.0;
    ofd.view2.edge_drop_probability = 0.0;
    ofd
}

/// Runs the same pipeline with the configured edge drop and with none, using
/// identical per-run seeds in both arms.
pub fn ablation_ofd(
    dataset: &str,
    graph: &AttributedGraph,
    ranking: Option<&FeatureRanking>,
    cfg: &TrainConfig,
    eval: &EvalConfig,
    runs: usize,
) -> Result<Ablation> {
    let ofd = ofd_config(cfg);
    let mut arms = [Vec::with_capacity(runs), Vec::with_capacity(runs)];
    for run in 0..runs {
        let seed = seed::derive(cfg.seed, &[seed::TAG_SWEEP, u64::MAX, run as u64]);
        arms[0].push(train_and_evaluate(graph, ranking, cfg, eval, seed)?);
        arms[1].push(train_and_evaluate(graph, ranking, &ofd, eval, seed)?);
    }
    let [with_edge_drop, only_feature_drop] = arms.map(ArmResult::from_scores);
    Ok(Ablation {
        dataset: dataset.to_string(),
        with_edge_drop,
        only_feature_drop,
    })
}

pub fn ablation_csv(rows: &[Ablation]) -> String {
    let mut out = String::from("dataset,FebAA,FebAA(OFD)\n");
    for a in rows {
        writeln!(
            out,
            "{},{},{}",
            a.dataset, a.with_edge_drop, a.only_feature_drop
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ratio: f64, probability: f64, pos: Position, mean: f64) -> SweepRow {
        SweepRow {
            ratio,
            probability,
            pos,
            mean_f1: mean,
            std_f1: 0.0,
            scores: vec![mean],
            error: None,
        }
    }

    #[test]
    fn m_always_higher() {
        let table = SweepTable {
            rows: vec![
                row(0.2, 1.0, Position::L, 50.0),
                row(0.2, 1.0, Position::M, 60.0),
                row(0.4, 0.5, Position::L, 70.0),
                row(0.4, 0.5, Position::M, 71.0),
            ],
        };
        let (w, skipped) = count_wins(&table);
        assert_eq!(
            w,
            WinCount {
                l_wins: 0,
                m_wins: 2
            }
        );
        assert!(skipped.is_empty());
        assert_eq!(w.m_percent(), 100.0);
    }

    #[test]
    fn hand_counted_pairs() {
        let table = SweepTable {
            rows: vec![
                row(0.2, 1.0, Position::L, 80.0),
                row(0.2, 1.0, Position::M, 79.0),
                row(0.3, 0.8, Position::L, 70.0),
                row(0.3, 0.8, Position::M, 75.0),
                row(0.5, 0.5, Position::M, 65.0),
                row(0.5, 0.5, Position::L, 60.0),
                row(0.9, 0.1, Position::L, 60.0),
            ],
        };
        let (w, skipped) = count_wins(&table);
        assert_eq!(
            w,
            WinCount {
                l_wins: 1,
                m_wins: 2
            }
        );
        assert_eq!(skipped.len(), 1);
    }

    #[test]
    fn failed_cells_are_skipped() {
        let mut failed = row(0.2, 1.0, Position::M, f64::NAN);
        failed.scores.clear();
        failed.error = Some("boom".into());
        let table = SweepTable {
            rows: vec![row(0.2, 1.0, Position::L, 80.0), failed],
        };
        let (w, skipped) = count_wins(&table);
        assert_eq!(w.pairs(), 0);
        assert_eq!(skipped.len(), 2);
    }

    #[test]
    fn cell_config_rewrites_only_adaptive_view() {
        let grid = SweepGrid {
            ratios: vec![0.2],
            probabilities: vec![1.0],
            positions: vec![Position::M],
            runs_per_cell: 1,
            base: TrainConfig::default(),
            eval: EvalConfig::default(),
            adaptive_view: AdaptiveView::View2,
            seed: 0,
        };
        let cfg = grid.cell_config(0.2, 1.0, Position::M);
        assert_eq!(cfg.view1, grid.base.view1);
        assert_eq!(cfg.view2.selection_mode, SelectionMode::Influential);
        assert_eq!(cfg.view2.feature_masking_ratio, 0.2);
        assert_eq!(
            cfg.view2.edge_drop_probability,
            grid.base.view2.edge_drop_probability
        );
        assert_eq!(grid.cells().len(), 1);
    }
}
