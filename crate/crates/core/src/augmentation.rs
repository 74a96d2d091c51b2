//! The plug-and-play augmentation layer.
//!
//! Candidate features (CF) are chosen once per training run, either uniformly at
//! random or from one end of a feature ranking. Each epoch a view masks every
//! candidate column independently with the configured probability and drops
//! every edge independently with the edge drop probability. Masking never
//! touches the edge set, and dropping never adds edges.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Edge};
use crate::matrix::Matrix;
use crate::ranking::FeatureRanking;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Random,
    Influential,
    /// Every feature is a candidate: the plain stochastic baseline view.
    AllFeatures,
}

/// Which end of the ranking candidate features are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    /// Lowest masked-accuracy scores: the most influential features.
    L,
    /// Highest masked-accuracy scores: the least influential features.
    M,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Position::L => "L",
            Position::M => "M",
        })
    }
}

impl std::str::FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Position::L),
            "M" | "m" => Ok(Position::M),
            other => Err(Error::InvalidConfig(format!("unknown position {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndicatorKind {
    Random,
    Influential,
}

/// A {0,1}^F selection mask. A run holds exactly one, random or influential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVector {
    bits: Vec<bool>,
    kind: IndicatorKind,
}

impl IndicatorVector {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn kind(&self) -> IndicatorKind {
        self.kind
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }
}

/// Sorted candidate feature indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateFeatureSet {
    indices: Vec<usize>,
    num_features: usize,
    indicator: Option<IndicatorVector>,
}

impl CandidateFeatureSet {
    pub fn all(num_features: usize) -> Self {
        Self {
            indices: (0..num_features).collect(),
            num_features,
            indicator: None,
        }
    }

    pub fn from_indicator(indicator: IndicatorVector) -> Self {
        Self {
            indices: indicator.indices(),
            num_features: indicator.bits.len(),
            indicator: Some(indicator),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// The generating indicator; `None` for the all-features baseline.
    pub fn indicator(&self) -> Option<&IndicatorVector> {
        self.indicator.as_ref()
    }
}

/// Per-view augmentation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewConfig {
    pub selection_mode: SelectionMode,
    /// Fraction of all features placed into CF. Ignored for `all_features`.
    #[serde(default = "one")]
    pub feature_masking_ratio: f64,
    /// Per-epoch probability that a candidate column is zeroed.
    #[serde(default)]
    pub feature_masking_probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starting_position: Option<Position>,
    #[serde(default)]
    pub edge_drop_probability: f64,
    /// Salt mixed into this view's random substreams.
    #[serde(default)]
    pub rng_seed: u64,
}

fn one() -> f64 {
    1.0
}

impl ViewConfig {
    pub fn all_features(feature_masking_probability: f64, edge_drop_probability: f64) -> Self {
        Self {
            selection_mode: SelectionMode::AllFeatures,
            feature_masking_ratio: 1.0,
            feature_masking_probability,
            starting_position: None,
            edge_drop_probability,
            rng_seed: 0,
        }
    }

    pub fn random(ratio: f64, probability: f64, edge_drop_probability: f64) -> Self {
        Self {
            selection_mode: SelectionMode::Random,
            feature_masking_ratio: ratio,
            feature_masking_probability: probability,
            starting_position: None,
            edge_drop_probability,
            rng_seed: 0,
        }
    }

    pub fn influential(
        ratio: f64,
        probability: f64,
        pos: Position,
        edge_drop_probability: f64,
    ) -> Self {
        Self {
            selection_mode: SelectionMode::Influential,
            feature_masking_ratio: ratio,
            feature_masking_probability: probability,
            starting_position: Some(pos),
            edge_drop_probability,
            rng_seed: 0,
        }
    }

    /// All constraint violations, each prefixed with `prefix` (e.g. `"view1."`).
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("feature_masking_ratio", self.feature_masking_ratio),
            (
                "feature_masking_probability",
                self.feature_masking_probability,
            ),
            ("edge_drop_probability", self.edge_drop_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{prefix}{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.selection_mode == SelectionMode::Influential && self.starting_position.is_none() {
            out.push(format!(
                "{prefix}starting_position is required when selection_mode = \"influential\""
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }
}

/// An augmented copy of a graph for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    pub features: Matrix,
    pub edges: Vec<Edge>,
    pub masked_columns: Vec<usize>,
    pub dropped_edges: usize,
}

/// `round(ratio * num_features)` with halves rounded up.
///
/// A 1e-9 slack absorbs representation error in decimal ratios, e.g.
/// `0.29 * 50 == 14.499999999999998`.
pub fn candidate_count(num_features: usize, ratio: f64) -> usize {
    let k = (ratio * num_features as f64 + 0.5 + 1e-9).floor();
    (k.max(0.0) as usize).min(num_features)
}

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::FractionOutOfRange(name, v))
    }
}

/// Uniformly draws `round(ratio * F)` distinct features without replacement.
pub fn select_random(num_features: usize, ratio: f64, rng: &mut Rng) -> Result<IndicatorVector> {
    check_fraction("feature_masking_ratio", ratio)?;
    let k = candidate_count(num_features, ratio);
    let mut bits = vec![false; num_features];
    for j in index::sample(rng, num_features, k) {
        bits[j] = true;
    }
    Ok(IndicatorVector {
        bits,
        kind: IndicatorKind::Random,
    })
}

/// Takes `round(ratio * F)` features from the front (`L`) or back (`M`) of the ranking.
pub fn select_influential(
    ranking: &FeatureRanking,
    ratio: f64,
    pos: Position,
) -> Result<IndicatorVector> {
    check_fraction("feature_masking_ratio", ratio)?;
    let order = ranking.order();
    let f = order.len();
    let k = candidate_count(f, ratio);
    let chosen = match pos {
        Position::L => &order[..k],
        Position::M => &order[f - k..],
    };
    let mut bits = vec![false; f];
    for &j in chosen {
        bits[j] = true;
    }
    Ok(IndicatorVector {
        bits,
        kind: IndicatorKind::Influential,
    })
}

/// Selects CF for a run. Called once, before the epoch loop.
pub fn candidate_features(
    num_features: usize,
    cfg: &ViewConfig,
    ranking: Option<&FeatureRanking>,
    rng: &mut Rng,
) -> Result<CandidateFeatureSet> {
    match cfg.selection_mode {
        SelectionMode::AllFeatures => Ok(CandidateFeatureSet::all(num_features)),
        SelectionMode::Random => Ok(CandidateFeatureSet::from_indicator(select_random(
            num_features,
            cfg.feature_masking_ratio,
            rng,
        )?)),
        SelectionMode::Influential => {
            let ranking = ranking.ok_or(Error::RankingRequired)?;
            let pos = cfg.starting_position.ok_or(Error::PositionRequired)?;
            if ranking.len() != num_features {
                return Err(Error::RankingSize {
                    expected: num_features,
                    found: ranking.len(),
                });
            }
            Ok(CandidateFeatureSet::from_indicator(select_influential(
                ranking,
                cfg.feature_masking_ratio,
                pos,
            )?))
        }
    }
}

/// Zeroes each candidate column independently with probability `prob`.
///
/// Returns the masked matrix and the sorted list of zeroed columns.
pub fn mask_features(
    x: &Matrix,
    cf: &CandidateFeatureSet,
    prob: f64,
    rng: &mut Rng,
) -> Result<(Matrix, Vec<usize>)> {
    check_fraction("feature_masking_probability", prob)?;
    if cf.num_features() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "candidate set over {} features, matrix has {}",
            cf.num_features(),
            x.cols()
        )));
    }
    let masked: Vec<usize> = cf
        .indices()
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(prob))
        .collect();
    let mut out = x.clone();
    for &j in &masked {
        out.zero_column(j);
    }
    Ok((out, masked))
}

/// Drops each unordered pair independently with probability `p_e`. No connectivity repair.
pub fn drop_edges(edges: &[Edge], p_e: f64, rng: &mut Rng) -> Result<(Vec<Edge>, usize)> {
    check_fraction("edge_drop_probability", p_e)?;
    let kept: Vec<Edge> = edges
        .iter()
        .copied()
        .filter(|_| !rng.gen_bool(p_e))
        .collect();
    let dropped = edges.len() - kept.len();
    Ok((kept, dropped))
}

/// One epoch's view: feature masking followed by edge dropping, from a single stream.
pub fn apply_view(
    graph: &AttributedGraph,
    cf: &CandidateFeatureSet,
    cfg: &ViewConfig,
    rng: &mut Rng,
) -> Result<GraphView> {
    let (features, masked_columns) =
        mask_features(graph.features(), cf, cfg.feature_masking_probability, rng)?;
    let (edges, dropped_edges) = drop_edges(graph.edges(), cfg.edge_drop_probability, rng)?;
    Ok(GraphView {
        features,
        edges,
        masked_columns,
        dropped_edges,
    })
}

/// Stream used once per run to select a view's candidate features.
pub fn selection_rng(run_seed: u64, view_id: u64, cfg: &ViewConfig) -> Rng {
    seed::rng_for(run_seed, &[seed::TAG_SELECTION, view_id, cfg.rng_seed])
}

/// Stream for a view's masking and dropping at a given epoch.
pub fn epoch_rng(run_seed: u64, view_id: u64, cfg: &ViewConfig, epoch: u64) -> Rng {
    seed::rng_for(run_seed, &[seed::TAG_EPOCH, view_id, cfg.rng_seed, epoch])
}
