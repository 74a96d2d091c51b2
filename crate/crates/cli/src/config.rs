//! Run configuration: one TOML file covering data, both views, training,
//! ranking, evaluation and the sweep grid.

use std::fs;
use std::path::{Path, PathBuf};

use febaa::augmentation::{Position, SelectionMode, ViewConfig};
use febaa::evaluation::EvalConfig;
use febaa::gcl::TrainConfig;
use febaa::sweep::{AdaptiveView, SweepGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "FEBAA_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// Ranking CSV consumed by influential views.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_size: usize,
    pub output_size: usize,
    pub temperature: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            weight_decay: d.weight_decay,
            hidden_size: d.hidden_size,
            output_size: d.output_size,
            temperature: d.temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScorerKind {
    #[serde(rename = "gcl")]
    Gcl,
    #[serde(rename = "variance-stub")]
    VarianceStub,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gcl" => Ok(ScorerKind::Gcl),
            "variance-stub" => Ok(ScorerKind::VarianceStub),
            other => Err(format!(
                "unknown scorer {other:?} (expected gcl or variance-stub)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankingSection {
    /// Epochs per scoring run.
    pub epochs: usize,
    pub rounds: usize,
    pub scorer: ScorerKind,
}

impl Default for RankingSection {
    fn default() -> Self {
        Self {
            epochs: 150,
            rounds: 3,
            scorer: ScorerKind::Gcl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ratios: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub positions: Vec<Position>,
    pub runs: usize,
    pub adaptive_view: AdaptiveView,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ratios: vec![0.2, 0.4, 0.6],
            probabilities: vec![1.0, 0.5],
            positions: vec![Position::L, Position::M],
            runs: 3,
            adaptive_view: AdaptiveView::View2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Row label in win-count and ablation tables.
    #[serde(default = "default_name")]
    pub name: String,
    pub data: DataPaths,
    pub view1: ViewConfig,
    pub view2: ViewConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub ranking: RankingSection,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_name() -> String {
    "dataset".to_string()
}

impl RunConfig {
    /// Every violated constraint, one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.train_config().violations();
        if self.ranking.rounds == 0 {
            out.push("ranking.rounds must be at least 1".into());
        }
        if self.ranking.epochs == 0 {
            out.push("ranking.epochs must be at least 1".into());
        }
        out.extend(self.eval.violations());
        let needs_ranking = [&self.view1, &self.view2]
            .iter()
            .any(|v| v.selection_mode == SelectionMode::Influential);
        if needs_ranking && self.data.ranking.is_none() {
            out.push("ranking required: an influential view needs data.ranking".into());
        }
        out.extend(self.sweep_grid().violations());
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(v))
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            weight_decay: self.train.weight_decay,
            hidden_size: self.train.hidden_size,
            output_size: self.train.output_size,
            temperature: self.train.temperature,
            view1: self.view1.clone(),
            view2: self.view2.clone(),
            seed: self.seed,
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            ratios: self.sweep.ratios.clone(),
            probabilities: self.sweep.probabilities.clone(),
            positions: self.sweep.positions.clone(),
            runs_per_cell: self.sweep.runs,
            base: self.train_config(),
            eval: self.eval.clone(),
            adaptive_view: self.sweep.adaptive_view,
            seed: self.seed,
        }
    }

    /// Makes relative data paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.edges);
        fix(&mut self.data.features);
        if let Some(p) = self.data.labels.as_mut() {
            fix(p);
        }
        if let Some(p) = self.data.ranking.as_mut() {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates config text. Relative paths are kept as written.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a TOML config, or the `config` object of a run manifest (`.json`).
/// Relative data paths become absolute against the file's directory, so a
/// manifest written elsewhere still points at the same data.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        let manifest: crate::manifest::Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;
        manifest.config.validate()?;
        manifest.config
    } else {
        parse_config_str(&text)?
    };
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = std::path::absolute(base).map_err(|e| CliError::io(base, e))?;
    cfg.resolve_paths(&base);
    Ok(cfg)
}

/// Seed precedence: explicit flag, then `FEBAA_SEED`, then the config value.
pub fn resolve_seed(cfg: &mut RunConfig, flag: Option<u64>) -> Result<(), CliError> {
    if let Some(s) = flag {
        cfg.seed = s;
    } else if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(vec![format!("{SEED_ENV}={v:?} is not a u64")]))?;
    }
    Ok(())
}
