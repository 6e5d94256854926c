use crate::pipeline::{Stage, StageError};
use gazeq_core::learn::VariantId;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paths {
    pub sessions: PathBuf,
    pub taxonomy: PathBuf,
    pub thesaurus: PathBuf,
    pub embeddings: PathBuf,
    pub output: PathBuf,
}

fn default_split() -> f64 {
    0.5
}
fn default_k() -> usize {
    5
}
fn default_min_dur() -> u64 {
    350
}
fn default_lev() -> usize {
    3
}
fn default_variants() -> Vec<VariantId> {
    VariantId::ALL.to_vec()
}
fn default_folds() -> usize {
    10
}
fn default_train_fraction() -> f64 {
    0.8
}

/// Everything `gazeq run` needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    #[serde(default = "default_k")]
    pub topic_k: usize,
    #[serde(default = "default_min_dur")]
    pub min_dur_ms: u64,
    #[serde(default = "default_lev")]
    pub lev_threshold: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantId>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

impl PipelineConfig {
    pub fn new(paths: Paths) -> Self {
        PipelineConfig {
            paths,
            split_fraction: default_split(),
            topic_k: default_k(),
            min_dur_ms: default_min_dur(),
            lev_threshold: default_lev(),
            variants: default_variants(),
            seed: 0,
            folds: default_folds(),
            train_fraction: default_train_fraction(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, StageError> {
        let fail = |e: anyhow::Error| StageError::new(Stage::Config, e);
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(anyhow::anyhow!("reading {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| fail(anyhow::anyhow!("parsing {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.sessions,
            &mut cfg.paths.taxonomy,
            &mut cfg.paths.thesaurus,
            &mut cfg.paths.embeddings,
            &mut cfg.paths.output,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks knobs and input paths, naming the stage that would consume a
    /// missing input.
    pub fn validate(&self) -> Result<(), StageError> {
        let knob = |msg: String| Err(StageError::new(Stage::Config, anyhow::anyhow!(msg)));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return knob(format!("split_fraction must lie in (0, 1), got {}", self.split_fraction));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return knob(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.topic_k == 0 {
            return knob("topic_k must be positive".into());
        }
        if self.folds < 2 {
            return knob(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.variants.is_empty() {
            return knob("no variants requested".into());
        }
        let missing = |stage: Stage, what: &str, p: &Path| {
            Err(StageError::new(stage, anyhow::anyhow!("{what} not found: {}", p.display())))
        };
        if !self.paths.sessions.is_dir() {
            return missing(Stage::Ingest, "sessions directory", &self.paths.sessions);
        }
        if !self.paths.thesaurus.is_file() {
            return missing(Stage::Topics, "thesaurus", &self.paths.thesaurus);
        }
        if !self.paths.taxonomy.is_file() {
            return missing(Stage::Featurize, "taxonomy", &self.paths.taxonomy);
        }
        if !self.paths.embeddings.is_file() {
            return missing(Stage::Featurize, "embeddings", &self.paths.embeddings);
        }
        Ok(())
    }
}
