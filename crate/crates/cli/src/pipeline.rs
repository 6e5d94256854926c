//! Pipeline stages and the end-to-end driver.
//!
//! Each stage reads only files written by earlier stages (or the declared
//! inputs) and writes its outputs atomically, so `gazeq run` and a chain of
//! single-stage invocations produce the same artifacts.

use crate::config::PipelineConfig;
use anyhow::{anyhow, Context};
use gazeq_core::featurize::{
    self, correlation_report, featurize_sessions, topic_k_sweep, CorrelationReport, FeatureMatrix, FeaturizeConfig,
    KSweepPoint, Resources,
};
use gazeq_core::ingest::{load_sessions_dir, SessionAggregate, SessionLog};
use gazeq_core::learn::{evaluate, render_table, EvalConfig, EvalReport, VariantId};
use gazeq_core::lexsem::{EmbeddingTable, Taxonomy};
use gazeq_core::text::SuffixStemmer;
use gazeq_core::thesaurus::{session_topics, topic_match_rate, Thesaurus, TopicParams, TopicProfile};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Topics,
    Featurize,
    Train,
    Report,
    Synth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Topics => "topics",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Report => "report",
            Stage::Synth => "synth",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {source:#}")]
pub struct StageError {
    pub stage: Stage,
    pub source: anyhow::Error,
}

impl StageError {
    pub fn new(stage: Stage, source: anyhow::Error) -> Self {
        StageError { stage, source }
    }
}

/// Attaches a stage to any error.
pub trait InStageExt<T> {
    fn in_stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> InStageExt<T> for Result<T, E> {
    fn in_stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError::new(stage, e.into()))
    }
}

/// Writes every file through a temporary sibling and a rename. If any write
/// fails, files already renamed in this batch are removed again.
pub fn write_atomic(files: &[(PathBuf, Vec<u8>)]) -> anyhow::Result<()> {
    let mut done: Vec<&Path> = Vec::new();
    let result = files.iter().try_for_each(|(path, bytes)| -> anyhow::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let name = path.file_name().ok_or_else(|| anyhow!("not a file path: {}", path.display()))?;
        let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
        std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
        if let Err(e) = std::fs::rename(&tmp, path) {
            let _ = std::fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("renaming into {}", path.display()));
        }
        done.push(path);
        Ok(())
    });
    if result.is_err() {
        for p in done {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifact serializes");
    v.push(b'\n');
    v
}

pub fn ingest(dir: &Path) -> Result<(Vec<SessionLog>, Vec<SessionAggregate>), StageError> {
    let logs = load_sessions_dir(dir).in_stage(Stage::Ingest)?;
    let aggs = logs.iter().map(|l| SessionAggregate::from_session(l, &SuffixStemmer)).collect();
    log::info!(target: "gazeq::ingest", "loaded {} sessions from {}", logs.len(), dir.display());
    Ok((logs, aggs))
}

/// Whole-session topic profile of one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTopics {
    pub session_id: String,
    pub profile: Option<TopicProfile>,
    /// Share of the participant's stated topic terms found in the profile.
    pub match_rate: Option<f64>,
}

pub fn topics(aggs: &[SessionAggregate], th: &Thesaurus, params: &TopicParams) -> Result<Vec<SessionTopics>, StageError> {
    if params.k == 0 {
        return Err(StageError::new(Stage::Topics, anyhow!("k must be positive")));
    }
    Ok(aggs
        .iter()
        .map(|a| {
            let profile = match session_topics(&a.word_fixations, th, params) {
                Ok(p) => Some(p),
                Err(e) => {
                    log::warn!(target: "gazeq::topics", "session {}: {e}", a.session_id);
                    None
                }
            };
            let match_rate = profile
                .as_ref()
                .and_then(|p| topic_match_rate(p, &a.topic_terms, &SuffixStemmer).ok());
            SessionTopics {
                session_id: a.session_id.clone(),
                profile,
                match_rate,
            }
        })
        .collect())
}

pub fn load_thesaurus(path: &Path, stage: Stage) -> Result<Thesaurus, StageError> {
    Thesaurus::load(path).in_stage(stage)
}

pub fn load_resources(taxonomy: &Path, thesaurus: &Path, embeddings: &Path) -> Result<Resources, StageError> {
    let tax = Taxonomy::load(taxonomy).in_stage(Stage::Featurize)?;
    let emb = EmbeddingTable::load(embeddings).in_stage(Stage::Featurize)?;
    let th = load_thesaurus(thesaurus, Stage::Featurize)?;
    Ok(Resources::new(tax, emb, th))
}

/// Topic cut-offs reported by the k sweep.
pub const SWEEP_KS: [usize; 5] = [5, 10, 15, 20, 25];

pub struct FeaturizeOutput {
    pub matrix: FeatureMatrix,
    pub correlations: CorrelationReport,
    pub sweep: Vec<KSweepPoint>,
    pub skipped: Vec<String>,
}

pub fn featurize(logs: &[SessionLog], res: &Resources, cfg: &FeaturizeConfig) -> Result<FeaturizeOutput, StageError> {
    let corpus = featurize_sessions(logs, res, cfg).in_stage(Stage::Featurize)?;
    let correlations = correlation_report(&corpus.matrix.instances);
    let sweep = topic_k_sweep(&corpus.sessions, &SWEEP_KS);
    log::info!(
        target: "gazeq::featurize",
        "{} instances, {} positive, {} sessions skipped",
        corpus.matrix.instances.len(),
        corpus.matrix.positives(),
        corpus.skipped.len()
    );
    Ok(FeaturizeOutput {
        matrix: corpus.matrix,
        correlations,
        sweep,
        skipped: corpus.skipped,
    })
}

/// `matrix.csv` -> `matrix.glf.csv`.
pub fn glf_sibling(matrix: &Path) -> PathBuf {
    let stem = matrix.file_stem().map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned());
    matrix.with_file_name(format!("{stem}.glf.csv"))
}

pub fn matrix_files(out: &FeaturizeOutput, matrix_path: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, StageError> {
    let mut csv = Vec::new();
    featurize::write_matrix_csv(&out.matrix.instances, &mut csv).in_stage(Stage::Featurize)?;
    let mut glf = Vec::new();
    let rows = out.matrix.glf.as_deref().unwrap_or_default();
    featurize::write_glf_csv(&out.matrix.instances, rows, &mut glf).in_stage(Stage::Featurize)?;
    Ok(vec![(matrix_path.to_path_buf(), csv), (glf_sibling(matrix_path), glf)])
}

/// Reads a matrix and, when present, its baseline inputs.
pub fn read_matrix(matrix: &Path, glf: Option<&Path>) -> Result<FeatureMatrix, StageError> {
    let file = std::fs::File::open(matrix)
        .with_context(|| format!("opening {}", matrix.display()))
        .in_stage(Stage::Train)?;
    let instances = featurize::read_matrix_csv(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", matrix.display()))
        .in_stage(Stage::Train)?;
    let sibling = glf_sibling(matrix);
    let glf_path = glf.map(Path::to_path_buf).or_else(|| sibling.is_file().then_some(sibling));
    let glf = match glf_path {
        Some(p) => {
            let file = std::fs::File::open(&p)
                .with_context(|| format!("opening {}", p.display()))
                .in_stage(Stage::Train)?;
            Some(
                featurize::read_glf_csv(&instances, std::io::BufReader::new(file))
                    .with_context(|| format!("reading {}", p.display()))
                    .in_stage(Stage::Train)?,
            )
        }
        None => None,
    };
    Ok(FeatureMatrix {
        instances,
        glf,
        misses: Vec::new(),
    })
}

pub fn train(variant: VariantId, matrix: &FeatureMatrix, cfg: &EvalConfig) -> Result<EvalReport, StageError> {
    let report = evaluate(variant, matrix, cfg)
        .with_context(|| format!("variant {variant}"))
        .in_stage(Stage::Train)?;
    log::info!(
        target: "gazeq::train",
        "{}: macro F1 {:.4} in {:.2}s",
        report.label,
        report.macro_avg.f1,
        report.runtime_s
    );
    Ok(report)
}

pub fn read_reports(paths: &[PathBuf]) -> Result<Vec<EvalReport>, StageError> {
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .in_stage(Stage::Report)
}

pub fn report_file_name(variant: VariantId) -> String {
    format!("report_{}.json", variant.cli_name())
}

/// Artifacts of a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub reports: Vec<EvalReport>,
    pub table: String,
}

/// Runs ingest, topics, featurize, train and report under `cfg.paths.output`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary, StageError> {
    cfg.validate()?;
    let out = &cfg.paths.output;
    write_atomic(&[(out.join("run_config.json"), to_json(cfg))]).in_stage(Stage::Config)?;

    let (logs, aggs) = ingest(&cfg.paths.sessions)?;
    let agg_path = out.join("sessions.agg.json");
    write_atomic(&[(agg_path.clone(), to_json(&aggs))]).in_stage(Stage::Ingest)?;

    let topic_params = TopicParams {
        min_dur_ms: cfg.min_dur_ms,
        k: cfg.topic_k,
        lev_threshold: cfg.lev_threshold,
    };
    let th = load_thesaurus(&cfg.paths.thesaurus, Stage::Topics)?;
    let aggs: Vec<SessionAggregate> = serde_json::from_slice(&std::fs::read(&agg_path).in_stage(Stage::Topics)?).in_stage(Stage::Topics)?;
    let session_topics = topics(&aggs, &th, &topic_params)?;
    write_atomic(&[(out.join("topics.json"), to_json(&session_topics))]).in_stage(Stage::Topics)?;

    let res = load_resources(&cfg.paths.taxonomy, &cfg.paths.thesaurus, &cfg.paths.embeddings)?;
    let fcfg = FeaturizeConfig {
        split_fraction: cfg.split_fraction,
        topics: topic_params,
    };
    let feats = featurize(&logs, &res, &fcfg)?;
    let matrix_path = out.join("matrix.csv");
    let mut files = matrix_files(&feats, &matrix_path)?;
    files.push((out.join("correlations.json"), to_json(&feats.correlations)));
    files.push((out.join("k_sweep.json"), to_json(&feats.sweep)));
    write_atomic(&files).in_stage(Stage::Featurize)?;

    let matrix = read_matrix(&matrix_path, None)?;
    let ecfg = EvalConfig {
        seed: cfg.seed,
        folds: cfg.folds,
        train_fraction: cfg.train_fraction,
        ..Default::default()
    };
    let mut reports = Vec::with_capacity(cfg.variants.len());
    let mut report_paths = Vec::with_capacity(cfg.variants.len());
    for &v in &cfg.variants {
        let report = train(v, &matrix, &ecfg)?;
        let path = out.join(report_file_name(v));
        write_atomic(&[(path.clone(), to_json(&report))]).in_stage(Stage::Train)?;
        report_paths.push(path);
        reports.push(report);
    }

    let table = render_table(&read_reports(&report_paths)?);
    write_atomic(&[(out.join("summary.txt"), table.clone().into_bytes())]).in_stage(Stage::Report)?;
    Ok(RunSummary {
        output: out.clone(),
        reports,
        table,
    })
}
