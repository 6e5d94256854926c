//! Per-term feature vectors, labels, correlations and encoding.
//!
//! Every feature is computed from the first half of a session only. Labels
//! come from the second half: a fixated stem is positive when it shows up in
//! a second-half query without having been used in a first-half query.

use crate::ingest::{self, IngestError, PageCategory, SessionLog, WordFixation};
use crate::learn::{self, GlfFeatures};
use crate::lexsem::{EmbeddingTable, TaxSims, Taxonomy};
use crate::text::{PosTag, PosTagger, RuleTagger, Stemmer, SuffixStemmer};
use crate::thesaurus::{self, Thesaurus, ThesaurusError, TopicParams, TopicProfile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("correlation undefined: a column has zero variance")]
    UndefinedCorrelation,
    #[error("columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("no feature has a positive correlation with the label")]
    EmptySelection,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv line {line}: {msg}")]
    BadRow { line: u64, msg: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureCategory {
    Fixation,
    Lexical,
    QueryRelevance,
    SessionTopic,
    TermContext,
    Browsing,
}

/// The seventeen term features, in export column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Dur,
    Freq,
    TimeF,
    TimeL,
    TimeLen,
    TermLen,
    PosTag,
    MaxCos,
    LchSim,
    ResSim,
    LinSim,
    IsTopic,
    ViewedF,
    ViewedL,
    SerpNum,
    DetailNum,
    TotalNum,
}

const POS_LEVELS: [&str; 10] = ["NN", "VB", "JJ", "RB", "DT", "IN", "CC", "PRP", "CD", "X"];
const PAGE_LEVELS: [&str; 2] = ["SERP", "DETAIL"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Continuous,
    Boolean,
    Categorical(&'static [&'static str]),
}

impl Feature {
    pub const ALL: [Feature; 17] = [
        Feature::Dur,
        Feature::Freq,
        Feature::TimeF,
        Feature::TimeL,
        Feature::TimeLen,
        Feature::TermLen,
        Feature::PosTag,
        Feature::MaxCos,
        Feature::LchSim,
        Feature::ResSim,
        Feature::LinSim,
        Feature::IsTopic,
        Feature::ViewedF,
        Feature::ViewedL,
        Feature::SerpNum,
        Feature::DetailNum,
        Feature::TotalNum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Dur => "dur",
            Feature::Freq => "freq",
            Feature::TimeF => "time_f",
            Feature::TimeL => "time_l",
            Feature::TimeLen => "time_len",
            Feature::TermLen => "term_len",
            Feature::PosTag => "pos_tag",
            Feature::MaxCos => "max_cos",
            Feature::LchSim => "lch_sim",
            Feature::ResSim => "res_sim",
            Feature::LinSim => "lin_sim",
            Feature::IsTopic => "is_topic",
            Feature::ViewedF => "viewed_f",
            Feature::ViewedL => "viewed_l",
            Feature::SerpNum => "serp_num",
            Feature::DetailNum => "detail_num",
            Feature::TotalNum => "total_num",
        }
    }

    pub fn category(self) -> FeatureCategory {
        use Feature::*;
        match self {
            Dur | Freq | TimeF | TimeL | TimeLen => FeatureCategory::Fixation,
            TermLen | PosTag => FeatureCategory::Lexical,
            MaxCos | LchSim | ResSim | LinSim => FeatureCategory::QueryRelevance,
            IsTopic => FeatureCategory::SessionTopic,
            ViewedF | ViewedL => FeatureCategory::TermContext,
            SerpNum | DetailNum | TotalNum => FeatureCategory::Browsing,
        }
    }

    pub fn kind(self) -> InputKind {
        match self {
            Feature::PosTag => InputKind::Categorical(&POS_LEVELS),
            Feature::ViewedF | Feature::ViewedL => InputKind::Categorical(&PAGE_LEVELS),
            Feature::IsTopic => InputKind::Boolean,
            _ => InputKind::Continuous,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| FeaturizeError::UnknownFeature(s.to_string()))
    }
}

/// One cell before encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Num(f64),
    Bool(bool),
    Level(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dur: f64,
    pub freq: f64,
    pub time_f: f64,
    pub time_l: f64,
    pub time_len: f64,
    pub term_len: f64,
    pub pos_tag: PosTag,
    pub max_cos: f64,
    pub lch_sim: f64,
    pub res_sim: f64,
    pub lin_sim: f64,
    pub is_topic: bool,
    pub viewed_f: PageCategory,
    pub viewed_l: PageCategory,
    pub serp_num: f64,
    pub detail_num: f64,
    pub total_num: f64,
}

impl FeatureVector {
    pub fn raw(&self, f: Feature) -> RawValue {
        use RawValue::*;
        match f {
            Feature::Dur => Num(self.dur),
            Feature::Freq => Num(self.freq),
            Feature::TimeF => Num(self.time_f),
            Feature::TimeL => Num(self.time_l),
            Feature::TimeLen => Num(self.time_len),
            Feature::TermLen => Num(self.term_len),
            Feature::PosTag => Level(self.pos_tag.as_str()),
            Feature::MaxCos => Num(self.max_cos),
            Feature::LchSim => Num(self.lch_sim),
            Feature::ResSim => Num(self.res_sim),
            Feature::LinSim => Num(self.lin_sim),
            Feature::IsTopic => Bool(self.is_topic),
            Feature::ViewedF => Level(self.viewed_f.as_str()),
            Feature::ViewedL => Level(self.viewed_l.as_str()),
            Feature::SerpNum => Num(self.serp_num),
            Feature::DetailNum => Num(self.detail_num),
            Feature::TotalNum => Num(self.total_num),
        }
    }

    /// Cell text for CSV export; categorical features as raw labels.
    pub fn cell(&self, f: Feature) -> String {
        match self.raw(f) {
            RawValue::Num(x) => x.to_string(),
            RawValue::Bool(b) => u8::from(b).to_string(),
            RawValue::Level(l) => l.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub session_id: String,
    pub stem: String,
    pub features: FeatureVector,
    pub label: u8,
}

/// Second-half query stems that were never fixated in the first half.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Miss {
    pub session_id: String,
    pub stem: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub instances: Vec<LabeledInstance>,
    /// Gaze tf-idf baseline inputs aligned with `instances`, when computed.
    pub glf: Option<Vec<GlfFeatures>>,
    pub misses: Vec<Miss>,
}

impl FeatureMatrix {
    pub fn positives(&self) -> usize {
        self.instances.iter().filter(|i| i.label == 1).count()
    }
}

/// Lexical resources and normalizers shared by all sessions.
pub struct Resources {
    pub taxonomy: Taxonomy,
    pub embeddings: EmbeddingTable,
    pub thesaurus: Thesaurus,
    pub stemmer: Box<dyn Stemmer>,
    pub tagger: Box<dyn PosTagger>,
}

impl Resources {
    pub fn new(taxonomy: Taxonomy, embeddings: EmbeddingTable, thesaurus: Thesaurus) -> Self {
        Resources {
            taxonomy,
            embeddings,
            thesaurus,
            stemmer: Box::new(SuffixStemmer),
            tagger: Box::new(RuleTagger),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturizeConfig {
    pub split_fraction: f64,
    pub topics: TopicParams,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        FeaturizeConfig {
            split_fraction: 0.5,
            topics: TopicParams::default(),
        }
    }
}

/// First lookup key present in a vocabulary.
fn first_known<'a>(candidates: &[&'a str], known: impl Fn(&str) -> bool) -> Option<&'a str> {
    candidates.iter().copied().find(|c| known(c))
}

/// Query term as used for lexical lookups: the raw token and its stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTerm {
    pub token: String,
    pub stem: String,
}

impl QueryTerm {
    pub fn new(token: &str, stemmer: &dyn Stemmer) -> Self {
        let token = token.to_lowercase();
        QueryTerm {
            stem: stemmer.stem(&token),
            token,
        }
    }
}

/// Feature vectors for every first-half stem.
///
/// Query-relevance features take the maximum over `q_first` of each measure.
/// Lookups try the stem first and then the dominant surface form for the
/// fixated term, and the raw token then the stem for query terms.
pub fn build_features(
    first: &[WordFixation],
    q_first: &[QueryTerm],
    profile: &TopicProfile,
    total_pages: usize,
    res: &Resources,
) -> Vec<(String, FeatureVector)> {
    let tax = &res.taxonomy;
    let emb = &res.embeddings;
    let q_emb: Vec<&str> = q_first
        .iter()
        .filter_map(|q| first_known(&[&q.token, &q.stem], |w| emb.contains(w)))
        .collect();
    let q_tax: Vec<&str> = q_first
        .iter()
        .filter_map(|q| first_known(&[&q.token, &q.stem], |w| !tax.senses(w).is_empty()))
        .collect();

    first
        .iter()
        .map(|w| {
            let surface = w.dominant_surface();
            let keys = [w.stem.as_str(), surface];
            let max_cos = first_known(&keys, |k| emb.contains(k)).map_or(0.0, |k| emb.max_cos(k, &q_emb));
            let sims = first_known(&keys, |k| !tax.senses(k).is_empty()).map_or(TaxSims::default(), |k| {
                q_tax.iter().fold(TaxSims::default(), |acc, q| {
                    let s = tax.word_sims(k, q);
                    TaxSims {
                        lch: acc.lch.max(s.lch),
                        res: acc.res.max(s.res),
                        lin: acc.lin.max(s.lin),
                    }
                })
            });
            let fv = FeatureVector {
                dur: w.dur as f64,
                freq: w.freq as f64,
                time_f: w.time_f as f64,
                time_l: w.time_l as f64,
                time_len: w.time_len as f64,
                term_len: w.stem.chars().count() as f64,
                pos_tag: res.tagger.tag(surface),
                max_cos,
                lch_sim: sims.lch,
                res_sim: sims.res,
                lin_sim: sims.lin,
                is_topic: profile.is_topic(&w.stem),
                viewed_f: w.viewed_f,
                viewed_l: w.viewed_l,
                serp_num: f64::from(w.serp_before),
                detail_num: f64::from(w.detail_before),
                total_num: total_pages as f64,
            };
            (w.stem.clone(), fv)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labels {
    pub labels: Vec<u8>,
    pub misses: Vec<String>,
}

/// Label 1 iff the stem was fixated in the first half and appears in a
/// second-half query but in no first-half query.
pub fn label_instances(first_stems: &[String], q_first: &BTreeSet<String>, q_second: &BTreeSet<String>) -> Labels {
    let new_terms: BTreeSet<&String> = q_second.difference(q_first).collect();
    let fixated: BTreeSet<&String> = first_stems.iter().collect();
    Labels {
        labels: first_stems.iter().map(|s| u8::from(new_terms.contains(s))).collect(),
        misses: new_terms
            .into_iter()
            .filter(|s| !fixated.contains(s))
            .cloned()
            .collect(),
    }
}

/// Everything produced for one session.
#[derive(Debug, Clone)]
pub struct SessionFeatures {
    pub session_id: String,
    pub instances: Vec<LabeledInstance>,
    pub misses: Vec<Miss>,
    pub profile: TopicProfile,
}

pub fn featurize_session(log: &SessionLog, res: &Resources, cfg: &FeaturizeConfig) -> Result<SessionFeatures, FeaturizeError> {
    let (first, second) = ingest::split_session(log, cfg.split_fraction)?;
    let agg = ingest::aggregate_by_stem(&first, res.stemmer.as_ref());
    let profile = match thesaurus::session_topics(&agg, &res.thesaurus, &cfg.topics) {
        Ok(p) => p,
        Err(ThesaurusError::NoAnnotatableTerms) => {
            log::warn!("session {}: no annotatable terms, is_topic is false throughout", log.session_id);
            TopicProfile::empty(cfg.topics.k)
        }
        Err(e) => unreachable!("topic parameters validated upstream: {e}"),
    };
    let q_first: Vec<QueryTerm> = first.query_terms().map(|t| QueryTerm::new(t, res.stemmer.as_ref())).collect();
    if q_first.is_empty() {
        log::warn!("session {}: no first-half queries, query relevance features are 0", log.session_id);
    }
    let q_first_stems: BTreeSet<String> = q_first.iter().map(|q| q.stem.clone()).collect();
    let q_second_stems: BTreeSet<String> = second.query_terms().map(|t| res.stemmer.stem(&t.to_lowercase())).collect();

    let features = build_features(&agg, &q_first, &profile, first.pages.len(), res);
    let stems: Vec<String> = features.iter().map(|(s, _)| s.clone()).collect();
    let labels = label_instances(&stems, &q_first_stems, &q_second_stems);
    let instances = features
        .into_iter()
        .zip(&labels.labels)
        .map(|((stem, features), &label)| LabeledInstance {
            session_id: log.session_id.clone(),
            stem,
            features,
            label,
        })
        .collect();
    Ok(SessionFeatures {
        session_id: log.session_id.clone(),
        instances,
        misses: labels
            .misses
            .into_iter()
            .map(|stem| Miss {
                session_id: log.session_id.clone(),
                stem,
            })
            .collect(),
        profile,
    })
}

/// Outcome of featurizing a corpus of sessions.
#[derive(Debug, Clone)]
pub struct CorpusFeatures {
    pub matrix: FeatureMatrix,
    pub sessions: Vec<SessionFeatures>,
    /// Sessions dropped because one half had no fixations.
    pub skipped: Vec<String>,
}

/// Featurizes every session (in parallel, order preserved) and attaches the
/// gaze tf-idf baseline inputs.
pub fn featurize_sessions(logs: &[SessionLog], res: &Resources, cfg: &FeaturizeConfig) -> Result<CorpusFeatures, FeaturizeError> {
    let results: Vec<Result<SessionFeatures, FeaturizeError>> =
        logs.par_iter().map(|l| featurize_session(l, res, cfg)).collect();
    let mut sessions = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(s) => sessions.push(s),
            Err(FeaturizeError::Ingest(IngestError::EmptyHalf { session_id, which })) => {
                log::warn!("skipping session {session_id}: {which} half has no fixations");
                skipped.push(session_id);
            }
            Err(e) => return Err(e),
        }
    }
    let glf = learn::glf_features(logs, cfg.split_fraction, res.stemmer.as_ref())?;
    let mut matrix = FeatureMatrix::default();
    let mut glf_rows = Vec::new();
    for s in &sessions {
        for inst in &s.instances {
            glf_rows.push(
                glf.get(&(inst.session_id.clone(), inst.stem.clone()))
                    .copied()
                    .unwrap_or_default(),
            );
        }
        matrix.instances.extend(s.instances.iter().cloned());
        matrix.misses.extend(s.misses.iter().cloned());
    }
    matrix.glf = Some(glf_rows);
    Ok(CorpusFeatures {
        matrix,
        sessions,
        skipped,
    })
}

/// Sample Pearson correlation, accumulated in one pass with running
/// co-moments.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, FeaturizeError> {
    if x.len() != y.len() {
        return Err(FeaturizeError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(FeaturizeError::TooFewRows(x.len()));
    }
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(FeaturizeError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub feature: Feature,
    /// `None` when undefined (zero variance).
    pub r: Option<f64>,
    /// For categorical features, the level whose one-hot column gave `r`.
    pub level: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub entries: Vec<CorrelationEntry>,
    pub selected: Vec<Feature>,
}

impl CorrelationReport {
    pub fn r(&self, f: Feature) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == f).and_then(|e| e.r)
    }
}

/// Correlation of each feature with the label. A categorical feature is
/// one-hot expanded and reports the signed r of its level with the largest
/// |r|.
pub fn correlation_report(instances: &[LabeledInstance]) -> CorrelationReport {
    let y: Vec<f64> = instances.iter().map(|i| f64::from(i.label)).collect();
    let entries: Vec<CorrelationEntry> = Feature::ALL
        .iter()
        .map(|&f| {
            let (r, level) = match f.kind() {
                InputKind::Categorical(levels) => {
                    let mut best: Option<(f64, &str)> = None;
                    for &lv in levels {
                        let x: Vec<f64> = instances
                            .iter()
                            .map(|i| f64::from(u8::from(i.features.raw(f) == RawValue::Level(lv))))
                            .collect();
                        if let Ok(r) = pearson(&x, &y) {
                            if best.is_none_or(|(b, _)| r.abs() > b.abs()) {
                                best = Some((r, lv));
                            }
                        }
                    }
                    (best.map(|b| b.0), best.map(|b| b.1.to_string()))
                }
                _ => {
                    let x: Vec<f64> = instances.iter().map(|i| numeric(i.features.raw(f))).collect();
                    (pearson(&x, &y).ok(), None)
                }
            };
            CorrelationEntry { feature: f, r, level }
        })
        .collect();
    let selected = entries.iter().filter(|e| e.r.is_some_and(|r| r > 0.0)).map(|e| e.feature).collect();
    CorrelationReport { entries, selected }
}

/// Features with a strictly positive correlation; undefined ones are dropped.
pub fn select_features(report: &CorrelationReport) -> Result<Vec<Feature>, FeaturizeError> {
    let kept: Vec<Feature> = report
        .entries
        .iter()
        .filter(|e| e.r.is_some_and(|r| r > 0.0))
        .map(|e| e.feature)
        .collect();
    if kept.is_empty() {
        return Err(FeaturizeError::EmptySelection);
    }
    Ok(kept)
}

fn numeric(v: RawValue) -> f64 {
    match v {
        RawValue::Num(x) => x,
        RawValue::Bool(b) => f64::from(u8::from(b)),
        RawValue::Level(_) => f64::NAN,
    }
}

/// A named model input before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputColumn {
    pub name: &'static str,
    pub kind: InputKind,
}

impl From<Feature> for InputColumn {
    fn from(f: Feature) -> Self {
        InputColumn {
            name: f.name(),
            kind: f.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodedKind {
    /// Min-max scaled continuous value.
    Scaled,
    /// Boolean mapped to {0, 1}.
    Binary,
    /// One level of a one-hot expanded categorical.
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub name: String,
    pub source: String,
    pub kind: EncodedKind,
}

/// Column encoder fitted on training rows only.
///
/// Categoricals are one-hot over their declared levels, so every row has
/// exactly one hot column per categorical. Continuous columns are min-max
/// scaled with training statistics; a constant training column encodes as 0
/// everywhere, and test values outside the training range are not clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    inputs: Vec<InputColumn>,
    ranges: Vec<Option<(f64, f64)>>,
    schema: Vec<EncodedColumn>,
}

impl Encoder {
    pub fn fit(inputs: &[InputColumn], rows: &[Vec<RawValue>]) -> Self {
        let mut ranges = Vec::with_capacity(inputs.len());
        let mut schema = Vec::new();
        for (j, col) in inputs.iter().enumerate() {
            match col.kind {
                InputKind::Continuous => {
                    let (lo, hi) = rows.iter().map(|r| numeric(r[j])).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                    ranges.push(Some(if rows.is_empty() { (0.0, 0.0) } else { (lo, hi) }));
                    schema.push(EncodedColumn {
                        name: col.name.to_string(),
                        source: col.name.to_string(),
                        kind: EncodedKind::Scaled,
                    });
                }
                InputKind::Boolean => {
                    ranges.push(None);
                    schema.push(EncodedColumn {
                        name: col.name.to_string(),
                        source: col.name.to_string(),
                        kind: EncodedKind::Binary,
                    });
                }
                InputKind::Categorical(levels) => {
                    ranges.push(None);
                    schema.extend(levels.iter().map(|lv| EncodedColumn {
                        name: format!("{}={lv}", col.name),
                        source: col.name.to_string(),
                        kind: EncodedKind::OneHot,
                    }));
                }
            }
        }
        Encoder {
            inputs: inputs.to_vec(),
            ranges,
            schema,
        }
    }

    pub fn schema(&self) -> &[EncodedColumn] {
        &self.schema
    }

    pub fn transform(&self, row: &[RawValue]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.schema.len());
        for (j, col) in self.inputs.iter().enumerate() {
            match col.kind {
                InputKind::Continuous => {
                    let (lo, hi) = self.ranges[j].expect("continuous range");
                    let x = numeric(row[j]);
                    out.push(if hi > lo { (x - lo) / (hi - lo) } else { 0.0 });
                }
                InputKind::Boolean => out.push(numeric(row[j])),
                InputKind::Categorical(levels) => {
                    out.extend(levels.iter().map(|lv| f64::from(u8::from(row[j] == RawValue::Level(lv)))));
                }
            }
        }
        out
    }
}

/// Encoded train and test matrices for the selected features, with the
/// encoder fitted on `train` alone.
pub fn encode_and_scale(
    train: &[&FeatureVector],
    test: &[&FeatureVector],
    selected: &[Feature],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<EncodedColumn>) {
    let inputs: Vec<InputColumn> = selected.iter().map(|&f| f.into()).collect();
    let raw = |fv: &&FeatureVector| selected.iter().map(|&f| fv.raw(f)).collect::<Vec<_>>();
    let train_raw: Vec<Vec<RawValue>> = train.iter().map(raw).collect();
    let enc = Encoder::fit(&inputs, &train_raw);
    let train_x = train_raw.iter().map(|r| enc.transform(r)).collect();
    let test_x = test.iter().map(|fv| enc.transform(&raw(fv))).collect();
    (train_x, test_x, enc.schema().to_vec())
}

const ID_COLUMNS: [&str; 2] = ["session_id", "stem"];

/// Writes `session_id,stem,<17 features>,label`.
pub fn write_matrix_csv<W: Write>(instances: &[LabeledInstance], w: W) -> Result<(), FeaturizeError> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = ID_COLUMNS
        .iter()
        .copied()
        .chain(Feature::ALL.iter().map(|f| f.name()))
        .chain(["label"])
        .collect();
    out.write_record(&header)?;
    for inst in instances {
        let mut rec = vec![inst.session_id.clone(), inst.stem.clone()];
        rec.extend(Feature::ALL.iter().map(|&f| inst.features.cell(f)));
        rec.push(inst.label.to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<Vec<LabeledInstance>, FeaturizeError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let pos: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let col = |name: &str| {
        pos.get(name).copied().ok_or_else(|| FeaturizeError::BadRow {
            line: 1,
            msg: format!("missing column `{name}`"),
        })
    };
    let sid = col("session_id")?;
    let stem = col("stem")?;
    let label = col("label")?;
    let cols: Vec<usize> = Feature::ALL.iter().map(|f| col(f.name())).collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| FeaturizeError::BadRow { line, msg };
        let cell = |f: Feature| &rec[cols[Feature::ALL.iter().position(|&g| g == f).expect("feature")]];
        let num = |f: Feature| -> Result<f64, FeaturizeError> {
            let s = cell(f);
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("{f}: `{s}` is not a finite number")))
        };
        let page = |f: Feature| cell(f).parse::<PageCategory>().map_err(|e| bad(format!("{f}: {e}")));
        let features = FeatureVector {
            dur: num(Feature::Dur)?,
            freq: num(Feature::Freq)?,
            time_f: num(Feature::TimeF)?,
            time_l: num(Feature::TimeL)?,
            time_len: num(Feature::TimeLen)?,
            term_len: num(Feature::TermLen)?,
            pos_tag: cell(Feature::PosTag).parse().map_err(|e| bad(format!("pos_tag: {e}")))?,
            max_cos: num(Feature::MaxCos)?,
            lch_sim: num(Feature::LchSim)?,
            res_sim: num(Feature::ResSim)?,
            lin_sim: num(Feature::LinSim)?,
            is_topic: match cell(Feature::IsTopic) {
                "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(bad(format!("is_topic: `{other}`"))),
            },
            viewed_f: page(Feature::ViewedF)?,
            viewed_l: page(Feature::ViewedL)?,
            serp_num: num(Feature::SerpNum)?,
            detail_num: num(Feature::DetailNum)?,
            total_num: num(Feature::TotalNum)?,
        };
        let label = match &rec[label] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("label: `{other}`"))),
        };
        out.push(LabeledInstance {
            session_id: rec[sid].to_string(),
            stem: rec[stem].to_string(),
            features,
            label,
        });
    }
    Ok(out)
}

/// Writes the baseline inputs as `session_id,stem,tfidf,fix_freq`.
pub fn write_glf_csv<W: Write>(instances: &[LabeledInstance], glf: &[GlfFeatures], w: W) -> Result<(), FeaturizeError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["session_id", "stem", "tfidf", "fix_freq"])?;
    for (inst, g) in instances.iter().zip(glf) {
        out.write_record([
            inst.session_id.as_str(),
            inst.stem.as_str(),
            &g.tfidf.to_string(),
            &g.fix_freq.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads baseline inputs and aligns them with `instances` by (session, stem).
pub fn read_glf_csv<R: Read>(instances: &[LabeledInstance], r: R) -> Result<Vec<GlfFeatures>, FeaturizeError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut map: HashMap<(String, String), GlfFeatures> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(FeaturizeError::BadRow {
                line,
                msg: format!("expected 4 fields, got {}", rec.len()),
            });
        }
        let bad = |what: &str| FeaturizeError::BadRow {
            line,
            msg: format!("bad {what}"),
        };
        let g = GlfFeatures {
            tfidf: rec[2].parse().map_err(|_| bad("tfidf"))?,
            fix_freq: rec[3].parse().map_err(|_| bad("fix_freq"))?,
        };
        map.insert((rec[0].to_string(), rec[1].to_string()), g);
    }
    instances
        .iter()
        .map(|i| {
            map.get(&(i.session_id.clone(), i.stem.clone())).copied().ok_or_else(|| FeaturizeError::BadRow {
                line: 0,
                msg: format!("no baseline row for ({}, {})", i.session_id, i.stem),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepPoint {
    pub k: usize,
    pub r: Option<f64>,
    pub topical_fraction: f64,
}

/// Correlation of `is_topic` with the labels when the session topics are cut
/// at each `k`.
pub fn topic_k_sweep(sessions: &[SessionFeatures], ks: &[usize]) -> Vec<KSweepPoint> {
    let y: Vec<f64> = sessions
        .iter()
        .flat_map(|s| s.instances.iter().map(|i| f64::from(i.label)))
        .collect();
    ks.iter()
        .map(|&k| {
            let profiles: BTreeMap<&str, TopicProfile> = sessions.iter().map(|s| (s.session_id.as_str(), s.profile.with_k(k))).collect();
            let x: Vec<f64> = sessions
                .iter()
                .flat_map(|s| {
                    let p = &profiles[s.session_id.as_str()];
                    s.instances.iter().map(move |i| f64::from(u8::from(p.is_topic(&i.stem))))
                })
                .collect();
            let topical_fraction = if x.is_empty() { 0.0 } else { x.iter().sum::<f64>() / x.len() as f64 };
            KSweepPoint {
                k,
                r: pearson(&x, &y).ok(),
                topical_fraction,
            }
        })
        .collect()
}
