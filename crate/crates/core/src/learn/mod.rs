//! Classifier suite, balancing, cross-validation and reporting.
//!
//! Every random choice draws from a ChaCha stream derived from the run seed,
//! a stream tag and an index (fold, tree), never from thread scheduling, so
//! equal inputs and seed give equal reports apart from `runtime_s`.

pub mod bayes;
pub mod forest;
mod glf;
pub mod linear;
pub mod metrics;
pub mod sampling;

pub use bayes::NaiveBayes;
pub use forest::{RandomForest, RfParams};
pub use glf::{glf_features, GlfFeatures};
pub use linear::{LinearModel, LrParams, SvmParams};
pub use metrics::{ClassMetrics, Confusion};
pub use sampling::{kfold, split_train_test, undersample, Fold};

use crate::featurize::{
    correlation_report, select_features, EncodedColumn, EncodedKind, Encoder, Feature, FeatureCategory, FeatureMatrix,
    FeaturizeError, InputColumn, InputKind, RawValue,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("only one class present")]
    SingleClass,
    #[error("each class needs at least two instances for a train/test split")]
    TooFewInstances,
    #[error("{k} folds requested but the minority class has {minority} instances")]
    KTooLarge { k: usize, minority: usize },
    #[error("at least two folds are required, got {0}")]
    InvalidFolds(usize),
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("training data is empty")]
    EmptyData,
    #[error("variant {0} needs baseline tf-idf inputs, which the matrix does not carry")]
    MissingBaselineInputs(VariantId),
    #[error("variant {0} has no input columns left")]
    NoColumns(VariantId),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Undersample = 1,
    Kfold = 2,
    Holdout = 3,
    Model = 4,
    Tree = 5,
    SynthWorld = 6,
    SynthSession = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream as u64)) ^ index)
}

pub(crate) fn rng_for(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "LR")]
    Logistic,
    #[serde(rename = "SVM")]
    LinearSvm,
    #[serde(rename = "NB")]
    NaiveBayes,
}

/// Hyperparameters for every classifier kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub rf: RfParams,
    pub lr: LrParams,
    pub svm: SvmParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub params: ClassifierParams,
    pub seed: u64,
}

/// Encoded training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub schema: Vec<EncodedColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Forest(RandomForest),
    Logistic(LinearModel),
    Svm(LinearModel),
    Bayes(NaiveBayes),
    /// Fallback when every column is constant.
    Constant(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: Model,
    pub schema: Vec<EncodedColumn>,
}

impl TrainedModel {
    /// Positive-class probability in [0, 1].
    pub fn predict_score(&self, row: &[f64]) -> f64 {
        match &self.model {
            Model::Forest(f) => f.score(row),
            Model::Logistic(m) | Model::Svm(m) => m.score(row),
            Model::Bayes(nb) => nb.score(row),
            Model::Constant(c) => f64::from(*c),
        }
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.predict_score(row) >= 0.5)
    }

    /// Names of the input features the model was trained on.
    pub fn sources(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.schema {
            if !out.contains(&c.source.as_str()) {
                out.push(&c.source);
            }
        }
        out
    }
}

pub fn train(spec: &ClassifierSpec, data: &Dataset) -> Result<TrainedModel, LearnError> {
    if data.y.is_empty() {
        return Err(LearnError::EmptyData);
    }
    let pos = data.y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == data.y.len() {
        return Err(LearnError::SingleClass);
    }
    let d = data.schema.len();
    let varying = (0..d).any(|j| data.x.iter().any(|r| r[j] != data.x[0][j]));
    let model = if !varying {
        let majority = u8::from(2 * pos >= data.y.len());
        log::warn!("all training columns are constant; predicting class {majority} throughout");
        Model::Constant(majority)
    } else {
        match spec.kind {
            ClassifierKind::RandomForest => Model::Forest(RandomForest::fit(&data.x, &data.y, &spec.params.rf, spec.seed)),
            ClassifierKind::Logistic => Model::Logistic(LinearModel::fit_logistic(&data.x, &data.y, &spec.params.lr)),
            ClassifierKind::LinearSvm => Model::Svm(LinearModel::fit_svm(&data.x, &data.y, &spec.params.svm)),
            ClassifierKind::NaiveBayes => {
                let kinds: Vec<EncodedKind> = data.schema.iter().map(|c| c.kind).collect();
                Model::Bayes(NaiveBayes::fit(&data.x, &data.y, &kinds))
            }
        }
    };
    Ok(TrainedModel {
        model,
        schema: data.schema.clone(),
    })
}

/// Experiment configurations, named after the classifier and its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantId {
    #[serde(rename = "rf")]
    RfFull,
    #[serde(rename = "rf-qr")]
    RfQr,
    #[serde(rename = "rf-nf")]
    RfNf,
    #[serde(rename = "rf-glf")]
    RfGlf,
    #[serde(rename = "lr")]
    LrFull,
    #[serde(rename = "svm")]
    SvmFull,
    #[serde(rename = "nb")]
    NbFull,
}

/// One model input: a term feature or a baseline column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantInput {
    Feature(Feature),
    Tfidf,
    FixFreq,
}

impl VariantInput {
    fn column(self) -> InputColumn {
        match self {
            VariantInput::Feature(f) => f.into(),
            VariantInput::Tfidf => InputColumn {
                name: "tfidf",
                kind: InputKind::Continuous,
            },
            VariantInput::FixFreq => InputColumn {
                name: "fix_freq",
                kind: InputKind::Continuous,
            },
        }
    }
}

impl VariantId {
    pub const ALL: [VariantId; 7] = [
        VariantId::RfGlf,
        VariantId::RfQr,
        VariantId::RfNf,
        VariantId::RfFull,
        VariantId::LrFull,
        VariantId::SvmFull,
        VariantId::NbFull,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            VariantId::RfFull => "rf",
            VariantId::RfQr => "rf-qr",
            VariantId::RfNf => "rf-nf",
            VariantId::RfGlf => "rf-glf",
            VariantId::LrFull => "lr",
            VariantId::SvmFull => "svm",
            VariantId::NbFull => "nb",
        }
    }

    /// Label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            VariantId::RfFull => "RF",
            VariantId::RfQr => "RF-QR",
            VariantId::RfNf => "RF-nF",
            VariantId::RfGlf => "RF-GLF",
            VariantId::LrFull => "LR",
            VariantId::SvmFull => "SVM",
            VariantId::NbFull => "NB",
        }
    }

    pub fn classifier(self) -> ClassifierKind {
        match self {
            VariantId::RfFull | VariantId::RfQr | VariantId::RfNf | VariantId::RfGlf => ClassifierKind::RandomForest,
            VariantId::LrFull => ClassifierKind::Logistic,
            VariantId::SvmFull => ClassifierKind::LinearSvm,
            VariantId::NbFull => ClassifierKind::NaiveBayes,
        }
    }

    /// Whether the inputs depend on positive-correlation feature selection.
    pub fn uses_selection(self) -> bool {
        !matches!(self, VariantId::RfQr | VariantId::RfGlf)
    }

    /// Input columns given the selected features.
    pub fn inputs(self, selected: &[Feature]) -> Vec<VariantInput> {
        match self {
            VariantId::RfQr => [Feature::MaxCos, Feature::LchSim, Feature::ResSim, Feature::LinSim]
                .into_iter()
                .map(VariantInput::Feature)
                .collect(),
            VariantId::RfGlf => vec![VariantInput::Tfidf, VariantInput::FixFreq],
            VariantId::RfNf => selected
                .iter()
                .filter(|f| f.category() != FeatureCategory::Fixation)
                .map(|&f| VariantInput::Feature(f))
                .collect(),
            _ => selected.iter().map(|&f| VariantInput::Feature(f)).collect(),
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for VariantId {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantId::ALL
            .iter()
            .copied()
            .find(|v| v.cli_name() == s)
            .ok_or_else(|| LearnError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub folds: usize,
    pub train_fraction: f64,
    pub params: ClassifierParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            folds: 10,
            train_fraction: 0.8,
            params: ClassifierParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub class_0: ClassMetrics,
    pub class_1: ClassMetrics,
}

impl PerClass {
    fn from_confusion(c: Confusion) -> Self {
        let [class_0, class_1] = c.per_class();
        PerClass { class_0, class_1 }
    }

    pub fn macro_avg(&self) -> ClassMetrics {
        ClassMetrics::mean(&[self.class_0, self.class_1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub per_class: PerClass,
    pub macro_avg: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub variant: VariantId,
    pub classifier: ClassifierKind,
    pub seed: u64,
    pub folds: usize,
    pub train_fraction: f64,
    pub params: ClassifierParams,
    pub n_instances: usize,
    pub n_positive: usize,
    pub n_balanced: usize,
    pub inputs: Vec<String>,
    pub encoded_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: VariantId,
    pub label: String,
    /// Class metrics averaged over folds.
    pub per_class: PerClass,
    /// Unweighted mean over classes of `per_class`.
    pub macro_avg: ClassMetrics,
    /// Wall-clock seconds spent training and predicting across folds.
    pub runtime_s: f64,
    pub fold_breakdown: Vec<SplitReport>,
    /// Additional stratified train/test check on the balanced data.
    pub holdout: SplitReport,
    pub config: ConfigEcho,
}

/// Raw model inputs for every instance of the matrix.
fn raw_rows(matrix: &FeatureMatrix, inputs: &[VariantInput], variant: VariantId) -> Result<Vec<Vec<RawValue>>, LearnError> {
    let needs_glf = inputs.iter().any(|i| !matches!(i, VariantInput::Feature(_)));
    let glf = match (&matrix.glf, needs_glf) {
        (Some(g), _) => Some(g),
        (None, true) => return Err(LearnError::MissingBaselineInputs(variant)),
        (None, false) => None,
    };
    Ok(matrix
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            inputs
                .iter()
                .map(|input| match input {
                    VariantInput::Feature(f) => inst.features.raw(*f),
                    VariantInput::Tfidf => RawValue::Num(glf.expect("checked")[i].tfidf),
                    VariantInput::FixFreq => RawValue::Num(glf.expect("checked")[i].fix_freq as f64),
                })
                .collect()
        })
        .collect())
}

/// Model inputs for a variant, with selection applied when it uses one.
pub fn variant_inputs(variant: VariantId, matrix: &FeatureMatrix) -> Result<Vec<VariantInput>, LearnError> {
    let selected = if variant.uses_selection() {
        select_features(&correlation_report(&matrix.instances))?
    } else {
        Vec::new()
    };
    let inputs = variant.inputs(&selected);
    if inputs.is_empty() {
        return Err(LearnError::NoColumns(variant));
    }
    Ok(inputs)
}

struct Prepared {
    inputs: Vec<InputColumn>,
    raw: Vec<Vec<RawValue>>,
    labels: Vec<u8>,
}

fn prepare(variant: VariantId, matrix: &FeatureMatrix) -> Result<Prepared, LearnError> {
    let inputs = variant_inputs(variant, matrix)?;
    let raw = raw_rows(matrix, &inputs, variant)?;
    Ok(Prepared {
        inputs: inputs.iter().map(|i| i.column()).collect(),
        raw,
        labels: matrix.instances.iter().map(|i| i.label).collect(),
    })
}

fn fit_and_score(
    p: &Prepared,
    train_rows: &[usize],
    test_rows: &[usize],
    spec: &ClassifierSpec,
) -> Result<(TrainedModel, Confusion), LearnError> {
    let train_raw: Vec<Vec<RawValue>> = train_rows.iter().map(|&r| p.raw[r].clone()).collect();
    let enc = Encoder::fit(&p.inputs, &train_raw);
    let data = Dataset {
        x: train_raw.iter().map(|r| enc.transform(r)).collect(),
        y: train_rows.iter().map(|&r| p.labels[r]).collect(),
        schema: enc.schema().to_vec(),
    };
    let model = train(spec, &data)?;
    let truth: Vec<u8> = test_rows.iter().map(|&r| p.labels[r]).collect();
    let predicted: Vec<u8> = test_rows.iter().map(|&r| model.predict(&enc.transform(&p.raw[r]))).collect();
    Ok((model, Confusion::from_predictions(&truth, &predicted)))
}

fn split_report(n_train: usize, n_test: usize, confusion: Confusion) -> SplitReport {
    let per_class = PerClass::from_confusion(confusion);
    SplitReport {
        n_train,
        n_test,
        confusion,
        macro_avg: per_class.macro_avg(),
        per_class,
    }
}

/// Undersample, stratified k-fold cross-validation, fold-averaged class
/// metrics and their macro average, plus a stratified holdout check.
pub fn evaluate(variant: VariantId, matrix: &FeatureMatrix, cfg: &EvalConfig) -> Result<EvalReport, LearnError> {
    let p = prepare(variant, matrix)?;
    let balanced = undersample(&p.labels, cfg.seed)?;
    let bal_labels: Vec<u8> = balanced.iter().map(|&i| p.labels[i]).collect();
    let folds = kfold(&bal_labels, cfg.folds, cfg.seed)?;
    let spec_for = |index: u64| ClassifierSpec {
        kind: variant.classifier(),
        params: cfg.params,
        seed: derive_seed(cfg.seed, Stream::Model, index),
    };
    let to_rows = |local: &[usize]| local.iter().map(|&i| balanced[i]).collect::<Vec<_>>();

    let started = Instant::now();
    let fold_results: Vec<Result<(TrainedModel, Confusion), LearnError>> = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| fit_and_score(&p, &to_rows(&fold.train), &to_rows(&fold.validation), &spec_for(k as u64)))
        .collect();
    let runtime_s = started.elapsed().as_secs_f64();

    let mut fold_breakdown = Vec::with_capacity(folds.len());
    let mut schema = Vec::new();
    for (fold, r) in folds.iter().zip(fold_results) {
        let (model, confusion) = r?;
        schema = model.schema;
        fold_breakdown.push(split_report(fold.train.len(), fold.validation.len(), confusion));
    }
    let per_class = PerClass {
        class_0: ClassMetrics::mean(&fold_breakdown.iter().map(|f| f.per_class.class_0).collect::<Vec<_>>()),
        class_1: ClassMetrics::mean(&fold_breakdown.iter().map(|f| f.per_class.class_1).collect::<Vec<_>>()),
    };

    let (tr, te) = split_train_test(&bal_labels, cfg.train_fraction, cfg.seed)?;
    let (_, confusion) = fit_and_score(&p, &to_rows(&tr), &to_rows(&te), &spec_for(u64::MAX))?;
    let holdout = split_report(tr.len(), te.len(), confusion);

    Ok(EvalReport {
        variant,
        label: variant.label().to_string(),
        macro_avg: per_class.macro_avg(),
        per_class,
        runtime_s,
        fold_breakdown,
        holdout,
        config: ConfigEcho {
            variant,
            classifier: variant.classifier(),
            seed: cfg.seed,
            folds: cfg.folds,
            train_fraction: cfg.train_fraction,
            params: cfg.params,
            n_instances: p.labels.len(),
            n_positive: p.labels.iter().filter(|&&l| l == 1).count(),
            n_balanced: balanced.len(),
            inputs: p.inputs.iter().map(|c| c.name.to_string()).collect(),
            encoded_columns: schema.iter().map(|c| c.name.clone()).collect(),
        },
    })
}

/// Trains one model for a variant on the whole undersampled matrix.
pub fn train_variant(variant: VariantId, matrix: &FeatureMatrix, cfg: &EvalConfig) -> Result<TrainedModel, LearnError> {
    let p = prepare(variant, matrix)?;
    let balanced = undersample(&p.labels, cfg.seed)?;
    let spec = ClassifierSpec {
        kind: variant.classifier(),
        params: cfg.params,
        seed: derive_seed(cfg.seed, Stream::Model, u64::MAX - 1),
    };
    Ok(fit_and_score(&p, &balanced, &[], &spec)?.0)
}

/// Renders reports as a fixed-width table of macro metrics.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>12} {:>10} {:>10} {:>10}\n",
        "Method", "Run-time (s)", "Precision", "Recall", "F1"
    ));
    out.push_str(&format!("{}\n", "-".repeat(56)));
    for r in reports {
        out.push_str(&format!(
            "{:<10} {:>12.3} {:>10.3} {:>10.3} {:>10.3}\n",
            r.label, r.runtime_s, r.macro_avg.precision, r.macro_avg.recall, r.macro_avg.f1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_stream_and_index() {
        let a = derive_seed(7, Stream::Tree, 0);
        assert_ne!(a, derive_seed(7, Stream::Tree, 1));
        assert_ne!(a, derive_seed(7, Stream::Kfold, 0));
        assert_ne!(a, derive_seed(8, Stream::Tree, 0));
        assert_eq!(a, derive_seed(7, Stream::Tree, 0));
    }

    #[test]
    fn variant_names_and_columns() {
        for v in VariantId::ALL {
            assert_eq!(v.cli_name().parse::<VariantId>().unwrap(), v);
        }
        assert!("rf-xx".parse::<VariantId>().is_err());
        let selected = [Feature::Dur, Feature::Freq, Feature::MaxCos, Feature::IsTopic];
        assert_eq!(
            VariantId::RfNf.inputs(&selected),
            vec![VariantInput::Feature(Feature::MaxCos), VariantInput::Feature(Feature::IsTopic)]
        );
        assert_eq!(VariantId::RfQr.inputs(&selected).len(), 4);
        assert_eq!(VariantId::RfGlf.inputs(&selected), vec![VariantInput::Tfidf, VariantInput::FixFreq]);
    }

    #[test]
    fn constant_columns_fall_back_to_majority() {
        let data = Dataset {
            x: vec![vec![1.0]; 5],
            y: vec![0, 0, 0, 1, 1],
            schema: vec![EncodedColumn {
                name: "a".into(),
                source: "a".into(),
                kind: EncodedKind::Scaled,
            }],
        };
        let spec = ClassifierSpec {
            kind: ClassifierKind::RandomForest,
            params: ClassifierParams::default(),
            seed: 1,
        };
        let m = train(&spec, &data).unwrap();
        assert_eq!(m.model, Model::Constant(0));
        let single = Dataset {
            y: vec![1; 5],
            ..data
        };
        assert!(matches!(train(&spec, &single), Err(LearnError::SingleClass)));
    }
}
