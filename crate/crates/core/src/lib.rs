//! Predicting future query terms from word-eye-fixations.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`ingest`]: parse session logs, split sessions in time, aggregate fixations per stem.
//! - [`lexsem`]: taxonomy similarities (Leacock-Chodorow, Resnik, Lin) and embedding cosine.
//! - [`thesaurus`]: fuzzy thesaurus annotation and session topic extraction.
//! - [`featurize`]: per-term feature vectors, labels, correlations, selection and encoding.
//! - [`learn`]: classifiers, balancing, cross-validation, metrics and the gaze tf-idf baseline.
//! - [`synth`]: a seeded generator of synthetic sessions with a plantable signal.

pub mod featurize;
pub mod ingest;
pub mod learn;
pub mod lexsem;
pub mod synth;
pub mod text;
pub mod thesaurus;

pub use featurize::{Feature, FeatureMatrix, FeatureVector, LabeledInstance};
pub use ingest::{PageCategory, SessionLog, WordFixation};
pub use learn::{EvalReport, VariantId};
