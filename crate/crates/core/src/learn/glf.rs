//! Gaze tf-idf baseline inputs.

use crate::ingest::{aggregate_by_stem, split_session, IngestError, SessionLog};
use crate::text::Stemmer;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GlfFeatures {
    pub tfidf: f64,
    pub fix_freq: u64,
}

/// Keyed by `(session_id, stem)` for every stem fixated in a session's first
/// half. Documents are the viewed pages of all sessions; tf is the stem's
/// first-half fixation count. Sessions with an empty half are skipped.
pub fn glf_features(
    logs: &[SessionLog],
    split_fraction: f64,
    stemmer: &dyn Stemmer,
) -> Result<BTreeMap<(String, String), GlfFeatures>, IngestError> {
    let mut n_pages = 0usize;
    let mut df: HashMap<String, usize> = HashMap::new();
    for log in logs {
        n_pages += log.pages.len();
        let mut per_page: HashMap<&str, BTreeSet<String>> = HashMap::new();
        for f in &log.fixations {
            per_page.entry(f.page_id.as_str()).or_default().insert(stemmer.stem(&f.word));
        }
        for stems in per_page.into_values() {
            for s in stems {
                *df.entry(s).or_default() += 1;
            }
        }
    }

    let mut out = BTreeMap::new();
    for log in logs {
        let first = match split_session(log, split_fraction) {
            Ok((first, _)) => first,
            Err(IngestError::EmptyHalf { .. }) => continue,
            Err(e) => return Err(e),
        };
        for wf in aggregate_by_stem(&first, stemmer) {
            let idf = df
                .get(&wf.stem)
                .map_or(0.0, |&d| (n_pages as f64 / d as f64).ln());
            out.insert(
                (log.session_id.clone(), wf.stem.clone()),
                GlfFeatures {
                    tfidf: wf.freq as f64 * idf,
                    fix_freq: wf.freq,
                },
            );
        }
    }
    Ok(out)
}
