//! Thesaurus annotation and session topic extraction.
//!
//! Fixated stems are mapped to a broader thesaurus concept by bounded edit
//! distance against every descriptor and synonym label. Concepts are then
//! ranked by the fixation duration annotated into them; the top `k` are the
//! session topics.

use crate::ingest::WordFixation;
use crate::text::Stemmer;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThesaurusError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("entry `{entry}` names unknown broader concept `{broader}`")]
    UnknownBroader { entry: String, broader: String },
    #[error("duplicate descriptor `{0}`")]
    DuplicateDescriptor(String),
    #[error("no fixated term above the duration threshold could be annotated")]
    NoAnnotatableTerms,
    #[error("no expressed topic terms")]
    EmptyExpressed,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance if it is at most `bound`, else `None`. Stops as soon as a
/// whole DP row exceeds the bound.
fn levenshtein_within(a: &[char], b: &[char], bound: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > bound {
        return None;
    }
    if a.is_empty() || b.is_empty() {
        return Some(a.len().max(b.len()));
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
            row_min = row_min.min(cur[j + 1]);
        }
        if row_min > bound {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Some(prev[b.len()]).filter(|&d| d <= bound)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThesaurusEntry {
    pub descriptor: String,
    pub synonyms: BTreeSet<String>,
    pub broader: Option<String>,
}

impl ThesaurusEntry {
    /// Concept an annotation through this entry resolves to.
    pub fn concept(&self) -> &str {
        self.broader.as_deref().unwrap_or(&self.descriptor)
    }
}

#[derive(Debug, Clone)]
struct Label {
    text: String,
    chars: Vec<char>,
    entry: usize,
}

#[derive(Debug, Clone)]
pub struct Thesaurus {
    entries: Vec<ThesaurusEntry>,
    labels: Vec<Label>,
    /// Label text to label positions, for the exact-match fast path.
    exact: HashMap<String, Vec<usize>>,
}

impl Thesaurus {
    pub fn new(entries: Vec<ThesaurusEntry>) -> Result<Self, ThesaurusError> {
        let mut by_descriptor = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_descriptor.insert(e.descriptor.clone(), i).is_some() {
                return Err(ThesaurusError::DuplicateDescriptor(e.descriptor.clone()));
            }
        }
        for e in &entries {
            if let Some(b) = &e.broader {
                if !by_descriptor.contains_key(b) {
                    return Err(ThesaurusError::UnknownBroader {
                        entry: e.descriptor.clone(),
                        broader: b.clone(),
                    });
                }
            }
        }
        let mut labels = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            for text in std::iter::once(&e.descriptor).chain(&e.synonyms) {
                labels.push(Label {
                    text: text.clone(),
                    chars: text.chars().collect(),
                    entry: i,
                });
            }
        }
        // canonical order realizes the tie rule: shorter, then lexicographic,
        // then by descriptor of the owning entry
        labels.sort_by(|x, y| {
            (x.chars.len(), &x.text, &entries[x.entry].descriptor).cmp(&(
                y.chars.len(),
                &y.text,
                &entries[y.entry].descriptor,
            ))
        });
        let mut exact: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            exact.entry(l.text.clone()).or_default().push(i);
        }
        Ok(Thesaurus { entries, labels, exact })
    }

    /// Parses `descriptor<TAB>broader-or-empty<TAB>syn1|syn2|...`; labels are
    /// lowercased. Blank lines and `#` comments are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self, ThesaurusError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(1..=3).contains(&fields.len()) {
                return Err(ThesaurusError::Parse {
                    line: i + 1,
                    msg: format!("expected up to 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let descriptor = fields[0].trim().to_lowercase();
            if descriptor.is_empty() {
                return Err(ThesaurusError::Parse {
                    line: i + 1,
                    msg: "empty descriptor".into(),
                });
            }
            let broader = fields
                .get(1)
                .map(|b| b.trim().to_lowercase())
                .filter(|b| !b.is_empty());
            let synonyms = fields
                .get(2)
                .map(|s| {
                    s.split('|')
                        .map(|x| x.trim().to_lowercase())
                        .filter(|x| !x.is_empty())
                        .collect()
                })
                .unwrap_or_default();
            entries.push(ThesaurusEntry {
                descriptor,
                synonyms,
                broader,
            });
        }
        Thesaurus::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, ThesaurusError> {
        let text = std::fs::read_to_string(path).map_err(|source| ThesaurusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }

    pub fn entries(&self) -> &[ThesaurusEntry] {
        &self.entries
    }

    /// Concept label for `term`, or `None` when no label is within
    /// `threshold` edits.
    pub fn annotate(&self, term: &str, threshold: usize) -> Option<&str> {
        self.best_label(term, threshold)
            .map(|l| self.entries[self.labels[l].entry].concept())
    }

    /// Position of the winning label: minimum distance, then the canonical
    /// (length, text, descriptor) order.
    fn best_label(&self, term: &str, threshold: usize) -> Option<usize> {
        if let Some(hits) = self.exact.get(term) {
            return hits.first().copied();
        }
        let chars: Vec<char> = term.chars().collect();
        let mut best: Option<(usize, usize)> = None;
        for (i, label) in self.labels.iter().enumerate() {
            let bound = best.map_or(threshold, |(d, _)| d.saturating_sub(1));
            if best.is_some_and(|(d, _)| d == 0) {
                break;
            }
            if let Some(d) = levenshtein_within(&chars, &label.chars, bound) {
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Ranked session concepts and the stems annotated into each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicProfile {
    pub k: usize,
    pub ranked: Vec<(String, u64)>,
    pub topic_set: Vec<String>,
    pub member_stems: BTreeMap<String, BTreeSet<String>>,
    /// Terms above the duration threshold.
    pub considered: usize,
    /// Of those, how many received a concept.
    pub annotated: usize,
}

impl TopicProfile {
    pub fn empty(k: usize) -> Self {
        TopicProfile {
            k,
            ranked: Vec::new(),
            topic_set: Vec::new(),
            member_stems: BTreeMap::new(),
            considered: 0,
            annotated: 0,
        }
    }

    pub fn annotated_fraction(&self) -> Option<f64> {
        (self.considered > 0).then(|| self.annotated as f64 / self.considered as f64)
    }

    pub fn is_topic(&self, stem: &str) -> bool {
        self.topic_set
            .iter()
            .any(|c| self.member_stems.get(c).is_some_and(|m| m.contains(stem)))
    }

    /// Stems annotated into any topic concept.
    pub fn topic_stems(&self) -> BTreeSet<&str> {
        self.topic_set
            .iter()
            .filter_map(|c| self.member_stems.get(c))
            .flatten()
            .map(String::as_str)
            .collect()
    }

    /// Profile with the same ranking cut at a different `k`.
    pub fn with_k(&self, k: usize) -> Self {
        TopicProfile {
            k,
            topic_set: self.ranked.iter().take(k).map(|(c, _)| c.clone()).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicParams {
    pub min_dur_ms: u64,
    pub k: usize,
    pub lev_threshold: usize,
}

impl Default for TopicParams {
    fn default() -> Self {
        TopicParams {
            min_dur_ms: 350,
            k: 5,
            lev_threshold: 3,
        }
    }
}

/// Ranks thesaurus concepts by the fixation duration annotated into them.
///
/// Only terms with `dur > min_dur_ms` take part. Concepts are ordered by
/// duration descending, then label ascending; the first `k` are the topics.
pub fn session_topics(wf: &[WordFixation], th: &Thesaurus, params: &TopicParams) -> Result<TopicProfile, ThesaurusError> {
    if params.k == 0 {
        return Err(ThesaurusError::InvalidK);
    }
    let mut terms: Vec<&WordFixation> = wf.iter().filter(|w| w.dur > params.min_dur_ms).collect();
    terms.sort_by(|a, b| b.dur.cmp(&a.dur).then(b.freq.cmp(&a.freq)).then(a.stem.cmp(&b.stem)));

    let mut durations: BTreeMap<String, u64> = BTreeMap::new();
    let mut members: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut annotated = 0;
    for w in &terms {
        if let Some(concept) = th.annotate(&w.stem, params.lev_threshold) {
            annotated += 1;
            *durations.entry(concept.to_string()).or_default() += w.dur;
            members.entry(concept.to_string()).or_default().insert(w.stem.clone());
        }
    }
    if durations.is_empty() {
        return Err(ThesaurusError::NoAnnotatableTerms);
    }
    let mut ranked: Vec<(String, u64)> = durations.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let topic_set = ranked.iter().take(params.k).map(|(c, _)| c.clone()).collect();
    Ok(TopicProfile {
        k: params.k,
        ranked,
        topic_set,
        member_stems: members,
        considered: terms.len(),
        annotated,
    })
}

/// Fraction of participant topic terms whose stem was annotated into a
/// session topic.
pub fn topic_match_rate<S: AsRef<str>>(profile: &TopicProfile, expressed: &[S], stemmer: &dyn Stemmer) -> Result<f64, ThesaurusError> {
    if expressed.is_empty() {
        return Err(ThesaurusError::EmptyExpressed);
    }
    let stems = profile.topic_stems();
    let hits = expressed
        .iter()
        .filter(|t| stems.contains(stemmer.stem(&t.as_ref().to_lowercase()).as_str()))
        .count();
    Ok(hits as f64 / expressed.len() as f64)
}
