//! Session log parsing, time splitting and per-stem fixation aggregation.
//!
//! A session log is one JSON document per user search session. Pages are
//! SERPs or detail views of records; fixations are per-page word aggregates
//! produced upstream by the reading-protocol tooling. All timestamps are
//! milliseconds since session start once parsed.

use crate::text::Stemmer;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed session log: {0}")]
    MalformedInput(String),
    #[error("fixation references unknown page `{0}`")]
    DanglingPageRef(String),
    #[error("time order violation: {0}")]
    TimeOrderViolation(String),
    #[error("detail page `{0}` has no total_words")]
    MissingWordCount(String),
    #[error("detail page `{page_id}` declares {total_words} words but {fixated} distinct words were fixated")]
    InvalidWordCount {
        page_id: String,
        total_words: u32,
        fixated: usize,
    },
    #[error("session has no detail pages")]
    NoDetailPages,
    #[error("split fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("session `{0}` has zero duration")]
    ZeroDuration(String),
    #[error("{which} half of session `{session_id}` contains no fixations")]
    EmptyHalf { session_id: String, which: Half },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<IngestError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Half::First => f.write_str("first"),
            Half::Second => f.write_str("second"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PageCategory {
    #[serde(rename = "SERP")]
    Serp,
    #[serde(rename = "DETAIL")]
    Detail,
}

impl PageCategory {
    pub const ALL: [PageCategory; 2] = [PageCategory::Serp, PageCategory::Detail];

    pub fn as_str(self) -> &'static str {
        match self {
            PageCategory::Serp => "SERP",
            PageCategory::Detail => "DETAIL",
        }
    }
}

impl fmt::Display for PageCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PageCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SERP" => Ok(PageCategory::Serp),
            "DETAIL" => Ok(PageCategory::Detail),
            other => Err(format!("unknown page category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageView {
    pub page_id: String,
    pub category: PageCategory,
    pub order_index: usize,
    pub enter_ts: u64,
    pub exit_ts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_words: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryEvent {
    pub ts: u64,
    pub raw: String,
    #[serde(skip)]
    pub terms: Vec<String>,
}

impl QueryEvent {
    pub fn new(ts: u64, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let terms = tokenize_query(&raw);
        QueryEvent { ts, raw, terms }
    }
}

/// Whitespace tokenization with lowercasing.
pub fn tokenize_query(raw: &str) -> Vec<String> {
    raw.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFixation {
    pub page_id: String,
    pub word: String,
    pub duration_ms: u64,
    pub count: u32,
    pub timestamps: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionLog {
    pub session_id: String,
    pub participant_id: String,
    pub topic_terms: Vec<String>,
    pub pages: Vec<PageView>,
    pub queries: Vec<QueryEvent>,
    pub fixations: Vec<RawFixation>,
}

/// Per-session, per-stem aggregate of gaze behavior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFixation {
    pub stem: String,
    pub dur: u64,
    pub freq: u64,
    pub time_f: u64,
    pub time_l: u64,
    pub time_len: u64,
    pub viewed_f: PageCategory,
    pub viewed_l: PageCategory,
    pub serp_before: u32,
    pub detail_before: u32,
    /// Contributing lowercase surface forms with their fixation counts.
    pub surfaces: BTreeMap<String, u64>,
}

impl WordFixation {
    /// Surface form with the highest fixation count; ties go to the
    /// lexicographically smallest form.
    pub fn dominant_surface(&self) -> &str {
        self.surfaces
            .iter()
            .fold(None::<(&String, u64)>, |best, (s, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((s, c)),
            })
            .map(|(s, _)| s.as_str())
            .unwrap_or(self.stem.as_str())
    }
}

#[derive(Deserialize)]
struct SessionDoc {
    session_id: String,
    participant_id: String,
    #[serde(default)]
    topic_terms: Vec<String>,
    #[serde(default)]
    start_ts: Option<i64>,
    pages: Vec<PageDoc>,
    #[serde(default)]
    queries: Vec<QueryDoc>,
    #[serde(default)]
    fixations: Vec<FixationDoc>,
}

#[derive(Deserialize)]
struct PageDoc {
    page_id: String,
    category: PageCategory,
    order_index: usize,
    enter_ts: i64,
    exit_ts: i64,
    #[serde(default)]
    total_words: Option<u32>,
}

#[derive(Deserialize)]
struct QueryDoc {
    ts: i64,
    raw: String,
}

#[derive(Deserialize)]
struct FixationDoc {
    page_id: String,
    word: String,
    duration_ms: u64,
    count: u32,
    timestamps: Vec<i64>,
}

fn relative(ts: i64, start: i64, what: &str) -> Result<u64, IngestError> {
    u64::try_from(ts - start)
        .map_err(|_| IngestError::TimeOrderViolation(format!("{what} timestamp {ts} precedes session start {start}")))
}

/// Parses and validates one session document.
///
/// Timestamps may be absolute when a top-level `start_ts` is given; they are
/// rebased to milliseconds since session start.
pub fn parse_session(bytes: &[u8]) -> Result<SessionLog, IngestError> {
    let doc: SessionDoc = serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedInput(e.to_string()))?;
    let start = doc.start_ts.unwrap_or(0);

    let mut pages = Vec::with_capacity(doc.pages.len());
    for p in doc.pages {
        pages.push(PageView {
            enter_ts: relative(p.enter_ts, start, "page")?,
            exit_ts: relative(p.exit_ts, start, "page")?,
            page_id: p.page_id,
            category: p.category,
            order_index: p.order_index,
            total_words: p.total_words,
        });
    }
    let queries = doc
        .queries
        .into_iter()
        .map(|q| Ok(QueryEvent::new(relative(q.ts, start, "query")?, q.raw)))
        .collect::<Result<Vec<_>, IngestError>>()?;
    let mut fixations = Vec::with_capacity(doc.fixations.len());
    for f in doc.fixations {
        let mut timestamps = f
            .timestamps
            .iter()
            .map(|&t| relative(t, start, "fixation"))
            .collect::<Result<Vec<_>, _>>()?;
        timestamps.sort_unstable();
        fixations.push(RawFixation {
            page_id: f.page_id,
            word: f.word,
            duration_ms: f.duration_ms,
            count: f.count,
            timestamps,
        });
    }

    pages.sort_by_key(|p| p.order_index);

    let log = SessionLog {
        session_id: doc.session_id,
        participant_id: doc.participant_id,
        topic_terms: doc.topic_terms,
        pages,
        queries,
        fixations,
    };
    log.validate()?;
    Ok(log)
}

/// Reads every `*.json` file in `dir`, in file name order.
pub fn load_sessions_dir(dir: &Path) -> Result<Vec<SessionLog>, IngestError> {
    let io = |source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|source| IngestError::Io {
                path: p.display().to_string(),
                source,
            })?;
            parse_session(&bytes).map_err(|e| IngestError::InFile {
                path: p.display().to_string(),
                source: Box::new(e),
            })
        })
        .collect()
}

impl SessionLog {
    /// Checks every structural and temporal invariant. Pages are expected in
    /// `order_index` order afterwards.
    pub fn validate(&self) -> Result<(), IngestError> {
        use IngestError::*;
        if self.pages.is_empty() {
            return Err(MalformedInput("session has no pages".into()));
        }
        let mut ids = HashSet::new();
        for (i, p) in self.pages.iter().enumerate() {
            if p.page_id.is_empty() {
                return Err(MalformedInput("empty page_id".into()));
            }
            if !ids.insert(p.page_id.as_str()) {
                return Err(MalformedInput(format!("duplicate page_id `{}`", p.page_id)));
            }
            if p.order_index != i {
                return Err(MalformedInput(format!(
                    "order_index values must be 0..{} in listed order; page `{}` has {}",
                    self.pages.len(),
                    p.page_id,
                    p.order_index
                )));
            }
            if p.exit_ts < p.enter_ts {
                return Err(TimeOrderViolation(format!("page `{}` exits before it is entered", p.page_id)));
            }
        }
        for w in self.pages.windows(2) {
            if w[1].enter_ts < w[0].exit_ts {
                return Err(TimeOrderViolation(format!(
                    "pages `{}` and `{}` overlap in time",
                    w[0].page_id, w[1].page_id
                )));
            }
        }
        let end = self.end_ts();
        for w in self.queries.windows(2) {
            if w[1].ts < w[0].ts {
                return Err(TimeOrderViolation("queries are not sorted by ts".into()));
            }
        }
        for q in &self.queries {
            if q.terms.is_empty() {
                return Err(MalformedInput("query with no terms".into()));
            }
            if q.ts > end {
                return Err(TimeOrderViolation(format!("query at {} after session end {end}", q.ts)));
            }
        }
        let pages: HashMap<&str, &PageView> = self.pages.iter().map(|p| (p.page_id.as_str(), p)).collect();
        for f in &self.fixations {
            let page = pages
                .get(f.page_id.as_str())
                .ok_or_else(|| DanglingPageRef(f.page_id.clone()))?;
            if f.word.trim().is_empty() {
                return Err(MalformedInput("fixation with empty word".into()));
            }
            if f.count == 0 {
                return Err(MalformedInput(format!("fixation on `{}` has count 0", f.word)));
            }
            if f.timestamps.len() != f.count as usize {
                return Err(MalformedInput(format!(
                    "fixation on `{}` has count {} but {} timestamps",
                    f.word,
                    f.count,
                    f.timestamps.len()
                )));
            }
            if f.duration_ms < u64::from(f.count) {
                return Err(MalformedInput(format!(
                    "fixation on `{}` lasts {} ms over {} fixations",
                    f.word, f.duration_ms, f.count
                )));
            }
            if let Some(&t) = f.timestamps.iter().find(|&&t| t < page.enter_ts || t > page.exit_ts) {
                return Err(TimeOrderViolation(format!(
                    "fixation on `{}` at {t} lies outside page `{}`",
                    f.word, page.page_id
                )));
            }
        }
        Ok(())
    }

    pub fn page(&self, page_id: &str) -> Option<&PageView> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }

    pub fn start_ts(&self) -> u64 {
        let page = self.pages.first().map_or(u64::MAX, |p| p.enter_ts);
        let query = self.queries.first().map_or(u64::MAX, |q| q.ts);
        page.min(query)
    }

    pub fn end_ts(&self) -> u64 {
        let page = self.pages.iter().map(|p| p.exit_ts).max().unwrap_or(0);
        let query = self.queries.last().map_or(0, |q| q.ts);
        page.max(query)
    }

    pub fn count_pages(&self, category: PageCategory) -> usize {
        self.pages.iter().filter(|p| p.category == category).count()
    }

    pub fn query_terms(&self) -> impl Iterator<Item = &str> {
        self.queries.iter().flat_map(|q| q.terms.iter().map(String::as_str))
    }
}

/// Collapses per-page fixations into one aggregate per stem, sorted by stem.
pub fn aggregate_by_stem(s: &SessionLog, stemmer: &dyn Stemmer) -> Vec<WordFixation> {
    struct Acc {
        dur: u64,
        freq: u64,
        first: (u64, usize),
        last: (u64, usize),
        surfaces: BTreeMap<String, u64>,
    }

    let order: HashMap<&str, usize> = s.pages.iter().map(|p| (p.page_id.as_str(), p.order_index)).collect();
    let mut accs: BTreeMap<String, Acc> = BTreeMap::new();
    for f in &s.fixations {
        let surface = f.word.to_lowercase();
        let stem = stemmer.stem(&surface);
        let idx = order[f.page_id.as_str()];
        let lo = (*f.timestamps.iter().min().expect("validated nonempty"), idx);
        let hi = (*f.timestamps.iter().max().expect("validated nonempty"), idx);
        let acc = accs.entry(stem).or_insert_with(|| Acc {
            dur: 0,
            freq: 0,
            first: lo,
            last: hi,
            surfaces: BTreeMap::new(),
        });
        acc.dur += f.duration_ms;
        acc.freq += u64::from(f.count);
        // lexicographic tuple order gives the tie rules: lower page wins
        // the first slot, higher page wins the last slot.
        acc.first = acc.first.min(lo);
        acc.last = acc.last.max(hi);
        *acc.surfaces.entry(surface).or_default() += u64::from(f.count);
    }

    accs.into_iter()
        .map(|(stem, a)| {
            let first_page = &s.pages[a.first.1];
            let before = &s.pages[..first_page.order_index];
            WordFixation {
                stem,
                dur: a.dur,
                freq: a.freq,
                time_f: a.first.0,
                time_l: a.last.0,
                time_len: a.last.0 - a.first.0,
                viewed_f: first_page.category,
                viewed_l: s.pages[a.last.1].category,
                serp_before: before.iter().filter(|p| p.category == PageCategory::Serp).count() as u32,
                detail_before: before.iter().filter(|p| p.category == PageCategory::Detail).count() as u32,
                surfaces: a.surfaces,
            }
        })
        .collect()
}

/// Mean over detail pages of (distinct fixated words) / (declared word count).
pub fn coverage_stat(s: &SessionLog) -> Result<f64, IngestError> {
    let mut fixated: HashMap<&str, BTreeSet<String>> = HashMap::new();
    for f in &s.fixations {
        fixated.entry(f.page_id.as_str()).or_default().insert(f.word.to_lowercase());
    }
    let mut ratios = Vec::new();
    for p in s.pages.iter().filter(|p| p.category == PageCategory::Detail) {
        let total = p.total_words.ok_or_else(|| IngestError::MissingWordCount(p.page_id.clone()))?;
        let seen = fixated.get(p.page_id.as_str()).map_or(0, BTreeSet::len);
        if total == 0 || seen > total as usize {
            return Err(IngestError::InvalidWordCount {
                page_id: p.page_id.clone(),
                total_words: total,
                fixated: seen,
            });
        }
        ratios.push(seen as f64 / f64::from(total));
    }
    if ratios.is_empty() {
        return Err(IngestError::NoDetailPages);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Cut time for `split_session`.
pub fn split_point(s: &SessionLog, fraction: f64) -> f64 {
    let start = s.start_ts() as f64;
    start + fraction * (s.end_ts() as f64 - start)
}

/// Splits a session at `start + fraction * duration`.
///
/// Events strictly before the cut go to the first half. A page view that
/// straddles the cut is clipped into two views of the same page; a fixation
/// record that straddles it is split by timestamp with its duration
/// apportioned by timestamp count (floor to the first half).
pub fn split_session(s: &SessionLog, fraction: f64) -> Result<(SessionLog, SessionLog), IngestError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(IngestError::InvalidFraction(fraction));
    }
    if s.end_ts() <= s.start_ts() {
        return Err(IngestError::ZeroDuration(s.session_id.clone()));
    }
    let cut = split_point(s, fraction);
    let clip = cut.ceil() as u64;
    let before = |ts: u64| (ts as f64) < cut;

    let mut first_pages = Vec::new();
    let mut second_pages = Vec::new();
    for p in &s.pages {
        if !before(p.enter_ts) {
            second_pages.push(p.clone());
        } else if p.exit_ts as f64 <= cut {
            first_pages.push(p.clone());
        } else {
            first_pages.push(PageView {
                exit_ts: clip,
                ..p.clone()
            });
            second_pages.push(PageView {
                enter_ts: clip,
                ..p.clone()
            });
        }
    }
    for (i, p) in second_pages.iter_mut().enumerate() {
        p.order_index = i;
    }

    let (first_queries, second_queries): (Vec<_>, Vec<_>) = s.queries.iter().cloned().partition(|q| before(q.ts));

    let mut first_fix = Vec::new();
    let mut second_fix = Vec::new();
    for f in &s.fixations {
        let (early, late): (Vec<u64>, Vec<u64>) = f.timestamps.iter().partition(|&&t| before(t));
        if late.is_empty() {
            first_fix.push(f.clone());
        } else if early.is_empty() {
            second_fix.push(f.clone());
        } else {
            let early_dur = f.duration_ms * early.len() as u64 / u64::from(f.count);
            first_fix.push(RawFixation {
                page_id: f.page_id.clone(),
                word: f.word.clone(),
                duration_ms: early_dur,
                count: early.len() as u32,
                timestamps: early,
            });
            second_fix.push(RawFixation {
                page_id: f.page_id.clone(),
                word: f.word.clone(),
                duration_ms: f.duration_ms - early_dur,
                count: late.len() as u32,
                timestamps: late,
            });
        }
    }

    for (fix, which) in [(&first_fix, Half::First), (&second_fix, Half::Second)] {
        if fix.is_empty() {
            return Err(IngestError::EmptyHalf {
                session_id: s.session_id.clone(),
                which,
            });
        }
    }

    let half = |pages, queries, fixations| SessionLog {
        session_id: s.session_id.clone(),
        participant_id: s.participant_id.clone(),
        topic_terms: s.topic_terms.clone(),
        pages,
        queries,
        fixations,
    };
    Ok((
        half(first_pages, first_queries, first_fix),
        half(second_pages, second_queries, second_fix),
    ))
}

/// Whole-session aggregate as written by `gazeq ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAggregate {
    pub session_id: String,
    pub participant_id: String,
    pub topic_terms: Vec<String>,
    pub total_pages: usize,
    pub serp_pages: usize,
    pub detail_pages: usize,
    pub queries: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    pub word_fixations: Vec<WordFixation>,
}

impl SessionAggregate {
    pub fn from_session(s: &SessionLog, stemmer: &dyn Stemmer) -> Self {
        SessionAggregate {
            session_id: s.session_id.clone(),
            participant_id: s.participant_id.clone(),
            topic_terms: s.topic_terms.clone(),
            total_pages: s.pages.len(),
            serp_pages: s.count_pages(PageCategory::Serp),
            detail_pages: s.count_pages(PageCategory::Detail),
            queries: s.queries.iter().map(|q| q.terms.clone()).collect(),
            coverage: coverage_stat(s).ok(),
            word_fixations: aggregate_by_stem(s, stemmer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::SuffixStemmer;

    fn page(id: &str, cat: PageCategory, idx: usize, enter: u64, exit: u64) -> PageView {
        PageView {
            page_id: id.into(),
            category: cat,
            order_index: idx,
            enter_ts: enter,
            exit_ts: exit,
            total_words: None,
        }
    }

    fn fix(page: &str, word: &str, dur: u64, ts: &[u64]) -> RawFixation {
        RawFixation {
            page_id: page.into(),
            word: word.into(),
            duration_ms: dur,
            count: ts.len() as u32,
            timestamps: ts.to_vec(),
        }
    }

    fn log(pages: Vec<PageView>, queries: Vec<QueryEvent>, fixations: Vec<RawFixation>) -> SessionLog {
        SessionLog {
            session_id: "s".into(),
            participant_id: "p".into(),
            topic_terms: vec![],
            pages,
            queries,
            fixations,
        }
    }

    const MINIMAL: &str = r#"{
        "session_id": "s1", "participant_id": "u1", "topic_terms": ["migration"],
        "pages": [{"page_id": "p0", "category": "SERP", "order_index": 0, "enter_ts": 0, "exit_ts": 1000}],
        "queries": [{"ts": 0, "raw": "Labour Migration"}],
        "fixations": [{"page_id": "p0", "word": "Migration", "duration_ms": 240, "count": 1, "timestamps": [300]}],
        "extra": {"ignored": true}
    }"#;

    #[test]
    fn parses_minimal_document() {
        let s = parse_session(MINIMAL.as_bytes()).unwrap();
        assert_eq!(s.pages.len(), 1);
        assert_eq!(s.queries.len(), 1);
        assert_eq!(s.fixations.len(), 1);
        assert_eq!(s.queries[0].terms, vec!["labour", "migration"]);
    }

    #[test]
    fn rejects_dangling_page() {
        let doc = MINIMAL.replace(r#""page_id": "p0", "word""#, r#""page_id": "p9", "word""#);
        assert!(matches!(parse_session(doc.as_bytes()), Err(IngestError::DanglingPageRef(p)) if p == "p9"));
    }

    #[test]
    fn rejects_bad_json_and_count_mismatch() {
        assert!(matches!(parse_session(b"{not json"), Err(IngestError::MalformedInput(_))));
        let doc = MINIMAL.replace(r#""count": 1"#, r#""count": 2"#);
        assert!(matches!(parse_session(doc.as_bytes()), Err(IngestError::MalformedInput(_))));
    }

    #[test]
    fn rejects_unsorted_queries_and_overlap() {
        let s = log(
            vec![page("a", PageCategory::Serp, 0, 0, 100)],
            vec![QueryEvent::new(50, "b"), QueryEvent::new(10, "a")],
            vec![fix("a", "x", 10, &[5])],
        );
        assert!(matches!(s.validate(), Err(IngestError::TimeOrderViolation(_))));
        let s = log(
            vec![page("a", PageCategory::Serp, 0, 0, 100), page("b", PageCategory::Detail, 1, 90, 200)],
            vec![],
            vec![fix("a", "x", 10, &[5])],
        );
        assert!(matches!(s.validate(), Err(IngestError::TimeOrderViolation(_))));
    }

    #[test]
    fn rebases_absolute_timestamps() {
        let doc = r#"{"session_id": "s", "participant_id": "u", "start_ts": 1000000,
            "pages": [{"page_id": "p", "category": "DETAIL", "order_index": 0, "enter_ts": 1000000, "exit_ts": 1000500}],
            "queries": [{"ts": 1000000, "raw": "q"}],
            "fixations": [{"page_id": "p", "word": "w", "duration_ms": 200, "count": 1, "timestamps": [1000100]}]}"#;
        let s = parse_session(doc.as_bytes()).unwrap();
        assert_eq!(s.pages[0].exit_ts, 500);
        assert_eq!(s.fixations[0].timestamps, vec![100]);
    }

    #[test]
    fn merges_surface_forms_under_one_stem() {
        let s = log(
            vec![page("A", PageCategory::Serp, 0, 0, 2000), page("B", PageCategory::Detail, 1, 2000, 6000)],
            vec![],
            vec![fix("A", "method", 200, &[1000]), fix("B", "methods", 300, &[5000])],
        );
        let wf = aggregate_by_stem(&s, &SuffixStemmer);
        assert_eq!(wf.len(), 1);
        let w = &wf[0];
        assert_eq!((w.dur, w.freq, w.time_f, w.time_l, w.time_len), (500, 2, 1000, 5000, 4000));
        assert_eq!((w.viewed_f, w.viewed_l), (PageCategory::Serp, PageCategory::Detail));
        assert_eq!(w.surfaces.len(), 2);
    }

    #[test]
    fn single_fixation_is_identity() {
        let s = log(
            vec![page("A", PageCategory::Detail, 0, 0, 2000)],
            vec![],
            vec![fix("A", "theory", 321, &[700])],
        );
        let w = &aggregate_by_stem(&s, &SuffixStemmer)[0];
        assert_eq!((w.dur, w.freq, w.time_f, w.time_l, w.time_len), (321, 1, 700, 700, 0));
        assert_eq!(w.dominant_surface(), "theory");
    }

    #[test]
    fn viewed_ties_use_page_order() {
        // zero-length pages share a timestamp
        let s = log(
            vec![
                page("A", PageCategory::Serp, 0, 100, 100),
                page("B", PageCategory::Detail, 1, 100, 100),
            ],
            vec![],
            vec![fix("B", "x", 10, &[100]), fix("A", "x", 10, &[100])],
        );
        let w = &aggregate_by_stem(&s, &SuffixStemmer)[0];
        assert_eq!(w.viewed_f, PageCategory::Serp);
        assert_eq!(w.viewed_l, PageCategory::Detail);
    }

    #[test]
    fn browsing_counts_pages_before_first_view() {
        let s = log(
            vec![
                page("s0", PageCategory::Serp, 0, 0, 10),
                page("d0", PageCategory::Detail, 1, 10, 20),
                page("d1", PageCategory::Detail, 2, 20, 30),
                page("s1", PageCategory::Serp, 3, 30, 40),
            ],
            vec![],
            vec![fix("s1", "late", 5, &[35]), fix("d1", "mid", 5, &[25]), fix("s0", "early", 5, &[5])],
        );
        let wf = aggregate_by_stem(&s, &SuffixStemmer);
        let get = |stem: &str| wf.iter().find(|w| w.stem == stem).unwrap();
        assert_eq!((get("early").serp_before, get("early").detail_before), (0, 0));
        assert_eq!((get("mid").serp_before, get("mid").detail_before), (1, 1));
        assert_eq!((get("late").serp_before, get("late").detail_before), (1, 2));
    }

    #[test]
    fn coverage_ratio() {
        let mut p = page("d", PageCategory::Detail, 0, 0, 10_000);
        p.total_words = Some(100);
        let fixations = (0..34).map(|i| fix("d", &format!("w{i}"), 10, &[i])).collect();
        let s = log(vec![p.clone()], vec![], fixations);
        assert!((coverage_stat(&s).unwrap() - 0.34).abs() < 1e-12);

        let mut empty = p.clone();
        empty.total_words = Some(50);
        let s = log(vec![page("s", PageCategory::Serp, 0, 0, 5), PageView { order_index: 1, enter_ts: 5, ..empty }], vec![], vec![fix("s", "x", 3, &[1])]);
        assert_eq!(coverage_stat(&s).unwrap(), 0.0);

        let s = log(vec![page("d", PageCategory::Detail, 0, 0, 10)], vec![], vec![]);
        assert!(matches!(coverage_stat(&s), Err(IngestError::MissingWordCount(_))));
    }

    #[test]
    fn split_boundary_convention() {
        let s = log(
            vec![page("a", PageCategory::Serp, 0, 0, 10_000)],
            vec![QueryEvent::new(0, "q0"), QueryEvent::new(4999, "early"), QueryEvent::new(5000, "late")],
            vec![fix("a", "x", 500, &[4000, 6000])],
        );
        assert_eq!(split_point(&s, 0.5), 5000.0);
        let (first, second) = split_session(&s, 0.5).unwrap();
        assert_eq!(first.queries.iter().map(|q| q.raw.as_str()).collect::<Vec<_>>(), vec!["q0", "early"]);
        assert_eq!(second.queries[0].raw, "late");
        assert_eq!((first.fixations[0].count, first.fixations[0].duration_ms), (1, 250));
        assert_eq!((second.fixations[0].count, second.fixations[0].duration_ms), (1, 250));
        // straddling page is clipped into both halves
        assert_eq!((first.pages[0].enter_ts, first.pages[0].exit_ts), (0, 5000));
        assert_eq!((second.pages[0].enter_ts, second.pages[0].exit_ts), (5000, 10_000));
        first.validate().unwrap();
        second.validate().unwrap();
    }

    #[test]
    fn split_reports_empty_half() {
        let s = log(
            vec![page("a", PageCategory::Serp, 0, 0, 10_000)],
            vec![],
            vec![fix("a", "x", 10, &[100])],
        );
        assert!(matches!(
            split_session(&s, 0.5),
            Err(IngestError::EmptyHalf { which: Half::Second, .. })
        ));
        assert!(matches!(split_session(&s, 1.0), Err(IngestError::InvalidFraction(_))));
    }
}
