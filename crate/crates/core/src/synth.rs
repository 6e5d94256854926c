//! Seeded generator of synthetic sessions with a plantable signal.
//!
//! A world of pseudo-words is drawn once per seed: a Zipf-weighted
//! vocabulary, concept clusters shared by the thesaurus, the taxonomy and the
//! embedding table, and one embedding vector per word. Each session picks a
//! few clusters as its theme, fixates a Zipf sample of the vocabulary plus
//! most theme words, and issues queries built from theme words. New terms in
//! second-half queries are planted from first-half candidates with
//! probability `signal` and drawn independently of every feature otherwise.

use crate::featurize::Resources;
use crate::ingest::{self, PageCategory, PageView, QueryEvent, RawFixation, SessionLog, WordFixation};
use crate::learn::{derive_seed, Stream};
use crate::lexsem::EmbeddingTable;
use crate::text::{Stemmer, SuffixStemmer};
use crate::thesaurus::{self, Thesaurus, ThesaurusError, TopicParams, TopicProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible synth config: {0}")]
    ConfigInfeasible(String),
    #[error("generated resources failed to load: {0}")]
    Resource(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Which first-half properties a planted term must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantChannels {
    /// Top decile of the session's first-half stems by fixation duration.
    pub fixation: bool,
    /// Annotated into one of the session's top-k thesaurus concepts.
    pub topic: bool,
    /// Shares a concept cluster (and so an embedding neighborhood) with a
    /// first-half query term.
    pub embedding: bool,
}

impl Default for PlantChannels {
    fn default() -> Self {
        PlantChannels {
            fixation: true,
            topic: true,
            embedding: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_sessions: usize,
    pub vocab_size: usize,
    /// Mean number of distinct fixated words per session.
    pub terms_per_session: f64,
    pub queries_per_session: f64,
    pub terms_per_query: f64,
    pub signal: f64,
    pub seed: u64,
    pub channels: PlantChannels,
    pub n_clusters: usize,
    pub cluster_size: usize,
    pub clusters_per_session: usize,
    /// Probability that a second-half query slot repeats an earlier term.
    pub reuse_rate: f64,
    /// Probability that an unplanted new term was never fixated in the
    /// first half.
    pub unseen_rate: f64,
    pub embedding_dim: usize,
    pub zipf_exponent: f64,
    pub split_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sessions: 50,
            vocab_size: 6000,
            terms_per_session: 780.0,
            queries_per_session: 6.4,
            terms_per_query: 2.4,
            signal: 1.0,
            seed: 0,
            channels: PlantChannels::default(),
            n_clusters: 60,
            cluster_size: 16,
            clusters_per_session: 4,
            reuse_rate: 0.6,
            unseen_rate: 0.3,
            embedding_dim: 32,
            zipf_exponent: 1.0,
            split_fraction: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::ConfigInfeasible(m));
        if self.n_sessions == 0 || self.vocab_size == 0 || self.n_clusters == 0 || self.cluster_size < 2 {
            return bad("session, vocabulary and cluster counts must be positive (clusters need two words)".into());
        }
        if self.embedding_dim == 0 || self.clusters_per_session == 0 {
            return bad("embedding_dim and clusters_per_session must be positive".into());
        }
        for (name, v) in [
            ("terms_per_session", self.terms_per_session),
            ("queries_per_session", self.queries_per_session),
            ("terms_per_query", self.terms_per_query),
        ] {
            if !(v.is_finite() && v >= 1.0) {
                return bad(format!("{name} must be at least 1, got {v}"));
            }
        }
        for (name, v) in [
            ("signal", self.signal),
            ("reuse_rate", self.reuse_rate),
            ("unseen_rate", self.unseen_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction must lie in (0, 1), got {}", self.split_fraction));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be finite and nonnegative".into());
        }
        if self.clusters_per_session > self.n_clusters {
            return bad(format!(
                "{} clusters per session but only {} clusters",
                self.clusters_per_session, self.n_clusters
            ));
        }
        let clustered = self.n_clusters * self.cluster_size;
        if clustered > self.vocab_size / 2 {
            return bad(format!("{clustered} cluster words exceed half the vocabulary ({})", self.vocab_size));
        }
        let max_terms = (self.terms_per_session * 1.15).ceil() as usize + self.clusters_per_session * self.cluster_size;
        if max_terms * 2 > self.vocab_size {
            return bad(format!(
                "sessions fixate up to {max_terms} words, which needs a vocabulary of at least {}",
                max_terms * 2
            ));
        }
        let max_query_terms = (self.terms_per_query.floor() as usize + 2) * (self.queries_per_session.floor() as usize + 3);
        if max_query_terms > self.clusters_per_session * self.cluster_size {
            return bad(format!(
                "queries may need {max_query_terms} distinct theme words but a session theme has {}",
                self.clusters_per_session * self.cluster_size
            ));
        }
        Ok(())
    }
}

/// Ground truth for one generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTruth {
    pub session_id: String,
    pub theme_clusters: Vec<String>,
    /// Stems of the first-half top fixation decile.
    pub top_decile: Vec<String>,
    /// Stems eligible for planting under the configured channels.
    pub candidates: Vec<String>,
    /// New second-half query terms, in order of first use.
    pub new_terms: Vec<String>,
    /// The subset of `new_terms` that was planted.
    pub planted: Vec<String>,
    /// New terms fixated in the first half (the positive instances).
    pub positives: Vec<String>,
    pub first_half_stems: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantTruth {
    pub config: SynthConfig,
    pub planted_total: usize,
    pub positives_total: usize,
    pub instances_total: usize,
    /// `positives_total / instances_total`.
    pub prevalence: f64,
    pub sessions: Vec<SessionTruth>,
}

/// Everything `generate` produces; `write_to_dir` lays it out on disk.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub sessions: Vec<SessionLog>,
    pub taxonomy_tsv: String,
    pub thesaurus_tsv: String,
    pub vectors_txt: String,
    pub truth: PlantTruth,
}

impl SynthOutput {
    /// Parses the generated resource files.
    pub fn resources(&self) -> Result<Resources, SynthError> {
        let res = |e: String| SynthError::Resource(e);
        let taxonomy = crate::lexsem::TaxonomyBuilder::parse_tsv(&self.taxonomy_tsv)
            .and_then(|b| b.build())
            .map_err(|e| res(e.to_string()))?;
        let embeddings = EmbeddingTable::parse_text(&self.vectors_txt).map_err(|e| res(e.to_string()))?;
        let thesaurus = Thesaurus::parse_tsv(&self.thesaurus_tsv).map_err(|e| res(e.to_string()))?;
        Ok(Resources::new(taxonomy, embeddings, thesaurus))
    }

    /// Writes `sessions/<id>.json`, `taxonomy.tsv`, `thesaurus.tsv`,
    /// `vectors.txt` and `plant_truth.json` under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SynthError::Io { path, source }
        };
        let sessions_dir = dir.join("sessions");
        std::fs::create_dir_all(&sessions_dir).map_err(io(&sessions_dir))?;
        for s in &self.sessions {
            let path = sessions_dir.join(format!("{}.json", s.session_id));
            let json = serde_json::to_vec_pretty(s).expect("session logs serialize");
            std::fs::write(&path, json).map_err(io(&path))?;
        }
        let truth = serde_json::to_vec_pretty(&self.truth).expect("truth serializes");
        for (name, bytes) in [
            ("taxonomy.tsv", self.taxonomy_tsv.as_bytes()),
            ("thesaurus.tsv", self.thesaurus_tsv.as_bytes()),
            ("vectors.txt", self.vectors_txt.as_bytes()),
            ("plant_truth.json", truth.as_slice()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok(())
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aeiou";
/// Probability that a theme word is fixated in a session.
const THEME_INCLUSION: f64 = 0.85;
/// Scale of the per-dimension noise around a cluster centre.
const CLUSTER_NOISE: f32 = 0.15;

struct World {
    words: Vec<String>,
    zipf: Vec<f64>,
    clusters: Vec<Vec<usize>>,
    cluster_of: Vec<Option<usize>>,
    thesaurus: Thesaurus,
    taxonomy_tsv: String,
    thesaurus_tsv: String,
    vectors_txt: String,
}

/// Pseudo-words of four or five consonant-vowel syllables. They end in a
/// vowel, so the suffix stemmer leaves them unchanged.
fn make_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = if rng.gen_bool(0.5) { 4 } else { 5 };
        let mut w = String::with_capacity(2 * syllables);
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

fn cluster_id(c: usize) -> String {
    format!("c{c:03}")
}

fn build_world(cfg: &SynthConfig) -> Result<World, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::SynthWorld, 0));
    let words = make_words(cfg.vocab_size, &mut rng);
    let zipf: Vec<f64> = (1..=cfg.vocab_size)
        .map(|r| 1.0 / (r as f64).powf(cfg.zipf_exponent))
        .collect();

    // Cluster words avoid the head of the distribution so that every theme
    // word has a moderate corpus frequency.
    let head = (cfg.vocab_size / 20).min(cfg.vocab_size - cfg.n_clusters * cfg.cluster_size);
    let mut pool: Vec<usize> = (head..cfg.vocab_size).collect();
    pool.shuffle(&mut rng);
    let mut cluster_of = vec![None; cfg.vocab_size];
    let clusters: Vec<Vec<usize>> = (0..cfg.n_clusters)
        .map(|c| {
            let mut members: Vec<usize> = pool[c * cfg.cluster_size..(c + 1) * cfg.cluster_size].to_vec();
            members.sort_unstable();
            for &m in &members {
                cluster_of[m] = Some(c);
            }
            members
        })
        .collect();

    let n_groups = cfg.n_clusters.div_ceil(6);
    let mut tax = String::from("# synthetic taxonomy\nC\tentity\t0\n");
    for g in 0..n_groups {
        let _ = writeln!(tax, "C\tg{g:02}\t0");
    }
    for (c, members) in clusters.iter().enumerate() {
        let mass: f64 = members.iter().map(|&m| zipf[m]).sum();
        let _ = writeln!(tax, "C\t{}\t{}", cluster_id(c), (mass * 1e6).round() as u64 + 1);
    }
    for g in 0..n_groups {
        let _ = writeln!(tax, "E\tg{g:02}\tentity");
    }
    for c in 0..cfg.n_clusters {
        let _ = writeln!(tax, "E\t{}\tg{:02}", cluster_id(c), c % n_groups);
        if c % 7 == 3 && n_groups > 1 {
            let _ = writeln!(tax, "E\t{}\tg{:02}", cluster_id(c), (c + 1) % n_groups);
        }
    }
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            let _ = writeln!(tax, "L\t{}\t{}", words[m], cluster_id(c));
        }
    }

    let mut thes = String::from("# descriptor\tbroader\tsynonyms\n");
    for members in &clusters {
        let synonyms: Vec<&str> = members[1..].iter().map(|&m| words[m].as_str()).collect();
        let _ = writeln!(thes, "{}\t\t{}", words[members[0]], synonyms.join("|"));
    }
    let thesaurus = Thesaurus::parse_tsv(&thes).map_err(|e| SynthError::Resource(e.to_string()))?;

    let centres: Vec<Vec<f32>> = (0..cfg.n_clusters).map(|_| random_vector(cfg.embedding_dim, &mut rng)).collect();
    let mut vectors = format!("{} {}\n", cfg.vocab_size, cfg.embedding_dim);
    for (i, w) in words.iter().enumerate() {
        let v: Vec<f32> = match cluster_of[i] {
            Some(c) => centres[c]
                .iter()
                .map(|&x| x + CLUSTER_NOISE * rng.gen_range(-1.0f32..1.0))
                .collect(),
            None => random_vector(cfg.embedding_dim, &mut rng),
        };
        vectors.push_str(w);
        for x in v {
            let _ = write!(vectors, " {x:.6}");
        }
        vectors.push('\n');
    }

    Ok(World {
        words,
        zipf,
        clusters,
        cluster_of,
        thesaurus,
        taxonomy_tsv: tax,
        thesaurus_tsv: thes,
        vectors_txt: vectors,
    })
}

/// An integer with mean `mean`: its floor, plus one with the fractional
/// probability, plus a symmetric jitter in `-spread..=spread`, at least `min`.
fn jittered(mean: f64, spread: i64, min: i64, rng: &mut ChaCha8Rng) -> usize {
    let base = mean.floor() as i64 + i64::from(rng.gen_bool(mean.fract()));
    (base + rng.gen_range(-spread..=spread)).max(min) as usize
}

struct Timeline {
    pages: Vec<PageView>,
    query_ts: Vec<u64>,
}

fn make_timeline(n_queries: usize, rng: &mut ChaCha8Rng) -> Timeline {
    let mut pages = Vec::new();
    let mut query_ts = Vec::with_capacity(n_queries);
    let mut t = 0u64;
    for _ in 0..n_queries {
        query_ts.push(t);
        t += rng.gen_range(300..1500);
        let n_detail = rng.gen_range(1..=3);
        for d in 0..=n_detail {
            let (category, dwell) = if d == 0 {
                (PageCategory::Serp, rng.gen_range(8_000..25_000))
            } else {
                (PageCategory::Detail, rng.gen_range(15_000..45_000))
            };
            let order_index = pages.len();
            pages.push(PageView {
                page_id: format!("p{order_index:02}"),
                category,
                order_index,
                enter_ts: t,
                exit_ts: t + dwell,
                total_words: None,
            });
            t += dwell + rng.gen_range(200..1200);
        }
    }
    Timeline { pages, query_ts }
}

/// Fixation records for the session's word set, one per (page, word).
fn make_fixations(
    world: &World,
    fixated: &[usize],
    theme: &BTreeSet<usize>,
    pages: &mut [PageView],
    rng: &mut ChaCha8Rng,
) -> Vec<RawFixation> {
    let mut per_page: Vec<Vec<usize>> = vec![Vec::new(); pages.len()];
    let page_ids: Vec<usize> = (0..pages.len()).collect();
    for &w in fixated {
        let roll: f64 = rng.gen();
        let mut k = if roll < 0.6 {
            1
        } else if roll < 0.85 {
            2
        } else {
            3
        };
        if theme.contains(&w) {
            k += 1;
        }
        for &p in page_ids.choose_multiple(rng, k.min(pages.len())) {
            per_page[p].push(w);
        }
    }
    let mut out = Vec::new();
    for (p, words) in per_page.iter_mut().enumerate() {
        words.sort_unstable();
        let page = &mut pages[p];
        if page.category == PageCategory::Detail {
            page.total_words = Some((words.len() + rng.gen_range(40..200)) as u32);
        }
        for &w in words.iter() {
            let count = rng.gen_range(1..=4u32);
            let mut timestamps: Vec<u64> = (0..count).map(|_| rng.gen_range(page.enter_ts..=page.exit_ts)).collect();
            timestamps.sort_unstable();
            let duration_ms = (0..count).map(|_| rng.gen_range(80..450u64)).sum();
            let surface = if rng.gen_bool(0.15) {
                let mut s = world.words[w].clone();
                s[..1].make_ascii_uppercase();
                s
            } else {
                world.words[w].clone()
            };
            out.push(RawFixation {
                page_id: page.page_id.clone(),
                word: surface,
                duration_ms,
                count,
                timestamps,
            });
        }
    }
    out.sort_by_key(|f| f.timestamps[0]);
    out
}

/// Stems ranked by first-half fixation duration (ties by stem); the first
/// tenth, rounded up, form the top decile.
pub fn top_decile(first: &[WordFixation]) -> Vec<String> {
    let mut ranked: Vec<&WordFixation> = first.iter().collect();
    ranked.sort_by(|a, b| b.dur.cmp(&a.dur).then_with(|| a.stem.cmp(&b.stem)));
    let n = first.len().div_ceil(10);
    ranked.into_iter().take(n).map(|w| w.stem.clone()).collect()
}

fn session_id(i: usize) -> String {
    format!("s{i:03}")
}

fn generate_session(cfg: &SynthConfig, world: &World, index: usize) -> Result<(SessionLog, SessionTruth), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::SynthSession, index as u64));
    let stemmer = SuffixStemmer;
    let sid = session_id(index);

    let cluster_ids: Vec<usize> = (0..world.clusters.len()).collect();
    let mut theme_clusters: Vec<usize> = cluster_ids
        .choose_multiple(&mut rng, cfg.clusters_per_session)
        .copied()
        .collect();
    theme_clusters.sort_unstable();
    let theme_words: Vec<usize> = theme_clusters.iter().flat_map(|&c| world.clusters[c].iter().copied()).collect();
    let theme: BTreeSet<usize> = theme_words.iter().copied().collect();

    let mut fixated: Vec<usize> = theme_words.iter().copied().filter(|_| rng.gen_bool(THEME_INCLUSION)).collect();
    let target = ((cfg.terms_per_session * rng.gen_range(0.85..1.15)).round() as usize).max(fixated.len() + 1);
    let chosen: HashSet<usize> = fixated.iter().copied().collect();
    let rest: Vec<usize> = (0..world.words.len()).filter(|w| !chosen.contains(w)).collect();
    let sample = rest
        .choose_multiple_weighted(&mut rng, target - fixated.len(), |&w| world.zipf[w])
        .map_err(|e| SynthError::ConfigInfeasible(format!("zipf sampling failed: {e}")))?;
    fixated.extend(sample.copied());
    fixated.sort_unstable();

    let n_queries = jittered(cfg.queries_per_session, 2, 2, &mut rng);
    let Timeline { mut pages, query_ts } = make_timeline(n_queries, &mut rng);
    let fixations = make_fixations(world, &fixated, &theme, &mut pages, &mut rng);

    let end = pages.last().map_or(0, |p| p.exit_ts);
    let cut = cfg.split_fraction * end as f64;
    let n_first = query_ts.iter().filter(|&&t| (t as f64) < cut).count();
    if n_first == 0 || n_first == n_queries {
        return Err(SynthError::ConfigInfeasible(format!(
            "session {sid}: all queries fall into one half"
        )));
    }

    // First-half queries draw from theme words, repeating earlier terms
    // at the configured rate.
    let mut used: Vec<String> = Vec::new();
    let mut queries: Vec<Vec<String>> = Vec::with_capacity(n_queries);
    for _ in 0..n_first {
        let n_terms = jittered(cfg.terms_per_query, 1, 1, &mut rng);
        let mut q: Vec<String> = Vec::new();
        let mut guard = 0;
        while q.len() < n_terms && guard < 100 {
            guard += 1;
            let term = if !used.is_empty() && rng.gen_bool(cfg.reuse_rate) {
                used.choose(&mut rng).expect("nonempty").clone()
            } else {
                world.words[*theme_words.choose(&mut rng).expect("theme words")].clone()
            };
            if !q.contains(&term) {
                q.push(term);
            }
        }
        for t in &q {
            if !used.contains(t) {
                used.push(t.clone());
            }
        }
        queries.push(q);
    }
    let q_first: BTreeSet<String> = used.iter().cloned().collect();

    let provisional = SessionLog {
        session_id: sid.clone(),
        participant_id: format!("u{index:03}"),
        topic_terms: theme_clusters.iter().map(|&c| world.words[world.clusters[c][0]].clone()).collect(),
        pages,
        queries: query_ts
            .iter()
            .enumerate()
            .map(|(i, &ts)| match queries.get(i) {
                Some(q) => QueryEvent::new(ts, q.join(" ")),
                None => QueryEvent::new(ts, "pending"),
            })
            .collect(),
        fixations,
    };
    let (first, _) = ingest::split_session(&provisional, cfg.split_fraction)
        .map_err(|e| SynthError::ConfigInfeasible(format!("session {sid}: {e}")))?;
    let agg = ingest::aggregate_by_stem(&first, &stemmer);
    let profile = match thesaurus::session_topics(&agg, &world.thesaurus, &TopicParams::default()) {
        Ok(p) => p,
        Err(ThesaurusError::NoAnnotatableTerms) => TopicProfile::empty(TopicParams::default().k),
        Err(e) => return Err(SynthError::Resource(e.to_string())),
    };
    let decile = top_decile(&agg);
    let decile_set: BTreeSet<&str> = decile.iter().map(String::as_str).collect();
    let q_clusters: BTreeSet<usize> = q_first
        .iter()
        .filter_map(|t| world.words.iter().position(|w| w == t))
        .filter_map(|w| world.cluster_of[w])
        .collect();
    let word_index: BTreeMap<&str, usize> = world.words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let first_stems: Vec<&str> = agg.iter().map(|w| w.stem.as_str()).collect();
    let candidates: Vec<String> = agg
        .iter()
        .filter(|w| !q_first.contains(&w.stem))
        .filter(|w| !cfg.channels.fixation || decile_set.contains(w.stem.as_str()))
        .filter(|w| !cfg.channels.topic || profile.is_topic(&w.stem))
        .filter(|w| {
            !cfg.channels.embedding
                || word_index
                    .get(w.stem.as_str())
                    .and_then(|&i| world.cluster_of[i])
                    .is_some_and(|c| q_clusters.contains(&c))
        })
        .map(|w| w.stem.clone())
        .collect();
    let first_set: BTreeSet<&str> = first_stems.iter().copied().collect();
    let unseen_pool: Vec<&str> = world
        .words
        .iter()
        .map(String::as_str)
        .filter(|w| !first_set.contains(w) && !q_first.contains(*w))
        .collect();

    let mut remaining_candidates = candidates.clone();
    let mut new_terms: Vec<String> = Vec::new();
    let mut planted: Vec<String> = Vec::new();
    for _ in n_first..n_queries {
        let n_terms = jittered(cfg.terms_per_query, 1, 1, &mut rng);
        let mut q: Vec<String> = Vec::new();
        let mut guard = 0;
        while q.len() < n_terms && guard < 100 {
            guard += 1;
            let reuse = rng.gen_bool(cfg.reuse_rate);
            let term = if reuse {
                used.choose(&mut rng).cloned()
            } else if rng.gen_bool(cfg.signal) {
                if remaining_candidates.is_empty() {
                    used.choose(&mut rng).cloned()
                } else {
                    let i = rng.gen_range(0..remaining_candidates.len());
                    let t = remaining_candidates.swap_remove(i);
                    planted.push(t.clone());
                    Some(t)
                }
            } else if rng.gen_bool(cfg.unseen_rate) {
                unseen_pool.choose(&mut rng).map(|s| s.to_string())
            } else {
                let pool: Vec<&str> = first_stems.iter().copied().filter(|s| !q_first.contains(*s)).collect();
                pool.choose(&mut rng).map(|s| s.to_string())
            };
            let Some(term) = term else { continue };
            if q.contains(&term) {
                continue;
            }
            if !used.contains(&term) {
                used.push(term.clone());
                new_terms.push(term.clone());
            }
            q.push(term);
        }
        queries.push(q);
    }
    for (i, q) in queries.iter().enumerate() {
        if q.is_empty() {
            return Err(SynthError::ConfigInfeasible(format!("session {sid}: query {i} has no terms")));
        }
    }

    let positives: Vec<String> = new_terms.iter().filter(|t| first_set.contains(t.as_str())).cloned().collect();
    let mut log = provisional;
    for (ev, q) in log.queries.iter_mut().zip(&queries) {
        *ev = QueryEvent::new(ev.ts, q.join(" "));
    }
    debug_assert!(log.validate().is_ok());
    debug_assert!(new_terms.iter().all(|t| stemmer.stem(t) == *t));
    let truth = SessionTruth {
        session_id: sid,
        theme_clusters: theme_clusters.iter().map(|&c| cluster_id(c)).collect(),
        top_decile: decile,
        candidates,
        new_terms,
        planted,
        positives,
        first_half_stems: agg.len(),
    };
    Ok((log, truth))
}

/// Generates sessions and resource files; a pure function of the config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;
    let world = build_world(cfg)?;
    let results: Vec<Result<(SessionLog, SessionTruth), SynthError>> = (0..cfg.n_sessions)
        .into_par_iter()
        .map(|i| generate_session(cfg, &world, i))
        .collect();
    let mut sessions = Vec::with_capacity(cfg.n_sessions);
    let mut truths = Vec::with_capacity(cfg.n_sessions);
    for r in results {
        let (s, t) = r?;
        sessions.push(s);
        truths.push(t);
    }
    let planted_total = truths.iter().map(|t| t.planted.len()).sum();
    let positives_total: usize = truths.iter().map(|t| t.positives.len()).sum();
    let instances_total: usize = truths.iter().map(|t| t.first_half_stems).sum();
    Ok(SynthOutput {
        sessions,
        taxonomy_tsv: world.taxonomy_tsv,
        thesaurus_tsv: world.thesaurus_tsv,
        vectors_txt: world.vectors_txt,
        truth: PlantTruth {
            config: cfg.clone(),
            planted_total,
            positives_total,
            instances_total,
            prevalence: positives_total as f64 / instances_total.max(1) as f64,
            sessions: truths,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(signal: f64) -> SynthConfig {
        SynthConfig {
            n_sessions: 6,
            signal,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn words_are_stemmer_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let words = make_words(500, &mut rng);
        let unique: HashSet<&String> = words.iter().collect();
        assert_eq!(unique.len(), 500);
        assert!(words.iter().all(|w| SuffixStemmer.stem(w) == *w));
    }

    #[test]
    fn jitter_keeps_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mean = (0..n).map(|_| jittered(6.4, 2, 0, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 6.4).abs() < 0.05, "{mean}");
    }

    #[test]
    fn zero_signal_plants_nothing() {
        let out = generate(&small(0.0)).unwrap();
        assert_eq!(out.truth.planted_total, 0);
    }

    #[test]
    fn full_signal_positives_are_planted() {
        let out = generate(&small(1.0)).unwrap();
        assert!(out.truth.planted_total > 0);
        for t in &out.truth.sessions {
            assert_eq!(t.positives, t.planted);
            assert!(t.planted.iter().all(|p| t.top_decile.contains(p)));
        }
    }

    #[test]
    fn rejects_infeasible_configs() {
        let tiny = SynthConfig {
            vocab_size: 100,
            ..Default::default()
        };
        assert!(matches!(generate(&tiny), Err(SynthError::ConfigInfeasible(_))));
        let bad_signal = SynthConfig {
            signal: 1.5,
            ..Default::default()
        };
        assert!(matches!(bad_signal.validate(), Err(SynthError::ConfigInfeasible(_))));
    }
}
