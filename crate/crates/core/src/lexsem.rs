//! Semantic proximity between words.
//!
//! Taxonomy measures (Leacock-Chodorow, Resnik, Lin) run over a hypernym DAG
//! whose information content is derived from corpus counts. Embedding cosine
//! runs over vectors loaded from the common text format.
//!
//! Path lengths for Leacock-Chodorow are counted in nodes (edges + 1), both
//! for the concept path and for the taxonomy depth, so a concept compared
//! with itself has path 1 and the score is `ln(2 * depth)`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Identifier of the synthetic root added when a taxonomy has several tops.
pub const VIRTUAL_ROOT: &str = "<root>";

#[derive(Debug, Error)]
pub enum LexsemError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("hypernym graph contains a cycle through `{0}`")]
    CycleDetected(String),
    #[error("taxonomy has zero total count mass")]
    ZeroMass,
    #[error("taxonomy has no concepts")]
    Empty,
    #[error("lin similarity undefined: both concepts carry the root's full mass")]
    UndefinedSimilarity,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("zero vector")]
    ZeroVector,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "COS")]
    Cos,
    #[serde(rename = "LCH")]
    Lch,
    #[serde(rename = "RES")]
    Res,
    #[serde(rename = "LIN")]
    Lin,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Cos => "COS",
            Measure::Lch => "LCH",
            Measure::Res => "RES",
            Measure::Lin => "LIN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityValue {
    pub value: f64,
    pub measure: Measure,
}

/// Index of a concept inside one [`Taxonomy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptIdx(usize);

impl ConceptIdx {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Raw taxonomy records before validation.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyBuilder {
    concepts: Vec<(String, f64)>,
    edges: Vec<(String, String)>,
    lemmas: Vec<(String, String)>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn concept(mut self, id: impl Into<String>, count: f64) -> Self {
        self.concepts.push((id.into(), count));
        self
    }

    /// Hypernym edge `child -> parent`.
    pub fn edge(mut self, child: impl Into<String>, parent: impl Into<String>) -> Self {
        self.edges.push((child.into(), parent.into()));
        self
    }

    pub fn lemma(mut self, word: impl Into<String>, concept: impl Into<String>) -> Self {
        self.lemmas.push((word.into(), concept.into()));
        self
    }

    /// Parses the TSV format: `C id count`, `E child parent`, `L word concept`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self, LexsemError> {
        let mut b = TaxonomyBuilder::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| LexsemError::Parse { line: line_no, msg };
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            match fields[0] {
                "C" => {
                    let count: f64 = fields[2]
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad count `{}`", fields[2])))?;
                    if !(count.is_finite() && count >= 0.0) {
                        return Err(err(format!("count must be finite and nonnegative, got {count}")));
                    }
                    b.concepts.push((fields[1].to_string(), count));
                }
                "E" => b.edges.push((fields[1].to_string(), fields[2].to_string())),
                "L" => b.lemmas.push((fields[1].to_string(), fields[2].to_string())),
                other => return Err(err(format!("unknown record kind `{other}`"))),
            }
        }
        Ok(b)
    }

    /// Validates the graph and computes the information-content cache.
    pub fn build(self) -> Result<Taxonomy, LexsemError> {
        if self.concepts.is_empty() {
            return Err(LexsemError::Empty);
        }
        let mut ids = Vec::with_capacity(self.concepts.len() + 1);
        let mut counts = Vec::with_capacity(self.concepts.len() + 1);
        let mut index = HashMap::with_capacity(self.concepts.len() + 1);
        for (id, count) in self.concepts {
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(LexsemError::DuplicateConcept(id));
            }
            ids.push(id);
            counts.push(count);
        }
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| LexsemError::UnknownConcept(id.to_string()));

        let mut parents = vec![Vec::new(); ids.len()];
        for (child, parent) in &self.edges {
            let (c, p) = (lookup(child)?, lookup(parent)?);
            if c == p {
                return Err(LexsemError::CycleDetected(child.clone()));
            }
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }
        let mut lemmas: HashMap<String, Vec<ConceptIdx>> = HashMap::new();
        for (word, concept) in &self.lemmas {
            let c = ConceptIdx(lookup(concept)?);
            let senses = lemmas.entry(word.to_lowercase()).or_default();
            if !senses.contains(&c) {
                senses.push(c);
            }
        }

        let tops: Vec<usize> = (0..ids.len()).filter(|&i| parents[i].is_empty()).collect();
        let root = match tops.as_slice() {
            [] => return Err(LexsemError::CycleDetected(ids[0].clone())),
            [only] => *only,
            many => {
                if index.contains_key(VIRTUAL_ROOT) {
                    return Err(LexsemError::DuplicateConcept(VIRTUAL_ROOT.into()));
                }
                let r = ids.len();
                for &t in many {
                    parents[t].push(r);
                }
                ids.push(VIRTUAL_ROOT.to_string());
                counts.push(0.0);
                parents.push(Vec::new());
                r
            }
        };
        Taxonomy::assemble(ids, counts, parents, lemmas, root)
    }
}

/// Hypernym DAG with a single root and a precomputed information-content cache.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    lemmas: HashMap<String, Vec<ConceptIdx>>,
    counts: Vec<f64>,
    cum_counts: Vec<f64>,
    ic: Vec<f64>,
    /// Every ancestor including the concept itself, with the shortest upward
    /// edge distance, sorted by concept index.
    ancestors: Vec<Vec<(usize, u32)>>,
    root: usize,
    max_depth: u32,
}

impl Taxonomy {
    pub fn load(path: &Path) -> Result<Self, LexsemError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexsemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        TaxonomyBuilder::parse_tsv(&text)?.build()
    }

    fn assemble(
        ids: Vec<String>,
        counts: Vec<f64>,
        parents: Vec<Vec<usize>>,
        lemmas: HashMap<String, Vec<ConceptIdx>>,
        root: usize,
    ) -> Result<Self, LexsemError> {
        let n = ids.len();
        let order = topological_order(&parents).map_err(|i| LexsemError::CycleDetected(ids[i].clone()))?;

        // longest path from the root, in edges; parents precede children in `order`
        let mut depth = vec![0u32; n];
        for &c in &order {
            depth[c] = parents[c].iter().map(|&p| depth[p] + 1).max().unwrap_or(0);
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);

        let ancestors: Vec<Vec<(usize, u32)>> = (0..n).map(|c| upward_distances(&parents, c)).collect();
        if ancestors.iter().any(|a| a.binary_search_by_key(&root, |&(i, _)| i).is_err()) {
            // unreachable with a single top, kept as a structural guard
            return Err(LexsemError::UnknownConcept(ids[root].clone()));
        }

        let (cum_counts, ic) = information_content(&counts, &ancestors, root)?;
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(Taxonomy {
            ids,
            index,
            parents,
            lemmas,
            counts,
            cum_counts,
            ic,
            ancestors,
            root,
            max_depth,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn concept(&self, id: &str) -> Option<ConceptIdx> {
        self.index.get(id).copied().map(ConceptIdx)
    }

    pub fn id(&self, c: ConceptIdx) -> &str {
        &self.ids[c.0]
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptIdx> {
        (0..self.ids.len()).map(ConceptIdx)
    }

    pub fn root(&self) -> ConceptIdx {
        ConceptIdx(self.root)
    }

    pub fn parents(&self, c: ConceptIdx) -> impl Iterator<Item = ConceptIdx> + '_ {
        self.parents[c.0].iter().copied().map(ConceptIdx)
    }

    /// Longest root-to-leaf path, in edges.
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn count(&self, c: ConceptIdx) -> f64 {
        self.counts[c.0]
    }

    /// Own count plus the count of every distinct descendant.
    pub fn cum_count(&self, c: ConceptIdx) -> f64 {
        self.cum_counts[c.0]
    }

    pub fn ic(&self, c: ConceptIdx) -> f64 {
        self.ic[c.0]
    }

    /// Senses of a word; empty when out of vocabulary.
    pub fn senses(&self, word: &str) -> &[ConceptIdx] {
        self.lemmas.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn ancestors(&self, c: ConceptIdx) -> impl Iterator<Item = (ConceptIdx, u32)> + '_ {
        self.ancestors[c.0].iter().map(|&(a, d)| (ConceptIdx(a), d))
    }

    fn common_ancestors(&self, a: ConceptIdx, b: ConceptIdx) -> CommonAncestors<'_> {
        CommonAncestors {
            left: &self.ancestors[a.0],
            right: &self.ancestors[b.0],
        }
    }

    /// Least common subsumer: the common ancestor with maximal IC, ties to
    /// the lexicographically smallest id.
    pub fn lcs(&self, a: ConceptIdx, b: ConceptIdx) -> ConceptIdx {
        let mut best: Option<usize> = None;
        for (c, _, _) in self.common_ancestors(a, b) {
            best = Some(match best {
                None => c,
                Some(cur) => match self.ic[c].partial_cmp(&self.ic[cur]).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => c,
                    Ordering::Equal if self.ids[c] < self.ids[cur] => c,
                    _ => cur,
                },
            });
        }
        ConceptIdx(best.expect("single root is a common ancestor of every pair"))
    }

    /// Shortest path between two concepts through a common ancestor, in nodes.
    pub fn path_nodes(&self, a: ConceptIdx, b: ConceptIdx) -> u32 {
        self.common_ancestors(a, b)
            .map(|(_, da, db)| da + db)
            .min()
            .expect("single root is a common ancestor of every pair")
            + 1
    }

    pub fn lch_sim(&self, a: ConceptIdx, b: ConceptIdx) -> f64 {
        let depth_nodes = f64::from(self.max_depth + 1);
        -(f64::from(self.path_nodes(a, b)) / (2.0 * depth_nodes)).ln()
    }

    pub fn res_sim(&self, a: ConceptIdx, b: ConceptIdx) -> f64 {
        self.ic[self.lcs(a, b).0]
    }

    pub fn lin_sim(&self, a: ConceptIdx, b: ConceptIdx) -> Result<f64, LexsemError> {
        let denom = self.ic[a.0] + self.ic[b.0];
        if denom <= 0.0 {
            return Err(LexsemError::UndefinedSimilarity);
        }
        Ok(2.0 * self.res_sim(a, b) / denom)
    }

    pub fn concept_sim(&self, m: TaxMeasure, a: ConceptIdx, b: ConceptIdx) -> Result<SimilarityValue, LexsemError> {
        let value = match m {
            TaxMeasure::Lch => self.lch_sim(a, b),
            TaxMeasure::Res => self.res_sim(a, b),
            TaxMeasure::Lin => self.lin_sim(a, b)?,
        };
        Ok(SimilarityValue {
            value,
            measure: m.into(),
        })
    }

    /// Word-level similarity: maximum over sense pairs, 0 when either word
    /// is out of vocabulary. Undefined Lin pairs count as 0.
    pub fn word_sim(&self, w1: &str, w2: &str, m: TaxMeasure) -> f64 {
        self.pairwise_max(w1, w2, |a, b| match m {
            TaxMeasure::Lch => self.lch_sim(a, b),
            TaxMeasure::Res => self.res_sim(a, b),
            TaxMeasure::Lin => self.lin_sim(a, b).unwrap_or(0.0),
        })
    }

    /// All three taxonomy measures at once, each maximized over sense pairs
    /// independently.
    pub fn word_sims(&self, w1: &str, w2: &str) -> TaxSims {
        let (s1, s2) = (self.senses(w1), self.senses(w2));
        if s1.is_empty() || s2.is_empty() {
            return TaxSims::default();
        }
        let mut out = TaxSims {
            lch: f64::NEG_INFINITY,
            res: f64::NEG_INFINITY,
            lin: f64::NEG_INFINITY,
        };
        for &a in s1 {
            for &b in s2 {
                let lcs_ic = self.ic[self.lcs(a, b).0];
                out.lch = out.lch.max(self.lch_sim(a, b));
                out.res = out.res.max(lcs_ic);
                let denom = self.ic[a.0] + self.ic[b.0];
                out.lin = out.lin.max(if denom > 0.0 { 2.0 * lcs_ic / denom } else { 0.0 });
            }
        }
        out
    }

    fn pairwise_max(&self, w1: &str, w2: &str, f: impl Fn(ConceptIdx, ConceptIdx) -> f64) -> f64 {
        let (s1, s2) = (self.senses(w1), self.senses(w2));
        s1.iter()
            .flat_map(|&a| s2.iter().map(move |&b| (a, b)))
            .map(|(a, b)| f(a, b))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TaxSims {
    pub lch: f64,
    pub res: f64,
    pub lin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaxMeasure {
    Lch,
    Res,
    Lin,
}

impl From<TaxMeasure> for Measure {
    fn from(m: TaxMeasure) -> Self {
        match m {
            TaxMeasure::Lch => Measure::Lch,
            TaxMeasure::Res => Measure::Res,
            TaxMeasure::Lin => Measure::Lin,
        }
    }
}

struct CommonAncestors<'a> {
    left: &'a [(usize, u32)],
    right: &'a [(usize, u32)],
}

impl Iterator for CommonAncestors<'_> {
    type Item = (usize, u32, u32);

    fn next(&mut self) -> Option<Self::Item> {
        while let (Some(&(a, da)), Some(&(b, db))) = (self.left.first(), self.right.first()) {
            match a.cmp(&b) {
                Ordering::Less => self.left = &self.left[1..],
                Ordering::Greater => self.right = &self.right[1..],
                Ordering::Equal => {
                    self.left = &self.left[1..];
                    self.right = &self.right[1..];
                    return Some((a, da, db));
                }
            }
        }
        None
    }
}

/// Kahn's algorithm from the top down; returns the offending node on a cycle.
fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &k in &children[c] {
            pending[k] -= 1;
            if pending[k] == 0 {
                queue.push_back(k);
            }
        }
    }
    if order.len() < n {
        return Err((0..n).find(|&i| pending[i] > 0).unwrap_or(0));
    }
    Ok(order)
}

fn upward_distances(parents: &[Vec<usize>], start: usize) -> Vec<(usize, u32)> {
    let mut dist: HashMap<usize, u32> = HashMap::new();
    dist.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let d = dist[&c];
        for &p in &parents[c] {
            dist.entry(p).or_insert_with(|| {
                queue.push_back(p);
                d + 1
            });
        }
    }
    let mut out: Vec<_> = dist.into_iter().collect();
    out.sort_unstable();
    out
}

/// Cumulative counts and IC per concept.
///
/// A concept's own count is added once to each of its distinct ancestors, so
/// a descendant reachable along several paths is not double counted.
/// Concepts with zero cumulative mass are assigned half a count, giving a
/// finite IC of `ln(2 * total)`, at or above that of any ancestor.
fn information_content(counts: &[f64], ancestors: &[Vec<(usize, u32)>], root: usize) -> Result<(Vec<f64>, Vec<f64>), LexsemError> {
    let mut cum = vec![0.0; counts.len()];
    for (c, anc) in ancestors.iter().enumerate() {
        for &(a, _) in anc {
            cum[a] += counts[c];
        }
    }
    let total = cum[root];
    if total <= 0.0 {
        return Err(LexsemError::ZeroMass);
    }
    let ic = cum
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            if c == root {
                0.0
            } else if m > 0.0 {
                // clamp rounding noise so IC never drops below the root's
                (-(m / total).ln()).max(0.0)
            } else {
                (2.0 * total).ln()
            }
        })
        .collect();
    Ok((cum, ic))
}

/// Word vectors in memory, keyed by lowercase word.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self, LexsemError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        if dim == 0 {
            return Err(LexsemError::Parse {
                line: 0,
                msg: "dimension must be positive".into(),
            });
        }
        let mut table = EmbeddingTable {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (i, (word, v)) in vectors.into_iter().enumerate() {
            table.push(word.as_ref(), &v, i + 1)?;
        }
        Ok(table)
    }

    fn push(&mut self, word: &str, v: &[f32], line: usize) -> Result<(), LexsemError> {
        if v.len() != self.dim {
            return Err(LexsemError::Parse {
                line,
                msg: format!("`{word}` has {} components, expected {}", v.len(), self.dim),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(LexsemError::Parse {
                line,
                msg: format!("`{word}` has a non-finite component"),
            });
        }
        let key = word.to_lowercase();
        if !self.index.contains_key(&key) {
            self.index.insert(key, self.data.len() / self.dim);
            self.data.extend_from_slice(v);
        }
        Ok(())
    }

    /// Parses `<vocab_size> <dim>` followed by `word v1 .. vdim` lines.
    /// When a word appears in several casings, the first one wins.
    pub fn parse_text(text: &str) -> Result<Self, LexsemError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(LexsemError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let hdr: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str| s.parse::<usize>().ok();
        let (vocab, dim) = match hdr.as_slice() {
            [v, d] => (
                parse_usize(v).ok_or(LexsemError::Parse { line: 1, msg: format!("bad vocab size `{v}`") })?,
                parse_usize(d).ok_or(LexsemError::Parse { line: 1, msg: format!("bad dimension `{d}`") })?,
            ),
            _ => {
                return Err(LexsemError::Parse {
                    line: 1,
                    msg: "header must be `<vocab_size> <dim>`".into(),
                })
            }
        };
        let mut table = EmbeddingTable::from_vectors(dim, std::iter::empty::<(&str, Vec<f32>)>())?;
        table.data.reserve(vocab * dim);
        let mut rows = 0;
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("nonempty line");
            let v = parts
                .map(|x| x.parse::<f32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| LexsemError::Parse {
                    line: i + 1,
                    msg: format!("`{word}`: {e}"),
                })?;
            table.push(word, &v, i + 1)?;
            rows += 1;
        }
        if rows != vocab {
            return Err(LexsemError::Parse {
                line: 1,
                msg: format!("header declares {vocab} vectors, found {rows}"),
            });
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, LexsemError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexsemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_text(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Largest cosine between `term` and any query word; 0 when the term or
    /// every query word is out of vocabulary.
    pub fn max_cos<S: AsRef<str>>(&self, term: &str, queries: &[S]) -> f64 {
        let Some(t) = self.get(term) else { return 0.0 };
        queries
            .iter()
            .filter_map(|q| self.get(q.as_ref()))
            .filter_map(|q| cosine(t, q).ok())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    }
}

/// Cosine similarity, accumulated in f64 and clamped to [-1, 1].
pub fn cosine(v1: &[f32], v2: &[f32]) -> Result<f64, LexsemError> {
    if v1.len() != v2.len() {
        return Err(LexsemError::DimensionMismatch(v1.len(), v2.len()));
    }
    let (mut dot, mut n1, mut n2) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in v1.iter().zip(v2) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        n1 += a * a;
        n2 += b * b;
    }
    if n1 == 0.0 || n2 == 0.0 {
        return Err(LexsemError::ZeroVector);
    }
    Ok((dot / (n1 * n2).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Taxonomy {
        TaxonomyBuilder::new()
            .concept("root", 0.0)
            .concept("a", 5.0)
            .concept("b", 5.0)
            .edge("a", "root")
            .edge("b", "a")
            .build()
            .unwrap()
    }

    #[test]
    fn chain_information_content() {
        let t = chain();
        let (r, a, b) = (t.concept("root").unwrap(), t.concept("a").unwrap(), t.concept("b").unwrap());
        assert_eq!(t.root(), r);
        assert_eq!(t.ic(r), 0.0);
        assert_eq!(t.ic(a), 0.0);
        assert!((t.ic(b) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(t.max_depth(), 2);
        assert!((t.lch_sim(a, b) - 3f64.ln()).abs() < 1e-12);
        assert!((t.res_sim(b, b) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((t.lch_sim(b, b) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn root_mass_only() {
        let t = TaxonomyBuilder::new().concept("r", 3.0).build().unwrap();
        assert_eq!(t.ic(t.root()), 0.0);
        assert!(matches!(t.lin_sim(t.root(), t.root()), Err(LexsemError::UndefinedSimilarity)));
    }

    #[test]
    fn diamond_counts_descendant_once() {
        // r <- x, r <- y, x <- d, y <- d
        let t = TaxonomyBuilder::new()
            .concept("r", 1.0)
            .concept("x", 1.0)
            .concept("y", 1.0)
            .concept("d", 4.0)
            .edge("x", "r")
            .edge("y", "r")
            .edge("d", "x")
            .edge("d", "y")
            .build()
            .unwrap();
        let c = |id| t.cum_count(t.concept(id).unwrap());
        assert_eq!(c("d"), 4.0);
        assert_eq!(c("x"), 5.0);
        assert_eq!(c("y"), 5.0);
        assert_eq!(c("r"), 7.0);
    }

    #[test]
    fn virtual_root_joins_tops() {
        let t = TaxonomyBuilder::new()
            .concept("a", 1.0)
            .concept("b", 1.0)
            .lemma("Alpha", "a")
            .lemma("beta", "b")
            .build()
            .unwrap();
        assert_eq!(t.id(t.root()), VIRTUAL_ROOT);
        assert_eq!(t.len(), 3);
        // only common ancestor is the root
        assert_eq!(t.word_sim("alpha", "beta", TaxMeasure::Res), 0.0);
        assert_eq!(t.word_sim("alpha", "beta", TaxMeasure::Lin), 0.0);
        assert_eq!(t.word_sim("alpha", "alpha", TaxMeasure::Lin), 1.0);
        assert_eq!(t.word_sim("alpha", "unknown", TaxMeasure::Lch), 0.0);
    }

    #[test]
    fn rejects_cycles_and_zero_mass() {
        let cyc = TaxonomyBuilder::new()
            .concept("r", 1.0)
            .concept("a", 1.0)
            .concept("b", 1.0)
            .edge("a", "r")
            .edge("a", "b")
            .edge("b", "a")
            .build();
        assert!(matches!(cyc, Err(LexsemError::CycleDetected(_))));
        let zero = TaxonomyBuilder::new().concept("r", 0.0).concept("a", 0.0).edge("a", "r").build();
        assert!(matches!(zero, Err(LexsemError::ZeroMass)));
    }

    #[test]
    fn lcs_reflexive_and_sibling() {
        let t = TaxonomyBuilder::new()
            .concept("r", 1.0)
            .concept("p", 1.0)
            .concept("s1", 1.0)
            .concept("s2", 1.0)
            .edge("p", "r")
            .edge("s1", "p")
            .edge("s2", "p")
            .build()
            .unwrap();
        let c = |id| t.concept(id).unwrap();
        assert_eq!(t.lcs(c("s1"), c("s1")), c("s1"));
        assert_eq!(t.lcs(c("s1"), c("s2")), c("p"));
        assert_eq!(t.path_nodes(c("s1"), c("s2")), 3);
    }

    #[test]
    fn parses_tsv() {
        let text = "# toy\nC\troot\t0\nC\ta\t5\nE\ta\troot\nL\tApfel\ta\n";
        let t = TaxonomyBuilder::parse_tsv(text).unwrap().build().unwrap();
        assert_eq!(t.senses("apfel").len(), 1);
        assert!(matches!(TaxonomyBuilder::parse_tsv("X\ta\tb"), Err(LexsemError::Parse { line: 1, .. })));
        assert!(matches!(
            TaxonomyBuilder::parse_tsv("C\ta\tfive"),
            Err(LexsemError::Parse { .. })
        ));
        let dangling = TaxonomyBuilder::parse_tsv("C\ta\t1\nE\ta\tzz").unwrap().build();
        assert!(matches!(dangling, Err(LexsemError::UnknownConcept(z)) if z == "zz"));
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap() - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(LexsemError::ZeroVector)));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(LexsemError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn embedding_text_format() {
        let e = EmbeddingTable::parse_text("2 3\nHaus 1 2 2\nbaum 2 1 2\n").unwrap();
        assert_eq!((e.len(), e.dim()), (2, 3));
        assert_eq!(e.max_cos("haus", &["haus"]), 1.0);
        assert_eq!(e.max_cos("garten", &["haus"]), 0.0);
        assert_eq!(e.max_cos("haus", &["garten"]), 0.0);
        assert!((e.max_cos("haus", &["baum", "garten"]) - 8.0 / 9.0).abs() < 1e-7);
        assert!(EmbeddingTable::parse_text("3 3\nhaus 1 2 2\n").is_err());
        assert!(EmbeddingTable::parse_text("1 3\nhaus 1 NaN 2\n").is_err());
        assert!(EmbeddingTable::parse_text("1 3\nhaus 1 2\n").is_err());
    }
}
