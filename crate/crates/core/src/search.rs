//! Bursty-document search.
//!
//! A document scores for a query term by how often it uses the term times
//! how bursty the term was where and when the document was written. The
//! second factor comes from the mined patterns the document falls inside;
//! a document that uses the term outside every pattern is not bursty for it
//! at all and drops out of the ranking. Top-k retrieval runs the Threshold
//! Algorithm over per-term postings sorted by score.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::stcomb::CombinatorialPattern;
use crate::stlocal::SpatiotemporalWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Comb,
    Local,
}

/// A pattern reduced to what search needs: member stream positions,
/// an inclusive timeframe and a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedPattern {
    pub streams: Vec<usize>,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl IndexedPattern {
    pub fn new(mut streams: Vec<usize>, start: usize, end: usize, score: f64) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::InvalidParameter(format!("pattern score {score} is not finite")));
        }
        if start < 1 || start > end {
            return Err(Error::InvalidParameter(format!("invalid timeframe [{start}:{end}]")));
        }
        if streams.is_empty() {
            return Err(Error::EmptyStreamSet);
        }
        streams.sort_unstable();
        streams.dedup();
        Ok(Self { streams, start, end, score })
    }
}

/// Mined patterns of one kind, grouped by term.
#[derive(Debug, Clone)]
pub struct PatternIndex {
    kind: PatternKind,
    terms: HashMap<String, Vec<IndexedPattern>>,
}

impl PatternIndex {
    pub fn new(kind: PatternKind) -> Self {
        Self {
            kind,
            terms: HashMap::new(),
        }
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn insert(&mut self, term: &str, pattern: IndexedPattern) {
        self.terms.entry(term.to_owned()).or_default().push(pattern);
    }

    pub fn remove_term(&mut self, term: &str) {
        self.terms.remove(term);
    }

    pub fn patterns(&self, term: &str) -> &[IndexedPattern] {
        self.terms.get(term).map(|v| &v[..]).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|v| v.is_empty())
    }

    pub fn from_combinatorial(corpus: &Corpus, patterns: &[CombinatorialPattern]) -> Result<Self> {
        let mut index = Self::new(PatternKind::Comb);
        for p in patterns {
            let streams = p
                .streams
                .iter()
                .map(|s| corpus.stream_position(s.as_str()))
                .collect::<Result<Vec<_>>>()?;
            index.insert(&p.term, IndexedPattern::new(streams, p.timeframe.0, p.timeframe.1, p.score)?);
        }
        Ok(index)
    }

    pub fn from_regional(windows: &[SpatiotemporalWindow]) -> Result<Self> {
        let mut index = Self::new(PatternKind::Local);
        for w in windows {
            let p = IndexedPattern::new(w.region.members().to_vec(), w.timeframe.0, w.timeframe.1, w.w_score)?;
            index.insert(&w.term, p);
        }
        Ok(index)
    }
}

/// How the scores of all patterns overlapping a document are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateFn {
    #[default]
    Max,
    Min,
    Median,
    Mean,
}

impl AggregateFn {
    /// `None` for an empty input.
    pub fn apply(self, scores: &mut [f64]) -> Option<f64> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len();
        Some(match self {
            AggregateFn::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            AggregateFn::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
            AggregateFn::Mean => scores.iter().sum::<f64>() / n as f64,
            AggregateFn::Median => {
                scores.sort_by(f64::total_cmp);
                if n % 2 == 1 {
                    scores[n / 2]
                } else {
                    (scores[n / 2 - 1] + scores[n / 2]) / 2.0
                }
            }
        })
    }
}

impl std::str::FromStr for AggregateFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            "median" => Ok(Self::Median),
            "mean" | "average" => Ok(Self::Mean),
            other => Err(Error::InvalidParameter(format!("unknown aggregate `{other}`"))),
        }
    }
}

pub fn overlaps(doc: &Document, pattern: &IndexedPattern) -> bool {
    pattern.start <= doc.timestamp
        && doc.timestamp <= pattern.end
        && pattern.streams.binary_search(&doc.stream).is_ok()
}

/// Add-one log frequency.
pub fn relevance(freq: u32) -> f64 {
    (freq as f64 + 1.0).ln()
}

/// Aggregated score of the patterns of `term` that contain the document,
/// or `-inf` when there are none.
pub fn doc_burstiness(doc: &Document, patterns: &[IndexedPattern], aggregate: AggregateFn) -> f64 {
    let mut scores: Vec<f64> = patterns.iter().filter(|p| overlaps(doc, p)).map(|p| p.score).collect();
    aggregate.apply(&mut scores).unwrap_or(f64::NEG_INFINITY)
}

/// Per-term score of a document: relevance times burstiness, with absent
/// terms contributing nothing.
pub fn term_score(corpus: &Corpus, doc: &Document, term: &str, index: &PatternIndex, aggregate: AggregateFn) -> f64 {
    let freq = corpus.term_id(term).map(|t| doc.frequency(t)).unwrap_or(0);
    if freq == 0 {
        return 0.0;
    }
    relevance(freq) * doc_burstiness(doc, index.patterns(term), aggregate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub score: f64,
    pub contributions: BTreeMap<String, f64>,
}

/// Query terms, deduplicated and in a fixed order.
pub fn query_terms<'a>(query: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    query.into_iter().map(str::to_owned).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Scores a document from scratch against the mined patterns.
pub fn score_document(
    corpus: &Corpus,
    query: &[&str],
    doc: &Document,
    index: &PatternIndex,
    aggregate: AggregateFn,
) -> Result<ScoredDocument> {
    let terms = query_terms(query.iter().copied());
    if terms.is_empty() {
        return Err(Error::InvalidParameter("empty query".into()));
    }
    let contributions: BTreeMap<String, f64> = terms
        .into_iter()
        .map(|t| {
            let s = term_score(corpus, doc, &t, index, aggregate);
            (t, s)
        })
        .collect();
    Ok(ScoredDocument {
        doc_id: doc.doc_id.clone(),
        score: contributions.values().sum(),
        contributions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
struct TermPostings {
    /// Finite scores, best first.
    postings: Vec<Posting>,
    /// Documents that use the term outside every pattern.
    blocked: Vec<u32>,
    lookup: HashMap<u32, f64>,
}

impl TermPostings {
    fn new(mut postings: Vec<Posting>, mut blocked: Vec<u32>, doc_ids: &[String]) -> Self {
        postings.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| doc_ids[a.doc as usize].cmp(&doc_ids[b.doc as usize]))
        });
        blocked.sort_unstable();
        let lookup = postings.iter().map(|p| (p.doc, p.score)).collect();
        Self { postings, blocked, lookup }
    }

    fn random_access(&self, doc: u32) -> f64 {
        match self.lookup.get(&doc) {
            Some(&s) => s,
            None if self.blocked.binary_search(&doc).is_ok() => f64::NEG_INFINITY,
            None => 0.0,
        }
    }
}

/// Immutable inverted index from terms to scored postings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "IndexFile", try_from = "IndexFile")]
pub struct InvertedIndex {
    kind: PatternKind,
    doc_ids: Vec<String>,
    terms: BTreeMap<String, TermPostings>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    kind: PatternKind,
    doc_ids: Vec<String>,
    terms: BTreeMap<String, TermFile>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    postings: Vec<Posting>,
    blocked: Vec<u32>,
}

impl From<InvertedIndex> for IndexFile {
    fn from(index: InvertedIndex) -> Self {
        IndexFile {
            kind: index.kind,
            doc_ids: index.doc_ids,
            terms: index
                .terms
                .into_iter()
                .map(|(t, p)| {
                    (
                        t,
                        TermFile {
                            postings: p.postings,
                            blocked: p.blocked,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<IndexFile> for InvertedIndex {
    type Error = Error;

    fn try_from(file: IndexFile) -> Result<Self> {
        let n = file.doc_ids.len();
        let mut terms = BTreeMap::new();
        for (t, f) in file.terms {
            let bad_doc = f.postings.iter().map(|p| p.doc).chain(f.blocked.iter().copied()).any(|d| d as usize >= n);
            if bad_doc || f.postings.iter().any(|p| !p.score.is_finite()) {
                return Err(Error::InvalidParameter(format!("corrupt postings for term `{t}`")));
            }
            terms.insert(t, TermPostings::new(f.postings, f.blocked, &file.doc_ids));
        }
        Ok(InvertedIndex {
            kind: file.kind,
            doc_ids: file.doc_ids,
            terms,
        })
    }
}

pub fn build_index(corpus: &Corpus, patterns: &PatternIndex, aggregate: AggregateFn) -> InvertedIndex {
    let doc_ids: Vec<String> = corpus.documents().iter().map(|d| d.doc_id.clone()).collect();
    let mut raw: Vec<(Vec<Posting>, Vec<u32>)> = vec![Default::default(); corpus.vocabulary().len()];
    for (i, doc) in corpus.documents().iter().enumerate() {
        for &(term, freq) in &doc.terms {
            let burst = doc_burstiness(doc, patterns.patterns(corpus.term(term)), aggregate);
            let slot = &mut raw[term.0 as usize];
            if burst.is_finite() {
                slot.0.push(Posting {
                    doc: i as u32,
                    score: relevance(freq) * burst,
                });
            } else {
                slot.1.push(i as u32);
            }
        }
    }
    let terms = corpus
        .vocabulary()
        .iter()
        .zip(raw)
        .map(|(t, (postings, blocked))| (t.clone(), TermPostings::new(postings, blocked, &doc_ids)))
        .collect();
    InvertedIndex {
        kind: patterns.kind(),
        doc_ids,
        terms,
    }
}

impl InvertedIndex {
    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    /// Sorted postings of a term; empty for unknown terms.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map(|p| &p.postings[..]).unwrap_or(&[])
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    fn scored(&self, terms: &[String], doc: u32) -> ScoredDocument {
        let contributions: BTreeMap<String, f64> = terms
            .iter()
            .map(|t| {
                let s = self.terms.get(t).map(|p| p.random_access(doc)).unwrap_or(0.0);
                (t.clone(), s)
            })
            .collect();
        ScoredDocument {
            doc_id: self.doc_ids[doc as usize].clone(),
            score: contributions.values().sum(),
            contributions,
        }
    }
}

fn rank(a: &ScoredDocument, b: &ScoredDocument) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

#[derive(Debug, Clone)]
pub struct TopK {
    pub results: Vec<ScoredDocument>,
    /// Distinct documents touched by sorted access.
    pub visited: usize,
}

/// Exact top-k by the Threshold Algorithm.
///
/// Lists are read round-robin; every newly seen document is completed by
/// random access. The scan stops once the k-th best score beats the sum of
/// the scores at the current depth of every list, which bounds any document
/// not seen yet. The comparison is strict so that an unseen document tied
/// with the k-th one cannot be ranked ahead of it by its id.
pub fn top_k(index: &InvertedIndex, query: &[&str], k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let terms = query_terms(query.iter().copied());
    let lists: Vec<&[Posting]> = terms.iter().map(|t| index.postings(t)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut best: Vec<ScoredDocument> = Vec::with_capacity(k + 1);
    let mut depth = 0;
    loop {
        let mut advanced = false;
        for list in &lists {
            let Some(p) = list.get(depth) else { continue };
            advanced = true;
            if !seen.insert(p.doc) {
                continue;
            }
            let scored = index.scored(&terms, p.doc);
            if !scored.score.is_finite() {
                continue;
            }
            let pos = best.partition_point(|b| rank(b, &scored) == Ordering::Less);
            if pos < k {
                best.insert(pos, scored);
                best.truncate(k);
            }
        }
        if !advanced {
            break;
        }
        let threshold: f64 = lists.iter().map(|l| l.get(depth).map_or(0.0, |p| p.score.max(0.0))).sum();
        depth += 1;
        if best.len() == k && best[k - 1].score > threshold {
            break;
        }
    }
    Ok(TopK {
        results: best,
        visited: seen.len(),
    })
}

/// Reference ranking that scores every document holding a posting for some
/// query term.
pub fn full_scan(index: &InvertedIndex, query: &[&str], k: usize) -> Vec<ScoredDocument> {
    let terms = query_terms(query.iter().copied());
    let mut all: Vec<ScoredDocument> = (0..index.doc_count() as u32)
        .filter(|&d| terms.iter().any(|t| index.terms.get(t).is_some_and(|p| p.lookup.contains_key(&d))))
        .map(|d| index.scored(&terms, d))
        .filter(|s| s.score.is_finite())
        .collect();
    all.sort_by(rank);
    all.truncate(k);
    all
}
