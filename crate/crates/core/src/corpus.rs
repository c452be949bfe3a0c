//! Geostamped document streams and their per-term frequency series.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location on the 2D plane the spatial miners work in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Opaque stream identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamId(pub String);

impl StreamId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for StreamId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StreamId {
    fn from(s: &str) -> Self {
        StreamId(s.to_owned())
    }
}

impl From<String> for StreamId {
    fn from(s: String) -> Self {
        StreamId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub id: StreamId,
    pub location: GeoPoint,
}

impl StreamMeta {
    pub fn new(id: impl Into<StreamId>, location: GeoPoint) -> Self {
        Self {
            id: id.into(),
            location,
        }
    }
}

/// Interned term handle, valid for the corpus that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

/// A raw document record as read from an input source.
#[derive(Debug, Clone)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub stream_id: String,
    pub timestamp: i64,
    pub content: DocumentContent,
}

#[derive(Debug, Clone)]
pub enum DocumentContent {
    Text(String),
    Terms(BTreeMap<String, u32>),
}

/// An ingested document. Term counts are sorted by term id and positive.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub stream: usize,
    pub timestamp: usize,
    pub terms: Vec<(TermId, u32)>,
}

impl Document {
    pub fn frequency(&self, term: TermId) -> u32 {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }
}

/// Lowercases, splits on anything that is not alphanumeric, and drops short
/// tokens and stopwords.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    pub min_len: usize,
    pub stopwords: HashSet<String>,
}

const DEFAULT_STOPWORDS: &[&str] = &[
    "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "he", "in", "is", "it",
    "its", "of", "on", "or", "that", "the", "to", "was", "were", "will", "with",
];

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            min_len: 2,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Tokenizer {
    pub fn without_stopwords() -> Self {
        Self {
            min_len: 2,
            stopwords: HashSet::new(),
        }
    }

    pub fn tokens<'a>(&'a self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(move |t| t.chars().count() >= self.min_len && !self.stopwords.contains(t))
    }

    pub fn counts(&self, text: &str) -> BTreeMap<String, u32> {
        let mut out = BTreeMap::new();
        for tok in self.tokens(text) {
            *out.entry(tok).or_insert(0) += 1;
        }
        out
    }
}

/// Frequency values of one term in one stream, indexed by timestamp - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub term: String,
    pub stream_id: StreamId,
    pub values: Vec<u32>,
}

/// Immutable store of geostamped streams, their documents, and the
/// per-(stream, term) frequency series derived from them.
#[derive(Debug, Clone)]
pub struct Corpus {
    streams: Vec<StreamMeta>,
    stream_index: HashMap<StreamId, usize>,
    timeline_length: usize,
    vocabulary: IndexSet<String>,
    documents: Vec<Document>,
    // (stream, timestamp - 1) -> indices into `documents`
    slots: Vec<Vec<usize>>,
    series: HashMap<(TermId, usize), Box<[u32]>>,
    zeros: Box<[u32]>,
}

/// Collects streams and documents, then validates them into a [`Corpus`].
#[derive(Debug, Clone)]
pub struct CorpusBuilder {
    streams: Vec<StreamMeta>,
    timeline_override: Option<usize>,
    tokenizer: Tokenizer,
    records: Vec<DocumentRecord>,
}

impl CorpusBuilder {
    pub fn new(streams: Vec<StreamMeta>) -> Self {
        Self {
            streams,
            timeline_override: None,
            tokenizer: Tokenizer::default(),
            records: Vec::new(),
        }
    }

    pub fn timeline_length(mut self, length: Option<usize>) -> Self {
        self.timeline_override = length;
        self
    }

    pub fn tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn add(&mut self, record: DocumentRecord) -> &mut Self {
        self.records.push(record);
        self
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = DocumentRecord>) -> &mut Self {
        self.records.extend(records);
        self
    }

    pub fn build(self) -> Result<Corpus> {
        ingest(self.records, self.streams, self.timeline_override, &self.tokenizer)
    }
}

/// Builds a corpus from document and stream records.
///
/// The timeline length defaults to the largest timestamp seen; an explicit
/// override keeps trailing empty timestamps representable.
pub fn ingest(
    documents: impl IntoIterator<Item = DocumentRecord>,
    streams: Vec<StreamMeta>,
    timeline_override: Option<usize>,
    tokenizer: &Tokenizer,
) -> Result<Corpus> {
    if streams.is_empty() {
        return Err(Error::EmptyStreamSet);
    }
    let mut stream_index = HashMap::with_capacity(streams.len());
    for (i, s) in streams.iter().enumerate() {
        if !s.location.is_finite() {
            return Err(Error::NonFiniteLocation(s.id.0.clone()));
        }
        if stream_index.insert(s.id.clone(), i).is_some() {
            return Err(Error::DuplicateStream(s.id.0.clone()));
        }
    }

    let mut vocabulary = IndexSet::new();
    let mut docs = Vec::new();
    for record in documents {
        let stream = *stream_index
            .get(record.stream_id.as_str())
            .ok_or_else(|| Error::UnknownStreamInDocument {
                doc_id: record.doc_id.clone(),
                stream_id: record.stream_id.clone(),
            })?;
        if record.timestamp < 1 {
            return Err(Error::NonPositiveTimestamp {
                doc_id: record.doc_id,
                timestamp: record.timestamp,
            });
        }
        if let Some(limit) = timeline_override {
            if record.timestamp as u64 > limit as u64 {
                return Err(Error::TimestampBeyondTimeline {
                    doc_id: record.doc_id,
                    timestamp: record.timestamp,
                    timeline: limit,
                });
            }
        }
        let counts = match record.content {
            DocumentContent::Text(text) => tokenizer.counts(&text),
            DocumentContent::Terms(terms) => {
                if let Some((term, _)) = terms.iter().find(|(_, &c)| c == 0) {
                    return Err(Error::ZeroTermCount {
                        doc_id: record.doc_id,
                        term: term.clone(),
                    });
                }
                terms
            }
        };
        let mut terms: Vec<(TermId, u32)> = counts
            .into_iter()
            .map(|(term, count)| {
                let (idx, _) = vocabulary.insert_full(term);
                (TermId(idx as u32), count)
            })
            .collect();
        terms.sort_unstable_by_key(|&(t, _)| t);
        docs.push(Document {
            doc_id: record.doc_id,
            stream,
            timestamp: record.timestamp as usize,
            terms,
        });
    }

    let observed = docs.iter().map(|d| d.timestamp).max().unwrap_or(0);
    let timeline_length = timeline_override.unwrap_or(observed).max(1);
    Ok(Corpus::assemble(
        streams,
        stream_index,
        timeline_length,
        vocabulary,
        docs,
    ))
}

impl Corpus {
    fn assemble(
        streams: Vec<StreamMeta>,
        stream_index: HashMap<StreamId, usize>,
        timeline_length: usize,
        vocabulary: IndexSet<String>,
        documents: Vec<Document>,
    ) -> Corpus {
        let n = streams.len();
        let mut slots = vec![Vec::new(); n * timeline_length];
        let mut series: HashMap<(TermId, usize), Box<[u32]>> = HashMap::new();
        for (i, doc) in documents.iter().enumerate() {
            let slot = doc.timestamp - 1;
            slots[doc.stream * timeline_length + slot].push(i);
            for &(term, count) in &doc.terms {
                let values = series
                    .entry((term, doc.stream))
                    .or_insert_with(|| vec![0; timeline_length].into_boxed_slice());
                values[slot] += count;
            }
        }
        Corpus {
            streams,
            stream_index,
            timeline_length,
            vocabulary,
            documents,
            slots,
            series,
            zeros: vec![0; timeline_length].into_boxed_slice(),
        }
    }

    /// Wraps a frequency table as a corpus with one synthetic document per
    /// non-empty (stream, timestamp) cell. Document ids are `<stream>@<t>`.
    pub fn from_counts(
        streams: Vec<StreamMeta>,
        timeline_length: usize,
        counts: impl IntoIterator<Item = (usize, usize, String, u32)>,
    ) -> Result<Corpus> {
        if streams.is_empty() {
            return Err(Error::EmptyStreamSet);
        }
        if timeline_length == 0 {
            return Err(Error::InvalidParameter("timeline length must be >= 1".into()));
        }
        let mut stream_index = HashMap::with_capacity(streams.len());
        for (i, s) in streams.iter().enumerate() {
            if !s.location.is_finite() {
                return Err(Error::NonFiniteLocation(s.id.0.clone()));
            }
            if stream_index.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateStream(s.id.0.clone()));
            }
        }
        let mut vocabulary = IndexSet::new();
        let mut cells: BTreeMap<(usize, usize), BTreeMap<TermId, u32>> = BTreeMap::new();
        for (stream, timestamp, term, count) in counts {
            if stream >= streams.len() {
                return Err(Error::UnknownStream(format!("#{stream}")));
            }
            if timestamp < 1 || timestamp > timeline_length {
                return Err(Error::RangeOutOfBounds {
                    l: timestamp,
                    r: timestamp,
                    len: timeline_length,
                });
            }
            if count == 0 {
                continue;
            }
            let (idx, _) = vocabulary.insert_full(term);
            *cells
                .entry((stream, timestamp))
                .or_default()
                .entry(TermId(idx as u32))
                .or_insert(0) += count;
        }
        let documents = cells
            .into_iter()
            .map(|((stream, timestamp), terms)| Document {
                doc_id: format!("{}@{}", streams[stream].id, timestamp),
                stream,
                timestamp,
                terms: terms.into_iter().collect(),
            })
            .collect();
        Ok(Corpus::assemble(
            streams,
            stream_index,
            timeline_length,
            vocabulary,
            documents,
        ))
    }

    pub fn streams(&self) -> &[StreamMeta] {
        &self.streams
    }

    pub fn stream_count(&self) -> usize {
        self.streams.len()
    }

    pub fn timeline_length(&self) -> usize {
        self.timeline_length
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &IndexSet<String> {
        &self.vocabulary
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocabulary.get_index_of(term).map(|i| TermId(i as u32))
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocabulary[id.0 as usize]
    }

    pub fn stream_position(&self, id: &str) -> Result<usize> {
        self.stream_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownStream(id.to_owned()))
    }

    /// Documents reported by `stream` (index) at `timestamp` (1-based).
    pub fn documents_at(&self, stream: usize, timestamp: usize) -> impl Iterator<Item = &Document> {
        let slot = &self.slots[stream * self.timeline_length + timestamp - 1];
        slot.iter().map(move |&i| &self.documents[i])
    }

    /// Borrowed frequency values; all zeros when the term never occurs there.
    pub fn series_values(&self, stream: usize, term: TermId) -> &[u32] {
        self.series
            .get(&(term, stream))
            .map(|v| &v[..])
            .unwrap_or(&self.zeros)
    }

    /// Per-stream series of one term, in stream order.
    pub fn term_matrix(&self, term: TermId) -> Vec<&[u32]> {
        (0..self.streams.len())
            .map(|s| self.series_values(s, term))
            .collect()
    }

    pub fn frequency_series(&self, stream_id: &str, term: &str) -> Result<FrequencySeries> {
        let stream = self.stream_position(stream_id)?;
        let values = match self.term_id(term) {
            Some(t) => self.series_values(stream, t).to_vec(),
            None => vec![0; self.timeline_length],
        };
        Ok(FrequencySeries {
            term: term.to_owned(),
            stream_id: self.streams[stream].id.clone(),
            values,
        })
    }

    pub fn locations(&self) -> Vec<GeoPoint> {
        self.streams.iter().map(|s| s.location).collect()
    }
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance in kilometres between two (lat, lon) pairs given in
/// degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn streams(ids: &[&str]) -> Vec<StreamMeta> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| StreamMeta::new(*id, GeoPoint::new(i as f64, 0.0)))
            .collect()
    }

    fn terms_doc(id: &str, stream: &str, t: i64, terms: &[(&str, u32)]) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            stream_id: stream.into(),
            timestamp: t,
            content: DocumentContent::Terms(terms.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
        }
    }

    #[test]
    fn empty_corpus_with_override() {
        let c = ingest(vec![], streams(&["a", "b", "c"]), Some(10), &Tokenizer::default()).unwrap();
        assert_eq!(c.stream_count(), 3);
        assert_eq!(c.timeline_length(), 10);
        assert_eq!(c.frequency_series("b", "gaza").unwrap().values, vec![0; 10]);
    }

    #[test]
    fn single_record() {
        let c = ingest(
            vec![terms_doc("d1", "A", 2, &[("gaza", 3)])],
            streams(&["A"]),
            None,
            &Tokenizer::default(),
        )
        .unwrap();
        assert_eq!(c.timeline_length(), 2);
        assert_eq!(c.frequency_series("A", "gaza").unwrap().values, vec![0, 3]);
    }

    #[test]
    fn same_slot_counts_add_up() {
        let c = ingest(
            vec![
                terms_doc("d1", "A", 1, &[("gaza", 1)]),
                terms_doc("d2", "A", 1, &[("gaza", 2)]),
            ],
            streams(&["A"]),
            None,
            &Tokenizer::default(),
        )
        .unwrap();
        assert_eq!(c.frequency_series("A", "gaza").unwrap().values, vec![3]);
        assert_eq!(c.documents_at(0, 1).count(), 2);
    }

    #[test]
    fn series_from_several_documents() {
        let c = ingest(
            vec![
                terms_doc("d1", "A", 1, &[("x", 2)]),
                terms_doc("d2", "A", 1, &[("x", 6)]),
                terms_doc("d3", "A", 2, &[("x", 3)]),
            ],
            streams(&["A"]),
            None,
            &Tokenizer::default(),
        )
        .unwrap();
        assert_eq!(c.frequency_series("A", "x").unwrap().values, vec![8, 3]);
        let c = ingest(
            vec![terms_doc("d1", "A", 3, &[("x", 4)])],
            streams(&["A"]),
            Some(4),
            &Tokenizer::default(),
        )
        .unwrap();
        assert_eq!(c.frequency_series("A", "x").unwrap().values, vec![0, 0, 4, 0]);
    }

    #[test]
    fn rejects_bad_records() {
        let tok = Tokenizer::default();
        let err = ingest(vec![terms_doc("d9", "Z", 1, &[("x", 1)])], streams(&["A"]), None, &tok)
            .unwrap_err();
        assert!(err.to_string().contains("d9"));
        let err = ingest(vec![terms_doc("d1", "A", 0, &[("x", 1)])], streams(&["A"]), None, &tok)
            .unwrap_err();
        assert!(matches!(err, Error::NonPositiveTimestamp { .. }));
        assert!(matches!(
            ingest(vec![], vec![], None, &tok).unwrap_err(),
            Error::EmptyStreamSet
        ));
        assert!(matches!(
            ingest(vec![], streams(&["A", "A"]), None, &tok).unwrap_err(),
            Error::DuplicateStream(_)
        ));
        assert!(matches!(
            Corpus::from_counts(streams(&["A"]), 3, vec![]).unwrap().frequency_series("Q", "x"),
            Err(Error::UnknownStream(_))
        ));
    }

    #[test]
    fn tokenizer_defaults() {
        let tok = Tokenizer::default();
        let counts = tok.counts("The Gaza strip; GAZA-border, a x 42 is");
        assert_eq!(counts.get("gaza"), Some(&2));
        assert_eq!(counts.get("42"), Some(&1));
        assert!(!counts.contains_key("the"));
        assert!(!counts.contains_key("x"));
        assert!(!counts.contains_key("a"));
    }

    #[test]
    fn text_documents_are_tokenized() {
        let rec = DocumentRecord {
            doc_id: "d".into(),
            stream_id: "A".into(),
            timestamp: 1,
            content: DocumentContent::Text("Quake hits city; quake damage".into()),
        };
        let c = ingest(vec![rec], streams(&["A"]), None, &Tokenizer::default()).unwrap();
        assert_eq!(c.frequency_series("A", "quake").unwrap().values, vec![2]);
        let doc = &c.documents()[0];
        assert_eq!(doc.frequency(c.term_id("damage").unwrap()), 1);
    }

    #[test]
    fn from_counts_builds_one_document_per_cell() {
        let c = Corpus::from_counts(
            streams(&["A", "B"]),
            3,
            vec![
                (0, 1, "x".to_string(), 2),
                (0, 1, "y".to_string(), 1),
                (1, 3, "x".to_string(), 5),
            ],
        )
        .unwrap();
        assert_eq!(c.documents().len(), 2);
        assert_eq!(c.documents()[0].doc_id, "A@1");
        assert_eq!(c.frequency_series("B", "x").unwrap().values, vec![0, 0, 5]);
    }

    #[test]
    fn haversine_quarter_circumference() {
        let d = haversine_km(0.0, 0.0, 0.0, 90.0);
        assert!((d - std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM).abs() < 1e-6);
        assert_eq!(haversine_km(10.0, 20.0, 10.0, 20.0), 0.0);
    }
}
