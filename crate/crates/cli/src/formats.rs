//! On-disk formats: streams.json, documents.jsonl, frequencies.csv,
//! distances.csv, external baselines and stable-ordered JSON.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use geoburst::corpus::{haversine_km, DocumentContent, DocumentRecord, Tokenizer};
use geoburst::mds::classical_mds;
use geoburst::spatial::ExternalTable;
use geoburst::{Corpus, GeoPoint, StreamMeta};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::CorpusArgs;
use crate::UsageError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamRecord {
    stream_id: String,
    x: Option<f64>,
    y: Option<f64>,
    lat: Option<f64>,
    lon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentLine {
    doc_id: String,
    stream_id: String,
    timestamp: i64,
    text: Option<String>,
    terms: Option<BTreeMap<String, u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub stream: String,
    pub timestamp: usize,
    pub term: String,
    pub count: u32,
}

#[derive(Debug, Deserialize)]
struct ExpectedRow {
    stream: String,
    timestamp: usize,
    term: String,
    expected: f64,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Reads streams.json. Positions come from x/y, from lat/lon through
/// haversine distances and MDS, or from a distance matrix through MDS.
pub fn read_streams(path: &Path, distances: Option<&Path>) -> Result<Vec<StreamMeta>> {
    let records: Vec<StreamRecord> =
        serde_json::from_reader(open(path)?).with_context(|| format!("{}: malformed streams", path.display()))?;
    ensure!(!records.is_empty(), "{}: no streams", path.display());
    let ids: Vec<String> = records.iter().map(|r| r.stream_id.clone()).collect();

    let locations = if let Some(dpath) = distances {
        let (header, matrix) = read_distances(dpath)?;
        let row_of: BTreeMap<&str, usize> = header.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let order = ids
            .iter()
            .map(|id| {
                row_of
                    .get(id.as_str())
                    .copied()
                    .with_context(|| format!("{}: no row for stream {id}", dpath.display()))
            })
            .collect::<Result<Vec<_>>>()?;
        let sub: Vec<Vec<f64>> = order.iter().map(|&i| order.iter().map(|&j| matrix[i][j]).collect()).collect();
        classical_mds(&sub).with_context(|| dpath.display().to_string())?
    } else if records.iter().all(|r| r.x.is_some() && r.y.is_some()) {
        records.iter().map(|r| GeoPoint::new(r.x.unwrap(), r.y.unwrap())).collect()
    } else if records.iter().all(|r| r.lat.is_some() && r.lon.is_some()) {
        let coords: Vec<(f64, f64)> = records.iter().map(|r| (r.lat.unwrap(), r.lon.unwrap())).collect();
        let matrix: Vec<Vec<f64>> = coords
            .iter()
            .map(|&(la, lo)| coords.iter().map(|&(lb, lob)| haversine_km(la, lo, lb, lob)).collect())
            .collect();
        classical_mds(&matrix)?
    } else {
        bail!(
            "{}: every stream needs x/y, or every stream needs lat/lon, unless --distances is given",
            path.display()
        );
    };
    Ok(ids.into_iter().zip(locations).map(|(id, loc)| StreamMeta::new(id, loc)).collect())
}

/// Reads an n×n distance matrix whose header row holds the stream ids.
/// Data rows may start with the row's stream id.
pub fn read_distances(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let mut header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if header.first().is_some_and(|h| h.is_empty()) {
        header.remove(0);
    }
    let n = header.len();
    let mut matrix = Vec::with_capacity(n);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let cells: Vec<&str> = rec.iter().collect();
        let values = if cells.len() == n + 1 { &cells[1..] } else { &cells[..] };
        ensure!(values.len() == n, "{}: row {} has {} values, expected {n}", path.display(), i + 2, values.len());
        let row = values
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        matrix.push(row);
    }
    ensure!(matrix.len() == n, "{}: {} rows for {n} streams", path.display(), matrix.len());
    Ok((header, matrix))
}

pub fn read_documents(path: &Path) -> Result<Vec<DocumentRecord>> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocumentLine = serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), n + 1))?;
        let content = match (doc.text, doc.terms) {
            (Some(text), None) => DocumentContent::Text(text),
            (None, Some(terms)) => DocumentContent::Terms(terms),
            _ => bail!("{}: line {}: exactly one of `text` and `terms` is required", path.display(), n + 1),
        };
        out.push(DocumentRecord {
            doc_id: doc.doc_id,
            stream_id: doc.stream_id,
            timestamp: doc.timestamp,
            content,
        });
    }
    Ok(out)
}

pub fn read_frequencies(path: &Path) -> Result<Vec<FrequencyRow>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

pub fn read_stopwords(path: &Path) -> Result<Tokenizer> {
    let mut tokenizer = Tokenizer::without_stopwords();
    for line in open(path)?.lines() {
        let word = line?.trim().to_lowercase();
        if !word.is_empty() {
            tokenizer.stopwords.insert(word);
        }
    }
    Ok(tokenizer)
}

pub fn read_expected(path: &Path) -> Result<ExternalTable> {
    let mut table = ExternalTable::new();
    let mut reader = csv::Reader::from_reader(open(path)?);
    for (i, row) in reader.deserialize::<ExpectedRow>().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        table.insert(&row.stream, &row.term, row.timestamp, row.expected);
    }
    Ok(table)
}

/// Loads the corpus named by the corpus flags.
pub fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    let streams_path = args
        .streams
        .as_deref()
        .ok_or_else(|| UsageError("--streams is required".into()))?;
    let streams = read_streams(streams_path, args.distances.as_deref())?;
    match (&args.documents, &args.frequencies) {
        (Some(docs), None) => {
            let tokenizer = match &args.stopwords {
                Some(p) => read_stopwords(p)?,
                None => Tokenizer::default(),
            };
            let records = read_documents(docs)?;
            Ok(geoburst::corpus::ingest(records, streams, args.timeline, &tokenizer)?)
        }
        (None, Some(freqs)) => {
            let rows = read_frequencies(freqs)?;
            let position: BTreeMap<&str, usize> = streams.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
            let mut cells = Vec::with_capacity(rows.len());
            for (i, r) in rows.iter().enumerate() {
                let s = *position
                    .get(r.stream.as_str())
                    .with_context(|| format!("{}: row {} names unknown stream {}", freqs.display(), i + 2, r.stream))?;
                ensure!(r.timestamp >= 1, "{}: row {} has timestamp 0", freqs.display(), i + 2);
                cells.push((s, r.timestamp, r.term.clone(), r.count));
            }
            let timeline = args
                .timeline
                .unwrap_or_else(|| rows.iter().map(|r| r.timestamp).max().unwrap_or(1));
            Ok(Corpus::from_counts(streams, timeline, cells)?)
        }
        (None, None) => Err(UsageError("one of --documents or --frequencies is required".into()).into()),
        (Some(_), Some(_)) => Err(UsageError("--documents and --frequencies are mutually exclusive".into()).into()),
    }
}

/// Rebuilds every object with its keys in sorted order, whatever map type
/// serde_json was compiled with.
pub fn sorted(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let entries: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(entries.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&sorted(serde_json::to_value(value)?))?)
}

pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&sorted(serde_json::to_value(value)?))?)
}

pub fn write_json<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    writeln!(out, "{}", to_json(value)?)?;
    Ok(())
}

pub fn write_streams(out: &mut impl Write, streams: &[StreamMeta]) -> Result<()> {
    let records: Vec<Value> = streams
        .iter()
        .map(|s| serde_json::json!({"stream_id": s.id.as_str(), "x": s.location.x, "y": s.location.y}))
        .collect();
    write_json(out, &records)
}

pub fn frequency_writer(out: impl Write) -> csv::Writer<impl Write> {
    csv::Writer::from_writer(out)
}

/// Writes the nonzero cells of one term's `matrix[stream][t - 1]`.
pub fn write_term_rows<W: Write>(
    writer: &mut csv::Writer<W>,
    term: &str,
    streams: &[StreamMeta],
    matrix: &[impl AsRef<[u32]>],
) -> Result<()> {
    for (meta, row) in streams.iter().zip(matrix) {
        for (i, &count) in row.as_ref().iter().enumerate() {
            if count > 0 {
                writer.serialize(FrequencyRow {
                    stream: meta.id.to_string(),
                    timestamp: i + 1,
                    term: term.to_owned(),
                    count,
                })?;
            }
        }
    }
    Ok(())
}

/// Terms of a corpus in lexicographic order.
pub fn sorted_terms(corpus: &Corpus) -> Vec<String> {
    let mut terms: Vec<String> = corpus.vocabulary().iter().cloned().collect();
    terms.sort_unstable();
    terms
}

/// All nonzero frequencies of a corpus, term by term.
pub fn write_frequencies(out: impl Write, corpus: &Corpus) -> Result<()> {
    let mut writer = frequency_writer(out);
    for term in sorted_terms(corpus) {
        let id = corpus.term_id(&term).expect("vocabulary term");
        write_term_rows(&mut writer, &term, corpus.streams(), &corpus.term_matrix(id))?;
    }
    writer.flush()?;
    Ok(())
}
