//! Retrieval metrics, the Base baseline and the synthetic experiment harness.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{GeoPoint, StreamId};
use crate::error::{Error, Result};
use crate::spatial::{burstiness_series, BaselineModel, Bounds};
use crate::stcomb::extract_patterns;
use crate::stlocal::mine_term;
use crate::synth::{generate, GeneratorConfig, GeneratorMode, SyntheticData};
use crate::temporal::significant_intervals;

/// Set Jaccard of two sorted, deduplicated slices. Two empty sets are
/// identical.
pub fn jaccard_sim<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common as f64 / (a.len() + b.len() - common) as f64
}

/// Absolute differences of the start and end timestamps.
pub fn timeframe_errors(truth: (usize, usize), retrieved: (usize, usize)) -> (usize, usize) {
    (truth.0.abs_diff(retrieved.0), truth.1.abs_diff(retrieved.1))
}

/// Number of timestamps shared by two inclusive timeframes.
pub fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        0
    } else {
        hi + 1 - lo
    }
}

fn gap(a: (usize, usize), b: (usize, usize)) -> usize {
    if overlap(a, b) > 0 {
        0
    } else {
        b.0.saturating_sub(a.1).max(a.0.saturating_sub(b.1))
    }
}

/// Streams, members or not, located inside the closed bounding rectangle of
/// the members.
pub fn mbr_stream_count(members: &[usize], locations: &[GeoPoint]) -> Result<usize> {
    let bounds = Bounds::of_points(members.iter().map(|&m| &locations[m])).ok_or(Error::EmptyStreamSet)?;
    Ok(locations.iter().filter(|p| bounds.contains(p)).count())
}

/// A pattern reported by any method, reduced to stream positions and an
/// inclusive timeframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedPattern {
    pub streams: Vec<usize>,
    pub timeframe: (usize, usize),
    pub score: f64,
}

/// Positive-score runs of a burstiness sequence after interior zero runs
/// shorter than `ell` are filled in. Intervals are 1-based and inclusive.
pub fn base_intervals(scores: &[f64], ell: usize) -> Vec<(usize, usize)> {
    let mut bits: Vec<bool> = scores.iter().map(|&s| s > 0.0).collect();
    let first = bits.iter().position(|&b| b);
    let last = bits.iter().rposition(|&b| b);
    if let (Some(first), Some(last)) = (first, last) {
        let mut i = first;
        while i < last {
            if bits[i] {
                i += 1;
                continue;
            }
            let run_end = (i..last).find(|&j| bits[j]).unwrap_or(last);
            if run_end - i < ell {
                bits[i..run_end].iter_mut().for_each(|b| *b = true);
            }
            i = run_end;
        }
    }
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i + 1),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, bits.len()));
    }
    out
}

fn interval_jaccard(a: (usize, usize), b: (usize, usize)) -> f64 {
    let inter = overlap(a, b);
    let union = (a.1 - a.0 + 1) + (b.1 - b.0 + 1) - inter;
    inter as f64 / union as f64
}

/// The Base baseline over per-stream burstiness sequences.
///
/// Streams are visited in a shuffled order. Each interval of the next
/// stream merges into the working interval it overlaps best when their
/// Jaccard is at least `delta`; the working interval shrinks to the
/// intersection and gains the stream. Intervals that match nothing join the
/// working set on their own.
pub fn base_baseline(scores: &[Vec<f64>], ell: usize, delta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<RetrievedPattern>> {
    if ell < 1 || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("Base needs ell >= 1 and delta in (0, 1], got {ell}, {delta}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(rng);
    let mut working: Vec<RetrievedPattern> = Vec::new();
    for s in order {
        for iv in base_intervals(&scores[s], ell) {
            let best = working
                .iter()
                .enumerate()
                .map(|(w, p)| (w, interval_jaccard(p.timeframe, iv)))
                .filter(|&(_, j)| j >= delta)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((w, _)) => {
                    let p = &mut working[w];
                    p.timeframe = (p.timeframe.0.max(iv.0), p.timeframe.1.min(iv.1));
                    if let Err(pos) = p.streams.binary_search(&s) {
                        p.streams.insert(pos, s);
                    }
                    p.score = p.streams.len() as f64;
                }
                None => working.push(RetrievedPattern {
                    streams: vec![s],
                    timeframe: iv,
                    score: 1.0,
                }),
            }
        }
    }
    Ok(working)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    StLocal,
    StComb,
    Base,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::StLocal => "STLocal",
            Method::StComb => "STComb",
            Method::Base => "Base",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stlocal" | "local" => Ok(Method::StLocal),
            "stcomb" | "comb" => Ok(Method::StComb),
            "base" => Ok(Method::Base),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Outcome of matching one injected pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub jaccard: f64,
    pub start_error: usize,
    pub end_error: usize,
}

/// Matches a ground-truth pattern against the patterns retrieved for its
/// term: most shared timestamps first, then the closer stream set. With no
/// overlap the nearest pattern in time supplies the errors; with nothing
/// retrieved both errors equal the pattern length.
pub fn match_pattern(streams: &[usize], timeframe: (usize, usize), retrieved: &[RetrievedPattern]) -> PatternMatch {
    let len = timeframe.1 + 1 - timeframe.0;
    let best = retrieved
        .iter()
        .map(|r| (overlap(timeframe, r.timeframe), jaccard_sim(streams, &r.streams), r))
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    match best {
        None => PatternMatch {
            jaccard: 0.0,
            start_error: len,
            end_error: len,
        },
        Some((0, _, _)) => {
            let nearest = retrieved
                .iter()
                .min_by_key(|r| gap(timeframe, r.timeframe))
                .expect("non-empty");
            let (start_error, end_error) = timeframe_errors(timeframe, nearest.timeframe);
            PatternMatch {
                jaccard: 0.0,
                start_error,
                end_error,
            }
        }
        Some((_, jaccard, r)) => {
            let (start_error, end_error) = timeframe_errors(timeframe, r.timeframe);
            PatternMatch {
                jaccard,
                start_error,
                end_error,
            }
        }
    }
}

/// Base parameter grid searched per experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseGrid {
    pub ell: Vec<usize>,
    pub delta: Vec<f64>,
}

impl Default for BaseGrid {
    fn default() -> Self {
        Self {
            ell: vec![1, 2, 4, 8],
            delta: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub modes: Vec<GeneratorMode>,
    pub methods: Vec<Method>,
    pub baseline: BaselineModel,
    pub base_grid: BaseGrid,
    /// Patterns kept per term, as a multiple of the term's injected
    /// pattern count, before matching. `None` matches against everything.
    pub depth: Option<usize>,
    /// Shuffles in STComb's per-stream interval significance test.
    pub null_rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            modes: vec![GeneratorMode::Distgen, GeneratorMode::Randgen],
            methods: vec![Method::StLocal, Method::StComb, Method::Base],
            baseline: BaselineModel::RunningMean,
            base_grid: BaseGrid::default(),
            depth: Some(1),
            null_rounds: 19,
        }
    }
}

/// Averages of one method on one generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub mode: GeneratorMode,
    pub patterns: usize,
    pub jaccard: f64,
    pub start_error: f64,
    pub end_error: f64,
    /// Mining time per term in milliseconds.
    pub ms_per_term: f64,
    /// Chosen `(ell, delta)` for Base.
    pub base_params: Option<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatternMatchReport {
    pub rows: Vec<ReportRow>,
}

impl PatternMatchReport {
    pub fn row(&self, method: Method, mode: GeneratorMode) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.mode == mode)
    }

    /// CSV with one line per (method, generator).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,generator,patterns,jaccard_sim,start_error,end_error,ms_per_term,base_ell,base_delta\n");
        for r in &self.rows {
            let (ell, delta) = r
                .base_params
                .map(|(l, d)| (l.to_string(), d.to_string()))
                .unwrap_or_default();
            let mode = match r.mode {
                GeneratorMode::Distgen => "DISTGEN",
                GeneratorMode::Randgen => "RANDGEN",
            };
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{}\n",
                r.method, mode, r.patterns, r.jaccard, r.start_error, r.end_error, r.ms_per_term, ell, delta
            ));
        }
        out
    }
}

/// Per-term inputs shared by every method.
struct TermInput {
    term: usize,
    matrix: Vec<Vec<u32>>,
}

fn stream_ids(data: &SyntheticData) -> Vec<&str> {
    data.streams.iter().map(|s| s.id.as_str()).collect()
}

/// Patterns mined by STComb for one term. Each stream's intervals go
/// through a `rounds`-shuffle permutation test first; 0 disables it.
pub fn run_stcomb(term: &str, ids: &[&str], matrix: &[Vec<u32>], rounds: usize, rng: &mut ChaCha8Rng) -> Vec<RetrievedPattern> {
    let positions: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut intervals = Vec::new();
    for (s, row) in matrix.iter().enumerate() {
        intervals.extend(significant_intervals(&StreamId::from(ids[s]), row, rounds, rng));
    }
    extract_patterns(term, &intervals, None)
        .into_iter()
        .map(|p| RetrievedPattern {
            streams: p.streams.iter().map(|s| positions[s.as_str()]).collect(),
            timeframe: p.timeframe,
            score: p.score,
        })
        .collect()
}

/// Maximal windows mined by STLocal for one term.
pub fn run_stlocal(
    term: &str,
    ids: &[&str],
    locations: &[GeoPoint],
    matrix: &[Vec<u32>],
    baseline: &BaselineModel,
) -> Result<Vec<RetrievedPattern>> {
    let series: Vec<&[u32]> = matrix.iter().map(|r| &r[..]).collect();
    Ok(mine_term(term, ids, locations, &series, baseline)?
        .windows
        .into_iter()
        .map(|w| RetrievedPattern {
            streams: w.bursty,
            timeframe: w.timeframe,
            score: w.w_score,
        })
        .collect())
}

fn base_scores(term: &str, ids: &[&str], matrix: &[Vec<u32>], baseline: &BaselineModel) -> Result<Vec<Vec<f64>>> {
    matrix
        .iter()
        .zip(ids)
        .map(|(row, id)| burstiness_series(id, term, row, baseline))
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Keeps the `keep` highest-scoring patterns, ties broken by earlier start.
pub fn strongest(mut patterns: Vec<RetrievedPattern>, keep: usize) -> Vec<RetrievedPattern> {
    patterns.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.timeframe.cmp(&b.timeframe)).then(a.streams.cmp(&b.streams)));
    patterns.truncate(keep);
    patterns
}

fn score_matches(
    data: &SyntheticData,
    retrieved: HashMap<usize, Vec<RetrievedPattern>>,
    depth: Option<usize>,
) -> Vec<PatternMatch> {
    let mut injected: HashMap<usize, usize> = HashMap::new();
    for p in &data.truth {
        *injected.entry(data.term_index(&p.term).expect("generated term")).or_default() += 1;
    }
    let retrieved: HashMap<usize, Vec<RetrievedPattern>> = match depth {
        None => retrieved,
        Some(d) => retrieved
            .into_iter()
            .map(|(t, v)| {
                let keep = d * injected.get(&t).copied().unwrap_or(0);
                (t, strongest(v, keep))
            })
            .collect(),
    };
    let positions: HashMap<&str, usize> = stream_ids(data).into_iter().enumerate().map(|(i, s)| (s, i)).collect();
    data.truth
        .iter()
        .map(|p| {
            let term = data.term_index(&p.term).expect("generated term");
            let streams: Vec<usize> = p.streams.iter().map(|s| positions[s.as_str()]).collect();
            let found = retrieved.get(&term).map(|v| &v[..]).unwrap_or(&[]);
            match_pattern(&streams, p.timeframe, found)
        })
        .collect()
}

fn summarize(method: Method, mode: GeneratorMode, matches: &[PatternMatch], ms_per_term: f64) -> ReportRow {
    ReportRow {
        method,
        mode,
        patterns: matches.len(),
        jaccard: mean(matches.iter().map(|m| m.jaccard)),
        start_error: mean(matches.iter().map(|m| m.start_error as f64)),
        end_error: mean(matches.iter().map(|m| m.end_error as f64)),
        ms_per_term,
        base_params: None,
    }
}

/// Runs the selected methods on an already generated dataset. Only terms
/// that received an injected pattern are mined.
pub fn evaluate_dataset(
    data: &SyntheticData,
    methods: &[Method],
    baseline: &BaselineModel,
    grid: &BaseGrid,
    depth: Option<usize>,
    null_rounds: usize,
) -> Result<Vec<ReportRow>> {
    let ids = stream_ids(data);
    let locations = data.locations();
    let inputs: Vec<TermInput> = data
        .pattern_terms()
        .into_par_iter()
        .map(|term| TermInput {
            term,
            matrix: data.term_matrix(term),
        })
        .collect();
    let terms = inputs.len().max(1) as f64;
    let mut rows = Vec::new();
    for &method in methods {
        match method {
            Method::StComb | Method::StLocal => {
                let started = Instant::now();
                let mined = inputs
                    .par_iter()
                    .map(|t| {
                        let name = &data.terms[t.term];
                        let found = match method {
                            Method::StComb => {
                                let mut rng = ChaCha8Rng::seed_from_u64(data.config.seed);
                                rng.set_stream(t.term as u64 + 1);
                                run_stcomb(name, &ids, &t.matrix, null_rounds, &mut rng)
                            }
                            _ => run_stlocal(name, &ids, &locations, &t.matrix, baseline)?,
                        };
                        Ok((t.term, found))
                    })
                    .collect::<Result<HashMap<_, _>>>()?;
                let ms = started.elapsed().as_secs_f64() * 1e3 / terms;
                rows.push(summarize(method, data.mode, &score_matches(data, mined, depth), ms));
            }
            Method::Base => {
                let started = Instant::now();
                let scores = inputs
                    .par_iter()
                    .map(|t| Ok((t.term, base_scores(&data.terms[t.term], &ids, &t.matrix, baseline)?)))
                    .collect::<Result<Vec<_>>>()?;
                let mut best: Option<ReportRow> = None;
                let mut runs = 0usize;
                for &ell in &grid.ell {
                    for &delta in &grid.delta {
                        runs += 1;
                        let mined = scores
                            .par_iter()
                            .map(|(term, s)| {
                                let mut rng = ChaCha8Rng::seed_from_u64(data.config.seed);
                                rng.set_stream(*term as u64 + 1);
                                Ok((*term, base_baseline(s, ell, delta, &mut rng)?))
                            })
                            .collect::<Result<HashMap<_, _>>>()?;
                        let mut row = summarize(method, data.mode, &score_matches(data, mined, depth), 0.0);
                        row.base_params = Some((ell, delta));
                        if best.as_ref().is_none_or(|b| row.jaccard > b.jaccard) {
                            best = Some(row);
                        }
                    }
                }
                let ms = started.elapsed().as_secs_f64() * 1e3 / terms / runs.max(1) as f64;
                if let Some(mut row) = best {
                    row.ms_per_term = ms;
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Generates one dataset per mode and evaluates every method on each.
pub fn run_experiment(config: &ExperimentConfig) -> Result<PatternMatchReport> {
    let mut rows = Vec::new();
    for &mode in &config.modes {
        let data = generate(&config.generator, mode)?;
        if data.truth.is_empty() {
            continue;
        }
        rows.extend(evaluate_dataset(&data, &config.methods, &config.baseline, &config.base_grid, config.depth, config.null_rounds)?);
    }
    Ok(PatternMatchReport { rows })
}
