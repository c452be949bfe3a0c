//! Synthetic corpora with injected spatiotemporal patterns.
//!
//! Every (stream, term, timestamp) cell starts from an exponential
//! background draw. Each injected pattern picks a term, a timeframe and a
//! set of streams, and adds a peak-normalised Weibull curve to the member
//! streams over the timeframe. DISTGEN grows the stream set around a random
//! seed stream with a probability that decays with distance; RANDGEN picks
//! streams uniformly.
//!
//! Background values are regenerated on demand from a per-term sub-seed,
//! so a term's frequency matrix can be produced without holding the whole
//! cube in memory.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GeoPoint, StreamId, StreamMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    Distgen,
    Randgen,
}

impl FromStr for GeneratorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distgen" => Ok(Self::Distgen),
            "randgen" => Ok(Self::Randgen),
            other => Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        }
    }
}

/// How DISTGEN turns distance from the seed stream into an inclusion
/// probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceRule {
    /// `exp(-d / tau)`.
    #[default]
    Decaying,
    /// `d / d_max`: far streams are more likely.
    Proportional,
}

/// How a continuous background draw becomes a count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Nearest integer.
    #[default]
    Nearest,
    /// Floor plus a coin flip weighted by the fractional part, which keeps
    /// the mean of the counts equal to the mean of the draws.
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub timeline: usize,
    pub streams: usize,
    pub terms: usize,
    pub patterns: usize,
    /// Rate of the exponential background; its mean is `1 / rate`.
    pub background_rate: f64,
    pub rounding: Rounding,
    /// Weibull shape `k`, sampled uniformly per member stream.
    pub shape: (f64, f64),
    /// Weibull scale `c`, sampled uniformly per member stream. When
    /// `relative_scale` is set it is a fraction of the pattern length.
    pub scale: (f64, f64),
    pub relative_scale: bool,
    /// Peak value `v` of each burst curve.
    pub peak: (f64, f64),
    /// DISTGEN decay length. `None` uses the median pairwise distance.
    pub tau: Option<f64>,
    /// Multiplier applied to the decay length.
    pub tau_scale: f64,
    pub distance_rule: DistanceRule,
    /// Streams are placed uniformly in a square of this side.
    pub extent: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            timeline: 365,
            streams: 100,
            terms: 1000,
            patterns: 100,
            background_rate: 1.0,
            rounding: Rounding::Nearest,
            shape: (1.5, 4.0),
            scale: (0.3, 0.7),
            relative_scale: true,
            peak: (5.0, 15.0),
            tau: None,
            tau_scale: 1.0,
            distance_rule: DistanceRule::Decaying,
            extent: 100.0,
            seed: 0,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), positive: bool) -> Result<()> {
    let ok = lo.is_finite() && hi.is_finite() && lo <= hi && if positive { lo > 0.0 } else { lo >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("invalid {name} range [{lo}, {hi}]")))
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeline < 1 {
            return Err(Error::InvalidParameter("timeline must be at least 1".into()));
        }
        if self.streams < 1 {
            return Err(Error::EmptyStreamSet);
        }
        if self.patterns > 0 && self.terms < 1 {
            return Err(Error::InvalidParameter("patterns need at least one term".into()));
        }
        if !(self.background_rate > 0.0 && self.background_rate.is_finite()) {
            return Err(Error::InvalidParameter("background rate must be positive".into()));
        }
        check_range("shape", self.shape, true)?;
        check_range("scale", self.scale, true)?;
        check_range("peak", self.peak, false)?;
        if self.tau.is_some_and(|t| !(t >= 0.0)) || !(self.tau_scale >= 0.0) {
            return Err(Error::InvalidParameter("tau must be nonnegative".into()));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidParameter("extent must be positive".into()));
        }
        Ok(())
    }
}

/// Weibull density with scale `c` and shape `k`.
pub fn weibull_pdf(x: f64, c: f64, k: f64) -> Result<f64> {
    if !(c > 0.0) || !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("weibull needs c > 0 and k > 0, got c={c}, k={k}")));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let u = x / c;
    Ok(k / c * u.powf(k - 1.0) * (-u.powf(k)).exp())
}

/// Weibull density sampled at `1..=len`, rescaled so that its maximum is `peak`.
pub fn burst_curve(len: usize, c: f64, k: f64, peak: f64) -> Result<Vec<f64>> {
    if len < 1 {
        return Err(Error::InvalidParameter("burst length must be at least 1".into()));
    }
    if !(peak >= 0.0) || !peak.is_finite() {
        return Err(Error::InvalidParameter(format!("peak must be nonnegative, got {peak}")));
    }
    let raw = (1..=len).map(|x| weibull_pdf(x as f64, c, k)).collect::<Result<Vec<_>>>()?;
    if peak == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let m = raw.iter().copied().fold(0.0, f64::max);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("degenerate burst curve for c={c}, k={k}")));
    }
    let factor = peak / m;
    Ok(raw.into_iter().map(|y| if y == m { peak } else { y * factor }).collect())
}

/// Median of all pairwise distances; 0 for fewer than two points.
pub fn median_pairwise_distance(points: &[GeoPoint]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d.push(a.distance(b));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Parameters of stream selection that do not change between patterns.
#[derive(Debug, Clone, Copy)]
pub struct Selection {
    pub mode: GeneratorMode,
    pub tau: f64,
    pub rule: DistanceRule,
}

/// DISTGEN membership around a given seed stream: every other stream joins
/// independently with a probability set by its distance to the seed.
pub fn grow_from<R: Rng + ?Sized>(selection: &Selection, locations: &[GeoPoint], seed: usize, rng: &mut R) -> Vec<usize> {
    let origin = locations[seed];
    let d_max = locations.iter().map(|p| p.distance(&origin)).fold(0.0, f64::max);
    let mut chosen = vec![seed];
    for (i, p) in locations.iter().enumerate() {
        if i == seed {
            continue;
        }
        let d = p.distance(&origin);
        let prob = match selection.rule {
            DistanceRule::Decaying if selection.tau > 0.0 => (-d / selection.tau).exp(),
            DistanceRule::Decaying => 0.0,
            DistanceRule::Proportional if d_max > 0.0 => d / d_max,
            DistanceRule::Proportional => 0.0,
        };
        if rng.random::<f64>() < prob {
            chosen.push(i);
        }
    }
    chosen
}

/// Sorted stream indices of one pattern.
pub fn select_streams<R: Rng + ?Sized>(selection: &Selection, locations: &[GeoPoint], rng: &mut R) -> Result<Vec<usize>> {
    let n = locations.len();
    if n == 0 {
        return Err(Error::EmptyStreamSet);
    }
    let mut chosen = match selection.mode {
        GeneratorMode::Randgen => {
            let count = rng.random_range(1..=n);
            sample(rng, n, count).into_vec()
        }
        GeneratorMode::Distgen => {
            let seed = rng.random_range(0..n);
            grow_from(selection, locations, seed, rng)
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamBurst {
    pub stream: StreamId,
    pub c: f64,
    pub k: f64,
    pub v: f64,
}

/// Ground truth for one injected pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedPattern {
    pub term: String,
    pub timeframe: (usize, usize),
    pub streams: Vec<StreamId>,
    pub bursts: Vec<StreamBurst>,
}

impl InjectedPattern {
    pub fn len(&self) -> usize {
        self.timeframe.1 + 1 - self.timeframe.0
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A generated corpus. Frequencies are produced per term on request.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub config: GeneratorConfig,
    pub mode: GeneratorMode,
    pub streams: Vec<StreamMeta>,
    pub terms: Vec<String>,
    pub truth: Vec<InjectedPattern>,
    /// Pattern positions in `truth`, per term index.
    by_term: HashMap<usize, Vec<usize>>,
    /// Burst curves per pattern, aligned with each pattern's streams.
    curves: Vec<Vec<(usize, Vec<f64>)>>,
}

pub fn stream_name(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).max(1).to_string().len();
    format!("s{i:0width$}")
}

pub fn term_name(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).max(1).to_string().len();
    format!("t{i:0width$}")
}

pub fn generate(config: &GeneratorConfig, mode: GeneratorMode) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.streams;
    let locations: Vec<GeoPoint> = (0..n)
        .map(|_| GeoPoint::new(rng.random::<f64>() * config.extent, rng.random::<f64>() * config.extent))
        .collect();
    let streams: Vec<StreamMeta> = locations
        .iter()
        .enumerate()
        .map(|(i, &p)| StreamMeta::new(stream_name(i, n), p))
        .collect();
    let terms: Vec<String> = (0..config.terms).map(|i| term_name(i, config.terms)).collect();
    let tau = match (mode, config.tau) {
        (GeneratorMode::Distgen, None) => median_pairwise_distance(&locations),
        (_, Some(t)) => t,
        _ => 0.0,
    } * config.tau_scale;
    let selection = Selection {
        mode,
        tau,
        rule: config.distance_rule,
    };
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..=hi) };

    let mut truth = Vec::with_capacity(config.patterns);
    let mut curves = Vec::with_capacity(config.patterns);
    let mut by_term: HashMap<usize, Vec<usize>> = HashMap::new();
    for p in 0..config.patterns {
        let term = rng.random_range(0..config.terms);
        let a = rng.random_range(1..=config.timeline);
        let b = rng.random_range(1..=config.timeline);
        let (start, end) = (a.min(b), a.max(b));
        let len = end + 1 - start;
        let members = select_streams(&selection, &locations, &mut rng)?;
        let mut bursts = Vec::with_capacity(members.len());
        let mut pattern_curves = Vec::with_capacity(members.len());
        for &s in &members {
            let k = uniform(&mut rng, config.shape);
            let mut c = uniform(&mut rng, config.scale);
            if config.relative_scale {
                c *= len as f64;
            }
            let v = uniform(&mut rng, config.peak);
            pattern_curves.push((s, burst_curve(len, c, k, v)?));
            bursts.push(StreamBurst {
                stream: streams[s].id.clone(),
                c,
                k,
                v,
            });
        }
        truth.push(InjectedPattern {
            term: terms[term].clone(),
            timeframe: (start, end),
            streams: members.iter().map(|&s| streams[s].id.clone()).collect(),
            bursts,
        });
        curves.push(pattern_curves);
        by_term.entry(term).or_default().push(p);
    }
    Ok(SyntheticData {
        config: config.clone(),
        mode,
        streams,
        terms,
        truth,
        by_term,
        curves,
    })
}

impl SyntheticData {
    pub fn locations(&self) -> Vec<GeoPoint> {
        self.streams.iter().map(|s| s.location).collect()
    }

    /// Term indices that received at least one pattern, ascending.
    pub fn pattern_terms(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.by_term.keys().copied().collect();
        t.sort_unstable();
        t
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Frequencies of one term: `matrix[stream][t - 1]`.
    pub fn term_matrix(&self, term: usize) -> Vec<Vec<u32>> {
        let mut matrix = self.background(term as u64 + 1);
        for &p in self.by_term.get(&term).into_iter().flatten() {
            let start = self.truth[p].timeframe.0;
            for (s, curve) in &self.curves[p] {
                for (j, y) in curve.iter().enumerate() {
                    matrix[*s][start - 1 + j] += y.round() as u32;
                }
            }
        }
        matrix
    }

    /// The term's frequencies before any burst was added.
    pub fn background_matrix(&self, term: usize) -> Vec<Vec<u32>> {
        self.background(term as u64 + 1)
    }

    fn background(&self, stream: u64) -> Vec<Vec<u32>> {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let exp = Exp::new(cfg.background_rate).expect("validated rate");
        (0..cfg.streams)
            .map(|_| {
                (0..cfg.timeline)
                    .map(|_| {
                        let x: f64 = exp.sample(&mut rng);
                        match cfg.rounding {
                            Rounding::Nearest => x.round() as u32,
                            Rounding::Stochastic => {
                                let floor = x.floor();
                                floor as u32 + u32::from(rng.random::<f64>() < x - floor)
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Nonzero cells `(stream, timestamp, term, count)` of the given terms.
    pub fn cells(&self, terms: &[usize]) -> Vec<(usize, usize, String, u32)> {
        let mut out = Vec::new();
        for &t in terms {
            for (s, row) in self.term_matrix(t).into_iter().enumerate() {
                for (i, &c) in row.iter().enumerate() {
                    if c > 0 {
                        out.push((s, i + 1, self.terms[t].clone(), c));
                    }
                }
            }
        }
        out
    }

    /// Wraps the frequencies of the given terms as a document corpus.
    pub fn to_corpus(&self, terms: &[usize]) -> Result<Corpus> {
        Corpus::from_counts(self.streams.clone(), self.config.timeline, self.cells(terms))
    }
}
