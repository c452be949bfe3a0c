//! Online regional pattern mining.
//!
//! For each term a [`TermTracker`] consumes one snapshot per timestamp. Every
//! bursty rectangle of the snapshot opens a region sequence unless the same
//! set of streams is already tracked. Every tracked sequence then records
//! its region's score at the new timestamp, and an incremental maximal
//! segment engine turns each sequence into maximal spatiotemporal windows.
//! A sequence whose running total drops below zero can no longer contribute
//! a prefix to any maximal segment, so it is retired together with the
//! windows it has produced.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::GeoPoint;
use crate::error::{Error, Result};
use crate::maxseg::{MaxSegState, ScoredSegment};
use crate::spatial::{r_bursty_weighted, BaselineModel, Bounds, WeightedPoint};

/// Identity of a tracked region: its sorted, deduplicated member streams.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionKey(Vec<usize>);

impl RegionKey {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidParameter("region key needs a member".into()));
        }
        Ok(RegionKey(members))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct RegionSequence {
    pub key: RegionKey,
    /// Bounds of the rectangle that spawned the sequence.
    pub bounds: Bounds,
    pub birth: usize,
    pub scores: Vec<f64>,
    pub total: f64,
    engine: MaxSegState,
}

impl RegionSequence {
    fn window(&self, term: &str, seg: ScoredSegment, prefix: &[Vec<usize>]) -> SpatiotemporalWindow {
        let (a, b) = (self.birth + seg.start - 1, self.birth + seg.end - 1);
        let bursty = self
            .key
            .0
            .iter()
            .copied()
            .filter(|&m| 2 * (prefix[m][b] - prefix[m][a - 1]) > b + 1 - a)
            .collect();
        SpatiotemporalWindow {
            term: term.to_owned(),
            region: self.key.clone(),
            bounds: self.bounds,
            timeframe: (a, b),
            w_score: seg.score,
            bursty,
        }
    }

    fn windows<'a>(&'a self, term: &'a str, prefix: &'a [Vec<usize>]) -> impl Iterator<Item = SpatiotemporalWindow> + 'a {
        self.engine.segments().map(move |s| self.window(term, s, prefix))
    }
}

/// A region over a timeframe `[a, b]`, scored by the sum of the region's
/// per-timestamp scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatiotemporalWindow {
    pub term: String,
    pub region: RegionKey,
    pub bounds: Bounds,
    pub timeframe: (usize, usize),
    pub w_score: f64,
    /// Region members that were bursty at more than half of the window's
    /// timestamps. The rest are non-bursty streams the rectangle had to
    /// cover.
    pub bursty: Vec<usize>,
}

/// Sum of `history[a..=b]` (1-based, relative to the start of the history).
pub fn w_score(history: &[f64], a: usize, b: usize) -> Result<f64> {
    if a < 1 || a > b || b > history.len() {
        return Err(Error::RangeOutOfBounds {
            l: a,
            r: b,
            len: history.len(),
        });
    }
    Ok(history[a - 1..b].iter().sum())
}

/// Bookkeeping counters recorded after each snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub timestamp: usize,
    pub rectangles: usize,
    pub spawned: usize,
    pub live_sequences: usize,
    pub live_windows: usize,
    pub retired: usize,
}

/// Single-writer STLocal state for one term.
#[derive(Debug, Clone)]
pub struct TermTracker {
    term: String,
    stream_count: usize,
    last: Option<usize>,
    prune: bool,
    sequences: Vec<RegionSequence>,
    tracked: HashSet<RegionKey>,
    retired: Vec<SpatiotemporalWindow>,
    /// Per-stream running count of bursty timestamps, indexed by timestamp.
    prefix: Vec<Vec<usize>>,
}

impl TermTracker {
    pub fn new(term: impl Into<String>, stream_count: usize) -> Self {
        Self {
            term: term.into(),
            stream_count,
            last: None,
            prune: true,
            sequences: Vec::new(),
            tracked: HashSet::new(),
            retired: Vec::new(),
            prefix: vec![vec![0]; stream_count],
        }
    }

    /// Keeps every sequence forever. Only useful as a reference for
    /// checking that pruning never changes the mined windows.
    pub fn without_pruning(mut self) -> Self {
        self.prune = false;
        self
    }

    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn sequences(&self) -> &[RegionSequence] {
        &self.sequences
    }

    /// Consumes the burstiness values of every stream at `timestamp`.
    /// `points` is indexed by stream and timestamps must strictly increase.
    pub fn process_snapshot(&mut self, timestamp: usize, points: &[WeightedPoint]) -> Result<SnapshotStats> {
        if points.len() != self.stream_count {
            return Err(Error::SnapshotSizeMismatch {
                expected: self.stream_count,
                got: points.len(),
            });
        }
        let last = self.last.unwrap_or(0);
        if timestamp <= last {
            return Err(Error::OutOfOrderSnapshot { last, got: timestamp });
        }
        self.last = Some(timestamp);
        for (p, pt) in self.prefix.iter_mut().zip(points) {
            let last = *p.last().expect("seeded with zero");
            p.resize(timestamp, last);
            p.push(last + usize::from(pt.weight > 0.0));
        }

        let rectangles = r_bursty_weighted(points);
        let mut spawned = 0;
        for rect in &rectangles {
            let key = RegionKey(rect.members.clone());
            if self.tracked.insert(key.clone()) {
                spawned += 1;
                self.sequences.push(RegionSequence {
                    key,
                    bounds: rect.bounds,
                    birth: timestamp,
                    scores: Vec::new(),
                    total: 0.0,
                    engine: MaxSegState::new(),
                });
            }
        }

        for seq in &mut self.sequences {
            // Any gap since the last snapshot is scored as zero.
            let expected_len = timestamp - seq.birth;
            while seq.scores.len() < expected_len {
                seq.scores.push(0.0);
                seq.engine.push(0.0);
            }
            let score: f64 = seq.key.0.iter().map(|&m| points[m].weight).sum();
            seq.scores.push(score);
            seq.total += score;
            seq.engine.push(score);
        }

        let mut retired = 0;
        if self.prune {
            let (dead, live): (Vec<_>, Vec<_>) = std::mem::take(&mut self.sequences)
                .into_iter()
                .partition(|s| s.total < 0.0);
            self.sequences = live;
            for seq in dead {
                self.tracked.remove(&seq.key);
                self.retired.extend(seq.windows(&self.term, &self.prefix));
                retired += 1;
            }
        }

        Ok(SnapshotStats {
            timestamp,
            rectangles: rectangles.len(),
            spawned,
            live_sequences: self.sequences.len(),
            live_windows: self.sequences.iter().map(|s| s.engine.candidate_count()).sum(),
            retired,
        })
    }

    /// Retired windows plus the live maximal segments of every tracked
    /// sequence, best first.
    pub fn maximal_windows(&self) -> Vec<SpatiotemporalWindow> {
        let mut out = self.retired.clone();
        for seq in &self.sequences {
            out.extend(seq.windows(&self.term, &self.prefix));
        }
        out.sort_by(|a, b| {
            b.w_score
                .total_cmp(&a.w_score)
                .then(a.timeframe.cmp(&b.timeframe))
                .then_with(|| a.region.cmp(&b.region))
        });
        out
    }
}

/// Output of a full STLocal pass over one term.
#[derive(Debug, Clone)]
pub struct RegionalRun {
    pub windows: Vec<SpatiotemporalWindow>,
    pub stats: Vec<SnapshotStats>,
    /// Wall time of each snapshot update.
    pub elapsed: Vec<Duration>,
}

/// Runs STLocal for one term over a whole timeline.
///
/// `series[s]` holds the observed frequencies of the term in stream `s`;
/// the baseline turns them into per-snapshot burstiness values.
pub fn mine_term<T: Copy + Into<f64>>(
    term: &str,
    stream_ids: &[&str],
    locations: &[GeoPoint],
    series: &[&[T]],
    baseline: &BaselineModel,
) -> Result<RegionalRun> {
    let n = locations.len();
    if series.len() != n || stream_ids.len() != n {
        return Err(Error::SnapshotSizeMismatch {
            expected: n,
            got: series.len(),
        });
    }
    let timeline = series.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut trackers: Vec<_> = (0..n).map(|_| baseline.tracker()).collect();
    let mut tracker = TermTracker::new(term, n);
    let mut stats = Vec::with_capacity(timeline);
    let mut elapsed = Vec::with_capacity(timeline);
    let mut points: Vec<WeightedPoint> = locations
        .iter()
        .map(|&location| WeightedPoint { location, weight: 0.0 })
        .collect();
    for i in 1..=timeline {
        for s in 0..n {
            let observed: f64 = series[s].get(i - 1).map(|&v| v.into()).unwrap_or(0.0);
            let expected = match baseline {
                BaselineModel::External(table) => table.get(stream_ids[s], term, i)?,
                _ => trackers[s].expected(observed),
            };
            trackers[s].observe(observed);
            points[s].weight = observed - expected;
        }
        let started = Instant::now();
        stats.push(tracker.process_snapshot(i, &points)?);
        elapsed.push(started.elapsed());
    }
    Ok(RegionalRun {
        windows: tracker.maximal_windows(),
        stats,
        elapsed,
    })
}
