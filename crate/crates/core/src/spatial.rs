//! Per-snapshot spatial discrepancy.
//!
//! Each stream gets a burstiness value for the term at the current
//! timestamp (observed minus expected frequency). A rectangle scores the sum
//! of the values of the streams inside it. [`max_rectangle`] finds the best
//! axis-oriented rectangle exactly and [`r_bursty`] peels off bursty
//! rectangles one at a time, excluding already reported streams.
//!
//! The rectangle search only needs grid lines through positive points: an
//! optimal rectangle can always be shrunk until every edge touches a
//! positive point without lowering its score. Points are bucketed into a
//! `(2p+1) x (2p+1)` slot grid (odd slots sit exactly on a positive
//! coordinate, even slots hold the gaps between them) and every pair of
//! positive rows is swept with a max-subarray segment tree over columns.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::corpus::{GeoPoint, StreamId};
use crate::error::{Error, Result};

/// Caller-supplied expected frequencies, keyed by (stream, term, timestamp).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalTable {
    values: HashMap<(String, String, usize), f64>,
}

impl ExternalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, stream: &str, term: &str, timestamp: usize, expected: f64) {
        self.values
            .insert((stream.to_owned(), term.to_owned(), timestamp), expected);
    }

    pub fn get(&self, stream: &str, term: &str, timestamp: usize) -> Result<f64> {
        self.values
            .get(&(stream.to_owned(), term.to_owned(), timestamp))
            .copied()
            .ok_or_else(|| Error::MissingBaseline {
                stream: stream.to_owned(),
                term: term.to_owned(),
                timestamp,
            })
    }
}

/// How the expected frequency of a term in a stream is derived.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BaselineModel {
    /// Mean of every earlier observation.
    #[default]
    RunningMean,
    /// Mean of the last `w` earlier observations.
    WindowMean(usize),
    /// Lookup into a seasonal or otherwise precomputed table.
    External(ExternalTable),
}

impl BaselineModel {
    /// Expected frequency at timestamp `i` (1-based) given the stream's
    /// observations. `history` must cover timestamps `1..i`; at `i = 1` the
    /// observation at `i` itself is returned, so the first snapshot carries
    /// no burst.
    pub fn expected_frequency<T: Copy + Into<f64>>(
        &self,
        stream: &str,
        term: &str,
        history: &[T],
        i: usize,
    ) -> Result<f64> {
        if i == 0 {
            return Err(Error::InvalidParameter("timestamps start at 1".into()));
        }
        let prior = |w: usize| -> Result<f64> {
            if history.len() < i - 1 {
                return Err(Error::RangeOutOfBounds {
                    l: 1,
                    r: i - 1,
                    len: history.len(),
                });
            }
            if i == 1 {
                return history
                    .first()
                    .map(|&v| v.into())
                    .ok_or(Error::RangeOutOfBounds { l: 1, r: 1, len: 0 });
            }
            let start = (i - 1).saturating_sub(w);
            let window = &history[start..i - 1];
            Ok(window.iter().map(|&v| v.into()).sum::<f64>() / window.len() as f64)
        };
        match self {
            BaselineModel::RunningMean => prior(usize::MAX),
            BaselineModel::WindowMean(w) => prior((*w).max(1)),
            BaselineModel::External(table) => table.get(stream, term, i),
        }
    }

    /// Fresh incremental tracker for one (stream, term) pair.
    pub fn tracker(&self) -> BaselineTracker {
        match self {
            BaselineModel::RunningMean => BaselineTracker::Running { sum: 0.0, count: 0 },
            BaselineModel::WindowMean(w) => BaselineTracker::Window {
                width: (*w).max(1),
                recent: VecDeque::new(),
            },
            BaselineModel::External(_) => BaselineTracker::External,
        }
    }
}

/// Sufficient statistics for one (stream, term) pair, updated once per
/// timestamp by a single writer.
#[derive(Debug, Clone)]
pub enum BaselineTracker {
    Running { sum: f64, count: usize },
    Window { width: usize, recent: VecDeque<f64> },
    External,
}

impl BaselineTracker {
    /// Expected value for the next timestamp, before `observed` is recorded.
    pub fn expected(&self, observed: f64) -> f64 {
        match self {
            BaselineTracker::Running { sum, count } => {
                if *count == 0 {
                    observed
                } else {
                    sum / *count as f64
                }
            }
            BaselineTracker::Window { recent, .. } => {
                if recent.is_empty() {
                    observed
                } else {
                    recent.iter().sum::<f64>() / recent.len() as f64
                }
            }
            BaselineTracker::External => observed,
        }
    }

    pub fn observe(&mut self, observed: f64) {
        match self {
            BaselineTracker::Running { sum, count } => {
                *sum += observed;
                *count += 1;
            }
            BaselineTracker::Window { width, recent } => {
                if recent.len() == *width {
                    recent.pop_front();
                }
                recent.push_back(observed);
            }
            BaselineTracker::External => {}
        }
    }
}

/// Burstiness of a stream at one timestamp: observed minus expected.
pub fn stream_burstiness(observed: f64, expected: f64) -> f64 {
    observed - expected
}

/// Per-timestamp burstiness of one stream for one term.
pub fn burstiness_series<T: Copy + Into<f64>>(
    stream: &str,
    term: &str,
    series: &[T],
    baseline: &BaselineModel,
) -> Result<Vec<f64>> {
    let mut tracker = baseline.tracker();
    let mut out = Vec::with_capacity(series.len());
    for (i, &v) in series.iter().enumerate() {
        let observed: f64 = v.into();
        let expected = match baseline {
            BaselineModel::External(table) => table.get(stream, term, i + 1)?,
            _ => tracker.expected(observed),
        };
        tracker.observe(observed);
        out.push(stream_burstiness(observed, expected));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamScore {
    pub stream: StreamId,
    pub location: GeoPoint,
    pub value: f64,
}

/// Sum of member burstiness values; zero for an empty rectangle.
pub fn r_score(members: &[StreamScore]) -> f64 {
    members.iter().map(|m| m.value).sum()
}

/// Closed axis-aligned bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Bounds> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Bounds {
            x_min: first.x,
            x_max: first.x,
            y_min: first.y,
            y_max: first.y,
        };
        for p in it {
            b.x_min = b.x_min.min(p.x);
            b.x_max = b.x_max.max(p.x);
            b.y_min = b.y_min.min(p.y);
            b.y_max = b.y_max.max(p.y);
        }
        Some(b)
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        self.x_min <= p.x && p.x <= self.x_max && self.y_min <= p.y && p.y <= self.y_max
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.x_max, self.y_min, self.y_max]
    }
}

/// A scored rectangle over one snapshot. Member and flag lists hold indices
/// into the scored point slice, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RScoredRectangle {
    pub bounds: Bounds,
    pub members: Vec<usize>,
    pub r_score: f64,
    /// Members whose own burstiness is not positive.
    pub nonbursty: Vec<usize>,
}

/// Location and burstiness of one stream; the miner's working form of
/// [`StreamScore`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub location: GeoPoint,
    pub weight: f64,
}

impl From<&StreamScore> for WeightedPoint {
    fn from(s: &StreamScore) -> Self {
        WeightedPoint {
            location: s.location,
            weight: s.value,
        }
    }
}

/// Best axis-oriented rectangle over `points`.
///
/// With `positive_only` the result is `None` unless the best score is
/// strictly positive. Ties prefer fewer members, then smaller area, then the
/// lexicographically smaller member list.
pub fn max_rectangle(points: &[StreamScore], positive_only: bool) -> Option<RScoredRectangle> {
    let weighted: Vec<WeightedPoint> = points.iter().map(WeightedPoint::from).collect();
    let search = RectangleSearch::new(&weighted);
    let masked = vec![false; weighted.len()];
    let mut tree = SubarrayTree::new(search.cols);
    let strips = (0..search.positive_rows.len()).filter_map(|bi| search.strip(bi, &masked, &mut tree));
    match search.pick(strips, &masked) {
        Some(best) => Some(search.materialise(&best, &masked)),
        None if positive_only => None,
        None => best_single_point(&weighted, &masked),
    }
}

/// Bursty rectangles of one snapshot: repeatedly take the best rectangle,
/// report it, and exclude its streams from every later rectangle, until the
/// best remaining score is not positive. Member sets are pairwise disjoint
/// and at most `points.len()` rectangles are produced.
pub fn r_bursty(points: &[StreamScore]) -> Vec<RScoredRectangle> {
    let weighted: Vec<WeightedPoint> = points.iter().map(WeightedPoint::from).collect();
    r_bursty_weighted(&weighted)
}

pub fn r_bursty_weighted(points: &[WeightedPoint]) -> Vec<RScoredRectangle> {
    let search = RectangleSearch::new(points);
    let mut masked = vec![false; points.len()];
    let mut tree = SubarrayTree::new(search.cols);
    // Best rectangle per bottom row. Masking only lowers scores, so a
    // strip's best stays optimal until one of its own points is masked.
    let mut strips: Vec<Option<Candidate>> = (0..search.positive_rows.len())
        .map(|bi| search.strip(bi, &masked, &mut tree))
        .collect();
    let mut out = Vec::new();
    while let Some(best) = search.pick(strips.iter().flatten().copied(), &masked) {
        let hit = search.materialise(&best, &masked);
        for &m in &hit.members {
            masked[m] = true;
        }
        for (bi, strip) in strips.iter_mut().enumerate() {
            if strip.is_some_and(|c| hit.members.iter().any(|&m| search.covers(&c, m))) {
                *strip = search.strip(bi, &masked, &mut tree);
            }
        }
        out.push(hit);
    }
    out
}

fn best_single_point(points: &[WeightedPoint], masked: &[bool]) -> Option<RScoredRectangle> {
    // Without a positive rectangle the best one covers a single location,
    // and a closed rectangle cannot separate streams sharing that location.
    let mut best: Option<(Vec<usize>, f64)> = None;
    for i in (0..points.len()).filter(|&i| !masked[i]) {
        let members: Vec<usize> = (0..points.len())
            .filter(|&j| !masked[j] && points[j].location == points[i].location)
            .collect();
        if members[0] != i {
            continue;
        }
        let score: f64 = members.iter().map(|&j| points[j].weight).sum();
        let better = match &best {
            None => true,
            Some((m, s)) => score > *s || (score == *s && members.len() < m.len()),
        };
        if better {
            best = Some((members, score));
        }
    }
    let (members, r_score) = best?;
    let p = points[members[0]];
    Some(RScoredRectangle {
        bounds: Bounds::of_points([&p.location]).expect("one point"),
        nonbursty: members.iter().copied().filter(|&j| !(points[j].weight > 0.0)).collect(),
        members,
        r_score,
    })
}

/// Slot grid over the positive points of one snapshot. Built once and
/// reused across the iterations of [`r_bursty`]: masking only lowers cell
/// values, so the grid stays a valid refinement.
struct RectangleSearch<'a> {
    points: &'a [WeightedPoint],
    cols: usize,
    // rows[r] = (column slot, point index) for every point in slot row r
    rows: Vec<Vec<(usize, usize)>>,
    // (row slot, column slot) of every point
    slots: Vec<(usize, usize)>,
    positive_rows: Vec<usize>,
}

fn slot_of(sorted: &[f64], v: f64) -> usize {
    let idx = sorted.partition_point(|&c| c < v);
    if idx < sorted.len() && sorted[idx] == v {
        2 * idx + 1
    } else {
        2 * idx
    }
}

impl<'a> RectangleSearch<'a> {
    fn new(points: &'a [WeightedPoint]) -> Self {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for p in points.iter().filter(|p| p.weight > 0.0) {
            xs.push(p.location.x);
            ys.push(p.location.y);
        }
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let cols = 2 * xs.len() + 1;
        let mut rows = vec![Vec::new(); 2 * ys.len() + 1];
        let mut slots = Vec::new();
        if !xs.is_empty() {
            for (i, p) in points.iter().enumerate() {
                let r = slot_of(&ys, p.location.y);
                let c = slot_of(&xs, p.location.x);
                rows[r].push((c, i));
                slots.push((r, c));
            }
        }
        let positive_rows = (0..ys.len()).map(|k| 2 * k + 1).collect();
        Self {
            points,
            cols,
            rows,
            slots,
            positive_rows,
        }
    }

    /// Best positive rectangle whose bottom edge is the `bi`-th positive row.
    fn strip(&self, bi: usize, masked: &[bool], tree: &mut SubarrayTree) -> Option<Candidate> {
        let bottom = self.positive_rows[bi];
        tree.reset();
        let mut best: Option<Candidate> = None;
        let mut tops = self.positive_rows[bi..].iter().peekable();
        for row in bottom..self.rows.len() {
            for &(col, idx) in &self.rows[row] {
                if masked[idx] {
                    tree.add(col, Val::BLOCKED);
                } else {
                    tree.add(col, Val::point(self.points[idx].weight));
                }
            }
            if tops.peek() == Some(&&row) {
                tops.next();
                let (val, lo, hi) = tree.best();
                if val.sum > 0.0 {
                    let cand = Candidate {
                        val,
                        rows: (bottom, row),
                        cols: (lo, hi),
                    };
                    best = self.pick([best, Some(cand)].into_iter().flatten(), masked);
                }
            }
            if tops.peek().is_none() {
                break;
            }
        }
        best
    }

    fn pick(&self, candidates: impl IntoIterator<Item = Candidate>, masked: &[bool]) -> Option<Candidate> {
        candidates.into_iter().reduce(|cur, cand| self.prefer(cur, cand, masked))
    }

    fn covers(&self, cand: &Candidate, point: usize) -> bool {
        let (r, c) = self.slots[point];
        cand.rows.0 <= r && r <= cand.rows.1 && cand.cols.0 <= c && c <= cand.cols.1
    }

    fn prefer(&self, cur: Candidate, cand: Candidate, masked: &[bool]) -> Candidate {
        match cand.val.cmp_quality(&cur.val) {
            Ordering::Greater => cand,
            Ordering::Less => cur,
            Ordering::Equal => {
                let a = self.materialise(&cur, masked);
                let b = self.materialise(&cand, masked);
                let by_area = b.bounds.area().total_cmp(&a.bounds.area());
                if by_area == Ordering::Less || (by_area == Ordering::Equal && b.members < a.members) {
                    cand
                } else {
                    cur
                }
            }
        }
    }

    fn materialise(&self, cand: &Candidate, masked: &[bool]) -> RScoredRectangle {
        let mut members: Vec<usize> = self.rows[cand.rows.0..=cand.rows.1]
            .iter()
            .flatten()
            .filter(|&&(col, idx)| cand.cols.0 <= col && col <= cand.cols.1 && !masked[idx])
            .map(|&(_, idx)| idx)
            .collect();
        members.sort_unstable();
        let bounds = Bounds::of_points(members.iter().map(|&i| &self.points[i].location))
            .expect("positive rectangle has members");
        let r_score = members.iter().map(|&i| self.points[i].weight).sum();
        let nonbursty = members
            .iter()
            .copied()
            .filter(|&i| !(self.points[i].weight > 0.0))
            .collect();
        RScoredRectangle {
            bounds,
            members,
            r_score,
            nonbursty,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    val: Val,
    rows: (usize, usize),
    cols: (usize, usize),
}

/// Score paired with member count, ordered by higher score then fewer
/// members. The pair is additive, so max-subarray logic applies unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Val {
    sum: f64,
    count: u32,
}

impl Val {
    const ZERO: Val = Val { sum: 0.0, count: 0 };
    const BLOCKED: Val = Val {
        sum: f64::NEG_INFINITY,
        count: 0,
    };

    fn point(weight: f64) -> Val {
        Val { sum: weight, count: 1 }
    }

    fn plus(self, o: Val) -> Val {
        Val {
            sum: self.sum + o.sum,
            count: self.count + o.count,
        }
    }

    fn cmp_quality(&self, o: &Val) -> Ordering {
        self.sum
            .partial_cmp(&o.sum)
            .unwrap_or(Ordering::Equal)
            .then(o.count.cmp(&self.count))
    }

    fn beats(&self, o: &Val) -> bool {
        self.cmp_quality(o) == Ordering::Greater
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    total: Val,
    prefix: (Val, usize),
    suffix: (Val, usize),
    best: (Val, usize, usize),
}

impl Node {
    fn leaf(v: Val, pos: usize) -> Node {
        Node {
            total: v,
            prefix: (v, pos),
            suffix: (v, pos),
            best: (v, pos, pos),
        }
    }

    fn join(l: &Node, r: &Node) -> Node {
        let ext_prefix = l.total.plus(r.prefix.0);
        let prefix = if ext_prefix.beats(&l.prefix.0) {
            (ext_prefix, r.prefix.1)
        } else {
            l.prefix
        };
        let ext_suffix = l.suffix.0.plus(r.total);
        let suffix = if ext_suffix.beats(&r.suffix.0) {
            (ext_suffix, l.suffix.1)
        } else {
            r.suffix
        };
        let mut best = l.best;
        if r.best.0.beats(&best.0) {
            best = r.best;
        }
        let across = l.suffix.0.plus(r.prefix.0);
        if across.beats(&best.0) {
            best = (across, l.suffix.1, r.prefix.1);
        }
        Node {
            total: l.total.plus(r.total),
            prefix,
            suffix,
            best,
        }
    }
}

/// Point-add / best-subarray segment tree over column slots.
struct SubarrayTree {
    len: usize,
    size: usize,
    nodes: Vec<Node>,
}

impl SubarrayTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two();
        let mut tree = Self {
            len,
            size,
            nodes: vec![Node::leaf(Val::BLOCKED, 0); 2 * size],
        };
        tree.reset();
        tree
    }

    fn reset(&mut self) {
        for i in 0..self.size {
            let v = if i < self.len { Val::ZERO } else { Val::BLOCKED };
            self.nodes[self.size + i] = Node::leaf(v, i);
        }
        for n in (1..self.size).rev() {
            self.nodes[n] = Node::join(&self.nodes[2 * n], &self.nodes[2 * n + 1]);
        }
    }

    fn add(&mut self, pos: usize, v: Val) {
        let mut n = self.size + pos;
        let updated = self.nodes[n].total.plus(v);
        self.nodes[n] = Node::leaf(updated, pos);
        n >>= 1;
        while n >= 1 {
            self.nodes[n] = Node::join(&self.nodes[2 * n], &self.nodes[2 * n + 1]);
            n >>= 1;
        }
    }

    fn best(&self) -> (Val, usize, usize) {
        self.nodes[1].best
    }
}
