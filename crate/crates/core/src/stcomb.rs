//! Combinatorial patterns: sets of streams whose bursty intervals share a
//! common timeframe.
//!
//! A set of intervals is eligible when it has a common point, which for
//! intervals on a line is the same as pairwise intersection. The highest
//! scoring eligible subset is therefore a maximum-weight clique of the
//! interval graph, found here by sweeping interval endpoints without ever
//! materialising the graph.

use serde::{Deserialize, Serialize};

use crate::corpus::StreamId;
use crate::error::{Error, Result};
use crate::temporal::TemporalInterval;

/// A bursty interval used as a weighted vertex; its weight is its burstiness.
pub type WeightedInterval = TemporalInterval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialPattern {
    pub term: String,
    /// Sorted member stream ids, one per member interval.
    pub streams: Vec<StreamId>,
    /// Common segment `[start, end]` of the member intervals.
    pub timeframe: (usize, usize),
    pub score: f64,
    pub members: Vec<TemporalInterval>,
}

impl CombinatorialPattern {
    fn from_members(term: &str, mut members: Vec<TemporalInterval>) -> Self {
        members.sort_by(|a, b| a.stream.cmp(&b.stream).then(a.l.cmp(&b.l)));
        let start = members.iter().map(|m| m.l).max().unwrap_or(0);
        let end = members.iter().map(|m| m.r).min().unwrap_or(0);
        let score = members.iter().map(|m| m.burstiness).sum();
        Self {
            term: term.to_owned(),
            streams: members.iter().map(|m| m.stream.clone()).collect(),
            timeframe: (start, end),
            score,
            members,
        }
    }
}

/// True when every interval in the set shares at least one point.
pub fn is_eligible(intervals: &[WeightedInterval]) -> Result<bool> {
    if intervals.is_empty() {
        return Err(Error::EmptyIntervalSet);
    }
    let max_left = intervals.iter().map(|i| i.l).max().unwrap_or(0);
    let min_right = intervals.iter().map(|i| i.r).min().unwrap_or(0);
    Ok(max_left <= min_right)
}

/// Highest scoring eligible subset, as indices into `intervals` (ascending),
/// and its score.
///
/// Endpoints are swept in order with starts ahead of ends at equal
/// coordinates, so touching closed intervals count as intersecting. The
/// earliest point of maximum total weight wins ties.
pub fn max_clique(intervals: &[WeightedInterval]) -> (Vec<usize>, f64) {
    let Some(point) = best_point(intervals) else {
        return (Vec::new(), 0.0);
    };
    let members: Vec<usize> = (0..intervals.len())
        .filter(|&i| intervals[i].l <= point && point <= intervals[i].r)
        .collect();
    let score = members.iter().map(|&i| intervals[i].burstiness).sum();
    (members, score)
}

fn best_point(intervals: &[WeightedInterval]) -> Option<usize> {
    // (coordinate, 0 = start / 1 = end, index)
    let mut events: Vec<(usize, u8, usize)> = Vec::with_capacity(intervals.len() * 2);
    for (i, iv) in intervals.iter().enumerate() {
        events.push((iv.l, 0, i));
        events.push((iv.r, 1, i));
    }
    events.sort_unstable();
    let mut running = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for (coord, kind, i) in events {
        if kind == 0 {
            running += intervals[i].burstiness;
            if best.is_none_or(|(w, _)| running > w) {
                best = Some((running, coord));
            }
        } else {
            running -= intervals[i].burstiness;
        }
    }
    best.map(|(_, p)| p)
}

/// Repeatedly extracts the maximum clique and removes its intervals.
///
/// Stops when the pool is empty, the best remaining score is not positive,
/// or `max_patterns` patterns have been produced. Runs in
/// `O(m log m)` overall for `m` intervals: the per-point totals live in a
/// range-add/max tree, and the intervals covering a point are found by a
/// stabbing query over the same coordinates.
pub fn extract_patterns(
    term: &str,
    intervals: &[WeightedInterval],
    max_patterns: Option<usize>,
) -> Vec<CombinatorialPattern> {
    let limit = max_patterns.unwrap_or(usize::MAX);
    if intervals.is_empty() || limit == 0 {
        return Vec::new();
    }

    let mut points: Vec<usize> = intervals.iter().map(|i| i.l).collect();
    points.sort_unstable();
    points.dedup();
    let span = |iv: &WeightedInterval| -> (usize, usize) {
        let lo = points.partition_point(|&p| p < iv.l);
        let hi = points.partition_point(|&p| p <= iv.r) - 1;
        (lo, hi)
    };

    let mut totals = MaxAddTree::new(points.len());
    let mut stabbing = StabbingTree::new(points.len());
    for (i, iv) in intervals.iter().enumerate() {
        let (lo, hi) = span(iv);
        totals.add(lo, hi, iv.burstiness);
        stabbing.insert(lo, hi, i);
    }

    let mut alive = vec![true; intervals.len()];
    let mut patterns = Vec::new();
    while patterns.len() < limit {
        let (value, at) = totals.max();
        if !(value > 0.0) {
            break;
        }
        let members: Vec<usize> = stabbing
            .take(at)
            .into_iter()
            .filter(|&i| std::mem::replace(&mut alive[i], false))
            .collect();
        if members.is_empty() {
            // Only rounding residue left at this point.
            totals.set(at, f64::NEG_INFINITY);
            continue;
        }
        for &i in &members {
            let (lo, hi) = span(&intervals[i]);
            totals.add(lo, hi, -intervals[i].burstiness);
        }
        totals.set(at, f64::NEG_INFINITY);
        let chosen = members.iter().map(|&i| intervals[i].clone()).collect();
        patterns.push(CombinatorialPattern::from_members(term, chosen));
    }
    patterns.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.timeframe.cmp(&b.timeframe))
            .then_with(|| a.streams.cmp(&b.streams))
    });
    patterns
}

/// All maximal cliques (possibly overlapping) whose score is at least
/// `threshold`. Quadratic; meant for small pools.
pub fn maximal_cliques(intervals: &[WeightedInterval], threshold: f64) -> Vec<(Vec<usize>, f64)> {
    let mut points: Vec<usize> = intervals.iter().map(|i| i.l).collect();
    points.sort_unstable();
    points.dedup();
    let mut cliques: Vec<Vec<usize>> = points
        .iter()
        .map(|&p| {
            (0..intervals.len())
                .filter(|&i| intervals[i].l <= p && p <= intervals[i].r)
                .collect()
        })
        .collect();
    cliques.sort();
    cliques.dedup();
    let is_subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok());
    let maximal: Vec<Vec<usize>> = cliques
        .iter()
        .filter(|c| !cliques.iter().any(|o| is_subset(c, o)))
        .cloned()
        .collect();
    let mut out: Vec<(Vec<usize>, f64)> = maximal
        .into_iter()
        .map(|c| {
            let s = c.iter().map(|&i| intervals[i].burstiness).sum();
            (c, s)
        })
        .filter(|(_, s)| *s >= threshold)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Segment tree over point positions supporting range add and a global
/// maximum with its leftmost position.
struct MaxAddTree {
    size: usize,
    max: Vec<f64>,
    arg: Vec<usize>,
    lazy: Vec<f64>,
}

impl MaxAddTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two();
        let mut tree = Self {
            size,
            max: vec![f64::NEG_INFINITY; 2 * size],
            arg: vec![0; 2 * size],
            lazy: vec![0.0; 2 * size],
        };
        for i in 0..size {
            tree.arg[size + i] = i;
            if i < len {
                tree.max[size + i] = 0.0;
            }
        }
        for node in (1..size).rev() {
            tree.pull(node);
        }
        tree
    }

    fn pull(&mut self, node: usize) {
        let (l, r) = (2 * node, 2 * node + 1);
        let (m, a) = if self.max[r] > self.max[l] {
            (self.max[r], self.arg[r])
        } else {
            (self.max[l], self.arg[l])
        };
        self.max[node] = m + self.lazy[node];
        self.arg[node] = a;
    }

    fn add(&mut self, lo: usize, hi: usize, delta: f64) {
        self.add_rec(1, 0, self.size - 1, lo, hi, delta);
    }

    fn add_rec(&mut self, node: usize, nl: usize, nr: usize, lo: usize, hi: usize, delta: f64) {
        if hi < nl || nr < lo {
            return;
        }
        if lo <= nl && nr <= hi {
            self.max[node] += delta;
            self.lazy[node] += delta;
            return;
        }
        let mid = (nl + nr) / 2;
        self.add_rec(2 * node, nl, mid, lo, hi, delta);
        self.add_rec(2 * node + 1, mid + 1, nr, lo, hi, delta);
        self.pull(node);
    }

    fn set(&mut self, pos: usize, value: f64) {
        // Accumulated lazies on the path shift the leaf; compensate for them.
        let mut node = 1;
        let (mut nl, mut nr) = (0, self.size - 1);
        let mut path = Vec::new();
        let mut offset = 0.0;
        while nl != nr {
            path.push(node);
            offset += self.lazy[node];
            let mid = (nl + nr) / 2;
            if pos <= mid {
                node *= 2;
                nr = mid;
            } else {
                node = 2 * node + 1;
                nl = mid + 1;
            }
        }
        self.lazy[node] = 0.0;
        self.max[node] = value - offset;
        for &p in path.iter().rev() {
            self.pull(p);
        }
    }

    fn max(&self) -> (f64, usize) {
        (self.max[1], self.arg[1])
    }
}

/// Stores items on canonical cover nodes of their position range so that
/// everything covering one position can be collected along a root-to-leaf
/// path.
struct StabbingTree {
    size: usize,
    lists: Vec<Vec<usize>>,
}

impl StabbingTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two();
        Self {
            size,
            lists: vec![Vec::new(); 2 * size],
        }
    }

    fn insert(&mut self, lo: usize, hi: usize, item: usize) {
        let (mut l, mut r) = (lo + self.size, hi + self.size + 1);
        while l < r {
            if l & 1 == 1 {
                self.lists[l].push(item);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                self.lists[r].push(item);
            }
            l >>= 1;
            r >>= 1;
        }
    }

    /// Removes and returns every stored entry covering `pos`. Entries also
    /// stored elsewhere stay there; callers filter them by liveness.
    fn take(&mut self, pos: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut node = pos + self.size;
        while node >= 1 {
            out.append(&mut self.lists[node]);
            node >>= 1;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(stream: &str, l: usize, r: usize, w: f64) -> WeightedInterval {
        TemporalInterval {
            stream: StreamId::from(stream),
            l,
            r,
            burstiness: w,
        }
    }

    #[test]
    fn eligibility() {
        assert!(is_eligible(&[iv("a", 1, 5, 1.0)]).unwrap());
        assert!(is_eligible(&[iv("a", 1, 5, 1.0), iv("b", 3, 8, 1.0), iv("c", 4, 6, 1.0)]).unwrap());
        assert!(!is_eligible(&[iv("a", 1, 5, 1.0), iv("b", 6, 9, 1.0)]).unwrap());
        assert!(is_eligible(&[iv("a", 1, 3, 1.0), iv("b", 3, 5, 1.0)]).unwrap());
        assert!(matches!(is_eligible(&[]), Err(Error::EmptyIntervalSet)));
    }

    #[test]
    fn clique_examples() {
        assert_eq!(max_clique(&[]), (vec![], 0.0));
        assert_eq!(max_clique(&[iv("A", 1, 5, 0.8)]), (vec![0], 0.8));
        let pool = [iv("A", 1, 5, 0.8), iv("B", 3, 8, 0.5), iv("C", 6, 9, 0.7)];
        let (members, score) = max_clique(&pool);
        assert_eq!(members, vec![0, 1]);
        assert!((score - 1.3).abs() < 1e-12);
    }

    #[test]
    fn touching_intervals_intersect() {
        let pool = [iv("A", 1, 3, 1.0), iv("B", 3, 5, 1.0)];
        assert_eq!(max_clique(&pool).0, vec![0, 1]);
    }

    #[test]
    fn iterative_extraction() {
        let pool = [iv("A", 1, 5, 0.8), iv("B", 3, 8, 0.5), iv("C", 6, 9, 0.7)];
        let got = extract_patterns("t", &pool, None);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].streams, vec![StreamId::from("A"), StreamId::from("B")]);
        assert_eq!(got[0].timeframe, (3, 5));
        assert!((got[0].score - 1.3).abs() < 1e-12);
        assert_eq!(got[1].streams, vec![StreamId::from("C")]);
        assert_eq!(got[1].timeframe, (6, 9));
        assert!((got[1].score - 0.7).abs() < 1e-12);
        assert!(extract_patterns("t", &[], None).is_empty());
        assert_eq!(extract_patterns("t", &pool, Some(1)).len(), 1);
    }

    #[test]
    fn overlapping_cliques_are_all_reported() {
        let pool = [iv("A", 1, 5, 0.8), iv("B", 3, 8, 0.5), iv("C", 6, 9, 0.7)];
        let got = maximal_cliques(&pool, 0.0);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, vec![0, 1]);
        assert_eq!(got[1].0, vec![1, 2]);
        assert!((got[1].1 - 1.2).abs() < 1e-12);
        assert_eq!(maximal_cliques(&pool, 1.25).len(), 1);
    }
}
