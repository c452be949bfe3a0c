//! Temporal burstiness of a single stream and extraction of its
//! non-overlapping bursty intervals.
//!
//! For a series `Y` the burstiness of `Y[l..=r]` is the share of the series'
//! mass that falls inside the interval minus the share of the timeline it
//! covers. That is an additive function of the per-index deviations
//! `z_i = Y[i] / sum(Y) - 1 / |Y|`, so the bursty intervals are exactly the
//! maximal scoring segments of `z`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::StreamId;
use crate::error::{Error, Result};
use crate::maxseg::get_max_all;

/// A bursty run `[l, r]` (1-based, inclusive) of one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalInterval {
    pub stream: StreamId,
    pub l: usize,
    pub r: usize,
    #[serde(rename = "score")]
    pub burstiness: f64,
}

impl TemporalInterval {
    pub fn len(&self) -> usize {
        self.r + 1 - self.l
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Burstiness of `series[l..=r]` (1-based). A series with no mass has no
/// burst, so it scores 0 everywhere.
pub fn temporal_burstiness<T: Copy + Into<f64>>(series: &[T], l: usize, r: usize) -> Result<f64> {
    let len = series.len();
    if l < 1 || l > r || r > len {
        return Err(Error::RangeOutOfBounds { l, r, len });
    }
    let total: f64 = series.iter().map(|&v| v.into()).sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let inside: f64 = series[l - 1..r].iter().map(|&v| v.into()).sum();
    Ok(inside / total - (r + 1 - l) as f64 / len as f64)
}

/// Per-index deviations whose segment sums are the burstiness values.
/// `None` when the series carries no mass.
pub fn deviations<T: Copy + Into<f64>>(series: &[T]) -> Option<Vec<f64>> {
    let total: f64 = series.iter().map(|&v| v.into()).sum();
    if total <= 0.0 || series.is_empty() {
        return None;
    }
    let uniform = 1.0 / series.len() as f64;
    Some(series.iter().map(|&v| v.into() / total - uniform).collect())
}

/// Bursty intervals of one stream, ordered by position and pairwise
/// disjoint. Linear in the series length.
pub fn extract_bursty_intervals<T: Copy + Into<f64>>(
    stream: &StreamId,
    series: &[T],
) -> Vec<TemporalInterval> {
    let Some(z) = deviations(series) else {
        return Vec::new();
    };
    get_max_all(&z)
        .into_iter()
        .map(|seg| TemporalInterval {
            stream: stream.clone(),
            l: seg.start,
            r: seg.end,
            burstiness: seg.score,
        })
        .collect()
}

/// Highest segment sum of `z`, 0 when every value is non-positive.
fn best_segment(z: &[f64]) -> f64 {
    let (mut best, mut run) = (0.0f64, 0.0f64);
    for &v in z {
        run = (run + v).max(0.0);
        best = best.max(run);
    }
    best
}

/// Bursty intervals that pass a permutation test: an interval is kept only if
/// its burstiness beats the best interval of each of `rounds` random
/// shuffles of the same series. With 19 rounds this is a test at the 5%
/// level. `rounds = 0` keeps every interval.
pub fn significant_intervals<T: Copy + Into<f64>, R: Rng + ?Sized>(
    stream: &StreamId,
    series: &[T],
    rounds: usize,
    rng: &mut R,
) -> Vec<TemporalInterval> {
    let mut intervals = extract_bursty_intervals(stream, series);
    if rounds == 0 || intervals.is_empty() {
        return intervals;
    }
    let mut z = deviations(series).expect("intervals imply mass");
    let mut null = 0.0f64;
    for _ in 0..rounds {
        z.shuffle(rng);
        null = null.max(best_segment(&z));
    }
    intervals.retain(|i| i.burstiness > null);
    intervals
}
