//! All maximal scoring subsequences (Ruzzo–Tompa), batch and incremental.
//!
//! The engine reads scores left to right and keeps a list of candidate
//! segments. Each candidate carries `left`, the cumulative sum of all scores
//! strictly before its first element, and `right`, the cumulative sum up to
//! and including its last element. After any prefix has been consumed the
//! candidate list is exactly the set of maximal segments of that prefix, so
//! the same state serves both the batch entry point [`get_max_all`] and the
//! streaming one [`MaxSegState::push`].
//!
//! Positions are 1-based and inclusive, matching timestamp indexing in the
//! rest of the crate.

use serde::{Deserialize, Serialize};

/// A contiguous run `[start, end]` (1-based, inclusive) and its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSegment {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl ScoredSegment {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    end: usize,
    left: f64,
    right: f64,
    // Largest earlier list index whose `left` is strictly smaller; lets the
    // right-to-left search skip runs that cannot satisfy `left_j < left_k`.
    lower: Option<usize>,
}

/// Incremental Ruzzo–Tompa state.
///
/// Candidates are ordered by position. Zero and negative scores never open a
/// candidate; they only move the running sum, and may later be absorbed when
/// a candidate is extended leftwards.
#[derive(Debug, Clone, Default)]
pub struct MaxSegState {
    cumulative: f64,
    consumed: usize,
    candidates: Vec<Candidate>,
}

impl MaxSegState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of scores consumed so far.
    pub fn len(&self) -> usize {
        self.consumed
    }

    pub fn is_empty(&self) -> bool {
        self.consumed == 0
    }

    /// Sum of every score consumed so far.
    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    /// Number of live candidates, i.e. maximal segments of the prefix.
    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    /// Consumes one more score and updates the candidate list.
    pub fn push(&mut self, score: f64) {
        self.consumed += 1;
        let before = self.cumulative;
        self.cumulative += score;
        if !(score > 0.0) {
            return;
        }

        let mut incoming = Candidate {
            start: self.consumed,
            end: self.consumed,
            left: before,
            right: self.cumulative,
            lower: None,
        };
        loop {
            let mut probe = self.candidates.len().checked_sub(1);
            while let Some(j) = probe {
                if self.candidates[j].left < incoming.left {
                    break;
                }
                probe = self.candidates[j].lower;
            }
            match probe {
                Some(j) if self.candidates[j].right < incoming.right => {
                    let absorbed = self.candidates[j];
                    incoming.start = absorbed.start;
                    incoming.left = absorbed.left;
                    self.candidates.truncate(j);
                }
                _ => {
                    incoming.lower = probe;
                    self.candidates.push(incoming);
                    return;
                }
            }
        }
    }

    /// Current maximal segments, ordered by position.
    pub fn segments(&self) -> impl Iterator<Item = ScoredSegment> + '_ {
        self.candidates.iter().map(|c| ScoredSegment {
            start: c.start,
            end: c.end,
            score: c.right - c.left,
        })
    }
}

/// Appends `score` to `state` and returns the maximal segments of the whole
/// prefix consumed so far.
pub fn append_score(state: &mut MaxSegState, score: f64) -> Vec<ScoredSegment> {
    state.push(score);
    state.segments().collect()
}

/// All maximal scoring segments of `scores`, ordered by position.
pub fn get_max_all(scores: &[f64]) -> Vec<ScoredSegment> {
    let mut state = MaxSegState::new();
    for &s in scores {
        state.push(s);
    }
    state.segments().collect()
}
