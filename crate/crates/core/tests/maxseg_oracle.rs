use std::time::Instant;

use geoburst::maxseg::{append_score, get_max_all, MaxSegState, ScoredSegment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sum(scores: &[f64], l: usize, r: usize) -> f64 {
    scores[l - 1..r].iter().sum()
}

/// Every proper subsegment scores strictly less than `[l, r]`.
fn p1(scores: &[f64], l: usize, r: usize) -> bool {
    let whole = sum(scores, l, r);
    for a in l..=r {
        for b in a..=r {
            if (a, b) != (l, r) && sum(scores, a, b) >= whole {
                return false;
            }
        }
    }
    true
}

/// Quadratic-enumeration reference: positive segments satisfying P1 that
/// have no proper supersegment satisfying P1.
fn oracle(scores: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = scores.len();
    let mut good = Vec::new();
    for l in 1..=n {
        for r in l..=n {
            if sum(scores, l, r) > 0.0 && p1(scores, l, r) {
                good.push((l, r));
            }
        }
    }
    let mut out: Vec<_> = good
        .iter()
        .filter(|&&(l, r)| !good.iter().any(|&(a, b)| (a, b) != (l, r) && a <= l && r <= b))
        .map(|&(l, r)| (l, r, sum(scores, l, r)))
        .collect();
    out.sort_by_key(|&(l, r, _)| (l, r));
    out
}

fn triples(segs: &[ScoredSegment]) -> Vec<(usize, usize, f64)> {
    let mut v: Vec<_> = segs.iter().map(|s| (s.start, s.end, s.score)).collect();
    v.sort_by_key(|&(l, r, _)| (l, r));
    v
}

#[test]
fn worked_trace() {
    let got = triples(&get_max_all(&[4.0, -5.0, 3.0, -3.0, 1.0, 2.0]));
    assert_eq!(got, vec![(1, 1, 4.0), (3, 3, 3.0), (5, 6, 3.0)]);
}

#[test]
fn matches_quadratic_oracle_on_random_sequences() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let len = rng.random_range(0..=50);
        // Small integers keep every partial sum exact.
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(-6i32..=6) as f64).collect();
        assert_eq!(triples(&get_max_all(&scores)), oracle(&scores), "case {case}: {scores:?}");
    }
    assert!(started.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn incremental_matches_batch_on_every_prefix() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let len = rng.random_range(0..=200);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut state = MaxSegState::new();
        for i in 0..len {
            let current = append_score(&mut state, scores[i]);
            assert_eq!(triples(&current), triples(&get_max_all(&scores[..=i])));
        }
    }
}

#[test]
fn segments_are_disjoint_and_sum_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let len = rng.random_range(1..=200);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let segs = get_max_all(&scores);
        for w in segs.windows(2) {
            assert!(w[0].end < w[1].start);
        }
        for s in &segs {
            assert!(s.score > 0.0);
            assert!((s.score - sum(&scores, s.start, s.end)).abs() < 1e-9);
        }
    }
}
