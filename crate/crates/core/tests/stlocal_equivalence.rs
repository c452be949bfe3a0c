use std::collections::BTreeSet;

use geoburst::maxseg::get_max_all;
use geoburst::spatial::WeightedPoint;
use geoburst::{GeoPoint, TermTracker};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Window = (Vec<usize>, (usize, usize), u64);

fn key(members: &[usize], timeframe: (usize, usize), score: f64) -> Window {
    (members.to_vec(), timeframe, score.to_bits())
}

fn windows(tracker: &TermTracker) -> BTreeSet<Window> {
    tracker
        .maximal_windows()
        .iter()
        .map(|w| key(w.region.members(), w.timeframe, w.w_score))
        .collect()
}

fn random_history(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=100);
    (0..len).map(|_| rng.random_range(-6i32..=6) as f64).collect()
}

/// A single stream's r-score history.
fn feed(tracker: &mut TermTracker, history: &[f64]) {
    for (i, &s) in history.iter().enumerate() {
        let p = WeightedPoint {
            location: GeoPoint::new(0.0, 0.0),
            weight: s,
        };
        tracker.process_snapshot(i + 1, &[p]).unwrap();
    }
}

#[test]
fn streamed_windows_equal_batch_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..200 {
        let history = random_history(&mut rng);
        let batch: BTreeSet<Window> = get_max_all(&history)
            .iter()
            .map(|s| key(&[0], (s.start, s.end), s.score))
            .collect();
        let mut pruned = TermTracker::new("t", 1);
        feed(&mut pruned, &history);
        let mut kept = TermTracker::new("t", 1).without_pruning();
        feed(&mut kept, &history);
        assert_eq!(windows(&pruned), batch, "case {case}: {history:?}");
        assert_eq!(windows(&kept), batch, "case {case}");
    }
}

#[test]
fn every_tracked_region_is_temporally_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..200 {
        let n = rng.random_range(1..=6);
        let locations: Vec<GeoPoint> = (0..n)
            .map(|_| GeoPoint::new(rng.random_range(0..5) as f64, rng.random_range(0..5) as f64))
            .collect();
        let len = rng.random_range(1..=100);
        let mut tracker = TermTracker::new("t", n).without_pruning();
        let mut scores = Vec::new();
        for i in 1..=len {
            let points: Vec<WeightedPoint> = locations
                .iter()
                .map(|&location| WeightedPoint {
                    location,
                    weight: rng.random_range(-4i32..=4) as f64 / 2.0,
                })
                .collect();
            let stats = tracker.process_snapshot(i, &points).unwrap();
            assert!(stats.live_sequences <= n * i);
            scores.push(points);
        }
        let mut expected = BTreeSet::new();
        for seq in tracker.sequences() {
            let history: Vec<f64> = scores[seq.birth - 1..]
                .iter()
                .map(|pts| seq.key.members().iter().map(|&m| pts[m].weight).sum())
                .collect();
            assert_eq!(seq.scores, history, "case {case}");
            for s in get_max_all(&history) {
                let offset = seq.birth - 1;
                expected.insert(key(seq.key.members(), (s.start + offset, s.end + offset), s.score));
            }
        }
        assert_eq!(windows(&tracker), expected, "case {case}");
        for w in tracker.maximal_windows() {
            let (a, b) = w.timeframe;
            let direct: f64 = scores[a - 1..b]
                .iter()
                .map(|pts| w.region.members().iter().map(|&m| pts[m].weight).sum::<f64>())
                .sum();
            assert!((w.w_score - direct).abs() < 1e-9);
            assert!(w.w_score > 0.0);
        }
    }
}
