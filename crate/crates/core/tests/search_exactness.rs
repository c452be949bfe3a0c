use geoburst::search::{full_scan, score_document, IndexedPattern};
use geoburst::{build_index, top_k, AggregateFn, Corpus, GeoPoint, PatternIndex, PatternKind, StreamMeta};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TERMS: [&str; 5] = ["a", "b", "c", "d", "e"];

fn random_instance(rng: &mut ChaCha8Rng) -> (Corpus, PatternIndex, AggregateFn) {
    let n = rng.random_range(1..=5);
    let timeline = rng.random_range(1..=12);
    let streams: Vec<StreamMeta> = (0..n)
        .map(|i| StreamMeta::new(format!("s{i}"), GeoPoint::new(i as f64, 0.0)))
        .collect();
    let cells: Vec<(usize, usize, String, u32)> = (0..rng.random_range(0..=40))
        .map(|_| {
            (
                rng.random_range(0..n),
                rng.random_range(1..=timeline),
                TERMS.choose(rng).unwrap().to_string(),
                rng.random_range(1..=5),
            )
        })
        .collect();
    let corpus = Corpus::from_counts(streams, timeline, cells).unwrap();
    let mut index = PatternIndex::new(PatternKind::Comb);
    for term in TERMS {
        for _ in 0..rng.random_range(0..=3) {
            let members: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if members.is_empty() {
                continue;
            }
            let a = rng.random_range(1..=timeline);
            let b = rng.random_range(a..=timeline);
            let score = rng.random_range(1..=16) as f64 / 4.0;
            index.insert(term, IndexedPattern::new(members, a, b, score).unwrap());
        }
    }
    let agg = *[AggregateFn::Max, AggregateFn::Min, AggregateFn::Median, AggregateFn::Mean]
        .choose(rng)
        .unwrap();
    (corpus, index, agg)
}

#[test]
fn threshold_algorithm_equals_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut answered = 0;
    for case in 0..1000 {
        let (corpus, patterns, agg) = random_instance(&mut rng);
        let index = build_index(&corpus, &patterns, agg);
        let mut query: Vec<&str> = (0..rng.random_range(1..=3)).map(|_| *TERMS.choose(&mut rng).unwrap()).collect();
        if rng.random_bool(0.1) {
            query.push("unseen");
        }
        let k = rng.random_range(1..=8);

        let ta = top_k(&index, &query, k).unwrap();
        assert_eq!(ta.results, full_scan(&index, &query, k), "case {case}: {query:?} k={k}");
        assert!(ta.visited <= index.doc_count());
        answered += usize::from(!ta.results.is_empty());

        // Independent path: score every document from the patterns directly.
        let mut direct: Vec<(String, f64)> = corpus
            .documents()
            .iter()
            .filter(|d| query.iter().any(|t| corpus.term_id(t).is_some_and(|id| d.frequency(id) > 0)))
            .map(|d| {
                let s = score_document(&corpus, &query, d, &patterns, agg).unwrap();
                (s.doc_id, s.score)
            })
            .filter(|(_, s)| s.is_finite())
            .collect();
        direct.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        direct.truncate(k);
        assert_eq!(ta.results.len(), direct.len(), "case {case}");
        for (got, want) in ta.results.iter().zip(&direct) {
            assert!((got.score - want.1).abs() < 1e-9, "case {case}");
        }
    }
    assert!(answered > 300, "only {answered} non-empty rankings");
}
