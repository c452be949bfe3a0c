use geoburst::stcomb::{extract_patterns, is_eligible, max_clique, WeightedInterval};
use geoburst::{StreamId, TemporalInterval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iv(stream: &str, l: usize, r: usize, w: f64) -> TemporalInterval {
    TemporalInterval {
        stream: StreamId::from(stream),
        l,
        r,
        burstiness: w,
    }
}

fn random_pool(rng: &mut ChaCha8Rng, max: usize) -> Vec<WeightedInterval> {
    let m = rng.random_range(1..=max);
    (0..m)
        .map(|i| {
            let l = rng.random_range(1..=30);
            let r = rng.random_range(l..=30);
            // Multiples of 1/8 keep sums exact.
            let w = rng.random_range(1..=16) as f64 / 8.0;
            iv(&format!("s{i}"), l, r, w)
        })
        .collect()
}

fn exhaustive(pool: &[WeightedInterval]) -> f64 {
    let mut best = 0.0f64;
    for mask in 1u32..(1 << pool.len()) {
        let subset: Vec<_> = (0..pool.len()).filter(|&i| mask & (1 << i) != 0).map(|i| pool[i].clone()).collect();
        if is_eligible(&subset).unwrap() {
            best = best.max(subset.iter().map(|i| i.burstiness).sum());
        }
    }
    best
}

/// Branch and bound over the explicit intersection graph.
fn graph_clique(pool: &[WeightedInterval]) -> f64 {
    let n = pool.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| pool[a].l.max(pool[b].l) <= pool[a].r.min(pool[b].r)).collect())
        .collect();
    fn grow(adj: &[Vec<bool>], w: &[f64], chosen: &mut Vec<usize>, next: usize, score: f64, best: &mut f64) {
        *best = best.max(score);
        let rest: f64 = w[next..].iter().sum();
        if score + rest <= *best {
            return;
        }
        for v in next..w.len() {
            if chosen.iter().all(|&c| adj[c][v]) {
                chosen.push(v);
                grow(adj, w, chosen, v + 1, score + w[v], best);
                chosen.pop();
            }
        }
    }
    let w: Vec<f64> = pool.iter().map(|i| i.burstiness).collect();
    let mut best = 0.0;
    grow(&adj, &w, &mut Vec::new(), 0, 0.0, &mut best);
    best
}

#[test]
fn max_clique_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..500 {
        let pool = random_pool(&mut rng, 12);
        let (members, score) = max_clique(&pool);
        let chosen: Vec<_> = members.iter().map(|&i| pool[i].clone()).collect();
        assert!(is_eligible(&chosen).unwrap(), "case {case}");
        assert_eq!(score, chosen.iter().map(|i| i.burstiness).sum::<f64>());
        assert_eq!(score, exhaustive(&pool), "case {case}: {pool:?}");
        assert_eq!(score, graph_clique(&pool), "case {case}");
    }
}

#[test]
fn eligibility_agrees_with_pairwise_intersection() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let pool = random_pool(&mut rng, 6);
        let pairwise = pool
            .iter()
            .all(|a| pool.iter().all(|b| a.l.max(b.l) <= a.r.min(b.r)));
        assert_eq!(is_eligible(&pool).unwrap(), pairwise);
    }
}

#[test]
fn extraction_yields_disjoint_descending_patterns() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let pool = random_pool(&mut rng, 12);
        let patterns = extract_patterns("t", &pool, None);
        assert_eq!(patterns.first().map(|p| p.score), Some(exhaustive(&pool)));
        let mut used = Vec::new();
        for w in patterns.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for p in &patterns {
            let (a, b) = p.timeframe;
            assert!(a <= b);
            for m in &p.members {
                assert!(m.l <= a && b <= m.r);
                assert!(!used.contains(m));
                used.push(m.clone());
            }
        }
        assert_eq!(used.len(), pool.len());
    }
}

/// Intervals laid out to match the described example: stream 1 holds I1 and
/// I2, and the two eligible groups are {I1, I3, I5, I6} and {I2, I4, I7}.
fn figure_pool() -> Vec<WeightedInterval> {
    vec![
        iv("D1", 1, 10, 0.8),  // I1
        iv("D1", 15, 25, 0.5), // I2
        iv("D2", 3, 12, 0.5),  // I3
        iv("D2", 14, 22, 0.3), // I4
        iv("D3", 5, 9, 0.4),   // I5
        iv("D4", 4, 11, 0.4),  // I6
        iv("D4", 18, 30, 0.4), // I7
    ]
}

#[test]
fn figure_example() {
    let pool = figure_pool();
    let pick = |ids: &[usize]| ids.iter().map(|&i| pool[i].clone()).collect::<Vec<_>>();
    assert!(is_eligible(&pick(&[0, 2, 4, 5])).unwrap());
    assert!(is_eligible(&pick(&[1, 3, 6])).unwrap());
    assert!(!is_eligible(&pick(&[0, 3, 5])).unwrap());

    let (members, score) = max_clique(&pool);
    assert_eq!(members, vec![0, 2, 4, 5]);
    assert!((score - 2.1).abs() < 1e-12);

    let patterns = extract_patterns("t", &pool, None);
    assert_eq!(patterns.len(), 2);
    let names = |p: &geoburst::CombinatorialPattern| p.streams.iter().map(|s| s.as_str().to_owned()).collect::<Vec<_>>();
    assert_eq!(names(&patterns[0]), ["D1", "D2", "D3", "D4"]);
    assert_eq!(patterns[0].timeframe, (5, 9));
    assert!((patterns[0].score - 2.1).abs() < 1e-12);
    assert_eq!(names(&patterns[1]), ["D1", "D2", "D4"]);
    assert_eq!(patterns[1].timeframe, (18, 22));
}
