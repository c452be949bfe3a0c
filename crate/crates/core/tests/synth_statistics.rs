use geoburst::synth::{grow_from, select_streams, DistanceRule, Rounding, Selection};
use geoburst::{generate, GeneratorConfig, GeneratorMode, GeoPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn nearer_streams_join_more_often() {
    let locations = [GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 0.0), GeoPoint::new(-5.0, 0.0)];
    let selection = Selection {
        mode: GeneratorMode::Distgen,
        tau: 3.0,
        rule: DistanceRule::Decaying,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let trials = 10_000;
    let (mut near, mut far) = (0usize, 0usize);
    for _ in 0..trials {
        let chosen = grow_from(&selection, &locations, 0, &mut rng);
        assert_eq!(chosen[0], 0);
        near += usize::from(chosen.contains(&1));
        far += usize::from(chosen.contains(&2));
    }
    // One-sided two-proportion z test at the 1% level.
    let (p1, p2) = (near as f64 / trials as f64, far as f64 / trials as f64);
    let pooled = (p1 + p2) / 2.0;
    let z = (p1 - p2) / (2.0 * pooled * (1.0 - pooled) / trials as f64).sqrt();
    assert!(z > 2.326, "near {near} far {far} z {z}");
}

#[test]
fn proportional_rule_prefers_far_streams() {
    let locations = [GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 0.0), GeoPoint::new(-5.0, 0.0)];
    let selection = Selection {
        mode: GeneratorMode::Distgen,
        tau: 3.0,
        rule: DistanceRule::Proportional,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let (mut near, mut far) = (0, 0);
    for _ in 0..10_000 {
        let chosen = grow_from(&selection, &locations, 0, &mut rng);
        near += usize::from(chosen.contains(&1));
        far += usize::from(chosen.contains(&2));
    }
    assert_eq!(far, 10_000);
    assert!(near < far);
}

#[test]
fn randgen_sizes_cover_the_range() {
    let locations: Vec<GeoPoint> = (0..5).map(|i| GeoPoint::new(i as f64, 0.0)).collect();
    let selection = Selection {
        mode: GeneratorMode::Randgen,
        tau: 0.0,
        rule: DistanceRule::Decaying,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut seen = [0usize; 6];
    for _ in 0..5000 {
        let chosen = select_streams(&selection, &locations, &mut rng).unwrap();
        assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        seen[chosen.len()] += 1;
    }
    assert_eq!(seen[0], 0);
    for &count in &seen[1..] {
        // Each size is expected 1000 times.
        assert!((800..1200).contains(&count), "{seen:?}");
    }
}

fn background_mean(rate: f64, rounding: Rounding) -> f64 {
    let cfg = GeneratorConfig {
        streams: 100,
        terms: 3,
        patterns: 0,
        timeline: 1000,
        background_rate: rate,
        rounding,
        ..Default::default()
    };
    let data = generate(&cfg, GeneratorMode::Randgen).unwrap();
    let cells: Vec<u32> = data.term_matrix(0).into_iter().flatten().collect();
    assert!(cells.len() >= 100_000);
    cells.iter().map(|&c| f64::from(c)).sum::<f64>() / cells.len() as f64
}

#[test]
fn background_mean_follows_the_rate() {
    let mean = background_mean(1.0, Rounding::Nearest);
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
    for rate in [0.3, 1.0, 4.0] {
        let mean = background_mean(rate, Rounding::Stochastic);
        assert!((mean * rate - 1.0).abs() < 0.05, "rate {rate}: {mean}");
    }
}

#[test]
fn seeded_generation_is_reproducible() {
    let cfg = GeneratorConfig {
        streams: 20,
        terms: 30,
        patterns: 10,
        timeline: 60,
        seed: 9,
        ..Default::default()
    };
    for mode in [GeneratorMode::Distgen, GeneratorMode::Randgen] {
        let a = generate(&cfg, mode).unwrap();
        let b = generate(&cfg, mode).unwrap();
        assert_eq!(a.truth, b.truth);
        let terms: Vec<usize> = (0..cfg.terms).collect();
        assert_eq!(a.cells(&terms), b.cells(&terms));
        assert_eq!(a.truth.len(), cfg.patterns);
        let other = generate(&GeneratorConfig { seed: 10, ..cfg.clone() }, mode).unwrap();
        assert_ne!(a.cells(&terms), other.cells(&terms));
    }
}

#[test]
fn bursts_raise_member_frequencies_inside_the_timeframe() {
    let cfg = GeneratorConfig {
        streams: 30,
        terms: 5,
        patterns: 1,
        timeline: 200,
        peak: (40.0, 60.0),
        seed: 4,
        ..Default::default()
    };
    for mode in [GeneratorMode::Distgen, GeneratorMode::Randgen] {
        let data = generate(&cfg, mode).unwrap();
        let truth = &data.truth[0];
        let term = data.term_index(&truth.term).unwrap();
        let matrix = data.term_matrix(term);
        let (a, b) = truth.timeframe;
        assert!(1 <= a && a <= b && b <= cfg.timeline);
        assert!(!truth.streams.is_empty());
        for id in &truth.streams {
            let s = data.streams.iter().position(|m| &m.id == id).unwrap();
            let row: Vec<f64> = matrix[s].iter().map(|&c| f64::from(c)).collect();
            let inside = row[a - 1..b].iter().sum::<f64>() / (b + 1 - a) as f64;
            let outside_len = cfg.timeline - (b + 1 - a);
            if outside_len == 0 {
                continue;
            }
            let outside = (row.iter().sum::<f64>() - inside * (b + 1 - a) as f64) / outside_len as f64;
            assert!(inside > outside, "{id:?}: inside {inside} outside {outside}");
        }
        // Bursts only ever add to the background.
        let background = data.background_matrix(term);
        for (row, base) in matrix.iter().zip(&background) {
            assert!(row.iter().zip(base).all(|(c, b)| c >= b));
        }
    }
}
