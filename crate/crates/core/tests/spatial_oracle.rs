use geoburst::spatial::{max_rectangle, r_bursty, StreamScore};
use geoburst::{GeoPoint, StreamId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng) -> Vec<StreamScore> {
    let n = rng.random_range(1..=30);
    // A coarse grid forces shared coordinates; quarter weights sum exactly.
    (0..n)
        .map(|i| StreamScore {
            stream: StreamId::from(format!("s{i}")),
            location: GeoPoint::new(rng.random_range(0..10) as f64, rng.random_range(0..10) as f64),
            value: rng.random_range(-8i32..=8) as f64 / 4.0,
        })
        .collect()
}

/// Best total weight over every rectangle spanned by point coordinates that
/// contains at least one point.
fn brute_force(points: &[StreamScore]) -> f64 {
    let mut xs: Vec<f64> = points.iter().map(|p| p.location.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.location.y).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let (w, h) = (xs.len(), ys.len());
    let mut weight = vec![vec![0.0; h + 1]; w + 1];
    let mut count = vec![vec![0usize; h + 1]; w + 1];
    for p in points {
        let i = xs.iter().position(|&x| x == p.location.x).unwrap() + 1;
        let j = ys.iter().position(|&y| y == p.location.y).unwrap() + 1;
        weight[i][j] += p.value;
        count[i][j] += 1;
    }
    for i in 1..=w {
        for j in 1..=h {
            weight[i][j] += weight[i - 1][j] + weight[i][j - 1] - weight[i - 1][j - 1];
            count[i][j] += count[i - 1][j] + count[i][j - 1] - count[i - 1][j - 1];
        }
    }
    let mut best = f64::NEG_INFINITY;
    for x0 in 1..=w {
        for x1 in x0..=w {
            for y0 in 1..=h {
                for y1 in y0..=h {
                    let c = count[x1][y1] + count[x0 - 1][y0 - 1] - count[x0 - 1][y1] - count[x1][y0 - 1];
                    if c > 0 {
                        let s = weight[x1][y1] + weight[x0 - 1][y0 - 1] - weight[x0 - 1][y1] - weight[x1][y0 - 1];
                        best = best.max(s);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn max_rectangle_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..500 {
        let points = random_points(&mut rng);
        let best = brute_force(&points);
        let rect = max_rectangle(&points, false).unwrap();
        assert_eq!(rect.r_score, best, "case {case}: {points:?}");
        let inside: Vec<usize> = (0..points.len()).filter(|&i| rect.bounds.contains(&points[i].location)).collect();
        assert_eq!(rect.members, inside);
        assert_eq!(rect.r_score, inside.iter().map(|&i| points[i].value).sum::<f64>());

        let positive = max_rectangle(&points, true);
        assert_eq!(positive.is_some(), best > 0.0);
    }
}

#[test]
fn r_bursty_satisfies_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..500 {
        let points = random_points(&mut rng);
        let rects = r_bursty(&points);
        assert!(rects.len() <= points.len());
        let mut taken = vec![false; points.len()];
        for (k, r) in rects.iter().enumerate() {
            assert!(r.r_score > 0.0, "case {case}");
            assert!(!r.members.is_empty());
            assert_eq!(r.r_score, r.members.iter().map(|&i| points[i].value).sum::<f64>());
            for &m in &r.members {
                assert!(!taken[m], "case {case}: stream {m} reused");
                taken[m] = true;
                assert!(r.bounds.contains(&points[m].location));
            }
            let flagged: Vec<usize> = r.members.iter().copied().filter(|&m| points[m].value <= 0.0).collect();
            assert_eq!(r.nonbursty, flagged);
            if k == 0 {
                assert_eq!(r.r_score, brute_force(&points));
            }
        }
        assert_eq!(rects.is_empty(), brute_force(&points) <= 0.0);
    }
}
