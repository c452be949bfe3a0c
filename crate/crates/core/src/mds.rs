//! Classical (Torgerson) multidimensional scaling.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::corpus::GeoPoint;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Embeds `n` items in the plane so that Euclidean distances approximate the
/// given pairwise distances.
///
/// Squared distances are double-centred into a Gram matrix whose two leading
/// eigenpairs give the coordinates. Negative eigenvalues (non-Euclidean
/// input) are clamped to zero.
pub fn classical_mds(distances: &[Vec<f64>]) -> Result<Vec<GeoPoint>> {
    let n = distances.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    for (i, row) in distances.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidDistanceMatrix(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "entry ({i}, {j}) = {d} is not a finite nonnegative distance"
                )));
            }
            let mirror = distances[j][i];
            if (d - mirror).abs() > SYMMETRY_TOL * d.abs().max(mirror.abs()).max(1.0) {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "entries ({i}, {j}) and ({j}, {i}) differ"
                )));
            }
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidDistanceMatrix(format!("diagonal entry {i} is nonzero")));
        }
    }

    let sq = DMatrix::from_fn(n, n, |i, j| distances[i][j] * distances[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let axis = |k: usize| -> Vec<f64> {
        match order.get(k) {
            Some(&idx) => {
                let scale = eig.eigenvalues[idx].max(0.0).sqrt();
                eig.eigenvectors.column(idx).iter().map(|v| v * scale).collect()
            }
            None => vec![0.0; n],
        }
    };
    let xs = axis(0);
    let ys = axis(1);
    Ok(xs.into_iter().zip(ys).map(|(x, y)| GeoPoint::new(x, y)).collect())
}
