use serde::Serialize;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100_000;
const TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    /// [n × 2] scores on the first two principal components.
    pub coords: Tensor,
    pub components: [Vec<f64>; 2],
    /// Eigenvalues of the covariance, descending.
    pub variances: [f64; 2],
    pub mean: Vec<f64>,
}

fn power_iteration(cov: &[f64], d: usize, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut v = start;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut w = vec![0.0; d];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = cov[i * d..(i + 1) * d].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (v, 0.0);
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        lambda = norm;
        if delta < TOLERANCE {
            break;
        }
    }
    // Fix the sign so the largest-magnitude coordinate is positive.
    let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (v, lambda)
}

/// Top-2 principal components of the rows of `features` by power iteration
/// with deflation.
pub fn project_2d(features: &Tensor) -> Result<Projection> {
    if !features.is_matrix() || features.rows() < 3 || features.cols() < 2 {
        return Err(Error::shape("project_2d", features.shape(), &[3, 2]));
    }
    let (n, d) = (features.rows(), features.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        mean.iter_mut().zip(features.row(r)).for_each(|(m, x)| *m += x / n as f64);
    }
    let mut cov = vec![0.0; d * d];
    for r in 0..n {
        let c: Vec<f64> = features.row(r).iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += c[i] * c[j] / (n - 1) as f64;
            }
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    // Deterministic, generically non-orthogonal starting vector.
    let start = |offset: f64| (0..d).map(|i| 1.0 + offset * (i as f64 + 1.0).sqrt()).collect::<Vec<_>>();
    let (v1, l1) = power_iteration(&cov, d, start(0.1));
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] -= l1 * v1[i] * v1[j];
        }
    }
    let (mut v2, l2) = power_iteration(&cov, d, start(-0.37));
    // Re-orthogonalize against round-off.
    let proj: f64 = v1.iter().zip(&v2).map(|(a, b)| a * b).sum();
    v2.iter_mut().zip(&v1).for_each(|(b, a)| *b -= proj * a);
    let norm = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(l2 > 1e-12 * trace.max(f64::MIN_POSITIVE)) || norm == 0.0 {
        return Err(Error::numerical("project_2d", "features have rank < 2"));
    }
    v2.iter_mut().for_each(|x| *x /= norm);
    let mut coords = Vec::with_capacity(2 * n);
    for r in 0..n {
        let c: Vec<f64> = features.row(r).iter().zip(&mean).map(|(x, m)| x - m).collect();
        coords.push(c.iter().zip(&v1).map(|(a, b)| a * b).sum());
        coords.push(c.iter().zip(&v2).map(|(a, b)| a * b).sum());
    }
    Ok(Projection { coords: Tensor::matrix(n, 2, coords)?, components: [v1, v2], variances: [l1, l2], mean })
}
