//! Least-squares fits on standardized features.

use serde::{Deserialize, Serialize};

/// Linear predictor in original feature space, with the standardization used
/// to fit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Weights on standardized features.
    pub std_weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut y = self.intercept;
        for j in 0..x.len() {
            y += self.std_weights[j] * (x[j] - self.mean[j]) / self.scale[j];
        }
        y
    }

    /// Weights in the original (unstandardized) feature space.
    pub fn weights(&self) -> Vec<f64> {
        self.std_weights
            .iter()
            .zip(&self.scale)
            .map(|(w, s)| w / s)
            .collect()
    }

    /// Intercept in the original feature space.
    pub fn raw_intercept(&self) -> f64 {
        self.intercept
            - self
                .std_weights
                .iter()
                .zip(self.mean.iter().zip(&self.scale))
                .map(|(w, (m, s))| w * m / s)
                .sum::<f64>()
    }
}

/// Solves `M w = r` in place by Gaussian elimination with partial pivoting
/// (rows scanned in index order). Returns `None` if a pivot is below `eps`.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>, eps: f64) -> Option<Vec<f64>> {
    let n = r.len();
    for c in 0..n {
        let mut p = c;
        for i in c + 1..n {
            if m[i][c].abs() > m[p][c].abs() {
                p = i;
            }
        }
        if m[p][c].abs() <= eps {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[i][k] -= f * m[c][k];
                }
                r[i] -= f * r[c];
            }
        }
    }
    let mut w = vec![0.0; n];
    for c in (0..n).rev() {
        let mut s = r[c];
        for k in c + 1..n {
            s -= m[c][k] * w[k];
        }
        w[c] = s / m[c][c];
    }
    Some(w)
}

/// Fits `y ~ X` on standardized features. Zero-variance features get weight
/// zero. With `lambda = 0` the normal equations are solved directly and a
/// singular system falls back to ridge with `fallback_lambda`.
pub fn fit_linear(xs: &[Vec<f64>], ys: &[f64], lambda: f64, fallback_lambda: f64) -> LinearModel {
    let n = xs.len();
    let f = xs.first().map_or(0, |x| x.len());
    let nf = n.max(1) as f64;
    let mut mean = vec![0.0; f];
    for x in xs {
        for j in 0..f {
            mean[j] += x[j] / nf;
        }
    }
    let mut scale = vec![0.0; f];
    for x in xs {
        for j in 0..f {
            scale[j] += (x[j] - mean[j]).powi(2) / nf;
        }
    }
    let active: Vec<usize> = (0..f).filter(|&j| scale[j] > 1e-24).collect();
    for s in &mut scale {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    let y_mean = ys.iter().sum::<f64>() / nf;

    // Standardized features have zero mean, so the intercept decouples.
    let z = |x: &Vec<f64>, j: usize| (x[j] - mean[j]) / scale[j];
    let a = active.len();
    let mut gram = vec![vec![0.0; a]; a];
    let mut rhs = vec![0.0; a];
    for (x, &y) in xs.iter().zip(ys) {
        for (p, &jp) in active.iter().enumerate() {
            let zp = z(x, jp);
            rhs[p] += zp * (y - y_mean);
            for (q, &jq) in active.iter().enumerate() {
                gram[p][q] += zp * z(x, jq);
            }
        }
    }
    let with_ridge = |l: f64| {
        let mut g = gram.clone();
        for (p, row) in g.iter_mut().enumerate() {
            row[p] += l;
        }
        g
    };
    let solved = solve_dense(with_ridge(lambda), rhs.clone(), 1e-10 * nf)
        .or_else(|| solve_dense(with_ridge(lambda.max(fallback_lambda)), rhs.clone(), 0.0))
        .unwrap_or_else(|| vec![0.0; a]);
    let mut std_weights = vec![0.0; f];
    for (p, &j) in active.iter().enumerate() {
        std_weights[j] = solved[p];
    }
    LinearModel {
        mean,
        scale,
        std_weights,
        intercept: y_mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_plane() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 5.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] + 7.0).collect();
        let m = fit_linear(&xs, &ys, 0.0, 1e-6);
        assert!((m.weights()[0] - 3.0).abs() < 1e-9);
        assert_eq!(m.weights()[1], 0.0);
        assert!((m.raw_intercept() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_uses_ridge() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let m = fit_linear(&xs, &ys, 0.0, 1e-6);
        for x in &xs {
            assert!((m.predict(x) - x[0]).abs() < 1e-3);
        }
    }
}
