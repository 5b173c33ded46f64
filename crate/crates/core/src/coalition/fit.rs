//! Least-squares fit of `a - b / (n - c)` by Levenberg-Marquardt.
//!
//! The pole is kept below the data by fitting `s` with
//! `c = min(n) - exp(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
    pub residual_sum_squares: f64,
    pub iterations: usize,
}

impl RationalFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a - self.b / (n - self.c)
    }
}

const MAX_ITERATIONS: usize = 500;

pub fn fit_rational(points: &[(f64, f64)]) -> Result<RationalFit> {
    if points.len() < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(n, v)| !n.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite data point".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("n values must be distinct".into()));
    }
    let n_min = xs[0];
    let y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);

    let model = |p: &[f64; 3], x: f64| p[0] - p[1] / (x - (n_min - p[2].exp()));
    let rss = |p: &[f64; 3]| points.iter().map(|&(x, y)| (y - model(p, x)).powi(2)).sum::<f64>();

    let mut p = [y_max, 1.0, 0.0];
    let mut cost = rss(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // normal equations J^T J d = J^T r
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in points {
            let e = p[2].exp();
            let d = x - n_min + e;
            let r = y - model(&p, x);
            let grad = [1.0, -1.0 / d, p[1] * e / (d * d)];
            for i in 0..3 {
                jtr[i] += grad[i] * r;
                for j in 0..3 {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let trial_cost = rss(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    lambda = f64::INFINITY;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || !lambda.is_finite() || cost < 1e-30 {
            break;
        }
    }
    if !cost.is_finite() || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure { reason: "non-finite parameters".into(), rss: cost });
    }
    let mean = points.iter().map(|q| q.1).sum::<f64>() / points.len() as f64;
    let total: f64 = points.iter().map(|q| (q.1 - mean).powi(2)).sum();
    let r_squared = if total > 1e-300 {
        (1.0 - cost / total).clamp(0.0, 1.0)
    } else if cost <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(RationalFit {
        a: p[0],
        b: p[1],
        c: n_min - p[2].exp(),
        r_squared,
        residual_sum_squares: cost,
        iterations,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for k in col..3 {
                m[r][k] -= f * m[col][k];
            }
            v[r] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (v[i] - s) / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// For fixed `c` the model is linear in `(a, b)`; scanning `c` gives
    /// the global least-squares optimum independently of the LM path.
    fn projected_optimum(points: &[(f64, f64)], c_lo: f64, c_hi: f64) -> (f64, f64, f64, f64) {
        let solve = |c: f64| {
            let k = points.len() as f64;
            let (mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0);
            for &(x, y) in points {
                let u = -1.0 / (x - c);
                su += u;
                suu += u * u;
                sy += y;
                suy += u * y;
            }
            let b = (k * suy - su * sy) / (k * suu - su * su);
            let a = (sy - b * su) / k;
            let rss: f64 = points.iter().map(|&(x, y)| (y - a + b / (x - c)).powi(2)).sum();
            (a, b, c, rss)
        };
        let mut best = solve(c_lo);
        let steps = 200_000;
        for i in 0..=steps {
            let c = c_lo + (c_hi - c_lo) * i as f64 / steps as f64;
            let cand = solve(c);
            if cand.3 < best.3 {
                best = cand;
            }
        }
        best
    }

    const TABLE: [f64; 14] = [
        0.0132, 0.0339, 0.0516, 0.0654, 0.0753, 0.0847, 0.0909, 0.0954, 0.1007, 0.1066, 0.1074,
        0.1110, 0.1154, 0.1184,
    ];

    fn table_points() -> Vec<(f64, f64)> {
        TABLE.iter().enumerate().map(|(k, &v)| ((k + 2) as f64, v)).collect()
    }

    #[test]
    fn reference_values_fit() {
        let f = fit_rational(&table_points()).unwrap();
        assert!((f.a - 0.163).abs() < 0.005, "{f:?}");
        assert!((f.b - 0.84).abs() < 0.02, "{f:?}");
        assert!((f.c + 3.6).abs() < 0.1, "{f:?}");
        assert!((f.r_squared - 0.9991).abs() < 3e-4, "{f:?}");
        let (a, b, c, rss) = projected_optimum(&table_points(), -20.0, 1.99);
        assert!((f.a - a).abs() < 1e-4 && (f.b - b).abs() < 1e-3 && (f.c - c).abs() < 1e-2);
        assert!(f.residual_sum_squares <= rss * (1.0 + 1e-6));
    }

    #[test]
    fn exact_synthetic_data() {
        let pts: Vec<(f64, f64)> = (3..=10).map(|n| (n as f64, 0.2 - 0.5 / (n as f64 - 1.0))).collect();
        let f = fit_rational(&pts).unwrap();
        assert!((f.a - 0.2).abs() < 1e-6 && (f.b - 0.5).abs() < 1e-5 && (f.c - 1.0).abs() < 1e-5, "{f:?}");
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|n| (n as f64, 0.3)).collect();
        let f = fit_rational(&pts).unwrap();
        assert!(f.b.abs() < 1e-6, "{f:?}");
        assert!((f.eval(3.5) - 0.3).abs() < 1e-9);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(fit_rational(&[(1.0, 0.0), (2.0, 0.1), (3.0, 0.2)]).is_err());
        assert!(fit_rational(&[(1.0, 0.0), (1.0, 0.1), (3.0, 0.2), (4.0, 0.2)]).is_err());
        assert!(fit_rational(&[(1.0, f64::NAN), (2.0, 0.1), (3.0, 0.2), (4.0, 0.2)]).is_err());
    }
}
