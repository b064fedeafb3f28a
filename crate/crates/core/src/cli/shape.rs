//! Shape of a `log10 ψ̂` curve against `|Q|`.

use serde::Serialize;

use super::commands::SweepRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Shape {
    UShape,
    SShape,
    Flat,
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Shape::UShape => "U_SHAPE",
            Shape::SShape => "S_SHAPE",
            Shape::Flat => "FLAT",
        })
    }
}

/// Least-squares fit `y ≈ a x² + b x + c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub se_a: f64,
    /// Residual standard error.
    pub sigma: f64,
    pub fitted: Vec<f64>,
}

impl QuadraticFit {
    pub fn vertex(&self) -> f64 {
        -self.b / (2.0 * self.a)
    }
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut a = m;
    let mut inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for k in 0..3 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col];
                for k in 0..3 {
                    a[row][k] -= f * a[col][k];
                    inv[row][k] -= f * inv[col][k];
                }
            }
        }
    }
    Some(inv)
}

pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<QuadraticFit> {
    let n = xs.len();
    if n < 4 || ys.len() != n {
        return Err(Error::InsufficientData(format!("quadratic fit needs at least 4 points, got {n}")));
    }
    // centring keeps the normal equations well conditioned
    let mean = xs.iter().sum::<f64>() / n as f64;
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let z = x - mean;
        let row = [z * z, z, 1.0];
        for i in 0..3 {
            xty[i] += row[i] * y;
            for j in 0..3 {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert3(xtx).ok_or_else(|| Error::InsufficientData("fewer than 3 distinct group sizes".into()))?;
    let coef: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let fitted: Vec<f64> = xs.iter().map(|&x| {
        let z = x - mean;
        coef[0] * z * z + coef[1] * z + coef[2]
    }).collect();
    let rss: f64 = fitted.iter().zip(ys).map(|(f, y)| (y - f).powi(2)).sum();
    let sigma = (rss / (n - 3) as f64).sqrt();
    let (a, bz, cz) = (coef[0], coef[1], coef[2]);
    Ok(QuadraticFit {
        a,
        b: bz - 2.0 * a * mean,
        c: a * mean * mean - bz * mean + cz,
        se_a: sigma * inv[0][0].sqrt(),
        sigma,
        fitted,
    })
}

/// Classifies `(|Q|, log10 ψ̂)` points, sorted by `|Q|`.
pub fn classify_points(xs: &[f64], ys: &[f64]) -> Result<Shape> {
    let fit = fit_quadratic(xs, ys)?;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let slack = 2.0 * fit.sigma;
    if fit.a > 2.0 * fit.se_a && fit.vertex() > lo && fit.vertex() < hi {
        return Ok(Shape::UShape);
    }
    let nondecreasing = fit.fitted.windows(2).all(|w| w[1] - w[0] >= -slack);
    let rise = fit.fitted[fit.fitted.len() - 1] - fit.fitted[0];
    if nondecreasing && rise > slack {
        return Ok(Shape::SShape);
    }
    Ok(Shape::Flat)
}

/// Classifies one panel of a sweep; rows without a finite `log10 ψ̂` are skipped.
pub fn classify_shape(rows: &[SweepRow]) -> Result<Shape> {
    let mut pts: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.log10_psi.filter(|y| y.is_finite()).map(|y| (r.qsize as f64, y))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    classify_points(&xs, &ys)
}
