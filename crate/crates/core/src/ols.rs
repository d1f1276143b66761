//! Ordinary least squares with heteroskedasticity-consistent standard errors.
//!
//! The sandwich is `(X'X)^-1 X' diag(w_i e_i^2) X (X'X)^-1`; the HC variant
//! decides the weights. p-values use a Student-t with `n - k` degrees of
//! freedom.

use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, PivotedQr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceKind {
    /// Homoskedastic `s^2 (X'X)^-1`.
    Classical,
    Hc0,
    /// `n / (n - k)` scaled White estimator.
    #[default]
    Hc1,
    Hc2,
    Hc3,
}

/// Significance marker at the 10%, 5% and 1% levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Stars::Three
        } else if p < 0.05 {
            Stars::Two
        } else if p < 0.10 {
            Stars::One
        } else {
            Stars::None
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub stars: Vec<Stars>,
    pub n_obs: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub residuals: Vec<f64>,
    pub covariance: CovarianceKind,
}

impl RegressionResult {
    pub fn df_resid(&self) -> usize {
        self.n_obs - self.coefficients.len()
    }

    /// Coefficient on the first non-constant regressor.
    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn slope_se(&self) -> f64 {
        self.robust_se[1]
    }

    pub fn slope_p(&self) -> f64 {
        self.p_values[1]
    }
}

pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<RegressionResult> {
    fit_ols_with(x, y, CovarianceKind::Hc1)
}

pub fn fit_ols_with(x: &Matrix, y: &[f64], kind: CovarianceKind) -> Result<RegressionResult> {
    let (n, k) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Invalid(format!("design has {n} rows but response has {}", y.len())));
    }
    if k == 0 || (0..n).any(|i| x.get(i, 0) != 1.0) {
        return Err(Error::Invalid("first design column must be the constant 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewObservations { needed: k + 1, available: n });
    }
    if y.iter().any(|v| !v.is_finite()) || (0..n).any(|i| x.row(i).iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("regression input".into()));
    }

    let qr = PivotedQr::new(x, y);
    if qr.rank() < k {
        return Err(Error::RankDeficient { rank: qr.rank(), cols: k });
    }
    let beta = qr.solve();
    let xtx_inv = qr.inverse_gram().ok_or(Error::Singular)?;

    let residuals: Vec<f64> = (0..n).map(|i| y[i] - dot(x.row(i), &beta)).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let df = (n - k) as f64;
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df;

    let cov = covariance(x, &residuals, &xtx_inv, kind);
    let robust_se: Vec<f64> = (0..k).map(|j| cov.get(j, j).max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = beta.iter().zip(&robust_se).map(|(b, s)| b / s).collect();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Invalid(e.to_string()))?;
    let p_values: Vec<f64> = t_stats
        .iter()
        .map(|t| if t.is_nan() { 1.0 } else { (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0) })
        .collect();
    let stars = p_values.iter().map(|&p| Stars::from_p(p)).collect();

    Ok(RegressionResult {
        coefficients: beta,
        robust_se,
        t_stats,
        p_values,
        stars,
        n_obs: n,
        r2,
        adj_r2,
        residuals,
        covariance: kind,
    })
}

/// Regression of `y` on a constant and one regressor.
pub fn fit_bivariate(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::Invalid("regressor and response lengths differ".into()));
    }
    let design = Matrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    fit_ols(&design, y)
}

fn covariance(x: &Matrix, e: &[f64], xtx_inv: &Matrix, kind: CovarianceKind) -> Matrix {
    let (n, k) = (x.rows(), x.cols());
    let df = (n - k) as f64;
    if kind == CovarianceKind::Classical {
        let s2 = e.iter().map(|v| v * v).sum::<f64>() / df;
        return Matrix::from_fn(k, k, |a, b| s2 * xtx_inv.get(a, b));
    }
    let leverage = |i: usize| -> f64 {
        let xi = x.row(i);
        (0..k).map(|a| xi[a] * (0..k).map(|b| xtx_inv.get(a, b) * xi[b]).sum::<f64>()).sum()
    };
    let mut meat = Matrix::zeros(k, k);
    for i in 0..n {
        let w = match kind {
            CovarianceKind::Hc0 | CovarianceKind::Hc1 => e[i] * e[i],
            CovarianceKind::Hc2 => e[i] * e[i] / (1.0 - leverage(i)),
            CovarianceKind::Hc3 => e[i] * e[i] / (1.0 - leverage(i)).powi(2),
            CovarianceKind::Classical => unreachable!(),
        };
        let xi = x.row(i);
        for a in 0..k {
            for b in 0..k {
                meat.set(a, b, meat.get(a, b) + w * xi[a] * xi[b]);
            }
        }
    }
    let scale = if kind == CovarianceKind::Hc1 { n as f64 / df } else { 1.0 };
    let half = Matrix::from_fn(k, k, |a, b| (0..k).map(|c| xtx_inv.get(a, c) * meat.get(c, b)).sum());
    Matrix::from_fn(k, k, |a, b| scale * (0..k).map(|c| half.get(a, c) * xtx_inv.get(c, b)).sum::<f64>())
}
