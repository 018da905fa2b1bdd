//! Ordinary least squares with Student-t inference.
//!
//! Predictors are z-scored before fitting; the intercept column is added
//! here. The t distribution tail comes from the regularized incomplete beta
//! function evaluated by continued fraction.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("predictor `{0}` has zero variance")]
    ConstantPredictor(String),
    #[error("design matrix is singular")]
    Singular,
    #[error("need more observations ({got}) than coefficients ({params})")]
    TooFewRows { got: usize, params: usize },
    #[error("column `{name}` has {got} values, expected {expected}")]
    Length { name: String, expected: usize, got: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
}

/// One row of a regression table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    /// Intercept first, then one entry per predictor in input order.
    pub coefficients: Vec<Coefficient>,
    pub residuals: Vec<f64>,
    pub df: usize,
    pub r_squared: f64,
    /// Residual standard error.
    pub sigma: f64,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Z-scores a column with the sample standard deviation.
pub fn standardize(xs: &[f64]) -> Option<Vec<f64>> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0 && sd.is_finite()) || sd <= 1e-12 * m.abs().max(1.0) {
        return None;
    }
    Some(xs.iter().map(|x| (x - m) / sd).collect())
}

/// Cholesky factor of a symmetric positive definite matrix (row-major).
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 1e-12 * a[i][i].abs().max(1.0)) {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}

/// Fits `y = b0 + Σ bj·z(xj)` where `z` z-scores each predictor.
pub fn ols_standardized(y: &[f64], predictors: &[(&str, &[f64])]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p = predictors.len() + 1;
    if n <= p {
        return Err(StatsError::TooFewRows { got: n, params: p });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("response".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for (name, xs) in predictors {
        if xs.len() != n {
            return Err(StatsError::Length {
                name: name.to_string(),
                expected: n,
                got: xs.len(),
            });
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(name.to_string()));
        }
        columns.push(standardize(xs).ok_or_else(|| StatsError::ConstantPredictor(name.to_string()))?);
    }
    ols(y, &columns, predictors.iter().map(|(n, _)| *n))
}

/// Plain OLS on explicit design columns (first column is the intercept).
fn ols<'a>(y: &[f64], columns: &[Vec<f64>], names: impl Iterator<Item = &'a str>) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p = columns.len();
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| dot(&columns[i], &columns[j])).collect())
        .collect();
    let xty: Vec<f64> = columns.iter().map(|c| dot(c, y)).collect();
    let l = cholesky(&xtx).ok_or(StatsError::Singular)?;
    let mut beta = cholesky_solve(&l, &xty);

    let fitted: Vec<f64> = (0..n).map(|i| (0..p).map(|j| columns[j][i] * beta[j]).sum()).collect();
    let mut residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    // one step of iterative refinement keeps residuals orthogonal to the
    // design at machine precision
    let correction = cholesky_solve(&l, &columns.iter().map(|c| dot(c, &residuals)).collect::<Vec<_>>());
    for (b, c) in beta.iter_mut().zip(&correction) {
        *b += c;
    }
    for (i, r) in residuals.iter_mut().enumerate() {
        *r -= (0..p).map(|j| columns[j][i] * correction[j]).sum::<f64>();
    }

    let df = n - p;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let y_mean = mean(y);
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    // a perfect fit leaves only rounding noise in the residuals
    let exact = rss.sqrt() <= 1e-12 * scale * (n as f64).sqrt();
    let sigma2 = if exact { 0.0 } else { rss / df as f64 };
    let names: Vec<&str> = std::iter::once("intercept").chain(names).collect();
    let coefficients = (0..p)
        .map(|j| {
            let mut unit = vec![0.0; p];
            unit[j] = 1.0;
            let inv_jj = cholesky_solve(&l, &unit)[j];
            let std_error = (sigma2 * inv_jj).sqrt();
            let estimate = beta[j];
            let (t, pval) = if std_error > 0.0 {
                let t = estimate / std_error;
                (t, student_t_two_sided(t, df as f64))
            } else if estimate.abs() <= 1e-12 * scale {
                // exact zero effect with a perfect fit: no evidence either way
                (0.0, 1.0)
            } else {
                (estimate.signum() * f64::INFINITY, 0.0)
            };
            Coefficient {
                name: names[j].to_string(),
                estimate,
                std_error,
                t,
                p: pval,
            }
        })
        .collect();
    Ok(OlsFit {
        coefficients,
        residuals,
        df,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 0.0 },
        sigma: sigma2.sqrt(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for Student's t with `df`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Lower-tail CDF of Student's t.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = student_t_two_sided(t, df) / 2.0;
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
