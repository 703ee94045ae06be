//! Pearson correlation with a zero-slope t-test, and least-squares polynomial trends.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::resampling::percentile;
use crate::rng;

const TREND_STREAM: u64 = 3 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    /// Two-sided p-value for zero slope, t-distribution with `n − 2` df.
    pub p_value: f64,
    pub n_points: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson's r with the least-squares line and its non-correlation p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { points: n, degree: 1 });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let slope = sxy / sxx;
    let df = (n - 2) as f64;
    let one_minus = (1.0 - r * r).max(0.0);
    let p_value = if one_minus == 0.0 {
        0.0
    } else {
        let t2 = r * r * df / one_minus;
        regularized_incomplete_beta(df / (df + t2), df / 2.0, 0.5)
    };
    Ok(RegressionResult {
        slope,
        intercept: my - slope * mx,
        r,
        p_value: p_value.clamp(0.0, 1.0),
        n_points: n,
    })
}

/// Two-sided Student-t tail probability `P(|T| > |t|)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Lanczos approximation (g = 7, 9 terms).
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
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        for coeff in [even, -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))] {
            d = 1.0 + coeff * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + coeff / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Bootstrap settings for a trend band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandOptions {
    /// 0 disables the band.
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    /// Number of evenly spaced x values the band is evaluated on.
    pub grid_points: usize,
    pub execution: Execution,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            replicates: 0,
            level: 0.95,
            seed: rng::DEFAULT_SEED,
            grid_points: 50,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub fit: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub degree: usize,
    /// Ascending powers of x.
    pub coefficients: Vec<f64>,
    pub band: Option<Vec<BandPoint>>,
    #[serde(skip)]
    scaled: ScaledPoly,
}

impl TrendFit {
    pub fn evaluate(&self, x: f64) -> f64 {
        self.scaled.evaluate(x)
    }

    /// `(x, fit)` on `points` evenly spaced values spanning `[lo, hi]`.
    pub fn grid(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        grid(lo, hi, points)
            .into_iter()
            .map(|x| (x, self.evaluate(x)))
            .collect()
    }
}

/// Polynomial in the standardized variable `(x − center) / scale`.
#[derive(Clone, Debug, Default, PartialEq)]
struct ScaledPoly {
    center: f64,
    scale: f64,
    coef: Vec<f64>,
}

impl ScaledPoly {
    fn evaluate(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.scale;
        self.coef.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// Expands back into ascending powers of raw x.
    fn raw_coefficients(&self) -> Vec<f64> {
        let deg = self.coef.len() - 1;
        let mut out = vec![0.0; deg + 1];
        for (k, &a) in self.coef.iter().enumerate() {
            let factor = a / self.scale.powi(k as i32);
            let mut binom = 1.0;
            for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                *o += factor * binom * (-self.center).powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

fn fit_scaled(x: &[f64], y: &[f64], degree: usize) -> Result<ScaledPoly> {
    let n = x.len();
    let center = mean(x);
    let var = x.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n as f64;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let dim = degree + 1;

    // Normal equations on the standardized design.
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut aty = vec![0.0; dim];
    for (&xi, &yi) in x.iter().zip(y) {
        let z = (xi - center) / scale;
        let mut powers = vec![1.0; dim];
        for k in 1..dim {
            powers[k] = powers[k - 1] * z;
        }
        for r in 0..dim {
            aty[r] += powers[r] * yi;
            for c in 0..dim {
                ata[r][c] += powers[r] * powers[c];
            }
        }
    }
    let coef = solve(ata, aty).ok_or(Error::InsufficientPoints { points: n, degree })?;
    Ok(ScaledPoly { center, scale, coef })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= norm * 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            if f == 0.0 {
                continue;
            }
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn distinct(x: &[f64]) -> usize {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Least-squares polynomial of the given degree, with an optional percentile
/// band from resampling the points with replacement.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize, band: &BandOptions) -> Result<TrendFit> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    if distinct(x) < degree + 1 {
        return Err(Error::InsufficientPoints {
            points: x.len(),
            degree,
        });
    }
    let scaled = fit_scaled(x, y, degree)?;
    let band_points = if band.replicates == 0 {
        None
    } else {
        Some(bootstrap_band(x, y, degree, &scaled, band))
    };
    Ok(TrendFit {
        degree,
        coefficients: scaled.raw_coefficients(),
        band: band_points,
        scaled,
    })
}

fn bootstrap_band(x: &[f64], y: &[f64], degree: usize, fit: &ScaledPoly, opts: &BandOptions) -> Vec<BandPoint> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xs = grid(lo, hi, opts.grid_points);
    let n = x.len();
    // Resamples with too few distinct x cannot be fitted and are skipped.
    let curves: Vec<Option<Vec<f64>>> = par::map_indexed(opts.execution, opts.replicates, |rep| {
        let mut r = rng::stream(opts.seed, TREND_STREAM, rep as u64);
        let (mut bx, mut by) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let i = r.random_range(0..n);
            bx.push(x[i]);
            by.push(y[i]);
        }
        if distinct(&bx) < degree + 1 {
            return None;
        }
        let poly = fit_scaled(&bx, &by, degree).ok()?;
        Some(xs.iter().map(|&g| poly.evaluate(g)).collect())
    });
    let curves: Vec<Vec<f64>> = curves.into_iter().flatten().collect();
    if curves.len() < opts.replicates {
        log::warn!(
            "{} of {} band resamples were degenerate and skipped",
            opts.replicates - curves.len(),
            opts.replicates
        );
    }
    let alpha = (1.0 - opts.level) / 2.0;
    xs.iter()
        .enumerate()
        .map(|(gi, &gx)| {
            let mut vals: Vec<f64> = curves.iter().map(|c| c[gi]).collect();
            vals.sort_by(f64::total_cmp);
            let fitted = fit.evaluate(gx);
            let (lower, upper) = if vals.is_empty() {
                (fitted, fitted)
            } else {
                (percentile(&vals, alpha), percentile(&vals, 1.0 - alpha))
            };
            BandPoint {
                x: gx,
                fit: fitted,
                lower,
                upper,
            }
        })
        .collect()
}
