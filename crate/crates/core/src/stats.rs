//! Comparison statistics: Kolmogorov–Smirnov distances, quantiles, total
//! variation, and log-log exponent fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{domain, Error, Result};

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return domain("empty sample");
    }
    if sample.iter().any(|x| x.is_nan()) {
        return domain("sample contains NaN");
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS distance `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value in both samples
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS distance against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let s = sorted(sample)?;
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

pub fn normal_cdf(mean: f64, sd: f64, x: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").cdf(x)
}

pub fn mean(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return domain("empty sample");
    }
    Ok(sample.iter().sum::<f64>() / sample.len() as f64)
}

/// Unbiased sample variance.
pub fn variance(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return domain("variance needs at least two values");
    }
    let m = mean(sample)?;
    Ok(sample.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (sample.len() - 1) as f64)
}

pub fn quantile(sample: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("quantile level {q} outside [0, 1]"));
    }
    let mut data = Data::new(sorted(sample)?);
    Ok(data.quantile(q))
}

pub fn median(sample: &[f64]) -> Result<f64> {
    quantile(sample, 0.5)
}

/// Total variation distance `½ Σ |p − q|` over the common support given.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return domain(format!("length mismatch {} vs {}", p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Empirical pmf of integer samples on `0..=max`; mass above `max` is dropped.
pub fn empirical_pmf(sample: &[usize], max: usize) -> Vec<f64> {
    let mut counts = vec![0.0; max + 1];
    for &x in sample.iter().filter(|&&x| x <= max) {
        counts[x] += 1.0;
    }
    let n = sample.len().max(1) as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Least-squares slope of `log y` against `log N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    /// 95% confidence band for the slope.
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if let Some(&(n, y)) = pairs.iter().find(|(n, y)| !(*n > 0.0 && *y > 0.0 && n.is_finite() && y.is_finite())) {
        return domain(format!("log-log fit needs positive finite values, got ({n}, {y})"));
    }
    let mut distinct: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return domain(format!("need at least 3 distinct N, got {}", distinct.len()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let m = pairs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = m - 2.0;
    let std_error = if dof > 0.0 { (rss / dof / sxx).sqrt() } else { 0.0 };
    let t = StudentsT::new(0.0, 1.0, dof.max(1.0))
        .map_err(|e| Error::Numerical(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        slope,
        intercept,
        std_error,
        lower: slope - t * std_error,
        upper: slope + t * std_error,
        points: pairs.len(),
    })
}
