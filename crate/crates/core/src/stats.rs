//! Statistical utilities for the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub const KS_MIN_SAMPLES: usize = 20;
pub const VARIANCE_CI_MIN_SAMPLES: usize = 30;

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult, StatsError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let f = cdf(*v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// Two-sample Kolmogorov-Smirnov test. Ties are handled by advancing both
/// samples past equal values before comparing the empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    let got = a.len().min(b.len());
    if got < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got,
        });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n * m / (n + m)),
    })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let num: f64 = x
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCi {
    pub variance: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    /// Sample excess kurtosis above 1: the normal-theory interval is too narrow.
    pub heavy_tail: bool,
}

/// Normal-theory chi-square interval for the variance.
pub fn variance_ci(samples: &[f64], level: f64) -> Result<VarianceCi, StatsError> {
    let n = samples.len();
    if n < VARIANCE_CI_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: VARIANCE_CI_MIN_SAMPLES,
            got: n,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Invalid(format!("level {level} outside (0, 1)")));
    }
    let s2 = sample_variance(samples);
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| StatsError::Invalid(e.to_string()))?;
    let alpha = 1.0 - level;
    let m = mean(samples);
    let m4 = samples.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
    let m2 = samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let excess = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    Ok(VarianceCi {
        variance: s2,
        low: dof * s2 / chi.inverse_cdf(1.0 - alpha / 2.0),
        high: dof * s2 / chi.inverse_cdf(alpha / 2.0),
        level,
        heavy_tail: excess > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit. Cells are pooled left to right until each has
/// expected count at least 5; the remainder joins the last cell.
pub fn chi_square_gof(
    observed: &[u64],
    expected_probs: &[f64],
) -> Result<ChiSquareResult, StatsError> {
    if observed.len() != expected_probs.len() {
        return Err(StatsError::Invalid(
            "observed and expected lengths differ".into(),
        ));
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = expected_probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (obs, p) in observed.iter().zip(expected_probs) {
        o += *obs as f64;
        e += p / psum * total as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    if cells.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 10,
            got: total as usize,
        });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| StatsError::Invalid(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: 1.0 - chi.cdf(statistic),
    })
}

/// CDF of `N(0, variance)`.
pub fn normal_cdf(variance: f64) -> impl Fn(f64) -> f64 {
    let d = Normal::new(0.0, variance.sqrt()).expect("positive variance");
    move |x| d.cdf(x)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = replicate_rng(seed, 0, 0);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + shift
            })
            .collect()
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a = normals(1, 1000, 0.0);
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
        let b = normals(2, 1000, 0.5);
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 0.01);
        assert!(ks_one_sample(&a, normal_cdf(1.0)).unwrap().p_value > 0.001);
        assert!(matches!(
            ks_one_sample(&a[..10], normal_cdf(1.0)),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn ks_calibration() {
        let mut pass = 0;
        for t in 0..100 {
            let x = normals(100 + t, 10_000, 0.0);
            if ks_one_sample(&x, normal_cdf(1.0)).unwrap().p_value > 0.01 {
                pass += 1;
            }
        }
        assert!(pass >= 96, "{pass}");
    }

    #[test]
    fn kolmogorov_reference_values() {
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn variance_interval() {
        let ci = variance_ci(&[2.0; 40], 0.95).unwrap();
        assert_eq!((ci.low, ci.high), (0.0, 0.0));
        assert!(variance_ci(&[1.0; 10], 0.95).is_err());
        let mut cover = 0;
        for t in 0..200 {
            let x: Vec<f64> = normals(500 + t, 1000, 0.0)
                .iter()
                .map(|v| 2.0 * v)
                .collect();
            let ci = variance_ci(&x, 0.95).unwrap();
            if ci.low <= 4.0 && 4.0 <= ci.high {
                cover += 1;
            }
        }
        assert!((180..=198).contains(&cover), "{cover}");
    }

    #[test]
    fn chi_square_detects_mismatch() {
        let ok = chi_square_gof(&[250, 500, 250], &[0.25, 0.5, 0.25]).unwrap();
        assert!(ok.p_value > 0.9);
        let bad = chi_square_gof(&[400, 400, 200], &[0.25, 0.5, 0.25]).unwrap();
        assert!(bad.p_value < 1e-6);
    }
}
