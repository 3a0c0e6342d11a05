//! Moment skewness and a Kolmogorov–Smirnov log-normal fit.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::scalar::Scalar;

/// Smallest sample accepted by [`ks_lognormal`].
pub const KS_MIN_VALUES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {required} values, got {got}")]
    TooFewValues { required: usize, got: usize },
    #[error("values have zero variance")]
    ZeroVariance,
    #[error("value {value} at index {index} is not positive")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("log-values have zero spread; the log-normal fit is degenerate")]
    DegenerateFit,
    #[error("value at index {0} is not finite")]
    NonFinite(usize),
}

/// Biased Fisher-Pearson coefficient `g1 = m3 / m2^(3/2)`.
pub fn skewness<T: Scalar>(values: &[T]) -> Result<T, StatsError> {
    if values.len() < 3 {
        return Err(StatsError::TooFewValues { required: 3, got: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let (mut m2, mut m3) = (T::zero(), T::zero());
    for &v in values {
        let d = v - mean;
        m2 = m2 + d * d;
        m3 = m3 + d * d * d;
    }
    let (m2, m3) = (m2 / n, m3 / n);
    if m2 <= T::zero() {
        return Err(StatsError::ZeroVariance);
    }
    Ok(m3 / m2.powf(T::lit(1.5)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic Kolmogorov tail probability, not corrected for the two
    /// fitted parameters.
    pub p_value: f64,
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `Q(λ) = P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // P(K <= λ) = sqrt(2π)/λ Σ exp(-(2k-1)² π² / (8λ²)), converges fast for small λ
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut q = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        q += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * q).clamp(0.0, 1.0)
}

/// Fits `ln x ~ N(μ, σ²)` with `μ`, `σ` the mean and (population) standard
/// deviation of the log-values, then computes the one-sample KS statistic.
pub fn ks_lognormal(values: &[f64]) -> Result<KsResult, StatsError> {
    if values.len() < KS_MIN_VALUES {
        return Err(StatsError::TooFewValues { required: KS_MIN_VALUES, got: values.len() });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(StatsError::NonFinite(index));
        }
        if value <= 0.0 {
            return Err(StatsError::NonPositiveValue { index, value });
        }
    }
    let n = values.len();
    let nf = n as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / nf;
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / nf).sqrt();
    if sigma <= f64::EPSILON * mu.abs().max(1.0) {
        return Err(StatsError::DegenerateFit);
    }
    let mut sorted = logs;
    sorted.sort_by(f64::total_cmp);
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let f = normal_cdf((l - mu) / sigma);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(nf.sqrt() * d), mu, sigma, n })
}
