//! Small statistics toolkit for correlated time series.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased (`n - 1`) sample variance; zero for fewer than two values.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Standard error of the mean of independent values.
pub fn standard_error(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    libm::sqrt(variance(x) / x.len() as f64)
}

/// Means of consecutive blocks of `size` values; a trailing partial block is dropped.
pub fn block_means(x: &[f64], size: usize) -> Vec<f64> {
    x.chunks_exact(size.max(1)).map(mean).collect()
}

/// Statistical inefficiency `g` from block averaging: the number of raw samples
/// per independent sample. `g = 1` for white noise and `(1+rho)/(1-rho)` for AR(1).
///
/// Uses the plateau of `size * var(block means) / var(x)` once blocks are long
/// enough; the block size is grown geometrically while at least `min_blocks` remain.
pub fn statistical_inefficiency(x: &[f64], min_blocks: usize) -> Result<f64> {
    let min_blocks = min_blocks.max(4);
    if x.len() < 2 * min_blocks {
        return Err(Error::InsufficientSampling(format!("{} samples are too few for block averaging", x.len())));
    }
    let var = variance(x);
    if var == 0.0 {
        return Ok(1.0);
    }
    let mut estimates = Vec::new();
    let mut size = 1;
    while x.len() / size >= min_blocks {
        let b = block_means(x, size);
        estimates.push(size as f64 * variance(&b) / var);
        size *= 2;
    }
    // the largest block sizes are noisy; average the last few of the plateau
    let take = estimates.len().min(3);
    let tail = &estimates[estimates.len() - take..];
    Ok(mean(tail).max(1.0))
}

/// Standard error of the mean of a correlated series.
pub fn correlated_standard_error(x: &[f64]) -> Result<f64> {
    let g = statistical_inefficiency(x, 16)?;
    Ok(libm::sqrt(g * variance(x) / x.len() as f64))
}

/// Time-origin averaged cross-correlation `C(l) = <a(t) b(t + l)>` for lags `0..=max_lag`.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!("series lengths {} and {} differ", a.len(), b.len())));
    }
    if max_lag >= a.len() {
        return Err(Error::Domain(format!("max lag {max_lag} needs more than {} samples", a.len())));
    }
    Ok((0..=max_lag)
        .map(|l| {
            let n = a.len() - l;
            (0..n).map(|t| a[t] * b[t + l]).sum::<f64>() / n as f64
        })
        .collect())
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
