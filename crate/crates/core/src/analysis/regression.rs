//! Log-log slope fits of error against tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fidelity::Estimate;
use crate::error::{Error, Result};
use crate::rng::mix64;

pub const SLOPE_RESAMPLES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Slope of `log10 err` against `log10 eps`, with a bootstrap interval.
    pub alpha: Estimate,
    pub intercept: f64,
    pub points: usize,
}

/// Ordinary least squares `y = a x + c`; returns `(a, c)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit("need matching x and y with at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("x values are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

fn log_means(eps: &[f64], runs: &[&[f64]], idx: Option<&[Vec<usize>]>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::with_capacity(eps.len());
    let mut ys = Vec::with_capacity(eps.len());
    for (k, (&e, r)) in eps.iter().zip(runs).enumerate() {
        let mean = match idx {
            Some(idx) => idx[k].iter().map(|&i| r[i]).sum::<f64>() / idx[k].len() as f64,
            None => r.iter().sum::<f64>() / r.len() as f64,
        };
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::DegenerateFit(format!("non-positive mean error {mean} at eps {e}")));
        }
        xs.push(e.log10());
        ys.push(mean.log10());
    }
    Ok((xs, ys))
}

/// Fit `log10 err = alpha log10 eps + c` through the per-ε mean errors and
/// bootstrap `alpha` by resampling runs within each ε.
///
/// `errors[k]` holds the per-run errors measured at `eps[k]`.
pub fn slope_regression(eps: &[f64], errors: &[Vec<f64>], resamples: usize, seed: u64) -> Result<SlopeFit> {
    if eps.len() != errors.len() {
        return Err(Error::DegenerateFit("one error sample per tolerance is required".into()));
    }
    if eps.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 tolerances, got {}", eps.len())));
    }
    if let Some(&e) = eps.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::DegenerateFit(format!("tolerance {e} is not positive")));
    }
    if errors.iter().any(|r| r.is_empty()) {
        return Err(Error::DegenerateFit("empty error sample".into()));
    }
    let runs: Vec<&[f64]> = errors.iter().map(|r| r.as_slice()).collect();
    let (xs, ys) = log_means(eps, &runs, None)?;
    let (alpha, intercept) = least_squares(&xs, &ys)?;

    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x51_09E));
    let mut idx: Vec<Vec<usize>> = errors.iter().map(|r| vec![0; r.len()]).collect();
    let mut samples = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for (slot, r) in idx.iter_mut().zip(errors) {
            slot.iter_mut().for_each(|i| *i = rng.random_range(0..r.len()));
        }
        // A resample whose mean hits zero has no log; it is dropped.
        if let Ok((x, y)) = log_means(eps, &runs, Some(&idx)) {
            samples.push(least_squares(&x, &y)?.0);
        }
    }
    Ok(SlopeFit { alpha: Estimate::from_bootstrap(alpha, &mut samples), intercept, points: eps.len() })
}
