//! Hazard, survival and shedding functions.
//!
//! All math runs in `f64`; the engines round results to `f32` at the point
//! of use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Branch point between the erf identity and the asymptotic series.
pub const ERFCX_BRANCH: f64 = 3.5;

/// Log-normal holding-time parameters on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "log-normal needs finite mu and sigma > 0 (mu={mu}, sigma={sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    pub fn mode(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }

    /// Probability density at `tau`.
    pub fn density(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let z = (tau.ln() - self.mu) / (self.sigma * std::f64::consts::SQRT_2);
        (-z * z).exp() / (tau * self.sigma * SQRT_2PI)
    }

    pub fn hazard(&self, tau: f64) -> f64 {
        lognormal_hazard(tau, *self)
    }
}

/// Infectiousness profile s(tau) of an infectious node of age tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SheddingProfile {
    Constant,
    LogNormalHazard(LogNormalParams),
    LogNormalDensityPeakNormalized(LogNormalParams),
}

/// Scaled complementary error function `exp(z^2) erfc(z)`.
///
/// Piecewise: `exp(z^2) (1 - erf z)` for `|z| <= 3.5`, a four-term asymptotic
/// series above, and the reflection `2 exp(z^2) - erfcx(-z)` for `z < 0`.
pub fn erfcx_stable(z: f64) -> f64 {
    if z < 0.0 {
        2.0 * (z * z).exp() - erfcx_nonneg(-z)
    } else {
        erfcx_nonneg(z)
    }
}

#[inline]
fn erfcx_nonneg(z: f64) -> f64 {
    if z <= ERFCX_BRANCH {
        (z * z).exp() * (1.0 - libm::erf(z))
    } else {
        let r = 1.0 / (z * z);
        FRAC_1_SQRT_PI / z * (1.0 - 0.5 * r + 0.75 * r * r - 1.875 * r * r * r)
    }
}

/// Log-normal hazard `sqrt(2/pi) / (tau sigma erfcx(z))`, `z = (ln tau - mu)/(sigma sqrt 2)`.
///
/// Exactly zero at `tau = 0`; tends to zero as `erfcx` overflows for very
/// small ages.
pub fn lognormal_hazard(tau: f64, p: LogNormalParams) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let z = (tau.ln() - p.mu) / (p.sigma * std::f64::consts::SQRT_2);
    let e = erfcx_stable(z);
    if !e.is_finite() {
        return 0.0;
    }
    SQRT_2_OVER_PI / (tau * p.sigma * e)
}

/// Parameters reproducing a given mean and median.
pub fn lognormal_from_mean_median(mean: f64, median: f64) -> Result<LogNormalParams> {
    if !(median > 0.0) || !(mean > median) || !mean.is_finite() {
        return Err(Error::InvalidMoments { mean, median });
    }
    Ok(LogNormalParams {
        mu: median.ln(),
        sigma: (2.0 * (mean / median).ln()).sqrt(),
    })
}

/// Shedding profile value at age `tau`.
pub fn shedding(s: SheddingProfile, tau: f64) -> f64 {
    match s {
        SheddingProfile::Constant => 1.0,
        SheddingProfile::LogNormalHazard(p) => lognormal_hazard(tau, p),
        SheddingProfile::LogNormalDensityPeakNormalized(p) => p.density(tau) / p.density(p.mode()),
    }
}
