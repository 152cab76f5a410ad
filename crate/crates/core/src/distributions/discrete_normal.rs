use super::pmf::FinitePmf;
use crate::error::{Error, Result};

/// Standard normal density `φ(x) = e^{−x²/2}/√(2π)`.
pub fn std_normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Parameters of `dN(center, scale, [lo, hi])`: the normal density sampled
/// at the integers of `[lo, hi]` and renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteNormalParams {
    center: f64,
    scale: f64,
    lo: i64,
    hi: i64,
}

impl DiscreteNormalParams {
    pub fn new(center: f64, scale: f64, lo: i64, hi: i64) -> Result<Self> {
        if scale.is_nan() || scale <= 0.0 || !scale.is_finite() {
            return Err(Error::domain(format!("discrete normal scale must be positive, got {scale}")));
        }
        if !center.is_finite() {
            return Err(Error::domain("discrete normal center must be finite"));
        }
        if lo > hi {
            return Err(Error::domain(format!("empty discrete normal support [{lo}, {hi}]")));
        }
        Ok(DiscreteNormalParams { center, scale, lo, hi })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }
}

/// A discrete normal pmf together with its normalizer
/// `𝒩 = Σ_{j∈[lo,hi]} φ((j − center)/scale)/scale`.
#[derive(Debug, Clone)]
pub struct DiscreteNormal {
    pub pmf: FinitePmf,
    pub normalizer: f64,
}

/// Evaluates `dN(center, scale, [lo, hi])`. Weights are formed in log space
/// relative to the largest term, so supports far from the center do not
/// underflow to an all-zero vector; points whose weight underflows are
/// trimmed from the ends.
pub fn discrete_normal(params: DiscreteNormalParams) -> DiscreteNormal {
    let DiscreteNormalParams { center, scale, lo, hi } = params;
    let log_terms: Vec<f64> = (lo..=hi)
        .map(|j| {
            let z = (j as f64 - center) / scale;
            -0.5 * z * z
        })
        .collect();
    let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rel: Vec<f64> = log_terms.iter().map(|l| (l - max).exp()).collect();
    let rel_sum: f64 = rel.iter().sum();
    let weights = rel.iter().map(|r| r / rel_sum).collect();
    let normalizer = max.exp() * rel_sum / ((2.0 * std::f64::consts::PI).sqrt() * scale);
    DiscreteNormal {
        pmf: FinitePmf::trimmed(lo, weights, 0.0),
        normalizer,
    }
}

pub fn discrete_normal_pmf(params: DiscreteNormalParams) -> FinitePmf {
    discrete_normal(params).pmf
}
