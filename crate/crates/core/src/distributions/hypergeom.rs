use super::pmf::{FinitePmf, TAIL_CUTOFF};
use crate::error::{Error, Result};

/// Once the walk away from the mode drops below this weight (relative to
/// the mode) the rest of the tail cannot change `lost_mass` in double
/// precision.
const NEGLIGIBLE_REL: f64 = 1e-33;

/// `Hyper(population, successes, draws)`: the number of type-1 objects
/// among `draws` objects taken without replacement from `population`
/// objects, `successes` of which are type 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HypergeomParams {
    population: u64,
    successes: u64,
    draws: u64,
}

impl HypergeomParams {
    pub fn new(population: u64, successes: u64, draws: u64) -> Result<Self> {
        if population == 0 {
            return Err(Error::domain("hypergeometric population must be positive"));
        }
        if successes > population || draws > population {
            return Err(Error::domain(format!(
                "Hyper({population}, {successes}, {draws}): successes and draws must be <= population"
            )));
        }
        Ok(HypergeomParams {
            population,
            successes,
            draws,
        })
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// `[max(0, draws − failures), min(draws, successes)]`.
    pub fn support(&self) -> (u64, u64) {
        let failures = self.population - self.successes;
        (self.draws.saturating_sub(failures), self.draws.min(self.successes))
    }

    pub fn mean(&self) -> f64 {
        self.draws as f64 * self.successes as f64 / self.population as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.population as f64;
        if self.population <= 1 {
            return 0.0;
        }
        let p = self.successes as f64 / n;
        let m = self.draws as f64;
        m * p * (1.0 - p) * (n - m) / (n - 1.0)
    }

    /// `⌊(draws + 1)(successes + 1)/(population + 2)⌋`, a mode of the law.
    pub fn mode(&self) -> u64 {
        let raw = (self.draws as u128 + 1) * (self.successes as u128 + 1)
            / (self.population as u128 + 2);
        let (lo, hi) = self.support();
        (raw as u64).clamp(lo, hi)
    }

    /// `ln P(j+1) − ln P(j)` for `lo <= j < hi`.
    fn log_ratio_up(&self, j: u64) -> f64 {
        let k = self.successes as f64;
        let m = self.draws as f64;
        let n = self.population as f64;
        let j = j as f64;
        let num = (k - j) * (m - j);
        let den = (j + 1.0) * (n - k - m + j + 1.0);
        (num / den).ln()
    }
}

/// Hypergeometric pmf with tails below [`TAIL_CUTOFF`] (relative to the
/// mode) folded into `lost_mass`.
pub fn hypergeom_pmf(params: HypergeomParams) -> FinitePmf {
    hypergeom_pmf_truncated(params, TAIL_CUTOFF)
}

/// Hypergeometric pmf evaluated in log space by the ratio recurrence
/// `P(j+1)/P(j) = (K−j)(m−j) / ((j+1)(N−K−m+j+1))`, walking outward from the
/// mode. `rel_cutoff = 0` keeps every representable weight.
pub fn hypergeom_pmf_truncated(params: HypergeomParams, rel_cutoff: f64) -> FinitePmf {
    let (lo, hi) = params.support();
    let mode = params.mode();
    let log_cut = if rel_cutoff > 0.0 {
        rel_cutoff.ln()
    } else {
        f64::NEG_INFINITY
    };
    let log_negligible = NEGLIGIBLE_REL.ln().min(log_cut);

    // right of the mode
    let mut right = Vec::new();
    let mut dropped_right = 0.0;
    let mut lw = 0.0;
    let mut j = mode;
    while j < hi {
        lw += params.log_ratio_up(j);
        j += 1;
        if lw >= log_cut {
            right.push(lw.exp());
        } else {
            dropped_right += lw.exp();
            if lw < log_negligible {
                break;
            }
        }
    }

    // left of the mode, stored nearest-first
    let mut left = Vec::new();
    let mut dropped_left = 0.0;
    lw = 0.0;
    j = mode;
    while j > lo {
        lw -= params.log_ratio_up(j - 1);
        j -= 1;
        if lw >= log_cut {
            left.push(lw.exp());
        } else {
            dropped_left += lw.exp();
            if lw < log_negligible {
                break;
            }
        }
    }

    let kept_total: f64 = 1.0 + left.iter().sum::<f64>() + right.iter().sum::<f64>();
    let total = kept_total + dropped_left + dropped_right;
    let offset = mode as i64 - left.len() as i64;
    let mut weights = Vec::with_capacity(left.len() + 1 + right.len());
    weights.extend(left.iter().rev().map(|w| w / total));
    weights.push(1.0 / total);
    weights.extend(right.iter().map(|w| w / total));
    FinitePmf::trimmed(offset, weights, (dropped_left + dropped_right) / total)
}

/// Hoeffding's bound `P(|H − draws·p| ≥ deviation·draws) ≤ 2 exp(−2·draws·deviation²)`.
/// The value is returned unclamped.
pub fn hoeffding_tail(params: HypergeomParams, deviation: f64) -> f64 {
    let k = params.draws() as f64;
    2.0 * (-2.0 * k * deviation * deviation).exp()
}
