//! Mixing-time schedule `t_n`, window `s_n` and the first-order expansions
//! of the eigenvalue powers around `k/n → λ`. All logarithms are natural.

use serde::Serialize;

use crate::chain::{ChainParams, Eigenfunction};
use crate::error::{Error, Result};

/// Schedule quantities for one `(n, k, λ)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub n: u64,
    pub k: u64,
    pub lambda: f64,
    /// `Δ_n = k/n − λ`.
    pub delta_n: f64,
    /// `log n / (2 |log(1 − 2λ)|)`.
    pub t_n: f64,
    /// `λ^{-1} log log n`.
    pub s_n: f64,
    /// `P_λ = (2/λ) log(1 − 2λ)`.
    pub p_lambda: f64,
    /// `√n (log n)^{|P_λ|/2}`.
    pub r_n: f64,
    /// `Δ′_n = h1(k) − h2(λ)` with `f2(k) = 1 − 2h1(k)`, `(1−2λ)² = 1 − 2h2(λ)`.
    pub delta_prime: f64,
    /// `Δ″_n = k(n−k)/n² − (λ − λ²)`.
    pub delta_dprime: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("lambda = {lambda} must lie in the open interval (0, 1/2)")))
    }
}

pub fn make_schedule(n: u64, k: u64, lambda: f64) -> Result<Schedule> {
    check_lambda(lambda)?;
    if n < 3 {
        return Err(Error::domain("the schedule needs n >= 3 so that log log n > 0"));
    }
    let params = ChainParams::new(n, k)?;
    let nf = n as f64;
    let kf = k as f64;
    let ln_n = nf.ln();
    let log_base = (1.0 - 2.0 * lambda).ln();
    let p_lambda = log_base * 2.0 / lambda;
    let f2_k = Eigenfunction::F2.eval(params.n(), kf)?;
    let h1 = (1.0 - f2_k) / 2.0;
    let h2 = 2.0 * lambda * (1.0 - lambda);
    Ok(Schedule {
        n,
        k,
        lambda,
        delta_n: kf / nf - lambda,
        t_n: ln_n / (2.0 * log_base.abs()),
        s_n: ln_n.ln() / lambda,
        p_lambda,
        r_n: nf.sqrt() * ln_n.powf(p_lambda.abs() / 2.0),
        delta_prime: h1 - h2,
        delta_dprime: kf * (nf - kf) / (nf * nf) - (lambda - lambda * lambda),
    })
}

impl Schedule {
    pub fn params(&self) -> ChainParams {
        ChainParams::new(self.n, self.k).expect("validated in make_schedule")
    }

    /// Lower constant `c(ε) = (log(√3 + 100) − ½ log ε) / |log(1 − 2λ)|` of
    /// the Chebyshev lower bound.
    pub fn lower_constant(&self, epsilon: f64) -> f64 {
        ((3f64.sqrt() + 100.0).ln() - 0.5 * epsilon.ln()) / (1.0 - 2.0 * self.lambda).ln().abs()
    }

    /// `[t_n − c(ε), t_n + 3 s_n + 1]`.
    pub fn mixing_bracket(&self, epsilon: f64) -> (f64, f64) {
        (self.t_n - self.lower_constant(epsilon), self.t_n + 3.0 * self.s_n + 1.0)
    }

    /// `⌈t_n + 3 s_n + 10⌉`, the default profile horizon.
    pub fn default_horizon(&self) -> usize {
        (self.t_n + 3.0 * self.s_n + 10.0).ceil() as usize
    }

    /// Distance threshold `√n / log log n` used by the later stopping times.
    pub fn close_distance(&self) -> f64 {
        let nf = self.n as f64;
        nf.sqrt() / nf.ln().ln()
    }

    /// `|Δ′_n| ≤ 2|Δ_n| + 5/n`.
    pub fn delta_prime_bound_holds(&self) -> bool {
        self.delta_prime.abs() <= 2.0 * self.delta_n.abs() + 5.0 / self.n as f64
    }

    /// `|Δ″_n| ≤ |Δ_n|`, with a rounding allowance.
    pub fn delta_dprime_bound_holds(&self) -> bool {
        self.delta_dprime.abs() <= self.delta_n.abs() + 1e-15
    }
}

/// Whether the finite sequence `|Δ_n log n|` looks like it tends to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Vanishing,
    NonVanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftRow {
    pub n: u64,
    pub k: u64,
    /// `k/n ∈ (0, δ)`.
    pub ratio_ok: bool,
    pub delta_n: f64,
    pub delta_n_log_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub lambda: f64,
    pub delta: f64,
    pub rows: Vec<DriftRow>,
    pub trend: Trend,
    pub note: &'static str,
}

/// Below this `|Δ_n log n|` counts as already vanished.
const TREND_FLOOR: f64 = 0.05;

/// Tabulates `Δ_n log n` along `ns`. The trend is `Vanishing` when the last
/// value is below 0.05 or at most half of the largest earlier value.
pub fn drift_report(
    ns: &[u64],
    k_of_n: impl Fn(u64) -> u64,
    lambda: f64,
    delta: f64,
) -> Result<DriftReport> {
    check_lambda(lambda)?;
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n sequence must be strictly increasing"));
    }
    let rows = ns
        .iter()
        .map(|&n| {
            let k = k_of_n(n);
            let params = ChainParams::new(n, k)?;
            let delta_n = k as f64 / n as f64 - lambda;
            Ok(DriftRow {
                n,
                k,
                ratio_ok: params.ratio_in_range(delta),
                delta_n,
                delta_n_log_n: delta_n * (n as f64).ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.delta_n_log_n.abs()).collect();
    let trend = match values.split_last() {
        None => Trend::Vanishing,
        Some((&last, earlier)) => {
            let peak = earlier.iter().cloned().fold(0.0, f64::max);
            if last < TREND_FLOOR || (!earlier.is_empty() && last <= 0.5 * peak) {
                Trend::Vanishing
            } else {
                Trend::NonVanishing
            }
        }
    };
    Ok(DriftReport {
        lambda,
        delta,
        rows,
        trend,
        note: "a finite sequence cannot certify Δ_n = o(1/log n); the trend is a diagnostic only",
    })
}

/// Exact eigenvalue power against its first-order expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub t: usize,
    /// `f_i(k)^t`.
    pub exact: f64,
    /// `base^t` with base `1−2λ`, `(1−2λ)²` or `1−2λ+2λ²`.
    pub leading: f64,
    /// `leading · (1 − 2tΔ/(1−2λ))`.
    pub corrected: f64,
    /// `exact − corrected`.
    pub residual: f64,
    /// `leading · (1 − 2tΔ/base)`, the first-order Taylor term of
    /// `(base − 2Δ)^t`; coincides with `corrected` for `f1`.
    pub taylor_corrected: f64,
    /// `exact − taylor_corrected`.
    pub taylor_residual: f64,
    /// `t > t_n`: outside the range where the expansion is claimed.
    pub beyond_t_n: bool,
}

pub fn eigenvalue_expansion(schedule: &Schedule, which: Eigenfunction, t: usize) -> Result<ExpansionReport> {
    let lambda = schedule.lambda;
    let one_minus = 1.0 - 2.0 * lambda;
    let (base, deviation) = match which {
        Eigenfunction::F1 => (one_minus, schedule.delta_n),
        Eigenfunction::F2 => (one_minus * one_minus, schedule.delta_prime),
        Eigenfunction::F3 => (1.0 - 2.0 * lambda + 2.0 * lambda * lambda, schedule.delta_dprime),
    };
    let eigenvalue = which.eval(schedule.n, schedule.k as f64)?;
    let tf = t as f64;
    let exact = eigenvalue.powi(t as i32);
    let leading = base.powi(t as i32);
    let corrected = leading * (1.0 - 2.0 * tf * deviation / one_minus);
    let taylor_corrected = leading * (1.0 - 2.0 * tf * deviation / base);
    if tf > schedule.t_n {
        log::warn!("expansion evaluated at t = {t} > t_n = {:.3}", schedule.t_n);
    }
    Ok(ExpansionReport {
        t,
        exact,
        leading,
        corrected,
        residual: exact - corrected,
        taylor_corrected,
        taylor_residual: exact - taylor_corrected,
        beyond_t_n: tf > schedule.t_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F2AsymptoticRow {
    pub n: u64,
    pub multiplier: f64,
    /// The state `round(n/2 + ζ)`, `ζ = multiplier · √n (log n)^{q/2}`.
    pub state: u64,
    pub f2: f64,
    /// `f2 / (n^{-1} (log n)^q)`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F2AsymptoticReport {
    pub q: f64,
    pub rows: Vec<F2AsymptoticRow>,
    /// Per multiplier, `max |scaled| / min |scaled|` across the n grid.
    pub spread: Vec<(f64, f64)>,
}

/// Evaluates `f2(n/2 + ζ)` on the grid `ns × multipliers` and the ratio to
/// `n^{-1}(log n)^q`.
pub fn f2_asymptotic_check(ns: &[u64], q: f64, multipliers: &[f64]) -> Result<F2AsymptoticReport> {
    let mut rows = Vec::new();
    for &n in ns {
        if n < 2 {
            return Err(Error::domain("f2 requires n >= 2"));
        }
        let nf = n as f64;
        for &c in multipliers {
            let zeta = c * nf.sqrt() * nf.ln().powf(q / 2.0);
            let state = (nf / 2.0 + zeta).round().clamp(0.0, nf) as u64;
            let f2 = Eigenfunction::F2.eval(n, state as f64)?;
            rows.push(F2AsymptoticRow {
                n,
                multiplier: c,
                state,
                f2,
                scaled: f2 * nf / nf.ln().powf(q),
            });
        }
    }
    let spread = multipliers
        .iter()
        .map(|&c| {
            let mags: Vec<f64> = rows
                .iter()
                .filter(|r| r.multiplier == c)
                .map(|r| r.scaled.abs())
                .collect();
            let max = mags.iter().cloned().fold(0.0, f64::max);
            let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
            (c, max / min)
        })
        .collect();
    Ok(F2AsymptoticReport { q, rows, spread })
}
