//! Discrete-normal approximation of hypergeometric laws and the resulting
//! bound on the one-step total variation between two nearby chain states.
//!
//! For `H ~ Hyper(n, ℓ, k)` set `p = ℓ/n`, `q = 1 − p`, `f = k/n` and
//! `σ = √(k p q (1 − f))`. The approximating law is
//! `Z ~ dN(kp, σ, {0, …, k})`. One step of the chain from `x` adds
//! `H1 − H0` with `H0 ~ Hyper(n, x, k)` and `H1 ~ Hyper(n, n − x, k)`, so the
//! distance between the rows of `x0` and `y0` splits, by the triangle
//! inequality, into four hypergeometric-vs-normal terms, one shifted-normal
//! term and one centered-normal term.

use serde::Serialize;

use crate::chain::{transition_row, ChainParams};
use crate::distributions::{
    discrete_normal, discrete_normal_pmf, hypergeom_pmf, std_normal_density, tv_distance,
    DiscreteNormalParams, FinitePmf, HypergeomParams,
};
use crate::error::{Error, Result};

/// Largest `n` for which [`one_step_tv`] also computes the exact distance.
pub const EXACT_ONE_STEP_MAX_N: u64 = 10_000;

/// Parameters of one hypergeometric `Hyper(n, ℓ, k)` in normal scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxParams {
    pub n: u64,
    pub k: u64,
    pub ell: u64,
    /// `ℓ/n`.
    pub p: f64,
    /// `k/n`.
    pub f: f64,
    pub q: f64,
    /// `√(k p q (1 − f))`.
    pub sigma: f64,
}

impl ApproxParams {
    pub fn new(n: u64, k: u64, ell: u64) -> Result<Self> {
        if n == 0 || k > n || ell > n {
            return Err(Error::domain(format!("invalid (n, k, ell) = ({n}, {k}, {ell})")));
        }
        let nf = n as f64;
        let f = k as f64 / nf;
        let p = ell as f64 / nf;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::domain(format!("k/n = {f} must lie in (0, 1)")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("ell/n = {p} must lie in (0, 1)")));
        }
        let q = 1.0 - p;
        let sigma = (k as f64 * p * q * (1.0 - f)).sqrt();
        Ok(ApproxParams { n, k, ell, p, f, q, sigma })
    }

    /// `k p`, the hypergeometric mean.
    pub fn center(&self) -> f64 {
        self.k as f64 * self.p
    }

    /// `x̃_j = (j − kp)/σ`.
    pub fn x_tilde(&self, j: i64) -> f64 {
        (j as f64 - self.center()) / self.sigma
    }

    pub fn hypergeom(&self) -> FinitePmf {
        hypergeom_pmf(HypergeomParams::new(self.n, self.ell, self.k).expect("validated"))
    }

    pub fn discrete_normal(&self) -> FinitePmf {
        discrete_normal_pmf(self.dn_params())
    }

    fn dn_params(&self) -> DiscreteNormalParams {
        DiscreteNormalParams::new(self.center(), self.sigma, 0, self.k as i64).expect("sigma > 0")
    }
}

/// `𝒩 = Σ_{j=0}^{k} φ(x̃_j)/σ` by direct summation.
pub fn normalization_constant(ap: &ApproxParams) -> f64 {
    (0..=ap.k as i64)
        .map(|j| std_normal_density(ap.x_tilde(j)) / ap.sigma)
        .sum()
}

/// Normalizer used internally by the discrete normal pmf of `ap`.
pub fn internal_normalizer(ap: &ApproxParams) -> f64 {
    discrete_normal(ap.dn_params()).normalizer
}

/// `‖Hyper(n, ℓ, k) − dN(kp, σ, {0..k})‖_TV`, computed exactly.
pub fn hyper_vs_dnormal_tv(n: u64, k: u64, ell: u64) -> Result<f64> {
    let ap = ApproxParams::new(n, k, ell)?;
    Ok(tv_distance(&ap.hypergeom(), &ap.discrete_normal()))
}

/// Central window `[L, R]` of the hypergeometric comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowConstants {
    /// `min(f, 1 − f)`.
    pub f_bar: f64,
    /// `(f̄ + 4) / (4(1 − f̄))`.
    pub a: f64,
    /// `1 / (10 max(a, 2))`.
    pub delta_win: f64,
    /// Smallest `j ∈ {0..k}` with `x̃_j ≥ −δ_win σ`.
    pub l: i64,
    /// Largest `j ∈ {0..k}` with `x̃_j ≤ δ_win σ`.
    pub r: i64,
}

pub fn window_constants(ap: &ApproxParams) -> WindowConstants {
    let f_bar = ap.f.min(1.0 - ap.f);
    let a = (f_bar + 4.0) / (4.0 * (1.0 - f_bar));
    let delta_win = 1.0 / (10.0 * a.max(2.0));
    let threshold = delta_win * ap.sigma;
    let k = ap.k as i64;
    let l = (0..=k).find(|&j| ap.x_tilde(j) >= -threshold).unwrap_or(k + 1);
    let r = (0..=k).rev().find(|&j| ap.x_tilde(j) <= threshold).unwrap_or(-1);
    WindowConstants {
        f_bar,
        a,
        delta_win,
        l,
        r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralRow {
    pub x: f64,
    /// `⌊kp − xσ⌋`, capped at `k`.
    pub j_x: i64,
    /// `S(x) = Σ_{j=L}^{J_x} |P(H = j) − P(Z = j)|`.
    pub partial_sum: f64,
    /// `(1 + x²) e^{−0.07x²} / (σ(1 − f))`.
    pub shape: f64,
    /// `S(x) / shape`.
    pub implied_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralRegionReport {
    pub window: WindowConstants,
    /// `6 min(kp, kq) ≥ 1`.
    pub hypothesis_ok: bool,
    pub rows: Vec<CentralRow>,
    pub max_constant: f64,
    /// `2‖H − Z‖_TV`, the full sum each `S(x)` is part of.
    pub full_sum: f64,
}

/// `points` evenly spaced values in `[−δ_win σ, 0]`.
pub fn central_grid(ap: &ApproxParams, points: usize) -> Vec<f64> {
    let lo = -window_constants(ap).delta_win * ap.sigma;
    if points <= 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo * (1.0 - i as f64 / (points - 1) as f64))
        .collect()
}

/// Partial sums of `|P(H = j) − P(Z = j)|` over `L ≤ j ≤ J_x` against the
/// shape `(1 + x²)e^{−0.07x²}/(σ(1 − f))`, reporting the implied constant.
pub fn central_region_check(ap: &ApproxParams, x_grid: &[f64]) -> Result<CentralRegionReport> {
    let window = window_constants(ap);
    let lo = -window.delta_win * ap.sigma;
    if let Some(x) = x_grid.iter().find(|&&x| x < lo - 1e-12 || x > 0.0) {
        return Err(Error::domain(format!("grid point {x} outside [{lo}, 0]")));
    }
    let kf = ap.k as f64;
    let hypothesis_ok = 6.0 * (kf * ap.p).min(kf * ap.q) >= 1.0;
    if !hypothesis_ok {
        log::warn!("6 min(kp, kq) < 1 for (n, k, ell) = ({}, {}, {})", ap.n, ap.k, ap.ell);
    }
    let h = ap.hypergeom();
    let z = ap.discrete_normal();
    let diffs: Vec<f64> = (0..=ap.k as i64).map(|j| (h.prob(j) - z.prob(j)).abs()).collect();
    let rows: Vec<CentralRow> = x_grid
        .iter()
        .map(|&x| {
            let j_x = ((ap.center() - x * ap.sigma).floor() as i64).min(ap.k as i64);
            let partial_sum: f64 = if window.l <= j_x {
                diffs[window.l as usize..=j_x as usize].iter().sum()
            } else {
                0.0
            };
            let shape = (1.0 + x * x) * (-0.07 * x * x).exp() / (ap.sigma * (1.0 - ap.f));
            CentralRow {
                x,
                j_x,
                partial_sum,
                shape,
                implied_constant: partial_sum / shape,
            }
        })
        .collect();
    let max_constant = rows.iter().map(|r| r.implied_constant).fold(0.0, f64::max);
    Ok(CentralRegionReport {
        window,
        hypothesis_ok,
        rows,
        max_constant,
        full_sum: diffs.iter().sum(),
    })
}

/// The four hypergeometrics of one step from `x0` and from `y0`:
/// `ℓ = (x0, n − x0, y0, n − y0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourChainSetup {
    pub n: u64,
    pub k: u64,
    pub x0: u64,
    pub y0: u64,
    /// `x0 − y0`.
    pub eta: i64,
    pub ell: [u64; 4],
    pub p: [f64; 4],
    pub sigma: [f64; 4],
}

impl FourChainSetup {
    pub fn new(params: ChainParams, x0: u64, y0: u64) -> Result<Self> {
        let (n, k) = (params.n(), params.k());
        if x0 > n || y0 > n {
            return Err(Error::domain(format!("states ({x0}, {y0}) outside [0, {n}]")));
        }
        let ell = [x0, n - x0, y0, n - y0];
        let nf = n as f64;
        let f = k as f64 / nf;
        let p = ell.map(|l| l as f64 / nf);
        let sigma = p.map(|pi| (k as f64 * pi * (1.0 - pi) * (1.0 - f)).sqrt());
        Ok(FourChainSetup {
            n,
            k,
            x0,
            y0,
            eta: x0 as i64 - y0 as i64,
            ell,
            p,
            sigma,
        })
    }

    pub fn hypergeom(&self, i: usize) -> FinitePmf {
        hypergeom_pmf(HypergeomParams::new(self.n, self.ell[i], self.k).expect("valid by construction"))
    }

    /// `Z_i ~ dN(k p_i, σ_i, {0..k})`; when `σ_i = 0` the hypergeometric is
    /// deterministic and `Z_i` is the point mass at `k p_i`.
    pub fn normal(&self, i: usize) -> FinitePmf {
        let center = self.k as f64 * self.p[i];
        if self.sigma[i] > 0.0 {
            discrete_normal_pmf(
                DiscreteNormalParams::new(center, self.sigma[i], 0, self.k as i64).expect("sigma > 0"),
            )
        } else {
            FinitePmf::point_mass(center.round() as i64)
        }
    }
}

/// Terms of the one-step triangle-inequality bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvDecomposition {
    pub setup: FourChainSetup,
    /// `‖H_i − Z_i‖_TV`, `i = 0..3`.
    pub hyper_dn_terms: [f64; 4],
    /// `‖(η + Z_1) − Z_3‖_TV`.
    pub shift_term: f64,
    /// `‖Z_0 − Z_2‖_TV`.
    pub center_term: f64,
    pub total_bound: f64,
    /// `‖P(x0, ·) − P(y0, ·)‖_TV` when `n ≤ 10^4`.
    pub exact_tv: Option<f64>,
}

/// Bounds `‖P(x0, ·) − P(y0, ·)‖_TV` by
/// `Σ_i ‖H_i − Z_i‖ + ‖η + Z_1 − Z_3‖ + ‖Z_0 − Z_2‖`, every term computed
/// exactly from pmfs.
///
/// # Panics
/// If the exact distance exceeds the bound by more than `1e-9`.
pub fn one_step_tv(params: ChainParams, x0: u64, y0: u64) -> Result<TvDecomposition> {
    let setup = FourChainSetup::new(params, x0, y0)?;
    let normals: Vec<FinitePmf> = (0..4).map(|i| setup.normal(i)).collect();
    let hyper_dn_terms = [0, 1, 2, 3].map(|i| tv_distance(&setup.hypergeom(i), &normals[i]));
    let shift_term = tv_distance(&normals[1].shifted(setup.eta), &normals[3]);
    let center_term = tv_distance(&normals[0], &normals[2]);
    let total_bound = hyper_dn_terms.iter().sum::<f64>() + shift_term + center_term;
    let exact_tv = if params.n() <= EXACT_ONE_STEP_MAX_N {
        let tv = tv_distance(&transition_row(params, x0)?, &transition_row(params, y0)?);
        assert!(
            tv <= total_bound + 1e-9,
            "exact one-step TV {tv} exceeds the decomposition bound {total_bound}"
        );
        Some(tv)
    } else {
        None
    };
    Ok(TvDecomposition {
        setup,
        hyper_dn_terms,
        shift_term,
        center_term,
        total_bound,
        exact_tv,
    })
}

/// Partition of `2‖(η + Z_1) − Z_3‖_TV` into the central band
/// `J = [k/2 − K√n, k/2 + K√n]` on the common support (`t1`), the rest of
/// the common support (`t2`), and the two support-mismatch tails (`t3`, `t4`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftSplit {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl ShiftSplit {
    pub fn total(&self) -> f64 {
        self.t1 + self.t2 + self.t3 + self.t4
    }
}

pub fn shift_term_split(params: ChainParams, x0: u64, y0: u64, band: f64) -> Result<ShiftSplit> {
    let setup = FourChainSetup::new(params, x0, y0)?;
    let shifted = setup.normal(1).shifted(setup.eta);
    let z3 = setup.normal(3);
    let k = setup.k as i64;
    let eta = setup.eta;
    let half_width = band * (setup.n as f64).sqrt();
    let center = setup.k as f64 / 2.0;
    let in_band = |j: i64| (j as f64 - center).abs() <= half_width;
    let common = |j: i64| j >= eta.max(0) && j <= k.min(k + eta);
    let mut split = ShiftSplit {
        t1: 0.0,
        t2: 0.0,
        t3: 0.0,
        t4: 0.0,
    };
    for j in (eta.min(0))..=(k.max(k + eta)) {
        let a = shifted.prob(j);
        let b = z3.prob(j);
        let in_xk = (0..=k).contains(&j);
        let in_shifted = (eta..=k + eta).contains(&j);
        if common(j) {
            if in_band(j) {
                split.t1 += (a - b).abs();
            } else {
                split.t2 += (a - b).abs();
            }
        } else if in_xk && !in_shifted {
            split.t3 += b;
        } else if in_shifted && !in_xk {
            split.t4 += a;
        }
    }
    Ok(split)
}
