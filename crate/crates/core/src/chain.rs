//! Exact transition kernel of the Bernoulli–Laplace chain and everything
//! computed from it by deterministic evolution: stationary law, distance
//! profiles, mixing times, eigenfunction moments and a Chebyshev lower bound
//! on the distance from state 0.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    difference_law, hypergeom_pmf, tv_distance, FinitePmf, HypergeomParams, TAIL_CUTOFF,
};
use crate::error::{Error, Result};

/// Largest `n` for which a dense `(n+1) × (n+1)` kernel or an all-start
/// profile is computed.
pub const MAX_DENSE_N: u64 = 4096;

/// Largest `n` for which the state-0 profile is evolved exactly.
pub const MAX_STATE_ZERO_N: u64 = 100_000;

/// The `(n, k)` pair: `n` balls per urn, `k` swapped per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainParams {
    n: u64,
    k: u64,
}

impl ChainParams {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        if k > n {
            return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
        }
        Ok(ChainParams { n, k })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `k/n ∈ (0, δ)` for the caller's `δ ∈ (0, 1/2)`.
    pub fn ratio_in_range(&self, delta: f64) -> bool {
        let ratio = self.k as f64 / self.n as f64;
        delta > 0.0 && delta < 0.5 && ratio > 0.0 && ratio < delta
    }

    fn check_state(&self, x: u64) -> Result<()> {
        if x > self.n {
            Err(Error::domain(format!("state {x} outside [0, {}]", self.n)))
        } else {
            Ok(())
        }
    }
}

/// One of the three polynomial test functions on the state space.
///
/// `f1` and `f2` are eigenfunctions of the kernel with eigenvalues `f1(k)`
/// and `f2(k)`; `f3(k)` is the contraction rate of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eigenfunction {
    F1,
    F2,
    F3,
}

impl Eigenfunction {
    /// Evaluates the polynomial at a real argument. `F2` needs `n ≥ 2`.
    pub fn eval(self, n: u64, x: f64) -> Result<f64> {
        let nf = n as f64;
        match self {
            Eigenfunction::F1 => Ok(1.0 - 2.0 * x / nf),
            Eigenfunction::F2 => {
                if n < 2 {
                    return Err(Error::domain("f2 requires n >= 2"));
                }
                let c = 2.0 * (2.0 * nf - 1.0);
                Ok(1.0 - c * x / (nf * nf) + c * x * (x - 1.0) / (nf * nf * (nf - 1.0)))
            }
            Eigenfunction::F3 => Ok(1.0 - 2.0 * x * (nf - x) / (nf * nf)),
        }
    }
}

/// `f_i(x)` for a state `x ∈ [0, n]`.
pub fn eigen_eval(params: ChainParams, kind: Eigenfunction, x: u64) -> Result<f64> {
    params.check_state(x)?;
    kind.eval(params.n, x as f64)
}

/// Transition kernel with lazily computed, shared rows.
///
/// Row `x` is the law of `x + H1 − H0` with `H1 ~ Hyper(n, n−x, k)` and
/// `H0 ~ Hyper(n, x, k)` independent: `H0` red balls leave the left urn and
/// `H1` red balls arrive from the right urn.
#[derive(Debug)]
pub struct Kernel {
    params: ChainParams,
    rows: Vec<OnceLock<Arc<FinitePmf>>>,
}

impl Kernel {
    pub fn new(params: ChainParams) -> Self {
        let rows = (0..=params.n).map(|_| OnceLock::new()).collect();
        Kernel { params, rows }
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn row(&self, x: u64) -> Result<Arc<FinitePmf>> {
        self.params.check_state(x)?;
        Ok(self.row_unchecked(x))
    }

    fn row_unchecked(&self, x: u64) -> Arc<FinitePmf> {
        self.rows[x as usize]
            .get_or_init(|| Arc::new(compute_row(self.params, x)))
            .clone()
    }

    /// Computes the rows for `lo..=hi` in parallel.
    pub fn prefetch(&self, lo: u64, hi: u64) {
        (lo..=hi.min(self.params.n)).into_par_iter().for_each(|x| {
            self.row_unchecked(x);
        });
    }

    /// One application of the kernel: `ν(y) = Σ_x μ(x) p(x, y)`.
    ///
    /// The accumulation runs in a fixed order, so the result does not depend
    /// on the number of worker threads.
    pub fn step(&self, mu: &FinitePmf) -> Result<FinitePmf> {
        let n = self.params.n as i64;
        if mu.lo() < 0 || mu.hi() > n {
            return Err(Error::domain(format!(
                "initial law supported on [{}, {}], outside [0, {n}]",
                mu.lo(),
                mu.hi()
            )));
        }
        self.prefetch(mu.lo() as u64, mu.hi() as u64);
        let mut out = vec![0.0; (n + 1) as usize];
        let mut lost = mu.lost_mass();
        for (x, wx) in mu.iter() {
            if wx == 0.0 {
                continue;
            }
            let row = self.row_unchecked(x as u64);
            lost += wx * row.lost_mass();
            let start = row.lo() as usize;
            for (slot, &w) in out[start..].iter_mut().zip(row.weights()) {
                *slot += wx * w;
            }
        }
        Ok(FinitePmf::trimmed(0, out, lost).truncated(TAIL_CUTOFF))
    }

    pub fn evolve(&self, mu: &FinitePmf, steps: usize) -> Result<FinitePmf> {
        let mut cur = mu.clone();
        for _ in 0..steps {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }

    /// The laws `μ, μP, …, μP^steps`.
    pub fn trajectory(&self, mu: &FinitePmf, steps: usize) -> Result<Vec<FinitePmf>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(mu.clone());
        for _ in 0..steps {
            let next = self.step(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Dense row-major kernel matrix; refused above [`MAX_DENSE_N`].
    pub fn dense(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.params.n;
        if n > MAX_DENSE_N {
            return Err(Error::Infeasible(format!(
                "dense kernel with n = {n} exceeds the n <= {MAX_DENSE_N} guard"
            )));
        }
        self.prefetch(0, n);
        Ok((0..=n)
            .map(|x| {
                let row = self.row_unchecked(x);
                (0..=n as i64).map(|y| row.prob(y)).collect()
            })
            .collect())
    }
}

fn compute_row(params: ChainParams, x: u64) -> FinitePmf {
    let ChainParams { n, k } = params;
    let arriving = hypergeom_pmf(HypergeomParams::new(n, n - x, k).expect("valid by construction"));
    let leaving = hypergeom_pmf(HypergeomParams::new(n, x, k).expect("valid by construction"));
    let row = difference_law(&arriving, &leaving).shifted(x as i64);
    // x + H1 − H0 always lies in [0, n]
    let outside: f64 = row
        .iter()
        .filter(|&(y, _)| y < 0 || y > n as i64)
        .map(|(_, w)| w)
        .sum();
    assert!(outside <= 1e-12, "row {x} puts mass {outside} outside [0, {n}]");
    if row.lo() >= 0 && row.hi() <= n as i64 {
        row
    } else {
        let weights = (0..=n as i64).map(|y| row.prob(y)).collect();
        FinitePmf::trimmed(0, weights, row.lost_mass() + outside)
    }
}

/// The law of `X_1` given `X_0 = x`.
pub fn transition_row(params: ChainParams, x: u64) -> Result<FinitePmf> {
    params.check_state(x)?;
    Ok(compute_row(params, x))
}

/// `π(x) = C(n,x) C(n,n−x) / C(2n,n)`, i.e. `Hyper(2n, n, n)`.
pub fn stationary(params: ChainParams) -> FinitePmf {
    let n = params.n;
    hypergeom_pmf(HypergeomParams::new(2 * n, n, n).expect("valid by construction"))
}

/// Applies the kernel `steps` times to `mu`.
pub fn evolve(params: ChainParams, mu: &FinitePmf, steps: usize) -> Result<FinitePmf> {
    Kernel::new(params).evolve(mu, steps)
}

/// Which starting states the distance `d(t)` maximizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    /// Every `x ∈ [0, n]`.
    AllStates,
    /// Only `x = 0` (equivalently `x = n`).
    StateZero,
}

impl StartPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            StartPolicy::AllStates => "all_states",
            StartPolicy::StateZero => "state_zero",
        }
    }
}

/// `d(0), d(1), …, d(t_max)` for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub params: ChainParams,
    pub start_policy: StartPolicy,
    pub d_values: Vec<f64>,
    /// Largest truncation loss among the evolved laws.
    pub lost_mass: f64,
}

impl MixingProfile {
    pub fn t_max(&self) -> usize {
        self.d_values.len() - 1
    }
}

/// Distances to stationarity from one start, `t = 0..=t_max`.
fn distances_from(kernel: &Kernel, pi: &FinitePmf, x: u64, t_max: usize) -> Result<(Vec<f64>, f64)> {
    let mut cur = FinitePmf::point_mass(x as i64);
    let mut d = Vec::with_capacity(t_max + 1);
    d.push(tv_distance(&cur, pi));
    for _ in 0..t_max {
        cur = kernel.step(&cur)?;
        d.push(tv_distance(&cur, pi));
    }
    Ok((d, cur.lost_mass()))
}

/// Computes `d(t) = max_x ‖P_t(x,·) − π‖_TV` over the policy's start set.
///
/// Under [`StartPolicy::AllStates`] only `x ≤ n/2` is evolved; the color swap
/// `x ↦ n − x` maps the remaining starts onto those.
pub fn distance_profile(params: ChainParams, t_max: usize, policy: StartPolicy) -> Result<MixingProfile> {
    let n = params.n;
    let limit = match policy {
        StartPolicy::AllStates => MAX_DENSE_N,
        StartPolicy::StateZero => MAX_STATE_ZERO_N,
    };
    if n > limit {
        return Err(Error::Infeasible(format!(
            "exact {} profile with n = {n} exceeds the n <= {limit} guard; \
             use the coupling or lowerbound experiments instead",
            policy.as_str()
        )));
    }
    let kernel = Kernel::new(params);
    let pi = stationary(params);
    let (d_values, lost_mass) = match policy {
        StartPolicy::StateZero => distances_from(&kernel, &pi, 0, t_max)?,
        StartPolicy::AllStates => {
            let per_start: Vec<(Vec<f64>, f64)> = (0..=n / 2)
                .into_par_iter()
                .map(|x| distances_from(&kernel, &pi, x, t_max))
                .collect::<Result<_>>()?;
            let mut d = vec![0.0f64; t_max + 1];
            let mut lost = 0.0f64;
            for (dx, lx) in &per_start {
                for (acc, v) in d.iter_mut().zip(dx) {
                    *acc = acc.max(*v);
                }
                lost = lost.max(*lx);
            }
            (d, lost)
        }
    };
    Ok(MixingProfile {
        params,
        start_policy: policy,
        d_values,
        lost_mass,
    })
}

/// Smallest `t` with `d(t) ≤ epsilon`.
pub fn t_mix(profile: &MixingProfile, epsilon: f64) -> Result<usize> {
    if epsilon >= 1.0 {
        return Ok(0);
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    profile
        .d_values
        .iter()
        .position(|&d| d <= epsilon)
        .ok_or(Error::HorizonExceeded {
            t_max: profile.t_max(),
            d_last: *profile.d_values.last().expect("profile has d(0)"),
            epsilon,
        })
}

/// Exact evolution compared against a closed form at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl MomentReport {
    fn new(t: usize, lhs: f64, rhs: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs != 0.0 {
            abs_err / rhs.abs()
        } else if abs_err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        MomentReport {
            t,
            lhs,
            rhs,
            abs_err,
            rel_err,
        }
    }
}

/// Closed form of `E_{x0} f1(X_t)`.
pub fn first_moment_closed_form(params: ChainParams, x0: f64, t: usize) -> f64 {
    let n = params.n;
    let f1 = |x: f64| Eigenfunction::F1.eval(n, x).expect("f1 is total");
    f1(params.k as f64).powi(t as i32) * f1(x0)
}

/// Closed form of `E_{x0} f1(X_t)²`.
pub fn second_moment_closed_form(params: ChainParams, x0: f64, t: usize) -> f64 {
    let n = params.n;
    if n == 1 {
        // f1 = ±1 on {0, 1}
        return 1.0;
    }
    let nf = n as f64;
    let f2 = |x: f64| Eigenfunction::F2.eval(n, x).expect("n >= 2");
    1.0 / (2.0 * nf - 1.0) + (2.0 * nf - 2.0) / (2.0 * nf - 1.0) * f2(params.k as f64).powi(t as i32) * f2(x0)
}

/// First- and second-moment reports for every `t = 0..=t_max`, from one
/// exact evolution of `δ_{x0}`.
pub fn moment_reports(params: ChainParams, x0: u64, t_max: usize) -> Result<Vec<(MomentReport, MomentReport)>> {
    params.check_state(x0)?;
    let n = params.n;
    let f1 = |y: i64| 1.0 - 2.0 * y as f64 / n as f64;
    let kernel = Kernel::new(params);
    let laws = kernel.trajectory(&FinitePmf::point_mass(x0 as i64), t_max)?;
    Ok(laws
        .iter()
        .enumerate()
        .map(|(t, law)| {
            let m1 = law.expect(f1);
            let m2 = law.expect(|y| f1(y) * f1(y));
            (
                MomentReport::new(t, m1, first_moment_closed_form(params, x0 as f64, t)),
                MomentReport::new(t, m2, second_moment_closed_form(params, x0 as f64, t)),
            )
        })
        .collect())
}

/// Compares `E_{x0} f1(X_t)` and `E_{x0} f1(X_t)²` from exact evolution with
/// their eigenvalue closed forms.
pub fn verify_moment_identities(params: ChainParams, x0: u64, t: usize) -> Result<(MomentReport, MomentReport)> {
    Ok(*moment_reports(params, x0, t)?.last().expect("t + 1 reports"))
}

/// Chebyshev certificate for `‖P_t(0,·) − π‖_TV`.
///
/// With `f = √(n−1)·f1`, the exact moments `m = E_0 f(X_t)`,
/// `v0 = Var_0 f(X_t)` and `vπ = Var_π f` give, for every `α, r` with
/// `m − r√v0 > α`, the disjoint sets `{|f| ≤ α}` and `{|f − m| ≤ r√v0}` and
/// hence `TV ≥ 1 − vπ/α² − 1/r²`. The best value over the grid
/// `α, r ∈ {2^j : j = 0..=20}` is returned, or 0 when nothing separates.
pub fn lower_bound_certificate(params: ChainParams, t: usize) -> f64 {
    let n = params.n;
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = (nf - 1.0).sqrt() * first_moment_closed_form(params, 0.0, t);
    let second = (nf - 1.0) * second_moment_closed_form(params, 0.0, t);
    let v0 = (second - mean * mean).max(0.0);
    // E_π f2 = 0, so Var_π f = (n−1)/(2n−1)
    let v_pi = (nf - 1.0) / (2.0 * nf - 1.0);
    let grid: Vec<f64> = (0..=20).map(|j| 2f64.powi(j)).collect();
    let mut best = 0.0f64;
    for &alpha in &grid {
        for &r in &grid {
            if mean - r * v0.sqrt() > alpha {
                best = best.max(1.0 - v_pi / (alpha * alpha) - 1.0 / (r * r));
            }
        }
    }
    best.clamp(0.0, 1.0)
}
