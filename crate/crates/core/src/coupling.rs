//! Monte Carlo for two copies of the chain driven by shared ball labels.
//!
//! In each copy the left-urn balls carry labels `1..=n` with red balls first
//! and the right-urn balls carry labels `n+1..=2n`, again red first. One pair
//! of index sets `A ⊆ {1..n}`, `B ⊆ {n+1..2n}` with `|A| = |B| = k` is drawn
//! and used by both copies. Only the block intersection counts matter, so a
//! step samples those counts from hypergeometrics instead of building `A` and
//! `B`. The distance `|X − Y|` never increases under this coupling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::Schedule;
use crate::chain::{second_moment_closed_form, ChainParams};
use crate::distributions::{hypergeom_pmf, FinitePmf, HypergeomParams, HypergeomSampler, RngStream};
use crate::error::{Error, Result};

/// Positions of the two coupled copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoupledState {
    pub x: u64,
    pub y: u64,
}

impl CoupledState {
    pub fn new(x: u64, y: u64) -> Self {
        CoupledState { x, y }
    }

    pub fn distance(&self) -> u64 {
        self.x.abs_diff(self.y)
    }
}

/// Block intersection counts of one shared draw, for `lo ≤ hi`.
///
/// Left urn blocks (labels) are `[1, lo]`, `(lo, hi]`, `(hi, n]`; right urn
/// red blocks are `[n+1, 2n−hi]` (red in both copies) and
/// `(2n−hi, 2n−lo]` (red only in the `lo` copy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BlockCounts {
    left_shared: u64,
    left_extra: u64,
    right_shared: u64,
    right_extra: u64,
}

fn hyper(population: u64, successes: u64, draws: u64) -> HypergeomParams {
    HypergeomParams::new(population, successes, draws).expect("block sizes are consistent")
}

/// Law of a block count; an empty block contributes nothing.
fn block_law(population: u64, successes: u64, draws: u64) -> FinitePmf {
    if population == 0 {
        FinitePmf::point_mass(0)
    } else {
        hypergeom_pmf(hyper(population, successes, draws))
    }
}

fn block_sample(
    sampler: &mut HypergeomSampler,
    rng: &mut RngStream,
    population: u64,
    successes: u64,
    draws: u64,
) -> u64 {
    if population == 0 {
        0
    } else {
        sampler.sample(hyper(population, successes, draws), rng) as u64
    }
}

/// Applies one shared draw to the ordered pair `lo ≤ hi`.
fn apply_counts(lo: u64, hi: u64, c: BlockCounts) -> (u64, u64) {
    let new_lo = lo - c.left_shared + c.right_shared + c.right_extra;
    let new_hi = hi - c.left_shared - c.left_extra + c.right_shared;
    (new_lo, new_hi)
}

/// One coupled step.
///
/// # Panics
/// If the distance between the copies increases, which would mean the block
/// bookkeeping is wrong.
pub fn coupled_step(
    params: ChainParams,
    state: CoupledState,
    sampler: &mut HypergeomSampler,
    rng: &mut RngStream,
) -> CoupledState {
    let (n, k) = (params.n(), params.k());
    let (lo, hi) = if state.x <= state.y {
        (state.x, state.y)
    } else {
        (state.y, state.x)
    };
    assert!(hi <= n, "coupled state {state:?} outside [0, {n}]");
    let left_shared = block_sample(sampler, rng, n, lo, k);
    let left_extra = block_sample(sampler, rng, n - lo, hi - lo, k - left_shared);
    let right_shared = block_sample(sampler, rng, n, n - hi, k);
    let right_extra = block_sample(sampler, rng, hi, hi - lo, k - right_shared);
    let (new_lo, new_hi) = apply_counts(
        lo,
        hi,
        BlockCounts {
            left_shared,
            left_extra,
            right_shared,
            right_extra,
        },
    );
    assert!(
        new_lo.abs_diff(new_hi) <= hi - lo,
        "coupling expanded the distance: {state:?} -> ({new_lo}, {new_hi})"
    );
    if state.x <= state.y {
        CoupledState::new(new_lo, new_hi)
    } else {
        CoupledState::new(new_hi, new_lo)
    }
}

/// Exact joint law of one coupled step, from the block-count decomposition.
pub fn coupled_step_law(params: ChainParams, state: CoupledState) -> Vec<(CoupledState, f64)> {
    let (n, k) = (params.n(), params.k());
    let swapped = state.x > state.y;
    let (lo, hi) = if swapped { (state.y, state.x) } else { (state.x, state.y) };
    let mut out: std::collections::BTreeMap<(u64, u64), f64> = Default::default();
    let a = hypergeom_pmf(hyper(n, lo, k));
    let b = hypergeom_pmf(hyper(n, n - hi, k));
    for (ls, wls) in a.iter() {
        let ls = ls as u64;
        let ae = block_law(n - lo, hi - lo, k - ls);
        for (le, wle) in ae.iter() {
            for (rs, wrs) in b.iter() {
                let rs = rs as u64;
                let be = block_law(hi, hi - lo, k - rs);
                for (re, wre) in be.iter() {
                    let counts = BlockCounts {
                        left_shared: ls,
                        left_extra: le as u64,
                        right_shared: rs,
                        right_extra: re as u64,
                    };
                    let (new_lo, new_hi) = apply_counts(lo, hi, counts);
                    let key = if swapped { (new_hi, new_lo) } else { (new_lo, new_hi) };
                    *out.entry(key).or_insert(0.0) += wls * wle * wrs * wre;
                }
            }
        }
    }
    out.into_iter()
        .map(|((x, y), w)| (CoupledState::new(x, y), w))
        .collect()
}

/// Marginal laws `(X', Y')` of a joint law.
pub fn marginals(law: &[(CoupledState, f64)], n: u64) -> (FinitePmf, FinitePmf) {
    let mut xs = vec![0.0; n as usize + 1];
    let mut ys = vec![0.0; n as usize + 1];
    for (s, w) in law {
        xs[s.x as usize] += w;
        ys[s.y as usize] += w;
    }
    (
        FinitePmf::from_unnormalized(0, xs).expect("law has positive mass"),
        FinitePmf::from_unnormalized(0, ys).expect("law has positive mass"),
    )
}

/// One uncoupled chain step `x − H0 + H1`.
pub fn single_step(params: ChainParams, x: u64, sampler: &mut HypergeomSampler, rng: &mut RngStream) -> u64 {
    let (n, k) = (params.n(), params.k());
    let leaving = sampler.sample(hyper(n, x, k), rng) as u64;
    let arriving = sampler.sample(hyper(n, n - x, k), rng) as u64;
    x - leaving + arriving
}

/// 95% normal-approximation half width, floored at `1.96/(2·replicas)`.
pub fn binomial_halfwidth(p_hat: f64, replicas: usize) -> f64 {
    let r = replicas as f64;
    (1.96 * (p_hat * (1.0 - p_hat) / r).sqrt()).max(1.96 / (2.0 * r))
}

/// Empirical survival curve of a stopping time with a deterministic bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub t_grid: Vec<usize>,
    pub empirical_survival: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub theoretical_bound: Vec<f64>,
}

impl SurvivalEstimate {
    fn from_hitting_times(times: &[Option<usize>], horizon: usize, bound: impl Fn(usize) -> f64) -> Self {
        let replicas = times.len();
        // survivors[t] = #{τ > t}
        let mut survivors = vec![0usize; horizon + 1];
        for tau in times {
            let last_alive = match tau {
                Some(0) => continue,
                Some(t) => (*t - 1).min(horizon),
                None => horizon,
            };
            for s in &mut survivors[..=last_alive] {
                *s += 1;
            }
        }
        let empirical: Vec<f64> = survivors.iter().map(|&c| c as f64 / replicas as f64).collect();
        SurvivalEstimate {
            t_grid: (0..=horizon).collect(),
            ci_halfwidth: empirical.iter().map(|&p| binomial_halfwidth(p, replicas)).collect(),
            theoretical_bound: (0..=horizon).map(|t| bound(t).min(1.0)).collect(),
            empirical_survival: empirical,
        }
    }

    /// Survival at the last grid point, with its half width.
    pub fn at_horizon(&self) -> (f64, f64) {
        (
            *self.empirical_survival.last().expect("non-empty grid"),
            *self.ci_halfwidth.last().expect("non-empty grid"),
        )
    }
}

/// Runs one coupled trajectory until `stop` holds or `horizon` passes.
fn hitting_time(
    params: ChainParams,
    start: CoupledState,
    horizon: usize,
    rng: &mut RngStream,
    sampler: &mut HypergeomSampler,
    stop: &impl Fn(CoupledState) -> bool,
) -> Option<usize> {
    let mut state = start;
    for t in 0..=horizon {
        if stop(state) {
            return Some(t);
        }
        if t < horizon {
            state = coupled_step(params, state, sampler, rng);
        }
    }
    None
}

fn simulate_hitting_times(
    params: ChainParams,
    start: CoupledState,
    horizon: usize,
    replicas: usize,
    master_seed: u64,
    stop: impl Fn(CoupledState) -> bool + Sync,
) -> Vec<Option<usize>> {
    (0..replicas as u64)
        .into_par_iter()
        .map_init(HypergeomSampler::default, |sampler, replica| {
            let mut rng = RngStream::new(master_seed, replica);
            hitting_time(params, start, horizon, &mut rng, sampler, &stop)
        })
        .collect()
}

fn check_states(params: ChainParams, x0: u64, y0: u64) -> Result<()> {
    if x0 > params.n() || y0 > params.n() {
        return Err(Error::domain(format!("start ({x0}, {y0}) outside [0, {}]", params.n())));
    }
    Ok(())
}

/// Path-coupling bound `(1 − 2k(n−k)/n²)^t · |x0 − y0| / r`.
pub fn contraction_bound(params: ChainParams, x0: u64, y0: u64, r: f64, t: usize) -> f64 {
    let nf = params.n() as f64;
    let kf = params.k() as f64;
    let rate = 1.0 - 2.0 * kf * (nf - kf) / (nf * nf);
    rate.powi(t as i32) * x0.abs_diff(y0) as f64 / r
}

/// Empirical `P(τ_couple(r) > t)` for `t = 0..=t_max`, next to the path
/// coupling bound. Replica `i` uses stream `i` of `master_seed`.
pub fn survival_vs_bound(
    params: ChainParams,
    x0: u64,
    y0: u64,
    r: f64,
    t_max: usize,
    replicas: usize,
    master_seed: u64,
) -> Result<SurvivalEstimate> {
    check_states(params, x0, y0)?;
    if r.is_nan() || r <= 0.0 {
        return Err(Error::domain("distance threshold r must be positive"));
    }
    if replicas == 0 {
        return Err(Error::domain("replicas must be >= 1"));
    }
    let times = simulate_hitting_times(params, CoupledState::new(x0, y0), t_max, replicas, master_seed, |s| {
        s.distance() as f64 <= r
    });
    Ok(SurvivalEstimate::from_hitting_times(&times, t_max, |t| {
        contraction_bound(params, x0, y0, r, t)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingKind {
    /// `|X − Y| ≤ r`.
    TauCouple,
    /// Both copies in `(n/2 − κ√n, n/2 + κ√n)`.
    Tau1,
    /// `|X − Y| ≤ √n/log log n` and both in `(n/2 − κ r_n, n/2 + κ r_n)`.
    Tau3,
    /// `|X − Y| ≤ √n/log log n` and both in `(n/2 − κ√n, n/2 + κ√n)`.
    Tau4,
}

impl StoppingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StoppingKind::TauCouple => "tau_couple",
            StoppingKind::Tau1 => "tau1",
            StoppingKind::Tau3 => "tau3",
            StoppingKind::Tau4 => "tau4",
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSpec {
    pub kind: StoppingKind,
    /// Distance threshold for `TauCouple`.
    pub r: f64,
    pub kappa: f64,
    pub schedule: Schedule,
}

impl StoppingSpec {
    pub fn new(kind: StoppingKind, r: f64, kappa: f64, schedule: Schedule) -> Result<Self> {
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::domain("kappa must be positive"));
        }
        if kind == StoppingKind::TauCouple && (r.is_nan() || r <= 0.0) {
            return Err(Error::domain("tau_couple needs r > 0"));
        }
        Ok(StoppingSpec {
            kind,
            r,
            kappa,
            schedule,
        })
    }

    /// `⌊t_n⌋` for τ1, `⌊s_n⌋` for τ3, `⌊2 s_n⌋` for τ4 and
    /// `⌊t_n + 3 s_n⌋` for τ_couple.
    pub fn default_horizon(&self) -> usize {
        let s = &self.schedule;
        let h = match self.kind {
            StoppingKind::Tau1 => s.t_n,
            StoppingKind::Tau3 => s.s_n,
            StoppingKind::Tau4 => 2.0 * s.s_n,
            StoppingKind::TauCouple => s.t_n + 3.0 * s.s_n,
        };
        h.floor().max(0.0) as usize
    }

    /// Distance threshold of the stopping rule, if any.
    fn distance_threshold(&self) -> Option<f64> {
        match self.kind {
            StoppingKind::TauCouple => Some(self.r),
            StoppingKind::Tau1 => None,
            StoppingKind::Tau3 | StoppingKind::Tau4 => Some(self.schedule.close_distance()),
        }
    }

    /// Half width of the band around `n/2`, if any.
    fn band_halfwidth(&self) -> Option<f64> {
        let root_n = (self.schedule.n as f64).sqrt();
        match self.kind {
            StoppingKind::TauCouple => None,
            StoppingKind::Tau1 | StoppingKind::Tau4 => Some(self.kappa * root_n),
            StoppingKind::Tau3 => Some(self.kappa * self.schedule.r_n),
        }
    }

    pub fn is_stopped(&self, s: CoupledState) -> bool {
        let center = self.schedule.n as f64 / 2.0;
        let close = self.distance_threshold().is_none_or(|r| s.distance() as f64 <= r);
        let inside = self.band_halfwidth().is_none_or(|w| {
            (s.x as f64 - center).abs() < w && (s.y as f64 - center).abs() < w
        });
        close && inside
    }

    /// Deterministic bound on `P(τ > t)`: at time `t` the copies are either
    /// still far apart (path-coupling bound) or one of them is outside the
    /// band (Chebyshev with the exact second moment of `f1`).
    pub fn bound(&self, params: ChainParams, x0: u64, y0: u64, t: usize) -> f64 {
        let mut total = 0.0;
        if let Some(r) = self.distance_threshold() {
            if x0.abs_diff(y0) as f64 > r {
                total += contraction_bound(params, x0, y0, r, t);
            }
        }
        if let Some(w) = self.band_halfwidth() {
            let nf = params.n() as f64;
            // |X − n/2| ≥ w  ⇔  f1(X)² ≥ 4w²/n²
            let outside = |x0: u64| nf * nf / (4.0 * w * w) * second_moment_closed_form(params, x0 as f64, t);
            total += outside(x0) + outside(y0);
        }
        total
    }
}

/// Empirical `P(τ > t)` for the chosen stopping time, `t = 0..=horizon`.
/// `horizon = None` uses [`StoppingSpec::default_horizon`]; trajectories that
/// have not stopped by then are counted as survivors.
pub fn stopping_tail(
    params: ChainParams,
    spec: &StoppingSpec,
    x0: u64,
    y0: u64,
    horizon: Option<usize>,
    replicas: usize,
    master_seed: u64,
) -> Result<SurvivalEstimate> {
    check_states(params, x0, y0)?;
    if replicas == 0 {
        return Err(Error::domain("replicas must be >= 1"));
    }
    if spec.schedule.n != params.n() || spec.schedule.k != params.k() {
        return Err(Error::domain("stopping spec schedule does not match the chain parameters"));
    }
    let horizon = horizon.unwrap_or_else(|| spec.default_horizon());
    let times = simulate_hitting_times(params, CoupledState::new(x0, y0), horizon, replicas, master_seed, |s| {
        spec.is_stopped(s)
    });
    Ok(SurvivalEstimate::from_hitting_times(&times, horizon, |t| {
        spec.bound(params, x0, y0, t)
    }))
}

/// Single-chain excursion estimate on the window `I = [s, s + ⌊s_n⌋]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandExcursion {
    pub r: f64,
    pub probability: f64,
    pub ci_halfwidth: f64,
    /// `(n/r²)(log n)^{|P_λ|}`.
    pub shape: f64,
}

/// Largest `|X_t − n/2|` over the window, per replica.
fn window_deviations(
    params: ChainParams,
    schedule: &Schedule,
    x0: u64,
    s: usize,
    replicas: usize,
    master_seed: u64,
) -> Vec<f64> {
    let window_end = s + schedule.s_n.floor().max(0.0) as usize;
    let center = params.n() as f64 / 2.0;
    (0..replicas as u64)
        .into_par_iter()
        .map_init(HypergeomSampler::default, |sampler, replica| {
            let mut rng = RngStream::new(master_seed, replica);
            let mut x = x0;
            let mut worst = 0.0f64;
            for t in 0..=window_end {
                if t >= s {
                    worst = worst.max((x as f64 - center).abs());
                }
                if t < window_end {
                    x = single_step(params, x, sampler, &mut rng);
                }
            }
            worst
        })
        .collect()
}

fn check_band_inputs(params: ChainParams, schedule: &Schedule, x0: u64, replicas: usize) -> Result<()> {
    if x0 > params.n() {
        return Err(Error::domain(format!("x0 = {x0} outside [0, {}]", params.n())));
    }
    if replicas == 0 {
        return Err(Error::domain("replicas must be >= 1"));
    }
    if schedule.n != params.n() || schedule.k != params.k() {
        return Err(Error::domain("schedule does not match the chain parameters"));
    }
    Ok(())
}

fn excursion_row(n: u64, schedule: &Schedule, r: f64, deviations: &[f64]) -> BandExcursion {
    let replicas = deviations.len();
    let exceed = deviations.iter().filter(|&&d| d > r).count();
    let p = exceed as f64 / replicas as f64;
    let nf = n as f64;
    BandExcursion {
        r,
        probability: p,
        ci_halfwidth: binomial_halfwidth(p, replicas),
        shape: nf / (r * r) * nf.ln().powf(schedule.p_lambda.abs()),
    }
}

/// Empirical `P(sup_{t ∈ I} |X_t − n/2| > r)`.
pub fn band_excursion(
    params: ChainParams,
    schedule: &Schedule,
    x0: u64,
    r: f64,
    s: usize,
    replicas: usize,
    master_seed: u64,
) -> Result<BandExcursion> {
    check_band_inputs(params, schedule, x0, replicas)?;
    let deviations = window_deviations(params, schedule, x0, s, replicas, master_seed);
    Ok(excursion_row(params.n(), schedule, r, &deviations))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandProfile {
    pub rows: Vec<BandExcursion>,
    /// `max_r probability / shape`.
    pub fitted_constant: f64,
}

/// [`band_excursion`] over a grid of radii with common random numbers, so the
/// estimates are exactly non-increasing in `r`.
pub fn band_excursion_profile(
    params: ChainParams,
    schedule: &Schedule,
    x0: u64,
    radii: &[f64],
    s: usize,
    replicas: usize,
    master_seed: u64,
) -> Result<BandProfile> {
    check_band_inputs(params, schedule, x0, replicas)?;
    let deviations = window_deviations(params, schedule, x0, s, replicas, master_seed);
    let rows: Vec<BandExcursion> = radii
        .iter()
        .map(|&r| excursion_row(params.n(), schedule, r, &deviations))
        .collect();
    let fitted_constant = rows.iter().map(|b| b.probability / b.shape).fold(0.0, f64::max);
    Ok(BandProfile { rows, fitted_constant })
}
