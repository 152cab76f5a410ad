//! Acceptance suite: one PASS/FAIL line per criterion. The process fails if
//! any criterion fails other than the documented expected failures.

mod common;

use std::time::{Duration, Instant};

use blmix_core::approximation::{hyper_vs_dnormal_tv, normalization_constant, one_step_tv, ApproxParams};
use blmix_core::asymptotics::make_schedule;
use blmix_core::chain::{
    distance_profile, lower_bound_certificate, moment_reports, stationary, t_mix, transition_row, ChainParams, Kernel,
    StartPolicy,
};
use blmix_core::coupling::{coupled_step_law, marginals, survival_vs_bound, CoupledState};
use blmix_core::distributions::{tv_distance, TAIL_CUTOFF};
use blmix_core::experiments::{parse_config, run, Overrides};
use blmix_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome>;

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn kernel_oracle() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in 1..=8u64 {
        for k in 0..=n {
            let params = ChainParams::new(n, k)?;
            for x in 0..=n {
                let row = transition_row(params, x)?;
                for (y, p) in common::brute_row(n, k, x).into_iter().enumerate() {
                    worst = worst.max((row.prob(y as i64) - p).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max |row - enumeration| = {worst:.3e} (tol 1e-12)"))
}

fn stationarity() -> Result<Outcome> {
    let (mut worst_tv, mut worst_rel) = (0.0f64, 0.0f64);
    let mut floor_used = 0usize;
    for n in [10u64, 100, 1000, 2000] {
        let params = ChainParams::new(n, n / 4)?;
        let kernel = Kernel::new(params);
        let pi = stationary(params);
        worst_tv = worst_tv.max(tv_distance(&kernel.step(&pi)?, &pi));
        for x in 0..=n {
            let row = kernel.row(x)?;
            for (y, p) in row.iter() {
                let q = kernel.row(y as u64)?.prob(x as i64);
                let (px, py) = (pi.prob(x as i64), pi.prob(y));
                let (a, b) = (px * p, py * q);
                let err = (a - b).abs();
                let floor = TAIL_CUTOFF * (px + py + p + q);
                if err <= floor {
                    if err > 0.0 {
                        floor_used += 1;
                    }
                    continue;
                }
                worst_rel = worst_rel.max(err / a.max(b));
            }
        }
    }
    outcome(
        worst_tv <= 1e-10 && worst_rel <= 1e-10,
        format!(
            "max TV(piP, pi) = {worst_tv:.3e}, max detailed-balance rel err = {worst_rel:.3e} \
             ({floor_used} pairs within the 1e-17 truncation floor)"
        ),
    )
}

fn moment_identities() -> Result<Outcome> {
    let (mut worst_rel, mut worst_abs) = (0.0f64, 0.0f64);
    for n in [10u64, 100, 1000] {
        let params = ChainParams::new(n, n / 4)?;
        for x0 in [0, n / 4, n / 2] {
            for (first, second) in moment_reports(params, x0, 30)? {
                for r in [first, second] {
                    if r.rhs.abs() < 1e-6 {
                        worst_abs = worst_abs.max(r.abs_err);
                    } else {
                        worst_rel = worst_rel.max(r.rel_err);
                    }
                }
            }
        }
    }
    outcome(
        worst_rel <= 1e-9 && worst_abs <= 1e-12,
        format!("max rel err = {worst_rel:.3e} (tol 1e-9), max abs err for |rhs| < 1e-6 = {worst_abs:.3e} (tol 1e-12)"),
    )
}

fn coupling_marginals() -> Result<Outcome> {
    let (n, k) = (5u64, 2u64);
    let params = ChainParams::new(n, k)?;
    let (mut worst, mut expansions, mut pairs) = (0.0f64, 0usize, 0usize);
    for x in 0..=n {
        for y in 0..=n {
            let oracle = common::brute_coupled(n, k, x, y);
            pairs = pairs.max(common::subsets(n as u32, k as u32).len().pow(2));
            expansions += oracle.keys().filter(|(a, b)| a.abs_diff(*b) > x.abs_diff(y)).count();
            let law: Vec<(CoupledState, f64)> =
                oracle.iter().map(|(&(a, b), &p)| (CoupledState::new(a, b), p)).collect();
            let (mx, my) = marginals(&law, n);
            let (rx, ry) = (transition_row(params, x)?, transition_row(params, y)?);
            let block = coupled_step_law(params, CoupledState::new(x, y));
            for z in 0..=n as i64 {
                worst = worst.max((mx.prob(z) - rx.prob(z)).abs()).max((my.prob(z) - ry.prob(z)).abs());
            }
            for (s, p) in &block {
                worst = worst.max((p - oracle.get(&(s.x, s.y)).copied().unwrap_or(0.0)).abs());
            }
        }
    }
    outcome(
        pairs == 100 && worst <= 1e-12 && expansions == 0,
        format!("{pairs} (A,B) pairs per start; max marginal/joint err = {worst:.3e}; distance expansions = {expansions}"),
    )
}

fn contraction_survival() -> Result<Outcome> {
    let (n, k) = (200u64, 50u64);
    let params = ChainParams::new(n, k)?;
    let nf = n as f64;
    let r_far = (nf.sqrt() / nf.ln().ln()).floor();
    let mut worst_margin = f64::NEG_INFINITY;
    for (i, r) in [1.0, r_far].into_iter().enumerate() {
        let est = survival_vs_bound(params, 0, n, r, 30, 100_000, 20_240 + i as u64)?;
        for t in 0..=30 {
            let slack = est.empirical_survival[t] - est.theoretical_bound[t] - 3.0 * est.ci_halfwidth[t];
            worst_margin = worst_margin.max(slack);
        }
    }
    outcome(
        worst_margin <= 0.0,
        format!("r in {{1, {r_far}}}: max(survival - bound - 3 CI) = {worst_margin:.3e} over t <= 30"),
    )
}

fn cutoff_bracket() -> Result<Outcome> {
    let lambda = 0.25;
    let mut in_bracket = true;
    let mut lines = Vec::new();
    let mut diagnostics = Vec::new();
    for n in [250u64, 500, 1000, 2000] {
        let sched = make_schedule(n, (lambda * n as f64).floor() as u64, lambda)?;
        let prof = distance_profile(sched.params(), sched.default_horizon(), StartPolicy::StateZero)?;
        let (a, half, b) = (t_mix(&prof, 0.25)?, t_mix(&prof, 0.5)?, t_mix(&prof, 0.75)?);
        for (eps, tm) in [(0.25, a), (0.75, b)] {
            let (lo, hi) = sched.mixing_bracket(eps);
            in_bracket &= lo <= tm as f64 && tm as f64 <= hi;
        }
        let diag = (a as f64 - b as f64) / half as f64;
        diagnostics.push(diag);
        lines.push(format!("n={n}: t(.25)={a} t(.5)={half} t(.75)={b} diag={diag:.3}"));
    }
    let monotone = diagnostics.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        in_bracket && monotone,
        format!("in bracket: {in_bracket}; diagnostic non-increasing: {monotone}; {}", lines.join("; ")),
    )
}

fn lower_bound() -> Result<Outcome> {
    let sched = make_schedule(1_000_000, 250_000, 0.25)?;
    let t = sched.t_n.floor() as usize - 8;
    let big = lower_bound_certificate(sched.params(), t);
    let params = ChainParams::new(2000, 500)?;
    let prof = distance_profile(params, 15, StartPolicy::StateZero)?;
    let mut violation = f64::NEG_INFINITY;
    for (t, d) in prof.d_values.iter().enumerate() {
        violation = violation.max(lower_bound_certificate(params, t) - d);
    }
    outcome(
        big >= 0.9 && violation <= 0.0,
        format!("n=1e6, t={t}: certificate = {big:.6}; n=2000: max(certificate - d(t)) = {violation:.3e} over t <= 15"),
    )
}

const RATE_GRID: [u64; 4] = [100, 1_000, 10_000, 100_000];

/// Slope of log TV(Hyper(n, ℓ, n/4), dN) against log n and the spread of
/// TV·√n, for `ℓ = ell_of(n)`.
fn rate_fit(ell_of: impl Fn(u64) -> u64) -> Result<(f64, f64, Vec<f64>)> {
    let (mut xs, mut ys, mut scaled, mut tvs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for n in RATE_GRID {
        let tv = hyper_vs_dnormal_tv(n, n / 4, ell_of(n))?;
        tvs.push(tv);
        xs.push((n as f64).ln());
        ys.push(tv.ln());
        scaled.push(tv * (n as f64).sqrt());
    }
    let slope = common::ls_slope(&xs, &ys);
    let ratio = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((slope, ratio, tvs))
}

fn hyper_rate() -> Result<Outcome> {
    let (slope, ratio, tvs) = rate_fit(|n| n / 2)?;
    let tvs: Vec<String> = tvs.iter().map(|t| format!("{t:.4e}")).collect();
    outcome(
        (-0.75..=-0.40).contains(&slope) && ratio < 3.0,
        format!(
            "ell = n/2: TV = [{}], slope = {slope:.4} (need [-0.75, -0.40]); TV*sqrt(n) max/min = {ratio:.3} (need < 3)",
            tvs.join(", ")
        ),
    )
}

fn normalization() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for n in RATE_GRID {
        let ap = ApproxParams::new(n, n / 4, n / 2)?;
        worst = worst.max((normalization_constant(&ap) - 1.0).abs() * (n as f64).sqrt());
    }
    outcome(worst < 5.0, format!("max |N_n - 1| sqrt(n) = {worst:.4e} (need < 5)"))
}

fn one_step_closure() -> Result<Outcome> {
    let mut bounds = Vec::new();
    let mut sound = true;
    let mut lines = Vec::new();
    for n in [1_000u64, 10_000, 100_000] {
        let x0 = n / 2;
        let y0 = x0 + (n as f64).powf(0.25).floor() as u64;
        let d = one_step_tv(ChainParams::new(n, n / 4)?, x0, y0)?;
        if let Some(exact) = d.exact_tv {
            sound &= exact <= d.total_bound;
        }
        lines.push(format!(
            "n={n}: bound={:.4} exact={}",
            d.total_bound,
            d.exact_tv.map_or("-".to_string(), |e| format!("{e:.4}"))
        ));
        bounds.push(d.total_bound);
    }
    let decreasing = bounds.windows(2).all(|w| w[1] <= 0.9 * w[0]);
    outcome(
        decreasing && sound,
        format!("decreasing >= 10%/decade: {decreasing}; exact <= bound: {sound}; {}", lines.join("; ")),
    )
}

fn determinism() -> Result<Outcome> {
    let configs = [
        r#"{"experiment":"coupling","n_grid":[100,300],"lambda":0.25,"replicas":3000,"master_seed":7}"#,
        r#"{"experiment":"coupling","n":400,"lambda":0.2,"replicas":2000,"master_seed":3,"stopping":"tau4"}"#,
        r#"{"experiment":"profile","n_grid":[200,600],"lambda":0.25,"start_policy":"all_states"}"#,
        r#"{"experiment":"sweep","n_grid":[250,500],"lambda":0.25,"epsilons":[0.25]}"#,
        r#"{"experiment":"approx","n_grid":[1000,5000],"lambda":0.25}"#,
        r#"{"experiment":"lowerbound","n":100000,"lambda":0.25}"#,
    ];
    let mut compared = 0usize;
    let mut identical = true;
    for text in configs {
        let mut payloads = Vec::new();
        for threads in [1usize, 4] {
            let dir = tempfile::tempdir()?;
            let config = parse_config(text)?.apply(&Overrides {
                output_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            });
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            let out = pool.install(|| run(&config))?;
            let bytes: Vec<Vec<u8>> = out.files.iter().map(std::fs::read).collect::<std::io::Result<_>>()?;
            payloads.push(bytes);
        }
        compared += payloads[0].len();
        identical &= payloads[0] == payloads[1];
    }
    outcome(identical, format!("{compared} CSV files compared between 1 and 4 threads; identical: {identical}"))
}

/// Criteria that cannot pass as stated, with the reason. They still print
/// FAIL; the run only fails if one of them unexpectedly passes or another
/// criterion fails.
const EXPECTED_FAILURES: [(usize, &str); 1] = [(
    8,
    "at ell = n/2 the hypergeometric is symmetric about its mean, its third cumulant vanishes and \
     the discrete-normal error is O(1/n), so the fitted slope is -1, below the required range",
)];

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("kernel oracle", kernel_oracle),
        ("stationarity and reversibility", stationarity),
        ("moment identities", moment_identities),
        ("coupling marginals", coupling_marginals),
        ("contraction survival bound", contraction_survival),
        ("cutoff bracket", cutoff_bracket),
        ("lower-bound certificate", lower_bound),
        ("hypergeometric normal rate", hyper_rate),
        ("normalization constant", normalization),
        ("one-step closure", one_step_closure),
        ("determinism", determinism),
    ];
    let (mut failures, mut unexpected) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let elapsed: Duration = started.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let expected = EXPECTED_FAILURES.iter().find(|(id, _)| *id == i + 1);
        if !pass {
            failures += 1;
        }
        if pass == expected.is_some() {
            unexpected += 1;
        }
        println!(
            "acceptance {:>2} {:<32} {} [{:.1}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            detail
        );
        if let Some((_, reason)) = expected {
            println!("              expected failure: {reason}");
        }
    }
    if let Ok((slope, ratio, _)) = rate_fit(|n| 3 * n / 10) {
        println!("supplementary: ell = 3n/10 gives slope = {slope:.4}, TV*sqrt(n) max/min = {ratio:.3}");
    }
    println!(
        "acceptance summary: {} passed, {} failed ({} unexpected)",
        criteria.len() - failures,
        failures,
        unexpected
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
