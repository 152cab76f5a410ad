mod common;

use blmix_core::asymptotics::{eigenvalue_expansion, make_schedule};
use blmix_core::chain::{
    distance_profile, stationary, ChainParams, Eigenfunction, Kernel, StartPolicy,
};
use blmix_core::coupling::survival_vs_bound;
use blmix_core::distributions::{hypergeom_pmf, tv_distance, TAIL_CUTOFF, FinitePmf, HypergeomParams, HypergeomSampler, RngStream};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn stationary_law_is_invariant_and_reversible() {
    for n in [10u64, 100, 1000] {
        let params = ChainParams::new(n, n / 4).unwrap();
        let kernel = Kernel::new(params);
        let pi = stationary(params);
        let pushed = kernel.step(&pi).unwrap();
        assert!(tv_distance(&pushed, &pi) <= 1e-10, "n = {n}");
        for x in 0..=n {
            let row = kernel.row(x).unwrap();
            for (y, p) in row.iter() {
                let q = kernel.row(y as u64).unwrap().prob(x as i64);
                let (px, py) = (pi.prob(x as i64), pi.prob(y));
                let (forward, backward) = (px * p, py * q);
                // weights below the tail cutoff are dropped, so entries carry
                // an absolute error of that order
                let floor = TAIL_CUTOFF * (px + py + p + q);
                assert!(
                    (forward - backward).abs() <= 1e-10 * forward.max(backward) + floor,
                    "n={n} x={x} y={y}: {forward} vs {backward}"
                );
            }
        }
    }
}

#[test]
fn eigenfunctions_have_closed_form_eigenvalues() {
    for n in [2u64, 3, 7, 20, 64, 200] {
        for k in [0, 1, n / 4, n / 2, n - 1, n] {
            let params = ChainParams::new(n, k).unwrap();
            let kernel = Kernel::new(params);
            for which in [Eigenfunction::F1, Eigenfunction::F2] {
                let mu = which.eval(n, k as f64).unwrap();
                for x in 0..=n {
                    let lhs = kernel.row(x).unwrap().expect(|y| which.eval(n, y as f64).unwrap());
                    let rhs = mu * which.eval(n, x as f64).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-10, "{which:?} n={n} k={k} x={x}: {lhs} vs {rhs}");
                }
            }
        }
    }
}

#[test]
fn state_zero_is_the_worst_start() {
    for n in [16u64, 64, 200, 512] {
        let params = ChainParams::new(n, n / 4).unwrap();
        let all = distance_profile(params, 20, StartPolicy::AllStates).unwrap();
        let zero = distance_profile(params, 20, StartPolicy::StateZero).unwrap();
        for (t, (a, z)) in all.d_values.iter().zip(&zero.d_values).enumerate() {
            assert!((a - z).abs() <= 1e-12, "n={n} t={t}: {a} vs {z}");
        }
    }
}

/// Chi-square goodness of fit of 10^6 sampler draws at level 1e-4, pooling
/// cells with expected count below 5 into their neighbours.
#[test]
fn hypergeom_sampler_goodness_of_fit() {
    const DRAWS: usize = 1_000_000;
    let grid = [(12, 5, 6), (50, 20, 10), (1000, 500, 250), (100_000, 30_000, 400)];
    for (seed, &(population, successes, draws)) in grid.iter().enumerate() {
        let params = HypergeomParams::new(population, successes, draws).unwrap();
        let pmf = hypergeom_pmf(params);
        let mut sampler = HypergeomSampler::default();
        let mut rng = RngStream::new(99, seed as u64);
        let mut counts = vec![0u64; pmf.len()];
        let mut total = 0.0;
        for _ in 0..DRAWS {
            let j = sampler.sample(params, &mut rng);
            counts[(j - pmf.lo()) as usize] += 1;
            total += j as f64;
        }
        let (mut stat, mut cells) = (0.0, 0usize);
        let (mut obs, mut exp) = (0.0, 0.0);
        for (c, w) in counts.iter().zip(pmf.weights()) {
            obs += *c as f64;
            exp += w * DRAWS as f64;
            if exp >= 5.0 {
                stat += (obs - exp).powi(2) / exp;
                cells += 1;
                obs = 0.0;
                exp = 0.0;
            }
        }
        if exp > 0.0 {
            stat += (obs - exp).powi(2) / exp.max(5.0);
        }
        let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-4);
        assert!(stat < critical, "{params:?}: chi2 = {stat}, critical {critical}");
        let mean = total / DRAWS as f64;
        let se = (params.variance() / DRAWS as f64).sqrt();
        assert!((mean - params.mean()).abs() < 5.0 * se.max(1e-12), "{params:?} mean {mean}");
    }
}

#[test]
fn survival_is_reproducible_across_thread_counts() {
    let params = ChainParams::new(200, 50).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| survival_vs_bound(params, 0, 200, 1.0, 25, 4000, 5).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn schedule_monotone_and_rate_identity() {
    let mut previous = None;
    for n in [10u64, 100, 1000, 10_000, 100_000, 1_000_000] {
        let s = make_schedule(n, n / 4, 0.25).unwrap();
        let ln = (n as f64).ln();
        assert!((s.r_n / (n as f64).sqrt() - ln.powf(s.p_lambda.abs() / 2.0)).abs() <= 1e-12 * s.r_n);
        if let Some((t, w)) = previous {
            assert!(s.t_n > t && s.s_n > w);
        }
        previous = Some((s.t_n, s.s_n));
    }
}

#[test]
fn perturbation_bounds_on_grid() {
    for lambda in [0.1, 0.25, 0.4] {
        for n in [10u64, 37, 100, 1001, 10_000] {
            for k in [(lambda * n as f64).floor() as u64, (lambda * n as f64).ceil() as u64 + 2] {
                let s = make_schedule(n, k.min(n), lambda).unwrap();
                assert!(s.delta_prime_bound_holds(), "{s:?}");
                assert!(s.delta_dprime_bound_holds(), "{s:?}");
            }
        }
    }
}

/// `|residual| (1−2λ)^{−t}` against `(tΔ_n)²` on log-log axes has slope
/// near 1: the first-order expansion leaves a second-order error.
#[test]
fn f1_expansion_residual_scales_quadratically() {
    let lambda = 0.25;
    let t = 3;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in [1_000u64, 3_000, 10_000, 30_000, 100_000] {
        let k = (lambda * n as f64).floor() as u64 + 1;
        let s = make_schedule(n, k, lambda).unwrap();
        let r = eigenvalue_expansion(&s, Eigenfunction::F1, t).unwrap();
        let scaled = r.residual.abs() / (1.0 - 2.0 * lambda).powi(t as i32);
        xs.push(((t as f64) * s.delta_n).powi(2).ln());
        ys.push(scaled.ln());
    }
    let slope = common::ls_slope(&xs, &ys);
    assert!((0.8..=1.2).contains(&slope), "slope {slope}");
}

#[test]
fn evolved_laws_stay_normalized() {
    let params = ChainParams::new(3000, 750).unwrap();
    let law = Kernel::new(params).evolve(&FinitePmf::point_mass(0), 12).unwrap();
    assert!((law.total_mass() + law.lost_mass() - 1.0).abs() < 1e-12);
}
