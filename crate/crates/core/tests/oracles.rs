mod common;

use blmix_core::chain::{transition_row, ChainParams};
use blmix_core::coupling::{coupled_step_law, marginals, CoupledState};
use blmix_core::distributions::{hypergeom_pmf, HypergeomParams};
use common::{brute_coupled, brute_hypergeom, brute_row};

#[test]
fn transition_rows_match_enumeration() {
    for n in 1..=8u64 {
        for k in 0..=n {
            let params = ChainParams::new(n, k).unwrap();
            for x in 0..=n {
                let row = transition_row(params, x).unwrap();
                for (y, p) in brute_row(n, k, x).into_iter().enumerate() {
                    let got = row.prob(y as i64);
                    assert!((got - p).abs() <= 1e-12, "n={n} k={k} x={x} y={y}: {got} vs {p}");
                }
            }
        }
    }
}

#[test]
fn hypergeom_matches_enumeration() {
    for population in 1..=12u64 {
        for successes in 0..=population {
            for draws in 0..=population {
                let pmf = hypergeom_pmf(HypergeomParams::new(population, successes, draws).unwrap());
                for (j, p) in brute_hypergeom(population, successes, draws).into_iter().enumerate() {
                    assert!(
                        (pmf.prob(j as i64) - p).abs() <= 1e-12,
                        "Hyper({population}, {successes}, {draws}) at {j}"
                    );
                }
            }
        }
    }
}

#[test]
fn coupled_law_matches_enumeration() {
    for n in 1..=6u64 {
        for k in 0..=n {
            let params = ChainParams::new(n, k).unwrap();
            for x in 0..=n {
                for y in 0..=n {
                    let oracle = brute_coupled(n, k, x, y);
                    let law = coupled_step_law(params, CoupledState::new(x, y));
                    let total: f64 = law.iter().map(|(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for (s, p) in &law {
                        let want = oracle.get(&(s.x, s.y)).copied().unwrap_or(0.0);
                        assert!((p - want).abs() <= 1e-12, "n={n} k={k} ({x},{y}) -> {s:?}");
                    }
                    for (&(a, b), &p) in &oracle {
                        assert!(b.abs_diff(a) <= y.abs_diff(x), "enumerated outcome expands distance");
                        let got: f64 = law.iter().filter(|(s, _)| (s.x, s.y) == (a, b)).map(|(_, q)| q).sum();
                        assert!((got - p).abs() <= 1e-12);
                    }
                    let (mx, my) = marginals(&law, n);
                    let (rx, ry) = (transition_row(params, x).unwrap(), transition_row(params, y).unwrap());
                    for z in 0..=n as i64 {
                        assert!((mx.prob(z) - rx.prob(z)).abs() <= 1e-12);
                        assert!((my.prob(z) - ry.prob(z)).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
