use blmix_core::chain::{ChainParams, Kernel};
use blmix_core::coupling::{coupled_step_law, CoupledState};
use blmix_core::distributions::{
    difference_law, discrete_normal_pmf, tv_distance, DiscreteNormalParams, FinitePmf,
};
use proptest::prelude::*;

fn pmf_strategy() -> impl Strategy<Value = FinitePmf> {
    (-6i64..6, prop::collection::vec(0.001f64..1.0, 1..12))
        .prop_map(|(offset, w)| FinitePmf::from_unnormalized(offset, w).unwrap())
}

proptest! {
    #[test]
    fn tv_is_a_metric(p in pmf_strategy(), q in pmf_strategy(), r in pmf_strategy()) {
        let pq = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!((pq - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p) < 1e-15);
        prop_assert!(pq <= tv_distance(&p, &r) + tv_distance(&r, &q) + 1e-12);
    }

    #[test]
    fn difference_moments(p in pmf_strategy(), q in pmf_strategy()) {
        let d = difference_law(&p, &q);
        let mean = p.mean() - q.mean();
        let var = p.variance() + q.variance();
        prop_assert!((d.mean() - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        prop_assert!((d.variance() - var).abs() <= 1e-9 * var.max(1e-300));
    }

    #[test]
    fn discrete_normal_is_log_concave(
        center in -20.0f64..20.0,
        scale in 0.3f64..15.0,
        lo in -30i64..0,
        width in 1i64..40,
    ) {
        let pmf = discrete_normal_pmf(DiscreteNormalParams::new(center, scale, lo, lo + width).unwrap());
        let w = pmf.weights();
        prop_assert!(w.iter().all(|&v| v > 0.0));
        let ratios: Vec<f64> = w.windows(2).map(|p| p[1] / p[0]).collect();
        for pair in ratios.windows(2) {
            prop_assert!(pair[1] < pair[0], "ratios {:?}", pair);
        }
    }

    #[test]
    fn color_swap_symmetry(n in 2u64..60, kf in 0.0f64..1.0, xf in 0.0f64..1.0, t in 1usize..5) {
        let k = (kf * n as f64) as u64;
        let x = (xf * n as f64) as u64;
        let kernel = Kernel::new(ChainParams::new(n, k).unwrap());
        let a = kernel.evolve(&FinitePmf::point_mass(x as i64), t).unwrap();
        let b = kernel.evolve(&FinitePmf::point_mass((n - x) as i64), t).unwrap();
        for y in 0..=n as i64 {
            prop_assert!((a.prob(y) - b.prob(n as i64 - y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn coupling_is_symmetric_and_contracting(n in 1u64..30, kf in 0.0f64..1.0, xf in 0.0f64..1.0, yf in 0.0f64..1.0) {
        let k = (kf * n as f64) as u64;
        let (x, y) = ((xf * n as f64) as u64, (yf * n as f64) as u64);
        let params = ChainParams::new(n, k).unwrap();
        let forward = coupled_step_law(params, CoupledState::new(x, y));
        let backward = coupled_step_law(params, CoupledState::new(y, x));
        prop_assert_eq!(forward.len(), backward.len());
        for (s, p) in &forward {
            prop_assert!(s.distance() <= x.abs_diff(y));
            let mirrored: f64 = backward.iter().filter(|(b, _)| (b.y, b.x) == (s.x, s.y)).map(|(_, w)| w).sum();
            prop_assert!((p - mirrored).abs() <= 1e-12);
        }
    }
}
