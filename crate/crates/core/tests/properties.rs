use asep_core::oracles::{light_cone_window, master_equation, mc_simulate, skellam_single, SimConfig};
use asep_core::{plan_contours, prob_finite, DistributionQuery, FiniteSet, InitialCondition, ModelParams, DEFAULT_SAFETY};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn finite_single_site_is_skellam(p in 0.1f64..0.9, t in 0.0f64..2.0, y0 in -3i64..=3, dx in -4i64..=4) {
        let params = ModelParams::new(p).unwrap();
        let plan = plan_contours(&params, DEFAULT_SAFETY).unwrap();
        let y = FiniteSet::new(vec![y0]).unwrap();
        let r = prob_finite(&y, &DistributionQuery::new(1, y0 + dx, t).with_tol(1e-10), &plan).unwrap();
        prop_assert!((r.raw.re - skellam_single(y0, y0 + dx, t, &params)).abs() <= 1e-8);
    }

    #[test]
    fn master_equation_conserves_mass(p in 0.0f64..=1.0, t in 0.0f64..1.0, gaps in proptest::collection::vec(1i64..4, 1..3)) {
        let params = ModelParams::new(p).unwrap();
        let mut sites = vec![0];
        for g in gaps {
            let next = sites[sites.len() - 1] + g;
            sites.push(next);
        }
        let y = FiniteSet::new(sites).unwrap();
        let sol = master_equation(&y, light_cone_window(&y, t), t, &params).unwrap();
        prop_assert!((sol.total_mass - 1.0).abs() <= 1e-12);
        for m in 1..y.len() {
            for x in sol.window.0..=sol.window.1 {
                prop_assert!(sol.cdf_at(m, x) >= sol.cdf_at(m + 1, x) - 1e-12);
            }
        }
    }

    #[test]
    fn empirical_cdf_invariants(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let params = ModelParams::new(p).unwrap();
        let cfg = SimConfig::new(params, InitialCondition::AlternatingZ, 1, 0.5, 500, seed);
        let a = mc_simulate(&cfg).unwrap();
        prop_assert!(a.counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*a.counts.last().unwrap(), a.n);
        prop_assert_eq!(&a, &mc_simulate(&cfg).unwrap());
    }
}
