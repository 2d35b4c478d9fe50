use asep_core::dist::{alternating_term, AlternatingForm};
use asep_core::oracles::{mc_simulate, SimConfig};
use asep_core::{
    plan_contours, prob_alternating, prob_alternating_unsym, DistributionQuery, InitialCondition, ModelParams, TermIndex,
    DEFAULT_SAFETY,
};

fn params() -> ModelParams {
    ModelParams::new(0.3).unwrap()
}

#[test]
fn symmetrised_and_plain_terms_agree() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    let mut checked = 0;
    for k in 1..=3usize {
        for km in 0..=k {
            let idx = TermIndex::new(km, k - km);
            let a = alternating_term(1, 0, 0.5, idx, AlternatingForm::Symmetric, &plan, 1e-13).unwrap();
            let b = alternating_term(1, 0, 0.5, idx, AlternatingForm::Unsymmetric, &plan, 1e-13).unwrap();
            match (a, b) {
                (Some(a), Some(b)) => {
                    let rel = (a.value - b.value).norm() / a.value.norm().max(1e-300);
                    assert!(rel <= 1e-9 || (a.value - b.value).norm() <= 1e-15, "{idx:?}: {} vs {}", a.value, b.value);
                    checked += 1;
                }
                (None, None) => {}
                other => panic!("{idx:?}: one form pruned the term and the other did not: {other:?}"),
            }
        }
    }
    assert!(checked >= 5);
}

#[test]
fn whole_series_forms_agree() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    for x in [-1, 1, 3] {
        let q = DistributionQuery::new(1, x, 0.5).with_tol(1e-9);
        let a = prob_alternating(&q, &plan).unwrap();
        let b = prob_alternating_unsym(&q, &plan).unwrap();
        assert!((a.raw - b.raw).norm() <= 1e-8, "x={x}");
    }
}

#[test]
fn radius_independence() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    let moved = plan.perturbed(1.15, 0.85).unwrap();
    for (m, x) in [(1, -1), (1, 1), (1, 3), (-1, -1)] {
        let q = DistributionQuery::new(m, x, 1.0).with_tol(1e-8);
        let a = prob_alternating(&q, &plan).unwrap();
        let b = prob_alternating(&q, &moved).unwrap();
        let bound = 1e-7f64.max(10.0 * (a.est_error + b.est_error));
        assert!((a.raw.re - b.raw.re).abs() <= bound, "m={m} x={x}");
    }
}

#[test]
fn translation_by_two_sites() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    for x in [0, 1, 2] {
        let a = prob_alternating(&DistributionQuery::new(1, x, 0.5).with_tol(1e-9), &plan).unwrap();
        let b = prob_alternating(&DistributionQuery::new(3, x + 2, 0.5).with_tol(1e-9), &plan).unwrap();
        assert!((a.raw.re - b.raw.re).abs() <= 1e-8, "x={x}");
    }
}

#[test]
fn shape_and_ordering() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    let tol = 1e-8;
    let t = 0.5;
    let row = |m: i64| -> Vec<f64> {
        (-3..=7)
            .map(|x| {
                let r = prob_alternating(&DistributionQuery::new(m, x, t).with_tol(tol), &plan).unwrap();
                assert!(r.im_residual <= 100.0 * tol);
                r.raw.re
            })
            .collect()
    };
    let (a, b) = (row(1), row(3));
    for r in [&a, &b] {
        assert!(r.iter().all(|v| (-tol..=1.0 + tol).contains(v)));
        for w in r.windows(2) {
            assert!(w[1] >= w[0] - 2.0 * tol);
        }
    }
    for (u, v) in a.iter().zip(&b) {
        assert!(*u >= v - 4.0 * tol);
    }
    assert!(a[0] < 1e-4 && b[b.len() - 1] > 0.999);
}

#[test]
fn reflection_duality_against_monte_carlo() {
    // X_m under (p, q) has the law of -X_{-m} under (q, p).
    let p = params();
    let plan = plan_contours(&p, DEFAULT_SAFETY).unwrap();
    let t = 0.5;
    let trials = 200_000;
    let direct = mc_simulate(&SimConfig::new(p, InitialCondition::AlternatingZ, 1, t, trials, 7)).unwrap();
    let mirrored =
        mc_simulate(&SimConfig::new(p.reflected().unwrap(), InitialCondition::AlternatingZ, -1, t, trials, 8)).unwrap();
    for x in -2..=4 {
        let formula = prob_alternating(&DistributionQuery::new(1, x, t).with_tol(1e-8), &plan).unwrap().value;
        // P(-X_{-1} <= x) = 1 - P(X_{-1} <= -x - 1)
        let dual = 1.0 - mirrored.cdf(-x - 1);
        assert!((formula - direct.cdf(x)).abs() <= 4.0 * direct.smoothed_halfwidth(x), "direct x={x}");
        assert!((formula - dual).abs() <= 4.0 * mirrored.smoothed_halfwidth(-x - 1), "mirrored x={x}");
    }
}
