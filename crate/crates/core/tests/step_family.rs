use asep_core::dist::{current_tail_prob, prob_step_det, step_term, StepForm};
use asep_core::oracles::{mc_current_tail, mc_simulate, SimConfig};
use asep_core::{plan_contours, prob_onesided, prob_step, DistributionQuery, InitialCondition, ModelParams, DEFAULT_SAFETY};

fn params() -> ModelParams {
    ModelParams::new(0.3).unwrap()
}

#[test]
fn product_and_determinant_series_agree() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    for (m, x) in [(1, -1), (1, 0), (2, 0), (2, 1), (3, 1)] {
        let q = DistributionQuery::new(m, x, 1.0).with_tol(1e-10);
        let a = prob_step(&q, &plan).unwrap();
        let b = prob_step_det(&q, &plan).unwrap();
        assert!((a.raw - b.raw).norm() <= 1e-8, "m={m} x={x}");
    }
}

#[test]
fn raw_series_reaches_one_beyond_the_start() {
    // prob_step answers x >= m without the series; the series must agree.
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    for (m, x) in [(1i64, 1i64), (1, 2), (2, 2), (2, 3)] {
        for form in [StepForm::Product, StepForm::Determinant] {
            let mut sum = 0.0;
            for k in 1..=9 {
                if let Some(term) = step_term(m, x, 0.5, k, form, &plan, 1e-11).unwrap() {
                    sum += term.value.re;
                }
            }
            assert!((sum - 1.0).abs() < 1e-8, "m={m} x={x} {form:?}: {sum}");
        }
    }
}

#[test]
fn step_against_monte_carlo() {
    let p = params();
    let plan = plan_contours(&p, DEFAULT_SAFETY).unwrap();
    let t = 1.0;
    let mc = mc_simulate(&SimConfig::new(p, InitialCondition::StepPositive, 1, t, 200_000, 3)).unwrap();
    for x in -3..=2 {
        let v = prob_step(&DistributionQuery::new(1, x, t).with_tol(1e-8), &plan).unwrap().value;
        assert!((v - mc.cdf(x)).abs() <= 4.0 * mc.smoothed_halfwidth(x), "x={x}: {v} vs {}", mc.cdf(x));
    }
}

#[test]
fn onesided_against_monte_carlo() {
    let p = params();
    let plan = plan_contours(&p, DEFAULT_SAFETY).unwrap();
    let t = 1.0;
    let cfg = SimConfig::new(p, InitialCondition::OneSidedAlternating { k0: 1 }, 1, t, 200_000, 4);
    let mc = mc_simulate(&cfg).unwrap();
    for x in -3..=2 {
        let v = prob_onesided(1, &DistributionQuery::new(1, x, t).with_tol(1e-8), &plan).unwrap().value;
        assert!((v - mc.cdf(x)).abs() <= 4.0 * mc.smoothed_halfwidth(x), "x={x}: {v} vs {}", mc.cdf(x));
    }
}

#[test]
fn current_is_nonincreasing_in_m_and_matches_counts() {
    let p = params();
    let plan = plan_contours(&p, DEFAULT_SAFETY).unwrap();
    let (x, t) = (1, 1.0);
    let values: Vec<f64> = (1..=3)
        .map(|m| current_tail_prob(&DistributionQuery::new(m, x, t).with_tol(1e-9), &plan).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1] - 4e-9));
    let trials = 100_000;
    let tail = mc_current_tail(&SimConfig::new(p, InitialCondition::StepPositive, 1, t, trials, 5), x).unwrap();
    for (m, v) in values.iter().enumerate() {
        let f = tail[m + 1];
        let hw = 1.96 * (((f * (1.0 - f)).max(1.0 / trials as f64)) / trials as f64).sqrt();
        assert!((v - f).abs() <= 4.0 * hw, "m={}: {v} vs {f}", m + 1);
    }
}

#[test]
fn onesided_and_step_shapes() {
    let plan = plan_contours(&params(), DEFAULT_SAFETY).unwrap();
    let tol = 1e-9;
    for t in [0.0, 0.5] {
        let mut prev_rows: Option<Vec<f64>> = None;
        for m in 1..=2 {
            let row: Vec<f64> = (-4..=6)
                .map(|x| prob_onesided(1, &DistributionQuery::new(m, x, t).with_tol(tol), &plan).unwrap().raw.re)
                .collect();
            assert!(row.windows(2).all(|w| w[1] >= w[0] - 2.0 * tol));
            assert!(row.iter().all(|v| (-tol..=1.0 + tol).contains(v)));
            if let Some(prev) = &prev_rows {
                assert!(prev.iter().zip(&row).all(|(u, v)| *u >= v - 4.0 * tol));
            }
            prev_rows = Some(row);
        }
    }
}
