use asep_core::dist::{alternating_term, current_tail_prob, prob_step, report_of, AlternatingForm};
use asep_core::identities::{lemma31_trials, lemma32_trials, residue_trials};
use asep_core::oracles::{light_cone_window, master_equation, mc_simulate, skellam_single, SimConfig};
use asep_core::{plan_contours, probability, AsepError, ContourPlan, DistributionQuery, InitialCondition, TermIndex};
use rayon::prelude::*;

use crate::args::{Format, Method, Oracle, Suite};
use crate::output::{Cell, Table};
use crate::settings::{Settings, DEFAULT_IDENTITY_TRIALS, DEFAULT_KMAX, DEFAULT_MC_TRIALS};
use crate::CliError;

/// Largest relative residual accepted by the identity suites.
pub const IDENTITY_THRESHOLD: f64 = 1e-9;
/// Floor of the radius-drift bound.
pub const RADIUS_FLOOR: f64 = 1e-7;
/// Radius scalings used by `verify radius`.
pub const RADIUS_SCALES: (f64, f64) = (1.15, 0.85);
/// Largest relative gap between the two forms of an alternating term.
pub const SYMM_THRESHOLD: f64 = 1e-9;
/// Quadrature tolerance for single alternating terms in `verify symm`.
pub const SYMM_TERM_TOL: f64 = 1e-13;
/// Largest tolerated `|z|` against Monte Carlo.
pub const Z_LIMIT: f64 = 4.0;
pub const SKELLAM_THRESHOLD: f64 = 1e-8;
pub const MASTER_THRESHOLD: f64 = 1e-7;

/// A rendered table and whether every check in it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub format: Format,
    pub success: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.success {
            0
        } else {
            2
        }
    }

    pub fn render(&self) -> String {
        self.table.render(self.format)
    }
}

fn plan(s: &Settings) -> Result<ContourPlan, CliError> {
    plan_contours(&s.params, s.safety).map_err(|e| CliError::Usage(e.to_string()))
}

fn query(s: &Settings, x: i64) -> DistributionQuery {
    DistributionQuery::new(s.m, x, s.t).with_tol(s.tol).with_kmax(s.kmax.unwrap_or(DEFAULT_KMAX))
}

fn model_meta(table: &mut Table, s: &Settings) {
    table.meta_float("p", s.params.p());
    table.meta_float("q", s.params.q());
    table.meta_float("tau", s.params.tau());
    table.meta("ic", &s.ic_label);
    table.meta("m", s.m);
    table.meta_float("t", s.t);
}

fn plan_meta(table: &mut Table, s: &Settings, plan: &ContourPlan) {
    table.meta_float("safety", s.safety);
    table.meta_float("large_radius", plan.large_radius());
    table.meta_float("small_radius", plan.small_radius());
    table.meta_float("solo_radius", plan.solo_radius());
    table.meta("min_nodes", plan.min_nodes);
    table.meta("max_nodes", plan.max_nodes);
    table.meta_float("tol", s.tol);
    table.meta("kmax", s.kmax.unwrap_or(DEFAULT_KMAX));
}

/// Probability, error estimate and convergence flag of one formula value.
/// Non-convergence keeps the partial value; other failures abort.
struct Eval {
    value: f64,
    est_error: f64,
    tail_bound: f64,
    im_residual: f64,
    terms: usize,
    converged: bool,
}

fn evaluate(s: &Settings, plan: &ContourPlan, x: i64) -> Result<Eval, CliError> {
    let res = probability(&s.ic, &query(s, x), plan);
    match report_of(&res) {
        Some(r) => Ok(Eval {
            value: r.value,
            est_error: r.est_error,
            tail_bound: r.tail_bound,
            im_residual: r.im_residual,
            terms: r.terms_used(),
            converged: r.converged,
        }),
        None => Err(CliError::from(res.unwrap_err())),
    }
}

fn evaluate_range(s: &Settings, plan: &ContourPlan) -> Result<Vec<(i64, Eval)>, CliError> {
    let xs: Vec<i64> = s.xs().collect();
    xs.into_par_iter().map(|x| Ok((x, evaluate(s, plan, x)?))).collect()
}

pub fn eval(s: &Settings) -> Result<Outcome, CliError> {
    let plan = plan(s)?;
    let mut table = Table::new(&["x", "probability", "tail_bound", "est_error", "im_residual", "terms_used", "converged"]);
    table.meta("command", "eval");
    model_meta(&mut table, s);
    plan_meta(&mut table, s, &plan);
    let mut success = true;
    for (x, e) in evaluate_range(s, &plan)? {
        success &= e.converged;
        table.push(vec![
            x.into(),
            e.value.into(),
            e.tail_bound.into(),
            e.est_error.into(),
            e.im_residual.into(),
            e.terms.into(),
            e.converged.into(),
        ]);
    }
    Ok(Outcome { table, format: s.format.unwrap_or(Format::Csv), success })
}

fn sim_config(s: &Settings) -> SimConfig {
    SimConfig::new(s.params, s.ic.clone(), s.origin, s.t, s.trials.unwrap_or(DEFAULT_MC_TRIALS), s.seed)
}

fn mc_meta(table: &mut Table, cfg: &SimConfig) {
    table.meta("trials", cfg.trials);
    table.meta("seed", cfg.seed);
    table.meta("window", format!("{}..{}", cfg.window.0, cfg.window.1));
    table.meta("tagged_origin", cfg.tagged_origin);
}

fn finite_set(s: &Settings, what: &str) -> Result<asep_core::FiniteSet, CliError> {
    match &s.ic {
        InitialCondition::FiniteSet(y) => Ok(y.clone()),
        _ => Err(CliError::Usage(format!("{what} needs a finite initial condition"))),
    }
}

pub fn simulate(method: Method, s: &Settings) -> Result<Outcome, CliError> {
    let format = s.format.unwrap_or(Format::Csv);
    match method {
        Method::Mc => {
            let cfg = sim_config(s);
            let cdf = mc_simulate(&cfg)?;
            let mut table = Table::new(&["x", "cdf", "ci_halfwidth", "smoothed_halfwidth", "count"]);
            table.meta("command", "simulate mc");
            model_meta(&mut table, s);
            mc_meta(&mut table, &cfg);
            table.meta("flagged", cdf.flagged);
            for x in s.xs() {
                table.push(vec![
                    x.into(),
                    cdf.cdf(x).into(),
                    cdf.ci_halfwidth(x).into(),
                    cdf.smoothed_halfwidth(x).into(),
                    Cell::Int(cdf.count_at(x) as i64),
                ]);
            }
            Ok(Outcome { table, format, success: true })
        }
        Method::Master => {
            let y = finite_set(s, "the master equation")?;
            let window = light_cone_window(&y, s.t);
            let sol = master_equation(&y, window, s.t, &s.params)?;
            let mut table = Table::new(&["x", "cdf"]);
            table.meta("command", "simulate master");
            model_meta(&mut table, s);
            table.meta("window", format!("{}..{}", window.0, window.1));
            table.meta("states", sol.states);
            table.meta_float("boundary_mass", sol.boundary_mass);
            table.meta_float("total_mass", sol.total_mass);
            for x in s.xs() {
                table.push(vec![x.into(), sol.cdf_at(s.m as usize, x).into()]);
            }
            Ok(Outcome { table, format, success: true })
        }
    }
}

pub fn verify(suite: Suite, s: &Settings) -> Result<Outcome, CliError> {
    let format = s.format.unwrap_or(Format::Json);
    let trials = s.trials.unwrap_or(DEFAULT_IDENTITY_TRIALS) as usize;
    let mut success = true;
    let mut table = match suite {
        Suite::Lemma31 | Suite::Lemma32 => {
            let kmax = s.kmax.unwrap_or(if suite == Suite::Lemma32 { 6 } else { 5 });
            let mut table = Table::new(&["k", "max_residual", "threshold", "pass"]);
            for k in 1..=kmax {
                let r = match suite {
                    Suite::Lemma31 => lemma31_trials(k, trials, &s.params, s.seed)?,
                    _ => lemma32_trials(k, trials, &s.params, s.seed)?,
                };
                let pass = r <= IDENTITY_THRESHOLD;
                success &= pass;
                table.push(vec![k.into(), r.into(), IDENTITY_THRESHOLD.into(), pass.into()]);
            }
            table
        }
        Suite::Residue => {
            let kmax = s.kmax.unwrap_or(5);
            let mut table = Table::new(&["k", "identity", "contour", "at_one", "at_tau", "threshold", "pass"]);
            for k in 1..=kmax {
                let r = residue_trials(k, trials, &s.params, s.seed)?;
                let pass = r.max() <= IDENTITY_THRESHOLD;
                success &= pass;
                table.push(vec![
                    k.into(),
                    r.identity.into(),
                    r.contour.into(),
                    r.at_one.into(),
                    r.at_tau.into(),
                    IDENTITY_THRESHOLD.into(),
                    pass.into(),
                ]);
            }
            table
        }
        Suite::Radius => {
            let plan = plan(s)?;
            let moved = plan.perturbed(RADIUS_SCALES.0, RADIUS_SCALES.1)?;
            let a = evaluate_range(s, &plan)?;
            let b = evaluate_range(s, &moved)?;
            let mut table = Table::new(&["x", "probability", "perturbed", "drift", "bound", "pass"]);
            for ((x, ea), (_, eb)) in a.iter().zip(&b) {
                let drift = (ea.value - eb.value).abs();
                let bound = RADIUS_FLOOR.max(10.0 * ea.est_error.max(eb.est_error));
                let pass = ea.converged && eb.converged && drift <= bound;
                success &= pass;
                table.push(vec![(*x).into(), ea.value.into(), eb.value.into(), drift.into(), bound.into(), pass.into()]);
            }
            plan_meta(&mut table, s, &plan);
            table.meta_float("perturbed_large_radius", moved.large_radius());
            table.meta_float("perturbed_small_radius", moved.small_radius());
            table
        }
        Suite::Symm => {
            if s.ic != InitialCondition::AlternatingZ {
                return Err(CliError::Usage("the symmetrisation suite needs the alternating condition".into()));
            }
            let plan = plan(s)?;
            let order = s.kmax.unwrap_or(3);
            let mut table =
                Table::new(&["x", "k_minus", "k_plus", "symmetric", "unsymmetric", "rel_diff", "threshold", "pass"]);
            let cases: Vec<(i64, TermIndex)> = s
                .xs()
                .flat_map(|x| (1..=order).flat_map(move |k| (0..=k).map(move |km| (x, TermIndex::new(km, k - km)))))
                .collect();
            let values = cases
                .par_iter()
                .map(|&(x, idx)| {
                    let term = |form| alternating_term(s.m, x, s.t, idx, form, &plan, SYMM_TERM_TOL);
                    Ok((term(AlternatingForm::Symmetric)?, term(AlternatingForm::Unsymmetric)?))
                })
                .collect::<Result<Vec<_>, AsepError>>()?;
            for (&(x, idx), pair) in cases.iter().zip(values) {
                let (a, b) = match pair {
                    (Some(a), Some(b)) => (a.value.re, b.value.re),
                    (None, None) => continue,
                    (a, b) => {
                        let v = |r: Option<asep_core::dist::TermRecord>| r.map_or(0.0, |r| r.value.re);
                        (v(a), v(b))
                    }
                };
                let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                let pass = rel <= SYMM_THRESHOLD;
                success &= pass;
                table.push(vec![
                    x.into(),
                    idx.k_minus.into(),
                    idx.k_plus.into(),
                    a.into(),
                    b.into(),
                    rel.into(),
                    SYMM_THRESHOLD.into(),
                    pass.into(),
                ]);
            }
            plan_meta(&mut table, s, &plan);
            table
        }
    };
    let name = format!("{suite:?}").to_ascii_lowercase();
    table.meta("command", format!("verify {name}"));
    model_meta(&mut table, s);
    if matches!(suite, Suite::Lemma31 | Suite::Lemma32 | Suite::Residue) {
        table.meta("trials", trials);
        table.meta("seed", s.seed);
    }
    Ok(Outcome { table, format, success })
}

pub fn compare(oracle: Oracle, s: &Settings) -> Result<Outcome, CliError> {
    let format = s.format.unwrap_or(Format::Csv);
    let plan = plan(s)?;
    let mut success = true;
    let mut table = match oracle {
        Oracle::Mc => {
            let cfg = sim_config(s);
            let cdf = mc_simulate(&cfg)?;
            let mut table = Table::new(&["x", "formula", "est_error", "mc", "halfwidth", "z", "pass"]);
            for (x, e) in evaluate_range(s, &plan)? {
                let z = cdf.z_score(x, e.value);
                let pass = e.converged && z.abs() <= Z_LIMIT;
                success &= pass;
                table.push(vec![
                    x.into(),
                    e.value.into(),
                    e.est_error.into(),
                    cdf.cdf(x).into(),
                    cdf.smoothed_halfwidth(x).into(),
                    z.into(),
                    pass.into(),
                ]);
            }
            mc_meta(&mut table, &cfg);
            table.meta_float("z_limit", Z_LIMIT);
            table
        }
        Oracle::Skellam | Oracle::Master => {
            let y = finite_set(s, "this comparison")?;
            let (exact, threshold): (Box<dyn Fn(i64) -> f64>, f64) = if oracle == Oracle::Skellam {
                if y.len() != 1 {
                    return Err(CliError::Usage("the Skellam law covers a single particle".into()));
                }
                let params = s.params;
                let (t, origin) = (s.t, y.sites()[0]);
                (Box::new(move |x| skellam_single(origin, x, t, &params)), SKELLAM_THRESHOLD)
            } else {
                let sol = master_equation(&y, light_cone_window(&y, s.t), s.t, &s.params)?;
                let m = s.m as usize;
                (Box::new(move |x| sol.cdf_at(m, x)), MASTER_THRESHOLD)
            };
            let mut table = Table::new(&["x", "formula", "est_error", "exact", "diff", "threshold", "pass"]);
            for (x, e) in evaluate_range(s, &plan)? {
                let ex = exact(x);
                let diff = (e.value - ex).abs();
                let pass = e.converged && diff <= threshold;
                success &= pass;
                table.push(vec![
                    x.into(),
                    e.value.into(),
                    e.est_error.into(),
                    ex.into(),
                    diff.into(),
                    threshold.into(),
                    pass.into(),
                ]);
            }
            table
        }
        Oracle::Current => {
            if s.ic != InitialCondition::StepPositive {
                return Err(CliError::Usage("the current relation needs the step condition".into()));
            }
            let mut table = Table::new(&["x", "current_tail", "step_probability", "identical"]);
            for x in s.xs() {
                let q = query(s, x);
                let current = current_tail_prob(&q, &plan).map_err(precondition_is_usage)?;
                let step = prob_step(&q, &plan)?.value;
                let same = current.to_bits() == step.to_bits();
                success &= same;
                table.push(vec![x.into(), current.into(), step.into(), same.into()]);
            }
            table
        }
    };
    let name = format!("{oracle:?}").to_ascii_lowercase();
    table.meta("command", format!("compare {name}"));
    model_meta(&mut table, s);
    plan_meta(&mut table, s, &plan);
    Ok(Outcome { table, format, success })
}

fn precondition_is_usage(e: AsepError) -> CliError {
    match e {
        AsepError::Precondition(msg) => CliError::Usage(msg),
        other => other.into(),
    }
}
