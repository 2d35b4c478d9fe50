//! Contour planning and tensor-product trapezoidal quadrature on circles
//! centred at the origin.
//!
//! Every integral is normalised by `(2 pi i)^{-1}` per variable. A circle of
//! radius `rho` carries the nodes `rho e^{2 pi i j / M}` with weights
//! `rho e^{2 pi i j / M} / M`. Groups of variables that the integrand treats
//! symmetrically are summed over multisets of node indices with multinomial
//! weights, which cuts the work by roughly `k!` per group.

use rayon::prelude::*;

use crate::error::{AsepError, Result};
use crate::linalg::CompensatedSum;
use crate::model::{Complex, ModelParams};

const CHUNK: u64 = 1 << 13;

/// Radii and node budget for the large circle `C_R` and the small circle
/// `C_r`.
///
/// Terms that have variables on both circles use `large`; terms with only
/// large-circle variables use `large_solo`, which only has to clear the
/// poles among those variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPlan {
    params: ModelParams,
    large: f64,
    small: f64,
    large_solo: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_tuples: u64,
}

/// Largest small radius: below `sqrt(tau)` and below the positive root of
/// `q r^2 + r - p`, so poles of `f` between two small-circle variables stay
/// off the torus.
pub fn small_radius_bound(params: &ModelParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    let root = (-1.0 + (1.0 + 4.0 * p * q).sqrt()) / (2.0 * q);
    params.tau().sqrt().min(root)
}

/// Positive root of `q R^2 - R - p`; large-circle pairs need `R` above it.
pub fn pair_pole_bound(params: &ModelParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    (1.0 + (1.0 + 4.0 * p * q).sqrt()) / (2.0 * q)
}

/// Largest modulus of an `f` pole in the large variable when the other one
/// runs over the circle of radius `r`.
pub fn mixed_pole_bound(params: &ModelParams, r: f64) -> f64 {
    (r + params.p()) / (params.q() * r)
}

/// Margin used when callers have no reason to pick another.
pub const DEFAULT_SAFETY: f64 = 1.6;

/// Plans radii with multiplicative margin `safety` on every constraint.
pub fn plan_contours(params: &ModelParams, safety: f64) -> Result<ContourPlan> {
    if !(params.p() > 0.0 && params.p() < 1.0) {
        return Err(AsepError::InfeasiblePlan(format!(
            "need 0 < p < 1, got p = {}",
            params.p()
        )));
    }
    if !(safety >= 1.1) || !safety.is_finite() {
        return Err(AsepError::InfeasiblePlan(format!(
            "safety factor must be >= 1.1, got {safety}"
        )));
    }
    let small = small_radius_bound(params) / safety;
    let solo_floor = pair_pole_bound(params)
        .max(1.0)
        .max(params.tau())
        .max(params.tau().sqrt());
    // A wider gap to the enclosed poles speeds up the trapezoid rule, but
    // the integrand grows like R^x and cancels for large x; the exponent
    // balances the two.
    let large_solo = safety.powf(1.5) * solo_floor;
    let large = safety * solo_floor.max(mixed_pole_bound(params, small));
    let plan = ContourPlan {
        params: *params,
        large,
        small,
        large_solo,
        min_nodes: 8,
        max_nodes: 512,
        max_tuples: 100_000_000,
    };
    plan.validate()?;
    Ok(plan)
}

impl ContourPlan {
    /// Builds a plan from explicit radii; checked like a planned one.
    pub fn from_radii(params: &ModelParams, large: f64, small: f64, large_solo: f64) -> Result<Self> {
        let plan = ContourPlan {
            params: *params,
            large,
            small,
            large_solo,
            min_nodes: 8,
            max_nodes: 512,
            max_tuples: 100_000_000,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn large_radius(&self) -> f64 {
        self.large
    }

    pub fn small_radius(&self) -> f64 {
        self.small
    }

    pub fn solo_radius(&self) -> f64 {
        self.large_solo
    }

    /// Radius for large-circle variables in a term with `k_minus`
    /// small-circle variables.
    pub fn large_radius_for(&self, k_minus: usize) -> f64 {
        if k_minus == 0 {
            self.large_solo
        } else {
            self.large
        }
    }

    /// The same plan with radii scaled, e.g. `(1.15, 0.85)` for the
    /// radius-independence check. The result is validated.
    pub fn perturbed(&self, large_scale: f64, small_scale: f64) -> Result<Self> {
        let mut out = self.clone();
        out.large *= large_scale;
        out.large_solo *= large_scale;
        out.small *= small_scale;
        out.validate()?;
        Ok(out)
    }

    pub fn with_node_limits(mut self, min_nodes: usize, max_nodes: usize) -> Self {
        self.min_nodes = min_nodes;
        self.max_nodes = max_nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q, tau) = (self.params.p(), self.params.q(), self.params.tau());
        let bad = |msg: String| Err(AsepError::InfeasiblePlan(msg));
        let r = self.small;
        if !(r > 0.0 && r < tau.sqrt()) {
            return bad(format!("small radius {r} must lie in (0, sqrt(tau) = {})", tau.sqrt()));
        }
        if !(q * r * r + r - p < 0.0) {
            return bad(format!("small radius {r} lets f poles reach the small circle"));
        }
        for (name, big) in [("large", self.large), ("solo", self.large_solo)] {
            if !(big > 1.0 && big > tau && big > tau.sqrt()) {
                return bad(format!("{name} radius {big} must exceed 1, tau and sqrt(tau)"));
            }
            if !(q * big * big - big - p > 0.0) {
                return bad(format!("{name} radius {big} does not enclose the f poles"));
            }
        }
        if !(self.large > mixed_pole_bound(&self.params, r)) {
            return bad(format!(
                "large radius {} must exceed (r + p) / (q r) = {}",
                self.large,
                mixed_pole_bound(&self.params, r)
            ));
        }
        if self.min_nodes < 4 {
            return bad(format!("min_nodes {} must be at least 4", self.min_nodes));
        }
        if self.max_nodes < self.min_nodes {
            return bad("max_nodes below min_nodes".into());
        }
        Ok(())
    }

    pub fn options(&self, tol: f64) -> QuadOptions {
        QuadOptions {
            tol,
            min_nodes: self.min_nodes,
            max_nodes: self.max_nodes,
            max_tuples: self.max_tuples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub tol: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_tuples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex,
    /// Difference between the last two node-doubling levels, floored by an
    /// estimate of the rounding error of the final sum.
    pub est_error: f64,
    pub nodes_used: usize,
}

/// `count` variables sharing one circle. `symmetric` promises that the
/// integrand is invariant under permutations of these variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableGroup {
    pub radius: f64,
    pub count: usize,
    pub symmetric: bool,
}

/// An integrand over the variables of a group list, laid out group after
/// group.
pub trait TensorIntegrand: Sync {
    type Cache: Sync;

    /// Per-level precomputation; `nodes[g]` holds the nodes of group `g`.
    fn prepare(&self, nodes: &[Vec<Complex>]) -> Self::Cache;

    /// `idx[v]` is the node index of variable `v` within its group, `xi[v]`
    /// the node value.
    fn eval(&self, cache: &Self::Cache, idx: &[usize], xi: &[Complex]) -> Complex;
}

/// Adapter for plain closures of the node values.
pub struct FnIntegrand<F>(pub F);

impl<F> TensorIntegrand for FnIntegrand<F>
where
    F: Fn(&[Complex]) -> Complex + Sync,
{
    type Cache = ();

    fn prepare(&self, _nodes: &[Vec<Complex>]) -> Self::Cache {}

    fn eval(&self, _cache: &(), _idx: &[usize], xi: &[Complex]) -> Complex {
        (self.0)(xi)
    }
}

pub fn circle_nodes(radius: f64, m: usize) -> Vec<Complex> {
    (0..m)
        .map(|j| Complex::from_polar(radius, std::f64::consts::TAU * j as f64 / m as f64))
        .collect()
}

fn binom_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// One enumeration slot: a multiset of `size` node indices out of `m`, or
/// a single index when `size == 1`.
#[derive(Debug, Clone, Copy)]
struct Slot {
    offset: usize,
    size: usize,
}

fn slot_len(m: usize, size: usize) -> u64 {
    binom_u64(m + size - 1, size)
}

/// Writes the `rank`-th nondecreasing tuple (lexicographic) into `out`.
fn unrank_multiset(mut rank: u64, m: usize, out: &mut [usize]) {
    let c = out.len();
    let n = m + c - 1;
    let mut v = 0usize;
    for i in 0..c {
        loop {
            let cnt = binom_u64(n - 1 - v, c - 1 - i);
            if rank < cnt {
                out[i] = v - i;
                v += 1;
                break;
            }
            rank -= cnt;
            v += 1;
        }
    }
}

/// Lexicographic successor; returns false (and resets to zeros) on wrap.
fn next_multiset(a: &mut [usize], m: usize) -> bool {
    match (0..a.len()).rev().find(|&i| a[i] + 1 < m) {
        Some(i) => {
            let v = a[i] + 1;
            for x in &mut a[i..] {
                *x = v;
            }
            true
        }
        None => {
            a.iter_mut().for_each(|x| *x = 0);
            false
        }
    }
}

fn multiset_weight(a: &[usize], factorial: &[f64]) -> f64 {
    let mut w = factorial[a.len()];
    let mut run = 1;
    for i in 1..=a.len() {
        if i < a.len() && a[i] == a[i - 1] {
            run += 1;
        } else {
            w /= factorial[run];
            run = 1;
        }
    }
    w
}

fn build_slots(groups: &[VariableGroup]) -> (Vec<Slot>, Vec<usize>) {
    let mut slots = Vec::new();
    let mut var_group = Vec::new();
    let mut offset = 0;
    for (g, grp) in groups.iter().enumerate() {
        if grp.count == 0 {
            continue;
        }
        if grp.symmetric {
            slots.push(Slot { offset, size: grp.count });
        } else {
            for j in 0..grp.count {
                slots.push(Slot { offset: offset + j, size: 1 });
            }
        }
        var_group.extend(std::iter::repeat_n(g, grp.count));
        offset += grp.count;
    }
    (slots, var_group)
}

/// Number of evaluation points at `m` nodes per circle (saturating).
pub fn tuple_count(groups: &[VariableGroup], m: usize) -> u64 {
    let (slots, _) = build_slots(groups);
    slots
        .iter()
        .fold(1u64, |acc, s| acc.saturating_mul(slot_len(m, s.size)))
}

struct LevelSum {
    value: Complex,
    abs_sum: f64,
}

fn sum_level<I: TensorIntegrand>(integrand: &I, groups: &[VariableGroup], m: usize) -> LevelSum {
    let (slots, var_group) = build_slots(groups);
    let nvars = var_group.len();
    let nodes: Vec<Vec<Complex>> = groups.iter().map(|g| circle_nodes(g.radius, m)).collect();
    let cache = integrand.prepare(&nodes);
    let lens: Vec<u64> = slots.iter().map(|s| slot_len(m, s.size)).collect();
    let total: u64 = lens.iter().product();
    let factorial: Vec<f64> = (0..=nvars.max(1))
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    let inv_m = 1.0 / m as f64;
    let n_chunks = total.div_ceil(CHUNK);

    let partials: Vec<(CompensatedSum, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut idx = vec![0usize; nvars];
            let mut rest = start;
            for (s, len) in slots.iter().zip(&lens).rev() {
                unrank_multiset(rest % len, m, &mut idx[s.offset..s.offset + s.size]);
                rest /= len;
            }
            let mut xi = vec![Complex::new(0.0, 0.0); nvars];
            let mut acc = CompensatedSum::default();
            let mut abs_sum = 0.0;
            for _ in start..end {
                let mut weight = Complex::new(1.0, 0.0);
                for s in &slots {
                    if s.size > 1 {
                        weight *= multiset_weight(&idx[s.offset..s.offset + s.size], &factorial);
                    }
                }
                for v in 0..nvars {
                    xi[v] = nodes[var_group[v]][idx[v]];
                    weight *= xi[v] * inv_m;
                }
                let val = integrand.eval(&cache, &idx, &xi) * weight;
                abs_sum += val.norm();
                acc.add(val);
                for s in slots.iter().rev() {
                    if next_multiset(&mut idx[s.offset..s.offset + s.size], m) {
                        break;
                    }
                }
            }
            (acc, abs_sum)
        })
        .collect();

    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    for (part, a) in &partials {
        acc.merge(part);
        abs_sum += a;
    }
    LevelSum { value: acc.value(), abs_sum }
}

/// Node counts grow by about `sqrt 2` per level (8, 11, 16, 23, 32, ...), so the
/// last, most expensive level overshoots what is needed by less.
fn next_node_count(m: usize) -> usize {
    if m.is_power_of_two() {
        (m as f64 * std::f64::consts::SQRT_2).round() as usize
    } else {
        m.next_power_of_two()
    }
}

/// Integrates over the torus described by `groups`, refining the node count
/// from `min_nodes` until two successive levels agree to `tol`. Fails without
/// further refinement once the levels agree only to the rounding floor of
/// the sum and that floor exceeds `tol`.
pub fn integrate_groups<I: TensorIntegrand>(
    integrand: &I,
    groups: &[VariableGroup],
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    let nvars: usize = groups.iter().map(|g| g.count).sum();
    if nvars == 0 {
        let cache = integrand.prepare(&[]);
        return Ok(QuadratureResult {
            value: integrand.eval(&cache, &[], &[]),
            est_error: 0.0,
            nodes_used: 0,
        });
    }
    let mut m = opts.min_nodes;
    // previous level value and its distance to the level before it
    let mut prev: Option<(Complex, f64)> = None;
    let mut prev_nodes = 0;
    loop {
        if tuple_count(groups, m) > opts.max_tuples {
            let (value, est_error) = prev.unwrap_or((Complex::new(f64::NAN, f64::NAN), f64::INFINITY));
            return Err(AsepError::QuadratureNotConverged { value, est_error, nodes: prev_nodes });
        }
        let level = sum_level(integrand, groups, m);
        if !level.value.is_finite() {
            return Err(AsepError::Pole(format!(
                "non-finite quadrature sum at {m} nodes; a pole lies on a contour"
            )));
        }
        let floor = level.abs_sum * f64::EPSILON * 8.0 * (nvars as f64 + 2.0);
        let diff = prev.map_or(f64::INFINITY, |(pv, _)| (level.value - pv).norm());
        let est_error = diff.max(floor);
        if est_error <= opts.tol {
            return Ok(QuadratureResult { value: level.value, est_error, nodes_used: m });
        }
        if diff <= 2.0 * floor {
            // cancellation in the sum limits the accuracy; more nodes cannot help
            return Err(AsepError::QuadratureNotConverged { value: level.value, est_error, nodes: m });
        }
        prev = Some((level.value, diff));
        prev_nodes = m;
        let next = next_node_count(m);
        if next > opts.max_nodes {
            return Err(AsepError::QuadratureNotConverged { value: level.value, est_error: diff, nodes: m });
        }
        m = next;
    }
}

/// `(2 pi i)^{-k}` times the integral of `integrand` over
/// `C_r^{k_minus} x C_R^{k_plus}`; the tuple passed to the integrand lists
/// the small-circle variables first.
pub fn integrate_tensor<F>(
    integrand: F,
    k_minus: usize,
    k_plus: usize,
    plan: &ContourPlan,
    tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex]) -> Complex + Sync,
{
    integrate_groups(&FnIntegrand(integrand), &groups_for(plan, k_minus, k_plus, false), &plan.options(tol))
}

/// As [`integrate_tensor`] for integrands symmetric within each circle.
pub fn integrate_symmetric<F>(
    integrand: F,
    k_minus: usize,
    k_plus: usize,
    plan: &ContourPlan,
    tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(&[Complex]) -> Complex + Sync,
{
    integrate_groups(&FnIntegrand(integrand), &groups_for(plan, k_minus, k_plus, true), &plan.options(tol))
}

/// `(2 pi i)^{-1}` times the integral of `f` over the circle
/// `|z - center| = radius`, doubling nodes as [`integrate_groups`] does.
pub fn integrate_shifted_circle<F>(f: F, center: Complex, radius: f64, opts: &QuadOptions) -> Result<QuadratureResult>
where
    F: Fn(Complex) -> Complex + Sync,
{
    // the engine weights each offset node w by w / M, which is dz / (2 pi i)
    let shifted = FnIntegrand(|w: &[Complex]| f(center + w[0]));
    integrate_groups(&shifted, &[VariableGroup { radius, count: 1, symmetric: false }], opts)
}

pub fn groups_for(plan: &ContourPlan, k_minus: usize, k_plus: usize, symmetric: bool) -> [VariableGroup; 2] {
    [
        VariableGroup { radius: plan.small_radius(), count: k_minus, symmetric },
        VariableGroup { radius: plan.large_radius_for(k_minus), count: k_plus, symmetric },
    ]
}
