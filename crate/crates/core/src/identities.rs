//! Numerical checks of the symmetrisation identity, the determinant
//! identity, and the residue identity behind the symmetrisation proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{AsepError, Result};
use crate::linalg::det;
use crate::model::{check_denominator, f_factor, Complex, ModelParams};
use crate::quad::{integrate_groups, integrate_shifted_circle, FnIntegrand, QuadOptions, VariableGroup};

/// Permutation sums are enumerated explicitly up to this order.
pub const MAX_PERMUTATION_ORDER: usize = 9;

/// Distance below which a random point counts as sitting on a pole set.
const POLE_MARGIN: f64 = 1e-3;

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// `sum over permutations s of prod_{i>j} (p + q xi_{s(i)} xi_{s(j)} - xi_{s(i)}) / (xi_{s(j)} - xi_{s(i)})
///  prod_l 1 / (xi_{s(l)}^2 ... xi_{s(k)}^2 - tau^{k-l+1})`, by enumeration.
pub fn lemma32_lhs(xi: &[Complex], params: &ModelParams) -> Result<Complex> {
    let k = xi.len();
    if k == 0 {
        return Err(AsepError::InvalidQuery("need at least one variable".into()));
    }
    if k > MAX_PERMUTATION_ORDER {
        return Err(AsepError::TooLarge(format!("{k}! permutations; at most {MAX_PERMUTATION_ORDER}")));
    }
    let (p, q, tau) = (params.p(), params.q(), params.tau());
    let mut perm: Vec<usize> = (0..k).collect();
    let mut sum = Complex::new(0.0, 0.0);
    loop {
        let z: Vec<Complex> = perm.iter().map(|&i| xi[i]).collect();
        let mut term = Complex::new(1.0, 0.0);
        for i in 0..k {
            for j in 0..i {
                let den = z[j] - z[i];
                check_denominator(den, z[i].norm() + z[j].norm(), "xi_j - xi_i")?;
                term *= (p + q * z[i] * z[j] - z[i]) / den;
            }
        }
        let mut tail = Complex::new(1.0, 0.0);
        for l in (0..k).rev() {
            tail *= z[l] * z[l];
            let den = tail - tau.powi((k - l) as i32);
            check_denominator(den, tail.norm() + 1.0, "partial product minus tau power")?;
            term /= den;
        }
        sum += term;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(sum)
}

/// `(1 + tau)^{-k(k-1)/2} prod_{i<j} (1 + tau - xi_i - xi_j) / (tau - xi_i xi_j) prod_i 1 / (xi_i^2 - tau)`.
pub fn lemma32_rhs(xi: &[Complex], params: &ModelParams) -> Result<Complex> {
    let k = xi.len();
    let tau = params.tau();
    let mut acc = Complex::new((1.0 + tau).powi(-((k * k.saturating_sub(1) / 2) as i32)), 0.0);
    for i in 0..k {
        for j in i + 1..k {
            let den = tau - xi[i] * xi[j];
            check_denominator(den, tau + (xi[i] * xi[j]).norm(), "tau - xi_i xi_j")?;
            acc *= (1.0 + tau - xi[i] - xi[j]) / den;
        }
        let den = xi[i] * xi[i] - tau;
        check_denominator(den, xi[i].norm_sqr() + tau, "xi^2 - tau")?;
        acc /= den;
    }
    Ok(acc)
}

/// Relative residual of `det(1 / (p + q xi_i xi_j - xi_i))` against
/// `(-1)^k (pq)^{k(k-1)/2} q^{-k} prod_{i != j} f(xi_i, xi_j) prod_i 1 / ((1 - xi_i)(xi_i - tau))`.
pub fn lemma31_check(xi: &[Complex], params: &ModelParams) -> Result<f64> {
    let k = xi.len();
    let (p, q, tau) = (params.p(), params.q(), params.tau());
    let mut m = Vec::with_capacity(k * k);
    for &a in xi {
        for &b in xi {
            let den = p + q * a * b - a;
            check_denominator(den, p + q * (a * b).norm() + a.norm(), "matrix entry denominator")?;
            m.push(den.inv());
        }
    }
    let lhs = det(&m, k);
    let kk = k as i32;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut rhs = Complex::new(sign * (p * q).powi(kk * (kk - 1) / 2) * q.powi(-kk), 0.0);
    for (i, &a) in xi.iter().enumerate() {
        for (j, &b) in xi.iter().enumerate() {
            if i != j {
                rhs *= f_factor(a, b, params)?;
            }
        }
        let den = (1.0 - a) * (a - tau);
        check_denominator(den, (1.0 + a.norm()) * (a.norm() + tau), "(1 - xi)(xi - tau)")?;
        rhs /= den;
    }
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// The residue function used to prove the symmetrisation identity:
/// `prod_l (p + q xi_l z - xi_l) / (z - xi_l) prod_l (tau - z xi_l) / (1 + tau - z - xi_l)
///  (2z - 1 - tau) / ((z - 1)(qz - p))`.
pub fn residue_g(z: Complex, xi: &[Complex], params: &ModelParams) -> Complex {
    let (p, q, tau) = (params.p(), params.q(), params.tau());
    let mut acc = (2.0 * z - 1.0 - tau) / ((z - 1.0) * (q * z - p));
    for &a in xi {
        acc *= (p + q * a * z - a) / (z - a) * (tau - z * a) / (1.0 + tau - z - a);
    }
    acc
}

/// Residuals of the residue identity and of the contour facts used in its
/// proof, each relative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidueResiduals {
    /// `(prod xi^2 - tau^k) / (1 + tau)^{k-1}` against the residue sum.
    pub identity: f64,
    /// Large-circle integral of `g` against `2 q^{k-1} prod xi^2`.
    pub contour: f64,
    /// Residue of `g` at `z = 1` against `p^k / q`.
    pub at_one: f64,
    /// Residue of `g` at `z = tau` against `p^k / q`.
    pub at_tau: f64,
}

impl ResidueResiduals {
    pub fn max(&self) -> f64 {
        self.identity.max(self.contour).max(self.at_one).max(self.at_tau)
    }

    fn merge(self, other: Self) -> Self {
        Self {
            identity: self.identity.max(other.identity),
            contour: self.contour.max(other.contour),
            at_one: self.at_one.max(other.at_one),
            at_tau: self.at_tau.max(other.at_tau),
        }
    }
}

fn g_poles(xi: &[Complex], params: &ModelParams) -> Vec<Complex> {
    let tau = params.tau();
    let mut poles = vec![Complex::new(1.0, 0.0), Complex::new(tau, 0.0)];
    for &a in xi {
        poles.push(a);
        poles.push(1.0 + tau - a);
    }
    poles
}

fn residue_at(center: Complex, xi: &[Complex], params: &ModelParams) -> Result<Complex> {
    let gap = g_poles(xi, params)
        .into_iter()
        .map(|w| (w - center).norm())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-6 {
        return Err(AsepError::Precondition(format!("poles of g coalesce near {center}")));
    }
    let opts = QuadOptions { tol: 1e-14, min_nodes: 16, max_nodes: 1024, max_tuples: 1 << 20 };
    Ok(integrate_shifted_circle(|z| residue_g(z, xi, params), center, 0.5 * gap, &opts)?.value)
}

/// Checks the residue identity at `xi` directly, through the contour
/// integral of `g`, and through the residues of `g` at `1` and `tau`.
pub fn residue_identity_check(xi: &[Complex], params: &ModelParams) -> Result<ResidueResiduals> {
    let k = xi.len();
    let (p, q, tau) = (params.p(), params.q(), params.tau());
    let prod_sq: Complex = xi.iter().map(|z| z * z).product();
    let lhs = (prod_sq - tau.powi(k as i32)) / (1.0 + tau).powi(k as i32 - 1);
    let mut rhs = Complex::new(0.0, 0.0);
    for (l, &a) in xi.iter().enumerate() {
        let mut term = a * a - tau;
        for (i, &b) in xi.iter().enumerate() {
            if i == l {
                continue;
            }
            let d1 = a - b;
            let d2 = 1.0 + tau - a - b;
            check_denominator(d1, a.norm() + b.norm(), "xi_l - xi_i")?;
            check_denominator(d2, 1.0 + tau + a.norm() + b.norm(), "1 + tau - xi_l - xi_i")?;
            term *= (p + q * b * a - b) / d1 * (tau - a * b) / d2;
        }
        rhs += term;
    }
    let identity = (lhs - rhs).norm() / lhs.norm().max(rhs.norm());

    let reach = g_poles(xi, params).iter().map(|w| w.norm()).fold(0.0, f64::max);
    let expect = 2.0 * q.powi(k as i32 - 1) * prod_sq;
    let opts = QuadOptions { tol: 1e-14 * expect.norm(), min_nodes: 16, max_nodes: 512, max_tuples: 1 << 20 };
    let g = FnIntegrand(|z: &[Complex]| residue_g(z[0], xi, params));
    let ring = [VariableGroup { radius: 10.0 * reach, count: 1, symmetric: false }];
    let integral = integrate_groups(&g, &ring, &opts)?.value;
    let contour = (integral - expect).norm() / expect.norm();

    let known = p.powi(k as i32) / q;
    let at_one = (residue_at(Complex::new(1.0, 0.0), xi, params)? - known).norm() / known;
    let at_tau = (residue_at(Complex::new(tau, 0.0), xi, params)? - known).norm() / known;
    Ok(ResidueResiduals { identity, contour, at_one, at_tau })
}

fn far_from_poles(xi: &[Complex], params: &ModelParams) -> bool {
    let (p, q, tau) = (params.p(), params.q(), params.tau());
    let ok = |z: Complex| z.norm() > POLE_MARGIN;
    for (i, &a) in xi.iter().enumerate() {
        if !ok(a - 1.0) || !ok(a - tau) || !ok(a * a - tau) || !ok(1.0 + tau - 2.0 * a) {
            return false;
        }
        for (j, &b) in xi.iter().enumerate() {
            if i == j {
                continue;
            }
            if !ok(a - b) || !ok(p + q * a * b - a) || !ok(tau - a * b) || !ok(1.0 + tau - a - b) {
                return false;
            }
        }
    }
    true
}

/// `k` points with moduli in `[2, 4]` and jittered angles, redrawn until
/// every pole set of the identities is at least `1e-3` away.
pub fn random_points(k: usize, params: &ModelParams, rng: &mut impl Rng) -> Vec<Complex> {
    loop {
        let offset = rng.random::<f64>() * std::f64::consts::TAU;
        let pts: Vec<Complex> = (0..k)
            .map(|i| {
                let radius = 2.0 + 2.0 * rng.random::<f64>();
                let jitter = (rng.random::<f64>() - 0.5) * std::f64::consts::TAU / (2.0 * k as f64);
                let angle = offset + std::f64::consts::TAU * i as f64 / k as f64 + jitter;
                Complex::from_polar(radius, angle)
            })
            .collect();
        if far_from_poles(&pts, params) {
            return pts;
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trials<T: Send>(
    k: usize,
    trials: usize,
    params: &ModelParams,
    seed: u64,
    check: impl Fn(&[Complex]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let pts = random_points(k, params, &mut trial_rng(seed, trial));
            check(&pts)
        })
        .collect()
}

/// Largest relative residual of the symmetrisation identity over random
/// point sets of size `k`.
pub fn lemma32_trials(k: usize, trials: usize, params: &ModelParams, seed: u64) -> Result<f64> {
    let res = run_trials(k, trials, params, seed, |xi| {
        let (l, r) = (lemma32_lhs(xi, params)?, lemma32_rhs(xi, params)?);
        Ok((l - r).norm() / r.norm())
    })?;
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// Largest residual of the determinant identity over random point sets.
pub fn lemma31_trials(k: usize, trials: usize, params: &ModelParams, seed: u64) -> Result<f64> {
    let res = run_trials(k, trials, params, seed, |xi| lemma31_check(xi, params))?;
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// Field-wise maximum of [`residue_identity_check`] over random point sets.
pub fn residue_trials(k: usize, trials: usize, params: &ModelParams, seed: u64) -> Result<ResidueResiduals> {
    let res = run_trials(k, trials, params, seed, |xi| residue_identity_check(xi, params))?;
    Ok(res.into_iter().fold(ResidueResiduals::default(), ResidueResiduals::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn params() -> ModelParams {
        ModelParams::new(0.3).unwrap()
    }

    #[test]
    fn permutations_enumerated() {
        let mut a = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut a) {
            n += 1;
        }
        assert_eq!(n, 24);
    }

    #[test]
    fn lemma32_order_one_and_two() {
        let m = params();
        let z = c(2.3, -0.4);
        let expect = (z * z - m.tau()).inv();
        assert!((lemma32_lhs(&[z], &m).unwrap() - expect).norm() < 1e-15);
        assert!((lemma32_rhs(&[z], &m).unwrap() - expect).norm() < 1e-15);

        let xi = [c(2.0, 0.5), c(-1.3, 0.2)];
        let (l, r) = (lemma32_lhs(&xi, &m).unwrap(), lemma32_rhs(&xi, &m).unwrap());
        assert!((l - r).norm() <= 1e-12 * r.norm(), "{l} {r}");
        let swapped = lemma32_rhs(&[xi[1], xi[0]], &m).unwrap();
        assert!((swapped - r).norm() <= 1e-15 * r.norm());
    }

    #[test]
    fn lemma32_order_three() {
        let m = params();
        let xi: Vec<Complex> = (0..3).map(|i| Complex::from_polar(2.0, 0.3 + 2.1 * i as f64)).collect();
        let (l, r) = (lemma32_lhs(&xi, &m).unwrap(), lemma32_rhs(&xi, &m).unwrap());
        assert!((l - r).norm() <= 1e-10 * r.norm());
    }

    #[test]
    fn lemma32_guard() {
        let m = params();
        let xi: Vec<Complex> = (0..10).map(|i| Complex::from_polar(3.0, i as f64)).collect();
        assert!(matches!(lemma32_lhs(&xi, &m), Err(AsepError::TooLarge(_))));
    }

    #[test]
    fn lemma31_orders() {
        let m = params();
        assert!(lemma31_check(&[c(2.5, 0.7)], &m).unwrap() < 1e-15);
        assert!(lemma31_check(&[c(2.5, 0.7), c(-1.1, 3.0)], &m).unwrap() < 1e-12);
        let xi: Vec<Complex> = (0..5).map(|i| Complex::from_polar(3.0, 0.2 + 1.2 * i as f64)).collect();
        assert!(lemma31_check(&xi, &m).unwrap() < 1e-9);
    }

    #[test]
    fn residue_identity_orders() {
        let m = params();
        let z = c(2.2, 0.9);
        let one = residue_identity_check(&[z], &m).unwrap();
        assert!(one.identity < 1e-15);
        let two = residue_identity_check(&[c(2.0, 0.5), c(-1.3, 2.2)], &m).unwrap();
        assert!(two.identity < 1e-11 && two.contour < 1e-9, "{two:?}");
        assert!(two.at_one < 1e-8 && two.at_tau < 1e-8, "{two:?}");
    }

    #[test]
    fn trials_are_reproducible() {
        let m = params();
        let a = lemma32_trials(3, 8, &m, 7).unwrap();
        let b = lemma32_trials(3, 8, &m, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn lemma32_holds(seed in any::<u64>(), k in 1usize..=5, p in 0.05f64..0.95) {
                let m = ModelParams::new(p).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xi = random_points(k, &m, &mut rng);
                let (l, r) = (lemma32_lhs(&xi, &m).unwrap(), lemma32_rhs(&xi, &m).unwrap());
                prop_assert!((l - r).norm() <= 1e-9 * r.norm());
            }

            #[test]
            fn lemma31_holds(seed in any::<u64>(), k in 1usize..=6, p in 0.05f64..0.95) {
                let m = ModelParams::new(p).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xi = random_points(k, &m, &mut rng);
                // LU loses digits in proportion to Hadamard bound / |det|
                let entries: Vec<Complex> =
                    xi.iter().flat_map(|&a| xi.iter().map(move |&b| (m.p() + m.q() * a * b - a).inv())).collect();
                let hadamard: f64 =
                    entries.chunks(k).map(|row| row.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()).product();
                let cond = hadamard / crate::linalg::det(&entries, k).norm();
                let r = lemma31_check(&xi, &m).unwrap();
                prop_assert!(r <= 1e-13 * cond.max(1.0), "{r} {cond}");
            }
        }
    }
}
