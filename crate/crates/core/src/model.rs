//! Model parameters, the shared domain vocabulary, and the elementary
//! Bethe-ansatz scalar functions every formula is built from.

use std::fmt;

use crate::error::{AsepError, Result};

pub type Complex = num_complex::Complex64;

/// Relative size below which a denominator is treated as vanishing.
pub(crate) const POLE_EPS: f64 = 1e-13;

/// Hop rates of the exclusion process. Only `p` is stored; `q = 1 - p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    p: f64,
    q: f64,
    tau: f64,
}

impl ModelParams {
    /// Right-hop rate `p` in `[0, 1)`; `q = 1 - p` must stay nonzero.
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || !(0.0..1.0).contains(&p) {
            return Err(AsepError::InvalidParams(format!(
                "p must lie in [0, 1), got {p}"
            )));
        }
        let q = 1.0 - p;
        Ok(Self { p, q, tau: p / q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `tau = p / q`.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Parameters of the mirrored process (`p` and `q` exchanged).
    pub fn reflected(&self) -> Result<Self> {
        Self::new(self.q)
    }

    /// Formulas that divide by `tau` call this first.
    pub fn require_positive_p(&self) -> Result<()> {
        if self.p > 0.0 {
            Ok(())
        } else {
            Err(AsepError::InvalidParams(
                "p = 0 makes tau = 0; this formula divides by tau".into(),
            ))
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} q={} tau={}", self.p, self.q, self.tau)
    }
}

/// A finite set of initially occupied sites, split into a left part `Y-`
/// (integrated on the small circle) and a right part `Y+` (large circle).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSet {
    sites: Vec<i64>,
    split: usize,
}

impl FiniteSet {
    /// Sites must be strictly increasing. The split is placed at 0:
    /// negative sites form `Y-`.
    pub fn new(sites: Vec<i64>) -> Result<Self> {
        let split = sites.iter().take_while(|&&s| s < 0).count();
        Self::with_split(sites, split)
    }

    /// Like [`FiniteSet::new`] but with the first `split` sites forming `Y-`.
    pub fn with_split(sites: Vec<i64>, split: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(AsepError::InvalidQuery("initial set is empty".into()));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AsepError::InvalidQuery(format!(
                "initial sites must be strictly increasing: {sites:?}"
            )));
        }
        if split > sites.len() {
            return Err(AsepError::InvalidQuery(format!(
                "split {split} exceeds {} sites",
                sites.len()
            )));
        }
        Ok(Self { sites, split })
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn negative(&self) -> &[i64] {
        &self.sites[..self.split]
    }

    pub fn positive(&self) -> &[i64] {
        &self.sites[self.split..]
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialCondition {
    FiniteSet(FiniteSet),
    /// Every odd site occupied.
    AlternatingZ,
    /// Sites `2n - k0` for `n >= 1`.
    OneSidedAlternating { k0: i64 },
    /// Sites `1, 2, 3, ...`.
    StepPositive,
}

impl InitialCondition {
    pub fn is_occupied(&self, site: i64) -> bool {
        match self {
            InitialCondition::FiniteSet(y) => y.sites.binary_search(&site).is_ok(),
            InitialCondition::AlternatingZ => site.rem_euclid(2) == 1,
            InitialCondition::OneSidedAlternating { k0 } => {
                let n2 = site + k0;
                n2 >= 2 && n2 % 2 == 0
            }
            InitialCondition::StepPositive => site >= 1,
        }
    }

    /// Occupied sites inside `[lo, hi]`, increasing.
    pub fn occupied_in(&self, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).filter(|&s| self.is_occupied(s)).collect()
    }

    /// Starting site of the tagged particle a query refers to. For the
    /// two-sided alternating condition the label already is the site; for
    /// the others `m` counts particles from the left.
    pub fn tagged_origin(&self, m: i64) -> Result<i64> {
        match self {
            InitialCondition::AlternatingZ => {
                if m.rem_euclid(2) != 1 {
                    return Err(AsepError::InvalidQuery(format!(
                        "alternating label m must be odd, got {m}"
                    )));
                }
                Ok(m)
            }
            InitialCondition::FiniteSet(y) => {
                if m < 1 || m as usize > y.len() {
                    return Err(AsepError::InvalidQuery(format!(
                        "particle index m must lie in 1..={}, got {m}",
                        y.len()
                    )));
                }
                Ok(y.sites[m as usize - 1])
            }
            InitialCondition::OneSidedAlternating { k0 } => {
                if m < 1 {
                    return Err(AsepError::InvalidQuery(format!(
                        "particle index m must be >= 1, got {m}"
                    )));
                }
                Ok(2 * m - k0)
            }
            InitialCondition::StepPositive => {
                if m < 1 {
                    return Err(AsepError::InvalidQuery(format!(
                        "particle index m must be >= 1, got {m}"
                    )));
                }
                Ok(m)
            }
        }
    }
}

/// What is asked: `P(X_m(t) <= x)` to absolute tolerance `tol`, with at most
/// `kmax` series shells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionQuery {
    pub m: i64,
    pub x: i64,
    pub t: f64,
    pub kmax: usize,
    pub tol: f64,
}

impl DistributionQuery {
    pub fn new(m: i64, x: i64, t: f64) -> Self {
        Self {
            m,
            x,
            t,
            kmax: 8,
            tol: 1e-9,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_kmax(mut self, kmax: usize) -> Self {
        self.kmax = kmax;
        self
    }

    pub fn at(mut self, x: i64) -> Self {
        self.x = x;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kmax < 1 {
            return Err(AsepError::InvalidQuery("kmax must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(AsepError::InvalidQuery("tol must be > 0".into()));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(AsepError::InvalidQuery(format!(
                "time must be finite and >= 0, got {}",
                self.t
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_denominator(den: Complex, scale: f64, what: &str) -> Result<()> {
    if !den.is_finite() || den.norm() <= POLE_EPS * scale.max(f64::MIN_POSITIVE) {
        return Err(AsepError::Pole(format!("{what} vanishes (|den| = {:.3e})", den.norm())));
    }
    Ok(())
}

/// `p / xi + q xi - 1`.
pub fn epsilon(xi: Complex, params: &ModelParams) -> Result<Complex> {
    if xi.norm() == 0.0 {
        return Err(AsepError::Domain("epsilon is singular at xi = 0".into()));
    }
    Ok(epsilon_raw(xi, params))
}

#[inline]
pub(crate) fn epsilon_raw(xi: Complex, params: &ModelParams) -> Complex {
    params.p / xi + params.q * xi - 1.0
}

/// `(xi_j - xi_i) / (p + q xi_i xi_j - xi_i)`.
pub fn f_factor(xi_i: Complex, xi_j: Complex, params: &ModelParams) -> Result<Complex> {
    let den = f_denominator(xi_i, xi_j, params);
    check_denominator(
        den,
        params.p + params.q * (xi_i * xi_j).norm() + xi_i.norm(),
        "f denominator p + q xi_i xi_j - xi_i",
    )?;
    Ok((xi_j - xi_i) / den)
}

#[inline]
pub(crate) fn f_denominator(xi_i: Complex, xi_j: Complex, params: &ModelParams) -> Complex {
    params.p + params.q * xi_i * xi_j - xi_i
}

#[inline]
pub(crate) fn f_raw(xi_i: Complex, xi_j: Complex, params: &ModelParams) -> Complex {
    (xi_j - xi_i) / f_denominator(xi_i, xi_j, params)
}

/// `xi^x e^{t eps(xi)} / (1 - xi)`, the single-variable factor of `I(x, xi)`.
#[inline]
pub(crate) fn single_weight_raw(xi: Complex, x: i64, t: f64, params: &ModelParams) -> Complex {
    powi(xi, x) * (epsilon_raw(xi, params) * t).exp() / (1.0 - xi)
}

#[inline]
pub(crate) fn powi(xi: Complex, n: i64) -> Complex {
    match i32::try_from(n) {
        Ok(n) => xi.powi(n),
        Err(_) => xi.powf(n as f64),
    }
}

/// The Bethe-ansatz weight
/// `I(x, xi) = prod_{i<j} f(xi_i, xi_j) prod_i xi_i^x e^{eps(xi_i) t} / (1 - xi_i)`.
///
/// The pair product runs over tuple positions, so callers order the tuple
/// as `(xi_{-k-}, ..., xi_{-1}, xi_1, ..., xi_{k+})`.
pub fn i_weight(x: i64, xi: &[Complex], t: f64, params: &ModelParams) -> Result<Complex> {
    let mut acc = Complex::new(1.0, 0.0);
    for (i, &a) in xi.iter().enumerate() {
        for &b in &xi[i + 1..] {
            acc *= f_factor(a, b, params)?;
        }
    }
    for &z in xi {
        check_denominator(1.0 - z, 1.0 + z.norm(), "1 - xi")?;
        acc *= powi(z, x) * (epsilon(z, params)? * t).exp() / (1.0 - z);
    }
    if !acc.is_finite() {
        return Err(AsepError::Domain("I(x, xi) overflowed".into()));
    }
    Ok(acc)
}
