//! Forward equation of the exclusion process restricted to a finite window,
//! integrated with an adaptive Dormand-Prince 5(4) pair.

use rayon::prelude::*;

use crate::error::{AsepError, Result};
use crate::model::{FiniteSet, ModelParams};

pub const MAX_PARTICLES: usize = 8;
pub const MAX_STATES: usize = 1_000_000;
pub const BOUNDARY_LIMIT: f64 = 1e-8;

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-15;

/// Sites added on each side of the initial set by [`light_cone_window`].
pub fn light_cone_margin(t: f64) -> i64 {
    10 + (5.0 * t).ceil() as i64
}

pub fn light_cone_window(y: &FiniteSet, t: f64) -> (i64, i64) {
    let margin = light_cone_margin(t);
    (y.sites()[0] - margin, y.sites()[y.len() - 1] + margin)
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Colex ranking of strictly increasing offsets.
struct Ranking {
    table: Vec<Vec<usize>>,
}

impl Ranking {
    fn new(width: usize, n: usize) -> Self {
        Self {
            table: (0..=width).map(|o| (0..=n).map(|i| binom(o, i)).collect()).collect(),
        }
    }

    fn rank(&self, offsets: &[usize]) -> usize {
        offsets.iter().enumerate().map(|(i, &o)| self.table[o][i + 1]).sum()
    }

    fn unrank(&self, mut r: usize, out: &mut [usize]) {
        let mut o = self.table.len() - 1;
        for i in (0..out.len()).rev() {
            while self.table[o][i + 1] > r {
                o -= 1;
            }
            out[i] = o;
            r -= self.table[o][i + 1];
            o = o.saturating_sub(1);
        }
    }
}

struct Generator {
    /// CSR rows: incoming transitions `(source, rate)` per state.
    row_start: Vec<usize>,
    src: Vec<u32>,
    rate: Vec<f64>,
    outflow: Vec<f64>,
}

impl Generator {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(s, o)| {
            let mut acc = -self.outflow[s] * x[s];
            for e in self.row_start[s]..self.row_start[s + 1] {
                acc += self.rate[e] * x[self.src[e] as usize];
            }
            *o = acc;
        });
    }
}

/// Exact ordered-particle marginals on a finite window.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub window: (i64, i64),
    pub t: f64,
    /// `cdf[i][s - lo] = P(x_{i+1}(t) <= s)`.
    pub cdf: Vec<Vec<f64>>,
    /// Probability that some particle is within two sites of a window edge.
    pub boundary_mass: f64,
    pub total_mass: f64,
    pub states: usize,
}

impl MasterSolution {
    /// `P(x_m(t) <= x)` for the `m`-th particle from the left (1-based).
    pub fn cdf_at(&self, m: usize, x: i64) -> f64 {
        let (lo, hi) = self.window;
        if x < lo {
            0.0
        } else if x >= hi {
            self.cdf[m - 1][(hi - lo) as usize]
        } else {
            self.cdf[m - 1][(x - lo) as usize]
        }
    }
}

/// Integrates the forward equation from the point mass on `y` to time `t`
/// with jumps out of `[lo, hi]` suppressed.
pub fn master_equation(y: &FiniteSet, window: (i64, i64), t: f64, params: &ModelParams) -> Result<MasterSolution> {
    let (lo, hi) = window;
    let n = y.len();
    if n > MAX_PARTICLES {
        return Err(AsepError::TooLarge(format!("{n} particles; at most {MAX_PARTICLES}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(AsepError::InvalidQuery(format!("time must be finite and >= 0, got {t}")));
    }
    if y.sites()[0] < lo || y.sites()[n - 1] > hi {
        return Err(AsepError::WindowTooSmall(format!("initial sites outside [{lo}, {hi}]")));
    }
    let width = (hi - lo + 1) as usize;
    let count = binom(width, n);
    if count > MAX_STATES {
        return Err(AsepError::TooLarge(format!("{count} states; at most {MAX_STATES}")));
    }
    let ranking = Ranking::new(width, n);
    let (p, q) = (params.p(), params.q());

    // incoming transitions: particle i now at offset a came from a - 1 (right jump)
    // or from a + 1 (left jump), provided that site was free
    let rows: Vec<(Vec<(u32, f64)>, f64)> = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut s = vec![0usize; n];
            ranking.unrank(r, &mut s);
            let mut incoming = Vec::with_capacity(2 * n);
            let mut outflow = 0.0;
            for i in 0..n {
                let a = s[i];
                let left_free = a > 0 && (i == 0 || s[i - 1] != a - 1);
                let right_free = a + 1 < width && (i + 1 == n || s[i + 1] != a + 1);
                if right_free {
                    outflow += p;
                }
                if left_free {
                    outflow += q;
                }
                if left_free && p > 0.0 {
                    let mut from = s.clone();
                    from[i] = a - 1;
                    incoming.push((ranking.rank(&from) as u32, p));
                }
                if right_free && q > 0.0 {
                    let mut from = s.clone();
                    from[i] = a + 1;
                    incoming.push((ranking.rank(&from) as u32, q));
                }
            }
            (incoming, outflow)
        })
        .collect();
    let mut gen = Generator { row_start: vec![0], src: Vec::new(), rate: Vec::new(), outflow: Vec::with_capacity(count) };
    for (incoming, outflow) in rows {
        for (s, r) in incoming {
            gen.src.push(s);
            gen.rate.push(r);
        }
        gen.row_start.push(gen.src.len());
        gen.outflow.push(outflow);
    }

    let start: Vec<usize> = y.sites().iter().map(|&s| (s - lo) as usize).collect();
    let mut prob = vec![0.0; count];
    prob[ranking.rank(&start)] = 1.0;
    integrate(&gen, &mut prob, t)?;

    let mut cdf = vec![vec![0.0; width]; n];
    let mut boundary_mass = 0.0;
    let mut total_mass = 0.0;
    let mut s = vec![0usize; n];
    for (r, &pr) in prob.iter().enumerate() {
        ranking.unrank(r, &mut s);
        total_mass += pr;
        if s[0] <= 2 || s[n - 1] + 3 >= width {
            boundary_mass += pr;
        }
        for (i, &o) in s.iter().enumerate() {
            cdf[i][o] += pr;
        }
    }
    for row in &mut cdf {
        let mut acc = 0.0;
        for v in row.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    if boundary_mass > BOUNDARY_LIMIT {
        return Err(AsepError::WindowTooSmall(format!(
            "boundary mass {boundary_mass:.3e} exceeds {BOUNDARY_LIMIT:e}; enlarge the window"
        )));
    }
    Ok(MasterSolution { window, t, cdf, boundary_mass, total_mass, states: count })
}

// Dormand-Prince 5(4) tableau; the equation is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate(gen: &Generator, y: &mut Vec<f64>, t_end: f64) -> Result<()> {
    let n = y.len();
    let mut t = 0.0;
    let mut h = (t_end / 16.0).clamp(1e-6, 0.05);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    gen.apply(y, &mut k[0]);
    let mut steps = 0usize;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            stage
                .par_iter_mut()
                .enumerate()
                .with_min_len(4096)
                .for_each(|(i, v)| {
                    let mut acc = y[i];
                    for (j, kj) in done.iter().enumerate() {
                        acc += h * A[s][j] * kj[i];
                    }
                    *v = acc;
                });
            gen.apply(&stage, &mut rest[0]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut hi5 = y[i];
            let mut diff = 0.0;
            for s in 0..7 {
                hi5 += h * B5[s] * k[s][i];
                diff += h * (B5[s] - B4[s]) * k[s][i];
            }
            y5[i] = hi5;
            let scale = ATOL + RTOL * y[i].abs().max(hi5.abs());
            err = err.max(diff.abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(y, &mut y5);
            // first-same-as-last: the last stage is the derivative at the new point
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        if steps > 1_000_000 || h < 1e-14 {
            return Err(AsepError::Domain("master equation step size collapsed".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::skellam_single;

    #[test]
    fn ranking_roundtrip() {
        let r = Ranking::new(7, 3);
        let mut seen = vec![false; binom(7, 3)];
        let mut s = [0usize; 3];
        for rank in 0..binom(7, 3) {
            r.unrank(rank, &mut s);
            assert!(s[0] < s[1] && s[1] < s[2] && s[2] < 7);
            assert_eq!(r.rank(&s), rank);
            seen[rank] = true;
        }
        assert!(seen.into_iter().all(|b| b));
    }

    #[test]
    fn single_particle_is_skellam() {
        let params = ModelParams::new(0.3).unwrap();
        let y = FiniteSet::new(vec![1]).unwrap();
        let t = 1.0;
        let sol = master_equation(&y, light_cone_window(&y, t), t, &params).unwrap();
        for x in -4..=5 {
            let expect = skellam_single(1, x, t, &params);
            assert!((sol.cdf_at(1, x) - expect).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn conservation_and_time_zero() {
        let params = ModelParams::new(0.3).unwrap();
        let y = FiniteSet::new(vec![1, 3]).unwrap();
        let sol = master_equation(&y, light_cone_window(&y, 0.7), 0.7, &params).unwrap();
        assert!((sol.total_mass - 1.0).abs() < 1e-12);
        assert!(sol.boundary_mass < BOUNDARY_LIMIT);
        let zero = master_equation(&y, light_cone_window(&y, 0.0), 0.0, &params).unwrap();
        assert_eq!(zero.cdf_at(1, 0), 0.0);
        assert_eq!(zero.cdf_at(1, 1), 1.0);
        assert_eq!(zero.cdf_at(2, 2), 0.0);
        assert_eq!(zero.cdf_at(2, 3), 1.0);
    }

    #[test]
    fn ordered_marginals_dominate() {
        let params = ModelParams::new(0.4).unwrap();
        let y = FiniteSet::new(vec![-1, 1, 2]).unwrap();
        let sol = master_equation(&y, light_cone_window(&y, 1.0), 1.0, &params).unwrap();
        for x in -10..10 {
            assert!(sol.cdf_at(1, x) >= sol.cdf_at(2, x) - 1e-14);
            assert!(sol.cdf_at(2, x) >= sol.cdf_at(3, x) - 1e-14);
        }
    }

    #[test]
    fn guards() {
        let params = ModelParams::new(0.3).unwrap();
        let y = FiniteSet::new(vec![1, 3]).unwrap();
        assert!(matches!(master_equation(&y, (0, 4), 2.0, &params), Err(AsepError::WindowTooSmall(_))));
        let many = FiniteSet::new((0..9).collect()).unwrap();
        assert!(matches!(master_equation(&many, (-20, 30), 1.0, &params), Err(AsepError::TooLarge(_))));
    }
}
