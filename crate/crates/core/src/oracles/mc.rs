//! Continuous-time Monte Carlo of the exclusion process on a finite window.
//!
//! Every particle carries a rate-1 clock; the superposition is realised as
//! one exponential race with rate `N` followed by a uniform particle choice.
//! Particles never overtake one another, so they are stored as a sorted
//! array and a tagged particle keeps its array index for the whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{AsepError, Result};
use crate::model::{InitialCondition, ModelParams};

/// Trajectories per parallel work unit; fixed so results do not depend on
/// the worker count.
const CHUNK: u64 = 4096;
/// A trajectory is flagged when a tagged particle gets this close to an edge.
const EDGE_GUARD: i64 = 5;
/// Largest tolerated fraction of flagged trajectories.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-4;

pub fn mc_margin(t: f64) -> i64 {
    10 + (5.0 * t).ceil() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub initial: InitialCondition,
    pub window: (i64, i64),
    pub t_end: f64,
    pub trials: u64,
    pub seed: u64,
    pub tagged_origin: i64,
}

impl SimConfig {
    /// Window of twice the light-cone margin around the tagged particle (or
    /// around the whole set for finite initial conditions).
    pub fn new(params: ModelParams, initial: InitialCondition, tagged_origin: i64, t_end: f64, trials: u64, seed: u64) -> Self {
        let margin = 2 * mc_margin(t_end);
        let window = match &initial {
            InitialCondition::FiniteSet(y) => (
                y.sites()[0].min(tagged_origin) - margin,
                y.sites()[y.len() - 1].max(tagged_origin) + margin,
            ),
            _ => (tagged_origin - margin, tagged_origin + margin),
        };
        Self { params, initial, window, t_end, trials, seed, tagged_origin }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        let margin = mc_margin(self.t_end);
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(AsepError::InvalidQuery(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if self.trials == 0 {
            return Err(AsepError::InvalidQuery("trials must be >= 1".into()));
        }
        if self.tagged_origin - lo < margin || hi - self.tagged_origin < margin {
            return Err(AsepError::WindowTooSmall(format!(
                "window [{lo}, {hi}] leaves less than {margin} sites around {}",
                self.tagged_origin
            )));
        }
        if !self.initial.is_occupied(self.tagged_origin) {
            return Err(AsepError::InvalidQuery(format!("site {} is not initially occupied", self.tagged_origin)));
        }
        Ok(())
    }
}

/// Cumulative counts of a tagged position over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCdf {
    pub support: (i64, i64),
    /// `counts[s - lo]` trajectories ended at or left of `s`.
    pub counts: Vec<u64>,
    pub n: u64,
    pub flagged: u64,
}

impl EmpiricalCdf {
    fn from_histogram(support: (i64, i64), hist: &[u64], flagged: u64) -> Self {
        let mut acc = 0;
        let counts = hist
            .iter()
            .map(|&h| {
                acc += h;
                acc
            })
            .collect();
        Self { support, counts, n: acc, flagged }
    }

    pub fn count_at(&self, x: i64) -> u64 {
        let (lo, hi) = self.support;
        if x < lo {
            0
        } else if x >= hi {
            self.n
        } else {
            self.counts[(x - lo) as usize]
        }
    }

    pub fn cdf(&self, x: i64) -> f64 {
        self.count_at(x) as f64 / self.n as f64
    }

    /// `1.96 sqrt(F (1 - F) / n)`.
    pub fn ci_halfwidth(&self, x: i64) -> f64 {
        let f = self.cdf(x);
        1.96 * (f * (1.0 - f) / self.n as f64).sqrt()
    }

    /// Half-width with `F` replaced by `(count + 1) / (n + 2)`, so that
    /// sites where every or no trajectory landed still get a positive
    /// width of order `1/n`.
    pub fn smoothed_halfwidth(&self, x: i64) -> f64 {
        let f = (self.count_at(x) as f64 + 1.0) / (self.n as f64 + 2.0);
        1.96 * (f * (1.0 - f) / self.n as f64).sqrt()
    }

    /// `(value - F(x)) / smoothed_halfwidth(x)`.
    pub fn z_score(&self, x: i64, value: f64) -> f64 {
        (value - self.cdf(x)) / self.smoothed_halfwidth(x)
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged as f64 / self.n as f64
    }
}

fn trajectory_rng(seed: u64, trajectory: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory);
    rng
}

/// Runs one trajectory in place. Returns whether a watched particle came
/// within the edge guard.
fn run_trajectory(pos: &mut [i64], window: (i64, i64), t_end: f64, p: f64, watched: &[usize], rng: &mut ChaCha8Rng) -> bool {
    let (lo, hi) = window;
    let n = pos.len();
    let rate = n as f64;
    let mut t = 0.0;
    let mut flagged = false;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t > t_end {
            break;
        }
        let i = rng.random_range(0..n);
        let a = pos[i];
        let b = if rng.random::<f64>() < p { a + 1 } else { a - 1 };
        if b < lo || b > hi {
            continue;
        }
        if (b > a && i + 1 < n && pos[i + 1] == b) || (b < a && i > 0 && pos[i - 1] == b) {
            continue;
        }
        pos[i] = b;
        if !flagged && (b - lo < EDGE_GUARD || hi - b < EDGE_GUARD) && watched.contains(&i) {
            flagged = true;
        }
    }
    debug_assert!(pos.windows(2).all(|w| w[0] < w[1]));
    flagged
}

struct Chunk {
    hist: Vec<Vec<u64>>,
    flagged: u64,
    counts_left: Vec<u64>,
}

fn simulate(config: &SimConfig, origins: &[i64], count_site: Option<i64>) -> Result<(Vec<EmpiricalCdf>, Vec<u64>)> {
    config.validate()?;
    let (lo, hi) = config.window;
    let init = config.initial.occupied_in(lo, hi);
    let mut watched = Vec::with_capacity(origins.len());
    for &o in origins {
        let idx = init
            .binary_search(&o)
            .map_err(|_| AsepError::InvalidQuery(format!("site {o} is not initially occupied")))?;
        watched.push(idx);
    }
    let width = (hi - lo + 1) as usize;
    let n_chunks = config.trials.div_ceil(CHUNK);
    let p = config.params.p();
    let n_particles = init.len();

    let chunks: Vec<Chunk> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(config.trials);
            let mut chunk = Chunk {
                hist: vec![vec![0; width]; watched.len()],
                flagged: 0,
                counts_left: vec![0; n_particles + 1],
            };
            let mut pos = init.clone();
            for traj in start..end {
                pos.copy_from_slice(&init);
                let mut rng = trajectory_rng(config.seed, traj);
                if run_trajectory(&mut pos, config.window, config.t_end, p, &watched, &mut rng) {
                    chunk.flagged += 1;
                }
                for (h, &i) in chunk.hist.iter_mut().zip(&watched) {
                    h[(pos[i] - lo) as usize] += 1;
                }
                if let Some(x) = count_site {
                    chunk.counts_left[pos.partition_point(|&s| s <= x)] += 1;
                }
            }
            chunk
        })
        .collect();

    let mut hist = vec![vec![0u64; width]; watched.len()];
    let mut flagged = 0;
    let mut counts_left = vec![0u64; n_particles + 1];
    for chunk in chunks {
        for (h, ch) in hist.iter_mut().zip(&chunk.hist) {
            for (a, b) in h.iter_mut().zip(ch) {
                *a += b;
            }
        }
        for (a, b) in counts_left.iter_mut().zip(&chunk.counts_left) {
            *a += b;
        }
        flagged += chunk.flagged;
    }
    let fraction = flagged as f64 / config.trials as f64;
    if fraction > MAX_FLAGGED_FRACTION {
        return Err(AsepError::WindowTooSmall(format!(
            "{flagged} of {} trajectories reached the window edge",
            config.trials
        )));
    }
    let cdfs = hist.iter().map(|h| EmpiricalCdf::from_histogram(config.window, h, flagged)).collect();
    Ok((cdfs, counts_left))
}

/// Empirical law of the particle that starts at `config.tagged_origin`.
pub fn mc_simulate(config: &SimConfig) -> Result<EmpiricalCdf> {
    Ok(simulate(config, &[config.tagged_origin], None)?.0.remove(0))
}

/// Empirical laws of several tagged particles from the same trajectories.
pub fn mc_simulate_many(config: &SimConfig, origins: &[i64]) -> Result<Vec<EmpiricalCdf>> {
    Ok(simulate(config, origins, None)?.0)
}

/// Fraction of trajectories with at least `m` particles at or left of `x`,
/// for `m = 0, 1, ..., N`.
pub fn mc_current_tail(config: &SimConfig, x: i64) -> Result<Vec<f64>> {
    let (_, counts) = simulate(config, &[config.tagged_origin], Some(x))?;
    let total = config.trials as f64;
    let mut tail = vec![0.0; counts.len()];
    let mut acc = 0u64;
    for m in (0..counts.len()).rev() {
        acc += counts[m];
        tail[m] = acc as f64 / total;
    }
    Ok(tail)
}
