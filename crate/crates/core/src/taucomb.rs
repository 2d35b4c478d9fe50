//! tau-deformed combinatorics: Gaussian binomials, the inversion count
//! `sigma(U, V)`, and subset enumeration for the finite-set formula.

/// `1 - tau^e`, accurate when `tau` is close to one.
fn one_minus_pow(tau: f64, e: i64) -> f64 {
    if tau == 0.0 {
        return if e == 0 { 0.0 } else { 1.0 };
    }
    -(e as f64 * tau.ln()).exp_m1()
}

fn classical_binomial(n_total: i64, n: i64) -> f64 {
    let n = n.min(n_total - n);
    (0..n).fold(1.0, |acc, j| acc * (n_total - j) as f64 / (j + 1) as f64)
}

/// The tau-binomial coefficient
/// `prod_{j<n} (1 - tau^{N-j}) / prod_{j=1..n} (1 - tau^j)`.
///
/// Out-of-range lower indices (`n < 0` or `n > N`) give exactly zero, which
/// also covers every negative upper index. At `tau = 1` the classical
/// binomial is returned.
pub fn tau_binomial(big_n: i64, n: i64, tau: f64) -> f64 {
    if n < 0 || n > big_n {
        return 0.0;
    }
    if n == 0 || n == big_n {
        return 1.0;
    }
    if (tau - 1.0).abs() < 1e-12 {
        return classical_binomial(big_n, n);
    }
    (0..n).fold(1.0, |acc, j| {
        acc * one_minus_pow(tau, big_n - j) / one_minus_pow(tau, j + 1)
    })
}

/// `#{(u, v) : u in U, v in V, u >= v}`.
pub fn sigma_count(u: &[i64], v: &[i64]) -> u64 {
    let mut sorted = v.to_vec();
    sorted.sort_unstable();
    u.iter()
        .map(|a| sorted.partition_point(|b| b <= a) as u64)
        .sum()
}

/// A choice `S- ⊂ Y-`, `S+ ⊂ Y+`, each sorted increasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubsetSelection {
    pub s_minus: Vec<i64>,
    pub s_plus: Vec<i64>,
}

/// Lexicographic stream of the size-`k` subsets of a sorted list.
#[derive(Debug, Clone)]
pub struct Subsets<'a> {
    items: &'a [i64],
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for Subsets<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.idx.iter().map(|&i| self.items[i]).collect();
        let n = self.items.len();
        let k = self.idx.len();
        match (0..k).rev().find(|&i| self.idx[i] < n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Every size-`k` subset of `side` exactly once, lexicographically. Empty
/// when `k > side.len()`; a single empty subset when `k == 0`.
pub fn enumerate_subsets(side: &[i64], k: usize) -> Subsets<'_> {
    Subsets {
        items: side,
        idx: (0..k).collect(),
        done: k > side.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_examples() {
        for tau in [0.2, 0.37, 0.9, 1.7] {
            let v = tau_binomial(3, 1, tau);
            assert!((v - (1.0 + tau + tau * tau)).abs() < 1e-13 * v);
        }
        assert_eq!(tau_binomial(4, 0, 0.37), 1.0);
        assert_eq!(tau_binomial(2, 3, 0.5), 0.0);
        assert_eq!(tau_binomial(2, -1, 0.5), 0.0);
        assert_eq!(tau_binomial(-1, 0, 0.5), 0.0);
        assert_eq!(tau_binomial(4, 2, 1.0), 6.0);
        assert!((tau_binomial(4, 2, 1.0 - 1e-9) - 6.0).abs() < 1e-6);
        assert_eq!(tau_binomial(5, 2, 0.0), 1.0);
    }

    #[test]
    fn tau_pascal_recursion() {
        for tau in [0.13, 0.42857, 0.8, 1.0, 2.3] {
            for big_n in 2..=12 {
                for n in 1..big_n {
                    let lhs = tau_binomial(big_n, n, tau);
                    let rhs = tau_binomial(big_n - 1, n - 1, tau)
                        + tau.powi(n as i32) * tau_binomial(big_n - 1, n, tau);
                    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "N={big_n} n={n} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_count(&[1, 3], &[2]), 1);
        assert_eq!(sigma_count(&[], &[1, 2]), 0);
        assert_eq!(sigma_count(&[3, 7], &[1, 5]), 3);
        assert_eq!(sigma_count(&[2, 4], &[2, 4]), 3);
    }

    #[test]
    fn subset_examples() {
        let got: Vec<_> = enumerate_subsets(&[1, 3, 5], 2).collect();
        assert_eq!(got, vec![vec![1, 3], vec![1, 5], vec![3, 5]]);
        let empty: Vec<_> = enumerate_subsets(&[1, 3, 5], 0).collect();
        assert_eq!(empty, vec![Vec::<i64>::new()]);
        assert_eq!(enumerate_subsets(&[1, 3, 5], 4).count(), 0);
        assert_eq!(enumerate_subsets(&[], 0).count(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn subset_count_is_binomial(n in 0usize..10, k in 0usize..11) {
                let items: Vec<i64> = (0..n as i64).map(|i| 2 * i - 5).collect();
                let count = enumerate_subsets(&items, k).count();
                let expect = if k > n { 0 } else { classical_binomial(n as i64, k as i64) as usize };
                prop_assert_eq!(count, expect);
            }

            #[test]
            fn sigma_complement(mut u in proptest::collection::btree_set(-20i64..20, 0..8),
                                v in proptest::collection::btree_set(-20i64..20, 0..8)) {
                u.retain(|x| !v.contains(x));
                let u: Vec<i64> = u.into_iter().collect();
                let v: Vec<i64> = v.into_iter().collect();
                let strict = u.iter().flat_map(|a| v.iter().map(move |b| (a, b)))
                    .filter(|(a, b)| a < b).count() as u64;
                prop_assert_eq!(sigma_count(&u, &v) + strict, (u.len() * v.len()) as u64);
            }
        }
    }
}
