use super::{Accum, KeySet, SummaryStats};
use crate::error::{Error, Result};

/// Prefix sums `S_t = Σ k_l`, `T_t = Σ k_l²`, `U_t = Σ k_l·l` for `t = 0..=n`
/// (1-based `l`, index 0 holds zero).
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixSums<A = i128> {
    pub s: Vec<A>,
    pub t: Vec<A>,
    pub u: Vec<A>,
}

impl<A: Accum> PrefixSums<A> {
    /// Prefix sums over keys shifted by `k_1`.
    pub fn new(keys: &KeySet) -> Self {
        Self::from_values((0..keys.len()).map(|i| keys.shifted(i)))
    }

    /// Prefix sums over raw values, without shifting.
    pub fn from_values<I: IntoIterator<Item = u64>>(values: I) -> Self {
        let mut s = vec![A::zero()];
        let mut t = vec![A::zero()];
        let mut u = vec![A::zero()];
        for (l, k) in values.into_iter().enumerate() {
            let k = A::from_u64(k);
            s.push(s[l] + k);
            t.push(t[l] + k * k);
            u.push(u[l] + k * A::from_u64(l as u64 + 1));
        }
        PrefixSums { s, t, u }
    }

    /// Number of keys.
    pub fn n(&self) -> usize {
        self.s.len() - 1
    }

    /// Key at 0-based index `j`, recovered from the prefix differences.
    #[inline]
    pub fn key(&self, j: usize) -> A {
        self.s[j + 1] - self.s[j]
    }

    /// Moments of `K ⊎ Q_K(d)` where `d` is zero except for `extras`, a list
    /// of `(0-based key index, extra copies)` sorted by strictly increasing
    /// index. Runs in O(|extras|).
    pub fn with_extras(&self, extras: &[(usize, u64)]) -> SummaryStats<A> {
        let n = self.n();
        let total: u64 = extras.iter().map(|&(_, e)| e).sum();
        let sn = self.s[n];
        let mut sum_x = sn;
        let mut sum_x2 = self.t[n];
        let mut sum_xr = self.u[n];
        let mut before = 0u64;
        for &(g, e) in extras {
            if e == 0 {
                continue;
            }
            let k = self.key(g);
            let ea = A::from_u64(e);
            sum_x = sum_x + ea * k;
            sum_x2 = sum_x2 + ea * k * k;
            // every key after g moves up by e ranks
            sum_xr = sum_xr + ea * (sn - self.s[g + 1]);
            // the e copies of k_g sit right after the original (rank g+1+before)
            let e128 = e as u128;
            let pos = (g as u128 + 1 + before as u128) * e128 + e128 * (e128 + 1) / 2;
            sum_xr = sum_xr + k * A::from_u128(pos);
            before += e;
        }
        SummaryStats { m: n as u64 + total, sum_x, sum_x2, sum_xr }
    }
}

/// `Var_K'`, `Var_R'` and `Cov_K'R'` of a poisoned multiset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoisonedMoments {
    pub var_k: f64,
    pub var_r: f64,
    pub cov_kr: f64,
    pub mse: f64,
}

impl PoisonedMoments {
    pub fn from_stats<A: Accum>(stats: &SummaryStats<A>) -> Self {
        let m = stats.m as f64;
        let m2 = m * m;
        PoisonedMoments {
            var_k: stats.var_num().to_f64() / m2,
            var_r: (m2 - 1.0) / 12.0,
            cov_kr: stats.cov_num().to_f64() / m2,
            mse: stats.mse(),
        }
    }
}

/// Moments of `K ⊎ Q_K(a·e_1 + b·e_i + (λ−a−b)·e_n)` in O(1).
///
/// `interior` is the 0-based index of the middle key and must satisfy
/// `1 ≤ interior ≤ n−2` whenever `b > 0`.
pub fn poisoned_moments<A: Accum>(
    ps: &PrefixSums<A>,
    a: u64,
    b: u64,
    interior: usize,
    budget: u64,
) -> Result<PoisonedMoments> {
    let n = ps.n();
    if a + b > budget {
        return Err(Error::BudgetViolation { used: a + b, budget });
    }
    if b > 0 && (interior == 0 || interior + 1 >= n) {
        return Err(Error::IndexOutOfRange { index: interior, len: n });
    }
    let c = budget - a - b;
    let stats = if b > 0 {
        ps.with_extras(&[(0, a), (interior, b), (n - 1, c)])
    } else {
        ps.with_extras(&[(0, a), (n - 1, c)])
    };
    Ok(PoisonedMoments::from_stats(&stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::DoubleF64;

    fn direct(values: &[u64]) -> PoisonedMoments {
        let m = values.len() as f64;
        let mx = values.iter().map(|&v| v as f64).sum::<f64>() / m;
        let mr = (m + 1.0) / 2.0;
        let mut var_k = 0.0;
        let mut var_r = 0.0;
        let mut cov = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let dx = v as f64 - mx;
            let dr = (i + 1) as f64 - mr;
            var_k += dx * dx;
            var_r += dr * dr;
            cov += dx * dr;
        }
        PoisonedMoments {
            var_k: var_k / m,
            var_r: var_r / m,
            cov_kr: cov / m,
            mse: var_r / m - cov * cov / (m * var_k),
        }
    }

    fn close(a: &PoisonedMoments, b: &PoisonedMoments) -> bool {
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-9);
        rel(a.var_k, b.var_k) && rel(a.var_r, b.var_r) && rel(a.cov_kr, b.cov_kr)
    }

    #[test]
    fn unshifted_illustrations() {
        let ps = PrefixSums::<i128>::from_values([1, 2, 3]);
        assert_eq!(ps.s, vec![0, 1, 3, 6]);
        let ps = PrefixSums::<i128>::from_values([2, 11, 13]);
        assert_eq!(ps.u, vec![0, 2, 24, 63]);
        assert_eq!(ps.t, vec![0, 4, 125, 294]);
    }

    #[test]
    fn no_poison_gives_plain_moments() {
        let k = KeySet::new(vec![0, 5, 10]).unwrap();
        let ps = PrefixSums::<i128>::new(&k);
        let got = poisoned_moments(&ps, 0, 0, 1, 0).unwrap();
        assert!(close(&got, &direct(&[0, 5, 10])));
    }

    #[test]
    fn one_of_each() {
        let k = KeySet::new(vec![0, 5, 10]).unwrap();
        let ps = PrefixSums::<i128>::new(&k);
        let got = poisoned_moments(&ps, 1, 1, 1, 3).unwrap();
        assert!(close(&got, &direct(&[0, 0, 5, 5, 10, 10])));
    }

    #[test]
    fn all_on_first_key() {
        let k = KeySet::new(vec![3, 4, 9, 20]).unwrap();
        let ps = PrefixSums::<i128>::new(&k);
        let got = poisoned_moments(&ps, 4, 0, 1, 4).unwrap();
        assert!(close(&got, &direct(&[0, 0, 0, 0, 0, 1, 6, 17])));
    }

    #[test]
    fn errors() {
        let k = KeySet::new(vec![0, 5, 10]).unwrap();
        let ps = PrefixSums::<i128>::new(&k);
        assert!(matches!(poisoned_moments(&ps, 2, 2, 1, 3), Err(Error::BudgetViolation { .. })));
        assert!(matches!(poisoned_moments(&ps, 0, 1, 2, 3), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(poisoned_moments(&ps, 0, 1, 0, 3), Err(Error::IndexOutOfRange { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn keyset() -> impl Strategy<Value = KeySet> {
            prop::collection::btree_set(0u64..500, 3..50)
                .prop_map(|s| KeySet::new(s.into_iter().collect()).unwrap())
        }

        proptest! {
            #[test]
            fn prefix_differences(k in keyset()) {
                let ps = PrefixSums::<i128>::new(&k);
                for t in 1..=k.len() {
                    let kt = k.shifted(t - 1) as i128;
                    prop_assert_eq!(ps.s[t] - ps.s[t - 1], kt);
                    prop_assert_eq!(ps.t[t] - ps.t[t - 1], kt * kt);
                    prop_assert_eq!(ps.u[t] - ps.u[t - 1], kt * t as i128);
                }
            }

            #[test]
            fn constant_time_moments_match_materialized(
                k in keyset(), budget in 0u64..=10, a_frac in 0.0f64..=1.0, b_frac in 0.0f64..=1.0, i_frac in 0.0f64..1.0,
            ) {
                let a = (a_frac * budget as f64).floor() as u64;
                let b = (b_frac * (budget - a) as f64).floor() as u64;
                let i = 1 + (i_frac * (k.len() - 2) as f64) as usize;
                let c = budget - a - b;
                let mut values: Vec<u64> = (0..k.len()).map(|j| k.shifted(j)).collect();
                values.extend(std::iter::repeat_n(k.shifted(0), a as usize));
                values.extend(std::iter::repeat_n(k.shifted(i), b as usize));
                values.extend(std::iter::repeat_n(k.shifted(k.len() - 1), c as usize));
                values.sort_unstable();
                let want = direct(&values);

                let exact = poisoned_moments(&PrefixSums::<i128>::new(&k), a, b, i, budget).unwrap();
                prop_assert!(close(&exact, &want));
                let materialized = SummaryStats::<i128>::from_sorted(values.iter().copied());
                prop_assert_eq!(exact.mse, materialized.mse());

                let dd = poisoned_moments(&PrefixSums::<DoubleF64>::new(&k), a, b, i, budget).unwrap();
                prop_assert!(close(&dd, &want));
            }
        }
    }
}
