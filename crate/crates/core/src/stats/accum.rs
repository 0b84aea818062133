//! Scalar types used to accumulate key moments.
//!
//! Every quantity the attacks compare is a function of four sums over the
//! (shifted key, rank) pairs of a multiset: the count `m`, `Σx`, `Σx²` and
//! `Σx·r`. With [`i128`] these sums are exact, so two code paths that reach
//! the same multiset produce bit-identical MSE values. When the key span is
//! too wide for 128-bit integers the same algorithms run on [`DoubleF64`], a
//! double-double with roughly 106 bits of mantissa.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

/// Arithmetic needed by the moment kernels.
pub trait Accum:
    Copy + Debug + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn zero() -> Self;
    fn from_u64(v: u64) -> Self;
    fn from_u128(v: u128) -> Self;
    fn to_f64(self) -> f64;

    /// Least-squares MSE of a multiset of `m` points given
    /// `cov_num = m·Σxr − Σx·Σr` and `var_num = m·Σx² − (Σx)²`.
    fn mse(m: u64, cov_num: Self, var_num: Self) -> f64;
}

impl Accum for i128 {
    #[inline]
    fn zero() -> Self {
        0
    }

    #[inline]
    fn from_u64(v: u64) -> Self {
        v as i128
    }

    #[inline]
    fn from_u128(v: u128) -> Self {
        v as i128
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn mse(m: u64, cov_num: Self, var_num: Self) -> f64 {
        // E = ((m²−1)·m²·B − 12·A²) / (12·m²·B), exact when it fits.
        let m2 = (m as i128) * (m as i128);
        let exact = (m2 - 1)
            .checked_mul(m2)
            .and_then(|t| t.checked_mul(var_num))
            .and_then(|t| {
                cov_num
                    .checked_mul(cov_num)
                    .and_then(|a2| a2.checked_mul(12))
                    .and_then(|a2| t.checked_sub(a2))
            }).zip(m2.checked_mul(12).and_then(|d| d.checked_mul(var_num)));
        match exact {
            Some((num, den)) => (num as f64 / den as f64).max(0.0),
            None => {
                let mf = m as f64;
                let a = cov_num as f64;
                let b = var_num as f64;
                ((mf * mf - 1.0) / 12.0 - a * a / (mf * mf * b)).max(0.0)
            }
        }
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleF64 {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleF64 {
    pub fn new(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }

    fn div(self, other: Self) -> Self {
        let q1 = self.hi / other.hi;
        let r = self - other * DoubleF64::new(q1);
        let q2 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleF64 { hi, lo }
    }
}

impl Add for DoubleF64 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleF64 { hi, lo }
    }
}

impl Sub for DoubleF64 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + DoubleF64 { hi: -rhs.hi, lo: -rhs.lo }
    }
}

impl Mul for DoubleF64 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let p = self.hi * rhs.hi;
        let e = self.hi.mul_add(rhs.hi, -p);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleF64 { hi, lo }
    }
}

impl Accum for DoubleF64 {
    fn zero() -> Self {
        DoubleF64::default()
    }

    fn from_u64(v: u64) -> Self {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        DoubleF64 { hi, lo }
    }

    fn from_u128(v: u128) -> Self {
        let high = DoubleF64::from_u64((v >> 64) as u64) * DoubleF64::new(18446744073709551616.0);
        high + DoubleF64::from_u64(v as u64)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn mse(m: u64, cov_num: Self, var_num: Self) -> f64 {
        let m = DoubleF64::from_u64(m);
        let m2 = m * m;
        let twelve = DoubleF64::new(12.0);
        let num = (m2 - DoubleF64::new(1.0)) * m2 * var_num - twelve * cov_num * cov_num;
        let den = twelve * m2 * var_num;
        num.div(den).to_f64().max(0.0)
    }
}

/// Which accumulator a computation over a given key span must use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Compensated,
}

impl Precision {
    /// Picks [`Precision::Exact`] when multisets of up to `max_len` shifted
    /// keys no larger than `span` keep every intermediate below 2^124.
    pub fn for_span(span: u64, max_len: usize) -> Self {
        let d = span as f64;
        let m = max_len.max(2) as f64;
        let limit = 2f64.powi(124);
        if m * m * d * d < limit && m * m * m * d < limit {
            Precision::Exact
        } else {
            Precision::Compensated
        }
    }
}

/// Runs a generic kernel with the accumulator matching `precision`.
macro_rules! with_accum {
    ($precision:expr, $f:ident($($arg:expr),* $(,)?)) => {
        match $precision {
            $crate::stats::Precision::Exact => $f::<i128>($($arg),*),
            $crate::stats::Precision::Compensated => $f::<$crate::stats::DoubleF64>($($arg),*),
        }
    };
}
pub(crate) use with_accum;
