//! Exact summation of floating-point terms.
//!
//! Every walk observable in this crate is a sum of many positive terms that
//! are produced in an order depending on how the enumeration was split across
//! workers. [`ExactSum`] stores the running total as an exact fixed-point
//! integer with an unbounded binary exponent range, so the rounded result is a
//! function of the multiset of terms only: any split, merge order or worker
//! count yields the same bits.
//!
//! Terms can be supplied either directly ([`ExactSum::add`]) or through their
//! natural logarithm ([`ExactSum::add_exp`]); the second form keeps weights
//! such as `exp(-4000)` that underflow `f64` without losing them.

use std::f64::consts::LN_2;

const DIGIT_BITS: i64 = 32;
const DIGIT_MASK: i64 = (1 << 32) - 1;
/// Each add contributes < 2^32 per digit; normalizing this often keeps every
/// digit far from i64 overflow.
const NORMALIZE_EVERY: u32 = 1 << 29;

/// Exact accumulator: the value is `sum(digits[i] * 2^(32 * (base + i)))`.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    base: i64,
    digits: Vec<i64>,
    pending: u32,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Adds a finite double exactly.
    pub fn add(&mut self, x: f64) {
        debug_assert!(x.is_finite(), "non-finite term {x}");
        if x == 0.0 || !x.is_finite() {
            return;
        }
        let (mantissa, exponent, negative) = decompose(x);
        self.add_scaled(mantissa, exponent, negative);
    }

    /// Adds `exp(log_term)`. The conversion to a binary mantissa is a pure
    /// function of `log_term`, so equal inputs always contribute equal bits.
    pub fn add_exp(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        debug_assert!(log_term.is_finite(), "non-finite log term {log_term}");
        if (-700.0..=700.0).contains(&log_term) {
            self.add(log_term.exp());
            return;
        }
        let k = (log_term / LN_2).floor();
        let rest = (log_term - k * LN_2).exp();
        let (mantissa, exponent, _) = decompose(rest);
        self.add_scaled(mantissa, exponent + k as i64, false);
    }

    /// Adds `mantissa * 2^exponent` (mantissa < 2^53).
    fn add_scaled(&mut self, mantissa: u64, exponent: i64, negative: bool) {
        let digit = exponent.div_euclid(DIGIT_BITS);
        let offset = exponent.rem_euclid(DIGIT_BITS) as u32;
        let wide = (mantissa as u128) << offset;
        let parts = [
            (wide as i64) & DIGIT_MASK,
            ((wide >> 32) as i64) & DIGIT_MASK,
            (wide >> 64) as i64,
        ];
        self.reserve(digit, digit + 2);
        let start = (digit - self.base) as usize;
        for (k, part) in parts.into_iter().enumerate() {
            if negative {
                self.digits[start + k] -= part;
            } else {
                self.digits[start + k] += part;
            }
        }
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Makes digits `lo..=hi` addressable, keeping one spare carry digit on top.
    fn reserve(&mut self, lo: i64, hi: i64) {
        if self.digits.is_empty() {
            self.base = lo;
            self.digits = vec![0; (hi - lo + 2) as usize];
            return;
        }
        if lo < self.base {
            let grow = (self.base - lo).max(self.digits.len() as i64 / 2) as usize;
            let mut digits = vec![0; grow + self.digits.len()];
            digits[grow..].copy_from_slice(&self.digits);
            self.digits = digits;
            self.base -= grow as i64;
        }
        let top = self.base + self.digits.len() as i64 - 1;
        if hi + 1 > top {
            let grow = (hi + 1 - top).max(self.digits.len() as i64 / 2) as usize;
            self.digits.resize(self.digits.len() + grow, 0);
        }
    }

    /// Propagates carries so that all digits but the top lie in [0, 2^32)
    /// and the top digit lies in [-2^31, 2^31).
    fn normalize(&mut self) {
        self.pending = 0;
        let n = self.digits.len();
        if n == 0 {
            return;
        }
        for i in 0..n - 1 {
            let carry = self.digits[i] >> DIGIT_BITS;
            self.digits[i] &= DIGIT_MASK;
            self.digits[i + 1] += carry;
        }
        loop {
            let top = *self.digits.last().unwrap();
            if (-(1 << 31)..(1 << 31)).contains(&top) {
                break;
            }
            let last = self.digits.len() - 1;
            self.digits[last] = top & DIGIT_MASK;
            self.digits.push(top >> DIGIT_BITS);
        }
    }

    /// Adds another accumulator exactly.
    pub fn merge(&mut self, other: &ExactSum) {
        if other.digits.is_empty() {
            return;
        }
        let mut other = other.clone();
        other.normalize();
        self.normalize();
        let hi = other.base + other.digits.len() as i64 - 1;
        self.reserve(other.base, hi);
        let start = (other.base - self.base) as usize;
        for (k, d) in other.digits.iter().enumerate() {
            self.digits[start + k] += d;
        }
        self.normalize();
    }

    /// Returns (negative, top 64 significant bits with sticky bit, binary
    /// exponent of the lowest of those 64 bits), or `None` for zero.
    fn leading(&self) -> Option<(bool, u64, i64)> {
        let mut acc = self.clone();
        acc.normalize();
        let negative = acc.digits.last().is_some_and(|&t| t < 0);
        if negative {
            for d in acc.digits.iter_mut() {
                *d = -*d;
            }
            acc.normalize();
        }
        let t = acc.digits.iter().rposition(|&d| d != 0)?;
        let digit = |i: isize| -> u128 {
            if i < 0 {
                0
            } else {
                acc.digits[i as usize] as u128
            }
        };
        let t = t as isize;
        let window = (digit(t) << 64) | (digit(t - 1) << 32) | digit(t - 2);
        let mut sticky = (0..(t - 2).max(0)).any(|i| acc.digits[i as usize] != 0);
        let bits = 128 - window.leading_zeros() as i64;
        let shift = bits - 64;
        debug_assert!(shift >= 1);
        if window & ((1u128 << shift) - 1) != 0 {
            sticky = true;
        }
        let top = (window >> shift) as u64 | sticky as u64;
        let exponent = shift + DIGIT_BITS * (acc.base + t as i64 - 2);
        Some((negative, top, exponent))
    }

    /// The sum rounded to `f64` (may be `inf` or `0` outside the range).
    pub fn value(&self) -> f64 {
        match self.leading() {
            None => 0.0,
            Some((negative, top, exponent)) => {
                let magnitude = scale_by_pow2(top as f64, exponent);
                if negative {
                    -magnitude
                } else {
                    magnitude
                }
            }
        }
    }

    /// Natural logarithm of the sum, valid far beyond the `f64` range.
    /// Returns `-inf` for zero and `NaN` for a negative sum.
    pub fn ln(&self) -> f64 {
        match self.leading() {
            None => f64::NEG_INFINITY,
            Some((true, _, _)) => f64::NAN,
            Some((false, top, exponent)) => (top as f64).ln() + exponent as f64 * LN_2,
        }
    }
}

fn decompose(x: f64) -> (u64, i64, bool) {
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (fraction, -1074, negative)
    } else {
        (fraction | (1u64 << 52), biased - 1075, negative)
    }
}

fn scale_by_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cancellation_is_exact() {
        let mut s = ExactSum::new();
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn empty_sum() {
        let s = ExactSum::new();
        assert!(s.is_zero());
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn integers_stay_exact() {
        let mut s = ExactSum::new();
        for _ in 0..44100 {
            s.add_exp(0.0);
        }
        assert_eq!(s.value(), 44100.0);
    }

    #[test]
    fn log_terms_beyond_f64_range() {
        let mut s = ExactSum::new();
        s.add_exp(-4000.0);
        s.add_exp(-4000.0);
        assert!((s.ln() - (-4000.0 + LN_2)).abs() < 1e-9);
        assert_eq!(s.value(), 0.0);

        let mut big = ExactSum::new();
        big.add_exp(2000.0);
        assert!((big.ln() - 2000.0).abs() < 1e-9);
        assert!(big.value().is_infinite());
    }

    #[test]
    fn subnormals_and_negative_totals() {
        let mut s = ExactSum::new();
        s.add(f64::MIN_POSITIVE / 8.0);
        s.add(-3.5);
        assert_eq!(s.value(), -3.5 + f64::MIN_POSITIVE / 8.0);
        assert!(s.ln().is_nan());
    }

    #[test]
    fn correctly_rounded_against_simple_cases() {
        let mut s = ExactSum::new();
        s.add(1.0);
        s.add(f64::EPSILON / 2.0);
        s.add(f64::EPSILON / 1024.0);
        // true value is just above the halfway point, so it rounds up
        assert_eq!(s.value(), 1.0 + f64::EPSILON);
    }

    proptest! {
        #[test]
        fn order_and_split_independent(
            xs in prop::collection::vec(-1e6f64..1e6, 1..200),
            cut in 0usize..200,
        ) {
            let mut forward = ExactSum::new();
            for &x in &xs { forward.add(x); }
            let mut backward = ExactSum::new();
            for &x in xs.iter().rev() { backward.add(x); }
            let cut = cut.min(xs.len());
            let mut left = ExactSum::new();
            let mut right = ExactSum::new();
            for &x in &xs[..cut] { left.add(x); }
            for &x in &xs[cut..] { right.add(x); }
            right.merge(&left);
            prop_assert_eq!(forward.value().to_bits(), backward.value().to_bits());
            prop_assert_eq!(forward.value().to_bits(), right.value().to_bits());
            let naive: f64 = xs.iter().sum();
            prop_assert!((forward.value() - naive).abs() <= 1e-6 * xs.len() as f64);
        }

        #[test]
        fn log_terms_match_plain_terms(logs in prop::collection::vec(-50f64..50.0, 1..50)) {
            let mut a = ExactSum::new();
            let mut b = ExactSum::new();
            for &l in &logs { a.add_exp(l); b.add(l.exp()); }
            prop_assert_eq!(a.value().to_bits(), b.value().to_bits());
        }
    }
}
