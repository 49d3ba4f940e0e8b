//! Order-independent exact summation of f64 values.
//!
//! Every finite f64 is an integer multiple of 2^-1074, so a sum of up to
//! 2^63 of them fits in a fixed-point accumulator spanning 2^-1088 through
//! 2^1088. The accumulator holds that fixed-point number as 68 base-2^32
//! digits in i64 limbs; adding a value touches at most three limbs, and
//! limbs are renormalized long before they can overflow. Because the digit
//! content after normalization is a function of the exact mathematical sum
//! alone, accumulating a list in any order, or splitting it anywhere and
//! merging, reads out bit-for-bit the same f64.

const LIMBS: usize = 68;
/// Exponent of bit 0 of limb 0. Limb i covers bits [32 i, 32 i + 32) above it.
const BASE_EXP: i32 = -1088;
/// Normalize after this many adds; limb drift per add is < 2^32, so limbs
/// stay far below i64::MAX in between.
const NORMALIZE_EVERY: u64 = 1 << 29;

#[derive(Debug, Clone)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum {
            limbs: [0; LIMBS],
            pending: 0,
        }
    }

    /// Adds a finite value exactly.
    pub fn add(&mut self, v: f64) {
        assert!(v.is_finite(), "exact sum fed a non-finite value: {v}");
        let bits = v.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        if mant == 0 {
            return;
        }
        let off = (exp - BASE_EXP) as usize;
        let (li, sh) = (off / 32, off % 32);
        let wide = (mant as u128) << sh;
        let c0 = (wide & 0xffff_ffff) as i64;
        let c1 = ((wide >> 32) & 0xffff_ffff) as i64;
        let c2 = ((wide >> 64) & 0xffff_ffff) as i64;
        if bits >> 63 != 0 {
            self.limbs[li] -= c0;
            self.limbs[li + 1] -= c1;
            self.limbs[li + 2] -= c2;
        } else {
            self.limbs[li] += c0;
            self.limbs[li + 1] += c1;
            self.limbs[li + 2] += c2;
        }
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Folds another accumulator in; the result is identical to having added
    /// both value sequences into one accumulator in any order.
    pub fn merge(&mut self, mut other: ExactSum) {
        self.normalize();
        other.normalize();
        for i in 0..LIMBS {
            self.limbs[i] += other.limbs[i];
        }
        self.pending = 2;
    }

    /// Carry-propagates so limbs 0..66 are canonical base-2^32 digits and the
    /// top limb carries the (possibly negative) remainder.
    fn normalize(&mut self) {
        let mut carry: i64 = 0;
        for i in 0..LIMBS - 1 {
            let v = self.limbs[i] + carry;
            let r = v.rem_euclid(1 << 32);
            carry = v.div_euclid(1 << 32);
            self.limbs[i] = r;
        }
        self.limbs[LIMBS - 1] += carry;
        self.pending = 0;
    }

    /// Rewrites canonical digits of a negative value as digits of |value|.
    fn negate_magnitude(&mut self) {
        let mut borrow: i64 = 0;
        for i in 0..LIMBS - 1 {
            let v = -self.limbs[i] - borrow;
            if v < 0 {
                self.limbs[i] = v + (1 << 32);
                borrow = 1;
            } else {
                self.limbs[i] = v;
                borrow = 0;
            }
        }
        self.limbs[LIMBS - 1] = -self.limbs[LIMBS - 1] - borrow;
    }

    /// Reads the sum out as an f64, faithfully rounded (within one ulp of the
    /// exact value) and a pure function of the digit content.
    pub fn value(&self) -> f64 {
        let mut c = self.clone();
        c.normalize();
        let negative = c.limbs[LIMBS - 1] < 0;
        if negative {
            c.negate_magnitude();
        }
        let Some(h) = (0..LIMBS).rev().find(|&i| c.limbs[i] != 0) else {
            return 0.0;
        };
        let l1 = if h >= 1 { c.limbs[h - 1] as u128 } else { 0 };
        let l2 = if h >= 2 { c.limbs[h - 2] as u128 } else { 0 };
        let top = ((c.limbs[h] as u128) << 64) | (l1 << 32) | l2;
        let scale = BASE_EXP + 32 * (h as i32 - 2);
        let mag = scale_by_pow2(top as f64, scale);
        if negative {
            -mag
        } else {
            mag
        }
    }

    /// Canonical digit content, for exactness tests.
    #[cfg(test)]
    pub(crate) fn digits(&self) -> Vec<i64> {
        let mut c = self.clone();
        c.normalize();
        c.limbs.to_vec()
    }
}

/// x * 2^k without precision loss for exponents beyond the normal range.
fn scale_by_pow2(x: f64, k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        return x * f64::from_bits(((k + 1023) as u64) << 52);
    }
    let half = k / 2;
    let rest = k - half;
    x * f64::from_bits(((half + 1023) as u64) << 52) * f64::from_bits(((rest + 1023) as u64) << 52)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sums_small_integers_exactly() {
        let mut s = ExactSum::new();
        for i in 1..=1000i64 {
            s.add(i as f64);
        }
        assert_eq!(s.value(), 500_500.0);
    }

    #[test]
    fn keeps_cancelled_tails() {
        let mut s = ExactSum::new();
        s.add(1.0);
        s.add(1e-300);
        s.add(-1.0);
        assert_eq!(s.value(), 1e-300);

        let mut t = ExactSum::new();
        t.add(1e300);
        t.add(-1e300);
        assert_eq!(t.value(), 0.0);
    }

    #[test]
    fn handles_subnormals_and_zeros(){
        let tiny = f64::from_bits(1);
        let mut s = ExactSum::new();
        s.add(tiny);
        s.add(tiny);
        s.add(tiny);
        assert_eq!(s.value(), f64::from_bits(3));
        s.add(0.0);
        s.add(-0.0);
        assert_eq!(s.value(), f64::from_bits(3));
    }

    #[test]
    fn matches_integer_oracle() {
        // Values that are multiples of 2^-20: an i128 tracks the exact sum.
        let mut s = ExactSum::new();
        let mut oracle: i128 = 0;
        let mut x: u64 = 0x9e3779b97f4a7c15;
        for _ in 0..10_000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let q = (x >> 24) as i64 - (1 << 39);
            oracle += q as i128;
            s.add(q as f64 / 1048576.0);
        }
        assert_eq!(s.value(), oracle as f64 / 1048576.0);
    }

    #[test]
    fn extreme_magnitudes() {
        let mut s = ExactSum::new();
        s.add(f64::MAX);
        s.add(f64::MAX);
        s.add(-f64::MAX);
        assert_eq!(s.value(), f64::MAX);
        s.add(f64::MIN_POSITIVE);
        assert_eq!(s.value(), f64::MAX);
    }

    proptest! {
        #[test]
        fn split_merge_is_exact(values in prop::collection::vec(-1e12f64..1e12, 1..200), split in 0usize..200) {
            let split = split % values.len();
            let mut whole = ExactSum::new();
            for &v in &values {
                whole.add(v);
            }
            let mut left = ExactSum::new();
            for &v in &values[..split] {
                left.add(v);
            }
            let mut right = ExactSum::new();
            for &v in &values[split..] {
                right.add(v);
            }
            left.merge(right);
            prop_assert_eq!(whole.digits(), left.digits());
            prop_assert_eq!(whole.value().to_bits(), left.value().to_bits());
        }

        #[test]
        fn order_independent(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..100)) {
            let mut fwd = ExactSum::new();
            for &v in &values {
                fwd.add(v);
            }
            let mut rev = ExactSum::new();
            for &v in values.iter().rev() {
                rev.add(v);
            }
            prop_assert_eq!(fwd.digits(), rev.digits());
            prop_assert_eq!(fwd.value().to_bits(), rev.value().to_bits());
        }
    }
}
