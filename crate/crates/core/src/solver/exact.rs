//! Correctly rounded sums and dot products.
//!
//! Terms are accumulated exactly in a wide fixed-point register split into
//! 32-bit limbs held in `i64`s, wide enough for any product of two finite
//! doubles. Products are formed exactly from the 53-bit integer mantissas.
//! Integer addition is associative, so the accumulated value, and the
//! correctly rounded result, do not depend on how the terms were grouped
//! or distributed.

use rayon::prelude::*;

const PAR_CHUNK: usize = 8192;

const N_LIMBS: usize = 136;
/// Exponent of the lowest accumulator bit; products of subnormals reach
/// down to 2^-2148.
const LOW: i32 = -2176;
const MASK: u128 = (1 << 32) - 1;
/// Additions between carry propagations. Each addition changes a limb by
/// less than 2^33, so the `i64` limbs cannot overflow.
const CARRY_EVERY: u32 = 1 << 29;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSum {
    limbs: Vec<i64>,
    pending: u32,
    /// Sum of the non-finite terms; 0 when there were none.
    special: f64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self {
            limbs: vec![0; N_LIMBS],
            pending: 0,
            special: 0.0,
        }
    }
}

/// `(m, e)` with `|x| = m · 2^e`.
#[inline]
fn decode(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    }
}

fn propagate(limbs: &mut [i64]) {
    for k in 0..limbs.len() - 1 {
        let c = limbs[k] >> 32;
        limbs[k] -= c << 32;
        limbs[k + 1] += c;
    }
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// `x · 2^q` for an integer-valued `x < 2^54`, rounding at most once.
fn scale(mut x: f64, mut q: i32) -> f64 {
    while q > 1000 {
        x *= pow2(1000);
        q -= 1000;
    }
    while q < -1000 {
        x *= pow2(-1000);
        q += 1000;
    }
    x * pow2(q)
}

/// Rounds `m · 2^e` (plus a positive amount below `2^e` when `sticky`) to
/// the nearest double, ties to even.
fn round_to_f64(m: u128, e: i32, sticky: bool) -> f64 {
    let nbits = (128 - m.leading_zeros()) as i32;
    let q = (e + nbits - 53).max(-1074);
    if q <= e {
        return scale(m as f64, e);
    }
    let d = (q - e) as u32;
    if d >= 120 {
        return 0.0;
    }
    let mut kept = m >> d;
    let rem = m & ((1u128 << d) - 1);
    let half = 1u128 << (d - 1);
    if rem > half || (rem == half && (sticky || kept & 1 == 1)) {
        kept += 1;
    }
    scale(kept as f64, q)
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn add_scaled(&mut self, m: u128, e: i32, negative: bool) {
        let p = (e - LOW) as u32;
        let i = (p / 32) as usize;
        let sh = p % 32;
        let lo = (m & u64::MAX as u128) << sh;
        let hi = (m >> 64) << sh;
        let chunks = [
            (i, lo & MASK),
            (i + 1, (lo >> 32) & MASK),
            (i + 2, (lo >> 64) + (hi & MASK)),
            (i + 3, (hi >> 32) & MASK),
            (i + 4, hi >> 64),
        ];
        let l = &mut self.limbs;
        for (k, c) in chunks {
            if c != 0 {
                if negative {
                    l[k] -= c as i64;
                } else {
                    l[k] += c as i64;
                }
            }
        }
        self.pending += 1;
        if self.pending >= CARRY_EVERY {
            self.normalize();
        }
    }

    fn normalize(&mut self) {
        propagate(&mut self.limbs);
        self.pending = 0;
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let (m, e) = decode(x);
        self.add_scaled(m as u128, e, x < 0.0);
    }

    /// Adds `a * b` exactly.
    #[inline]
    pub fn add_product(&mut self, a: f64, b: f64) {
        if !(a.is_finite() && b.is_finite()) {
            self.special += a * b;
            return;
        }
        if a == 0.0 || b == 0.0 {
            return;
        }
        let (ma, ea) = decode(a);
        let (mb, eb) = decode(b);
        self.add_scaled(ma as u128 * mb as u128, ea + eb, (a < 0.0) != (b < 0.0));
    }

    pub fn merge(&mut self, other: &ExactSum) {
        self.normalize();
        let mut o = other.limbs.clone();
        propagate(&mut o);
        for (l, x) in self.limbs.iter_mut().zip(o) {
            *l += x;
        }
        self.pending = 1;
        self.special += other.special;
    }

    /// Carry-propagated limbs followed by the non-finite part, as doubles
    /// (every limb is below 2^33 in magnitude, so the conversion is exact).
    pub fn limbs(&self) -> Vec<f64> {
        let mut l = self.limbs.clone();
        propagate(&mut l);
        l.into_iter()
            .map(|x| x as f64)
            .chain(std::iter::once(self.special))
            .collect()
    }

    /// Inverse of [`ExactSum::limbs`]; `None` on malformed input.
    pub fn from_limbs(words: &[f64]) -> Option<Self> {
        if words.len() != N_LIMBS + 1 {
            return None;
        }
        let (limbs, special) = words.split_at(N_LIMBS);
        if limbs.iter().any(|x| x.fract() != 0.0 || x.abs() >= 2f64.powi(62)) {
            return None;
        }
        let special = special[0];
        if special.is_finite() && special != 0.0 {
            return None;
        }
        Some(Self {
            limbs: limbs.iter().map(|&x| x as i64).collect(),
            pending: 1,
            special,
        })
    }

    /// Correctly rounded value of the exact sum.
    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let mut l = self.limbs.clone();
        propagate(&mut l);
        let negative = l[N_LIMBS - 1] < 0;
        if negative {
            l.iter_mut().for_each(|x| *x = -*x);
            propagate(&mut l);
        }
        let Some(h) = l.iter().rposition(|&x| x != 0) else {
            return 0.0;
        };
        let lo = h.saturating_sub(2);
        let m = l[lo..=h].iter().rev().fold(0u128, |m, &x| (m << 32) | x as u128);
        let sticky = l[..lo].iter().any(|&x| x != 0);
        let r = round_to_f64(m, LOW + 32 * lo as i32, sticky);
        if negative {
            -r
        } else {
            r
        }
    }
}

/// Exact partial sums of `Σ a_i b_i`.
pub fn dot_partials(a: &[f64], b: &[f64]) -> ExactSum {
    assert_eq!(a.len(), b.len());
    if a.len() <= PAR_CHUNK {
        let mut s = ExactSum::new();
        for (x, y) in a.iter().zip(b) {
            s.add_product(*x, *y);
        }
        return s;
    }
    a.par_chunks(PAR_CHUNK)
        .zip(b.par_chunks(PAR_CHUNK))
        .map(|(x, y)| dot_partials(x, y))
        .reduce(ExactSum::new, |mut l, r| {
            l.merge(&r);
            l
        })
}

/// Correctly rounded dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    dot_partials(a, b).value()
}

/// Correctly rounded sum.
pub fn sum(values: &[f64]) -> f64 {
    let mut s = ExactSum::new();
    for &v in values {
        s.add(v);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shewchuk's partial-expansion summation (as in Python's `math.fsum`),
    /// an independent correctly rounded oracle for plain sums.
    fn fsum(values: &[f64]) -> f64 {
        let mut partials: Vec<f64> = Vec::new();
        for &v in values {
            let mut x = v;
            let mut i = 0;
            for j in 0..partials.len() {
                let mut y = partials[j];
                if x.abs() < y.abs() {
                    std::mem::swap(&mut x, &mut y);
                }
                let hi = x + y;
                let lo = y - (hi - x);
                if lo != 0.0 {
                    partials[i] = lo;
                    i += 1;
                }
                x = hi;
            }
            partials.truncate(i);
            partials.push(x);
        }
        let Some(mut n) = partials.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = partials[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = partials[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_fsum(v in proptest::collection::vec((-1.0f64..1.0, -300i32..300), 0..60)) {
            let vals: Vec<f64> = v.iter().map(|(m, e)| m * 2f64.powi(*e)).collect();
            proptest::prop_assert_eq!(sum(&vals), fsum(&vals));
        }

        #[test]
        fn products_of_halves_agree_with_fsum(v in proptest::collection::vec((-1.0f64..1.0, -200i32..200), 1..40)) {
            // x · 0.5 is exact, so the fsum of the products is an oracle
            let vals: Vec<f64> = v.iter().map(|(m, e)| m * 2f64.powi(*e)).collect();
            let halves = vec![0.5; vals.len()];
            let prods: Vec<f64> = vals.iter().map(|x| x * 0.5).collect();
            proptest::prop_assert_eq!(dot(&vals, &halves), fsum(&prods));
        }
    }

    #[test]
    fn cancellation() {
        assert_eq!(sum(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(sum(&[0.1; 10]), 1.0);
        assert_eq!(sum(&[]), 0.0);
    }

    #[test]
    fn dot_exact_products() {
        let a = [1.0 + f64::EPSILON, 1.0];
        let b = [1.0 - f64::EPSILON, -1.0];
        assert_eq!(dot(&a, &b), -f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn grouping_independent() {
        let v: Vec<f64> = (0..20000).map(|i| ((i * 7919) % 1000) as f64 * 1.1e-3 - 0.37).collect();
        let w: Vec<f64> = (0..20000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let whole = dot(&v, &w);
        let mut merged = dot_partials(&v[..5003], &w[..5003]);
        merged.merge(&dot_partials(&v[5003..], &w[5003..]));
        assert_eq!(merged.value(), whole);
        let mut seq = ExactSum::new();
        for (x, y) in v.iter().zip(&w).rev() {
            seq.add_product(*x, *y);
        }
        assert_eq!(seq.value(), whole);
    }

    #[test]
    fn extreme_magnitudes() {
        let tiny = f64::from_bits(1);
        assert_eq!(sum(&[tiny, tiny, -tiny]), tiny);
        assert_eq!(sum(&[f64::MAX, -f64::MAX, 1.5]), 1.5);
        assert_eq!(dot(&[f64::MAX, 1.0], &[2.0, 1.0]), f64::INFINITY);
        assert_eq!(dot(&[tiny, 1.0], &[tiny, -1.0]), -1.0);
        assert_eq!(dot(&[1e-300, 0.0], &[1e-300, 5.0]), 0.0);
        assert_eq!(sum(&[-3.25, 1.0]), -2.25);
        assert!(sum(&[f64::INFINITY, f64::NEG_INFINITY]).is_nan());
        assert!(dot(&[f64::NAN], &[1.0]).is_nan());
    }

    #[test]
    fn matches_naive_on_benign_input() {
        let v: Vec<f64> = (1..200).map(|i| i as f64 * 0.25).collect();
        assert_eq!(sum(&v), v.iter().sum::<f64>());
        assert_eq!(sum(&[0.1, 0.2]), 0.1 + 0.2);
        assert_eq!(sum(&[1e16, 1.0]), 1e16);
        assert_eq!(sum(&[1e16, 2.0, 1.0]), 1e16 + 4.0);
    }

    #[test]
    fn limbs_round_trip() {
        let mut s = ExactSum::new();
        for i in 0..100 {
            s.add_product(i as f64 * 1e-7, -3.0e5 + i as f64);
        }
        let back = ExactSum::from_limbs(&s.limbs()).unwrap();
        assert_eq!(back.value(), s.value());
        assert!(ExactSum::from_limbs(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn halfway_rounding() {
        // 1 + 2^-53 + 2^-105 must round up
        let s = sum(&[1.0, 2f64.powi(-53), 2f64.powi(-105)]);
        assert_eq!(s, 1.0 + f64::EPSILON);
    }
}
