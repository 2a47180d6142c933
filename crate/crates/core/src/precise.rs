//! Double-double arithmetic: an unevaluated sum `hi + lo` with
//! `|lo| <= ulp(hi)/2`, giving about 106 bits of significand.
//!
//! Used where `f64` cannot resolve a value mod 1, e.g. `‖x + r k v‖_p^p` for
//! `k` near `Q`.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::torus::{TorusPoint, TWO_POW_64};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact for `|k| < 2^106`.
    pub fn from_i128(k: i128) -> Self {
        let hi = k as f64;
        let rest = k - hi as i128;
        DoubleDouble::new(hi, rest as f64)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut result = DoubleDouble::ONE;
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            n >>= 1;
        }
        result
    }

    /// `self^(1/n)` for `self > 0`, by Newton iteration on `y^n = self`
    /// seeded from the `f64` root.
    pub fn root(self, n: u32) -> Self {
        assert!(n >= 1, "root index must be positive");
        if n == 1 || self.hi == 0.0 {
            return self;
        }
        let mut y = DoubleDouble::from_f64(self.to_f64().powf(1.0 / n as f64));
        let nf = n as f64;
        for _ in 0..3 {
            // y <- y - (y^n - a) / (n y^(n-1))
            let yn1 = y.powi(n - 1);
            let f = yn1 * y - self;
            y = y - f / yn1.mul_f64(nf);
        }
        y
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            DoubleDouble::new(fh, self.lo.floor())
        } else {
            DoubleDouble { hi: fh, lo: 0.0 }
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> Self {
        let f = self - self.floor();
        if f >= DoubleDouble::ONE {
            f - DoubleDouble::ONE
        } else if f < DoubleDouble::ZERO {
            f + DoubleDouble::ONE
        } else {
            f
        }
    }

    /// `self mod 1` on the fixed-point torus grid.
    pub fn to_torus(self) -> TorusPoint {
        let f = self.fract();
        // hi*2^64 and lo*2^64 are exact scalings; split hi at the grid
        let hs = f.hi * TWO_POW_64;
        let hint = hs.floor();
        let rest = (hs - hint) + f.lo * TWO_POW_64;
        let bits = (hint as u128 as i128 + rest.round() as i128).rem_euclid(1i128 << 64);
        TorusPoint::from_bits(bits as u64)
    }

    /// `dist(self, Z)`.
    pub fn dist_to_integer(self) -> f64 {
        let f = self.fract();
        let g = DoubleDouble::ONE - f;
        if f < g { f.to_f64() } else { g.to_f64() }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_integers() {
        let k = (1i128 << 100) + 12345;
        let d = DoubleDouble::from_i128(k);
        assert_eq!(d.hi as i128 + d.lo as i128, k);
    }

    #[test]
    fn product_keeps_low_bits() {
        // (2^40 + 1)^2 = 2^80 + 2^41 + 1 is not representable in f64
        let a = DoubleDouble::from_f64((1u64 << 40) as f64 + 1.0);
        let sq = a * a;
        let expected = (1i128 << 80) + (1i128 << 41) + 1;
        assert_eq!(sq.hi as i128 + sq.lo as i128, expected);
        assert_eq!(sq.fract(), DoubleDouble::ZERO);
    }

    #[test]
    fn sqrt_two() {
        let r = DoubleDouble::from_f64(2.0).root(2);
        let back = r * r - DoubleDouble::from_f64(2.0);
        assert!(back.to_f64().abs() < 1e-30);
        let c = DoubleDouble::from_f64(7.5).root(5);
        let back = c.powi(5) - DoubleDouble::from_f64(7.5);
        assert!(back.to_f64().abs() < 1e-29);
    }

    #[test]
    fn division_round_trips() {
        let a = DoubleDouble::from_f64(1.0);
        let b = DoubleDouble::from_f64(3.0);
        let q = a / b;
        assert!((q * b - a).to_f64().abs() < 1e-31);
    }

    #[test]
    fn fract_of_negative_values() {
        let x = DoubleDouble::new(-2.25, 0.0);
        assert_eq!(x.fract().to_f64(), 0.75);
        assert_eq!(x.to_torus(), TorusPoint::from_ratio(3, 4));
        // a tiny negative low word borrows from the integer part
        let y = DoubleDouble::new(3.0, -1e-20);
        let f = y.fract();
        assert!(f < DoubleDouble::ONE && f.to_f64() > 0.999);
        assert!((y.dist_to_integer() - 1e-20).abs() < 1e-30);
    }

    #[test]
    fn torus_conversion_matches_ratio() {
        let x = DoubleDouble::from_f64(12345.0) + DoubleDouble::from_f64(1.0) / DoubleDouble::from_f64(7.0);
        let t = x.to_torus();
        let want = TorusPoint::from_ratio(1, 7);
        assert!(t.bits().abs_diff(want.bits()) <= 1, "{:x} {:x}", t.bits(), want.bits());
    }
}
