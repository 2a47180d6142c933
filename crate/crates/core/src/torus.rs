//! Points and intervals on the torus `T = R/Z`.
//!
//! A [`TorusPoint`] is the fixed-point fraction `u / 2^64`. Addition,
//! negation and integer multiples wrap modulo `2^64`, which is exactly
//! reduction mod 1, so every arithmetic step here is bit-exact. Reals and
//! rationals enter through rounding constructors; after that nothing is lost.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `2^64` as a float.
pub const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Full circle in fixed-point units.
pub const FULL_TURN: u128 = 1u128 << 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint(u64);

impl TorusPoint {
    pub const ZERO: TorusPoint = TorusPoint(0);
    pub const HALF: TorusPoint = TorusPoint(1 << 63);

    pub const fn from_bits(bits: u64) -> Self {
        TorusPoint(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// Rounds `x mod 1` to the nearest multiple of `2^-64`.
    pub fn from_f64(x: f64) -> Self {
        debug_assert!(x.is_finite());
        let frac = x - x.floor();
        let scaled = (frac * TWO_POW_64).round();
        // frac may round up to exactly 1.0 for tiny negative inputs.
        TorusPoint((scaled as u128 % FULL_TURN) as u64)
    }

    /// `(num / den) mod 1`, rounded half-to-even to the `2^-64` grid.
    ///
    /// Half-to-even rounding commutes with negation, so
    /// `from_ratio(-a, q) == -from_ratio(a, q)` holds bit for bit.
    pub fn from_ratio(num: i128, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        assert!(den <= 1 << 63, "denominator above 2^63");
        let den = den as u128;
        let r = num.rem_euclid(den as i128) as u128;
        let shifted = r << 64;
        let q = shifted / den;
        let rem = shifted % den;
        let q = match (2 * rem).cmp(&den) {
            Ordering::Less => q,
            Ordering::Greater => q + 1,
            Ordering::Equal => q + (q & 1),
        };
        TorusPoint((q % FULL_TURN) as u64)
    }

    /// Representative in `[0, 1)`.
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_64
    }

    /// Centered representative in `[-1/2, 1/2)`.
    pub fn to_centered_f64(self) -> f64 {
        (self.0 as i64) as f64 / TWO_POW_64
    }

    /// Arclength distance to `0`, i.e. `dist(t, Z)`.
    pub fn norm(self) -> f64 {
        self.to_centered_f64().abs()
    }

    pub fn mul_int(self, k: u64) -> Self {
        TorusPoint(self.0.wrapping_mul(k))
    }

    pub fn mul_signed(self, k: i64) -> Self {
        TorusPoint(self.0.wrapping_mul(k as u64))
    }

    /// Forward arc length from `self` to `other`, in fixed-point units.
    pub fn arc_to(self, other: TorusPoint) -> u64 {
        other.0.wrapping_sub(self.0)
    }
}

impl Add for TorusPoint {
    type Output = TorusPoint;
    fn add(self, rhs: Self) -> Self {
        TorusPoint(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for TorusPoint {
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for TorusPoint {
    type Output = TorusPoint;
    fn sub(self, rhs: Self) -> Self {
        TorusPoint(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for TorusPoint {
    type Output = TorusPoint;
    fn neg(self) -> Self {
        TorusPoint(self.0.wrapping_neg())
    }
}

/// Fixed-point length (`0 ..= 2^64`) to a real in `[0, 1]`.
pub fn length_to_f64(len: u128) -> f64 {
    len as f64 / TWO_POW_64
}

/// Real length in `[0, 1]` to fixed-point units, rounded to nearest.
pub fn length_from_f64(len: f64) -> u128 {
    debug_assert!((0.0..=1.0).contains(&len));
    ((len * TWO_POW_64).round() as u128).min(FULL_TURN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    Closed,
    HalfOpen,
}

/// An arc `[start, start + length]` or `[start, start + length)` on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusInterval {
    pub start: TorusPoint,
    /// Length in units of `2^-64`; `2^64` is the whole circle.
    pub length_bits: u128,
    pub closure: Closure,
}

impl TorusInterval {
    pub fn new(start: TorusPoint, length: f64, closure: Closure) -> Result<Self> {
        if !(length > 0.0 && length <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "interval length {length} outside (0, 1]"
            )));
        }
        Ok(TorusInterval {
            start,
            length_bits: length_from_f64(length),
            closure,
        })
    }

    pub fn from_bits(start: TorusPoint, length_bits: u128, closure: Closure) -> Self {
        assert!(length_bits <= FULL_TURN);
        TorusInterval {
            start,
            length_bits,
            closure,
        }
    }

    pub fn length(&self) -> f64 {
        length_to_f64(self.length_bits)
    }

    /// Wrap-around membership: `(x - start) mod 1 < length` (half-open) or
    /// `<= length` (closed).
    pub fn contains(&self, x: TorusPoint) -> bool {
        let offset = self.start.arc_to(x) as u128;
        match self.closure {
            Closure::HalfOpen => offset < self.length_bits,
            Closure::Closed => offset <= self.length_bits,
        }
    }
}

/// The largest empty arc of a point set together with where it starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    /// Point at the counter-clockwise end of the gap.
    pub after: TorusPoint,
    pub length_bits: u128,
}

impl Gap {
    pub fn length(&self) -> f64 {
        length_to_f64(self.length_bits)
    }
}

/// Largest arc between cyclically consecutive points.
///
/// Ties go to the gap that starts at the smallest point.
pub fn largest_gap(points: &[TorusPoint]) -> Result<Gap> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut bits: Vec<u64> = points.iter().map(|p| p.bits()).collect();
    bits.sort_unstable();
    let last = *bits.last().unwrap();
    let mut best = Gap {
        after: TorusPoint(last),
        length_bits: FULL_TURN - (last - bits[0]) as u128,
    };
    for w in bits.windows(2) {
        let len = (w[1] - w[0]) as u128;
        if len > best.length_bits || (len == best.length_bits && w[0] < best.after.bits()) {
            best = Gap {
                after: TorusPoint(w[0]),
                length_bits: len,
            };
        }
    }
    Ok(best)
}

/// Largest circular gap of the point set, as a real in `(0, 1]`.
///
/// A point set meets every closed interval of length `ε` iff this is `<= ε`.
pub fn max_circular_gap(points: &[TorusPoint]) -> Result<f64> {
    largest_gap(points).map(|g| g.length())
}

/// Sorts `bits` in place and returns the largest circular gap in fixed-point
/// units. Allocation-free kernel for the hitting verifiers.
pub(crate) fn max_gap_in_place(bits: &mut [u64]) -> u128 {
    debug_assert!(!bits.is_empty());
    bits.sort_unstable();
    let first = bits[0];
    let last = bits[bits.len() - 1];
    let mut best = FULL_TURN - (last - first) as u128;
    for w in bits.windows(2) {
        best = best.max((w[1] - w[0]) as u128);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<TorusPoint> {
        xs.iter().map(|&x| TorusPoint::from_f64(x)).collect()
    }

    #[test]
    fn equally_spaced_gap() {
        for n in [1u64, 2, 3, 7, 64, 1000] {
            let p: Vec<_> = (0..n).map(|k| TorusPoint::from_ratio(k as i128, n)).collect();
            let g = max_circular_gap(&p).unwrap();
            assert!((g - 1.0 / n as f64).abs() < 1e-15, "n = {n}: {g}");
        }
    }

    #[test]
    fn single_point_gap_is_one() {
        assert_eq!(max_circular_gap(&pts(&[0.3])).unwrap(), 1.0);
        assert_eq!(max_circular_gap(&pts(&[0.3, 0.3, 0.3])).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_gap() {
        let g = largest_gap(&pts(&[0.0, 0.5, 0.6])).unwrap();
        assert_eq!(g.length_bits, FULL_TURN / 2);
        assert_eq!(g.after, TorusPoint::ZERO);
    }

    #[test]
    fn empty_set_rejected() {
        assert_eq!(max_circular_gap(&[]), Err(Error::EmptyPointSet));
    }

    #[test]
    fn ratio_rounding_commutes_with_negation() {
        for den in [2u64, 3, 6, 7, 16, 101, 1 << 40, 1_048_583] {
            for num in [0i128, 1, 2, 5, 99, 12345] {
                let a = TorusPoint::from_ratio(num, den);
                let b = TorusPoint::from_ratio(-num, den);
                assert_eq!(-a, b, "{num}/{den}");
            }
        }
        assert_eq!(TorusPoint::from_ratio(1, 2), TorusPoint::HALF);
    }

    #[test]
    fn from_f64_reduces_mod_one() {
        assert_eq!(TorusPoint::from_f64(1.25), TorusPoint::from_ratio(1, 4));
        assert_eq!(TorusPoint::from_f64(-0.25), TorusPoint::from_ratio(3, 4));
        assert_eq!(TorusPoint::from_f64(-1e-30), TorusPoint::ZERO);
        assert_eq!(TorusPoint::from_f64(3.0), TorusPoint::ZERO);
    }

    #[test]
    fn interval_membership_wraps() {
        let i = TorusInterval::new(TorusPoint::from_f64(0.875), 0.25, Closure::HalfOpen).unwrap();
        assert!(i.contains(TorusPoint::from_f64(0.95)));
        assert!(i.contains(TorusPoint::from_f64(0.05)));
        assert!(!i.contains(TorusPoint::from_f64(0.125)));
        assert!(!i.contains(TorusPoint::from_f64(0.5)));
        let c = TorusInterval::new(TorusPoint::from_f64(0.875), 0.25, Closure::Closed).unwrap();
        assert!(c.contains(TorusPoint::from_f64(0.125)));
        let full = TorusInterval::new(TorusPoint::ZERO, 1.0, Closure::HalfOpen).unwrap();
        assert!(full.contains(TorusPoint::from_bits(u64::MAX)));
    }

    #[test]
    fn interval_length_validated() {
        assert!(TorusInterval::new(TorusPoint::ZERO, 0.0, Closure::Closed).is_err());
        assert!(TorusInterval::new(TorusPoint::ZERO, 1.5, Closure::Closed).is_err());
    }

    #[test]
    fn in_place_kernel_matches() {
        let p = pts(&[0.1, 0.75, 0.2, 0.9, 0.33]);
        let mut bits: Vec<u64> = p.iter().map(|x| x.bits()).collect();
        assert_eq!(max_gap_in_place(&mut bits), largest_gap(&p).unwrap().length_bits);
    }
}
