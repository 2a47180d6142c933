//! Polynomial sequences modulo one.
//!
//! [`PolySeq`] holds `x_k(B) = (A k^p + B_{p-1} k^{p-1} + ... + B_1 k) mod 1`.
//! The leading coefficient is either an exact rational `num/den` (the
//! constructions use `A = 1/Q` and `A = 1/m^2`) or a fixed-point fraction;
//! the lower coefficients are fixed-point fractions, since only their classes
//! mod 1 matter.
//!
//! Evaluation never leaves integer arithmetic: `B_i k^i mod 1` is a wrapping
//! product of `B_i`'s bits with `k^i mod 2^64`, and `num k^p mod den` is an
//! exact modular power. The single rounding step is the final conversion of
//! `(num k^p mod den)/den` to the `2^-64` grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

/// An exact rational `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 || den > 1 << 63 {
            return Err(Error::InvalidInput(format!("denominator {den} out of range")));
        }
        Ok(Ratio { num, den })
    }

    /// `1 / den`.
    pub fn reciprocal(den: u64) -> Result<Self> {
        Ratio::new(1, den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn to_torus(self) -> TorusPoint {
        TorusPoint::from_ratio(self.num as i128, self.den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Leading {
    Rational(Ratio),
    Fixed { value: TorusPoint },
}

impl Leading {
    pub fn to_f64(self) -> f64 {
        match self {
            Leading::Rational(r) => r.to_f64(),
            Leading::Fixed { value } => value.to_f64(),
        }
    }

    fn is_zero(self) -> bool {
        match self {
            Leading::Rational(r) => r.is_zero(),
            Leading::Fixed { value } => value == TorusPoint::ZERO,
        }
    }
}

/// `a * b mod m` without overflow.
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolySeq {
    degree: u32,
    leading: Leading,
    /// `B_1, ..., B_{p-1}`.
    lower: Vec<TorusPoint>,
}

impl PolySeq {
    pub fn new(degree: u32, leading: Leading, lower: Vec<TorusPoint>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be at least 1".into()));
        }
        if leading.is_zero() {
            return Err(Error::InvalidInput("leading coefficient must be nonzero".into()));
        }
        if lower.len() != degree as usize - 1 {
            return Err(Error::InvalidInput(format!(
                "degree {degree} needs {} lower coefficients, got {}",
                degree - 1,
                lower.len()
            )));
        }
        if let Leading::Rational(r) = leading {
            Ratio::new(r.num, r.den)?;
        }
        Ok(PolySeq {
            degree,
            leading,
            lower,
        })
    }

    /// `A k^p mod 1` with all lower coefficients zero.
    pub fn monomial(degree: u32, leading: Leading) -> Result<Self> {
        PolySeq::new(degree, leading, vec![TorusPoint::ZERO; degree as usize - 1])
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn leading(&self) -> Leading {
        self.leading
    }

    pub fn lower(&self) -> &[TorusPoint] {
        &self.lower
    }

    pub fn with_lower(&self, lower: Vec<TorusPoint>) -> Result<Self> {
        PolySeq::new(self.degree, self.leading, lower)
    }

    /// The sequence of `-f`.
    pub fn negated(&self) -> Self {
        let leading = match self.leading {
            Leading::Rational(r) => Leading::Rational(Ratio {
                num: -r.num,
                den: r.den,
            }),
            Leading::Fixed { value } => Leading::Fixed { value: -value },
        };
        PolySeq {
            degree: self.degree,
            leading,
            lower: self.lower.iter().map(|&b| -b).collect(),
        }
    }

    /// `(m A k^p) mod 1`.
    pub fn leading_term(&self, k: i64, m: u64) -> TorusPoint {
        match self.leading {
            Leading::Rational(r) => {
                let den = r.den;
                let kk = k.rem_euclid(den as i64) as u64;
                let kp = pow_mod(kk, self.degree as u64, den);
                let coeff = (r.num as i128 * m as i128).rem_euclid(den as i128) as u64;
                TorusPoint::from_ratio(mul_mod(coeff, kp, den) as i128, den)
            }
            Leading::Fixed { value } => {
                value.mul_int(m).mul_int((k as u64).wrapping_pow(self.degree))
            }
        }
    }

    /// `x_k(B)`.
    pub fn eval(&self, k: i64) -> TorusPoint {
        self.eval_scaled(k, 1)
    }

    /// `(m * f(k)) mod 1`.
    pub fn eval_scaled(&self, k: i64, m: u64) -> TorusPoint {
        let mut acc = self.leading_term(k, m);
        let kk = k as u64;
        let mut power = 1u64;
        for b in &self.lower {
            power = power.wrapping_mul(kk);
            acc += b.mul_int(m).mul_int(power);
        }
        acc
    }

    /// Double-precision evaluation of `f(k) mod 1`, for cross-checks only.
    /// Loses all accuracy once `k^p` approaches `2^53`.
    pub fn eval_f64(&self, k: f64) -> f64 {
        let mut acc = self.leading.to_f64() * k.powi(self.degree as i32);
        for (i, b) in self.lower.iter().enumerate() {
            acc += b.to_f64() * k.powi(i as i32 + 1);
        }
        acc - acc.floor()
    }
}

/// Precomputed evaluation of one fixed pattern against many coefficient
/// vectors `B`: caches `A k^p mod 1` and `k^i mod 2^64` per pattern element.
#[derive(Clone, Debug)]
pub(crate) struct PatternEvaluator {
    leading: Vec<u64>,
    /// `powers[i * n + j] = k_j^(i+1) mod 2^64`.
    powers: Vec<u64>,
    n: usize,
    lower_count: usize,
}

impl PatternEvaluator {
    pub(crate) fn new(indices: &[u64], degree: u32, leading: Leading) -> Result<Self> {
        let template = PolySeq::monomial(degree, leading)?;
        let n = indices.len();
        let lower_count = degree as usize - 1;
        let leading = indices
            .iter()
            .map(|&k| template.leading_term(k as i64, 1).bits())
            .collect();
        let mut powers = vec![0u64; n * lower_count];
        for (j, &k) in indices.iter().enumerate() {
            let mut pw = 1u64;
            for i in 0..lower_count {
                pw = pw.wrapping_mul(k);
                powers[i * n + j] = pw;
            }
        }
        Ok(PatternEvaluator {
            leading,
            powers,
            n,
            lower_count,
        })
    }

    /// Writes `x_k(B)` for every pattern element into `out`.
    pub(crate) fn eval_into(&self, lower: &[u64], out: &mut [u64]) {
        debug_assert_eq!(lower.len(), self.lower_count);
        out.copy_from_slice(&self.leading);
        for (i, &b) in lower.iter().enumerate() {
            let row = &self.powers[i * self.n..(i + 1) * self.n];
            for (o, &pw) in out.iter_mut().zip(row) {
                *o = o.wrapping_add(b.wrapping_mul(pw));
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }
}
