//! Annular obstruction sets and candidate copies of a dilated pattern.
//!
//! For even `p` the set is `E = {x : dist(‖x‖_p^p, Z) < (1−ε)/2}`. For odd
//! `p`, with `F_σ(x) = σ_1 x_1^p + ... + σ_d x_d^p`, it is the intersection
//! of `E_σ = {x : dist(F_σ(x), Z) < (1−ε)/2}` over all sign vectors σ.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Ratio;
use crate::precise::DoubleDouble;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    /// One form `‖x‖_p^p`.
    Even,
    /// Intersection over all `2^d` signed forms.
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub d: usize,
    pub p: u32,
    /// `ε ∈ [0, 1)`; `ε = 0` gives a set of full measure and is only
    /// useful to show that a positive ε is needed.
    pub epsilon: f64,
    pub parity: Parity,
}

/// Sign vectors are encoded as bit masks: bit `i` set means `σ_i = −1`.
fn sign(mask: u32, i: usize) -> f64 {
    if mask >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

impl AnnulusSpec {
    pub fn new(d: usize, p: u32, epsilon: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if d > 20 {
            return Err(Error::InvalidInput(format!("dimension {d} too large for sign enumeration")));
        }
        if p < 2 {
            return Err(Error::InvalidInput(format!("exponent {p} must be at least 2")));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidInput(format!("epsilon {epsilon} outside [0, 1)")));
        }
        let parity = if p % 2 == 0 { Parity::Even } else { Parity::Odd };
        Ok(AnnulusSpec {
            d,
            p,
            epsilon,
            parity,
        })
    }

    /// Half-width of the admissible arc around `0 mod 1`.
    pub fn half_width(&self) -> f64 {
        (1.0 - self.epsilon) / 2.0
    }

    /// Sign masks that define the set.
    pub fn sign_masks(&self) -> impl Iterator<Item = u32> {
        let count = match self.parity {
            Parity::Even => 1u32,
            Parity::Odd => 1u32 << self.d,
        };
        0..count
    }

    /// `F_σ(x)` in `f64`.
    pub fn form(&self, mask: u32, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &t)| sign(mask, i) * t.powi(self.p as i32))
            .sum()
    }

    pub fn form_precise(&self, mask: u32, x: &[DoubleDouble]) -> DoubleDouble {
        x.iter()
            .enumerate()
            .fold(DoubleDouble::ZERO, |acc, (i, &t)| {
                let term = t.powi(self.p);
                if sign(mask, i) < 0.0 {
                    acc - term
                } else {
                    acc + term
                }
            })
    }

    fn check_len(&self, len: usize) {
        assert_eq!(len, self.d, "point has {len} coordinates, expected {}", self.d);
    }

    /// Membership with a strict inequality; a tie counts as outside.
    pub fn member(&self, x: &[f64]) -> bool {
        self.check_len(x.len());
        let h = self.half_width();
        self.sign_masks().all(|m| {
            let f = self.form(m, x);
            let dist = (f - f.round()).abs();
            dist < h
        })
    }

    pub fn member_precise(&self, x: &[DoubleDouble]) -> bool {
        self.check_len(x.len());
        let h = self.half_width();
        self.sign_masks()
            .all(|m| self.form_precise(m, x).dist_to_integer() < h)
    }
}

/// A candidate copy `{x + r_j k u : k ∈ P}` with `u = v/‖v‖_p` and
/// `r_j = (A + j)^{1/p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x: Vec<f64>,
    /// Direction, `ℓ^p`-normalized in `f64`; the residual rounding is
    /// absorbed exactly by [`Placement::scale_precise`].
    pub v: Vec<f64>,
    pub j: i64,
    /// `A + j` as an exact ratio.
    pub shell: Ratio,
    pub r: f64,
    pub p: u32,
}

pub fn lp_power_sum(v: &[f64], p: u32) -> f64 {
    v.iter().map(|t| t.abs().powi(p as i32)).sum()
}

impl Placement {
    pub fn new(x: Vec<f64>, v: Vec<f64>, j: i64, a: Ratio, p: u32) -> Result<Self> {
        if x.len() != v.len() || x.is_empty() {
            return Err(Error::InvalidInput(format!(
                "base has {} coordinates, direction {}",
                x.len(),
                v.len()
            )));
        }
        if x.iter().chain(&v).any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        if p < 1 {
            return Err(Error::InvalidInput("exponent must be positive".into()));
        }
        let den = a.den as i128;
        let num = a.num as i128 + j as i128 * den;
        if num <= 0 {
            return Err(Error::ParameterRange(format!(
                "A + j = {}/{} + {j} must be positive",
                a.num, a.den
            )));
        }
        let shell = Ratio::new(
            i64::try_from(num).map_err(|_| Error::ParameterRange("A + j overflows".into()))?,
            a.den,
        )?;
        let norm = lp_power_sum(&v, p).powf(1.0 / p as f64);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        let v: Vec<f64> = if (norm - 1.0).abs() > 1e-12 {
            v.iter().map(|t| t / norm).collect()
        } else {
            v
        };
        let r = shell.to_f64().powf(1.0 / p as f64);
        Ok(Placement {
            x,
            v,
            j,
            shell,
            r,
            p,
        })
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// `A + j` in double-double.
    pub fn shell_precise(&self) -> DoubleDouble {
        DoubleDouble::from_f64(self.shell.num as f64) / DoubleDouble::from_f64(self.shell.den as f64)
    }

    /// `s = r_j / ‖v‖_p`, so that `x + s k v = x + r_j k u` with `u` the
    /// exact unit vector along `v`.
    pub fn scale_precise(&self) -> DoubleDouble {
        let p = self.p;
        let norm_p = self.v.iter().fold(DoubleDouble::ZERO, |acc, &t| {
            acc + DoubleDouble::from_f64(t.abs()).powi(p)
        });
        (self.shell_precise() / norm_p).root(p)
    }

    /// Copy point for index `k`.
    pub fn point(&self, k: i64) -> Vec<f64> {
        let rk = self.r * k as f64;
        self.x.iter().zip(&self.v).map(|(x, v)| x + rk * v).collect()
    }

    /// Copy point for index `k` in double-double, using `scale_precise`.
    pub fn point_precise(&self, scale: DoubleDouble, k: i64) -> Vec<DoubleDouble> {
        let sk = scale * DoubleDouble::from_i128(k as i128);
        self.x
            .iter()
            .zip(&self.v)
            .map(|(&x, &v)| DoubleDouble::from_f64(x) + sk.mul_f64(v))
            .collect()
    }
}

/// Uniform direction on the `ℓ^p` unit sphere: coordinates with density
/// `∝ exp(−|t|^p)`, normalized. `|t|^p` is `Gamma(1/p, 1)`.
pub fn sample_direction(rng: &mut ChaCha8Rng, d: usize, p: u32) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / p as f64, 1.0).expect("valid shape");
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| {
                let mag = gamma.sample(rng).powf(1.0 / p as f64);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let norm = lp_power_sum(&v, p).powf(1.0 / p as f64);
        if norm > 0.0 && norm.is_finite() {
            return v.into_iter().map(|t| t / norm).collect();
        }
    }
}

/// Random placement at scale index `j`: base uniform in `[−L, L]^d` with
/// `L = 10 r_j`, direction uniform on the `ℓ^p` sphere.
pub fn sample_placement(rng: &mut ChaCha8Rng, spec: &AnnulusSpec, a: Ratio, j: i64) -> Result<Placement> {
    let r = (a.to_f64() + j as f64).powf(1.0 / spec.p as f64);
    let l = 10.0 * r;
    let x: Vec<f64> = (0..spec.d).map(|_| rng.random_range(-l..=l)).collect();
    let v = sample_direction(rng, spec.d, spec.p);
    Placement::new(x, v, j, a, spec.p)
}
