//! The axis-cross configuration and the strip set it avoids.
//!
//! `P = {k e_1 : k = −1, 0, ..., n−2d} ∪ {±e_2, ..., ±e_d}` has `n` points.
//! With `ε = 1/(n−2d+2)` and `E = {x : (x_1 + ... + x_d) mod 1 ∈ [0, 1−ε)}`,
//! no `ℓ^p`-isometric copy of `r_j P`, `r_j = j + ε`, lies in `E` when
//! `p ≠ 2`: the image of the axis must be an axis line, and along it the
//! coordinate sum visits `n−2d+2` equally spaced residues.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{lp_norm, lp_power};
use crate::poly::Ratio;
use crate::seeds;
use crate::torus::{TorusPoint, FULL_TURN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossConfiguration {
    pub d: usize,
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// `1/(n−2d+2)`.
    pub epsilon: Ratio,
}

pub fn cross_configuration(d: usize, n: usize) -> Result<CrossConfiguration> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if n < 2 * d + 1 {
        return Err(Error::ParameterRange(format!("n = {n} must be at least 2d + 1 = {}", 2 * d + 1)));
    }
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let top = (n - 2 * d) as i64;
    for k in -1..=top {
        let mut p = vec![0.0; d];
        p[0] = k as f64;
        points.push(p);
        labels.push(format!("{k}e1"));
    }
    for i in 1..d {
        for s in [1.0, -1.0] {
            let mut p = vec![0.0; d];
            p[i] = s;
            points.push(p);
            labels.push(format!("{}e{}", if s > 0.0 { "+" } else { "-" }, i + 1));
        }
    }
    debug_assert_eq!(points.len(), n);
    Ok(CrossConfiguration {
        d,
        n,
        points,
        labels,
        epsilon: Ratio::reciprocal((n - 2 * d + 2) as u64)?,
    })
}

impl CrossConfiguration {
    /// Number of axis points, `n − 2d + 2`.
    pub fn axis_count(&self) -> u64 {
        (self.n - 2 * self.d + 2) as u64
    }

    /// `r_j = j + ε`.
    pub fn scale(&self, j: u64) -> f64 {
        j as f64 + self.epsilon.to_f64()
    }

    /// `(Σ x_i) mod 1 < 1 − ε`, in `f64`.
    pub fn member(&self, x: &[f64]) -> bool {
        let s: f64 = x.iter().sum();
        s.rem_euclid(1.0) < 1.0 - self.epsilon.to_f64()
    }
}

/// Whether no half-open arc of length `1 − 1/c` contains all of
/// `{k/c mod 1}`. The count inside `[a, a + 1 − 1/c)` only changes when
/// `a` crosses a multiple of `1/c`, so offsets at the multiples of
/// `1/(2c)` cover every case; everything is counted in units of `1/(2c)`.
pub fn equally_spaced_obstruction(count: u64) -> Result<bool> {
    if count < 2 {
        return Err(Error::InvalidInput(format!("count {count} must be at least 2")));
    }
    let turn = 2 * count;
    let len = turn - 2;
    Ok((0..turn).all(|a| (0..count).any(|k| (2 * k + turn - a) % turn >= len)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AxisDeduction {
    /// `u = sign · e_axis` (0-based axis).
    Confirmed { axis: usize, sign: i8 },
    /// One of the distance equalities fails; `residual` is its deviation.
    HypothesisFailed { hypothesis: String, residual: f64 },
    /// All equalities hold but the supports are not disjoint singletons.
    Inconclusive { detail: String },
}

/// Residual tolerance for the distance equalities.
pub const HYPOTHESIS_TOLERANCE: f64 = 1e-9;

/// Coordinates below this magnitude count as zero for supports.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

fn support(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > SUPPORT_THRESHOLD)
        .map(|(i, _)| i)
        .collect()
}

fn combine(a: &[f64], b: &[f64], sb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + sb * y).collect()
}

/// Runs the deduction that pins the axis image `u` to `±e_l`.
///
/// `v_plus[i]` are the normalized images of `e_{i+2}`, `v_minus[i]` those
/// of `−e_{i+2}`. Hypotheses checked: `‖v_i^+ − v_i^−‖_p = 2` (so
/// `v_i^− = −v_i^+` by strict convexity), `‖v_i^+ ± u‖_p^p = 2` and
/// `‖v_i^+ ± v_m^+‖_p^p = 2`. By the Clarkson equality case these make the
/// `d` supports pairwise disjoint, hence singletons.
pub fn sign_axis_deduction(
    u: &[f64],
    v_plus: &[Vec<f64>],
    v_minus: Option<&[Vec<f64>]>,
    p: f64,
) -> Result<AxisDeduction> {
    if !(p > 1.0 && p.is_finite()) || p == 2.0 {
        return Err(Error::InvalidInput(format!("exponent {p} must lie in (1, 2) ∪ (2, ∞)")));
    }
    let d = u.len();
    if d == 0 {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    if v_plus.len() + 1 != d && d > 1 {
        return Err(Error::InvalidInput(format!(
            "need d − 1 = {} images of ±e_i, got {}",
            d - 1,
            v_plus.len()
        )));
    }
    let all = std::iter::once(u)
        .chain(v_plus.iter().map(|v| v.as_slice()))
        .chain(v_minus.into_iter().flatten().map(|v| v.as_slice()));
    for w in all {
        if w.len() != d {
            return Err(Error::InvalidInput("vectors of different lengths".into()));
        }
        let norm = lp_norm(w, p);
        if (norm - 1.0).abs() > HYPOTHESIS_TOLERANCE {
            return Err(Error::InvalidInput(format!("vector has ℓ^p norm {norm}, expected 1")));
        }
    }
    if d == 1 {
        let sign = if u[0] >= 0.0 { 1 } else { -1 };
        return Ok(AxisDeduction::Confirmed { axis: 0, sign });
    }
    let failed = |hypothesis: String, residual: f64| {
        Ok(AxisDeduction::HypothesisFailed {
            hypothesis,
            residual,
        })
    };
    if let Some(vm) = v_minus {
        if vm.len() != v_plus.len() {
            return Err(Error::InvalidInput("v_plus and v_minus differ in length".into()));
        }
        for (i, (a, b)) in v_plus.iter().zip(vm).enumerate() {
            let res = (lp_norm(&combine(a, b, -1.0), p) - 2.0).abs();
            if res > HYPOTHESIS_TOLERANCE {
                return failed(format!("‖v_{0}^+ − v_{0}^−‖ = 2", i + 2), res);
            }
            let res = lp_norm(&combine(a, b, 1.0), p);
            if res > 1e-6 {
                return failed(format!("v_{0}^− = −v_{0}^+ (strict convexity)", i + 2), res);
            }
        }
    }
    for (i, v) in v_plus.iter().enumerate() {
        for s in [-1.0, 1.0] {
            let res = (lp_power(&combine(v, u, s), p) - 2.0).abs();
            if res > HYPOTHESIS_TOLERANCE {
                let op = if s < 0.0 { "−" } else { "+" };
                return failed(format!("‖v_{}^+ {op} u‖^p = 2", i + 2), res);
            }
        }
    }
    for i in 0..v_plus.len() {
        for m in i + 1..v_plus.len() {
            for s in [-1.0, 1.0] {
                let res = (lp_power(&combine(&v_plus[i], &v_plus[m], s), p) - 2.0).abs();
                if res > HYPOTHESIS_TOLERANCE {
                    let op = if s < 0.0 { "−" } else { "+" };
                    return failed(format!("‖v_{}^+ {op} v_{}^+‖^p = 2", i + 2, m + 2), res);
                }
            }
        }
    }
    let mut used = vec![false; d];
    let supports: Vec<Vec<usize>> = std::iter::once(u)
        .chain(v_plus.iter().map(|v| v.as_slice()))
        .map(support)
        .collect();
    for s in &supports {
        if s.len() != 1 {
            return Ok(AxisDeduction::Inconclusive {
                detail: format!("support {s:?} is not a singleton"),
            });
        }
        if used[s[0]] {
            return Ok(AxisDeduction::Inconclusive {
                detail: format!("coordinate {} is shared", s[0]),
            });
        }
        used[s[0]] = true;
    }
    let axis = supports[0][0];
    Ok(AxisDeduction::Confirmed {
        axis,
        sign: if u[axis] > 0.0 { 1 } else { -1 },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisPlacement {
    /// Coordinate sum of the base point, on the torus.
    pub base_sum: TorusPoint,
    pub axis: usize,
    pub sign: i8,
    pub j: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopySamplerReport {
    pub d: usize,
    pub n: usize,
    pub j: u64,
    pub epsilon: Ratio,
    pub samples: u64,
    pub violations: u64,
    pub examples: Vec<AxisPlacement>,
    pub pass: bool,
}

/// `(s + σ k ε) mod 1 < 1 − ε`, exactly, for `ε = num/den`. Since `j k` is
/// an integer, `r_j k ≡ k ε (mod 1)`. Values are compared in units of
/// `1/(den 2^64)`.
fn axis_member(sum: TorusPoint, sign: i8, k: i64, eps: Ratio) -> bool {
    let den = eps.den as i128;
    let modulus = den * FULL_TURN as i128;
    let shift = sign as i128 * k as i128 * eps.num as i128 * FULL_TURN as i128;
    let value = (sum.bits() as i128 * den + shift).rem_euclid(modulus);
    value < (den - eps.num as i128) * FULL_TURN as i128
}

/// Samples axis-aligned copies `x + σ r_j k e_l`, `k = −1..n−2d`, and counts
/// those lying entirely in `E`. `epsilon_override` replaces `ε` in both the
/// set and the scale.
pub fn copy_sampler_check(
    cfg: &CrossConfiguration,
    j: u64,
    seed: u64,
    count: u64,
    epsilon_override: Option<Ratio>,
) -> Result<CopySamplerReport> {
    if j < 1 {
        return Err(Error::ParameterRange("scale index j must be at least 1".into()));
    }
    let eps = epsilon_override.unwrap_or(cfg.epsilon);
    if eps.num < 0 || eps.num as u64 >= eps.den {
        return Err(Error::InvalidInput("epsilon must lie in [0, 1)".into()));
    }
    let top = (cfg.n - 2 * cfg.d) as i64;
    let half = 10.0 * (j as f64 + eps.to_f64());
    let blocks: Vec<_> = seeds::blocks(count).collect();
    let found: Vec<Vec<AxisPlacement>> = blocks
        .par_iter()
        .map(|&(b, start, end)| {
            let mut rng = seeds::block_rng(seed, j, b);
            let mut bad = Vec::new();
            for _ in start..end {
                let sum: f64 = (0..cfg.d).map(|_| rng.random_range(-half..half)).sum();
                let axis = rng.random_range(0..cfg.d);
                let sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
                let base_sum = TorusPoint::from_f64(sum);
                if (-1..=top).all(|k| axis_member(base_sum, sign, k, eps)) {
                    bad.push(AxisPlacement {
                        base_sum,
                        axis,
                        sign,
                        j,
                    });
                }
            }
            bad
        })
        .collect();
    let violations: Vec<AxisPlacement> = found.into_iter().flatten().collect();
    Ok(CopySamplerReport {
        d: cfg.d,
        n: cfg.n,
        j,
        epsilon: eps,
        samples: count,
        violations: violations.len() as u64,
        pass: violations.is_empty(),
        examples: violations.into_iter().take(10).collect(),
    })
}

/// Monte Carlo density of `E` in `[−R/2, R/2]^d`.
pub fn strip_density(cfg: &CrossConfiguration, r: f64, samples: u64, seed: u64) -> Result<f64> {
    if samples == 0 || !(r > 0.0) {
        return Err(Error::InvalidInput("need positive samples and side".into()));
    }
    let half = r / 2.0;
    let blocks: Vec<_> = seeds::blocks(samples).collect();
    let hits: u64 = blocks
        .par_iter()
        .map(|&(b, start, end)| {
            let mut rng = seeds::block_rng(seed, 0, b);
            let mut x = vec![0.0; cfg.d];
            let mut hits = 0;
            for _ in start..end {
                for c in x.iter_mut() {
                    *c = rng.random_range(-half..half);
                }
                hits += cfg.member(&x) as u64;
            }
            hits
        })
        .sum();
    Ok(hits as f64 / samples as f64)
}
