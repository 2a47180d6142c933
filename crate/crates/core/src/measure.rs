//! Volumes of annular sets: exact one-variable measures and the density of
//! `E` in the cube `[−R/2, R/2]^d`.
//!
//! For `s ≥ 0` the condition `s^p mod 1 ∈ [α, β)` holds exactly on
//! `∪_m [(m+α)^{1/p}, (m+β)^{1/p})`, so one-variable measures are finite
//! sums of root differences.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{AnnulusSpec, Parity};
use crate::error::{Error, Result};
use crate::seeds;
use crate::torus::{Closure, TorusInterval, TorusPoint};

/// Cap on `(R/2)^p`, the number of shells enumerated per sign of `t`.
pub const SHELL_BUDGET: f64 = 1e8;

/// Cap on slices times shells for the exact-slice density.
pub const SLICE_BUDGET: f64 = 2e9;

/// Default quadrature step for exact-slice densities.
pub const SLICE_STEP: f64 = 0.1;

fn root(u: f64, p: u32) -> f64 {
    match p {
        1 => u,
        2 => u.sqrt(),
        3 => u.cbrt(),
        4 => u.sqrt().sqrt(),
        _ => u.powf(1.0 / p as f64),
    }
}

/// `b^{1/p} − a^{1/p}` without cancellation for `0 ≤ a ≤ b`.
fn root_diff(a: f64, b: f64, p: u32) -> f64 {
    let ra = root(a, p);
    let rb = root(b, p);
    let mut denom = 0.0;
    let mut pa = 1.0;
    for _ in 0..p {
        denom = denom * rb + pa;
        pa *= ra;
    }
    // denom = Σ_i ra^{p−1−i} rb^i by Horner in rb
    if denom == 0.0 {
        rb - ra
    } else {
        (b - a) / denom
    }
}

/// Arc pieces `[α, β) ⊂ [0, 1]` of `x mod 1 ∈ I`.
fn arc_pieces(start: f64, length: f64) -> Vec<(f64, f64)> {
    if length >= 1.0 {
        return vec![(0.0, 1.0)];
    }
    let end = start + length;
    if end <= 1.0 {
        vec![(start, end)]
    } else {
        vec![(start, 1.0), (0.0, end - 1.0)]
    }
}

/// `(start, length)` of `I` or of its reflection `−I`.
fn oriented(interval: &TorusInterval, tau: f64) -> (f64, f64) {
    let len = interval.length();
    if tau > 0.0 {
        (interval.start.to_f64(), len)
    } else {
        // −[a, a+len) = (−a−len, −a]; the endpoints carry no measure
        let s = (-interval.start.to_f64() - len).rem_euclid(1.0);
        (if s >= 1.0 { 0.0 } else { s }, len)
    }
}

/// Measure of `{s ∈ [0, S] : s^p mod 1 ∈ [start, start + len)}`.
fn half_line_measure(p: u32, half: f64, start: f64, len: f64) -> f64 {
    let top = half.powi(p as i32);
    let shells = top.floor() as u64;
    let mut total = 0.0;
    for (alpha, beta) in arc_pieces(start, len) {
        let chunk = 1u64 << 16;
        let parts: Vec<f64> = (0..=shells / chunk)
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = ((c + 1) * chunk).min(shells + 1);
                let mut acc = 0.0;
                for m in lo..hi {
                    let a = m as f64 + alpha;
                    if a >= top {
                        break;
                    }
                    let b = (m as f64 + beta).min(top);
                    acc += root_diff(a, b, p);
                }
                acc
            })
            .collect();
        total += parts.iter().sum::<f64>();
    }
    total
}

/// Interval list version of [`half_line_measure`], for intersections.
fn half_line_set(p: u32, half: f64, start: f64, len: f64, sign: f64, out: &mut Vec<(f64, f64)>) {
    let top = half.powi(p as i32);
    let shells = top.floor() as u64;
    for (alpha, beta) in arc_pieces(start, len) {
        for m in 0..=shells {
            let a = m as f64 + alpha;
            if a >= top {
                break;
            }
            let b = (m as f64 + beta).min(top);
            let (ra, rb) = (root(a, p), root(b, p));
            if sign > 0.0 {
                out.push((ra, rb));
            } else {
                out.push((-rb, -ra));
            }
        }
    }
}

fn check_shells(p: u32, r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("side length {r} must be at least 1")));
    }
    let shells = (r / 2.0).powi(p as i32);
    if shells > SHELL_BUDGET {
        return Err(Error::Budget(format!(
            "(R/2)^p = {shells:.3e} shells exceeds {SHELL_BUDGET:.0e}; use Monte Carlo"
        )));
    }
    Ok(())
}

/// Lebesgue measure of `{t ∈ [−R/2, R/2] : σ t^p mod 1 ∈ I}`.
pub fn one_variable_measure(p: u32, sigma: i8, r: f64, interval: &TorusInterval) -> Result<f64> {
    if p < 1 {
        return Err(Error::InvalidInput("exponent must be positive".into()));
    }
    if sigma != 1 && sigma != -1 {
        return Err(Error::InvalidInput(format!("sign {sigma} must be ±1")));
    }
    check_shells(p, r)?;
    let half = r / 2.0;
    let sigma = sigma as f64;
    // t ≥ 0 sees σ s^p; t = −s sees σ (−1)^p s^p
    let tau_neg = if p % 2 == 0 { sigma } else { -sigma };
    let (s_pos, len) = oriented(interval, sigma);
    let pos = half_line_measure(p, half, s_pos, len);
    let neg = if tau_neg == sigma {
        pos
    } else {
        let (s_neg, len) = oriented(interval, tau_neg);
        half_line_measure(p, half, s_neg, len)
    };
    Ok(pos + neg)
}

/// Sorted, merged interval list of `{t ∈ [−R/2, R/2] : σ t^p + c mod 1 ∈ I}`.
fn one_variable_set(p: u32, sigma: f64, half: f64, start: f64, len: f64, c: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let tau_neg = if p % 2 == 0 { sigma } else { -sigma };
    for (tau, side) in [(sigma, 1.0), (tau_neg, -1.0)] {
        // τ s^p ∈ I − c
        let shifted = TorusInterval::from_bits(
            TorusPoint::from_f64(start - c),
            crate::torus::length_from_f64(len),
            Closure::HalfOpen,
        );
        let (s, l) = oriented(&shifted, tau);
        half_line_set(p, half, s, l, side, &mut out);
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DensityMethod {
    ExactSlice,
    MonteCarlo { samples: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DensityEstimate {
    /// Midpoint rule in `x_2..x_d` with exact measures in `x_1`;
    /// `error_estimate` compares against the rule at twice the step.
    ExactSlice { step: f64, error_estimate: f64 },
    MonteCarlo { seed: u64, samples: u64, std_error: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// `d(E) = 1 − ε`.
    Exact,
    /// `d(E) ≥ 1 − 2^d ε`.
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub d: usize,
    pub p: u32,
    pub epsilon: f64,
    pub side: f64,
    pub fraction: f64,
    pub target: f64,
    pub target_kind: TargetKind,
    pub method: DensityEstimate,
    /// Exact slicing was requested but Monte Carlo was used.
    pub fallback: bool,
}

impl DensityReport {
    /// Deviation from the target, signed so that positive is bad.
    pub fn shortfall(&self) -> f64 {
        match self.target_kind {
            TargetKind::Exact => (self.fraction - self.target).abs(),
            TargetKind::LowerBound => self.target - self.fraction,
        }
    }
}

/// Monte Carlo samples used when exact slicing falls back.
pub const FALLBACK_SAMPLES: u64 = 1_000_000;

pub fn density(spec: &AnnulusSpec, r: f64, method: DensityMethod, seed: u64) -> Result<DensityReport> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("side length {r} must be at least 1")));
    }
    let (target, target_kind) = match spec.parity {
        Parity::Even => (1.0 - spec.epsilon, TargetKind::Exact),
        Parity::Odd => (1.0 - (1u64 << spec.d) as f64 * spec.epsilon, TargetKind::LowerBound),
    };
    let (fraction, estimate, fallback) = match method {
        DensityMethod::MonteCarlo { samples } => {
            let (f, e) = monte_carlo(spec, r, samples, seed)?;
            (f, e, false)
        }
        DensityMethod::ExactSlice if spec.d >= 4 => {
            let (f, e) = monte_carlo(spec, r, FALLBACK_SAMPLES, seed)?;
            (f, e, true)
        }
        DensityMethod::ExactSlice => {
            check_shells(spec.p, r)?;
            let cells = (r / SLICE_STEP).ceil();
            let work = cells.powi(spec.d as i32 - 1) * (r / 2.0).powi(spec.p as i32).max(1.0);
            if work > SLICE_BUDGET {
                return Err(Error::Budget(format!(
                    "exact slicing needs about {work:.3e} shell evaluations (budget {SLICE_BUDGET:.0e})"
                )));
            }
            let fine = slice_integral(spec, r, cells as u64)?;
            let error_estimate = if spec.d == 1 {
                0.0
            } else {
                let coarse = slice_integral(spec, r, (cells as u64 / 2).max(1))?;
                (fine - coarse).abs() / 3.0
            };
            (
                fine,
                DensityEstimate::ExactSlice {
                    step: r / cells,
                    error_estimate,
                },
                false,
            )
        }
    };
    Ok(DensityReport {
        d: spec.d,
        p: spec.p,
        epsilon: spec.epsilon,
        side: r,
        fraction,
        target,
        target_kind,
        method: estimate,
        fallback,
    })
}

/// Fraction of the cube via midpoint slices with `cells` per axis in
/// `x_2..x_d` and exact one-variable sets in `x_1`.
fn slice_integral(spec: &AnnulusSpec, r: f64, cells: u64) -> Result<f64> {
    let half = r / 2.0;
    let h = r / cells as f64;
    let rest = spec.d - 1;
    let total = cells.pow(rest as u32);
    let start = -spec.half_width();
    let len = 1.0 - spec.epsilon;
    let masks: Vec<u32> = spec.sign_masks().collect();
    let p = spec.p;
    let slice = |idx: u64| -> f64 {
        let mut coords = Vec::with_capacity(rest);
        let mut t = idx;
        for _ in 0..rest {
            coords.push(-half + (t % cells) as f64 * h + h / 2.0);
            t /= cells;
        }
        if len <= 0.0 {
            return 0.0;
        }
        let mut set: Option<Vec<(f64, f64)>> = None;
        for &m in &masks {
            let sign = |i: usize| if m >> i & 1 == 1 { -1.0 } else { 1.0 };
            let c: f64 = coords
                .iter()
                .enumerate()
                .map(|(i, x)| sign(i + 1) * x.powi(p as i32))
                .sum();
            let s = one_variable_set(p, sign(0), half, start, len, c);
            set = Some(match set {
                None => s,
                Some(prev) => intersect(&prev, &s),
            });
        }
        set.unwrap_or_default().iter().map(|(a, b)| b - a).sum::<f64>()
    };
    let slices: Vec<f64> = (0..total).into_par_iter().map(slice).collect();
    let sum: f64 = slices.iter().sum();
    Ok(sum * h.powi(rest as i32) / r.powi(spec.d as i32))
}

fn monte_carlo(spec: &AnnulusSpec, r: f64, samples: u64, seed: u64) -> Result<(f64, DensityEstimate)> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let half = r / 2.0;
    let blocks: Vec<_> = seeds::blocks(samples).collect();
    let hits: u64 = blocks
        .par_iter()
        .map(|&(b, start, end)| {
            let mut rng = seeds::block_rng(seed, 0, b);
            let mut x = vec![0.0; spec.d];
            let mut count = 0u64;
            for _ in start..end {
                for c in x.iter_mut() {
                    *c = rng.random_range(-half..half);
                }
                count += spec.member(&x) as u64;
            }
            count
        })
        .sum();
    let f = hits as f64 / samples as f64;
    let std_error = (f * (1.0 - f) / samples as f64).sqrt();
    Ok((
        f,
        DensityEstimate::MonteCarlo {
            seed,
            samples,
            std_error,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval(start: f64, len: f64) -> TorusInterval {
        TorusInterval::new(TorusPoint::from_f64(start), len, Closure::HalfOpen).unwrap()
    }

    #[test]
    fn full_circle() {
        let m = one_variable_measure(2, 1, 1.0, &interval(0.0, 1.0)).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_branch() {
        let m = one_variable_measure(2, 1, 2.0, &interval(0.0, 0.25)).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }

    /// Measure on a fine midpoint grid; error `O(shells · step)`.
    fn grid_oracle(p: u32, sigma: f64, r: f64, start: f64, len: f64, n: usize) -> f64 {
        let h = r / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            let t = -r / 2.0 + (i as f64 + 0.5) * h;
            let v = (sigma * t.powi(p as i32) - start).rem_euclid(1.0);
            if v < len {
                count += 1;
            }
        }
        count as f64 * h
    }

    #[test]
    fn matches_grid_oracle() {
        for (p, sigma, r, start, len) in [
            (2u32, 1i8, 7.0, 0.3, 0.4),
            (3, 1, 5.0, 0.8, 0.35),
            (3, -1, 5.0, 0.1, 0.5),
            (4, -1, 4.0, 0.95, 0.2),
            (5, 1, 3.0, 0.4, 0.9),
        ] {
            let m = one_variable_measure(p, sigma, r, &interval(start, len)).unwrap();
            let o = grid_oracle(p, sigma as f64, r, start, len, 4_000_000);
            assert!((m - o).abs() < 1e-3, "p={p} σ={sigma}: {m} vs {o}");
        }
    }

    #[test]
    fn large_sides_stay_close_to_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in [2u32, 3] {
            for _ in 0..5 {
                let start = rng.random::<f64>();
                let len = rng.random_range(0.05..1.0);
                let m = one_variable_measure(p, 1, 64.0, &interval(start, len)).unwrap();
                assert!((m - len * 64.0).abs() < 3.0);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            one_variable_measure(8, 1, 100.0, &interval(0.0, 0.5)),
            Err(Error::Budget(_))
        ));
        assert!(one_variable_measure(2, 1, 0.5, &interval(0.0, 0.5)).is_err());
        assert!(one_variable_measure(2, 0, 2.0, &interval(0.0, 0.5)).is_err());
    }

    #[test]
    fn root_difference_is_stable() {
        let a = 1e12;
        let b = a + 0.25;
        let d = root_diff(a, b, 2);
        assert!((d - 0.25 / (2.0 * 1e6)).abs() < 1e-20);
    }

    #[test]
    fn one_dimensional_density() {
        let spec = AnnulusSpec::new(1, 2, 0.1).unwrap();
        let r = density(&spec, 100.0, DensityMethod::ExactSlice, 0).unwrap();
        assert!((r.fraction - 0.9).abs() < 0.05);
        assert_eq!(r.target_kind, TargetKind::Exact);
    }

    #[test]
    fn slices_agree_with_monte_carlo() {
        for (d, p, eps) in [(2usize, 2u32, 0.2), (2, 3, 0.1), (2, 4, 0.3)] {
            let spec = AnnulusSpec::new(d, p, eps).unwrap();
            let s = slice_integral(&spec, 8.0, 4000).unwrap();
            let m = density(&spec, 8.0, DensityMethod::MonteCarlo { samples: 400_000 }, 1).unwrap();
            assert!((s - m.fraction).abs() < 0.005, "d={d} p={p}: {s} vs {}", m.fraction);
        }
    }

    #[test]
    fn default_step_reports_its_error() {
        let spec = AnnulusSpec::new(2, 2, 0.2).unwrap();
        let r = density(&spec, 8.0, DensityMethod::ExactSlice, 0).unwrap();
        let fine = slice_integral(&spec, 8.0, 4000).unwrap();
        let DensityEstimate::ExactSlice { step, error_estimate } = r.method else {
            panic!("expected slicing");
        };
        assert!((step - 0.1).abs() < 1e-12);
        assert!((r.fraction - fine).abs() < 0.01);
        assert!(error_estimate.is_finite());
    }

    #[test]
    fn high_dimension_falls_back() {
        let spec = AnnulusSpec::new(4, 2, 0.1).unwrap();
        let r = density(&spec, 10.0, DensityMethod::ExactSlice, 3).unwrap();
        assert!(r.fallback);
        assert!(matches!(r.method, DensityEstimate::MonteCarlo { .. }));
    }

    #[test]
    fn odd_target_is_a_lower_bound() {
        let spec = AnnulusSpec::new(2, 3, 0.05).unwrap();
        let r = density(&spec, 20.0, DensityMethod::MonteCarlo { samples: 100_000 }, 2).unwrap();
        assert_eq!(r.target_kind, TargetKind::LowerBound);
        assert!((r.target - 0.8).abs() < 1e-12);
        assert!(r.fraction >= r.target - 0.01);
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let spec = AnnulusSpec::new(2, 2, 0.1).unwrap();
        let m = DensityMethod::MonteCarlo { samples: 50_000 };
        let a = density(&spec, 30.0, m, 8).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| density(&spec, 30.0, m, 8).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn shrinking_annuli_shrink_the_set() {
        let mut last = 1.0;
        for eps in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let spec = AnnulusSpec::new(2, 2, eps).unwrap();
            let f = density(&spec, 20.0, DensityMethod::MonteCarlo { samples: 20_000 }, 5)
                .unwrap()
                .fraction;
            assert!(f <= last);
            last = f;
        }
        assert!(last < 0.05);
    }
}
