//! Hitting verification for patterns against all lower-coefficient vectors.
//!
//! A pattern `P` with leading coefficient `A` is ε-hitting when, for every
//! `B = (B_1, ..., B_{p-1})`, the points `{x_k(B) : k ∈ P}` meet every arc of
//! length ε, equivalently when their largest circular gap is at most ε.
//!
//! [`verify_hitting_net`] checks the gap on a finite grid of coefficient
//! vectors with meshes `Δ_i` and transfers the result to all real `B`: moving
//! `B_i` by at most `Δ_i` moves every `x_k` by at most `δ = Σ Δ_i Q^i`, so a
//! grid gap of at most `9ε/10 − 2δ` certifies ε everywhere (this keeps the
//! `9/10` interval shrinkage of the union-bound construction as well).
//! [`verify_hitting_sampled`] is the Monte Carlo surrogate for nets that do
//! not fit the budget.

use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{thin_pattern, Pattern};
use crate::poly::{Leading, PatternEvaluator, Ratio};
use crate::seeds;
use crate::torus::{length_to_f64, max_gap_in_place, TorusPoint};

/// Default cap on the number of grid cells in a coefficient net.
pub const DEFAULT_NET_BUDGET: u128 = 100_000_000;

/// Parameters of the coefficient net and the interval family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub degree: u32,
    pub q: u64,
    pub epsilon: f64,
    /// `1` reproduces the construction's meshes; smaller values coarsen.
    pub resolution_scale: f64,
    /// Grid sizes `|B_i|`, `i = 1..p-1`.
    pub sizes: Vec<u64>,
    /// Actual meshes `1/|B_i|`.
    pub meshes: Vec<f64>,
    /// Construction meshes `ε / (100 p Q^i)` before coarsening.
    pub recipe_meshes: Vec<f64>,
    /// `δ = Σ Δ_i Q^i` with the actual meshes.
    pub transfer_slack: f64,
    pub interval_stride: f64,
    pub interval_length: f64,
    pub interval_count: u64,
    pub total_cells: u128,
}

impl NetSpec {
    pub fn is_faithful(&self) -> bool {
        self.resolution_scale >= 1.0
    }

    /// Largest admissible gap at the net points.
    pub fn threshold(&self) -> f64 {
        0.9 * self.epsilon - 2.0 * self.transfer_slack
    }
}

pub fn build_nets(degree: u32, q: u64, epsilon: f64, resolution_scale: f64) -> Result<NetSpec> {
    build_nets_with_budget(degree, q, epsilon, resolution_scale, DEFAULT_NET_BUDGET)
}

pub fn build_nets_with_budget(
    degree: u32,
    q: u64,
    epsilon: f64,
    resolution_scale: f64,
    budget: u128,
) -> Result<NetSpec> {
    if degree == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if q < 2 {
        return Err(Error::InvalidInput(format!("Q = {q} must be at least 2")));
    }
    if !(resolution_scale > 0.0 && resolution_scale <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "resolution scale {resolution_scale} outside (0, 1]"
        )));
    }
    let p = degree as f64;
    let qf = q as f64;
    let mut sizes = Vec::new();
    let mut meshes = Vec::new();
    let mut recipe_meshes = Vec::new();
    let mut total: u128 = 1;
    let mut slack = 0.0;
    for i in 1..degree {
        let qi = qf.powi(i as i32);
        recipe_meshes.push(epsilon / (100.0 * p * qi));
        let want = 100.0 * p * qi * resolution_scale / epsilon;
        let size = (want * (1.0 - 1e-12)).ceil().max(1.0);
        if !(size < 1.8e19) {
            return Err(Error::Budget(format!(
                "net factor |B_{i}| ~ 100 p Q^{i} / ε = {want:.3e} overflows"
            )));
        }
        let size = size as u64;
        total = total.saturating_mul(size as u128);
        if total > budget {
            return Err(Error::Budget(format!(
                "net size exceeds {budget} cells at factor |B_{i}| = {size} (100 p Q^{i} / ε term with Q = {q}, ε = {epsilon}, scale = {resolution_scale})"
            )));
        }
        let mesh = 1.0 / size as f64;
        slack += mesh * qi;
        sizes.push(size);
        meshes.push(mesh);
    }
    let stride = epsilon / 100.0;
    Ok(NetSpec {
        degree,
        q,
        epsilon,
        resolution_scale,
        sizes,
        meshes,
        recipe_meshes,
        transfer_slack: slack,
        interval_stride: stride,
        interval_length: 0.9 * epsilon,
        interval_count: (100.0 / epsilon * (1.0 - 1e-12)).ceil() as u64,
        total_cells: total,
    })
}

/// Largest resolution scale whose net fits in `cells` grid points.
pub fn scale_for_budget(degree: u32, q: u64, epsilon: f64, cells: u128) -> f64 {
    let p = degree as f64;
    let full: f64 = (1..degree)
        .map(|i| 100.0 * p * (q as f64).powi(i as i32) / epsilon)
        .product();
    if degree <= 1 || full <= cells as f64 {
        return 1.0;
    }
    // every factor shrinks by `scale`
    let mut scale = (cells as f64 / full).powf(1.0 / (degree - 1) as f64);
    while scale > 0.0 {
        match build_nets_with_budget(degree, q, epsilon, scale, cells) {
            Ok(_) => return scale,
            Err(_) => scale *= 0.999,
        }
    }
    scale
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HittingMode {
    /// Net with the construction's meshes.
    FaithfulNet,
    /// Coarsened net; the certified epsilon is `effective_epsilon`.
    CoarsenedNet { resolution_scale: f64 },
    /// Random coefficient vectors; no universal guarantee.
    Sampled { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub epsilon: f64,
    pub worst_gap: f64,
    /// The coefficient vector `B_1..B_{p-1}` attaining `worst_gap`.
    pub worst_b: Vec<TorusPoint>,
    pub samples_tested: u64,
    pub mode: HittingMode,
    /// `pass` iff `worst_gap <= threshold`.
    pub threshold: f64,
    /// Net modes: `δ = Σ Δ_i Q^i`.
    pub transfer_slack: Option<f64>,
    /// Net modes: the smallest ε this run certifies for all real `B`,
    /// `(worst_gap + 2δ) / (9/10)`.
    pub effective_epsilon: Option<f64>,
    pub pass: bool,
}

impl HittingReport {
    /// The ε this run certifies for every real `B`, if below 1. Only net
    /// runs certify anything; this holds whether or not `pass` is set.
    pub fn certified_epsilon(&self) -> Option<f64> {
        self.effective_epsilon.filter(|&e| e < 1.0)
    }
}

/// Running maximum, ties resolved toward the smaller sample index so that
/// any evaluation order gives the same answer.
#[derive(Clone, Copy)]
struct Worst {
    gap: u128,
    index: u64,
}

impl Worst {
    const NONE: Worst = Worst {
        gap: 0,
        index: u64::MAX,
    };

    fn merge(self, other: Worst) -> Worst {
        if other.gap > self.gap || (other.gap == self.gap && other.index < self.index) {
            other
        } else {
            self
        }
    }
}

fn check_pattern(pattern: &Pattern, degree: u32) -> Result<()> {
    if degree == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    if pattern.n() == 0 {
        return Err(Error::InvalidInput("empty pattern".into()));
    }
    Ok(())
}

/// Decodes net point `index` into its coefficient vector.
fn net_point(sizes: &[u64], mut index: u128, out: &mut [u64]) {
    for (slot, &size) in out.iter_mut().zip(sizes) {
        let j = (index % size as u128) as u64;
        index /= size as u128;
        *slot = TorusPoint::from_ratio(j as i128, size).bits();
    }
}

pub fn verify_hitting_net(
    pattern: &Pattern,
    leading: Ratio,
    degree: u32,
    epsilon: f64,
    nets: &NetSpec,
) -> Result<HittingReport> {
    check_pattern(pattern, degree)?;
    if nets.degree != degree {
        return Err(Error::InvalidInput(format!(
            "net built for degree {}, asked for {degree}",
            nets.degree
        )));
    }
    if (nets.epsilon - epsilon).abs() > 1e-15 * epsilon.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "net built for epsilon {}, asked for {epsilon}",
            nets.epsilon
        )));
    }
    if leading.num != 1 || leading.den != nets.q {
        return Err(Error::InvalidInput(format!(
            "leading coefficient {}/{} is not 1/Q for the net's Q = {}",
            leading.num, leading.den, nets.q
        )));
    }
    if pattern.universe() != 0 && pattern.universe() != nets.q {
        return Err(Error::InvalidInput(format!(
            "pattern universe {} differs from Q = {}",
            pattern.universe(),
            nets.q
        )));
    }
    if let Some(&k) = pattern.indices().last() {
        if k >= nets.q {
            return Err(Error::InvalidInput(format!("index {k} not below Q = {}", nets.q)));
        }
    }

    let eval = PatternEvaluator::new(pattern.indices(), degree, Leading::Rational(leading))?;
    let lower = degree as usize - 1;
    let total = nets.total_cells;
    let chunk: u128 = 1 << 14;
    let chunks = total.div_ceil(chunk);
    let worst = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut b = vec![0u64; lower];
            let mut vals = vec![0u64; eval.len()];
            let mut worst = Worst::NONE;
            let start = c as u128 * chunk;
            let end = (start + chunk).min(total);
            for idx in start..end {
                net_point(&nets.sizes, idx, &mut b);
                eval.eval_into(&b, &mut vals);
                let gap = max_gap_in_place(&mut vals);
                worst = worst.merge(Worst {
                    gap,
                    index: idx as u64,
                });
            }
            worst
        })
        .reduce(|| Worst::NONE, Worst::merge);

    let mut worst_b = vec![0u64; lower];
    net_point(&nets.sizes, worst.index as u128, &mut worst_b);
    let worst_gap = length_to_f64(worst.gap);
    let threshold = nets.threshold();
    let slack = nets.transfer_slack;
    Ok(HittingReport {
        epsilon,
        worst_gap,
        worst_b: worst_b.into_iter().map(TorusPoint::from_bits).collect(),
        samples_tested: total as u64,
        mode: if nets.is_faithful() {
            HittingMode::FaithfulNet
        } else {
            HittingMode::CoarsenedNet {
                resolution_scale: nets.resolution_scale,
            }
        },
        threshold,
        transfer_slack: Some(slack),
        effective_epsilon: Some((worst_gap + 2.0 * slack) / 0.9),
        pass: worst_gap <= threshold,
    })
}

pub fn verify_hitting_sampled(
    pattern: &Pattern,
    leading: Leading,
    degree: u32,
    epsilon: f64,
    n_samples: u64,
    seed: u64,
) -> Result<HittingReport> {
    check_pattern(pattern, degree)?;
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let eval = PatternEvaluator::new(pattern.indices(), degree, leading)?;
    let lower = degree as usize - 1;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, b: &mut [u64]| {
        for slot in b.iter_mut() {
            *slot = rng.random::<u64>();
        }
    };
    let blocks: Vec<_> = seeds::blocks(n_samples).collect();
    let worst = blocks
        .par_iter()
        .map(|&(block, start, end)| {
            let mut rng = seeds::block_rng(seed, 0, block);
            let mut b = vec![0u64; lower];
            let mut vals = vec![0u64; eval.len()];
            let mut worst = Worst::NONE;
            for idx in start..end {
                draw(&mut rng, &mut b);
                eval.eval_into(&b, &mut vals);
                let gap = max_gap_in_place(&mut vals);
                worst = worst.merge(Worst { gap, index: idx });
            }
            worst
        })
        .reduce(|| Worst::NONE, Worst::merge);

    // Replay the worst sample's block to recover its coefficients.
    let block = worst.index / seeds::BLOCK;
    let mut rng = seeds::block_rng(seed, 0, block);
    let mut b = vec![0u64; lower];
    for _ in block * seeds::BLOCK..=worst.index {
        draw(&mut rng, &mut b);
    }
    let worst_gap = length_to_f64(worst.gap);
    Ok(HittingReport {
        epsilon,
        worst_gap,
        worst_b: b.into_iter().map(TorusPoint::from_bits).collect(),
        samples_tested: n_samples,
        mode: HittingMode::Sampled { seed },
        threshold: epsilon,
        transfer_slack: None,
        effective_epsilon: None,
        pass: worst_gap <= epsilon,
    })
}

/// Outcome of a calibration: the best pattern found and the smallest
/// epsilon it passes with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub pattern: Pattern,
    pub epsilon: f64,
    pub report: HittingReport,
    /// `(seed, smallest passing epsilon)` for every attempt, in order.
    pub attempts: Vec<(u64, f64)>,
}

/// Draws thinned patterns for seeds `seed, seed + 1, ...` and keeps the one
/// with the smallest sampled worst gap. The sampled check passes exactly
/// when `ε >= worst_gap`, so that gap is the calibrated epsilon. Stops early
/// once an attempt reaches `target` (if given).
pub fn calibrate_thinned(
    n: u64,
    q: u64,
    degree: u32,
    seed: u64,
    retries: u32,
    n_samples: u64,
    target: Option<f64>,
) -> Result<Calibration> {
    if retries == 0 {
        return Err(Error::InvalidInput("retry budget must be positive".into()));
    }
    let leading = Leading::Rational(Ratio::reciprocal(q)?);
    let mut best: Option<Calibration> = None;
    let mut attempts = Vec::new();
    for attempt in 0..retries as u64 {
        let s = seed.wrapping_add(attempt);
        let pattern = thin_pattern(n, q, s)?;
        let probe = verify_hitting_sampled(&pattern, leading, degree, 1.0, n_samples, s)?;
        let eps = probe.worst_gap;
        info!("thinning attempt {attempt}: seed {s}, sampled worst gap {eps:.6}");
        attempts.push((s, eps));
        if best.as_ref().is_none_or(|b| eps < b.epsilon) {
            let report = verify_hitting_sampled(&pattern, leading, degree, eps, n_samples, s)?;
            best = Some(Calibration {
                pattern,
                epsilon: eps,
                report,
                attempts: Vec::new(),
            });
        }
        if target.is_some_and(|t| eps <= t) {
            break;
        }
    }
    let mut best = best.expect("at least one attempt");
    best.attempts = attempts;
    Ok(best)
}

/// Smallest epsilon the net check can certify for `pattern` at a fixed cell
/// budget: runs the net at a trial epsilon and iterates
/// `ε ← (worst_gap + 2δ)/0.9` until the net passes, stops improving, or
/// `max_rounds` is hit. Returns the round with the smallest effective epsilon.
pub fn calibrate_net(
    pattern: &Pattern,
    q: u64,
    degree: u32,
    start_epsilon: f64,
    cells: u128,
    max_rounds: u32,
) -> Result<(NetSpec, HittingReport)> {
    let leading = Ratio::reciprocal(q)?;
    let mut eps = start_epsilon;
    let mut best: Option<(NetSpec, HittingReport)> = None;
    for round in 0..max_rounds.max(1) {
        if !(eps > 0.0 && eps < 1.0) {
            break;
        }
        let scale = scale_for_budget(degree, q, eps, cells);
        let nets = build_nets_with_budget(degree, q, eps, scale, cells)?;
        let report = verify_hitting_net(pattern, leading, degree, eps, &nets)?;
        let next = report.effective_epsilon.unwrap_or(eps);
        info!("net round {round}: ε = {eps:.6}, worst gap {:.6}, effective {next:.6}", report.worst_gap);
        let done = report.pass;
        let better = best
            .as_ref()
            .is_none_or(|(_, b)| next < b.effective_epsilon.unwrap_or(f64::INFINITY));
        if better {
            best = Some((nets, report));
        }
        if done || next <= eps {
            break;
        }
        eps = next;
    }
    best.ok_or_else(|| Error::InvalidInput(format!("start epsilon {start_epsilon} outside (0, 1)")))
}
