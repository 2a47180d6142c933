//! Interval discrepancy of point sets on the torus.
//!
//! `D_N = sup_I |#{k : x_k ∈ I}/N − |I||` over all arcs `I`. The supremum of
//! the excess is attained by a closed arc whose endpoints are sample points;
//! the supremum of the deficit is approached by open arcs between two sample
//! points. [`exact_discrepancy`] enumerates both families, which is `O(D^2)`
//! in the number `D` of distinct positions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{length_to_f64, Closure, TorusInterval, TorusPoint, FULL_TURN};
use crate::weyl::point_sum;

/// Default cap on `N` for the quadratic exact algorithm.
pub const DEFAULT_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// The witness interval itself realizes the supremum.
    Attained,
    /// The supremum is a limit of intervals shrinking to the witness.
    Limit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscrepancyMethod {
    Exact,
    /// Lower estimate over arcs with endpoints on a uniform grid.
    Grid { resolution: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub n_points: usize,
    pub exact_discrepancy: f64,
    pub witness_interval: TorusInterval,
    pub witness_kind: WitnessKind,
    pub method: DiscrepancyMethod,
    pub et_bound: Option<f64>,
    pub et_cutoff: Option<u64>,
}

impl DiscrepancyReport {
    /// Fills in the Erdős–Turán bound for cutoff `m`.
    pub fn with_erdos_turan(mut self, points: &[TorusPoint], m: u64) -> Result<Self> {
        self.et_bound = Some(erdos_turan_bound(points, m)?);
        self.et_cutoff = Some(m);
        Ok(self)
    }
}

struct Best {
    value: f64,
    interval: TorusInterval,
    kind: WitnessKind,
}

impl Best {
    fn offer(&mut self, value: f64, interval: TorusInterval, kind: WitnessKind) {
        if value > self.value {
            *self = Best {
                value,
                interval,
                kind,
            };
        }
    }
}

/// Distinct sorted positions with multiplicities.
fn positions(points: &[TorusPoint]) -> (Vec<u64>, Vec<usize>) {
    let mut bits: Vec<u64> = points.iter().map(|p| p.bits()).collect();
    bits.sort_unstable();
    let mut pos = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for b in bits {
        if pos.last() == Some(&b) {
            *mult.last_mut().unwrap() += 1;
        } else {
            pos.push(b);
            mult.push(1);
        }
    }
    (pos, mult)
}

pub fn exact_discrepancy(points: &[TorusPoint]) -> Result<DiscrepancyReport> {
    exact_discrepancy_capped(points, DEFAULT_CAP)
}

pub fn exact_discrepancy_capped(points: &[TorusPoint], cap: usize) -> Result<DiscrepancyReport> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.len() > cap {
        return Err(Error::OverCap {
            n: points.len(),
            cap,
        });
    }
    let n = points.len() as f64;
    let (pos, mult) = positions(points);
    let d = pos.len();

    // Each start position is scanned independently; the reduction below
    // keeps the first maximum in start order, so the result is independent
    // of scheduling.
    let per_start: Vec<Best> = (0..d)
        .into_par_iter()
        .map(|i| {
            let start = TorusPoint::from_bits(pos[i]);
            let mut best = Best {
                value: mult[i] as f64 / n,
                interval: TorusInterval::from_bits(start, 0, Closure::Closed),
                kind: WitnessKind::Attained,
            };
            let mut closed = mult[i];
            for t in 1..d {
                let j = (i + t) % d;
                closed += mult[j];
                let len = start.arc_to(TorusPoint::from_bits(pos[j])) as u128;
                let len_f = length_to_f64(len);
                best.offer(
                    closed as f64 / n - len_f,
                    TorusInterval::from_bits(start, len, Closure::Closed),
                    WitnessKind::Attained,
                );
                let open = closed - mult[i] - mult[j];
                best.offer(
                    len_f - open as f64 / n,
                    TorusInterval::from_bits(start, len, Closure::HalfOpen),
                    WitnessKind::Limit,
                );
            }
            best
        })
        .collect();

    let best = per_start
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("nonempty");
    Ok(DiscrepancyReport {
        n_points: points.len(),
        exact_discrepancy: best.value,
        witness_interval: best.interval,
        witness_kind: best.kind,
        method: DiscrepancyMethod::Exact,
        et_bound: None,
        et_cutoff: None,
    })
}

/// Lower estimate of the discrepancy over half-open arcs `[a/G, b/G)` with
/// grid endpoints, for point sets above the exact cap. Runs in
/// `O(N + G^2)`; the estimate is within `2/G` of the true value.
pub fn grid_discrepancy(points: &[TorusPoint], resolution: u64) -> Result<DiscrepancyReport> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be positive".into()));
    }
    let g = resolution as usize;
    let mut cell = vec![0usize; g];
    for p in points {
        let c = ((p.bits() as u128 * g as u128) >> 64) as usize;
        cell[c] += 1;
    }
    // Grid cell c covers [c/G, (c+1)/G); cells hold whole arcs exactly when
    // endpoints sit on the grid.
    let mut prefix = vec![0usize; 2 * g + 1];
    for c in 0..2 * g {
        prefix[c + 1] = prefix[c] + cell[c % g];
    }
    let n = points.len() as f64;
    let mut best = Best {
        value: f64::NEG_INFINITY,
        interval: TorusInterval::from_bits(TorusPoint::ZERO, FULL_TURN, Closure::HalfOpen),
        kind: WitnessKind::Attained,
    };
    for a in 0..g {
        for len in 1..=g {
            let count = prefix[a + len] - prefix[a];
            let l = len as f64 / g as f64;
            let value = (count as f64 / n - l).abs();
            let start = TorusPoint::from_ratio(a as i128, resolution);
            let bits = (len as u128 * FULL_TURN) / g as u128;
            best.offer(
                value,
                TorusInterval::from_bits(start, bits, Closure::HalfOpen),
                WitnessKind::Attained,
            );
        }
    }
    Ok(DiscrepancyReport {
        n_points: points.len(),
        exact_discrepancy: best.value,
        witness_interval: best.interval,
        witness_kind: best.kind,
        method: DiscrepancyMethod::Grid { resolution },
        et_bound: None,
        et_cutoff: None,
    })
}

/// `1/(M+1) + 3 Σ_{m=1}^{M} (1/m) |(1/N) Σ_k e(m x_k)|`.
///
/// This explicit-constant form of the Erdős–Turán inequality bounds the
/// interval discrepancy from above for every `M >= 1`.
pub fn erdos_turan_bound(points: &[TorusPoint], cutoff: u64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if cutoff == 0 {
        return Err(Error::InvalidInput("Erdős–Turán cutoff must be positive".into()));
    }
    let n = points.len() as f64;
    let terms: Vec<f64> = (1..=cutoff)
        .into_par_iter()
        .map(|m| point_sum(points, m).norm() / n / m as f64)
        .collect();
    let sum: f64 = terms.iter().sum();
    Ok(1.0 / (cutoff as f64 + 1.0) + 3.0 * sum)
}
