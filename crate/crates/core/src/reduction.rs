//! From copies of a dilated pattern to polynomial sequences mod 1, and the
//! end-to-end check that no sampled copy lies inside the annular set.
//!
//! Expanding `F_σ(x + r k u) = Σ_i σ_i (x_i + r k u_i)^p` by the binomial
//! theorem gives `Σ_l B_l k^l` with `B_l = C(p,l) r^l Σ_i σ_i x_i^{p−l} u_i^l`.
//! Choosing `σ_i = sign(u_i)` makes the leading coefficient `r^p ‖u‖_p^p`,
//! which is `A + j` for `r = r_j`. Modulo 1 the integer part `j k^p` drops
//! out, leaving `x_k(B) + B_0` with leading coefficient `A`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{sample_placement, AnnulusSpec, Parity, Placement};
use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::poly::{Leading, PolySeq, Ratio};
use crate::precise::DoubleDouble;
use crate::seeds;
use crate::torus::{max_circular_gap, TorusPoint, TWO_POW_64};

/// `C(n, k)` as `f64`; exact for the small arguments used here.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    /// Sign mask of the form used (bit `i` set means `σ_i = −1`).
    pub sigma: u32,
    /// `B_0, ..., B_{p−1}` as reals.
    pub coefficients: Vec<f64>,
    pub leading_computed: f64,
    /// `A + j`.
    pub leading_expected: f64,
    /// `|leading_computed − leading_expected|`, in double-double.
    pub residual: f64,
    /// `A k^p + B_{p−1} k^{p−1} + ... + B_1 k` with `B_l mod 1` rounded to
    /// the `2^-64` grid, so values carry an error below `Σ_l k^l 2^-65`.
    pub poly: PolySeq,
    pub constant: TorusPoint,
}

impl Reduction {
    /// `F_σ(x + r k u) mod 1` predicted by the reduction.
    pub fn value(&self, k: i64) -> TorusPoint {
        self.poly.eval(k) + self.constant
    }

    /// Real-valued `Σ_l B_l k^l + (A + j) k^p`.
    pub fn real_value(&self, k: f64) -> f64 {
        let mut acc = self.leading_computed;
        for b in self.coefficients.iter().rev() {
            acc = acc * k + b;
        }
        acc
    }
}

/// Sign rule: `σ_i = 1` if `u_i ≥ 0`, else `−1`. Even `p` uses one form.
pub fn sign_mask(spec: &AnnulusSpec, v: &[f64]) -> u32 {
    match spec.parity {
        Parity::Even => 0,
        Parity::Odd => v
            .iter()
            .enumerate()
            .filter(|(_, &t)| t < 0.0)
            .fold(0, |m, (i, _)| m | 1 << i),
    }
}

pub fn reduce_to_polynomial(spec: &AnnulusSpec, placement: &Placement, a: Ratio) -> Result<Reduction> {
    let p = spec.p;
    if placement.p != p || placement.d() != spec.d {
        return Err(Error::InvalidInput(format!(
            "placement is for d = {}, p = {}; set has d = {}, p = {}",
            placement.d(),
            placement.p,
            spec.d,
            p
        )));
    }
    let norm = crate::annulus::lp_power_sum(&placement.v, p).powf(1.0 / p as f64);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("direction has ℓ^p norm {norm}, expected 1")));
    }
    let expected = Ratio::new(
        placement.shell.num - placement.j * placement.shell.den as i64,
        placement.shell.den,
    )?;
    if expected != a {
        return Err(Error::InvalidInput(format!(
            "placement built for A = {}/{}, reduction asked for {}/{}",
            expected.num, expected.den, a.num, a.den
        )));
    }
    let sigma = sign_mask(spec, &placement.v);
    let s = placement.scale_precise();
    let sgn = |i: usize| if sigma >> i & 1 == 1 { -1.0 } else { 1.0 };

    // B_l in double-double
    let mut b = Vec::with_capacity(p as usize + 1);
    let mut s_pow = DoubleDouble::ONE;
    for l in 0..=p {
        let mut inner = DoubleDouble::ZERO;
        for (i, (&x, &v)) in placement.x.iter().zip(&placement.v).enumerate() {
            let term = DoubleDouble::from_f64(x).powi(p - l) * DoubleDouble::from_f64(v).powi(l);
            inner = inner + term.mul_f64(sgn(i));
        }
        b.push((inner * s_pow).mul_f64(binomial(p, l)));
        s_pow = s_pow * s;
    }
    let lead = b[p as usize];
    let shell = placement.shell_precise();
    let residual = (lead - shell).abs().to_f64();
    if residual > 1e-20 * shell.to_f64().max(1.0) {
        return Err(Error::Invariant(format!(
            "leading coefficient {} differs from A + j = {} by {residual:e}",
            lead.to_f64(),
            shell.to_f64()
        )));
    }
    let lower: Vec<TorusPoint> = b[1..p as usize].iter().map(|c| c.to_torus()).collect();
    let poly = PolySeq::new(p, Leading::Rational(a), lower)?;
    Ok(Reduction {
        sigma,
        coefficients: b[..p as usize].iter().map(|c| c.to_f64()).collect(),
        leading_computed: lead.to_f64(),
        leading_expected: a.to_f64() + placement.j as f64,
        residual,
        poly,
        constant: b[0].to_torus(),
    })
}

/// A placement with every copy point inside the set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub placement: Placement,
    pub worst_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoCopyReport {
    pub epsilon: f64,
    pub j_list: Vec<i64>,
    pub placements: u64,
    /// Copies found entirely inside the set.
    pub violations: u64,
    /// Up to ten violating placements.
    pub examples: Vec<Violation>,
    /// Placements whose reduced values have max gap `≤ ε`, which forces an
    /// escaping point.
    pub gap_certified: u64,
    /// Placements where direct double-double membership found an escaping
    /// point.
    pub direct_confirmed: u64,
    /// Placements where the reduced values and direct membership disagree
    /// on whether a point escapes.
    pub direct_mismatches: u64,
    /// `min` over placements of `max_k dist(F(y_k), Z) − (1−ε)/2`; positive
    /// means every copy has a point strictly outside.
    pub worst_margin: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementSampler {
    pub seed: u64,
    pub count: u64,
}

/// `dist(x, Z)` for a torus point, exactly rounded to `f64`.
fn torus_dist(t: TorusPoint) -> f64 {
    let b = t.bits();
    b.min(b.wrapping_neg()) as f64 / TWO_POW_64
}

struct Outcome {
    inside: bool,
    certified: bool,
    direct_escape: bool,
    mismatch: bool,
    margin: f64,
    gap: f64,
}

fn examine(spec: &AnnulusSpec, pattern: &Pattern, placement: &Placement, a: Ratio) -> Result<Outcome> {
    let red = reduce_to_polynomial(spec, placement, a)?;
    let h = spec.half_width();
    let values: Vec<TorusPoint> = pattern.indices().iter().map(|&k| red.value(k as i64)).collect();
    let gap = max_circular_gap(&values)?;
    let reduced_escape = values.iter().any(|&t| torus_dist(t) >= h);

    let scale = placement.scale_precise();
    let mut margin = f64::NEG_INFINITY;
    let mut direct_escape = false;
    for &k in pattern.indices() {
        let y = placement.point_precise(scale, k as i64);
        if !spec.member_precise(&y) {
            direct_escape = true;
        }
        let dist = spec.form_precise(red.sigma, &y).dist_to_integer();
        margin = margin.max(dist - h);
    }
    Ok(Outcome {
        inside: !direct_escape,
        certified: gap <= spec.epsilon,
        direct_escape,
        // odd p: the reduced form is one of the 2^d defining forms, so only
        // a reduced escape without a direct one is inconsistent
        mismatch: match spec.parity {
            Parity::Even => reduced_escape != direct_escape,
            Parity::Odd => reduced_escape && !direct_escape,
        },
        margin,
        gap,
    })
}

/// Samples placements at each scale `r_j` and checks that every copy of
/// the dilated pattern leaves the set.
///
/// `verified_epsilon` is the epsilon the pattern was verified for; the set
/// must not be thinner than that.
pub fn no_copy_check(
    spec: &AnnulusSpec,
    pattern: &Pattern,
    a: Ratio,
    j_list: &[i64],
    sampler: PlacementSampler,
    verified_epsilon: Option<f64>,
) -> Result<NoCopyReport> {
    if let Some(e) = verified_epsilon {
        if spec.epsilon + 1e-12 < e {
            return Err(Error::InvalidInput(format!(
                "set epsilon {} is below the pattern's verified epsilon {e}",
                spec.epsilon
            )));
        }
    }
    if j_list.is_empty() {
        return Err(Error::InvalidInput("empty scale list".into()));
    }
    if pattern.n() == 0 {
        return Err(Error::InvalidInput("empty pattern".into()));
    }
    for &j in j_list {
        if a.to_f64() + j as f64 <= 0.0 {
            return Err(Error::ParameterRange(format!("A + j must be positive, j = {j}")));
        }
    }

    let mut report = NoCopyReport {
        epsilon: spec.epsilon,
        j_list: j_list.to_vec(),
        placements: 0,
        violations: 0,
        examples: Vec::new(),
        gap_certified: 0,
        direct_confirmed: 0,
        direct_mismatches: 0,
        worst_margin: f64::INFINITY,
        pass: false,
    };
    for (stream, &j) in j_list.iter().enumerate() {
        let blocks: Vec<_> = seeds::blocks(sampler.count).collect();
        let outcomes: Vec<Vec<(Placement, Outcome)>> = blocks
            .par_iter()
            .map(|&(b, start, end)| {
                let mut rng = seeds::block_rng(sampler.seed, stream as u64, b);
                (start..end)
                    .map(|_| {
                        let pl = sample_placement(&mut rng, spec, a, j)?;
                        let out = examine(spec, pattern, &pl, a)?;
                        Ok((pl, out))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (pl, out) in outcomes.into_iter().flatten() {
            report.placements += 1;
            report.gap_certified += out.certified as u64;
            report.direct_confirmed += out.direct_escape as u64;
            report.direct_mismatches += out.mismatch as u64;
            report.worst_margin = report.worst_margin.min(out.margin);
            if out.inside {
                report.violations += 1;
                if report.examples.len() < 10 {
                    report.examples.push(Violation {
                        placement: pl,
                        worst_gap: out.gap,
                    });
                }
            }
        }
    }
    report.pass = report.violations == 0 && report.direct_mismatches == 0;
    Ok(report)
}
