//! Finite index patterns `P ⊂ Z` and their constructions.
//!
//! Two constructions are provided:
//!
//! - [`thin_pattern`]: a uniformly random `n`-subset of `{0, ..., Q-1}`, to be
//!   paired with the leading coefficient `A = 1/Q` for a prime `Q`.
//! - [`elementary_pattern`]: the progression `{0, ..., n-1}` with
//!   `A = 1/m^2`, `m = ⌊√n⌋`. For quadratic sequences it hits every arc of
//!   length `5/m <= 10/√n`, and [`find_hitter`] produces the hitting index
//!   constructively.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Leading, PolySeq, Ratio};
use crate::torus::{TorusInterval, TorusPoint, FULL_TURN};

/// Above this universe size the thinning switches from a Fisher–Yates
/// prefix to Floyd's subset sampling.
pub const FISHER_YATES_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Thinned { seed: u64 },
    Elementary,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    indices: Vec<u64>,
    /// `Q`, with `0` meaning unconstrained.
    universe: u64,
    provenance: Provenance,
}

impl Pattern {
    /// Sorts and validates the indices.
    pub fn new(mut indices: Vec<u64>, universe: u64, provenance: Provenance) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("pattern must be nonempty".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("pattern indices must be distinct".into()));
        }
        if universe > 0 && *indices.last().unwrap() >= universe {
            return Err(Error::InvalidInput(format!(
                "index {} outside universe 0..{universe}",
                indices.last().unwrap()
            )));
        }
        Ok(Pattern {
            indices,
            universe,
            provenance,
        })
    }

    pub fn explicit(indices: Vec<u64>, universe: u64) -> Result<Self> {
        Pattern::new(indices, universe, Provenance::Explicit)
    }

    /// `{0, 1, ..., len-1}` inside universe `universe`.
    pub fn range(len: u64, universe: u64, provenance: Provenance) -> Result<Self> {
        Pattern::new((0..len).collect(), universe, provenance)
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn contains(&self, k: u64) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// `{x_k : k ∈ P}` for the given sequence.
    pub fn values(&self, f: &PolySeq) -> Vec<TorusPoint> {
        self.indices.iter().map(|&k| f.eval(k as i64)).collect()
    }
}

/// A uniformly random `n`-subset of `{0, ..., Q-1}`, reproducible from `seed`.
///
/// Small universes use the first `n` steps of a Fisher–Yates shuffle; large
/// ones use Floyd's algorithm, which needs only `O(n)` memory. Both draw from
/// `ChaCha8Rng::seed_from_u64(seed)`.
pub fn thin_pattern(n: u64, universe: u64, seed: u64) -> Result<Pattern> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot thin to an empty pattern".into()));
    }
    if n > universe {
        return Err(Error::InvalidInput(format!(
            "cannot choose {n} indices from a universe of {universe}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = if universe <= FISHER_YATES_LIMIT {
        fisher_yates_prefix(n, universe, &mut rng)
    } else {
        floyd_subset(n, universe, &mut rng)
    };
    Pattern::new(indices, universe, Provenance::Thinned { seed })
}

fn fisher_yates_prefix<R: Rng>(n: u64, universe: u64, rng: &mut R) -> Vec<u64> {
    let mut all: Vec<u64> = (0..universe).collect();
    for i in 0..n as usize {
        let j = rng.random_range(i..universe as usize);
        all.swap(i, j);
    }
    all.truncate(n as usize);
    all
}

fn floyd_subset<R: Rng>(n: u64, universe: u64, rng: &mut R) -> Vec<u64> {
    let mut chosen = BTreeSet::new();
    for j in universe - n..universe {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}

/// `m = ⌊√n⌋`.
pub fn isqrt(n: u64) -> u64 {
    let n = n as u128;
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r as u64
}

/// The progression `P = {0, ..., n-1}` with `A = 1/m^2`, `m = ⌊√n⌋`.
pub fn elementary_pattern(n: u64) -> Result<(Pattern, Ratio)> {
    if n < 4 {
        return Err(Error::ParameterRange(format!("n = {n} must be at least 4")));
    }
    let m = isqrt(n);
    let pattern = Pattern::range(n, 0, Provenance::Elementary)?;
    Ok((pattern, Ratio::reciprocal(m * m)?))
}

/// The guaranteed hitting length `10 n^{-1/2}` of the elementary pattern.
pub fn elementary_epsilon(n: u64) -> f64 {
    10.0 / (n as f64).sqrt()
}

/// Finds `k ∈ {0, ..., n-1}` with `(k^2/m^2 + B k) mod 1` in `target`.
///
/// Follows the constructive argument: pick the smallest block index `i` with
/// `θ = (B + 2i/m) mod 1 ∈ [1/m, 3/m)`; along the block `k = i m + l` the
/// values advance by `θ + (2l+1)/m^2 < 5/m` per step and wind at least once
/// around the circle, so some `l` lands in any arc of length `>= 5/m`.
/// The returned `k` is always checked by direct evaluation.
pub fn find_hitter(n: u64, b: TorusPoint, target: &TorusInterval) -> Result<u64> {
    if n < 16 {
        return Err(Error::ParameterRange(format!("n = {n} must be at least 16")));
    }
    let len = target.length();
    if len < 1.0 && len * len * (n as f64) < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "target length {len} is below 10/sqrt(n) = {}",
            elementary_epsilon(n)
        )));
    }
    let m = isqrt(n);
    let seq = PolySeq::new(2, Leading::Rational(Ratio::reciprocal(m * m)?), vec![b])?;

    // (B + 2i/m) mod 1 in units of 1/(m 2^64).
    let modulus = m as u128 * FULL_TURN;
    let block = (0..m)
        .find(|&i| {
            let theta = (b.bits() as u128 * m as u128 + 2 * i as u128 * FULL_TURN) % modulus;
            (FULL_TURN..3 * FULL_TURN).contains(&theta)
        })
        .ok_or_else(|| {
            Error::Invariant(format!("no block index i with (B + 2i/m) mod 1 in [1/m, 3/m), m = {m}"))
        })?;

    (0..m)
        .map(|l| block * m + l)
        .find(|&k| target.contains(seq.eval(k as i64)))
        .ok_or_else(|| {
            Error::Invariant(format!(
                "block {block} misses the target arc of length {len} (m = {m})"
            ))
        })
}
