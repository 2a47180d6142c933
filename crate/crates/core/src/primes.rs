//! Deterministic primality for `u64` and Bertrand-interval prime selection.

use crate::error::{Error, Result};
use crate::poly::{mul_mod, pow_mod};

/// The first twelve primes are a deterministic Miller–Rabin base set for
/// every `n < 3.3 * 10^24`, which covers all of `u64`.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u64) -> Option<u64> {
    let mut c = n.checked_add(1)?;
    loop {
        if is_prime(c) {
            return Some(c);
        }
        c = c.checked_add(1)?;
    }
}

/// `n^(2^p)`, if it stays below `2^62`.
pub fn bertrand_base(n: u64, p: u32) -> Result<u64> {
    let range_err = || Error::ParameterRange(format!("n^(2^p) for n = {n}, p = {p} exceeds 2^62"));
    if p >= 6 && n >= 2 {
        return Err(range_err());
    }
    let exp = 1u32 << p;
    match n.checked_pow(exp) {
        Some(v) if v < 1 << 62 => Ok(v),
        _ => Err(range_err()),
    }
}

/// Smallest prime `Q` with `n^(2^p) < Q`; Bertrand's postulate places it
/// below `2 n^(2^p)`.
pub fn bertrand_prime(n: u64, p: u32) -> Result<u64> {
    if n < 2 {
        return Err(Error::ParameterRange(format!("n = {n} must be at least 2")));
    }
    if p < 1 {
        return Err(Error::ParameterRange("p must be at least 1".into()));
    }
    let base = bertrand_base(n, p)?;
    let q = next_prime(base).ok_or_else(|| Error::Invariant("no prime above base".into()))?;
    if q >= 2 * base {
        return Err(Error::Invariant(format!(
            "no prime in ({base}, {})",
            2 * base
        )));
    }
    Ok(q)
}
