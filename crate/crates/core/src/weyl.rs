//! Exponential sums `Σ e(m f(k))` with `e(x) = exp(2πix)`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::poly::PolySeq;
use crate::torus::{TorusPoint, TWO_POW_64};

/// `e(x)` for a torus point.
///
/// The phase is taken from the centered representative, so `e(-x)` is the
/// exact complex conjugate of `e(x)`.
pub fn unit_phase(x: TorusPoint) -> Complex64 {
    let c = x.bits() as i64;
    match c {
        0 => Complex64::new(1.0, 0.0),
        i64::MIN => Complex64::new(-1.0, 0.0),
        _ => {
            let theta = c as f64 * (TAU / TWO_POW_64);
            Complex64::new(theta.cos(), theta.sin())
        }
    }
}

/// `Σ_{k=0}^{N-1} e(m f(k))`, with `m f(k)` reduced mod 1 exactly before
/// exponentiation.
pub fn weyl_sum(f: &PolySeq, n_terms: u64, multiplier: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n_terms {
        acc += unit_phase(f.eval_scaled(k as i64, multiplier));
    }
    acc
}

/// `Σ_k e(m x_k)` over an explicit point list.
pub fn point_sum(points: &[TorusPoint], multiplier: u64) -> Complex64 {
    points
        .iter()
        .map(|p| unit_phase(p.mul_int(multiplier)))
        .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}
