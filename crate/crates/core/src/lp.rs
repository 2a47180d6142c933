//! `ℓ^p` norms, Clarkson's inequalities and recovery of collinear copies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for declaring a Clarkson equality.
pub const EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpVector {
    pub coords: Vec<f64>,
    pub p: f64,
}

impl LpVector {
    pub fn new(coords: Vec<f64>, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(LpVector { coords, p })
    }

    pub fn norm(&self) -> f64 {
        lp_norm(&self.coords, self.p)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent {p} must lie in (1, ∞)")));
    }
    Ok(())
}

/// `(Σ |x_i|^p)^{1/p}`, computed as `m (Σ |x_i/m|^p)^{1/p}` with
/// `m = max |x_i|` so that large or tiny coordinates neither overflow nor
/// underflow. Scaling by a power of two is exact.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    if p == 2.0 {
        let s: f64 = x.iter().map(|c| (c / m) * (c / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = x.iter().map(|c| (c.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// `Σ |x_i|^p`.
pub fn lp_power(x: &[f64], p: f64) -> f64 {
    x.iter().map(|c| c.abs().powf(p)).sum()
}

pub fn distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    lp_norm(&diff, p)
}

/// `‖u‖ + ‖w‖ − ‖u + w‖ ≥ 0`, zero exactly for parallel, same-direction
/// vectors when `1 < p < ∞`.
pub fn triangle_defect(u: &[f64], w: &[f64], p: f64) -> f64 {
    let sum: Vec<f64> = u.iter().zip(w).map(|(a, b)| a + b).collect();
    lp_norm(u, p) + lp_norm(w, p) - lp_norm(&sum, p)
}

pub fn disjoint_supports(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| *a == 0.0 || *b == 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClarksonReport {
    /// `‖x+y‖_p^p + ‖x−y‖_p^p`.
    pub lhs: f64,
    /// `2 (‖x‖_p^p + ‖y‖_p^p)`.
    pub rhs: f64,
    /// `lhs ≥ rhs` for `p > 2`, `lhs ≤ rhs` for `p < 2`, up to the
    /// equality tolerance.
    pub direction_holds: bool,
    /// `|lhs − rhs| ≤ 1e-12 (1 + |rhs|)`.
    pub equality: bool,
    pub disjoint_supports: bool,
}

pub fn clarkson_check(x: &[f64], y: &[f64], p: f64) -> Result<ClarksonReport> {
    check_exponent(p)?;
    if p == 2.0 {
        return Err(Error::InvalidInput("p = 2 is the parallelogram law, not a Clarkson case".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("lengths {} and {} differ", x.len(), y.len())));
    }
    let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let lhs = lp_power(&plus, p) + lp_power(&minus, p);
    let rhs = 2.0 * (lp_power(x, p) + lp_power(y, p));
    let tol = EQUALITY_TOLERANCE * (1.0 + rhs.abs());
    let direction_holds = if p > 2.0 { lhs >= rhs - tol } else { lhs <= rhs + tol };
    Ok(ClarksonReport {
        lhs,
        rhs,
        direction_holds,
        equality: (lhs - rhs).abs() <= tol,
        disjoint_supports: disjoint_supports(x, y),
    })
}

/// A scaled collinear copy `{x + r t v : t ∈ P}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCopy {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub r: f64,
    pub params: Vec<f64>,
    /// `card P = 1`: the direction is not determined and `v = e_1` by
    /// convention.
    pub degenerate: bool,
    /// `max_t ‖y_t − (x + r t v)‖_p`.
    pub reconstruction_error: f64,
}

impl LineCopy {
    pub fn point(&self, t: f64) -> Vec<f64> {
        self.x.iter().zip(&self.v).map(|(x, v)| x + self.r * t * v).collect()
    }
}

/// Recovers the line through points `y_t` whose pairwise distances are
/// `r |s − t|`, anchoring at `a = min P` and `b = max P`:
/// `v = (y_b − y_a)/(r (b − a))`, `x = y_a − r a v`.
pub fn recover_line(points: &[(f64, Vec<f64>)], p: f64, r: f64) -> Result<LineCopy> {
    check_exponent(p)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("scale {r} must be positive")));
    }
    let d = points.first().ok_or(Error::EmptyPointSet)?.1.len();
    if d == 0 || points.iter().any(|(_, y)| y.len() != d) {
        return Err(Error::InvalidInput("points must share a positive dimension".into()));
    }
    if points.iter().any(|(t, y)| !t.is_finite() || y.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidInput("non-finite input".into()));
    }

    // worst relative violation of the distance precondition
    let mut worst: Option<(f64, usize, usize, f64, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (s, ys) = &points[i];
            let (t, yt) = &points[j];
            let expected = r * (s - t).abs();
            let found = distance(ys, yt, p);
            let excess = (found - expected).abs() / expected.max(1.0);
            if excess > 1e-9 && worst.is_none_or(|w| excess > w.0) {
                worst = Some((excess, i, j, expected, found));
            }
        }
    }
    if let Some((_, i, j, expected, found)) = worst {
        return Err(Error::NotCollinearCopy {
            s: points[i].0,
            t: points[j].0,
            expected,
            found,
        });
    }

    let (ia, ib) = points.iter().enumerate().fold((0, 0), |(lo, hi), (i, (t, _))| {
        (
            if *t < points[lo].0 { i } else { lo },
            if *t > points[hi].0 { i } else { hi },
        )
    });
    let (a, ya) = &points[ia];
    let (b, yb) = &points[ib];
    let params: Vec<f64> = points.iter().map(|(t, _)| *t).collect();
    let (v, degenerate) = if b > a {
        let v: Vec<f64> = ya.iter().zip(yb).map(|(u, w)| (w - u) / (r * (b - a))).collect();
        (v, false)
    } else {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        (e1, true)
    };
    let x: Vec<f64> = ya.iter().zip(&v).map(|(y, v)| y - r * a * v).collect();
    let mut copy = LineCopy {
        x,
        v,
        r,
        params,
        degenerate,
        reconstruction_error: 0.0,
    };
    let err = points
        .iter()
        .map(|(t, y)| distance(y, &copy.point(*t), p))
        .fold(0.0, f64::max);
    copy.reconstruction_error = err;
    let span = r * (b - a);
    if err > 1e-8 * span.max(1.0) {
        return Err(Error::Invariant(format!(
            "reconstruction error {err:e} exceeds 1e-8 r (b − a) = {:e}",
            1e-8 * span
        )));
    }
    Ok(copy)
}
