//! SVG pictures of planar annular sets.

use std::fmt::Write;

use anyhow::{ensure, Result};
use obstruct_core::annulus::{AnnulusSpec, Parity};
use serde::Serialize;

/// Points per quarter of a superellipse outline.
const QUARTER_STEPS: usize = 64;
const CANVAS: f64 = 600.0;

#[derive(Clone, Debug, Serialize)]
pub struct RenderSummary {
    pub p: u32,
    pub epsilon: f64,
    pub side: f64,
    /// Shells `m` with inner level `m − (1−ε)/2` below `(R/2)^p`, i.e.
    /// meeting the inscribed ball.
    pub inscribed_shells: u64,
    /// Shells meeting the square at all.
    pub drawn_shells: u64,
    pub rasterized: bool,
    pub pixels: Option<u32>,
}

fn superellipse(out: &mut String, rho: f64, p: u32, to_px: &dyn Fn(f64, f64) -> (f64, f64)) {
    let e = 2.0 / p as f64;
    let n = 4 * QUARTER_STEPS;
    for i in 0..n {
        let t = i as f64 / n as f64 * std::f64::consts::TAU;
        let (s, c) = t.sin_cos();
        let x = rho * c.signum() * c.abs().powf(e);
        let y = rho * s.signum() * s.abs().powf(e);
        let (px, py) = to_px(x, y);
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(out, "{cmd}{px:.3},{py:.3} ");
    }
    out.push_str("Z ");
}

/// Renders `E ∩ [−R/2, R/2]^2`.
///
/// Even `p` draws every shell as an exact superellipse ring; odd `p` is
/// rasterized on a `pixels × pixels` grid using set membership at cell
/// centres.
pub fn render_svg(spec: &AnnulusSpec, side: f64, pixels: u32) -> Result<(String, RenderSummary)> {
    ensure!(spec.d == 2, "rendering needs d = 2, got {}", spec.d);
    ensure!(side > 0.0 && side.is_finite(), "side {side} must be positive");
    ensure!(pixels >= 1, "need at least one pixel");
    let h = spec.half_width();
    let half = side / 2.0;
    let p = spec.p;
    let inscribed = half.powi(p as i32);
    let corner = 2.0 * inscribed;
    let inscribed_shells = (inscribed + h).ceil().max(0.0) as u64;
    let drawn_shells = (corner + h).ceil().max(0.0) as u64;

    let unit = CANVAS / side;
    let to_px = move |x: f64, y: f64| ((x + half) * unit, (half - y) * unit);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );
    let _ = writeln!(
        svg,
        "<title>p = {p}, epsilon = {}, side = {side}</title>",
        spec.epsilon
    );
    svg.push_str("<defs><clipPath id=\"square\"><rect x=\"0\" y=\"0\" width=\"600\" height=\"600\"/></clipPath></defs>\n");
    svg.push_str("<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\" stroke=\"black\"/>\n");
    svg.push_str("<g clip-path=\"url(#square)\" fill=\"#4a6fa5\" stroke=\"none\">\n");

    let rasterized = spec.parity == Parity::Odd;
    if !rasterized {
        for m in 0..drawn_shells {
            let outer = (m as f64 + h).powf(1.0 / p as f64);
            let mut d = String::new();
            superellipse(&mut d, outer, p, &to_px);
            let inner_level = m as f64 - h;
            if inner_level > 0.0 {
                superellipse(&mut d, inner_level.powf(1.0 / p as f64), p, &to_px);
            }
            let _ = writeln!(svg, "<path fill-rule=\"evenodd\" d=\"{}\"/>", d.trim_end());
        }
    } else {
        let cell = side / pixels as f64;
        let px = CANVAS / pixels as f64;
        for row in 0..pixels {
            let y = half - (row as f64 + 0.5) * cell;
            let mut run: Option<u32> = None;
            for col in 0..=pixels {
                let inside = col < pixels && {
                    let x = -half + (col as f64 + 0.5) * cell;
                    spec.member(&[x, y])
                };
                match (inside, run) {
                    (true, None) => run = Some(col),
                    (false, Some(start)) => {
                        let _ = writeln!(
                            svg,
                            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{px:.3}\"/>",
                            start as f64 * px,
                            row as f64 * px,
                            (col - start) as f64 * px
                        );
                        run = None;
                    }
                    _ => {}
                }
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");

    Ok((
        svg,
        RenderSummary {
            p,
            epsilon: spec.epsilon,
            side,
            inscribed_shells,
            drawn_shells,
            rasterized,
            pixels: rasterized.then_some(pixels),
        },
    ))
}
