//! Pointwise residual of `-Δu + ∇p + u·∇u - f` by central differences in
//! Cartesian coordinates.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;

/// Vector field sampled at Cartesian `(x, y)`.
pub type Sampler<'a> = dyn Fn(f64, f64) -> Result<[f64; 2]> + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub h: f64,
    pub max_residual: f64,
    /// Polar position of the largest residual.
    pub argmax: Option<(f64, f64)>,
    pub evaluated: usize,
    /// Points with `r - 1 < 2h`, whose stencil would leave the domain.
    pub skipped: Vec<(f64, f64)>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut out, mut scale) = (0.0, 1.0 / base as f64);
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    out
}

/// Halton points (bases 2 and 3) in `[r_lo, r_hi] × [0, 2π)`, as `(r, θ)`.
pub fn halton_points(count: usize, r_lo: f64, r_hi: f64) -> Vec<(f64, f64)> {
    (1..=count as u64)
        .map(|i| (r_lo + (r_hi - r_lo) * radical_inverse(i, 2), 2.0 * PI * radical_inverse(i, 3)))
        .collect()
}

/// The default sample set on `[1.5, 50] × [0, 2π)`.
pub fn default_points() -> Vec<(f64, f64)> {
    halton_points(64, 1.5, 50.0)
}

/// Maximum Euclidean norm of the residual over `points` (polar), with
/// stencil spacing `h`.
pub fn ns_residual(
    velocity: &Sampler,
    pressure_gradient: &Sampler,
    forcing: &Sampler,
    h: f64,
    points: &[(f64, f64)],
) -> Result<ResidualReport> {
    let mut report = ResidualReport { h, max_residual: 0.0, argmax: None, evaluated: 0, skipped: Vec::new() };
    for &(r, theta) in points {
        if r - 1.0 < 2.0 * h {
            report.skipped.push((r, theta));
            continue;
        }
        let (x, y) = (r * theta.cos(), r * theta.sin());
        let c = velocity(x, y)?;
        let e = velocity(x + h, y)?;
        let w = velocity(x - h, y)?;
        let n = velocity(x, y + h)?;
        let s = velocity(x, y - h)?;
        let gp = pressure_gradient(x, y)?;
        let f = forcing(x, y)?;
        let mut res = [0.0; 2];
        for k in 0..2 {
            let lap = (e[k] + w[k] + n[k] + s[k] - 4.0 * c[k]) / (h * h);
            let dx = (e[k] - w[k]) / (2.0 * h);
            let dy = (n[k] - s[k]) / (2.0 * h);
            res[k] = -lap + gp[k] + c[0] * dx + c[1] * dy - f[k];
        }
        let norm = res[0].hypot(res[1]);
        report.evaluated += 1;
        if report.argmax.is_none() || norm > report.max_residual {
            report.max_residual = norm;
            report.argmax = Some((r, theta));
        }
    }
    Ok(report)
}
