//! Finite-difference solution of the mode-`n` vorticity equation
//!
//! ```text
//!   -ω'' - (1+γ) ω'/r + (n² + iαn) ω/r² = (rot f)_n
//! ```
//!
//! written in `t = ln r` as `-ω_tt - γ ω_t + (n² + iαn) ω = r² rot f` and
//! discretized with central differences. `ω(1)` is a free constant chosen so
//! that `∫_1^∞ s^{1-|n|} ω ds = 0`; at `r_max` the equation is closed with
//! `ω_t + (ζ+γ/2) ω = φ`, where `φ` is the non-growing part of the forcing.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{ModeScalar, ModeVector};
use crate::grid::RadialGrid;
use crate::kernels::compute_kernel_data;
use crate::params::PhysParams;
use crate::quadrature::TAIL_MARGIN;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `r² rot f` from samples of `(f_r, f_θ)`, differentiated in `t`.
fn scaled_rot(n: i32, nodes: &[f64], h: f64, f_r: &[C64], f_t: &[C64]) -> Vec<C64> {
    let m = nodes.len();
    let rf: Vec<C64> = f_t.iter().zip(nodes).map(|(v, &r)| v * r).collect();
    let i_n = C64::new(0.0, n as f64);
    (0..m)
        .map(|j| {
            let dt = if j == 0 {
                (-3.0 * rf[0] + 4.0 * rf[1] - rf[2]) / (2.0 * h)
            } else if j == m - 1 {
                (3.0 * rf[m - 1] - 4.0 * rf[m - 2] + rf[m - 3]) / (2.0 * h)
            } else {
                (rf[j + 1] - rf[j - 1]) / (2.0 * h)
            };
            dt - i_n * nodes[j] * f_r[j]
        })
        .collect()
}

/// Local exponential rate `-d ln g/dt` from the last two samples.
fn end_rate(g: &[C64], h: f64) -> Option<C64> {
    let (a, b) = (g[g.len() - 2], g[g.len() - 1]);
    (a != ZERO && b != ZERO).then(|| -(b / a).ln() / h)
}

/// Complex tridiagonal solve (Thomas algorithm).
fn thomas(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Result<Vec<C64>> {
    let m = diag.len();
    let mut c = vec![ZERO; m];
    let mut d = vec![ZERO; m];
    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return Err(Error::Singular("dense BVP pivot"));
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for j in 1..m {
        pivot = diag[j] - sub[j] * c[j - 1];
        if pivot.norm() == 0.0 || !pivot.is_finite() {
            return Err(Error::Singular("dense BVP pivot"));
        }
        c[j] = if j + 1 < m { sup[j] / pivot } else { ZERO };
        d[j] = (rhs[j] - sub[j] * d[j - 1]) / pivot;
    }
    for j in (0..m - 1).rev() {
        d[j] = d[j] - c[j] * d[j + 1];
    }
    Ok(d)
}

/// Discrete solution with `ω(1) = a` and forcing `g = r² rot f`.
fn solve_dirichlet(n: i32, p: &PhysParams, grid: &RadialGrid, g: &[C64], a: C64) -> Result<Vec<C64>> {
    let m = grid.len();
    if m < 4 {
        return Err(Error::GridMismatch("dense BVP needs at least four nodes"));
    }
    let k = compute_kernel_data(n, p)?;
    let mu = k.decay_exponent(p.gamma);
    let nu = k.zeta - p.gamma / 2.0;
    let h = grid.log_step();
    let coef = C64::new((n * n) as f64, p.alpha * n as f64);
    let (h2, gm) = (h * h, p.gamma);
    let lower = C64::new(-1.0 / h2 + gm / (2.0 * h), 0.0);
    let upper = C64::new(-1.0 / h2 - gm / (2.0 * h), 0.0);
    let centre = C64::new(2.0 / h2, 0.0) + coef;

    let mut sub = vec![lower; m];
    let mut diag = vec![centre; m];
    let mut sup = vec![upper; m];
    let mut rhs = g.to_vec();
    sub[0] = ZERO;
    diag[0] = C64::new(1.0, 0.0);
    sup[0] = ZERO;
    rhs[0] = a;
    // ghost node from ω_t + μω = φ at r_max
    let phi = match end_rate(g, h) {
        Some(beta) => g[m - 1] / (nu + beta),
        None => ZERO,
    };
    sub[m - 1] = C64::new(-2.0 / h2, 0.0);
    diag[m - 1] = centre + 2.0 * mu / h + gm * mu;
    rhs[m - 1] = g[m - 1] + phi * (2.0 / h + gm);
    thomas(&sub, &diag, &sup, &rhs)
}

/// `∫_1^∞ s^{1-|n|} ω ds` by the trapezoid rule in `t` plus a power-law tail.
fn d_functional(n: i32, grid: &RadialGrid, omega: &[C64]) -> Result<C64> {
    let h = grid.log_step();
    let w = 2.0 - n.abs() as f64;
    let m = omega.len();
    let vals: Vec<C64> = grid.nodes().iter().zip(omega).map(|(&r, v)| v * r.powf(w)).collect();
    let body = vals.iter().sum::<C64>() * h - (vals[0] + vals[m - 1]) * (0.5 * h);
    let tail = match end_rate(omega, h) {
        Some(beta) => {
            let rate = beta - w;
            if rate.re <= TAIL_MARGIN {
                return Err(Error::DivergentIntegral { what: "dense BVP d_n", rate: rate.re, kernel: w });
            }
            vals[m - 1] / rate
        }
        None => ZERO,
    };
    Ok(body + tail)
}

fn shoot(n: i32, p: &PhysParams, grid: &RadialGrid, g: &[C64]) -> Result<Vec<C64>> {
    let particular = solve_dirichlet(n, p, grid, g, ZERO)?;
    let homogeneous = solve_dirichlet(n, p, grid, &vec![ZERO; g.len()], C64::new(1.0, 0.0))?;
    let dh = d_functional(n, grid, &homogeneous)?;
    if dh.norm() == 0.0 {
        return Err(Error::Singular("dense BVP shooting"));
    }
    let a = -d_functional(n, grid, &particular)? / dh;
    Ok(particular.iter().zip(&homogeneous).map(|(x, y)| x + a * y).collect())
}

fn check_mode(n: i32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidMode { n, reason: "dense BVP oracle needs |n| >= 1" });
    }
    Ok(())
}

/// Second-order vorticity on the grid of `f`.
pub fn dense_bvp_mode(n: i32, f: &ModeVector, p: &PhysParams) -> Result<ModeScalar> {
    check_mode(n)?;
    let grid = f.grid();
    let g = scaled_rot(n, grid.nodes(), grid.log_step(), f.v_r(), f.v_theta());
    ModeScalar::new(n, grid.clone(), shoot(n, p, grid, &g)?)
}

/// Richardson-extrapolated vorticity from solves on `grid` and on its
/// refinement, with `forcing(r) = (f_r, f_θ)` sampled on both.
pub fn dense_bvp_mode_refined(
    n: i32,
    forcing: &dyn Fn(f64) -> (C64, C64),
    p: &PhysParams,
    grid: &Arc<RadialGrid>,
) -> Result<ModeScalar> {
    check_mode(n)?;
    let fine = grid.refined();
    let solve = |g: &RadialGrid| -> Result<Vec<C64>> {
        let (f_r, f_t): (Vec<C64>, Vec<C64>) = g.nodes().iter().map(|&r| forcing(r)).unzip();
        let rhs = scaled_rot(n, g.nodes(), g.log_step(), &f_r, &f_t);
        shoot(n, p, g, &rhs)
    };
    let coarse = solve(grid)?;
    let fine = solve(&fine)?;
    let values = coarse.iter().enumerate().map(|(j, c)| (4.0 * fine[2 * j] - c) / 3.0).collect();
    ModeScalar::new(n, grid.clone(), values)
}

/// Unforced solution with `ω(1) = 1` and no compatibility condition; it
/// approximates `r^{-ζ-γ/2}`.
pub fn dense_bvp_homogeneous(n: i32, p: &PhysParams, grid: &Arc<RadialGrid>) -> Result<ModeScalar> {
    check_mode(n)?;
    let values = solve_dirichlet(n, p, grid, &vec![ZERO; grid.len()], C64::new(1.0, 0.0))?;
    ModeScalar::new(n, grid.clone(), values)
}

/// `max |a - b| / max |b|` over nodes with `r ≤ r_hi`.
pub fn relative_sup_difference(a: &ModeScalar, b: &ModeScalar, r_hi: f64) -> f64 {
    let range = b.grid().indices_within(1.0, r_hi);
    let scale = b.values()[range.clone()].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = range.map(|j| (a.values()[j] - b.values()[j]).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
