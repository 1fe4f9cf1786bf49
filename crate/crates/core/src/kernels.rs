//! Indicial exponents of the per-mode vorticity equation.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::PhysParams;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeKernelData {
    pub n: i32,
    /// `sqrt(n² + γ²/4)`.
    pub n_gamma: f64,
    /// Principal root of `n_γ² + iαn`.
    pub zeta: C64,
    /// `Re ζ`.
    pub xi: f64,
    /// `(ξ + γ/2) / (ξ - γ/2) / |n|`.
    pub kappa_mode_factor: f64,
}

impl ModeKernelData {
    /// Decay exponent of the homogeneous vorticity `r^{-ζ-γ/2}`.
    pub fn decay_exponent(&self, gamma: f64) -> C64 {
        self.zeta + gamma / 2.0
    }
}

pub fn compute_kernel_data(n: i32, p: &PhysParams) -> Result<ModeKernelData> {
    if n == 0 {
        return Err(Error::InvalidMode { n, reason: "the zero mode has no vorticity kernel" });
    }
    p.validate()?;
    let nf = n as f64;
    let n_gamma = (nf * nf + p.gamma * p.gamma / 4.0).sqrt();
    let zeta = C64::new(n_gamma * n_gamma, p.alpha * nf).sqrt();
    let xi = zeta.re;
    let half = p.gamma / 2.0;
    Ok(ModeKernelData {
        n,
        n_gamma,
        zeta,
        xi,
        kappa_mode_factor: (xi + half) / (xi - half) / nf.abs(),
    })
}

/// `Re ζ` and `Im ζ` from the closed forms in terms of `n_γ` and `αn / n_γ²`.
pub fn zeta_closed_form(n: i32, p: &PhysParams) -> (f64, f64) {
    let nf = n as f64;
    let n_gamma = (nf * nf + p.gamma * p.gamma / 4.0).sqrt();
    let q = p.alpha * nf / (n_gamma * n_gamma);
    let root = (1.0 + q * q).sqrt();
    let re = n_gamma / 2f64.sqrt() * (root + 1.0).sqrt();
    let im = (p.alpha * nf).signum() * n_gamma / 2f64.sqrt() * (root - 1.0).max(0.0).sqrt();
    (re, if p.alpha * nf == 0.0 { 0.0 } else { im })
}

/// One inequality with its slack; `margin > 0` means it holds strictly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, margin: rhs - lhs, pass: lhs <= rhs }
    }

    fn lt(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, margin: rhs - lhs, pass: lhs < rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiReport {
    pub checks: Vec<InequalityCheck>,
}

impl XiReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// `ξ ≤ |ζ| ≤ √2 ξ`, `ξ/|n| ≤ |α|^{1/2} + γ` and `0 < (ξ - γ/2)^{-1} < 2γ`.
pub fn check_xi_inequalities(d: &ModeKernelData, p: &PhysParams) -> XiReport {
    let modulus = d.zeta.norm();
    // slack for the rounding in |ζ| when ζ is real
    let eps = 4.0 * f64::EPSILON * modulus;
    let inv = 1.0 / (d.xi - p.gamma / 2.0);
    XiReport {
        checks: vec![
            InequalityCheck::le("xi <= |zeta|", d.xi, modulus + eps),
            InequalityCheck::le("|zeta| <= sqrt2 xi", modulus, 2f64.sqrt() * d.xi + eps),
            InequalityCheck::le("xi/|n| <= |alpha|^(1/2) + gamma", d.xi / (d.n as f64).abs(), p.alpha.abs().sqrt() + p.gamma),
            InequalityCheck::lt("0 < (xi - gamma/2)^-1", 0.0, inv),
            InequalityCheck::lt("(xi - gamma/2)^-1 < 2 gamma", inv, 2.0 * p.gamma),
        ],
    }
}
