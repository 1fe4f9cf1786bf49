//! Mode-by-mode solution of the Stokes-type system linearized around
//! `αU − γW`:
//!
//! ```text
//!   -Δv + (αU − γW)^⊥ rot v + ∇q = f,   div v = 0,   v|_{r=1} = 0.
//! ```
//!
//! The zero mode is an ODE for `v_θ` with homogeneous solutions `r^{1-γ}`
//! and `r^{-1}`. For `|n| ≥ 1` the vorticity is `c_n r^{-ζ-γ/2} + Φ_n` with
//! `c_n` fixed by `d_n[ω_n] = 0`, and the velocity follows from Biot–Savart.

use std::collections::BTreeMap;
use std::sync::Arc;

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::biot_savart::{biot_savart_with_stream, d_n_functional};
use crate::error::{Error, Result};
use crate::fields::{FieldExpansion, ModeScalar, ModeVector, ScalarExpansion};
use crate::grid::RadialGrid;
use crate::kernels::{compute_kernel_data, ModeKernelData};
use crate::params::{PhysParams, SolverParams};
use crate::quadrature::{backward_to_infinity, cumulative_backward, cumulative_forward};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const MAX_CALIBRATION_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModeSolution {
    pub n: i32,
    pub omega: ModeScalar,
    /// `dω/dr` from the differentiated representation formula.
    pub omega_r: Vec<C64>,
    pub velocity: ModeVector,
    /// Coefficient of `r^{-ζ-γ/2}`; `None` for the zero mode.
    pub c_n: Option<C64>,
    pub d_n: C64,
    /// Mode `q_n` of the linear pressure.
    pub pressure: ModeScalar,
    /// `(∂_r q_n, (in/r) q_n)`.
    pub pressure_gradient: ModeVector,
}

impl LinearModeSolution {
    /// `max(|v_r(1)|, |v_θ(1)|)`.
    pub fn boundary_velocity(&self) -> f64 {
        self.velocity.v_r()[0].norm().max(self.velocity.v_theta()[0].norm())
    }

    /// Analytic `(dv_r/dr, dv_θ/dr)` from incompressibility and `rot v = ω`.
    pub fn velocity_derivative(&self) -> (Vec<C64>, Vec<C64>) {
        velocity_derivative(&self.velocity, self.omega.values())
    }
}

fn velocity_derivative(v: &ModeVector, omega: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let i_n = C64::new(0.0, v.n() as f64);
    let mut dr = Vec::with_capacity(omega.len());
    let mut dt = Vec::with_capacity(omega.len());
    for (j, &r) in v.grid().nodes().iter().enumerate() {
        let (a, b) = (v.v_r()[j], v.v_theta()[j]);
        dr.push(-(a + i_n * b) / r);
        dt.push(omega[j] + (i_n * a - b) / r);
    }
    (dr, dt)
}

fn weighted(grid: &RadialGrid, f: &[C64], power: i32) -> Vec<C64> {
    grid.nodes().iter().zip(f).map(|(&r, x)| x * r.powi(power)).collect()
}

/// Zero mode: `v_r ≡ 0` and `v_θ` from the Green function of
/// `-(1/r^{γ+1})(r^{γ+1} ...)` with boundary value 0 and decay at infinity.
pub fn solve_mode_zero(f0: &ModeVector, p: &PhysParams) -> Result<LinearModeSolution> {
    if f0.n() != 0 {
        return Err(Error::InvalidMode { n: f0.n(), reason: "solve_mode_zero needs n = 0" });
    }
    p.validate()?;
    let grid = f0.grid();
    let gamma = p.gamma;
    let g = weighted(grid, f0.v_theta(), 2);
    // X = r^{1-γ} ∫_1^r s^γ f_θ ds,  Y = r^{-1} ∫_r^∞ s² f_θ ds
    let x = cumulative_forward(grid, &g, C64::new(gamma - 1.0, 0.0));
    let y = backward_to_infinity(grid, &g, C64::new(-1.0, 0.0), "zero-mode forcing moment")?;
    let total = y[0];
    let m = grid.len();
    let mut v_theta = Vec::with_capacity(m);
    let mut omega = Vec::with_capacity(m);
    for (j, &r) in grid.nodes().iter().enumerate() {
        let hom = total * r.powf(1.0 - gamma);
        v_theta.push((x[j] + y[j] - hom) / (gamma - 2.0));
        omega.push((hom - x[j]) / r);
    }
    v_theta[0] = ZERO;
    // the zero-mode vorticity equation is first order: ω' = -f_θ - γω/r
    let omega_r: Vec<C64> =
        grid.nodes().iter().enumerate().map(|(j, &r)| -f0.v_theta()[j] - omega[j] * (gamma / r)).collect();
    let dq: Vec<C64> =
        grid.nodes().iter().enumerate().map(|(j, &r)| f0.v_r()[j] + omega[j] * (p.alpha / r)).collect();
    // q_0(r_max) = 0
    let q: Vec<C64> = cumulative_backward(grid, &weighted(grid, &dq, 1), ZERO, ZERO).into_iter().map(|v| -v).collect();
    Ok(LinearModeSolution {
        n: 0,
        omega: ModeScalar::new(0, grid.clone(), omega)?,
        omega_r,
        velocity: ModeVector::new(0, grid.clone(), vec![ZERO; m], v_theta)?,
        c_n: None,
        d_n: ZERO,
        pressure: ModeScalar::new(0, grid.clone(), q)?,
        pressure_gradient: ModeVector::new(0, grid.clone(), dq, vec![ZERO; m])?,
    })
}

/// Particular vorticity `Φ_n` and its derivative in `ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiProfile {
    pub phi: ModeScalar,
    /// `r dΦ/dr`.
    pub phi_t: Vec<C64>,
}

/// `Φ_n = (F₂ − F₁)/(2ζ)` with
///
/// ```text
///   F₁ = r^{-ζ-γ/2} ∫_1^r s^{ζ+γ/2} [(ζ+γ/2) f_θ + in f_r] ds
///   F₂ = r^{ζ-γ/2} ∫_r^∞ s^{-ζ+γ/2} [(ζ-γ/2) f_θ − in f_r] ds
/// ```
pub fn compute_phi(f: &ModeVector, k: &ModeKernelData, p: &PhysParams) -> Result<PhiProfile> {
    if f.n() != k.n {
        return Err(Error::InvalidMode { n: f.n(), reason: "kernel data belongs to another mode" });
    }
    let grid = f.grid();
    let half = p.gamma / 2.0;
    let i_n = C64::new(0.0, f.n() as f64);
    let lam1 = k.zeta + half;
    let lam2 = k.zeta - half;
    let g1: Vec<C64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (lam1 * f.v_theta()[j] + i_n * f.v_r()[j]) * r)
        .collect();
    let g2: Vec<C64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (lam2 * f.v_theta()[j] - i_n * f.v_r()[j]) * r)
        .collect();
    let f1 = cumulative_forward(grid, &g1, lam1);
    let f2 = backward_to_infinity(grid, &g2, lam2, "outer vorticity integral")?;
    // Wronskian of r^{-ζ}, r^{ζ} is 2ζ/r
    let denom = 2.0 * k.zeta;
    let phi = f1.iter().zip(&f2).map(|(a, b)| (b - a) / denom).collect();
    let phi_t = (0..grid.len()).map(|j| (lam1 * f1[j] - g1[j] + lam2 * f2[j] - g2[j]) / denom).collect();
    Ok(PhiProfile { phi: ModeScalar::new(f.n(), grid.clone(), phi)?, phi_t })
}

pub fn compute_phi_n(f: &ModeVector, k: &ModeKernelData, p: &PhysParams) -> Result<ModeScalar> {
    Ok(compute_phi(f, k, p)?.phi)
}

fn homogeneous(grid: &Arc<RadialGrid>, n: i32, mu: C64) -> Result<ModeScalar> {
    ModeScalar::new(n, grid.clone(), grid.nodes().iter().map(|&r| (-mu * r.ln()).exp()).collect())
}

/// `c_n = -(ζ + |n| + γ/2 - 2) d_n[Φ]`, using `d_n[r^{-ζ-γ/2}] = 1/(ζ + |n| + γ/2 - 2)`.
pub fn compute_c_n(phi: &ModeScalar, k: &ModeKernelData, p: &PhysParams) -> Result<C64> {
    let factor = k.zeta + (k.n.abs() as f64) + p.gamma / 2.0 - 2.0;
    Ok(-factor * d_n_functional(phi)?)
}

/// Starts from [`compute_c_n`] and corrects `c_n` against the discrete
/// functional until `|d_n[ω]| ≤ tol`. Returns `(c_n, ω, d_n[ω])`.
fn calibrate(phi: &ModeScalar, k: &ModeKernelData, p: &PhysParams, tol: f64) -> Result<(C64, ModeScalar, C64)> {
    let grid = phi.grid();
    let hom = homogeneous(grid, k.n, k.decay_exponent(p.gamma))?;
    let slope = d_n_functional(&hom)?;
    let d_phi = d_n_functional(phi)?;
    let tol = tol * d_phi.norm().max(1.0);
    let mut c = compute_c_n(phi, k, p)?;
    let mut last = f64::INFINITY;
    for step in 0..MAX_CALIBRATION_STEPS {
        let values = hom.values().iter().zip(phi.values()).map(|(h, f)| h * c + f).collect();
        let omega = ModeScalar::new(k.n, grid.clone(), values)?;
        let d = d_n_functional(&omega)?;
        last = d.norm();
        debug!("mode {}: calibration step {step}, |d_n| = {last:.3e}", k.n);
        if last <= tol {
            return Ok((c, omega, d));
        }
        c -= d / slope;
    }
    Err(Error::Calibration { n: k.n, residual: last, tol })
}

pub fn solve_mode_nonzero(f: &ModeVector, k: &ModeKernelData, p: &PhysParams, quad_tol: f64) -> Result<LinearModeSolution> {
    solve_nonzero(f, k, p, quad_tol).map_err(|e| e.in_mode(f.n()))
}

fn solve_nonzero(f: &ModeVector, k: &ModeKernelData, p: &PhysParams, quad_tol: f64) -> Result<LinearModeSolution> {
    let n = f.n();
    let grid = f.grid();
    let PhiProfile { phi, phi_t } = compute_phi(f, k, p)?;
    let (c, omega, d) = calibrate(&phi, k, p, quad_tol)?;
    let mu = k.decay_exponent(p.gamma);
    let omega_r: Vec<C64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (-mu * c * (-mu * r.ln()).exp() + phi_t[j]) / r)
        .collect();
    let (velocity, _) = biot_savart_with_stream(&omega)?;
    let i_n = C64::new(0.0, n as f64);
    // -Δv = -(-(in/r) ω, ω') for solenoidal v
    let mut dq = Vec::with_capacity(grid.len());
    let mut angular = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for (j, &r) in grid.nodes().iter().enumerate() {
        let w = omega.values()[j];
        dq.push(f.v_r()[j] + (C64::new(p.alpha, 0.0) - i_n) * w / r);
        let a = f.v_theta()[j] + omega_r[j] + w * (p.gamma / r);
        angular.push(a);
        q.push(a * r / i_n);
    }
    Ok(LinearModeSolution {
        n,
        omega,
        omega_r,
        velocity,
        c_n: Some(c),
        d_n: d,
        pressure: ModeScalar::new(n, grid.clone(), q)?,
        pressure_gradient: ModeVector::new(n, grid.clone(), dq, angular)?,
    })
}

/// Amplification constant `C₀(|α|^{1/2} + γ)γ / ((ρ-2)²(3-ρ))`.
pub fn kappa(p: &PhysParams, rho: f64, c0: f64) -> Result<f64> {
    p.validate()?;
    if !(rho > 2.0 && rho < 3.0 && rho <= p.gamma) {
        return Err(Error::InvalidParameter(format!(
            "kappa needs 2 < rho < 3 and rho <= gamma, got rho = {rho}, gamma = {}",
            p.gamma
        )));
    }
    Ok(c0 * (p.alpha.abs().sqrt() + p.gamma) * p.gamma / ((rho - 2.0).powi(2) * (3.0 - rho)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeReport {
    pub n: i32,
    /// `‖ω_n‖_{L^∞_ρ}`.
    pub vorticity_norm: f64,
    /// `‖v_n‖_{L^∞_{ρ-1}}`.
    pub velocity_norm: f64,
    /// `‖∇v_n‖_{L^∞_ρ}`.
    pub gradient_norm: f64,
    pub d_n_abs: f64,
    pub boundary_velocity: f64,
    pub c_n: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub rho: f64,
    pub modes: Vec<ModeReport>,
    pub l1_vorticity: f64,
    pub l1_velocity: f64,
    pub l1_gradient: f64,
    pub flags: Vec<String>,
}

impl SolveReport {
    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("rho", format!("{}", self.rho));
        kv("l1_vorticity", format!("{:.6e}", self.l1_vorticity));
        kv("l1_velocity", format!("{:.6e}", self.l1_velocity));
        kv("l1_gradient", format!("{:.6e}", self.l1_gradient));
        for m in &self.modes {
            let p = format!("mode.{}", m.n);
            kv(&format!("{p}.vorticity_norm"), format!("{:.6e}", m.vorticity_norm));
            kv(&format!("{p}.velocity_norm"), format!("{:.6e}", m.velocity_norm));
            kv(&format!("{p}.gradient_norm"), format!("{:.6e}", m.gradient_norm));
            kv(&format!("{p}.d_n_abs"), format!("{:.3e}", m.d_n_abs));
            kv(&format!("{p}.boundary_velocity"), format!("{:.3e}", m.boundary_velocity));
            if let Some([re, im]) = m.c_n {
                kv(&format!("{p}.c_n"), format!("{re:.12e} {im:+.12e}i"));
            }
        }
        for (i, f) in self.flags.iter().enumerate() {
            kv(&format!("flag.{i}"), f.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    grid: Arc<RadialGrid>,
    pub modes: BTreeMap<i32, LinearModeSolution>,
}

impl LinearSolution {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn velocity(&self) -> FieldExpansion {
        FieldExpansion::from_modes(self.grid.clone(), self.modes.values().map(|m| m.velocity.clone()))
            .expect("modes share the grid")
    }

    pub fn vorticity(&self) -> ScalarExpansion {
        ScalarExpansion::from_modes(self.grid.clone(), self.modes.values().map(|m| m.omega.clone()))
            .expect("modes share the grid")
    }

    pub fn pressure(&self) -> ScalarExpansion {
        ScalarExpansion::from_modes(self.grid.clone(), self.modes.values().map(|m| m.pressure.clone()))
            .expect("modes share the grid")
    }

    pub fn pressure_gradient(&self) -> FieldExpansion {
        FieldExpansion::from_modes(self.grid.clone(), self.modes.values().map(|m| m.pressure_gradient.clone()))
            .expect("modes share the grid")
    }
}

/// Solves every forced mode (in parallel) and collects norms.
pub fn solve_linear(f: &FieldExpansion, p: &PhysParams, s: &SolverParams) -> Result<(LinearSolution, SolveReport)> {
    s.validate(p, false)?;
    let n_max = s.n_max as i32;
    if let Some(n) = f.indices().find(|n| n.abs() > n_max) {
        return Err(Error::InvalidMode { n, reason: "forcing mode beyond n_max" });
    }
    let forced: Vec<&ModeVector> = f.modes().collect();
    let solved: Vec<LinearModeSolution> = forced
        .par_iter()
        .map(|m| {
            if m.n() == 0 {
                solve_mode_zero(m, p).map_err(|e| e.in_mode(0))
            } else {
                let k = compute_kernel_data(m.n(), p)?;
                solve_mode_nonzero(m, &k, p, s.quad_tol)
            }
        })
        .collect::<Result<_>>()?;
    let report = build_report(&solved, p, s.rho);
    let solution = LinearSolution { grid: f.grid().clone(), modes: solved.into_iter().map(|m| (m.n, m)).collect() };
    Ok((solution, report))
}

fn build_report(solved: &[LinearModeSolution], p: &PhysParams, rho: f64) -> SolveReport {
    let modes: Vec<ModeReport> = solved
        .iter()
        .map(|m| ModeReport {
            n: m.n,
            vorticity_norm: m.omega.weighted_sup_norm(rho),
            velocity_norm: m.velocity.weighted_sup_norm(rho - 1.0),
            gradient_norm: m.velocity.gradient_sup_norm(rho),
            d_n_abs: m.d_n.norm(),
            boundary_velocity: m.boundary_velocity(),
            c_n: m.c_n.map(|c| [c.re, c.im]),
        })
        .collect();
    let mut flags = Vec::new();
    if rho == 3.0 && p.gamma == 3.0 {
        flags.push("rho = gamma = 3: decay estimates follow the logarithmic case".to_string());
    }
    SolveReport {
        rho,
        l1_vorticity: modes.iter().map(|m| m.vorticity_norm).sum(),
        l1_velocity: modes.iter().map(|m| m.velocity_norm).sum(),
        l1_gradient: modes.iter().map(|m| m.gradient_norm).sum(),
        modes,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{div_mode, rot_mode};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::shared(1.0e4, 2048).unwrap()
    }

    #[test]
    fn zero_mode_power_forcing() {
        let g = grid();
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let f = ModeVector::from_fn(0, g.clone(), |r| (c(0.0), c(r.powi(-4)))).unwrap();
        let s = solve_mode_zero(&f, &p).unwrap();
        for (j, &r) in g.nodes().iter().enumerate().skip(1) {
            let v = r.ln() / (r * r);
            let w = (1.0 - r.ln()) / r.powi(3);
            assert!((s.velocity.v_theta()[j].re - v).abs() <= 1e-8 * v.abs(), "r={r}");
            assert!((s.omega.values()[j].re - w).abs() <= 1e-8 * w.abs().max(1e-3 * r.powi(-3)), "r={r}");
        }
        assert_eq!(s.velocity.v_theta()[0], ZERO);
        assert!(s.velocity.v_r().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn zero_mode_is_independent_of_rotation() {
        let g = grid();
        let f = ModeVector::from_fn(0, g.clone(), |r| (c(0.0), c(r.powf(-3.5)))).unwrap();
        let a = solve_mode_zero(&f, &PhysParams::new(0.0, 2.5).unwrap()).unwrap();
        let b = solve_mode_zero(&f, &PhysParams::new(7.0, 2.5).unwrap()).unwrap();
        assert_eq!(a.velocity, b.velocity);
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let g = grid();
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let s = solve_mode_zero(&ModeVector::zeros(0, g.clone()), &p).unwrap();
        assert!(s.velocity.is_zero() && s.omega.is_zero());
        let k = compute_kernel_data(2, &p).unwrap();
        let s = solve_mode_nonzero(&ModeVector::zeros(2, g.clone()), &k, &p, 1e-9).unwrap();
        assert!(s.velocity.is_zero() && s.omega.is_zero() && s.pressure_gradient.is_zero());
        assert_eq!(s.c_n, Some(ZERO));
    }

    #[test]
    fn phi_of_power_forcing() {
        let g = grid();
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let k = compute_kernel_data(1, &p).unwrap();
        let e = 4.0;
        let f = ModeVector::from_fn(1, g.clone(), |r| (c(0.0), c(r.powf(-e)))).unwrap();
        let phi = compute_phi_n(&f, &k, &p).unwrap();
        let (l1, l2) = (k.zeta + 1.5, k.zeta - 1.5);
        for (j, &r) in g.nodes().iter().enumerate() {
            let f1 = l1 * (r.powf(1.0 - e) - (-l1 * r.ln()).exp()) / (l1 + 1.0 - e);
            let f2 = l2 * r.powf(1.0 - e) / (l2 + e - 1.0);
            let exact = (f2 - f1) / (2.0 * k.zeta);
            assert!((phi.values()[j] - exact).norm() <= 1e-10 * exact.norm().max(r.powf(-e)), "r={r}");
        }
    }

    #[test]
    fn c_n_of_pure_power() {
        let g = grid();
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let k = compute_kernel_data(2, &p).unwrap();
        let rho = 2.5;
        let phi = ModeScalar::from_fn(2, g.clone(), |r| c(r.powf(-rho))).unwrap();
        let cn = compute_c_n(&phi, &k, &p).unwrap();
        let exact = -(k.zeta + 2.0 + 1.5 - 2.0) / (rho + 2.0 - 2.0);
        assert!((cn - exact).norm() < 1e-11 * exact.norm());
    }

    #[test]
    fn nonzero_mode_calibrates_and_satisfies_ode() {
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let residual = |m: usize| {
            let g = RadialGrid::shared(1.0e4, m).unwrap();
            let k = compute_kernel_data(1, &p).unwrap();
            let f = ModeVector::from_fn(1, g.clone(), |r| (c(0.3 * r.powi(-4)), C64::new(r.powi(-4), 0.2 * r.powi(-5)))).unwrap();
            let s = solve_mode_nonzero(&f, &k, &p, 1e-9).unwrap();
            assert!(s.d_n.norm() <= 1e-9);
            assert!(s.boundary_velocity() <= 1e-8);
            // vorticity equation with rot f by finite differences
            let w = s.omega.values();
            let dw = g.derivative(w);
            let ddw = g.derivative(&dw);
            let rot_f = rot_mode(&f);
            let coef = C64::new(1.0, p.alpha);
            let range = g.indices_within(1.5, 50.0);
            let mut worst: f64 = 0.0;
            for j in range {
                let r = g.r(j);
                let res = -ddw[j] - dw[j] * ((1.0 + p.gamma) / r) + coef * w[j] / (r * r) - rot_f.values()[j];
                worst = worst.max(res.norm());
            }
            // incompressibility and pressure consistency
            assert!(div_mode(&s.velocity).weighted_sup_norm(0.0) < 1e-3);
            worst
        };
        let (a, b) = (residual(1024), residual(2047));
        assert!((a / b).log2() > 1.9, "{a} {b}");
    }

    #[test]
    fn pressure_components_are_consistent() {
        let g = grid();
        let p = PhysParams::new(2.0, 4.0).unwrap();
        let k = compute_kernel_data(-2, &p).unwrap();
        let f = ModeVector::from_fn(-2, g.clone(), |r| (C64::new(0.0, r.powi(-5)), c(r.powf(-4.5)))).unwrap();
        let s = solve_mode_nonzero(&f, &k, &p, 1e-9).unwrap();
        let dq = g.derivative(s.pressure.values());
        let scale = s.pressure_gradient.weighted_sup_norm(0.0);
        for j in g.indices_within(1.2, 100.0) {
            assert!((dq[j] - s.pressure_gradient.v_r()[j]).norm() < 1e-4 * scale, "r={}", g.r(j));
        }
    }

    #[test]
    fn kappa_values() {
        let p = PhysParams::new(1.0, 3.0).unwrap();
        assert!((kappa(&p, 2.5, 1.0).unwrap() - 96.0).abs() < 1e-12);
        assert!(kappa(&p, 2.0001, 1.0).unwrap() > 1e7);
        assert!(kappa(&p, 2.9999, 1.0).unwrap() > 1e5);
        assert!(kappa(&p, 3.0, 1.0).is_err());
        let k4 = kappa(&PhysParams::new(1.0, 4.0).unwrap(), 2.5, 1.0).unwrap();
        let a2 = kappa(&PhysParams::new(-2.0, 3.0).unwrap(), 2.5, 1.0).unwrap();
        assert!(k4 > 96.0 && a2 > 96.0);
    }

    #[test]
    fn dispatch_matches_single_mode_solve() {
        let g = grid();
        let p = PhysParams::new(1.0, 3.0).unwrap();
        let s = SolverParams::default();
        let m1 = ModeVector::from_fn(1, g.clone(), |r| (c(0.0), c(r.powi(-4)))).unwrap();
        let f = FieldExpansion::from_modes(g.clone(), [m1.clone(), m1.conj()]).unwrap();
        let (sol, report) = solve_linear(&f, &p, &s).unwrap();
        let k = compute_kernel_data(1, &p).unwrap();
        assert_eq!(sol.modes[&1], solve_mode_nonzero(&m1, &k, &p, s.quad_tol).unwrap());
        assert!(sol.velocity().conjugate_symmetry_defect() < 1e-14);
        assert_eq!(report.modes.len(), 2);
        assert!(report.to_key_value().contains("mode.1.d_n_abs = "));
        let (empty, _) = solve_linear(&FieldExpansion::new(g.clone()), &p, &s).unwrap();
        assert!(empty.velocity().is_empty());
    }
}
