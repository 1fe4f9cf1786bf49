//! Fixed-point iteration for the full problem around `αU − γW`.
//!
//! `T(w)` is the solution of the linear system with forcing
//! `f − w^⊥ rot w`; its fixed point `v` gives `u = αU − γW + v` and
//! `∇p = ∇(q − |u|²/2)`.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{
    polar_to_cartesian, rot_mode, synthesize_complex, x_rho_norm, l1_gradient_norm, l1_weighted_norm,
    FieldExpansion, ModeVector, ScalarExpansion,
};
use crate::fit::{line_fit, loglog_fit, LineFit};
use crate::grid::Interpolation;
use crate::linear::{kappa, solve_linear, LinearSolution, SolveReport};
use crate::params::{PhysParams, SolverParams};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
/// Iterate norm beyond which the loop is declared divergent.
const BLOW_UP: f64 = 1.0e6;
/// Consecutive expanding steps tolerated before giving up.
const EXPANDING_STEPS: usize = 3;

/// Node-wise products of every mode pair, output indices `|n| ≤ n_max`.
fn convolve_truncated(
    a: &BTreeMap<i32, Vec<C64>>,
    b: &BTreeMap<i32, Vec<C64>>,
    n_max: i32,
    len: usize,
) -> BTreeMap<i32, Vec<C64>> {
    let mut out: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    for (&p, x) in a {
        for (&q, y) in b {
            if (p + q).abs() > n_max {
                continue;
            }
            let acc = out.entry(p + q).or_insert_with(|| vec![ZERO; len]);
            for ((o, u), v) in acc.iter_mut().zip(x).zip(y) {
                *o += u * v;
            }
        }
    }
    out
}

/// `-w^⊥ rot w` with `rot w` supplied per mode, truncated to `|n| ≤ n_max`.
pub fn nonlinear_term_with_vorticity(w: &FieldExpansion, omega: &ScalarExpansion, n_max: i32) -> Result<FieldExpansion> {
    let grid = w.grid();
    let len = grid.len();
    let w_r: BTreeMap<i32, Vec<C64>> = w.modes().map(|m| (m.n(), m.v_r().to_vec())).collect();
    let w_t: BTreeMap<i32, Vec<C64>> = w.modes().map(|m| (m.n(), m.v_theta().to_vec())).collect();
    let om: BTreeMap<i32, Vec<C64>> = omega.modes().map(|m| (m.n(), m.values().to_vec())).collect();
    // w^⊥ = (-w_θ, w_r), so -w^⊥ ω = (w_θ ω, -w_r ω)
    let radial = convolve_truncated(&w_t, &om, n_max, len);
    let angular = convolve_truncated(&w_r, &om, n_max, len);
    let mut out = FieldExpansion::new(grid.clone());
    let indices: std::collections::BTreeSet<i32> = radial.keys().chain(angular.keys()).copied().collect();
    for n in indices {
        let a = radial.get(&n).cloned().unwrap_or_else(|| vec![ZERO; len]);
        let b = angular.get(&n).map(|v| v.iter().map(|x| -x).collect()).unwrap_or_else(|| vec![ZERO; len]);
        out.insert(ModeVector::new(n, grid.clone(), a, b)?)?;
    }
    Ok(out)
}

/// `-w^⊥ rot w` with `rot w` by finite differences, truncated to `|n| ≤ n_max`.
pub fn nonlinear_term(w: &FieldExpansion, n_max: i32) -> Result<FieldExpansion> {
    let omega = ScalarExpansion::from_modes(w.grid().clone(), w.modes().map(rot_mode))?;
    nonlinear_term_with_vorticity(w, &omega, n_max)
}

/// One application of `T`.
pub fn picard_map(w: &FieldExpansion, f: &FieldExpansion, p: &PhysParams, s: &SolverParams) -> Result<FieldExpansion> {
    let forcing = f.axpy(1.0, &nonlinear_term(w, s.n_max as i32)?)?;
    Ok(solve_linear(&forcing, p, s)?.0.velocity())
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub norm: f64,
    pub diff: f64,
    /// `diff_k / diff_{k-1}`; undefined for the first step.
    pub ratio: Option<f64>,
    pub wall_seconds: f64,
}

impl IterationRecord {
    pub fn log_line(&self) -> String {
        let ratio = self.ratio.map_or_else(|| "nan".to_string(), |r| format!("{r:.6e}"));
        format!(
            "iter={} norm={:.12e} diff={:.12e} ratio={} wall_s={:.3}",
            self.iteration, self.norm, self.diff, ratio, self.wall_seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardState {
    pub iterate: FieldExpansion,
    pub iteration: usize,
    pub norm_history: Vec<f64>,
    pub diff_history: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub records: Vec<IterationRecord>,
}

impl PicardState {
    /// Geometric-rate fit of `log diff_k` against `k`, dropping the first step
    /// (its difference is `‖T(0)‖`, not a contraction).
    pub fn rate_fit(&self) -> Option<LineFit> {
        let tail: Vec<(f64, f64)> = self
            .diff_history
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, d)| **d > 0.0)
            .map(|(k, d)| (k as f64, d.ln()))
            .collect();
        if tail.len() < 3 {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
        line_fit(&x, &y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    /// `f = 0` and the perturbation vanishes identically.
    pub exact_background: bool,
    pub r_lo: f64,
    pub r_hi: f64,
    pub velocity_fit: Option<LineFit>,
    pub vorticity_fit: Option<LineFit>,
    pub velocity_target: f64,
    pub vorticity_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub n_max: usize,
    pub kappa: f64,
    pub delta: f64,
    pub forcing_norm: f64,
    /// `‖f‖ ≤ δ²` and `2κδ < 1`.
    pub smallness_holds: bool,
    pub converged: bool,
    pub certified: bool,
    pub iterations: usize,
    pub final_diff: f64,
    pub fixed_point_residual: f64,
    pub rate: Option<f64>,
    pub rate_fit_relative_residual: Option<f64>,
    pub velocity_l1: f64,
    pub gradient_l1: f64,
    pub x_rho_norm: f64,
    pub boundary_velocity: f64,
    pub linear: SolveReport,
    pub asymptotics: Option<AsymptoticsReport>,
}

impl RunReport {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
        let lines = [
            ("alpha", format!("{}", self.alpha)),
            ("gamma", format!("{}", self.gamma)),
            ("rho", format!("{}", self.rho)),
            ("n_max", format!("{}", self.n_max)),
            ("kappa", format!("{:.6e}", self.kappa)),
            ("delta", format!("{:.6e}", self.delta)),
            ("forcing_norm", format!("{:.6e}", self.forcing_norm)),
            ("smallness_holds", format!("{}", self.smallness_holds)),
            ("converged", format!("{}", self.converged)),
            ("certified", format!("{}", self.certified)),
            ("iterations", format!("{}", self.iterations)),
            ("final_diff", format!("{:.6e}", self.final_diff)),
            ("fixed_point_residual", format!("{:.6e}", self.fixed_point_residual)),
            ("contraction_rate", opt(self.rate)),
            ("contraction_rate_fit_residual", opt(self.rate_fit_relative_residual)),
            ("velocity_l1", format!("{:.6e}", self.velocity_l1)),
            ("gradient_l1", format!("{:.6e}", self.gradient_l1)),
            ("x_rho_norm", format!("{:.6e}", self.x_rho_norm)),
            ("boundary_velocity", format!("{:.3e}", self.boundary_velocity)),
        ];
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        if let Some(a) = &self.asymptotics {
            out.push_str(&format!("asymptotics.exact_background = {}\n", a.exact_background));
            if let Some(f) = a.velocity_fit {
                out.push_str(&format!("asymptotics.velocity_slope = {:.6}\n", f.slope));
            }
            if let Some(f) = a.vorticity_fit {
                out.push_str(&format!("asymptotics.vorticity_slope = {:.6}\n", f.slope));
            }
        }
        for line in self.linear.to_key_value().lines() {
            out.push_str("linear.");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Converged perturbation with the assembled pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSolution {
    pub background: PhysParams,
    pub solver: SolverParams,
    pub forcing: FieldExpansion,
    /// `v = u − (αU − γW)`.
    pub perturbation: FieldExpansion,
    /// `rot v` (equal to `rot u`).
    pub vorticity: ScalarExpansion,
    /// Modes of the linear pressure `q`.
    pub pressure_modes: ScalarExpansion,
    /// Modes of the full `∇p = ∇(q − |u|²/2)` in the polar frame,
    /// background included, `|n| ≤ 2 n_max`.
    pub pressure_gradient: FieldExpansion,
    pub state: PicardState,
    pub report: RunReport,
}

impl FullSolution {
    /// Polar components of `u = αU − γW + v`.
    pub fn velocity_polar(&self, r: f64, theta: f64) -> Result<[f64; 2]> {
        let (a, b) = synthesize_complex(&self.perturbation, r, theta, Interpolation::Lagrange)?;
        Ok([a.re - self.background.gamma / r, b.re + self.background.alpha / r])
    }

    pub fn velocity_cartesian(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (r, theta) = (x.hypot(y), y.atan2(x));
        Ok(polar_to_cartesian(self.velocity_polar(r, theta)?, theta))
    }

    pub fn pressure_gradient_cartesian(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (r, theta) = (x.hypot(y), y.atan2(x));
        let (a, b) = synthesize_complex(&self.pressure_gradient, r, theta, Interpolation::Lagrange)?;
        Ok(polar_to_cartesian([a.re, b.re], theta))
    }

    pub fn forcing_cartesian(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (r, theta) = (x.hypot(y), y.atan2(x));
        let (a, b) = synthesize_complex(&self.forcing, r, theta, Interpolation::Lagrange)?;
        Ok(polar_to_cartesian([a.re, b.re], theta))
    }
}

/// `∇(q − |u|²/2)` per mode, using analytic radial derivatives of `v`.
fn assemble_pressure(lin: &LinearSolution, p: &PhysParams) -> Result<FieldExpansion> {
    let grid = lin.grid().clone();
    let len = grid.len();
    let mut u_r: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    let mut u_t: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    let mut du_r: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    let mut du_t: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    for (&n, m) in &lin.modes {
        let (dr, dt) = m.velocity_derivative();
        u_r.insert(n, m.velocity.v_r().to_vec());
        u_t.insert(n, m.velocity.v_theta().to_vec());
        du_r.insert(n, dr);
        du_t.insert(n, dt);
    }
    // background -γ/r e_r + α/r e_θ sits in mode 0
    let nodes = grid.nodes();
    let add = |map: &mut BTreeMap<i32, Vec<C64>>, f: &dyn Fn(f64) -> f64| {
        let e = map.entry(0).or_insert_with(|| vec![ZERO; len]);
        for (v, &r) in e.iter_mut().zip(nodes) {
            *v += f(r);
        }
    };
    add(&mut u_r, &|r| -p.gamma / r);
    add(&mut u_t, &|r| p.alpha / r);
    add(&mut du_r, &|r| p.gamma / (r * r));
    add(&mut du_t, &|r| -p.alpha / (r * r));

    let wide = 2 * lin.modes.keys().map(|n| n.abs()).max().unwrap_or(0);
    let half_sq = |a: &BTreeMap<i32, Vec<C64>>, b: &BTreeMap<i32, Vec<C64>>| convolve_truncated(a, b, wide, len);
    // S = |u|²/2 and S' = Σ u'_m u_{n-m}
    let s_rr = half_sq(&u_r, &u_r);
    let s_tt = half_sq(&u_t, &u_t);
    let d_rr = half_sq(&du_r, &u_r);
    let d_tt = half_sq(&du_t, &u_t);
    let indices: std::collections::BTreeSet<i32> =
        s_rr.keys().chain(s_tt.keys()).chain(lin.modes.keys()).copied().collect();
    let mut out = FieldExpansion::new(grid.clone());
    let zeros = vec![ZERO; len];
    for n in indices {
        let i_n = C64::new(0.0, n as f64);
        let (q_r, q_t) = match lin.modes.get(&n) {
            Some(m) => (m.pressure_gradient.v_r(), m.pressure_gradient.v_theta()),
            None => (&zeros[..], &zeros[..]),
        };
        let mut radial = Vec::with_capacity(len);
        let mut angular = Vec::with_capacity(len);
        for (j, &r) in nodes.iter().enumerate() {
            let pick = |m: &BTreeMap<i32, Vec<C64>>| m.get(&n).map_or(ZERO, |v| v[j]);
            let s = 0.5 * (pick(&s_rr) + pick(&s_tt));
            let ds = pick(&d_rr) + pick(&d_tt);
            radial.push(q_r[j] - ds);
            angular.push(q_t[j] - i_n * s / r);
        }
        out.insert(ModeVector::new(n, grid.clone(), radial, angular)?)?;
    }
    Ok(out)
}

/// Iterates `w_{k+1} = T(w_k)` from `w_0 = 0`, reporting each step to
/// `observer`.
pub fn solve_ns_observed(
    f: &FieldExpansion,
    p: &PhysParams,
    s: &SolverParams,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<FullSolution> {
    s.validate(p, true)?;
    let n_max = s.n_max as i32;
    let kap = kappa(p, s.rho, s.c0)?;
    let delta = s.delta.unwrap_or(1.0 / (4.0 * kap));
    let forcing_norm = l1_weighted_norm(f, 2.0 * s.rho - 1.0);
    let smallness_holds = forcing_norm <= delta * delta && 2.0 * kap * delta < 1.0;
    if !smallness_holds {
        warn!(
            "smallness conditions fail (|f| = {forcing_norm:.3e}, delta^2 = {:.3e}, 2 kappa delta = {:.3}); \
             iterating without certification",
            delta * delta,
            2.0 * kap * delta
        );
    }
    let grid = f.grid().clone();
    let start = Instant::now();
    let mut w = FieldExpansion::new(grid.clone());
    let mut omega = ScalarExpansion::new(grid.clone());
    let mut state = PicardState {
        iterate: w.clone(),
        iteration: 0,
        norm_history: Vec::new(),
        diff_history: Vec::new(),
        contraction_ratios: Vec::new(),
        records: Vec::new(),
    };
    let mut expanding = 0;
    let mut converged = false;
    for k in 1..=s.picard_max_iter {
        let forcing = f.axpy(1.0, &nonlinear_term_with_vorticity(&w, &omega, n_max)?)?;
        let (lin, _) = solve_linear(&forcing, p, s)?;
        let next = lin.velocity();
        let diff = x_rho_norm(&next.axpy(-1.0, &w)?, s.rho);
        let norm = x_rho_norm(&next, s.rho);
        let ratio = state.diff_history.last().filter(|d| **d > 0.0).map(|d| diff / d);
        let record = IterationRecord { iteration: k, norm, diff, ratio, wall_seconds: start.elapsed().as_secs_f64() };
        info!("{}", record.log_line());
        observer(&record);
        state.records.push(record);
        state.norm_history.push(norm);
        state.diff_history.push(diff);
        if let Some(r) = ratio {
            state.contraction_ratios.push(r);
        }
        state.iteration = k;
        w = next;
        omega = lin.vorticity();
        if !(norm.is_finite() && diff.is_finite()) || norm > BLOW_UP {
            return Err(Error::Divergence { iterations: k, last_diff: diff });
        }
        if diff < s.picard_tol {
            converged = true;
            break;
        }
        expanding = if ratio.is_some_and(|r| r > 1.0) { expanding + 1 } else { 0 };
        if expanding >= EXPANDING_STEPS {
            return Err(Error::Divergence { iterations: k, last_diff: diff });
        }
    }
    if !converged {
        return Err(Error::Divergence { iterations: state.iteration, last_diff: state.diff_history.last().copied().unwrap_or(0.0) });
    }
    // one more application measures the fixed-point residual and supplies q
    let forcing = f.axpy(1.0, &nonlinear_term_with_vorticity(&w, &omega, n_max)?)?;
    let (lin, linear_report) = solve_linear(&forcing, p, s)?;
    let v = lin.velocity();
    let fixed_point_residual = x_rho_norm(&v.axpy(-1.0, &w)?, s.rho);
    let pressure_gradient = assemble_pressure(&lin, p)?;
    state.iterate = v.clone();
    let rate_fit = state.rate_fit();
    let boundary_velocity = lin.modes.values().map(|m| m.boundary_velocity()).fold(0.0, f64::max);
    let report = RunReport {
        alpha: p.alpha,
        gamma: p.gamma,
        rho: s.rho,
        n_max: s.n_max,
        kappa: kap,
        delta,
        forcing_norm,
        smallness_holds,
        converged,
        certified: converged && smallness_holds,
        iterations: state.iteration,
        final_diff: state.diff_history.last().copied().unwrap_or(0.0),
        fixed_point_residual,
        rate: rate_fit.map(|f| f.slope.exp()),
        rate_fit_relative_residual: rate_fit.map(|f| f.relative_residual),
        velocity_l1: l1_weighted_norm(&v, s.rho - 1.0),
        gradient_l1: l1_gradient_norm(&v, s.rho),
        x_rho_norm: x_rho_norm(&v, s.rho),
        boundary_velocity,
        linear: linear_report,
        asymptotics: None,
    };
    let mut sol = FullSolution {
        background: *p,
        solver: s.clone(),
        forcing: f.clone(),
        perturbation: v,
        vorticity: lin.vorticity(),
        pressure_modes: lin.pressure(),
        pressure_gradient,
        state,
        report,
    };
    sol.report.asymptotics = Some(asymptotics_report(&sol));
    Ok(sol)
}

pub fn solve_ns(f: &FieldExpansion, p: &PhysParams, s: &SolverParams) -> Result<FullSolution> {
    solve_ns_observed(f, p, s, &mut |_| {})
}

/// Angular samples used for the far-field envelope.
const ENVELOPE_ANGLES: usize = 64;

/// `max_θ |Σ_n a_n(r) e^{inθ}|` on the grid nodes in `[lo, hi]`.
fn envelope(modes: &[(i32, Vec<C64>, Vec<C64>)], range: std::ops::Range<usize>) -> Vec<f64> {
    range
        .map(|j| {
            (0..ENVELOPE_ANGLES)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / ENVELOPE_ANGLES as f64;
                    let (mut a, mut b) = (0.0, 0.0);
                    for (n, x, y) in modes {
                        let e = C64::from_polar(1.0, *n as f64 * theta);
                        a += (x[j] * e).re;
                        b += (y[j] * e).re;
                    }
                    a.hypot(b)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Far-field decay slopes of `|u − (αU − γW)|` and `|rot u|` on
/// `[10, r_max/10]`.
pub fn asymptotics_report(sol: &FullSolution) -> AsymptoticsReport {
    let grid = sol.perturbation.grid();
    let (r_lo, r_hi) = (10.0, grid.r_max() / 10.0);
    let rho = sol.solver.rho;
    let exact_background = sol.forcing.is_zero() && sol.perturbation.is_zero();
    let mut report = AsymptoticsReport {
        exact_background,
        r_lo,
        r_hi,
        velocity_fit: None,
        vorticity_fit: None,
        velocity_target: -(rho - 1.0),
        vorticity_target: -rho,
    };
    if exact_background {
        return report;
    }
    let range = grid.indices_within(r_lo, r_hi);
    let radii: Vec<f64> = range.clone().map(|j| grid.r(j)).collect();
    let v_modes: Vec<_> = sol.perturbation.modes().map(|m| (m.n(), m.v_r().to_vec(), m.v_theta().to_vec())).collect();
    let w_modes: Vec<_> = sol.vorticity.modes().map(|m| (m.n(), m.values().to_vec(), vec![ZERO; grid.len()])).collect();
    report.velocity_fit = loglog_fit(&radii, &envelope(&v_modes, range.clone()));
    report.vorticity_fit = loglog_fit(&radii, &envelope(&w_modes, range));
    report
}
