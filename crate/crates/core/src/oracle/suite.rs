//! The verification table behind `exdisk verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dense_bvp::{dense_bvp_mode_refined, relative_sup_difference};
use super::hamel::HamelParams;
use super::lemmas::{lemma_a1_check, lemma_a2_check};
use super::residual::{default_points, ns_residual};
use crate::error::Result;
use crate::fields::ModeVector;
use crate::fit::observed_order;
use crate::grid::RadialGrid;
use crate::kernels::{check_xi_inequalities, compute_kernel_data};
use crate::linear::{solve_mode_nonzero, solve_mode_zero};
use crate::params::PhysParams;

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub check: String,
    pub params: String,
    pub value: f64,
    pub threshold: f64,
    /// Positive when the check passes.
    pub margin: f64,
    pub pass: bool,
}

impl VerificationRow {
    fn at_most(check: &str, params: String, value: f64, threshold: f64) -> Self {
        Self { check: check.into(), params, value, threshold, margin: threshold - value, pass: value <= threshold }
    }

    fn at_least(check: &str, params: String, value: f64, threshold: f64) -> Self {
        Self { check: check.into(), params, value, threshold, margin: value - threshold, pass: value >= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Fixed-width text table, one row per check.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<28} {:<40} {:>13} {:>13} {:>13} {}\n", "check", "params", "value", "threshold", "margin", "result");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:<40} {:>13.5e} {:>13.5e} {:>13.5e} {}",
                r.check,
                r.params,
                r.value,
                r.threshold,
                r.margin,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "{} checks, {} failed", self.rows.len(), self.failures());
        out
    }
}

fn hamel_rows(quick: bool) -> Result<Vec<VerificationRow>> {
    let tuples: Vec<(f64, f64, f64)> = if quick {
        vec![(0.0, 2.5, 0.0), (1.0, 3.0, 0.5), (1.0, 4.0, 1.0)]
    } else {
        let mut v = Vec::new();
        for a in [0.0, 1.0] {
            for g in [2.5, 3.0, 4.0] {
                for t in [0.0, 0.5, 1.0] {
                    v.push((a, g, t));
                }
            }
        }
        v
    };
    let pts = default_points();
    let ring: Vec<(f64, f64)> = (0..16).map(|k| (2.0, 2.0 * PI * k as f64 / 16.0)).collect();
    let zero = |_: f64, _: f64| Ok([0.0; 2]);
    let mut rows = Vec::new();
    for (a, g, t) in tuples {
        let hp = HamelParams::new(a, g, t)?;
        let u = |x: f64, y: f64| Ok(hp.velocity_cartesian(x, y));
        let gp = |x: f64, y: f64| Ok(hp.pressure_gradient_cartesian(x, y));
        let coarse = ns_residual(&u, &gp, &zero, 8e-3, &pts)?.max_residual;
        let fine = ns_residual(&u, &gp, &zero, 4e-3, &pts)?.max_residual;
        let params = format!("alpha={a} gamma={g} t={t}");
        rows.push(VerificationRow::at_least("hamel residual order", params.clone(), observed_order(coarse, fine), 1.9));
        let near = ns_residual(&u, &gp, &zero, 1e-3, &ring)?.max_residual;
        rows.push(VerificationRow::at_most("hamel residual r=2 h=1e-3", params, near, 1e-6));
    }
    Ok(rows)
}

fn zero_mode_row() -> Result<VerificationRow> {
    let grid = RadialGrid::shared(1e4, 2048)?;
    let p = PhysParams::new(1.0, 3.0)?;
    let f = ModeVector::from_fn(0, grid.clone(), |r| (C64::new(0.0, 0.0), C64::new(r.powi(-4), 0.0)))?;
    let s = solve_mode_zero(&f, &p)?;
    let err = grid
        .nodes()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &r)| {
            let v = r.ln() / (r * r);
            (s.velocity.v_theta()[j] - v).norm() / v.abs()
        })
        .fold(0.0, f64::max);
    Ok(VerificationRow::at_most("zero mode closed form", "gamma=3 f=r^-4".into(), err, 1e-8))
}

fn kernel_rows() -> Result<Vec<VerificationRow>> {
    let (mut worst, mut failures) = (0.0f64, 0usize);
    for n in 1..=64 {
        for alpha in [0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0] {
            for gamma in [2.1, 2.5, 3.0, 5.0, 10.0] {
                let p = PhysParams::new(alpha, gamma)?;
                let d = compute_kernel_data(n, &p)?;
                let target = C64::new(d.n_gamma * d.n_gamma, alpha * n as f64);
                worst = worst.max((d.zeta * d.zeta - target).norm() / target.norm());
                failures += check_xi_inequalities(&d, &p).checks.iter().filter(|c| !c.pass).count();
            }
        }
    }
    let params = "n=1..64 alpha,gamma sweep".to_string();
    Ok(vec![
        VerificationRow::at_most("zeta^2 identity", params.clone(), worst, 1e-13),
        VerificationRow::at_most("xi inequalities failures", params, failures as f64, 0.0),
    ])
}

/// `f_n = (r^{-ρ-1}/2, r^{-ρ-1})`; its curl never vanishes identically.
fn cross_forcing(rho: f64) -> impl Fn(f64) -> (C64, C64) + Sync {
    move |r| {
        let v = r.powf(-rho - 1.0);
        (C64::new(0.5 * v, 0.0), C64::new(v, 0.0))
    }
}

fn cross_validation_rows(quick: bool) -> Result<Vec<VerificationRow>> {
    let mut cases = Vec::new();
    for n in [1, 2, 5] {
        for alpha in [0.0, 1.0, 10.0] {
            for gamma in [2.5, 3.0, 4.0] {
                for rho in [2.3, 2.5, 2.9] {
                    cases.push((n, alpha, gamma, rho));
                }
            }
        }
    }
    if quick {
        cases = vec![(1, 1.0, 3.0, 2.5), (2, 10.0, 2.5, 2.9), (5, 0.0, 4.0, 2.3)];
    }
    let grid = RadialGrid::shared(1e4, 2048)?;
    let rows: Vec<Result<Vec<VerificationRow>>> = cases
        .par_iter()
        .map(|&(n, alpha, gamma, rho)| {
            let p = PhysParams::new(alpha, gamma)?;
            let forcing = cross_forcing(rho);
            let f = ModeVector::from_fn(n, grid.clone(), &forcing)?;
            let k = compute_kernel_data(n, &p)?;
            let closed = solve_mode_nonzero(&f, &k, &p, 1e-9)?;
            let dense = dense_bvp_mode_refined(n, &forcing, &p, &grid)?;
            let params = format!("n={n} alpha={alpha} gamma={gamma} rho={rho}");
            Ok(vec![
                VerificationRow::at_most("dense BVP agreement", params.clone(), relative_sup_difference(&closed.omega, &dense, 1e3), 1e-4),
                VerificationRow::at_most("calibration |d_n|", params.clone(), closed.d_n.norm(), 1e-8),
                VerificationRow::at_most("calibration |v_n(1)|", params, closed.boundary_velocity(), 1e-7),
            ])
        })
        .collect();
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

fn lemma_rows(quick: bool) -> Vec<VerificationRow> {
    let samples = if quick { 100 } else { 1000 };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut a1_fail, mut a1_checks) = (0usize, 0usize);
    for _ in 0..samples {
        let n = rng.gen_range(1..=12) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let alpha = rng.gen_range(-20.0..20.0);
        let gamma = rng.gen_range(2.05..8.0);
        let rho = if rng.gen_bool(0.1) { 3.0f64.min(gamma) } else { rng.gen_range(2.01..=3.0f64).min(gamma) };
        let r = 10f64.powf(rng.gen_range(0.0..4.0));
        let c = lemma_a1_check(n, alpha, gamma, rho, &[r]);
        a1_checks += c.len();
        a1_fail += c.iter().filter(|c| !c.pass).count();
    }
    let identity = lemma_a1_check(1, 0.0, 3.0, 3.0, &[std::f64::consts::E, 10.0, 1e3]);
    let id_err = identity.iter().filter(|c| c.name.contains("identity")).map(|c| -c.margin / c.rhs).fold(0.0, f64::max);
    let (mut a2_fail, mut a2_checks) = (0usize, 0usize);
    for _ in 0..samples {
        let n = rng.gen_range(1..=12);
        let alpha = rng.gen_range(-20.0..20.0);
        let gamma = rng.gen_range(2.05..8.0);
        let terms: Vec<(f64, f64)> = (0..rng.gen_range(1..=3)).map(|_| (rng.gen_range(0.1..2.0), rng.gen_range(3.1..6.0))).collect();
        let f = move |s: f64| terms.iter().map(|(c, e)| c * s.powf(-e)).sum::<f64>();
        let r = 10f64.powf(rng.gen_range(0.0..4.0));
        let c = lemma_a2_check(n, alpha, gamma, &f, &[r]);
        a2_checks += c.len();
        a2_fail += c.iter().filter(|c| !c.pass).count();
    }
    vec![
        VerificationRow::at_most("lemma A1 violations", format!("{a1_checks} checks"), a1_fail as f64, 0.0),
        VerificationRow::at_most("lemma A1 log identity", "n=1 rho=3 relative".into(), id_err, 1e-10),
        VerificationRow::at_most("lemma A2 violations", format!("{a2_checks} checks"), a2_fail as f64, 0.0),
    ]
}

/// Runs every oracle check; `quick` trims the parameter sweeps.
pub fn run_verification(quick: bool) -> Result<VerificationReport> {
    let mut rows = hamel_rows(quick)?;
    rows.push(zero_mode_row()?);
    rows.extend(kernel_rows()?);
    rows.extend(cross_validation_rows(quick)?);
    rows.extend(lemma_rows(quick));
    Ok(VerificationReport { rows })
}
