//! Per-mode radial profiles and the operations that move between physical
//! fields and their Fourier modes.
//!
//! A field `v(r, θ)` is represented as `Σ_n v_n(r) e^{inθ}` with each
//! `v_n` stored on a shared [`RadialGrid`]. Vector fields are kept in the
//! polar frame `(v_r, v_θ)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Interpolation, RadialGrid};
use crate::params::PhysParams;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

fn same_grid(a: &Arc<RadialGrid>, b: &Arc<RadialGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check_finite(values: &[C64], grid: &RadialGrid, what: &'static str) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(j) => Err(Error::NonFinite { what, r: grid.r(j), theta: f64::NAN }),
        None => Ok(()),
    }
}

/// One Fourier mode of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeScalar {
    n: i32,
    grid: Arc<RadialGrid>,
    values: Vec<C64>,
}

impl ModeScalar {
    pub fn new(n: i32, grid: Arc<RadialGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("profile length differs from node count"));
        }
        check_finite(&values, &grid, "scalar mode value")?;
        Ok(Self { n, grid, values })
    }

    pub fn zeros(n: i32, grid: Arc<RadialGrid>) -> Self {
        let values = vec![ZERO; grid.len()];
        Self { n, grid, values }
    }

    pub fn from_fn(n: i32, grid: Arc<RadialGrid>, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(n, grid, values)
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn at(&self, r: f64, how: Interpolation) -> Result<C64> {
        self.grid.interpolate(&self.values, r, how)
    }

    /// Complex conjugate, relabelled as mode `-n`.
    pub fn conj(&self) -> Self {
        Self { n: -self.n, grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { n: self.n, grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == ZERO)
    }

    /// `max_j r_j^s |values_j|`.
    pub fn weighted_sup_norm(&self, s: f64) -> f64 {
        weighted_sup(&self.grid, s, self.values.iter().map(|v| v.norm()))
    }
}

/// One Fourier mode of a vector field in the polar frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    n: i32,
    grid: Arc<RadialGrid>,
    v_r: Vec<C64>,
    v_theta: Vec<C64>,
}

impl ModeVector {
    pub fn new(n: i32, grid: Arc<RadialGrid>, v_r: Vec<C64>, v_theta: Vec<C64>) -> Result<Self> {
        if v_r.len() != grid.len() || v_theta.len() != grid.len() {
            return Err(Error::GridMismatch("profile length differs from node count"));
        }
        check_finite(&v_r, &grid, "radial component")?;
        check_finite(&v_theta, &grid, "angular component")?;
        Ok(Self { n, grid, v_r, v_theta })
    }

    pub fn zeros(n: i32, grid: Arc<RadialGrid>) -> Self {
        let m = grid.len();
        Self { n, grid, v_r: vec![ZERO; m], v_theta: vec![ZERO; m] }
    }

    /// Builds a mode from a closure returning `(v_r, v_θ)` at each radius.
    pub fn from_fn(n: i32, grid: Arc<RadialGrid>, f: impl Fn(f64) -> (C64, C64)) -> Result<Self> {
        let (v_r, v_theta) = grid.nodes().iter().map(|&r| f(r)).unzip();
        Self::new(n, grid, v_r, v_theta)
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn v_r(&self) -> &[C64] {
        &self.v_r
    }

    pub fn v_theta(&self) -> &[C64] {
        &self.v_theta
    }

    pub fn at(&self, r: f64, how: Interpolation) -> Result<(C64, C64)> {
        Ok((self.grid.interpolate(&self.v_r, r, how)?, self.grid.interpolate(&self.v_theta, r, how)?))
    }

    pub fn conj(&self) -> Self {
        Self {
            n: -self.n,
            grid: self.grid.clone(),
            v_r: self.v_r.iter().map(|v| v.conj()).collect(),
            v_theta: self.v_theta.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            n: self.n,
            grid: self.grid.clone(),
            v_r: self.v_r.iter().map(|v| v * c).collect(),
            v_theta: self.v_theta.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v_r.iter().chain(&self.v_theta).all(|v| *v == ZERO)
    }

    /// `max_j r_j^s |(v_r, v_θ)_j|` with the Euclidean modulus of the pair.
    pub fn weighted_sup_norm(&self, s: f64) -> f64 {
        weighted_sup(
            &self.grid,
            s,
            self.v_r.iter().zip(&self.v_theta).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()),
        )
    }

    /// Pointwise modulus of the gradient of `v_n(r) e^{inθ}`, derivatives in
    /// `r` by finite differences.
    pub fn gradient_modulus(&self) -> Vec<f64> {
        let dr = self.grid.derivative(&self.v_r);
        let dt = self.grid.derivative(&self.v_theta);
        let i_n = C64::new(0.0, self.n as f64);
        self.grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let a = (i_n * self.v_r[j] - self.v_theta[j]) / r;
                let b = (self.v_r[j] + i_n * self.v_theta[j]) / r;
                (dr[j].norm_sqr() + dt[j].norm_sqr() + a.norm_sqr() + b.norm_sqr()).sqrt()
            })
            .collect()
    }

    pub fn gradient_sup_norm(&self, s: f64) -> f64 {
        weighted_sup(&self.grid, s, self.gradient_modulus().into_iter())
    }
}

fn weighted_sup(grid: &RadialGrid, s: f64, moduli: impl Iterator<Item = f64>) -> f64 {
    grid.nodes().iter().zip(moduli).map(|(&r, m)| r.powf(s) * m).fold(0.0, f64::max)
}

/// Finitely many modes of a vector field on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpansion {
    grid: Arc<RadialGrid>,
    modes: BTreeMap<i32, ModeVector>,
}

impl FieldExpansion {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        Self { grid, modes: BTreeMap::new() }
    }

    pub fn from_modes(grid: Arc<RadialGrid>, modes: impl IntoIterator<Item = ModeVector>) -> Result<Self> {
        let mut e = Self::new(grid);
        for m in modes {
            e.insert(m)?;
        }
        Ok(e)
    }

    /// Replaces the stored mode with the same index.
    pub fn insert(&mut self, mode: ModeVector) -> Result<()> {
        if !same_grid(&self.grid, &mode.grid) {
            return Err(Error::GridMismatch("mode grid differs from expansion grid"));
        }
        self.modes.insert(mode.n, mode);
        Ok(())
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn get(&self, n: i32) -> Option<&ModeVector> {
        self.modes.get(&n)
    }

    /// The stored mode, or zeros if absent.
    pub fn mode_or_zero(&self, n: i32) -> ModeVector {
        self.modes.get(&n).cloned().unwrap_or_else(|| ModeVector::zeros(n, self.grid.clone()))
    }

    pub fn modes(&self) -> impl Iterator<Item = &ModeVector> {
        self.modes.values()
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> + '_ {
        self.modes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_mode(&self) -> i32 {
        self.modes.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.modes.values().all(ModeVector::is_zero)
    }

    /// Keeps modes with `|n| <= n_max`.
    pub fn truncated(&self, n_max: i32) -> Self {
        Self {
            grid: self.grid.clone(),
            modes: self.modes.iter().filter(|(n, _)| n.abs() <= n_max).map(|(&n, m)| (n, m.clone())).collect(),
        }
    }

    /// `self + c * other`, mode by mode over the union of indices.
    pub fn axpy(&self, c: f64, other: &FieldExpansion) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch("expansions live on different grids"));
        }
        let mut out = self.clone();
        for (n, b) in &other.modes {
            let entry = out.modes.entry(*n).or_insert_with(|| ModeVector::zeros(*n, self.grid.clone()));
            for (x, y) in entry.v_r.iter_mut().zip(&b.v_r) {
                *x += y * c;
            }
            for (x, y) in entry.v_theta.iter_mut().zip(&b.v_theta) {
                *x += y * c;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            modes: self.modes.iter().map(|(&n, m)| (n, m.scale(C64::new(c, 0.0)))).collect(),
        }
    }

    /// The real field `amplitude · r^{-exponent} cos(nθ) e_θ`.
    pub fn power_law(grid: Arc<RadialGrid>, n: i32, amplitude: f64, exponent: f64) -> Result<Self> {
        let n = n.abs();
        let weight = if n == 0 { amplitude } else { amplitude / 2.0 };
        let profile = |r: f64| (ZERO, C64::new(weight * r.powf(-exponent), 0.0));
        let mut e = Self::new(grid.clone());
        e.insert(ModeVector::from_fn(n, grid.clone(), profile)?)?;
        if n != 0 {
            e.insert(ModeVector::from_fn(-n, grid, profile)?)?;
        }
        Ok(e)
    }

    /// Largest node-wise deviation from `v_{-n} = conj(v_n)` over stored modes.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&n, m) in &self.modes {
            let partner = self.mode_or_zero(-n);
            for (a, b) in m.v_r.iter().zip(&partner.v_r).chain(m.v_theta.iter().zip(&partner.v_theta)) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Finitely many modes of a scalar field on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpansion {
    grid: Arc<RadialGrid>,
    modes: BTreeMap<i32, ModeScalar>,
}

impl ScalarExpansion {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        Self { grid, modes: BTreeMap::new() }
    }

    pub fn from_modes(grid: Arc<RadialGrid>, modes: impl IntoIterator<Item = ModeScalar>) -> Result<Self> {
        let mut e = Self::new(grid);
        for m in modes {
            e.insert(m)?;
        }
        Ok(e)
    }

    pub fn insert(&mut self, mode: ModeScalar) -> Result<()> {
        if !same_grid(&self.grid, &mode.grid) {
            return Err(Error::GridMismatch("mode grid differs from expansion grid"));
        }
        self.modes.insert(mode.n, mode);
        Ok(())
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn get(&self, n: i32) -> Option<&ModeScalar> {
        self.modes.get(&n)
    }

    pub fn modes(&self) -> impl Iterator<Item = &ModeScalar> {
        self.modes.values()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn l1_weighted_norm(&self, s: f64) -> f64 {
        self.modes.values().map(|m| m.weighted_sup_norm(s)).sum()
    }

    /// Evaluates `Σ_n a_n(r) e^{inθ}`.
    pub fn evaluate(&self, r: f64, theta: f64, how: Interpolation) -> Result<C64> {
        let mut acc = ZERO;
        for m in self.modes.values() {
            acc += m.at(r, how)? * C64::from_polar(1.0, m.n as f64 * theta);
        }
        Ok(acc)
    }
}

/// Node-wise Cauchy product of two scalar expansions, all output modes kept.
pub fn convolve_modes(a: &ScalarExpansion, b: &ScalarExpansion) -> Result<ScalarExpansion> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch("expansions live on different grids"));
    }
    let mut out: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
    for (&p, x) in &a.modes {
        for (&q, y) in &b.modes {
            let acc = out.entry(p + q).or_insert_with(|| vec![ZERO; a.grid.len()]);
            for ((o, u), v) in acc.iter_mut().zip(&x.values).zip(&y.values) {
                *o += u * v;
            }
        }
    }
    Ok(ScalarExpansion {
        grid: a.grid.clone(),
        modes: out.into_iter().map(|(n, values)| (n, ModeScalar { n, grid: a.grid.clone(), values })).collect(),
    })
}

/// `(1/2π) ∫ v(r, θ) e^{-inθ} dθ` at every node by the periodic trapezoid rule.
///
/// `sampler(r, θ)` returns the polar components `(v_r, v_θ)`.
pub fn project_mode<F>(sampler: F, n: i32, grid: &Arc<RadialGrid>, n_quad: usize) -> Result<ModeVector>
where
    F: Fn(f64, f64) -> [f64; 2] + Sync,
{
    if n_quad == 0 || (n_quad as i64) < 4 * (n.unsigned_abs() as i64) {
        return Err(Error::InvalidParameter(format!("n_quad = {n_quad} too small for mode {n}")));
    }
    let mut out = project_field(sampler, &[n], grid, n_quad)?;
    Ok(out.modes.remove(&n).expect("requested mode is present"))
}

/// Projects onto every index in `modes`, sampling the field once per node.
pub fn project_field<F>(sampler: F, modes: &[i32], grid: &Arc<RadialGrid>, n_quad: usize) -> Result<FieldExpansion>
where
    F: Fn(f64, f64) -> [f64; 2] + Sync,
{
    if n_quad == 0 {
        return Err(Error::InvalidParameter("n_quad must be positive".into()));
    }
    let thetas: Vec<f64> = (0..n_quad).map(|k| 2.0 * PI * k as f64 / n_quad as f64).collect();
    // one row per node: coefficients for every requested mode
    let rows: Vec<Result<Vec<(C64, C64)>>> = grid
        .nodes()
        .par_iter()
        .map(|&r| {
            let samples: Vec<[f64; 2]> = thetas.iter().map(|&t| sampler(r, t)).collect();
            for (s, &theta) in samples.iter().zip(&thetas) {
                if !(s[0].is_finite() && s[1].is_finite()) {
                    return Err(Error::NonFinite { what: "sampled field", r, theta });
                }
            }
            Ok(modes
                .iter()
                .map(|&n| {
                    let mut a = ZERO;
                    let mut b = ZERO;
                    for (s, &theta) in samples.iter().zip(&thetas) {
                        let e = C64::from_polar(1.0, -(n as f64) * theta);
                        a += e * s[0];
                        b += e * s[1];
                    }
                    (a / n_quad as f64, b / n_quad as f64)
                })
                .collect())
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = FieldExpansion::new(grid.clone());
    for (k, &n) in modes.iter().enumerate() {
        let (v_r, v_theta) = rows.iter().map(|row| row[k]).unzip();
        out.insert(ModeVector { n, grid: grid.clone(), v_r, v_theta })?;
    }
    Ok(out)
}

/// Complex polar components `Σ_n v_n(r) e^{inθ}`.
pub fn synthesize_complex(e: &FieldExpansion, r: f64, theta: f64, how: Interpolation) -> Result<(C64, C64)> {
    let mut a = ZERO;
    let mut b = ZERO;
    if !(r >= 1.0 - 1e-12 && r <= e.grid.r_max() * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { r, r_max: e.grid.r_max() });
    }
    for m in e.modes.values() {
        let phase = C64::from_polar(1.0, m.n as f64 * theta);
        let (x, y) = m.at(r, how)?;
        a += x * phase;
        b += y * phase;
    }
    Ok((a, b))
}

/// Real polar components `(v_r, v_θ)` of the synthesized field.
pub fn synthesize(e: &FieldExpansion, r: f64, theta: f64) -> Result<[f64; 2]> {
    let (a, b) = synthesize_complex(e, r, theta, Interpolation::default())?;
    Ok([a.re, b.re])
}

/// Polar `(v_r, v_θ)` at angle `θ` to Cartesian `(v_x, v_y)`.
pub fn polar_to_cartesian(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c]
}

/// Cartesian `(v_x, v_y)` to polar `(v_r, v_θ)` at angle `θ`.
pub fn cartesian_to_polar(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [v[0] * c + v[1] * s, -v[0] * s + v[1] * c]
}

/// `(1/r) d/dr (r v_θ) - (in/r) v_r`.
pub fn rot_mode(v: &ModeVector) -> ModeScalar {
    let grid = &v.grid;
    let r_vt: Vec<C64> = grid.nodes().iter().zip(&v.v_theta).map(|(&r, x)| x * r).collect();
    let d = grid.derivative(&r_vt);
    let i_n = C64::new(0.0, v.n as f64);
    let values = grid.nodes().iter().enumerate().map(|(j, &r)| (d[j] - i_n * v.v_r[j]) / r).collect();
    ModeScalar { n: v.n, grid: grid.clone(), values }
}

/// `(1/r) d/dr (r v_r) + (in/r) v_θ`.
pub fn div_mode(v: &ModeVector) -> ModeScalar {
    let grid = &v.grid;
    let r_vr: Vec<C64> = grid.nodes().iter().zip(&v.v_r).map(|(&r, x)| x * r).collect();
    let d = grid.derivative(&r_vr);
    let i_n = C64::new(0.0, v.n as f64);
    let values = grid.nodes().iter().enumerate().map(|(j, &r)| (d[j] + i_n * v.v_theta[j]) / r).collect();
    ModeScalar { n: v.n, grid: grid.clone(), values }
}

pub fn weighted_sup_norm_scalar(m: &ModeScalar, s: f64) -> f64 {
    m.weighted_sup_norm(s)
}

pub fn weighted_sup_norm_vector(m: &ModeVector, s: f64) -> f64 {
    m.weighted_sup_norm(s)
}

/// `Σ_n ‖v_n‖_{L^∞_s}`.
pub fn l1_weighted_norm(e: &FieldExpansion, s: f64) -> f64 {
    e.modes.values().map(|m| m.weighted_sup_norm(s)).sum()
}

/// `Σ_n ‖∇v_n‖_{L^∞_s}`.
pub fn l1_gradient_norm(e: &FieldExpansion, s: f64) -> f64 {
    e.modes.values().map(|m| m.gradient_sup_norm(s)).sum()
}

/// Discrete `‖w‖_{l¹L^∞_{ρ-1}} + ‖∇w‖_{l¹L^∞_ρ}`.
pub fn x_rho_norm(e: &FieldExpansion, rho: f64) -> f64 {
    l1_weighted_norm(e, rho - 1.0) + l1_gradient_norm(e, rho)
}

fn format_header(n: i32, phys: &PhysParams) -> String {
    format!("# n={} gamma={} alpha={}", n, phys.gamma, phys.alpha)
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

/// Header metadata of a mode CSV file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvHeader {
    pub n: i32,
    pub gamma: f64,
    pub alpha: f64,
}

fn parse_header(line: &str) -> Result<CsvHeader> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("missing '# n=...' header line, got {line:?}")))?;
    let mut n = None;
    let mut gamma = None;
    let mut alpha = None;
    for token in body.split_whitespace() {
        let (key, value) =
            token.split_once('=').ok_or_else(|| Error::Parse(format!("malformed header token {token:?}")))?;
        let bad = |_| Error::Parse(format!("bad header value {token:?}"));
        match key {
            "n" => n = Some(value.parse::<i32>().map_err(|e| bad(e.to_string()))?),
            "gamma" => gamma = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "alpha" => alpha = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
        }
    }
    match (n, gamma, alpha) {
        (Some(n), Some(gamma), Some(alpha)) => Ok(CsvHeader { n, gamma, alpha }),
        _ => Err(Error::Parse("header must carry n, gamma and alpha".into())),
    }
}

fn read_table<R: BufRead>(mut reader: R, columns: &[&str]) -> Result<(CsvHeader, Vec<Vec<f64>>)> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(&first)?;
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names = csv.headers()?.clone();
    if names.iter().ne(columns.iter().copied()) {
        return Err(Error::Parse(format!("expected columns {columns:?}, got {names:?}")));
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_scalar_csv<W: Write>(mut out: W, m: &ModeScalar, phys: &PhysParams) -> Result<()> {
    writeln!(out, "{}", format_header(m.n, phys))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "re", "im"])?;
    for (&r, v) in m.grid.nodes().iter().zip(&m.values) {
        w.write_record([fmt(r), fmt(v.re), fmt(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv<W: Write>(mut out: W, m: &ModeVector, phys: &PhysParams) -> Result<()> {
    writeln!(out, "{}", format_header(m.n, phys))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "re_vr", "im_vr", "re_vtheta", "im_vtheta"])?;
    for ((&r, a), b) in m.grid.nodes().iter().zip(&m.v_r).zip(&m.v_theta) {
        w.write_record([fmt(r), fmt(a.re), fmt(a.im), fmt(b.re), fmt(b.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scalar_csv<R: BufRead>(reader: R) -> Result<(CsvHeader, ModeScalar)> {
    let (header, rows) = read_table(reader, &["r", "re", "im"])?;
    let grid = Arc::new(RadialGrid::from_nodes(rows.iter().map(|r| r[0]).collect())?);
    let values = rows.iter().map(|r| C64::new(r[1], r[2])).collect();
    Ok((header, ModeScalar::new(header.n, grid, values)?))
}

pub fn read_vector_csv<R: BufRead>(reader: R) -> Result<(CsvHeader, ModeVector)> {
    let (header, rows) = read_table(reader, &["r", "re_vr", "im_vr", "re_vtheta", "im_vtheta"])?;
    let grid = Arc::new(RadialGrid::from_nodes(rows.iter().map(|r| r[0]).collect())?);
    let v_r = rows.iter().map(|r| C64::new(r[1], r[2])).collect();
    let v_theta = rows.iter().map(|r| C64::new(r[3], r[4])).collect();
    Ok((header, ModeVector::new(header.n, grid, v_r, v_theta)?))
}

impl ModeVector {
    /// Same profile on another grid object with identical nodes.
    pub fn rebind(self, grid: Arc<RadialGrid>) -> Result<Self> {
        if *grid != *self.grid {
            return Err(Error::GridMismatch("node sets differ"));
        }
        Ok(Self { grid, ..self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::shared(1.0e4, 512).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn project_rotation_field() {
        let g = grid();
        let u = |r: f64, _t: f64| [0.0, 1.0 / r];
        let m0 = project_mode(u, 0, &g, 32).unwrap();
        for (j, &r) in g.nodes().iter().enumerate() {
            assert!(m0.v_r()[j].norm() < 1e-15);
            assert_abs_diff_eq!(m0.v_theta()[j].re, 1.0 / r, epsilon = 1e-15);
        }
        assert!(project_mode(u, 1, &g, 32).unwrap().weighted_sup_norm(0.0) < 1e-15);
    }

    #[test]
    fn cosine_radial_field_splits_into_two_modes() {
        let g = grid();
        let f = |_r: f64, t: f64| [t.cos(), 0.0];
        for n in [-1, 1] {
            let m = project_mode(f, n, &g, 16).unwrap();
            assert!(m.v_r().iter().all(|v| (v - c(0.5)).norm() < 1e-15));
            assert!(m.v_theta().iter().all(|v| v.norm() < 1e-15));
        }
    }

    #[test]
    fn projection_rejects_non_finite_samples() {
        let g = grid();
        let err = project_mode(|r, _| [if r > 100.0 { f64::NAN } else { 0.0 }, 0.0], 0, &g, 8).unwrap_err();
        match err {
            Error::NonFinite { r, .. } => assert!(r > 100.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn synthesis_inverts_projection_for_band_limited_fields() {
        let g = grid();
        let field = |r: f64, t: f64| [(2.0 * t).sin() / (r * r) + 0.3 / r, (t.cos() - 0.5 * (3.0 * t).cos()) / r];
        let e = project_field(field, &(-4..=4).collect::<Vec<_>>(), &g, 32).unwrap();
        for &(r, t) in &[(1.0, 0.3), (2.5, 4.0), (77.0, 1.0)] {
            let v = synthesize(&e, r, t).unwrap();
            let exact = field(r, t);
            assert_abs_diff_eq!(v[0], exact[0], epsilon = 1e-11);
            assert_abs_diff_eq!(v[1], exact[1], epsilon = 1e-11);
        }
        assert!(e.conjugate_symmetry_defect() < 1e-15);
        assert_eq!(synthesize(&FieldExpansion::new(g.clone()), 3.0, 1.0).unwrap(), [0.0, 0.0]);
        assert!(synthesize(&e, 0.9, 0.0).is_err());
    }

    #[test]
    fn rot_and_div_of_background_flows_vanish() {
        let g = grid();
        let u = ModeVector::from_fn(0, g.clone(), |r| (c(0.0), c(1.0 / r))).unwrap();
        let w = ModeVector::from_fn(0, g.clone(), |r| (c(1.0 / r), c(0.0))).unwrap();
        assert!(rot_mode(&u).weighted_sup_norm(0.0) < 1e-12);
        assert!(rot_mode(&w).weighted_sup_norm(0.0) < 1e-12);
        assert!(div_mode(&w).weighted_sup_norm(0.0) < 1e-12);
        let lin = ModeVector::from_fn(0, g.clone(), |r| (c(r), c(0.0))).unwrap();
        let d = div_mode(&lin);
        assert!(d.values().iter().all(|v| (v - c(2.0)).norm() < 1e-8));
    }

    #[test]
    fn rot_of_log_profile_is_second_order() {
        // r v_θ = log r, so rot v = r^{-2}
        let err = |m: usize| {
            let g = RadialGrid::shared(100.0, m).unwrap();
            let v = ModeVector::from_fn(0, g.clone(), |r| (c(0.0), c(r.ln() / r))).unwrap();
            let w = rot_mode(&v);
            g.nodes().iter().zip(w.values()).map(|(&r, x)| (x.re - 1.0 / (r * r)).abs()).fold(0.0, f64::max)
        };
        let order = (err(257) / err(513)).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn weighted_norms() {
        let g = grid();
        let w = ModeScalar::from_fn(0, g.clone(), |r| c(r.powi(-3))).unwrap();
        assert_abs_diff_eq!(w.weighted_sup_norm(3.0), 1.0, epsilon = 1e-12);
        let u = ModeVector::from_fn(0, g.clone(), |r| (c(0.0), c(1.0 / r))).unwrap();
        assert_abs_diff_eq!(u.weighted_sup_norm(1.0), 1.0, epsilon = 1e-12);
        let l = ModeScalar::from_fn(0, g.clone(), |r| c(r.ln() / (r * r))).unwrap();
        assert_abs_diff_eq!(l.weighted_sup_norm(2.0), 1.0e4f64.ln(), epsilon = 1e-9);

        let mut e = FieldExpansion::new(g.clone());
        e.insert(u.clone()).unwrap();
        assert_abs_diff_eq!(l1_weighted_norm(&e, 1.0), 1.0, epsilon = 1e-12);
        e.insert(ModeVector::from_fn(2, g.clone(), |r| (c(2.0 / r), c(0.0))).unwrap()).unwrap();
        assert_abs_diff_eq!(l1_weighted_norm(&e, 1.0), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::shared(1.0e3, 40).unwrap();
        let phys = PhysParams::new(1.0, 3.0).unwrap();
        let v = ModeVector::from_fn(-2, g.clone(), |r| (C64::new(1.0 / r, 0.1), C64::new(-r.ln(), 1.0 / 3.0))).unwrap();
        let mut buf = Vec::new();
        write_vector_csv(&mut buf, &v, &phys).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n=-2 gamma=3 alpha=1\nr,re_vr,im_vr,re_vtheta,im_vtheta\n"));
        let (h, back) = read_vector_csv(&buf[..]).unwrap();
        assert_eq!(h, CsvHeader { n: -2, gamma: 3.0, alpha: 1.0 });
        assert_eq!(back, v);

        let s = ModeScalar::from_fn(3, g.clone(), |r| C64::new(r.sqrt(), -1.0 / r)).unwrap();
        let mut buf = Vec::new();
        write_scalar_csv(&mut buf, &s, &phys).unwrap();
        assert_eq!(read_scalar_csv(&buf[..]).unwrap().1, s);
        assert!(read_scalar_csv(&b"r,re,im\n1,0,0\n"[..]).is_err());
    }

    fn random_expansion(seed: &[(i32, f64, f64, f64)], g: &Arc<RadialGrid>) -> ScalarExpansion {
        ScalarExpansion::from_modes(
            g.clone(),
            seed.iter().map(|&(n, a, b, p)| ModeScalar::from_fn(n, g.clone(), |r| C64::new(a, b) * r.powf(-p)).unwrap()),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_of_real_fields(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 1i32..4) {
            let g = RadialGrid::shared(200.0, 64).unwrap();
            let f = move |r: f64, t: f64| [a * (k as f64 * t).cos() / r, b * (k as f64 * t + 0.4).sin() / (r * r)];
            let plus = project_mode(f, k, &g, 32).unwrap();
            let minus = project_mode(f, -k, &g, 32).unwrap();
            for j in 0..g.len() {
                prop_assert!((plus.v_r()[j] - minus.v_r()[j].conj()).norm() < 1e-15);
                prop_assert!((plus.v_theta()[j] - minus.v_theta()[j].conj()).norm() < 1e-15);
            }
        }

        #[test]
        fn l1_norm_is_subadditive(x in proptest::collection::vec((-3i32..=3, -1.0f64..1.0, -1.0f64..1.0), 1..5),
                                  y in proptest::collection::vec((-3i32..=3, -1.0f64..1.0, -1.0f64..1.0), 1..5)) {
            let g = RadialGrid::shared(200.0, 32).unwrap();
            let build = |s: &[(i32, f64, f64)]| {
                let mut e = FieldExpansion::new(g.clone());
                for &(n, a, b) in s {
                    e.insert(ModeVector::from_fn(n, g.clone(), |r| (C64::new(a, b) / r, C64::new(b, a) / (r * r))).unwrap()).unwrap();
                }
                e
            };
            let (ex, ey) = (build(&x), build(&y));
            let sum = ex.axpy(1.0, &ey).unwrap();
            prop_assert!(l1_weighted_norm(&sum, 1.0) <= l1_weighted_norm(&ex, 1.0) + l1_weighted_norm(&ey, 1.0) + 1e-12);
        }

        #[test]
        fn convolution_satisfies_young(x in proptest::collection::vec((-3i32..=3, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..3.0), 1..5),
                                       y in proptest::collection::vec((-3i32..=3, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..3.0), 1..5)) {
            let g = RadialGrid::shared(200.0, 32).unwrap();
            let (a, b) = (random_expansion(&x, &g), random_expansion(&y, &g));
            let p = convolve_modes(&a, &b).unwrap();
            prop_assert!(p.l1_weighted_norm(3.0) <= a.l1_weighted_norm(1.0) * b.l1_weighted_norm(2.0) * (1.0 + 1e-12));
        }
    }
}
