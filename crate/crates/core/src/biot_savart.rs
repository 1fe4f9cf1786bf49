//! Mode-wise streamfunction and velocity reconstruction from vorticity.
//!
//! For `|n| ≥ 1` the decaying solution of
//! `-ψ'' - ψ'/r + n²ψ/r² = ω` with `ψ(1) = 0` is
//!
//! ```text
//!   ψ = (1/2|n|) ( -d r^{-|n|} + r^{-|n|} ∫_1^r s^{|n|+1} ω ds + r^{|n|} ∫_r^∞ s^{1-|n|} ω ds )
//! ```
//!
//! with `d = ∫_1^∞ s^{1-|n|} ω ds`. Both integrals are cumulative
//! exponential-kernel integrals of `g = r² ω` in `ln r`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{ModeScalar, ModeVector};
use crate::quadrature::{backward_to_infinity, cumulative_forward};

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunctionMode {
    pub n: i32,
    pub psi: ModeScalar,
    pub d_n_value: C64,
    /// `-dψ/dr` from the differentiated integral formula.
    pub v_theta: Vec<C64>,
}

fn check_mode(omega: &ModeScalar) -> Result<i32> {
    match omega.n() {
        0 => Err(Error::InvalidMode { n: 0, reason: "Biot-Savart reconstruction needs |n| >= 1" }),
        n => Ok(n),
    }
}

fn weighted_profile(omega: &ModeScalar) -> Vec<C64> {
    omega.grid().nodes().iter().zip(omega.values()).map(|(&r, w)| w * (r * r)).collect()
}

/// `d_n[ω] = ∫_1^∞ s^{1-|n|} ω(s) ds`, closed beyond `r_max` with the fitted
/// power-law tail. Fails if `ω` decays no faster than `r^{2-|n|}`.
pub fn d_n_functional(omega: &ModeScalar) -> Result<C64> {
    let n = check_mode(omega)?;
    let g = weighted_profile(omega);
    let b = backward_to_infinity(omega.grid(), &g, C64::new(n.abs() as f64, 0.0), "d_n functional")?;
    Ok(b[0])
}

pub fn streamfunction(omega: &ModeScalar) -> Result<StreamFunctionMode> {
    let n = check_mode(omega)?;
    let grid = omega.grid();
    let k = n.abs() as f64;
    let g = weighted_profile(omega);
    let a = cumulative_forward(grid, &g, C64::new(k, 0.0));
    let b = backward_to_infinity(grid, &g, C64::new(k, 0.0), "d_n functional")?;
    let d = b[0];
    let mut psi = Vec::with_capacity(grid.len());
    let mut v_theta = Vec::with_capacity(grid.len());
    for (j, &r) in grid.nodes().iter().enumerate() {
        let hom = d * r.powf(-k);
        psi.push((a[j] + b[j] - hom) / (2.0 * k));
        v_theta.push((a[j] - b[j] - hom) / (2.0 * r));
    }
    psi[0] = C64::new(0.0, 0.0);
    Ok(StreamFunctionMode { n, psi: ModeScalar::new(n, grid.clone(), psi)?, d_n_value: d, v_theta })
}

/// `V_r = (in/r) ψ`, `V_θ = -dψ/dr`.
pub fn biot_savart(omega: &ModeScalar) -> Result<ModeVector> {
    Ok(biot_savart_with_stream(omega)?.0)
}

/// Velocity together with the streamfunction it was built from.
pub fn biot_savart_with_stream(omega: &ModeScalar) -> Result<(ModeVector, StreamFunctionMode)> {
    let s = streamfunction(omega)?;
    let grid = omega.grid();
    let i_n = C64::new(0.0, s.n as f64);
    let v_r = grid.nodes().iter().zip(s.psi.values()).map(|(&r, p)| i_n * p / r).collect();
    let v = ModeVector::new(s.n, grid.clone(), v_r, s.v_theta.clone())?;
    Ok((v, s))
}
