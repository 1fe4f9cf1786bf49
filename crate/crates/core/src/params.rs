//! Physical constants and numerical controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Background flow `alpha U - gamma W`: rotation rate and suction flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl PhysParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let p = Self { alpha, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "requires gamma > 2, got gamma = {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Target decay exponent of the weighted norms.
    pub rho: f64,
    /// Modes `-n_max..=n_max` are kept.
    pub n_max: usize,
    pub r_max: f64,
    pub m_nodes: usize,
    /// Angular quadrature points for projections; `None` means `8 * n_max`.
    pub n_quad: Option<usize>,
    pub quad_tol: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Ball radius; `None` means `1 / (4 kappa)`.
    pub delta: Option<f64>,
    /// Calibration constant of the linear amplification bound.
    pub c0: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            rho: 2.5,
            n_max: 4,
            r_max: 1.0e4,
            m_nodes: 2048,
            n_quad: None,
            quad_tol: 1.0e-9,
            picard_tol: 1.0e-10,
            picard_max_iter: 60,
            delta: None,
            c0: 1.0,
        }
    }
}

impl SolverParams {
    pub fn n_quad(&self) -> usize {
        self.n_quad.unwrap_or(8 * self.n_max.max(1))
    }

    /// Checks the ranges shared by every solver. `nonlinear` additionally
    /// demands the strict `rho < 3` of the fixed-point argument.
    pub fn validate(&self, phys: &PhysParams, nonlinear: bool) -> Result<()> {
        phys.validate()?;
        let upper = phys.gamma.min(3.0);
        if !(self.rho > 2.0 && self.rho <= upper) {
            return Err(Error::InvalidParameter(format!(
                "requires 2 < rho <= min(gamma, 3) = {upper}, got rho = {}",
                self.rho
            )));
        }
        if nonlinear && self.rho >= 3.0 {
            return Err(Error::InvalidParameter(format!(
                "the nonlinear solver requires rho < 3, got rho = {}",
                self.rho
            )));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.r_max >= 100.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r_max must be at least 100, got {}",
                self.r_max
            )));
        }
        if self.m_nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "m_nodes must be at least 16, got {}",
                self.m_nodes
            )));
        }
        if self.n_quad() < 4 * self.n_max {
            return Err(Error::InvalidParameter(format!(
                "n_quad = {} must be at least 4 * n_max = {}",
                self.n_quad(),
                4 * self.n_max
            )));
        }
        for (name, v) in [("quad_tol", self.quad_tol), ("picard_tol", self.picard_tol), ("c0", self.c0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta must be positive, got {d}")));
            }
        }
        if self.picard_max_iter == 0 {
            return Err(Error::InvalidParameter("picard_max_iter must be positive".into()));
        }
        Ok(())
    }
}
