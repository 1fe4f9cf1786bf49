//! Logarithmically spaced radial grid on `[1, r_max]`.
//!
//! All radial profiles in the crate live on one of these grids. Because the
//! nodes are uniform in `t = ln r`, power laws `r^a` become exponentials in `t`
//! and the quadrature and interpolation rules work in that variable.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Width of the Lagrange stencil used for interpolation and quadrature.
pub(crate) const STENCIL: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    log_step: f64,
}

/// How values are evaluated between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Six-point Lagrange interpolation in `ln r`.
    #[default]
    Lagrange,
    /// Geometric (linear in log-magnitude and phase) between neighbouring
    /// nodes, linear in value near zeros.
    LogLinear,
}

impl RadialGrid {
    pub fn logarithmic(r_max: f64, m_nodes: usize) -> Result<Self> {
        if !(r_max > 1.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_max must exceed 1, got {r_max}")));
        }
        if m_nodes < STENCIL {
            return Err(Error::InvalidParameter(format!(
                "a radial grid needs at least {STENCIL} nodes, got {m_nodes}"
            )));
        }
        let log_step = r_max.ln() / (m_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..m_nodes).map(|j| (j as f64 * log_step).exp()).collect();
        nodes[0] = 1.0;
        nodes[m_nodes - 1] = r_max;
        Ok(Self { nodes, log_step })
    }

    pub fn shared(r_max: f64, m_nodes: usize) -> Result<Arc<Self>> {
        Self::logarithmic(r_max, m_nodes).map(Arc::new)
    }

    /// Rebuilds a grid from node radii, e.g. when reading a profile back from
    /// disk. The nodes must start at 1 and be uniformly spaced in `ln r`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < STENCIL {
            return Err(Error::Parse(format!("need at least {STENCIL} nodes, got {}", nodes.len())));
        }
        if nodes[0] != 1.0 {
            return Err(Error::Parse(format!("first node must be exactly 1, got {}", nodes[0])));
        }
        let m = nodes.len();
        let log_step = nodes[m - 1].ln() / (m - 1) as f64;
        for (j, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Parse(format!("nodes not strictly increasing at index {j}")));
            }
            let step = (w[1] / w[0]).ln();
            if (step - log_step).abs() > 1e-8 * log_step.max(1e-300) + 1e-12 {
                return Err(Error::Parse(format!("nodes not logarithmically spaced at index {j}")));
            }
        }
        Ok(Self { nodes, log_step })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Uniform spacing in `ln r`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    /// Grid with the same range and every interval halved.
    pub fn refined(&self) -> Self {
        Self::logarithmic(self.r_max(), 2 * self.len() - 1).expect("refining a valid grid")
    }

    /// Indices of nodes with `lo <= r <= hi`.
    pub fn indices_within(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.nodes.partition_point(|&r| r < lo);
        let end = self.nodes.partition_point(|&r| r <= hi);
        start..end.max(start)
    }

    /// First derivative in `r`: three-point stencils on the non-uniform nodes,
    /// second-order one-sided stencils at both ends.
    pub fn derivative(&self, f: &[C64]) -> Vec<C64> {
        let x = &self.nodes;
        let m = x.len();
        assert_eq!(f.len(), m, "profile length must match the grid");
        let mut out = vec![C64::new(0.0, 0.0); m];
        for i in 1..m - 1 {
            let h1 = x[i] - x[i - 1];
            let h2 = x[i + 1] - x[i];
            out[i] = f[i - 1] * (-h2 / (h1 * (h1 + h2)))
                + f[i] * ((h2 - h1) / (h1 * h2))
                + f[i + 1] * (h1 / (h2 * (h1 + h2)));
        }
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        out[0] = f[0] * (-(2.0 * h1 + h2) / (h1 * (h1 + h2)))
            + f[1] * ((h1 + h2) / (h1 * h2))
            - f[2] * (h1 / (h2 * (h1 + h2)));
        let (h1, h2) = (x[m - 2] - x[m - 3], x[m - 1] - x[m - 2]);
        out[m - 1] = f[m - 3] * (h2 / (h1 * (h1 + h2))) - f[m - 2] * ((h1 + h2) / (h1 * h2))
            + f[m - 1] * ((2.0 * h2 + h1) / (h2 * (h1 + h2)));
        out
    }

    fn check_range(&self, r: f64) -> Result<f64> {
        let r_max = self.r_max();
        let slack = 1e-12;
        if !(r >= 1.0 - slack && r <= r_max * (1.0 + slack)) {
            return Err(Error::OutOfRange { r, r_max });
        }
        Ok(r.clamp(1.0, r_max))
    }

    /// Evaluates a nodal profile at an arbitrary radius in `[1, r_max]`.
    pub fn interpolate(&self, f: &[C64], r: f64, how: Interpolation) -> Result<C64> {
        let r = self.check_range(r)?;
        let m = self.len();
        let t = r.ln() / self.log_step;
        let j = (t.floor() as usize).min(m - 2);
        let s = t - j as f64;
        match how {
            Interpolation::Lagrange => {
                let start = j.saturating_sub(2).min(m - STENCIL);
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..STENCIL {
                    let xi = (start + i) as f64 - j as f64;
                    let mut w = 1.0;
                    for q in 0..STENCIL {
                        if q != i {
                            let xq = (start + q) as f64 - j as f64;
                            w *= (s - xq) / (xi - xq);
                        }
                    }
                    acc += f[start + i] * w;
                }
                Ok(acc)
            }
            Interpolation::LogLinear => {
                let (a, b) = (f[j], f[j + 1]);
                let linear = a + (b - a) * s;
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    return Ok(linear);
                }
                let ratio = b / a;
                // near a zero or a sign flip the geometric path is meaningless
                if ratio.norm() > 4.0 || ratio.norm() < 0.25 || ratio.arg().abs() > 1.0 {
                    return Ok(linear);
                }
                Ok(a * (ratio.ln() * s).exp())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::logarithmic(1.0e4, 513).unwrap()
    }

    #[test]
    fn endpoints_and_spacing() {
        let g = grid();
        assert_eq!(g.r(0), 1.0);
        assert_eq!(g.r_max(), 1.0e4);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] / w[0]).ln() - g.log_step()).abs() < 1e-12);
        }
    }

    #[test]
    fn from_nodes_round_trip() {
        let g = grid();
        let h = RadialGrid::from_nodes(g.nodes().to_vec()).unwrap();
        assert_eq!(g, h);
        let mut bad = g.nodes().to_vec();
        bad[10] *= 1.001;
        assert!(RadialGrid::from_nodes(bad).is_err());
    }

    #[test]
    fn derivative_is_second_order() {
        let err = |m: usize| {
            let g = RadialGrid::logarithmic(100.0, m).unwrap();
            let f: Vec<C64> = g.nodes().iter().map(|&r| C64::new(r.ln() / r, 0.0)).collect();
            let d = g.derivative(&f);
            g.nodes()
                .iter()
                .zip(&d)
                .map(|(&r, d)| (d.re - (1.0 - r.ln()) / (r * r)).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(201) / err(401)).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn lagrange_interpolation_is_accurate() {
        let g = grid();
        let f: Vec<C64> = g.nodes().iter().map(|&r| C64::new(1.0 / r, r.powf(-2.5))).collect();
        for &r in &[1.0, 1.0001, 2.0, 3.7, 999.0, 1.0e4] {
            let v = g.interpolate(&f, r, Interpolation::Lagrange).unwrap();
            assert!((v - C64::new(1.0 / r, r.powf(-2.5))).norm() < 1e-10 / r, "r={r}");
        }
        assert!(g.interpolate(&f, 0.5, Interpolation::Lagrange).is_err());
        assert!(g.interpolate(&f, 2.0e4, Interpolation::Lagrange).is_err());
    }

    #[test]
    fn log_linear_is_exact_for_powers() {
        let g = grid();
        let f: Vec<C64> = g.nodes().iter().map(|&r| C64::new(r.powf(-3.0), 0.0)).collect();
        let v = g.interpolate(&f, 5.5, Interpolation::LogLinear).unwrap();
        assert!((v.re - 5.5f64.powf(-3.0)).abs() < 1e-14);
    }

    #[test]
    fn indices_within_bounds() {
        let g = grid();
        let range = g.indices_within(10.0, 100.0);
        assert!(g.r(range.start) >= 10.0 && g.r(range.start - 1) < 10.0);
        assert!(g.r(range.end - 1) <= 100.0 && g.r(range.end) > 100.0);
    }
}
