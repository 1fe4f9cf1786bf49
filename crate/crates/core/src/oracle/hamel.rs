//! The explicit force-free family `αU − γW + tA` with
//! `A = (1 − r^{2-γ})/(γ-2) · U`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::polar_to_cartesian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamelParams {
    pub alpha: f64,
    pub gamma: f64,
    pub t: f64,
}

impl HamelParams {
    pub fn new(alpha: f64, gamma: f64, t: f64) -> Result<Self> {
        if !(gamma > 2.0) || !alpha.is_finite() || !t.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("Hamel family requires gamma > 2 (got {gamma})")));
        }
        Ok(Self { alpha, gamma, t })
    }

    /// Angular profile `a(r)` of `A = a(r) e_θ`.
    fn a(&self, r: f64) -> f64 {
        (1.0 / r - r.powf(1.0 - self.gamma)) / (self.gamma - 2.0)
    }

    fn a_prime(&self, r: f64) -> f64 {
        (-1.0 / (r * r) + (self.gamma - 1.0) * r.powf(-self.gamma)) / (self.gamma - 2.0)
    }

    /// `(u_r, u_θ)`.
    pub fn velocity_polar(&self, r: f64) -> [f64; 2] {
        [-self.gamma / r, self.alpha / r + self.t * self.a(r)]
    }

    /// Cartesian components at polar position `(r, θ)`.
    pub fn velocity(&self, r: f64, theta: f64) -> [f64; 2] {
        polar_to_cartesian(self.velocity_polar(r), theta)
    }

    pub fn velocity_cartesian(&self, x: f64, y: f64) -> [f64; 2] {
        self.velocity(x.hypot(y), y.atan2(x))
    }

    /// `dQ/dr`; `∇Q` is radial.
    pub fn pressure_gradient_radial(&self, r: f64) -> f64 {
        let (g, al, t) = (self.gamma, self.alpha, self.t);
        let [u_r, u_t] = self.velocity_polar(r);
        let d_kinetic = u_r * (g / (r * r)) + u_t * (-al / (r * r) + t * self.a_prime(r));
        let d_corr = -t * r.powf(-g - 1.0) * (al + t / (g - 2.0)) + t * t * r.powf(1.0 - 2.0 * g) / (g - 2.0);
        -d_kinetic - d_corr
    }

    pub fn pressure_gradient(&self, r: f64, theta: f64) -> [f64; 2] {
        polar_to_cartesian([self.pressure_gradient_radial(r), 0.0], theta)
    }

    pub fn pressure_gradient_cartesian(&self, x: f64, y: f64) -> [f64; 2] {
        self.pressure_gradient(x.hypot(y), y.atan2(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::loglog_fit;
    use approx::assert_relative_eq;

    #[test]
    fn background_when_t_vanishes() {
        let h = HamelParams::new(1.5, 3.0, 0.0).unwrap();
        assert_eq!(h.velocity_polar(2.0), [-1.5, 0.75]);
        // ∇P = (α² + γ²)/r³
        assert_relative_eq!(h.pressure_gradient_radial(2.0), (1.5f64.powi(2) + 9.0) / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn boundary_value_is_independent_of_t() {
        for t in [-2.0, 0.5, 3.0] {
            assert_eq!(HamelParams::new(1.0, 3.5, t).unwrap().velocity_polar(1.0), [-3.5, 1.0]);
        }
    }

    #[test]
    fn angular_profile_example() {
        let h = HamelParams::new(0.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(h.velocity_polar(2.0)[1], 0.25, max_relative = 1e-15);
    }

    #[test]
    fn correction_term_matches_finite_difference() {
        let (al, g, t) = (0.7, 4.0, 1.0);
        let h = HamelParams::new(al, g, t).unwrap();
        let kinetic = |r: f64| {
            let [a, b] = h.velocity_polar(r);
            0.5 * (a * a + b * b)
        };
        let b = |r: f64| t * r.powf(-g) * (al / g + t / (g - 2.0) * (1.0 / g - r.powf(2.0 - g) / (2.0 * (g - 1.0))));
        let q = |r: f64| -kinetic(r) - b(r);
        for r in [1.0, 1.7, 5.0] {
            let e = 1e-5;
            let fd = (q(r + e) - q(r - e)) / (2.0 * e);
            assert_relative_eq!(h.pressure_gradient_radial(r), fd, max_relative = 1e-8);
        }
        // at r = 1 with γ = 4 the correction contributes α
        let bprime_at_one = (b(1.0 + 1e-6) - b(1.0 - 1e-6)) / 2e-6;
        assert_relative_eq!(-bprime_at_one, al, max_relative = 1e-8);
    }

    #[test]
    fn pressure_gradient_decays_at_least_cubically() {
        let h = HamelParams::new(1.0, 3.0, 1.0).unwrap();
        let r: Vec<f64> = (0..20).map(|k| 1e3 * 1.3f64.powi(k)).collect();
        let g: Vec<f64> = r.iter().map(|&r| h.pressure_gradient_radial(r).abs()).collect();
        assert!(loglog_fit(&r, &g).unwrap().slope <= -3.0 + 1e-3);
    }

    #[test]
    fn rejects_gamma_two() {
        assert!(HamelParams::new(1.0, 2.0, 1.0).is_err());
    }
}
