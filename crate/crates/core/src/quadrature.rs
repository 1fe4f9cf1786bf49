//! Cumulative integrals on a [`RadialGrid`] with exponential kernels.
//!
//! Every radial integral in the solvers has the shape
//!
//! ```text
//!   r^{-a} ∫_1^r s^{a} h(s) ds        or        r^{b} ∫_r^∞ s^{-b} h(s) ds
//! ```
//!
//! with a possibly complex exponent. In `t = ln r` both become
//! `∫ e^{-λ|τ - t|} g(τ) dτ`, which is accumulated node by node with the
//! kernel integrated exactly against a six-point Lagrange interpolant of `g`.
//! The power `r^{±λ}` is never formed on its own, so large `Re λ` cannot
//! overflow. Integrals to infinity are closed with a power-law tail fitted
//! over the last decade of the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, STENCIL};

type C64 = Complex64;

/// Smallest accepted `Re(λ + κ)` for a tail integral to count as convergent.
pub const TAIL_MARGIN: f64 = 0.05;

/// `E_k(x) = ∫_0^1 e^{x(s-1)} s^k ds` for `k < STENCIL`.
fn kernel_moments(x: C64) -> [C64; STENCIL] {
    let mut e = [C64::new(0.0, 0.0); STENCIL];
    if x.norm() < 2.0 {
        for (k, ek) in e.iter_mut().enumerate() {
            let mut term = C64::new(1.0 / (k as f64 + 1.0), 0.0);
            let mut sum = term;
            for m in 0..60 {
                term *= -x / (k as f64 + m as f64 + 2.0);
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            *ek = sum;
        }
    } else {
        e[0] = (C64::new(1.0, 0.0) - (-x).exp()) / x;
        for k in 1..STENCIL {
            e[k] = (C64::new(1.0, 0.0) - e[k - 1] * k as f64) / x;
        }
    }
    e
}

/// Monomial coefficients of the Lagrange basis polynomials on `nodes`.
fn lagrange_coefficients(nodes: &[f64; STENCIL]) -> [[f64; STENCIL]; STENCIL] {
    let mut out = [[0.0; STENCIL]; STENCIL];
    for (i, row) in out.iter_mut().enumerate() {
        let mut poly = [0.0; STENCIL];
        poly[0] = 1.0;
        let mut degree = 0;
        let mut denom = 1.0;
        for (q, &xq) in nodes.iter().enumerate() {
            if q == i {
                continue;
            }
            // poly *= (s - xq)
            for k in (0..=degree + 1).rev() {
                let shifted = if k > 0 { poly[k - 1] } else { 0.0 };
                poly[k] = shifted - xq * poly[k];
            }
            degree += 1;
            denom *= nodes[i] - xq;
        }
        for k in 0..STENCIL {
            row[k] = poly[k] / denom;
        }
    }
    out
}

/// Per-interval weights for one kernel rate. Interval `j` uses the stencil
/// starting at `clamp(j - 2, 0, m - STENCIL)`; only five offset patterns occur.
struct IntervalWeights {
    decay: C64,
    patterns: [[C64; STENCIL]; 5],
}

impl IntervalWeights {
    fn new(lambda: C64, h: f64, backward: bool) -> Self {
        let moments = kernel_moments(lambda * h);
        let mut patterns = [[C64::new(0.0, 0.0); STENCIL]; 5];
        for (p, pattern) in patterns.iter_mut().enumerate() {
            // position of stencil node i in units of h along the kernel variable
            let mut nodes = [0.0; STENCIL];
            for (i, x) in nodes.iter_mut().enumerate() {
                *x = if backward { p as f64 + 1.0 - i as f64 } else { i as f64 - p as f64 };
            }
            let coeffs = lagrange_coefficients(&nodes);
            for i in 0..STENCIL {
                let mut w = C64::new(0.0, 0.0);
                for k in 0..STENCIL {
                    w += moments[k] * coeffs[i][k];
                }
                pattern[i] = w * h;
            }
        }
        Self { decay: (-lambda * h).exp(), patterns }
    }

    fn local(&self, g: &[C64], j: usize) -> C64 {
        let m = g.len();
        let start = j.saturating_sub(2).min(m - STENCIL);
        let w = &self.patterns[j - start];
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..STENCIL {
            acc += w[i] * g[start + i];
        }
        acc
    }
}

/// `J(t_j) = ∫_0^{t_j} e^{λ(τ - t_j)} g(τ) dτ` at every node.
///
/// In radial terms, with `g(τ) = r^{a+1-λ} h(r)` this is
/// `r^{-λ} ∫_1^r s^{λ-1} ... ds`; callers fold the non-kernel powers into `g`.
pub fn cumulative_forward(grid: &RadialGrid, g: &[C64], lambda: C64) -> Vec<C64> {
    let m = grid.len();
    assert_eq!(g.len(), m);
    let weights = IntervalWeights::new(lambda, grid.log_step(), false);
    let mut out = vec![C64::new(0.0, 0.0); m];
    for j in 0..m - 1 {
        out[j + 1] = weights.decay * out[j] + weights.local(g, j);
    }
    out
}

/// `K(t_j) = ∫_{t_j}^{T} e^{-λ(τ - t_j)} g(τ) dτ + e^{-λ(T - t_j)} tail` at
/// every node, `T = ln r_max`.
pub fn cumulative_backward(grid: &RadialGrid, g: &[C64], lambda: C64, tail: C64) -> Vec<C64> {
    let m = grid.len();
    assert_eq!(g.len(), m);
    let weights = IntervalWeights::new(lambda, grid.log_step(), true);
    let mut out = vec![C64::new(0.0, 0.0); m];
    out[m - 1] = tail;
    for j in (0..m - 1).rev() {
        out[j] = weights.decay * out[j + 1] + weights.local(g, j);
    }
    out
}

/// Power-law fit `g(τ) ≈ g(T) e^{-κ (τ - T)}` over the last decade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Complex decay rate in `ln r`; `Re κ > 0` means decay.
    pub rate: C64,
    /// Value at the last node.
    pub value: C64,
}

impl TailFit {
    pub const ZERO: TailFit = TailFit { rate: C64::new(0.0, 0.0), value: C64::new(0.0, 0.0) };

    pub fn is_zero(&self) -> bool {
        self.value == C64::new(0.0, 0.0)
    }
}

/// Least-squares fit of `ln g` against `ln r` over nodes in `[r_max/10, r_max]`,
/// modulus and unwrapped phase separately.
pub fn fit_tail(grid: &RadialGrid, g: &[C64]) -> TailFit {
    let m = grid.len();
    let value = g[m - 1];
    let range = grid.indices_within(grid.r_max() / 10.0, grid.r_max());
    let range = if range.len() < 3 { m.saturating_sub(3)..m } else { range };
    if range.clone().all(|j| g[j].norm() == 0.0) {
        return TailFit::ZERO;
    }
    let h = grid.log_step();
    let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(range.len());
    let mut phase_offset = 0.0;
    let mut last_phase: Option<f64> = None;
    for j in range {
        let v = g[j];
        if v.norm() == 0.0 {
            continue;
        }
        let mut phase = v.arg() + phase_offset;
        if let Some(prev) = last_phase {
            while phase - prev > std::f64::consts::PI {
                phase -= 2.0 * std::f64::consts::PI;
                phase_offset -= 2.0 * std::f64::consts::PI;
            }
            while phase - prev < -std::f64::consts::PI {
                phase += 2.0 * std::f64::consts::PI;
                phase_offset += 2.0 * std::f64::consts::PI;
            }
        }
        last_phase = Some(phase);
        pts.push((j as f64 * h, v.norm().ln(), phase));
    }
    if pts.len() < 2 {
        return TailFit { rate: C64::new(0.0, 0.0), value };
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_a = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_p = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sta: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_a)).sum();
    let stp: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.2 - mean_p)).sum();
    TailFit { rate: -C64::new(sta / stt, stp / stt), value }
}

/// Backward cumulative integral closed with the fitted tail.
///
/// Fails when `Re(λ + κ)` is below [`TAIL_MARGIN`], i.e. the integral to
/// infinity would diverge.
pub fn backward_to_infinity(
    grid: &RadialGrid,
    g: &[C64],
    lambda: C64,
    what: &'static str,
) -> Result<Vec<C64>> {
    let fit = fit_tail(grid, g);
    let tail = if fit.is_zero() {
        C64::new(0.0, 0.0)
    } else {
        let total = lambda + fit.rate;
        if total.re <= TAIL_MARGIN {
            return Err(Error::DivergentIntegral { what, rate: fit.rate.re, kernel: lambda.re });
        }
        fit.value / total
    };
    Ok(cumulative_backward(grid, g, lambda, tail))
}

/// `∫_0^∞ e^{-λτ} g(τ) dτ`, i.e. the backward integral read at `r = 1`.
pub fn integral_to_infinity(grid: &RadialGrid, g: &[C64], lambda: C64, what: &'static str) -> Result<C64> {
    Ok(backward_to_infinity(grid, g, lambda, what)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn moments_series_and_recurrence_agree() {
        // both branches near the switch point, checked against direct quadrature
        for &x in &[C64::new(1.999, 0.3), C64::new(2.001, 0.3), C64::new(0.01, -0.02), C64::new(5.0, 7.0)] {
            let e = kernel_moments(x);
            for (k, ek) in e.iter().enumerate() {
                let n = 20000;
                let mut q = C64::new(0.0, 0.0);
                for i in 0..n {
                    let s = (i as f64 + 0.5) / n as f64;
                    q += (x * (s - 1.0)).exp() * s.powi(k as i32);
                }
                q /= n as f64;
                assert!((q - ek).norm() < 1e-8, "x={x} k={k}: {q} vs {ek}");
            }
        }
    }

    #[test]
    fn lagrange_basis_reproduces_polynomials() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let c = lagrange_coefficients(&nodes);
        for (i, &xi) in nodes.iter().enumerate() {
            for (q, &xq) in nodes.iter().enumerate() {
                let v: f64 = (0..STENCIL).map(|k| c[i][k] * xq.powi(k as i32)).sum();
                assert!((v - if i == q { 1.0 } else { 0.0 }).abs() < 1e-12, "{xi} {xq}");
            }
        }
    }

    #[test]
    fn forward_exponential_integral() {
        let grid = RadialGrid::logarithmic(1.0e4, 1025).unwrap();
        let lambda = C64::new(3.0, 2.0);
        let mu = -1.5;
        let g: Vec<C64> = (0..grid.len()).map(|j| c((mu * j as f64 * grid.log_step()).exp())).collect();
        let j = cumulative_forward(&grid, &g, lambda);
        for (k, v) in j.iter().enumerate() {
            let t = k as f64 * grid.log_step();
            let exact = ((mu * t).exp() - (-lambda * t).exp()) / (lambda + mu);
            assert!((v - exact).norm() < 1e-13, "t={t}: {v} vs {exact}");
        }
    }

    #[test]
    fn backward_with_fitted_tail_is_exact_for_powers() {
        let grid = RadialGrid::logarithmic(1.0e4, 1025).unwrap();
        let lambda = C64::new(1.0, 0.0);
        let kappa = C64::new(2.5, 0.7);
        let g: Vec<C64> = (0..grid.len()).map(|j| (-kappa * (j as f64 * grid.log_step())).exp()).collect();
        let k = backward_to_infinity(&grid, &g, lambda, "test").unwrap();
        for (j, v) in k.iter().enumerate() {
            let t = j as f64 * grid.log_step();
            let exact = (-kappa * t).exp() / (lambda + kappa);
            assert!((v - exact).norm() < 1e-12 * exact.norm().max(1e-30) + 1e-15, "t={t}");
        }
    }

    #[test]
    fn large_rates_do_not_overflow() {
        let grid = RadialGrid::logarithmic(1.0e4, 257).unwrap();
        let lambda = C64::new(400.0, 50.0);
        let g = vec![c(1.0); grid.len()];
        let j = cumulative_forward(&grid, &g, lambda);
        assert!(j.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        // far from r = 1 the value approaches 1 / lambda
        assert!((j[200] - C64::new(1.0, 0.0) / lambda).norm() < 1e-12);
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let grid = RadialGrid::logarithmic(1.0e4, 257).unwrap();
        let g: Vec<C64> = (0..grid.len()).map(|j| c((0.5 * j as f64 * grid.log_step()).exp())).collect();
        let err = integral_to_infinity(&grid, &g, c(0.2), "growing").unwrap_err();
        assert!(matches!(err, Error::DivergentIntegral { .. }));
    }

    #[test]
    fn zero_profile_has_zero_tail() {
        let grid = RadialGrid::logarithmic(1.0e3, 64).unwrap();
        let g = vec![c(0.0); grid.len()];
        assert!(fit_tail(&grid, &g).is_zero());
        assert_eq!(integral_to_infinity(&grid, &g, c(-5.0), "zero").unwrap(), c(0.0));
    }
}
