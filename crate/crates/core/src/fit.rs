//! Least-squares line fits used for decay slopes and convergence rates.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the data from the line.
    pub rms: f64,
    /// `rms` over the standard deviation of `y`; zero for a perfect line.
    pub relative_residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope x + intercept`. `None` with fewer than
/// two points or degenerate `x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x[..n].iter().zip(&y[..n]).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / nf).sqrt();
    let sy = (y[..n].iter().map(|b| (b - my).powi(2)).sum::<f64>() / nf).sqrt();
    let relative_residual = if sy > 0.0 { rms / sy } else { 0.0 };
    Some(LineFit { slope, intercept, rms, relative_residual, points: n })
}

/// Slope of `log y` against `log x`, skipping non-positive values.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).unzip();
    line_fit(&lx, &ly)
}

/// Observed order `log2(e_coarse / e_fine)` of a halving refinement.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-2.5)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope + 2.5).abs() < 1e-12 && f.rms < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(line_fit(&[1.0], &[2.0]).is_none());
        assert!(line_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert_eq!(observed_order(4.0, 1.0), 2.0);
    }
}
