use serde::Serialize;

use crate::{Error, Result};

/// `y ≈ prefactor · x^exponent` fitted by least squares in log-log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub n_points: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Fits on the pairs with `x > 0` and `y > 0`; needs at least `min_points`
/// of them.
pub fn fit_power_law_with(xs: &[f64], ys: &[f64], min_points: usize) -> Result<PowerFit> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < min_points.max(2) {
        return Err(Error::InsufficientSamples(format!(
            "{} usable points for a power-law fit, need {}",
            pts.len(),
            min_points.max(2)
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("all abscissae coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = pts
        .iter()
        .map(|p| (p.1 - icept - slope * p.0).powi(2))
        .sum();
    Ok(PowerFit {
        exponent: slope,
        prefactor: icept.exp(),
        residual: (ss / n).sqrt(),
        n_points: pts.len(),
    })
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    fit_power_law_with(xs, ys, MIN_FIT_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.4)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.exponent - 0.4).abs() < 1e-14);
        assert!((f.prefactor - 3.0).abs() < 1e-13);
        assert!(f.residual < 1e-14);
        assert!(fit_power_law(&xs[..3], &ys[..3]).is_err());
    }
}
