//! Fields in a Neumann eigenbasis, functional calculus of `-Δ_N`, spectral
//! projectors and norms.

mod io;
mod norms;

use std::sync::Arc;

use crate::domains::{EigenBasis, Point};
use crate::{Error, Result};

pub use io::{
    expect_eof, read_record, read_record_file, write_csv, write_record, write_record_file,
    CSV_SCHEMA_VERSION,
};
pub use norms::{grid_lq, mixed_norm, norm, NormSpec, TimeWindow};

/// A real scalar field `Σ_k c_k e_k`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::SizeMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField { basis, coeffs })
    }

    pub fn zeros(basis: &Arc<EigenBasis>) -> Self {
        SpectralField {
            coeffs: vec![0.0; basis.len()],
            basis: basis.clone(),
        }
    }

    /// The normalised eigenfunction `e_k`.
    pub fn mode(basis: &Arc<EigenBasis>, k: usize) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[k] = 1.0;
        f
    }

    /// The constant function `c`.
    pub fn constant(basis: &Arc<EigenBasis>, c: f64) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[0] = c * basis.domain().volume().sqrt();
        f
    }

    /// Projection of a pointwise function onto the retained span.
    pub fn from_fn(basis: &Arc<EigenBasis>, f: impl Fn(&Point) -> f64) -> Self {
        let values: Vec<f64> = basis.nodes().iter().map(f).collect();
        SpectralField {
            coeffs: basis.analyze_grid(&values),
            basis: basis.clone(),
        }
    }

    /// `c_k = Σ_j w_j f(x_j) e_k(x_j)` from values at the quadrature nodes.
    pub fn analyze(basis: &Arc<EigenBasis>, values: &[f64]) -> Result<Self> {
        if values.len() != basis.nodes().len() {
            return Err(Error::SizeMismatch {
                expected: basis.nodes().len(),
                got: values.len(),
            });
        }
        Ok(SpectralField {
            coeffs: basis.analyze_grid(values),
            basis: basis.clone(),
        })
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Values at the quadrature nodes.
    pub fn grid_values(&self) -> Vec<f64> {
        self.basis.synthesize_grid(&self.coeffs)
    }

    pub fn grid_values_with_grad(&self) -> (Vec<f64>, Vec<Point>) {
        self.basis.synthesize_grid_with_grad(&self.coeffs)
    }

    /// Values at arbitrary points of the closed domain.
    pub fn synthesize(&self, points: &[Point]) -> Result<Vec<f64>> {
        let domain = self.basis.domain();
        points
            .iter()
            .map(|p| {
                if !domain.contains(p, 1e-9) {
                    return Err(Error::OutsideDomain(*p));
                }
                Ok(self.basis.eval(&self.coeffs, p))
            })
            .collect()
    }

    /// Value at one point, without a domain check.
    pub fn eval(&self, p: &Point) -> f64 {
        self.basis.eval(&self.coeffs, p)
    }

    pub fn eval_with_grad(&self, p: &Point) -> (f64, Point) {
        self.basis.eval_with_grad(&self.coeffs, p)
    }

    /// `‖c‖_{ℓ²}`, which is the L² norm by Parseval.
    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `‖∇u‖²_{L²} = Σ μ_k c_k²`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| m.eigenvalue * c * c)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_coeffs(|_, c| s * c)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        SpectralField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + a * y)
                .collect(),
            basis: self.basis.clone(),
        }
    }

    fn map_coeffs(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        SpectralField {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| f(k, *c))
                .collect(),
            basis: self.basis.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

/// `c_k ↦ m(μ_k)·c_k`. Fails on the first non-finite multiplier value.
pub fn spectral_multiplier(field: &SpectralField, m: impl Fn(f64) -> f64) -> Result<SpectralField> {
    let mut out = field.clone();
    for (k, (mode, c)) in field
        .basis
        .modes()
        .iter()
        .zip(out.coeffs.iter_mut())
        .enumerate()
    {
        let v = m(mode.eigenvalue);
        if !v.is_finite() {
            return Err(Error::NonFiniteMultiplier(k));
        }
        *c *= v;
    }
    Ok(out)
}

/// `cos(t√μ)`.
pub fn halfwave_cos(t: f64, mu: f64) -> f64 {
    (t * mu.sqrt()).cos()
}

/// `sin(t√μ)/√μ`, equal to `t` at `μ = 0`.
pub fn halfwave_sin(t: f64, mu: f64) -> f64 {
    let w = mu.sqrt();
    if w == 0.0 {
        t
    } else {
        (t * w).sin() / w
    }
}

/// `μ^{s/2}`. On the zero mode this is 0 for `s > 0` and the identity for
/// `s = 0`; for `s < 0` a nonzero mean is an error.
pub fn fractional_power(field: &SpectralField, s: f64) -> Result<SpectralField> {
    let mut out = field.clone();
    for (mode, c) in field.basis.modes().iter().zip(out.coeffs.iter_mut()) {
        if mode.eigenvalue == 0.0 {
            if s < 0.0 && *c != 0.0 {
                return Err(Error::ZeroModeSingular);
            }
            if s != 0.0 {
                *c = 0.0;
            }
        } else {
            *c *= mode.eigenvalue.powf(0.5 * s);
        }
    }
    Ok(out)
}

/// `(1 + μ)^{s/2}`.
pub fn bessel_potential(field: &SpectralField, s: f64) -> SpectralField {
    field.map_coeffs(|k, c| c * (1.0 + field.basis.modes()[k].eigenvalue).powf(0.5 * s))
}

/// `Π_λ`: keeps the modes with `√μ ∈ [λ, λ + 1)`.
pub fn projector(field: &SpectralField, lambda: f64) -> SpectralField {
    field.map_coeffs(|k, c| {
        let w = field.basis.modes()[k].frequency;
        if w >= lambda && w < lambda + 1.0 {
            c
        } else {
            0.0
        }
    })
}

/// `u⁵` evaluated on the quadrature grid and re-analysed.
pub fn quintic(field: &SpectralField) -> SpectralField {
    let values: Vec<f64> = field.grid_values().into_iter().map(|u| u.powi(5)).collect();
    SpectralField {
        coeffs: field.basis.analyze_grid(&values),
        basis: field.basis.clone(),
    }
}
