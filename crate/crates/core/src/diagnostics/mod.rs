//! Energy, light-cone flux, Morawetz terms, L⁶ concentration and boundary
//! functionals, evaluated on states and recorded trajectories.

mod boundary;
mod flux;
mod morawetz;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{ball_section, norm, sub, Point, SurfacePoint};
use crate::solver::WaveState;
use crate::spectral::CSV_SCHEMA_VERSION;
use crate::{Error, Result};

pub use boundary::{
    boundary_l6_trace, boundary_qform, edge_trace_l4, edge_trace_scan, qform_scan,
    BoundaryL6Report, EdgeRow, EdgeScan, QformRow, QformScan, TrigSeries,
};
pub use flux::{
    flux, flux_vanishing_scan, l6_concentration, FluxReport, FluxScan, FluxScanRow, L6Row, L6Table,
};
pub use morawetz::{
    morawetz_densities, morawetz_pointwise_residual, morawetz_report, Jet, MorawetzReport,
    MultiplierDensities,
};

/// Energy density and current `e(u) = (e₀, -∂_t u ∇u)` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyDensity {
    pub density: f64,
    pub current: Point,
}

pub fn energy_density(u: f64, ut: f64, grad: &Point) -> EnergyDensity {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2];
    EnergyDensity {
        density: 0.5 * (ut * ut + g2) + u.powi(6) / 6.0,
        current: [-ut * grad[0], -ut * grad[1], -ut * grad[2]],
    }
}

/// `u`, `∂_t u` and `∇u` of a state at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSample {
    pub x: Point,
    pub weight: f64,
    pub u: f64,
    pub ut: f64,
    pub grad: Point,
}

pub(crate) fn sample_state(state: &WaveState, points: &[SurfacePoint]) -> Vec<PointSample> {
    let basis = state.basis();
    let sets = [state.u.coeffs(), state.v.coeffs()];
    points
        .par_iter()
        .map(|p| {
            let e = basis.eval_many_with_grad(&sets, &p.x);
            PointSample {
                x: p.x,
                weight: p.weight,
                u: e[0].0,
                ut: e[1].0,
                grad: e[0].1,
            }
        })
        .collect()
}

/// `E(u) = ∫ (|∇u|² + |∂_t u|²)/2 + u⁶/6` by quadrature on the basis grid.
pub fn energy(state: &WaveState) -> f64 {
    let basis = state.basis();
    let (u, grad) = state.u.grid_values_with_grad();
    let v = state.v.grid_values();
    basis
        .weights()
        .iter()
        .zip(u.iter().zip(&grad))
        .zip(&v)
        .map(|((w, (u, g)), v)| w * energy_density(*u, *v, g).density)
        .sum()
}

/// The quadratic part by Parseval plus the sextic part on the grid; this is
/// the Hamiltonian the Strang scheme works with.
pub fn energy_spectral(state: &WaveState) -> f64 {
    let basis = state.basis();
    let sextic: f64 = basis
        .weights()
        .iter()
        .zip(state.u.grid_values())
        .map(|(w, u)| w * u.powi(6))
        .sum();
    state.linear_energy() + sextic / 6.0
}

/// Energy in `{|x - center| < r} ∩ Ω`.
pub fn local_energy(state: &WaveState, center: &Point, r: f64, resolution: usize) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let domain = state.basis().domain();
    // balls containing the whole domain use the basis grid
    if r >= norm(center) + domain.diameter() {
        return Ok(energy(state));
    }
    let points = ball_section(domain, center, r, resolution)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "ball of radius {r} about {center:?} misses the domain"
        )));
    }
    Ok(sample_state(state, &points)
        .iter()
        .map(|s| s.weight * energy_density(s.u, s.ut, &s.grad).density)
        .sum())
}

/// `∫_{|x - center| < r} u⁶` at one state.
pub(crate) fn ball_l6(state: &WaveState, center: &Point, r: f64, resolution: usize) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    let points = ball_section(state.basis().domain(), center, r, resolution)?;
    let terms: Vec<f64> = points
        .par_iter()
        .map(|p| p.weight * state.u.eval(&p.x).powi(6))
        .collect();
    Ok(terms.iter().sum())
}

pub(crate) fn unit(y: &Point) -> Point {
    let n = norm(y);
    if n == 0.0 {
        [0.0; 3]
    } else {
        [y[0] / n, y[1] / n, y[2] / n]
    }
}

pub(crate) fn local(x: &Point, vertex: &Point) -> Point {
    sub(x, vertex)
}

/// A report that flattens to one CSV row.
pub trait CsvRow {
    fn header() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
}

/// Writes rows with a leading `schema_version` column.
pub fn write_csv_rows<T: CsvRow, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["schema_version"];
    header.extend(T::header());
    w.write_record(&header)?;
    for r in rows {
        let mut fields = vec![CSV_SCHEMA_VERSION.to_string()];
        fields.extend(r.row());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}
