use rayon::prelude::*;
use serde::Serialize;

use super::{ball_l6, energy_density, fmt, local, local_energy, unit, CsvRow};
use crate::domains::quadrature::gregory_weights;
use crate::domains::{dot, wall_section, ConeSpec, Point};
use crate::scaling::{fit_power_law_with, PowerFit};
use crate::solver::{ConeSlice, Trajectory};
use crate::{Error, Result};

/// Energy balance of one truncated cone.
#[derive(Clone, Debug, Serialize)]
pub struct FluxReport {
    pub cone: ConeSpec,
    /// `∫_M ⟨e(u), ν⟩ dρ` from the explicit normal.
    pub flux: f64,
    /// `∫_M (½|ω∂_t u - ∇u|² + u⁶/6) dσ dτ`.
    pub flux_tangential: f64,
    /// Smallest pointwise value of the tangential integrand.
    pub min_density: f64,
    /// `∫ -∂_t u ∂_n u` over the boundary wall inside the cone.
    pub wall_flux: f64,
    pub e_loc_s: f64,
    pub e_loc_t: f64,
    /// `E_loc(S) - E_loc(T) - flux`.
    pub residual: f64,
}

impl FluxReport {
    pub fn form_gap(&self) -> f64 {
        (self.flux - self.flux_tangential).abs()
    }
}

impl CsvRow for FluxReport {
    fn header() -> Vec<&'static str> {
        vec![
            "s",
            "t",
            "flux",
            "flux_tangential",
            "min_density",
            "wall_flux",
            "e_loc_s",
            "e_loc_t",
            "residual",
        ]
    }

    fn row(&self) -> Vec<String> {
        [
            self.cone.s,
            self.cone.t,
            self.flux,
            self.flux_tangential,
            self.min_density,
            self.wall_flux,
            self.e_loc_s,
            self.e_loc_t,
            self.residual,
        ]
        .map(fmt)
        .to_vec()
    }
}

pub(crate) struct SliceSums {
    pub normal: f64,
    pub tangential: f64,
    pub min_density: f64,
}

/// Both flux integrands over one sphere section, per unit `dτ`.
pub(crate) fn slice_flux(slice: &ConeSlice, vertex: &Point) -> SliceSums {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = SliceSums {
        normal: 0.0,
        tangential: 0.0,
        min_density: f64::INFINITY,
    };
    for (j, p) in slice.points.iter().enumerate() {
        let omega = unit(&local(&p.x, vertex));
        let (u, ut, g) = (slice.u[j], slice.ut[j], slice.grad[j]);
        let e = energy_density(u, ut, &g);
        let nu = [
            1.0 / sqrt2,
            omega[0] / sqrt2,
            omega[1] / sqrt2,
            omega[2] / sqrt2,
        ];
        let pairing =
            e.density * nu[0] + e.current[0] * nu[1] + e.current[1] * nu[2] + e.current[2] * nu[3];
        // dρ = √2 dσ dτ
        out.normal += sqrt2 * p.weight * pairing;
        let d = [
            omega[0] * ut - g[0],
            omega[1] * ut - g[1],
            omega[2] * ut - g[2],
        ];
        let tang = 0.5 * dot(&d, &d) + u.powi(6) / 6.0;
        out.tangential += p.weight * tang;
        out.min_density = out.min_density.min(tang);
    }
    out
}

/// Energy flux through the lateral surface of a registered cone, with the
/// localized energies at both ends.
pub fn flux(traj: &Trajectory, cone: &ConeSpec) -> Result<FluxReport> {
    let trace = traj.cone_trace(cone)?;
    let slices = trace.slices_between(cone.s, cone.t)?;
    let wt = gregory_weights(slices.len(), traj.dt_record());
    let sums: Vec<SliceSums> = slices
        .par_iter()
        .map(|s| slice_flux(s, &cone.vertex))
        .collect();
    let res = trace.registration.resolution;
    let domain = *traj.basis().domain();

    let mut wall_flux = 0.0;
    for (slice, w) in slices.iter().zip(&wt) {
        let r = -slice.tau;
        if r <= 0.0 {
            continue;
        }
        let state = traj.state_at(cone.absolute(slice.tau))?;
        for p in wall_section(&domain, &cone.vertex, r, res)? {
            let sets = [state.u.coeffs(), state.v.coeffs()];
            let e = traj.basis().eval_many_with_grad(&sets, &p.x);
            wall_flux -= w * p.weight * e[1].0 * dot(&e[0].1, &p.normal);
        }
    }

    let flux: f64 = sums.iter().zip(&wt).map(|(s, w)| w * s.normal).sum();
    let flux_tangential: f64 = sums.iter().zip(&wt).map(|(s, w)| w * s.tangential).sum();
    let min_density = sums.iter().fold(f64::INFINITY, |m, s| m.min(s.min_density));
    let e_loc_s = local_energy(
        traj.state_at(cone.absolute(cone.s))?,
        &cone.vertex,
        -cone.s,
        res,
    )?;
    let e_loc_t = local_energy(
        traj.state_at(cone.absolute(cone.t))?,
        &cone.vertex,
        -cone.t,
        res,
    )?;
    Ok(FluxReport {
        cone: *cone,
        flux,
        flux_tangential,
        min_density,
        wall_flux,
        e_loc_s,
        e_loc_t,
        residual: e_loc_s - e_loc_t - flux,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FluxScanRow {
    pub s: f64,
    /// Flux with the top at the tip itself.
    pub direct: f64,
    /// Flux up to `T₁ = -dt_record` and `T₂ = -2 dt_record`.
    pub flux_t1: f64,
    pub flux_t2: f64,
    /// First-order Richardson limit `2F(T₁) - F(T₂)`.
    pub limit: f64,
}

impl CsvRow for FluxScanRow {
    fn header() -> Vec<&'static str> {
        vec!["s", "direct", "flux_t1", "flux_t2", "limit"]
    }

    fn row(&self) -> Vec<String> {
        [self.s, self.direct, self.flux_t1, self.flux_t2, self.limit]
            .map(fmt)
            .to_vec()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxScan {
    /// Rows ordered from the largest `|S|` to the smallest.
    pub rows: Vec<FluxScanRow>,
    /// Whether the limits are nonincreasing as `S → 0⁻`.
    pub monotone: bool,
}

fn order_by_depth(s_values: &[f64]) -> Result<Vec<f64>> {
    if s_values.is_empty() {
        return Err(Error::InsufficientSamples("empty S sequence".into()));
    }
    if let Some(s) = s_values.iter().find(|s| !(**s < 0.0)) {
        return Err(Error::InvalidCone(format!("S = {s} must be negative")));
    }
    let mut v = s_values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

fn nonincreasing(values: &[f64]) -> bool {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale)
}

/// `Flux(u, M_S^0)` for each `S`, as the tip limit of `Flux(u, M_S^T)`.
/// Needs a registered cone at the vertex reaching `T = 0`.
pub fn flux_vanishing_scan(
    traj: &Trajectory,
    vertex: &Point,
    vertex_time: f64,
    s_values: &[f64],
) -> Result<FluxScan> {
    let ss = order_by_depth(s_values)?;
    let h = traj.dt_record();
    let (t1, t2) = (-h, -2.0 * h);
    if ss.last().copied().unwrap() >= t2 - 1e-9 * h {
        return Err(Error::InsufficientSamples(format!(
            "S must lie below -2·dt_record = {t2} for the tip extrapolation"
        )));
    }
    let rows = ss
        .par_iter()
        .map(|&s| {
            let at =
                |t: f64| flux(traj, &ConeSpec::new(*vertex, vertex_time, s, t)).map(|r| r.flux);
            let (direct, f1, f2) = (at(0.0)?, at(t1)?, at(t2)?);
            Ok(FluxScanRow {
                s,
                direct,
                flux_t1: f1,
                flux_t2: f2,
                limit: 2.0 * f1 - f2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let limits: Vec<f64> = rows.iter().map(|r| r.limit).collect();
    Ok(FluxScan {
        monotone: nonincreasing(&limits),
        rows,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct L6Row {
    pub s: f64,
    pub value: f64,
}

impl CsvRow for L6Row {
    fn header() -> Vec<&'static str> {
        vec!["s", "l6"]
    }

    fn row(&self) -> Vec<String> {
        vec![fmt(self.s), fmt(self.value)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct L6Table {
    /// Rows ordered from the largest `|S|` to the smallest.
    pub rows: Vec<L6Row>,
    /// Fit of the values against `|S|`, when at least two are positive.
    pub decay: Option<PowerFit>,
    /// Whether the last three entries decrease (zeros count as decreasing).
    pub tail_decreasing: bool,
}

/// `∫_{D_S} u⁶` on the slices `{|x - x0| < -S}` at times `t0 + S`.
pub fn l6_concentration(
    traj: &Trajectory,
    vertex: &Point,
    vertex_time: f64,
    s_values: &[f64],
    resolution: usize,
) -> Result<L6Table> {
    let ss = order_by_depth(s_values)?;
    ConeSpec::new(*vertex, vertex_time, ss[0], 0.0).validate(traj.basis().domain())?;
    let rows = ss
        .iter()
        .map(|&s| {
            let state = traj.state_at(vertex_time + s)?;
            Ok(L6Row {
                s,
                value: ball_l6(state, vertex, -s, resolution)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| -r.s).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let tail = &ys[ys.len().saturating_sub(3)..];
    let tail_decreasing = tail
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    Ok(L6Table {
        decay: fit_power_law_with(&xs, &ys, 2).ok(),
        tail_decreasing,
        rows,
    })
}
