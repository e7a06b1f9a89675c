use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{flux, fmt, local, CsvRow};
use crate::domains::quadrature::gregory_weights;
use crate::domains::{dot, edge_speed, wall_section, ConeSpec, Domain, Point};
use crate::scaling::{fit_power_law, PowerFit};
use crate::solver::Trajectory;
use crate::spectral::{norm as field_norm, NormSpec, TimeWindow};
use crate::{Error, Result};

/// Trigonometric interpolant of samples at `θ_j = 2πj/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigSeries {
    pub fn interpolate(values: &[f64]) -> Self {
        let n = values.len();
        let kmax = n / 2;
        let mut a = vec![0.0; kmax + 1];
        let mut b = vec![0.0; kmax + 1];
        for k in 0..=kmax {
            let (mut sa, mut sb) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let th = 2.0 * PI * (j * k % n.max(1)) as f64 / n as f64;
                sa += v * th.cos();
                sb += v * th.sin();
            }
            // the constant and, for even n, the Nyquist term carry half weight
            let scale = if k == 0 || (n % 2 == 0 && k == kmax) {
                1.0
            } else {
                2.0
            };
            a[k] = scale * sa / n as f64;
            b[k] = if scale == 1.0 {
                0.0
            } else {
                2.0 * sb / n as f64
            };
        }
        TrigSeries { a, b }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(k, (a, b))| {
                let (s, c) = (k as f64 * theta).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(k, (a, b))| {
                let kf = k as f64;
                let (s, c) = (kf * theta).sin_cos();
                kf * (b * c - a * s)
            })
            .sum()
    }
}

/// Traces on the wall `{|x - x0| < -τ} ∩ ∂Ω` at one local time.
pub(crate) struct WallSample {
    pub x: Point,
    pub weight: f64,
    pub normal: Point,
    pub u: f64,
    pub ut: f64,
    /// `|∇_T u|²`, the normal part removed.
    pub grad_t_sq: f64,
}

/// Wall traces at local time `tau`. On the disk with recorded boundary
/// traces the values are interpolated in the arc parameter; otherwise they
/// are evaluated from the state.
pub(crate) fn wall_samples(
    traj: &Trajectory,
    cone: &ConeSpec,
    tau: f64,
    resolution: usize,
) -> Result<Vec<WallSample>> {
    let r = -tau;
    if r <= 0.0 {
        return Ok(Vec::new());
    }
    let domain = *traj.basis().domain();
    let points = wall_section(&domain, &cone.vertex, r, resolution)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let t = cone.absolute(tau);
    if let (Domain::Disk { radius }, Ok(bt)) = (domain, traj.boundary_trace()) {
        let k = traj.index_of(t)?;
        let su = TrigSeries::interpolate(&bt.u[k]);
        let sut = TrigSeries::interpolate(&bt.ut[k]);
        return Ok(points
            .iter()
            .map(|p| {
                let th = p.x[1].atan2(p.x[0]);
                let dtan = su.derivative(th) / radius;
                WallSample {
                    x: p.x,
                    weight: p.weight,
                    normal: p.normal,
                    u: su.eval(th),
                    ut: sut.eval(th),
                    grad_t_sq: dtan * dtan,
                }
            })
            .collect());
    }
    let state = traj.state_at(t)?;
    let sets = [state.u.coeffs(), state.v.coeffs()];
    Ok(points
        .par_iter()
        .map(|p| {
            let e = traj.basis().eval_many_with_grad(&sets, &p.x);
            let g = e[0].1;
            let gn = dot(&g, &p.normal);
            WallSample {
                x: p.x,
                weight: p.weight,
                normal: p.normal,
                u: e[0].0,
                ut: e[1].0,
                grad_t_sq: (dot(&g, &g) - gn * gn).max(0.0),
            }
        })
        .collect())
}

fn require_boundary_vertex(traj: &Trajectory, cone: &ConeSpec) -> Result<()> {
    let domain = traj.basis().domain();
    cone.validate(domain)?;
    if !matches!(domain, Domain::Disk { .. }) {
        return Err(Error::UnsupportedGeometry(
            "boundary cone functionals need the disk".into(),
        ));
    }
    if !cone.has_boundary_vertex(domain) {
        return Err(Error::UnsupportedGeometry(
            "the vertex is interior: the wall has zero measure near the tip".into(),
        ));
    }
    Ok(())
}

/// Local times `S, S + h, …, T` of the record grid.
pub(crate) fn record_taus(traj: &Trajectory, cone: &ConeSpec) -> Result<Vec<f64>> {
    let h = traj.dt_record();
    let n = ((cone.t - cone.s) / h).round();
    if n < 1.0 || ((cone.t - cone.s) - n * h).abs() > 1e-9 * h.max(1.0) {
        return Err(Error::InvalidCone(format!(
            "cone window [{}, {}] is not a multiple of the record step {h}",
            cone.s, cone.t
        )));
    }
    let n = n as usize;
    let taus: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                cone.t
            } else {
                cone.s + i as f64 * h
            }
        })
        .collect();
    for &tau in [taus[0], taus[n]].iter() {
        traj.index_of(cone.absolute(tau))?;
    }
    Ok(taus)
}

/// `∫_{K ∩ ∂Ω} (|∂_t u|² - |∇u|² - u⁶/3) n·(x - x0) dσ dτ` for a disk cone
/// with its vertex on the boundary, from recorded boundary traces.
pub fn boundary_qform(traj: &Trajectory, cone: &ConeSpec, resolution: usize) -> Result<f64> {
    require_boundary_vertex(traj, cone)?;
    traj.boundary_trace()?;
    let taus = record_taus(traj, cone)?;
    let wt = gregory_weights(taus.len(), traj.dt_record());
    let parts = taus
        .par_iter()
        .zip(&wt)
        .map(|(&tau, w)| {
            let samples = wall_samples(traj, cone, tau, resolution)?;
            Ok(w * samples
                .iter()
                .map(|s| {
                    let ny = dot(&s.normal, &local(&s.x, &cone.vertex));
                    s.weight * ny * (s.ut * s.ut - s.grad_t_sq - s.u.powi(6) / 3.0)
                })
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QformRow {
    pub s: f64,
    pub value: f64,
}

impl CsvRow for QformRow {
    fn header() -> Vec<&'static str> {
        vec!["s", "qform"]
    }

    fn row(&self) -> Vec<String> {
        vec![fmt(self.s), fmt(self.value)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QformScan {
    pub rows: Vec<QformRow>,
    /// Fit of `|value|` against `|S|`.
    pub fit: PowerFit,
    pub predicted_exponent: f64,
}

/// [`boundary_qform`] over `K_S^0` for each `S`, with a power-law fit.
pub fn qform_scan(
    traj: &Trajectory,
    vertex: &Point,
    vertex_time: f64,
    s_values: &[f64],
    resolution: usize,
) -> Result<QformScan> {
    let rows = s_values
        .par_iter()
        .map(|&s| {
            let cone = ConeSpec::new(*vertex, vertex_time, s, 0.0);
            Ok(QformRow {
                s,
                value: boundary_qform(traj, &cone, resolution)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| -r.s).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value.abs()).collect();
    Ok(QformScan {
        fit: fit_power_law(&xs, &ys)?,
        predicted_exponent: 2.0,
        rows,
    })
}

/// `(‖u‖²_{L⁴(edge)}, Flux(u, M_S^T))` for a registered disk cone with its
/// vertex on the boundary. The edge carries its space-time arc length.
pub fn edge_trace_l4(traj: &Trajectory, cone: &ConeSpec) -> Result<(f64, f64)> {
    require_boundary_vertex(traj, cone)?;
    let trace = traj.cone_trace(cone)?;
    let slices = trace.slices_between(cone.s, cone.t)?;
    let wt = gregory_weights(slices.len(), traj.dt_record());
    let domain = traj.basis().domain();
    let mut sum = 0.0;
    for (slice, w) in slices.iter().zip(&wt) {
        let r = -slice.tau;
        if r <= 0.0 {
            // both branches meet at the tip, where the speed is 1
            sum += w * 2.0 * std::f64::consts::SQRT_2 * slice.u[0].powi(4);
            continue;
        }
        let speed = edge_speed(domain, &cone.vertex, r)?;
        let line = (1.0 + speed * speed).sqrt();
        sum += w * line * slice.edge.iter().map(|e| e.u.powi(4)).sum::<f64>();
    }
    Ok((sum.sqrt(), flux(traj, cone)?.flux))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EdgeRow {
    pub s: f64,
    pub l4_squared: f64,
    pub flux: f64,
    pub ratio: f64,
    /// `l4_squared / (flux + flux^{1/3})`.
    pub ratio_mixed: f64,
}

impl CsvRow for EdgeRow {
    fn header() -> Vec<&'static str> {
        vec!["s", "l4_squared", "flux", "ratio", "ratio_mixed"]
    }

    fn row(&self) -> Vec<String> {
        [
            self.s,
            self.l4_squared,
            self.flux,
            self.ratio,
            self.ratio_mixed,
        ]
        .map(fmt)
        .to_vec()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeScan {
    pub rows: Vec<EdgeRow>,
    /// Fit of the ratio against `|S|`: a negative exponent is growth as
    /// `S → 0⁻`.
    pub ratio_fit: PowerFit,
    pub ratio_mixed_fit: PowerFit,
}

/// [`edge_trace_l4`] over `M_S^T` for each `S` at a fixed top `T`.
pub fn edge_trace_scan(
    traj: &Trajectory,
    vertex: &Point,
    vertex_time: f64,
    s_values: &[f64],
    t: f64,
) -> Result<EdgeScan> {
    let rows = s_values
        .par_iter()
        .map(|&s| {
            let (l4, fl) = edge_trace_l4(traj, &ConeSpec::new(*vertex, vertex_time, s, t))?;
            Ok(EdgeRow {
                s,
                l4_squared: l4,
                flux: fl,
                ratio: l4 / fl,
                ratio_mixed: l4 / (fl + fl.cbrt()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| -r.s).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let mixed: Vec<f64> = rows.iter().map(|r| r.ratio_mixed).collect();
    Ok(EdgeScan {
        ratio_fit: fit_power_law(&xs, &ratio)?,
        ratio_mixed_fit: fit_power_law(&xs, &mixed)?,
        rows,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryL6Report {
    pub window: TimeWindow,
    /// `‖u‖_{L⁶(window × ∂Ω)}`.
    pub value: f64,
    /// `‖u(t_start)‖_{H¹} + ‖∂_t u(t_start)‖_{L²}` of the first state.
    pub data_norm: f64,
    pub ratio: f64,
}

/// Space-time `L⁶` norm of the recorded boundary trace over `window`.
pub fn boundary_l6_trace(traj: &Trajectory, window: TimeWindow) -> Result<BoundaryL6Report> {
    let bt = traj.boundary_trace()?;
    let tol = 1e-9 * traj.dt_record();
    let idx: Vec<usize> = (0..bt.times.len())
        .filter(|&i| window.contains(bt.times[i], tol))
        .collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} boundary samples in [{}, {}]",
            idx.len(),
            window.start,
            window.end
        )));
    }
    let wt = gregory_weights(idx.len(), traj.dt_record());
    let bw = &bt.grid.weights;
    let sum: f64 = idx
        .iter()
        .zip(&wt)
        .map(|(&i, w)| {
            w * bt.u[i]
                .iter()
                .zip(bw)
                .map(|(u, b)| b * u.powi(6))
                .sum::<f64>()
        })
        .sum();
    let first = &traj.states()[0];
    let data_norm = field_norm(&first.u, &NormSpec::SobolevHs { s: 1.0 })? + first.v.l2();
    let value = sum.powf(1.0 / 6.0);
    Ok(BoundaryL6Report {
        window,
        value,
        data_norm,
        ratio: if data_norm > 0.0 {
            value / data_norm
        } else {
            0.0
        },
    })
}
