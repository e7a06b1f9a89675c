use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_j_triplet, spherical_j0, spherical_j0_prime};
use super::quadrature::gauss_legendre_on;
use super::roots::RootCache;
use super::{norm, Domain, Point};
use crate::{Error, Result};

/// Resource guard on the number of retained modes.
pub const MAX_MODES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Cos,
    Sin,
}

/// Which closed-form eigenfunction a mode is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeShape {
    /// `cos(kπx/L)` on the interval.
    Cosine { k: usize },
    /// `J_m(κr)·cos(mθ)` or `J_m(κr)·sin(mθ)` on the disk; `k` counts the
    /// zeros of `J_m'` (0 is the constant mode for `m = 0`).
    Bessel { m: usize, k: usize, parity: Parity },
    /// `j_0(κr)` on the radial ball.
    SphericalBessel { k: usize },
}

/// One Neumann eigenpair with unit L² normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub index: usize,
    /// `μ_k`, eigenvalue of `-Δ_N`.
    pub eigenvalue: f64,
    /// `√μ_k`.
    pub frequency: f64,
    pub shape: ModeShape,
    amplitude: f64,
}

impl Mode {
    pub fn value(&self, p: &Point) -> f64 {
        self.value_and_grad(p).0
    }

    pub fn value_and_grad(&self, p: &Point) -> (f64, Point) {
        let a = self.amplitude;
        let kappa = self.frequency;
        match self.shape {
            ModeShape::Cosine { .. } => {
                let (s, c) = (kappa * p[0]).sin_cos();
                (a * c, [-a * kappa * s, 0.0, 0.0])
            }
            ModeShape::SphericalBessel { .. } => {
                let r = norm(p);
                let v = a * spherical_j0(kappa * r);
                if r == 0.0 {
                    return (v, [0.0; 3]);
                }
                let d = a * kappa * spherical_j0_prime(kappa * r) / r;
                (v, [d * p[0], d * p[1], d * p[2]])
            }
            ModeShape::Bessel { m, parity, .. } => {
                let r = p[0].hypot(p[1]);
                let theta = p[1].atan2(p[0]);
                let (jm1, j, jp1) = bessel_j_triplet(m, kappa * r);
                let mf = m as f64;
                let (trig, dtrig) = match parity {
                    Parity::Cos => ((mf * theta).cos(), -mf * (mf * theta).sin()),
                    Parity::Sin => ((mf * theta).sin(), mf * (mf * theta).cos()),
                };
                let dr = a * kappa * 0.5 * (jm1 - jp1) * trig;
                // J_m(κr)/r = κ (J_{m-1} + J_{m+1}) / (2m), regular at r = 0
                let over_r = if m == 0 {
                    0.0
                } else {
                    a * kappa * (jm1 + jp1) / (2.0 * mf)
                };
                let dtheta = over_r * dtrig;
                let (s, c) = theta.sin_cos();
                (
                    a * j * trig,
                    [dr * c - dtheta * s, dr * s + dtheta * c, 0.0],
                )
            }
        }
    }
}

/// Boundary sample points with surface-measure weights.
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
    /// Arc parameter θ for the disk's uniform boundary grid.
    pub angles: Option<Vec<f64>>,
}

/// Enough to rebuild a basis bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDescriptor {
    pub domain: Domain,
    pub n_modes: usize,
    pub quad_order: usize,
}

#[derive(Debug)]
enum Tables {
    /// Mode-major `values[k * n_nodes + j]`, and the derivative along the
    /// node axis (x for the interval, r for the ball).
    Dense {
        values: Vec<f64>,
        derivs: Vec<f64>,
    },
    Disk(DiskTables),
}

#[derive(Debug)]
struct DiskGroup {
    m: usize,
    parity: Parity,
    modes: Vec<usize>,
}

#[derive(Debug)]
struct DiskTables {
    n_r: usize,
    n_theta: usize,
    radial_weights: Vec<f64>,
    /// `trig[m][j]` = (cos mθ_j, sin mθ_j)
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    groups: Vec<DiskGroup>,
    /// mode-major radial profiles `a·J_m(κ r_i)`, `a·κ J_m'(κ r_i)` and `a·J_m(κ r_i)/r_i`
    rad: Vec<f64>,
    drad: Vec<f64>,
    rover: Vec<f64>,
}

/// Neumann eigenpairs of a model domain with a quadrature grid on which
/// they are discretely orthonormal. Immutable after construction.
#[derive(Debug)]
pub struct EigenBasis {
    domain: Domain,
    modes: Vec<Mode>,
    quad_order: usize,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    tables: Tables,
    boundary: BoundaryGrid,
    boundary_values: Vec<f64>,
}

struct Candidate {
    x: f64,
    shape: ModeShape,
}

impl EigenBasis {
    /// Builds `n_modes` modes with the default (dealiasing) quadrature order.
    pub fn build(domain: Domain, n_modes: usize) -> Result<Arc<Self>> {
        Self::build_with(domain, n_modes, None, &mut RootCache::new())
    }

    /// Builds with an explicit quadrature order: the number of nodes along
    /// the interval or the radial direction.
    pub fn build_with_quadrature(
        domain: Domain,
        n_modes: usize,
        quad_order: usize,
    ) -> Result<Arc<Self>> {
        Self::build_with(domain, n_modes, Some(quad_order), &mut RootCache::new())
    }

    pub fn from_descriptor(d: &BasisDescriptor) -> Result<Arc<Self>> {
        Self::build_with_quadrature(d.domain, d.n_modes, d.quad_order)
    }

    /// Full constructor; Bessel roots are looked up in and added to `cache`.
    pub fn build_with(
        domain: Domain,
        n_modes: usize,
        quad_order: Option<usize>,
        cache: &mut RootCache,
    ) -> Result<Arc<Self>> {
        domain.validate()?;
        if n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
        }
        if n_modes > MAX_MODES {
            return Err(Error::TooManyModes {
                requested: n_modes,
                cap: MAX_MODES,
            });
        }
        let candidates = match domain {
            Domain::Interval { .. } => (0..n_modes)
                .map(|k| Candidate {
                    x: k as f64 * PI,
                    shape: ModeShape::Cosine { k },
                })
                .collect(),
            Domain::BallRadial { .. } => {
                let mut out = Vec::with_capacity(n_modes);
                for k in 0..n_modes {
                    let x = if k == 0 { 0.0 } else { cache.ball_root(k)? };
                    out.push(Candidate {
                        x,
                        shape: ModeShape::SphericalBessel { k },
                    });
                }
                out
            }
            Domain::Disk { .. } => disk_candidates(n_modes, cache)?,
        };
        let size = domain.size();
        let per_direction = match domain {
            Domain::Disk { .. } => candidates
                .iter()
                .map(|c| match c.shape {
                    ModeShape::Bessel { k, .. } => k + 1,
                    _ => 1,
                })
                .max()
                .unwrap_or(1),
            _ => n_modes,
        };
        let required = 2 * per_direction + 8;
        let quad_order = match quad_order {
            Some(q) if q < required => {
                return Err(Error::QuadratureTooCoarse { got: q, required });
            }
            Some(q) => q,
            None => 3 * per_direction + 8,
        };

        let modes: Vec<Mode> = candidates
            .into_iter()
            .enumerate()
            .map(|(index, c)| {
                let kappa = c.x / size;
                Mode {
                    index,
                    eigenvalue: kappa * kappa,
                    frequency: kappa,
                    shape: c.shape,
                    amplitude: amplitude(&domain, &c.shape, c.x),
                }
            })
            .collect();

        let (nodes, weights, tables) = match domain {
            Domain::Interval { length } => {
                let h = length / quad_order as f64;
                let nodes: Vec<Point> = (0..quad_order)
                    .map(|j| [(j as f64 + 0.5) * h, 0.0, 0.0])
                    .collect();
                let weights = vec![h; quad_order];
                let tables = dense_tables(&modes, &nodes);
                (nodes, weights, tables)
            }
            Domain::BallRadial { radius } => {
                let (rs, ws) = gauss_legendre_on(0.0, radius, quad_order);
                let nodes: Vec<Point> = rs.iter().map(|r| [*r, 0.0, 0.0]).collect();
                let weights = rs
                    .iter()
                    .zip(&ws)
                    .map(|(r, w)| 4.0 * PI * r * r * w)
                    .collect();
                let tables = dense_tables(&modes, &nodes);
                (nodes, weights, tables)
            }
            Domain::Disk { radius } => disk_tables(&modes, radius, quad_order),
        };

        let boundary = boundary_grid(&domain, &modes);
        let mut boundary_values = Vec::with_capacity(modes.len() * boundary.points.len());
        for mode in &modes {
            for p in &boundary.points {
                boundary_values.push(mode.value(p));
            }
        }

        Ok(Arc::new(EigenBasis {
            domain,
            modes,
            quad_order,
            nodes,
            weights,
            tables,
            boundary,
            boundary_values,
        }))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        BasisDescriptor {
            domain: self.domain,
            n_modes: self.modes.len(),
            quad_order: self.quad_order,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(0.0, f64::max)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundary(&self) -> &BoundaryGrid {
        &self.boundary
    }

    /// Indices of the modes with `√μ ∈ [λ, λ + 1)`.
    pub fn cluster(&self, lambda: f64) -> Vec<usize> {
        self.modes
            .iter()
            .filter(|m| m.frequency >= lambda && m.frequency < lambda + 1.0)
            .map(|m| m.index)
            .collect()
    }

    /// `Σ_k c_k e_k(x_j)` at the quadrature nodes.
    pub fn synthesize_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        match &self.tables {
            Tables::Dense { values, .. } => {
                let mut out = vec![0.0; n];
                for (k, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let row = &values[k * n..(k + 1) * n];
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += c * v;
                    }
                }
                out
            }
            Tables::Disk(t) => t.synthesize(coeffs, |t| &t.rad, false),
        }
    }

    /// Values and gradients at the quadrature nodes.
    pub fn synthesize_grid_with_grad(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<Point>) {
        let n = self.nodes.len();
        match &self.tables {
            Tables::Dense { derivs, .. } => {
                let values = self.synthesize_grid(coeffs);
                let mut d = vec![0.0; n];
                for (k, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let row = &derivs[k * n..(k + 1) * n];
                    for (o, v) in d.iter_mut().zip(row) {
                        *o += c * v;
                    }
                }
                (values, d.into_iter().map(|g| [g, 0.0, 0.0]).collect())
            }
            Tables::Disk(t) => {
                let values = t.synthesize(coeffs, |t| &t.rad, false);
                let dr = t.synthesize(coeffs, |t| &t.drad, false);
                let dth = t.synthesize(coeffs, |t| &t.rover, true);
                let grads = self
                    .nodes
                    .iter()
                    .zip(dr.iter().zip(&dth))
                    .map(|(p, (dr, dth))| {
                        let theta = p[1].atan2(p[0]);
                        let (s, c) = theta.sin_cos();
                        [dr * c - dth * s, dr * s + dth * c, 0.0]
                    })
                    .collect();
                (values, grads)
            }
        }
    }

    /// `c_k = Σ_j w_j f(x_j) e_k(x_j)`.
    pub fn analyze_grid(&self, values: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        match &self.tables {
            Tables::Dense { values: table, .. } => {
                let weighted: Vec<f64> = values
                    .iter()
                    .zip(&self.weights)
                    .map(|(f, w)| f * w)
                    .collect();
                (0..self.modes.len())
                    .map(|k| {
                        table[k * n..(k + 1) * n]
                            .iter()
                            .zip(&weighted)
                            .map(|(e, f)| e * f)
                            .sum()
                    })
                    .collect()
            }
            Tables::Disk(t) => t.analyze(values, self.modes.len()),
        }
    }

    /// Grid values of a single mode.
    pub fn mode_on_grid(&self, k: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.modes.len()];
        c[k] = 1.0;
        self.synthesize_grid(&c)
    }

    /// Field values at the boundary grid.
    pub fn boundary_values(&self, coeffs: &[f64]) -> Vec<f64> {
        let nb = self.boundary.points.len();
        let mut out = vec![0.0; nb];
        for (k, c) in coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (o, v) in out
                .iter_mut()
                .zip(&self.boundary_values[k * nb..(k + 1) * nb])
            {
                *o += c * v;
            }
        }
        out
    }

    /// Value of `Σ c_k e_k` at an arbitrary point (no domain check).
    pub fn eval(&self, coeffs: &[f64], p: &Point) -> f64 {
        self.modes
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| c * m.value(p))
            .sum()
    }

    /// Value and gradient of `Σ c_k e_k` at an arbitrary point.
    pub fn eval_with_grad(&self, coeffs: &[f64], p: &Point) -> (f64, Point) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (m, c) in self.modes.iter().zip(coeffs) {
            if *c == 0.0 {
                continue;
            }
            let (mv, mg) = m.value_and_grad(p);
            v += c * mv;
            for i in 0..3 {
                g[i] += c * mg[i];
            }
        }
        (v, g)
    }

    /// Values and gradients of several coefficient vectors at one point,
    /// sharing the per-mode special-function evaluations.
    pub fn eval_many_with_grad(&self, coeff_sets: &[&[f64]], p: &Point) -> Vec<(f64, Point)> {
        let mut out = vec![(0.0, [0.0; 3]); coeff_sets.len()];
        for (k, m) in self.modes.iter().enumerate() {
            if coeff_sets.iter().all(|c| c[k] == 0.0) {
                continue;
            }
            let (mv, mg) = m.value_and_grad(p);
            for (o, c) in out.iter_mut().zip(coeff_sets) {
                let c = c[k];
                o.0 += c * mv;
                for i in 0..3 {
                    o.1[i] += c * mg[i];
                }
            }
        }
        out
    }

    /// `max_{k,m} |Σ_j w_j e_k(x_j) e_m(x_j) - δ_km|`.
    pub fn orthonormality_error(&self) -> f64 {
        (0..self.modes.len())
            .map(|k| {
                let row = self.analyze_grid(&self.mode_on_grid(k));
                row.iter()
                    .enumerate()
                    .map(|(m, g)| (g - if m == k { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `max_k max_{x ∈ ∂Ω} |∂_n e_k(x)| / ‖e_k‖_∞` over the boundary grid.
    pub fn neumann_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, mode) in self.modes.iter().enumerate() {
            let sup = self
                .mode_on_grid(k)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            for (p, n) in self.boundary.points.iter().zip(&self.boundary.normals) {
                let (_, g) = mode.value_and_grad(p);
                let dn = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
                worst = worst.max(dn.abs() / sup.max(f64::MIN_POSITIVE));
            }
        }
        worst
    }
}

impl DiskTables {
    fn synthesize(
        &self,
        coeffs: &[f64],
        table: impl Fn(&Self) -> &Vec<f64>,
        angular: bool,
    ) -> Vec<f64> {
        let table = table(self);
        let (nr, nt) = (self.n_r, self.n_theta);
        let mut out = vec![0.0; nr * nt];
        let mut profile = vec![0.0; nr];
        for g in &self.groups {
            profile.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for &k in &g.modes {
                let c = coeffs[k];
                if c == 0.0 {
                    continue;
                }
                any = true;
                for (p, v) in profile.iter_mut().zip(&table[k * nr..(k + 1) * nr]) {
                    *p += c * v;
                }
            }
            if !any {
                continue;
            }
            let mf = g.m as f64;
            // angular derivative of cos is -m sin, of sin is m cos
            let (trig, factor) = match (g.parity, angular) {
                (Parity::Cos, false) => (&self.cos[g.m], 1.0),
                (Parity::Sin, false) => (&self.sin[g.m], 1.0),
                (Parity::Cos, true) => (&self.sin[g.m], -mf),
                (Parity::Sin, true) => (&self.cos[g.m], mf),
            };
            for (i, p) in profile.iter().enumerate() {
                let a = p * factor;
                for (o, t) in out[i * nt..(i + 1) * nt].iter_mut().zip(trig) {
                    *o += a * t;
                }
            }
        }
        out
    }

    fn analyze(&self, values: &[f64], n_modes: usize) -> Vec<f64> {
        let (nr, nt) = (self.n_r, self.n_theta);
        let dtheta = 2.0 * PI / nt as f64;
        let mut out = vec![0.0; n_modes];
        let mut moment = vec![0.0; nr];
        for g in &self.groups {
            let trig = match g.parity {
                Parity::Cos => &self.cos[g.m],
                Parity::Sin => &self.sin[g.m],
            };
            for (i, mo) in moment.iter_mut().enumerate() {
                let s: f64 = values[i * nt..(i + 1) * nt]
                    .iter()
                    .zip(trig)
                    .map(|(f, t)| f * t)
                    .sum();
                *mo = s * dtheta * self.radial_weights[i];
            }
            for &k in &g.modes {
                out[k] = self.rad[k * nr..(k + 1) * nr]
                    .iter()
                    .zip(&moment)
                    .map(|(r, m)| r * m)
                    .sum();
            }
        }
        out
    }
}

fn amplitude(domain: &Domain, shape: &ModeShape, x: f64) -> f64 {
    match (*domain, *shape) {
        (Domain::Interval { length }, ModeShape::Cosine { k }) => {
            if k == 0 {
                (1.0 / length).sqrt()
            } else {
                (2.0 / length).sqrt()
            }
        }
        (Domain::BallRadial { radius }, ModeShape::SphericalBessel { k }) => {
            if k == 0 {
                1.0 / (4.0 / 3.0 * PI * radius.powi(3)).sqrt()
            } else {
                let kappa = x / radius;
                let integral =
                    4.0 * PI / (kappa * kappa) * (0.5 * radius - (2.0 * x).sin() / (4.0 * kappa));
                1.0 / integral.sqrt()
            }
        }
        (Domain::Disk { radius }, ModeShape::Bessel { m, k, .. }) => {
            let angular = if m == 0 { 2.0 * PI } else { PI };
            if m == 0 && k == 0 {
                return 1.0 / (PI * radius * radius).sqrt();
            }
            let (_, j, _) = bessel_j_triplet(m, x);
            let radial = 0.5 * radius * radius * (1.0 - (m * m) as f64 / (x * x)) * j * j;
            1.0 / (angular * radial).sqrt()
        }
        _ => unreachable!("mode shape does not belong to domain"),
    }
}

fn disk_candidates(n_modes: usize, cache: &mut RootCache) -> Result<Vec<Candidate>> {
    // Weyl: N(x) ≈ x²/4 + x/2 for the unit disk
    let mut limit = 2.0 * (n_modes as f64).sqrt() + 4.0;
    loop {
        let mut out = vec![Candidate {
            x: 0.0,
            shape: ModeShape::Bessel {
                m: 0,
                k: 0,
                parity: Parity::Cos,
            },
        }];
        for m in 0.. {
            let roots = cache.disk_roots(m, limit)?;
            if roots.is_empty() && m > 0 {
                break;
            }
            for (i, x) in roots.into_iter().enumerate() {
                let k = i + 1;
                out.push(Candidate {
                    x,
                    shape: ModeShape::Bessel {
                        m,
                        k,
                        parity: Parity::Cos,
                    },
                });
                if m > 0 {
                    out.push(Candidate {
                        x,
                        shape: ModeShape::Bessel {
                            m,
                            k,
                            parity: Parity::Sin,
                        },
                    });
                }
            }
        }
        if out.len() >= n_modes {
            out.sort_by(|a, b| {
                a.x.partial_cmp(&b.x).unwrap().then_with(|| {
                    let key = |s: &ModeShape| match *s {
                        ModeShape::Bessel { m, parity, .. } => (m, parity == Parity::Sin),
                        _ => (0, false),
                    };
                    key(&a.shape).cmp(&key(&b.shape))
                })
            });
            out.truncate(n_modes);
            return Ok(out);
        }
        limit *= 1.3;
    }
}

fn dense_tables(modes: &[Mode], nodes: &[Point]) -> Tables {
    let n = nodes.len();
    let mut values = Vec::with_capacity(modes.len() * n);
    let mut derivs = Vec::with_capacity(modes.len() * n);
    for mode in modes {
        for p in nodes {
            let (v, g) = mode.value_and_grad(p);
            values.push(v);
            derivs.push(g[0]);
        }
    }
    Tables::Dense { values, derivs }
}

fn disk_tables(modes: &[Mode], radius: f64, n_r: usize) -> (Vec<Point>, Vec<f64>, Tables) {
    let max_m = modes
        .iter()
        .map(|m| match m.shape {
            ModeShape::Bessel { m, .. } => m,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let n_theta = 6 * max_m + 8;
    let (rs, ws) = gauss_legendre_on(0.0, radius, n_r);
    let radial_weights: Vec<f64> = rs.iter().zip(&ws).map(|(r, w)| r * w).collect();
    let dtheta = 2.0 * PI / n_theta as f64;
    let thetas: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
    let cos: Vec<Vec<f64>> = (0..=max_m)
        .map(|m| thetas.iter().map(|t| (m as f64 * t).cos()).collect())
        .collect();
    let sin: Vec<Vec<f64>> = (0..=max_m)
        .map(|m| thetas.iter().map(|t| (m as f64 * t).sin()).collect())
        .collect();

    let mut groups: Vec<DiskGroup> = Vec::new();
    let mut rad = Vec::with_capacity(modes.len() * n_r);
    let mut drad = Vec::with_capacity(modes.len() * n_r);
    let mut rover = Vec::with_capacity(modes.len() * n_r);
    for mode in modes {
        let ModeShape::Bessel { m, parity, .. } = mode.shape else {
            unreachable!()
        };
        match groups.iter_mut().find(|g| g.m == m && g.parity == parity) {
            Some(g) => g.modes.push(mode.index),
            None => groups.push(DiskGroup {
                m,
                parity,
                modes: vec![mode.index],
            }),
        }
        let a = mode.amplitude;
        let kappa = mode.frequency;
        for r in &rs {
            let (jm1, j, jp1) = bessel_j_triplet(m, kappa * r);
            rad.push(a * j);
            drad.push(a * kappa * 0.5 * (jm1 - jp1));
            rover.push(if m == 0 {
                0.0
            } else {
                a * kappa * (jm1 + jp1) / (2.0 * m as f64)
            });
        }
    }
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for (r, rw) in rs.iter().zip(&radial_weights) {
        for t in &thetas {
            nodes.push([r * t.cos(), r * t.sin(), 0.0]);
            weights.push(rw * dtheta);
        }
    }
    let tables = Tables::Disk(DiskTables {
        n_r,
        n_theta,
        radial_weights,
        cos,
        sin,
        groups,
        rad,
        drad,
        rover,
    });
    (nodes, weights, tables)
}

fn boundary_grid(domain: &Domain, modes: &[Mode]) -> BoundaryGrid {
    match *domain {
        Domain::Interval { length } => BoundaryGrid {
            points: vec![[0.0; 3], [length, 0.0, 0.0]],
            weights: vec![1.0, 1.0],
            normals: vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            angles: None,
        },
        Domain::BallRadial { radius } => BoundaryGrid {
            points: vec![[radius, 0.0, 0.0]],
            weights: vec![4.0 * PI * radius * radius],
            normals: vec![[1.0, 0.0, 0.0]],
            angles: None,
        },
        Domain::Disk { radius } => {
            let max_m = modes
                .iter()
                .map(|m| match m.shape {
                    ModeShape::Bessel { m, .. } => m,
                    _ => 0,
                })
                .max()
                .unwrap_or(0);
            let n = (4 * max_m + 16).max(64);
            let h = 2.0 * PI / n as f64;
            let angles: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
            BoundaryGrid {
                points: angles
                    .iter()
                    .map(|t| [radius * t.cos(), radius * t.sin(), 0.0])
                    .collect(),
                weights: vec![radius * h; n],
                normals: angles.iter().map(|t| [t.cos(), t.sin(), 0.0]).collect(),
                angles: Some(angles),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_eigenvalues_are_exact() {
        let b = EigenBasis::build(Domain::Interval { length: PI }, 3).unwrap();
        let mu = b.eigenvalues();
        assert_eq!(mu.len(), 3);
        for (got, want) in mu.iter().zip([0.0, 1.0, 4.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let x = [0.7, 0.0, 0.0];
        assert!((b.modes()[1].value(&x) - (2.0 / PI).sqrt() * 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn first_ball_and_disk_eigenvalues() {
        let ball = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 4).unwrap();
        let x1 = 4.493409457909064f64;
        assert!((ball.modes()[1].eigenvalue - x1 * x1).abs() < 1e-11);
        assert!((ball.modes()[1].eigenvalue - 20.19073).abs() < 1e-5);
        let disk = EigenBasis::build(Domain::Disk { radius: 1.0 }, 12).unwrap();
        let radial = disk
            .modes()
            .iter()
            .find(|m| matches!(m.shape, ModeShape::Bessel { m: 0, k: 1, .. }))
            .unwrap();
        assert!((radial.frequency - 3.831706).abs() < 1e-6);
        assert!((radial.eigenvalue - 14.68197).abs() < 1e-5);
    }

    #[test]
    fn zero_mode_is_constant_and_spectrum_sorted() {
        for domain in [
            Domain::Interval { length: 2.0 },
            Domain::Disk { radius: 1.3 },
            Domain::BallRadial { radius: 0.8 },
        ] {
            let b = EigenBasis::build(domain, 20).unwrap();
            assert_eq!(b.modes()[0].eigenvalue, 0.0);
            let e0 = b.mode_on_grid(0);
            let c = 1.0 / domain.volume().sqrt();
            assert!(e0.iter().all(|v| (v - c).abs() < 1e-13));
            assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn orthonormal_and_neumann_on_every_domain() {
        for (domain, n) in [
            (Domain::Interval { length: PI }, 40),
            (Domain::Disk { radius: 1.0 }, 120),
            (Domain::BallRadial { radius: 2.0 }, 48),
        ] {
            let b = EigenBasis::build(domain, n).unwrap();
            let err = b.orthonormality_error();
            assert!(err <= 1e-10, "{domain:?}: orthonormality error {err}");
            let neu = b.neumann_residual();
            assert!(neu <= 1e-8, "{domain:?}: Neumann residual {neu}");
        }
    }

    #[test]
    fn minimal_quadrature_is_still_orthonormal() {
        let b =
            EigenBasis::build_with_quadrature(Domain::BallRadial { radius: 1.0 }, 32, 72).unwrap();
        assert!(b.orthonormality_error() <= 1e-10);
        let err = EigenBasis::build_with_quadrature(Domain::Interval { length: 1.0 }, 10, 20)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::QuadratureTooCoarse { required: 28, .. }
        ));
    }

    #[test]
    fn mode_cap_is_enforced() {
        let err = EigenBasis::build(Domain::Interval { length: 1.0 }, MAX_MODES + 1).unwrap_err();
        assert!(matches!(err, Error::TooManyModes { .. }));
    }

    #[test]
    fn grid_gradients_match_pointwise_evaluation() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 30).unwrap();
        let coeffs: Vec<f64> = (0..b.len())
            .map(|k| ((k * 7 % 5) as f64 - 2.0) / (1.0 + k as f64))
            .collect();
        let (vals, grads) = b.synthesize_grid_with_grad(&coeffs);
        for j in (0..b.nodes().len()).step_by(37) {
            let (v, g) = b.eval_with_grad(&coeffs, &b.nodes()[j]);
            assert!((v - vals[j]).abs() < 1e-12);
            for i in 0..2 {
                assert!((g[i] - grads[j][i]).abs() < 1e-10);
            }
        }
    }
}
