//! Truncated backward light cones and quadratures on their surfaces.
//!
//! Times are local to the vertex: a cone with vertex `(x0, t0)` is
//! `{(x, t) : |x - x0| < -(t - t0), S <= t - t0 <= T}` with `S < T <= 0`.

use serde::{Deserialize, Serialize};

use super::geometry::{ball_section, edge_points, edge_speed, sphere_section, wall_section};
use super::quadrature::gregory_weights;
use super::{norm, sub, Domain, Point};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub vertex: Point,
    /// Absolute time of the tip.
    pub vertex_time: f64,
    /// Local bottom time `S`.
    pub s: f64,
    /// Local top time `T`.
    pub t: f64,
}

impl ConeSpec {
    pub fn new(vertex: Point, vertex_time: f64, s: f64, t: f64) -> Self {
        ConeSpec {
            vertex,
            vertex_time,
            s,
            t,
        }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(self.s.is_finite() && self.t.is_finite() && self.vertex_time.is_finite()) {
            return Err(Error::InvalidCone("non-finite times".into()));
        }
        if !(self.s < self.t && self.t <= 0.0) {
            return Err(Error::InvalidCone(format!(
                "need S < T <= 0, got S = {}, T = {}",
                self.s, self.t
            )));
        }
        if !domain.contains(&self.vertex, 1e-9) {
            return Err(Error::InvalidCone(format!(
                "vertex {:?} outside the domain",
                self.vertex
            )));
        }
        if let Domain::BallRadial { .. } = domain {
            if norm(&self.vertex) > 1e-12 {
                return Err(Error::UnsupportedGeometry(
                    "radial ball cones must have their vertex at the centre".into(),
                ));
            }
        }
        Ok(())
    }

    /// Absolute time of the local time `tau`.
    pub fn absolute(&self, tau: f64) -> f64 {
        self.vertex_time + tau
    }

    pub fn absolute_window(&self) -> (f64, f64) {
        (self.absolute(self.s), self.absolute(self.t))
    }

    pub fn with_window(&self, s: f64, t: f64) -> Self {
        ConeSpec { s, t, ..*self }
    }

    pub fn has_boundary_vertex(&self, domain: &Domain) -> bool {
        domain.on_boundary(&self.vertex, 1e-9)
    }

    /// `x - x0`.
    pub fn local(&self, x: &Point) -> Point {
        sub(x, &self.vertex)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSurface {
    /// The characteristic surface `|x - x0| = -τ`.
    Lateral,
    /// The spatial slice `D_τ` at local time `tau`.
    Slice { tau: f64 },
    /// `∂Ω` inside the cone.
    BoundaryWall,
    /// The curve where the lateral surface meets `∂Ω`.
    Edge,
}

/// One space-time node. `normal` is `(ν_t, ν_x)`; for the lateral surface it
/// is the outward unit normal, for the wall and edge the spatial part is
/// the exterior normal of `Ω`, and for slices it is `(1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSample {
    pub tau: f64,
    pub x: Point,
    pub weight: f64,
    pub normal: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct ConeSurfaceQuadrature {
    pub surface: ConeSurface,
    pub samples: Vec<ConeSample>,
}

impl ConeSurfaceQuadrature {
    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    pub fn integrate(&self, f: impl Fn(&ConeSample) -> f64) -> f64 {
        self.samples.iter().map(|s| s.weight * f(s)).sum()
    }
}

/// Quadrature on one surface of `cone`. Time-parametrised surfaces use
/// `resolution + 1` uniform local times with Gregory end corrections and
/// `resolution` nodes per spatial direction.
pub fn cone_quadrature(
    cone: &ConeSpec,
    domain: &Domain,
    surface: ConeSurface,
    resolution: usize,
) -> Result<ConeSurfaceQuadrature> {
    cone.validate(domain)?;
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if matches!(surface, ConeSurface::Edge | ConeSurface::BoundaryWall)
        && !(matches!(domain, Domain::Disk { .. }) && cone.has_boundary_vertex(domain))
    {
        return Err(Error::UnsupportedGeometry(
            "edge and wall quadratures need a disk cone with its vertex on the boundary".into(),
        ));
    }
    let c = cone.vertex;
    let mut samples = Vec::new();
    if let ConeSurface::Slice { tau } = surface {
        if !(tau >= cone.s && tau <= cone.t) {
            return Err(Error::InvalidCone(format!(
                "slice time {tau} outside [S, T]"
            )));
        }
        for p in ball_section(domain, &c, -tau, resolution)? {
            samples.push(ConeSample {
                tau,
                x: p.x,
                weight: p.weight,
                normal: [1.0, 0.0, 0.0, 0.0],
            });
        }
        return Ok(ConeSurfaceQuadrature { surface, samples });
    }

    let n_t = resolution + 1;
    let h = (cone.t - cone.s) / resolution as f64;
    let wt = gregory_weights(n_t, h);
    let sqrt2 = std::f64::consts::SQRT_2;
    for (i, w_tau) in wt.iter().enumerate() {
        let tau = cone.s + i as f64 * h;
        let r = -tau;
        match surface {
            ConeSurface::Lateral => {
                for p in sphere_section(domain, &c, r, resolution)? {
                    let y = cone.local(&p.x);
                    let ny = norm(&y);
                    let dir = if ny > 0.0 {
                        [y[0] / ny, y[1] / ny, y[2] / ny]
                    } else {
                        [0.0; 3]
                    };
                    // the radial ball stores its nodes on the positive x axis
                    samples.push(ConeSample {
                        tau,
                        x: p.x,
                        weight: sqrt2 * p.weight * w_tau,
                        normal: [1.0 / sqrt2, dir[0] / sqrt2, dir[1] / sqrt2, dir[2] / sqrt2],
                    });
                }
            }
            ConeSurface::BoundaryWall => {
                for p in wall_section(domain, &c, r, resolution)? {
                    samples.push(ConeSample {
                        tau,
                        x: p.x,
                        weight: p.weight * w_tau,
                        normal: [0.0, p.normal[0], p.normal[1], p.normal[2]],
                    });
                }
            }
            ConeSurface::Edge => {
                if r <= 0.0 {
                    continue;
                }
                let speed = edge_speed(domain, &c, r)?;
                let line = (1.0 + speed * speed).sqrt();
                for x in edge_points(domain, &c, r)? {
                    let n = domain.outward_normal(&x);
                    samples.push(ConeSample {
                        tau,
                        x,
                        weight: line * w_tau,
                        normal: [0.0, n[0], n[1], n[2]],
                    });
                }
            }
            ConeSurface::Slice { .. } => unreachable!(),
        }
    }
    Ok(ConeSurfaceQuadrature { surface, samples })
}
