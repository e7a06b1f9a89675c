//! Model domains, their Neumann eigenbases and light-cone geometry.

mod basis;
pub mod bessel;
mod cone;
mod geometry;
pub mod quadrature;
mod roots;

use serde::{Deserialize, Serialize};

pub use basis::{BasisDescriptor, BoundaryGrid, EigenBasis, Mode, ModeShape, Parity, MAX_MODES};
pub use cone::{cone_quadrature, ConeSample, ConeSpec, ConeSurface, ConeSurfaceQuadrature};
pub use geometry::{
    ball_section, edge_points, edge_speed, sphere_section, wall_section, SurfacePoint, WallPoint,
};
pub use roots::RootCache;

use crate::{Error, Result};

/// A point in space. Unused trailing coordinates are zero: intervals use
/// `x[0]`, the disk uses `(x[0], x[1])`.
pub type Point = [f64; 3];

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// The three model domains. `BallRadial` restricts every field to radial
/// symmetry about the centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { length: f64 },
    Disk { radius: f64 },
    BallRadial { radius: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let size = self.size();
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "size must be positive, got {size}"
            )));
        }
        Ok(())
    }

    /// Length `L` for the interval, radius `R` otherwise.
    pub fn size(&self) -> f64 {
        match *self {
            Domain::Interval { length } => length,
            Domain::Disk { radius } | Domain::BallRadial { radius } => radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Disk { .. } => 2,
            Domain::BallRadial { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::Interval { .. } => "interval",
            Domain::Disk { .. } => "disk",
            Domain::BallRadial { .. } => "ball_radial",
        }
    }

    /// Numeric tag used in binary coefficient records.
    pub fn kind_code(&self) -> u32 {
        match self {
            Domain::Interval { .. } => 0,
            Domain::Disk { .. } => 1,
            Domain::BallRadial { .. } => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Domain::Interval { length } => length,
            Domain::Disk { radius } => PI * radius * radius,
            Domain::BallRadial { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }

    /// `|∂Ω|`: two atoms for the interval, circumference, sphere area.
    pub fn boundary_measure(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Domain::Interval { .. } => 2.0,
            Domain::Disk { radius } => 2.0 * PI * radius,
            Domain::BallRadial { radius } => 4.0 * PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { length } => length,
            Domain::Disk { radius } | Domain::BallRadial { radius } => 2.0 * radius,
        }
    }

    /// Closed-domain membership with absolute tolerance `tol`.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        match *self {
            Domain::Interval { length } => {
                p[0] >= -tol && p[0] <= length + tol && p[1] == 0.0 && p[2] == 0.0
            }
            Domain::Disk { radius } => p[2] == 0.0 && norm(p) <= radius + tol,
            Domain::BallRadial { radius } => norm(p) <= radius + tol,
        }
    }

    /// Whether `p` lies on the boundary within `tol`.
    pub fn on_boundary(&self, p: &Point, tol: f64) -> bool {
        match *self {
            Domain::Interval { length } => p[0].abs() <= tol || (p[0] - length).abs() <= tol,
            Domain::Disk { radius } | Domain::BallRadial { radius } => {
                (norm(p) - radius).abs() <= tol
            }
        }
    }

    /// Exterior unit normal at a boundary point.
    pub fn outward_normal(&self, p: &Point) -> Point {
        match *self {
            Domain::Interval { length } => {
                if p[0] < 0.5 * length {
                    [-1.0, 0.0, 0.0]
                } else {
                    [1.0, 0.0, 0.0]
                }
            }
            _ => {
                let r = norm(p);
                scale(p, 1.0 / r)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_json_is_tagged() {
        let d: Domain = serde_json::from_str(r#"{"kind":"disk","radius":1.5}"#).unwrap();
        assert_eq!(d, Domain::Disk { radius: 1.5 });
        assert!(serde_json::from_str::<Domain>(r#"{"kind":"disk","radius":1,"x":2}"#).is_err());
        assert!(Domain::Interval { length: -1.0 }.validate().is_err());
    }

    #[test]
    fn measures() {
        use std::f64::consts::PI;
        assert!((Domain::BallRadial { radius: 2.0 }.boundary_measure() - 16.0 * PI).abs() < 1e-12);
        assert!((Domain::Disk { radius: 1.0 }.volume() - PI).abs() < 1e-15);
    }
}
