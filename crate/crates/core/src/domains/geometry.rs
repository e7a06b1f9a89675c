//! Quadratures for the pieces of a light cone cut by the domain: spheres
//! `{|x - c| = r} ∩ Ω`, balls `{|x - c| < r} ∩ Ω`, boundary walls
//! `{|x - c| < r} ∩ ∂Ω` and edges `{|x - c| = r} ∩ ∂Ω`.

use std::f64::consts::PI;

use super::quadrature::gauss_legendre_on;
use super::{norm, Domain, Point};
use crate::{Error, Result};

const TOL: f64 = 1e-12;

/// A quadrature node with its weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub x: Point,
    pub weight: f64,
}

/// A boundary node with weight `dσ` and exterior normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallPoint {
    pub x: Point,
    pub weight: f64,
    pub normal: Point,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Arc {
    Empty,
    Full,
    /// `[lo, hi]` with `hi > lo`, angles in radians (unwrapped).
    Range(f64, f64),
}

/// Angles `φ` for which `c + r(cos φ, sin φ)` lies inside the disk of
/// radius `big_r` about the origin.
fn circle_arc_inside_disk(big_r: f64, c: &Point, r: f64) -> Arc {
    let dist = norm(c);
    if r <= 0.0 {
        return Arc::Empty;
    }
    if dist <= TOL {
        return if r < big_r + TOL {
            Arc::Full
        } else {
            Arc::Empty
        };
    }
    let beta = (big_r * big_r - dist * dist - r * r) / (2.0 * r);
    let z = beta / dist;
    if z >= 1.0 {
        return Arc::Full;
    }
    if z <= -1.0 {
        return Arc::Empty;
    }
    let phi_c = c[1].atan2(c[0]);
    let half = PI - z.acos();
    Arc::Range(phi_c + PI - half, phi_c + PI + half)
}

/// Boundary angles `θ` with `|R(cos θ, sin θ) - c| < r`.
fn boundary_arc_within(big_r: f64, c: &Point, r: f64) -> Arc {
    let dist = norm(c);
    if r <= 0.0 {
        return Arc::Empty;
    }
    if dist <= TOL {
        return if r > big_r { Arc::Full } else { Arc::Empty };
    }
    let z = (big_r * big_r + dist * dist - r * r) / (2.0 * big_r * dist);
    if z <= -1.0 {
        return Arc::Full;
    }
    if z >= 1.0 {
        return Arc::Empty;
    }
    let theta_c = c[1].atan2(c[0]);
    let half = z.acos();
    Arc::Range(theta_c - half, theta_c + half)
}

fn angle_nodes(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_on(lo, hi, n)
}

fn full_circle_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * PI / n as f64;
    ((0..n).map(|j| j as f64 * h).collect(), vec![h; n])
}

fn require_radial_center(domain: &Domain, c: &Point) -> Result<()> {
    if let Domain::BallRadial { .. } = domain {
        if norm(c) > TOL {
            return Err(Error::UnsupportedGeometry(
                "radial ball cones must have their vertex at the centre".into(),
            ));
        }
    }
    Ok(())
}

/// Quadrature for the sphere `{|x - c| = r} ∩ Ω` with its surface measure
/// (counting measure in 1D, arc length in 2D, area in 3D). A zero radius
/// yields the single point `c` with zero weight.
pub fn sphere_section(
    domain: &Domain,
    c: &Point,
    r: f64,
    resolution: usize,
) -> Result<Vec<SurfacePoint>> {
    require_radial_center(domain, c)?;
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    if r == 0.0 {
        return Ok(vec![SurfacePoint { x: *c, weight: 0.0 }]);
    }
    Ok(match *domain {
        Domain::Interval { length } => [c[0] - r, c[0] + r]
            .into_iter()
            .filter(|x| *x >= -TOL && *x <= length + TOL)
            .map(|x| SurfacePoint {
                x: [x.clamp(0.0, length), 0.0, 0.0],
                weight: 1.0,
            })
            .collect(),
        Domain::BallRadial { radius } => {
            if r > radius + TOL {
                vec![]
            } else {
                vec![SurfacePoint {
                    x: [r, 0.0, 0.0],
                    weight: 4.0 * PI * r * r,
                }]
            }
        }
        Domain::Disk { radius } => {
            let (phis, ws) = match circle_arc_inside_disk(radius, c, r) {
                Arc::Empty => return Ok(vec![]),
                Arc::Full => full_circle_nodes(2 * resolution),
                Arc::Range(lo, hi) => angle_nodes(lo, hi, resolution),
            };
            phis.iter()
                .zip(ws)
                .map(|(phi, w)| SurfacePoint {
                    x: [c[0] + r * phi.cos(), c[1] + r * phi.sin(), 0.0],
                    weight: r * w,
                })
                .collect()
        }
    })
}

/// Volume quadrature for `{|x - c| < r} ∩ Ω`.
pub fn ball_section(
    domain: &Domain,
    c: &Point,
    r: f64,
    resolution: usize,
) -> Result<Vec<SurfacePoint>> {
    require_radial_center(domain, c)?;
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    if r == 0.0 {
        return Ok(vec![]);
    }
    Ok(match *domain {
        Domain::Interval { length } => {
            let a = (c[0] - r).max(0.0);
            let b = (c[0] + r).min(length);
            if b <= a {
                return Ok(vec![]);
            }
            let (xs, ws) = gauss_legendre_on(a, b, resolution);
            xs.into_iter()
                .zip(ws)
                .map(|(x, w)| SurfacePoint {
                    x: [x, 0.0, 0.0],
                    weight: w,
                })
                .collect()
        }
        Domain::BallRadial { radius } => {
            let (rs, ws) = gauss_legendre_on(0.0, r.min(radius), resolution);
            rs.into_iter()
                .zip(ws)
                .map(|(rho, w)| SurfacePoint {
                    x: [rho, 0.0, 0.0],
                    weight: 4.0 * PI * rho * rho * w,
                })
                .collect()
        }
        Domain::Disk { radius } => disk_ball_section(radius, c, r, resolution),
    })
}

fn disk_ball_section(big_r: f64, c: &Point, r: f64, resolution: usize) -> Vec<SurfacePoint> {
    let dist = norm(c);
    let on_boundary = dist >= big_r - 1e-10;
    let exit = |phi: f64| -> f64 {
        let cw = c[0] * phi.cos() + c[1] * phi.sin();
        if on_boundary {
            (-2.0 * cw).max(0.0)
        } else {
            -cw + (cw * cw + big_r * big_r - dist * dist).max(0.0).sqrt()
        }
    };
    // angular pieces, each with a smooth radial extent
    let mut pieces: Vec<(f64, f64, bool)> = Vec::new(); // (lo, hi, full radius r)
    let arc = circle_arc_inside_disk(big_r, c, r);
    let phi_c = c[1].atan2(c[0]);
    match arc {
        Arc::Full => pieces.push((0.0, 2.0 * PI, true)),
        Arc::Range(lo, hi) => {
            pieces.push((lo, hi, true));
            if on_boundary {
                // inward half-plane only: (φc + π/2, φc + 3π/2)
                let (a, b) = (phi_c + 0.5 * PI, phi_c + 1.5 * PI);
                if lo > a {
                    pieces.push((a, lo, false));
                }
                if b > hi {
                    pieces.push((hi, b, false));
                }
            } else {
                pieces.push((hi, lo + 2.0 * PI, false));
            }
        }
        Arc::Empty => {
            if on_boundary {
                pieces.push((phi_c + 0.5 * PI, phi_c + 1.5 * PI, false));
            } else {
                pieces.push((0.0, 2.0 * PI, false));
            }
        }
    }
    let mut out = Vec::new();
    for (lo, hi, full) in pieces {
        let periodic = (hi - lo - 2.0 * PI).abs() < 1e-14;
        let (phis, wphi) = if periodic {
            full_circle_nodes(2 * resolution)
        } else {
            angle_nodes(lo, hi, resolution)
        };
        for (phi, wp) in phis.into_iter().zip(wphi) {
            let extent = if full { r } else { exit(phi).min(r) };
            if extent <= 0.0 {
                continue;
            }
            let (rs, wr) = gauss_legendre_on(0.0, extent, resolution);
            let (s, co) = phi.sin_cos();
            for (rho, w) in rs.into_iter().zip(wr) {
                out.push(SurfacePoint {
                    x: [c[0] + rho * co, c[1] + rho * s, 0.0],
                    weight: wp * w * rho,
                });
            }
        }
    }
    out
}

/// Quadrature for the boundary wall `{|x - c| < r} ∩ ∂Ω` with its surface
/// measure `dσ` and exterior normals.
pub fn wall_section(
    domain: &Domain,
    c: &Point,
    r: f64,
    resolution: usize,
) -> Result<Vec<WallPoint>> {
    require_radial_center(domain, c)?;
    Ok(match *domain {
        Domain::Interval { length } => [0.0, length]
            .into_iter()
            .filter(|x| (x - c[0]).abs() < r)
            .map(|x| WallPoint {
                x: [x, 0.0, 0.0],
                weight: 1.0,
                normal: [if x < 0.5 * length { -1.0 } else { 1.0 }, 0.0, 0.0],
            })
            .collect(),
        Domain::BallRadial { radius } => {
            if r > radius {
                vec![WallPoint {
                    x: [radius, 0.0, 0.0],
                    weight: 4.0 * PI * radius * radius,
                    normal: [1.0, 0.0, 0.0],
                }]
            } else {
                vec![]
            }
        }
        Domain::Disk { radius } => {
            let (thetas, ws) = match boundary_arc_within(radius, c, r) {
                Arc::Empty => return Ok(vec![]),
                Arc::Full => {
                    let (t, _) = full_circle_nodes(2 * resolution);
                    let w = trapezoid_periodic(2 * resolution);
                    (t, w)
                }
                Arc::Range(lo, hi) => angle_nodes(lo, hi, resolution),
            };
            thetas
                .into_iter()
                .zip(ws)
                .map(|(th, w)| {
                    let (s, co) = th.sin_cos();
                    WallPoint {
                        x: [radius * co, radius * s, 0.0],
                        weight: radius * w,
                        normal: [co, s, 0.0],
                    }
                })
                .collect()
        }
    })
}

fn trapezoid_periodic(n: usize) -> Vec<f64> {
    vec![2.0 * PI / n as f64; n]
}

/// The edge `{|x - c| = r} ∩ ∂Ω` (disk only): zero or two boundary points.
pub fn edge_points(domain: &Domain, c: &Point, r: f64) -> Result<Vec<Point>> {
    let Domain::Disk { radius } = *domain else {
        return Err(Error::UnsupportedGeometry(
            "edges are only available on the disk".into(),
        ));
    };
    match boundary_arc_within(radius, c, r) {
        Arc::Range(lo, hi) => Ok([lo, hi]
            .into_iter()
            .map(|th| [radius * th.cos(), radius * th.sin(), 0.0])
            .collect()),
        _ => Ok(vec![]),
    }
}

/// `|dx/dr|` for an edge point as the sphere radius `r` varies (disk only).
pub fn edge_speed(domain: &Domain, c: &Point, r: f64) -> Result<f64> {
    let Domain::Disk { radius } = *domain else {
        return Err(Error::UnsupportedGeometry(
            "edges are only available on the disk".into(),
        ));
    };
    let dist = norm(c);
    if dist <= TOL {
        return Err(Error::UnsupportedGeometry(
            "centred sphere has no edge".into(),
        ));
    }
    let z = (radius * radius + dist * dist - r * r) / (2.0 * radius * dist);
    let s = (1.0 - z * z).max(0.0).sqrt();
    if s == 0.0 {
        // r → 0 at a boundary vertex: the limit of r / (|c| √(1 - z²)) is 1
        if (dist - radius).abs() < 1e-10 {
            return Ok(1.0);
        }
        return Ok(f64::INFINITY);
    }
    Ok(r / (dist * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(points: &[SurfacePoint]) -> f64 {
        points.iter().map(|p| p.weight).sum()
    }

    #[test]
    fn interior_sphere_and_ball_measures() {
        let disk = Domain::Disk { radius: 1.0 };
        let c = [0.2, -0.1, 0.0];
        let s = sphere_section(&disk, &c, 0.3, 16).unwrap();
        assert!((total(&s) - 2.0 * PI * 0.3).abs() < 1e-13);
        let b = ball_section(&disk, &c, 0.3, 16).unwrap();
        assert!((total(&b) - PI * 0.09).abs() < 1e-13);
        let ball = Domain::BallRadial { radius: 1.0 };
        let b = ball_section(&ball, &[0.0; 3], 0.5, 8).unwrap();
        assert!((total(&b) - 4.0 / 3.0 * PI * 0.125).abs() < 1e-13);
    }

    #[test]
    fn lens_area_matches_closed_form() {
        // disk of radius R about the origin, ball of radius r about a point at distance d
        let big_r: f64 = 1.0;
        for (c, r) in [
            ([1.0, 0.0, 0.0], 0.4),
            ([0.5, 0.3, 0.0], 0.8),
            ([0.0, -1.0, 0.0], 1.5),
        ] {
            let d = norm(&c);
            let lens = if d + r <= big_r {
                PI * r * r
            } else {
                let a1 = ((d * d + r * r - big_r * big_r) / (2.0 * d * r)).acos();
                let a2 = ((d * d + big_r * big_r - r * r) / (2.0 * d * big_r)).acos();
                r * r * a1 + big_r * big_r * a2
                    - 0.5
                        * ((-d + r + big_r) * (d + r - big_r) * (d - r + big_r) * (d + r + big_r))
                            .sqrt()
            };
            let got = total(&ball_section(&Domain::Disk { radius: big_r }, &c, r, 40).unwrap());
            assert!((got - lens).abs() < 1e-10, "{c:?} r={r}: {got} vs {lens}");
        }
    }

    #[test]
    fn boundary_vertex_arc_and_wall() {
        let disk = Domain::Disk { radius: 1.0 };
        let c = [1.0, 0.0, 0.0];
        let r: f64 = 0.5;
        let s = sphere_section(&disk, &c, r, 24).unwrap();
        let want = 2.0 * r * (r / 2.0).acos();
        assert!((total(&s) - want).abs() < 1e-13);
        for p in &s {
            assert!(norm(&p.x) <= 1.0 + 1e-12);
        }
        let wall = wall_section(&disk, &c, r, 24).unwrap();
        let w: f64 = wall.iter().map(|p| p.weight).sum();
        assert!((w - 2.0 * 2.0 * (r / 2.0).asin()).abs() < 1e-13);
        let edges = edge_points(&disk, &c, r).unwrap();
        assert_eq!(edges.len(), 2);
        for e in edges {
            assert!((norm(&e) - 1.0).abs() < 1e-14);
            assert!((norm(&[e[0] - 1.0, e[1], 0.0]) - r).abs() < 1e-13);
        }
    }

    #[test]
    fn edge_speed_matches_finite_difference() {
        let disk = Domain::Disk { radius: 1.0 };
        let c = [1.0, 0.0, 0.0];
        let r = 0.6;
        let h = 1e-6;
        let a = edge_points(&disk, &c, r - h).unwrap()[1];
        let b = edge_points(&disk, &c, r + h).unwrap()[1];
        let fd = norm(&[b[0] - a[0], b[1] - a[1], 0.0]) / (2.0 * h);
        assert!((edge_speed(&disk, &c, r).unwrap() - fd).abs() < 1e-6);
    }
}
