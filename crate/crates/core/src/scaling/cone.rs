use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{fmt, CsvRow};
use crate::domains::quadrature::gregory_weights;
use crate::domains::{ball_section, ConeSpec};
use crate::solver::Trajectory;
use crate::spectral::grid_lq;
use crate::{Error, Result};

/// `(∫_S^T (∫_{|x - x0| < -τ} |u|^q dx)^{p/q} dτ)^{1/p}` over a registered
/// cone, with the slice resolution of its registration.
pub fn cone_mixed_norm(traj: &Trajectory, cone: &ConeSpec, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::InvalidNorm(format!(
            "need finite p, q >= 1, got ({p}, {q})"
        )));
    }
    let trace = traj.cone_trace(cone)?;
    let res = trace.registration.resolution;
    let slices = trace.slices_between(cone.s, cone.t)?;
    let domain = *traj.basis().domain();
    let inner = slices
        .par_iter()
        .map(|sl| {
            let r = -sl.tau;
            if r <= 0.0 {
                return Ok(0.0);
            }
            let state = traj.state_at(cone.absolute(sl.tau))?;
            let pts = ball_section(&domain, &cone.vertex, r, res)?;
            let w: Vec<f64> = pts.iter().map(|p| p.weight).collect();
            let v: Vec<f64> = pts.iter().map(|p| state.u.eval(&p.x)).collect();
            Ok(grid_lq(&w, &v, q))
        })
        .collect::<Result<Vec<f64>>>()?;
    let wt = gregory_weights(inner.len(), traj.dt_record());
    Ok(grid_lq(&wt, &inner, p))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeNormRow {
    pub t: f64,
    pub value: f64,
}

impl CsvRow for ConeNormRow {
    fn header() -> Vec<&'static str> {
        vec!["t", "mixed_norm"]
    }

    fn row(&self) -> Vec<String> {
        vec![fmt(self.t), fmt(self.value)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeNormScan {
    /// Rows ordered from the largest `|t|` to the smallest.
    pub rows: Vec<ConeNormRow>,
    /// Whether the norm shrinks as `t → 0⁻`.
    pub nonincreasing: bool,
}

/// [`cone_mixed_norm`] over `K_t^0` for each bottom time `t`.
pub fn cone_norm_scan(
    traj: &Trajectory,
    cone: &ConeSpec,
    t_values: &[f64],
    p: f64,
    q: f64,
) -> Result<ConeNormScan> {
    let mut ts = t_values.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows = ts
        .iter()
        .map(|&t| {
            Ok(ConeNormRow {
                t,
                value: cone_mixed_norm(traj, &cone.with_window(t, 0.0), p, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = rows
        .windows(2)
        .all(|w| w[1].value <= w[0].value * (1.0 + 1e-12));
    Ok(ConeNormScan {
        rows,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Domain, EigenBasis};
    use crate::solver::{evolve, Recorders, Scheme, WaveState};
    use crate::spectral::SpectralField;
    use std::f64::consts::PI;

    #[test]
    fn unit_field_matches_ball_volume_integral() {
        let b = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 6).unwrap();
        let cone = ConeSpec::new([0.0; 3], 1.0, -1.0, 0.0);
        let rec = Recorders::default().with_cone(cone, 8);
        let one = |t: f64| {
            WaveState::new(
                SpectralField::constant(&b, 1.0),
                SpectralField::zeros(&b),
                t,
            )
            .unwrap()
        };
        let h = 0.01;
        let mut traj = Trajectory::start(&one(0.0), h, h, Scheme::Strang, &rec).unwrap();
        for k in 1..=100 {
            traj.push(one(k as f64 * h)).unwrap();
        }
        let (p, q) = (5.0, 10.0);
        let got = cone_mixed_norm(&traj, &cone.with_window(-0.8, 0.0), p, q).unwrap();
        // ∫_{-0.8}^0 ((4π/3)|s|³)^{1/2} ds = (4π/3)^{1/2} 0.8^{5/2} / (5/2)
        let want = ((4.0 * PI / 3.0).sqrt() * 0.8f64.powf(2.5) / 2.5).powf(0.2);
        assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
        let scan = cone_norm_scan(&traj, &cone, &[-0.8, -0.4, -0.2, -0.1], p, q).unwrap();
        assert!(scan.nonincreasing);
    }

    #[test]
    fn zero_field_and_unregistered_cone() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 10).unwrap();
        let cone = ConeSpec::new([0.3, 0.0, 0.0], 0.5, -0.5, 0.0);
        let traj = evolve(
            &WaveState::zeros(&b),
            0.5,
            0.05,
            0.05,
            &Recorders::default().with_cone(cone, 6),
        )
        .unwrap();
        assert_eq!(cone_mixed_norm(&traj, &cone, 5.0, 10.0).unwrap(), 0.0);
        let other = ConeSpec::new([0.0; 3], 0.5, -0.5, 0.0);
        assert!(matches!(
            cone_mixed_norm(&traj, &other, 5.0, 10.0),
            Err(Error::UnregisteredCone)
        ));
    }
}
