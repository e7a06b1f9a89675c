use rayon::prelude::*;
use serde::Serialize;

use crate::domains::quadrature::trapezoid_weights;
use crate::solver::{duhamel_solve, Trajectory, WaveState};
use crate::spectral::{
    bessel_potential, grid_lq, norm, quintic, NormSpec, SpectralField, TimeWindow,
};
use crate::{Error, Result};

/// Both sides of the inhomogeneous estimate on one window `[t0, t0 + ℓ]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InhomTerms {
    pub window: TimeWindow,
    /// `‖u‖_{L⁵ W^{3/10,5}}`.
    pub l5_w: f64,
    /// `max_t ‖u‖_{H¹}` and `max_t ‖∂_t u‖_{L²}` over the samples.
    pub c0_h1: f64,
    pub c0_l2: f64,
    /// `‖u(t0)‖_{H¹}` and `‖∂_t u(t0)‖_{L²}`.
    pub data_h1: f64,
    pub data_l2: f64,
    /// `‖f₁‖_{L¹ L²}`.
    pub f1: f64,
    /// `‖f₂‖_{L^{5/4} W^{7/10,5/4}}`.
    pub f2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InhomReport {
    /// Windows of length `T, T/2, T/4, …` starting at the data time.
    pub windows: Vec<InhomTerms>,
    /// `max |ratio / ratio(full window) - 1|`.
    pub spread: f64,
}

fn time_lp(h: f64, values: &[f64], p: f64) -> f64 {
    grid_lq(&trapezoid_weights(values.len(), h), values, p)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// Evaluates every term of the inhomogeneous Strichartz estimate for
/// `u_tt - Δu = f₁ + f₂` on `n_windows` nested dyadic windows. Forcings are
/// sampled every `dt` from the data time.
pub fn inhom_strichartz_check(
    data: &WaveState,
    f1: &[SpectralField],
    f2: &[SpectralField],
    dt: f64,
    n_windows: usize,
) -> Result<InhomReport> {
    if f1.len() != f2.len() {
        return Err(Error::ForcingMismatch(format!(
            "{} f₁ samples but {} f₂ samples",
            f1.len(),
            f2.len()
        )));
    }
    let total: Vec<SpectralField> = f1.iter().zip(f2).map(|(a, b)| a.axpy(1.0, b)).collect();
    let traj = duhamel_solve(data, &total, dt)?;
    let states = traj.states();
    let n = states.len() - 1;
    let w_norm = NormSpec::FractionalWsp { s: 0.3, p: 5.0 };
    let h1 = NormSpec::SobolevHs { s: 1.0 };
    let f2_norm = NormSpec::FractionalWsp { s: 0.7, p: 1.25 };
    // per-sample spatial norms, computed once
    let per: Vec<[f64; 5]> = (0..=n)
        .into_par_iter()
        .map(|i| {
            Ok([
                norm(&states[i].u, &w_norm)?,
                norm(&states[i].u, &h1)?,
                states[i].v.l2(),
                f1[i].l2(),
                norm(&f2[i], &f2_norm)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut windows = Vec::new();
    for k in 0..n_windows.max(1) {
        let m = n >> k;
        if m < 2 || (m << k) != n {
            return Err(Error::InsufficientSamples(format!(
                "{n} steps do not split into {n_windows} dyadic windows of at least two steps"
            )));
        }
        let col = |j: usize| -> Vec<f64> { per[..=m].iter().map(|r| r[j]).collect() };
        let l5_w = time_lp(dt, &col(0), 5.0);
        let c0_h1 = max_of(col(1).into_iter());
        let c0_l2 = max_of(col(2).into_iter());
        let f1n = time_lp(dt, &col(3), 1.0);
        let f2n = time_lp(dt, &col(4), 1.25);
        let (data_h1, data_l2) = (per[0][1], per[0][2]);
        let lhs = l5_w + c0_h1 + c0_l2;
        let rhs = data_h1 + data_l2 + f1n + f2n;
        windows.push(InhomTerms {
            window: TimeWindow::new(data.t, data.t + m as f64 * dt),
            l5_w,
            c0_h1,
            c0_l2,
            data_h1,
            data_l2,
            f1: f1n,
            f2: f2n,
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        });
    }
    let r0 = windows[0].ratio;
    let spread = if r0 > 0.0 {
        windows
            .iter()
            .map(|w| (w.ratio / r0 - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(InhomReport { windows, spread })
}

/// Both sides of the quintic product estimate and of its two Hölder
/// ingredients over the recorded states in a window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductReport {
    pub window: TimeWindow,
    /// True when `u ≡ 0`: every ratio is then 0/0 and left at 0.
    pub skipped: bool,
    /// `‖u⁵‖_{L^{5/4} W^{7/10,5/4}}`.
    pub lhs: f64,
    pub l5_l10: f64,
    pub linf_l6: f64,
    pub linf_h1: f64,
    /// `‖u‖⁴_{L⁵L¹⁰} ‖u‖^{3/10}_{L^∞L⁶} ‖u‖^{7/10}_{L^∞H¹}`.
    pub rhs: f64,
    pub ratio: f64,
    /// `‖u⁵‖_{L^{5/4} L^{30/17}}` against `‖u‖⁴_{L⁵L¹⁰} ‖u‖_{L^∞L⁶}`.
    pub holder_l: f64,
    pub holder_l_rhs: f64,
    /// `‖∇(u⁵)‖_{L^{5/4} L^{10/9}}` against `5‖u‖⁴_{L⁵L¹⁰} ‖u‖_{L^∞H¹}`.
    pub holder_grad: f64,
    pub holder_grad_rhs: f64,
}

/// Evaluates the product estimate on the states of `traj` inside `window`.
pub fn nonlinear_product_check(traj: &Trajectory, window: TimeWindow) -> Result<ProductReport> {
    let tol = 1e-9 * traj.dt_record();
    let states: Vec<&WaveState> = traj
        .states()
        .iter()
        .filter(|s| window.contains(s.t, tol))
        .collect();
    if states.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} recorded states in [{}, {}]",
            states.len(),
            window.start,
            window.end
        )));
    }
    let h = traj.dt_record();
    let basis = traj.basis();
    let w = basis.weights();
    let per: Vec<[f64; 6]> = states
        .par_iter()
        .map(|s| {
            let (u, grad) = s.u.grid_values_with_grad();
            let u5: Vec<f64> = u.iter().map(|x| x.powi(5)).collect();
            let du5: Vec<f64> = u
                .iter()
                .zip(&grad)
                .map(|(x, g)| 5.0 * x.powi(4) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
                .collect();
            let lhs = grid_lq(
                w,
                &bessel_potential(&quintic(&s.u), 0.7).grid_values(),
                1.25,
            );
            Ok([
                lhs,
                grid_lq(w, &u, 10.0),
                grid_lq(w, &u, 6.0),
                norm(&s.u, &NormSpec::SobolevHs { s: 1.0 })?,
                grid_lq(w, &u5, 30.0 / 17.0),
                grid_lq(w, &du5, 10.0 / 9.0),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |j: usize| -> Vec<f64> { per.iter().map(|r| r[j]).collect() };
    let lhs = time_lp(h, &col(0), 1.25);
    let l5_l10 = time_lp(h, &col(1), 5.0);
    let linf_l6 = max_of(col(2).into_iter());
    let linf_h1 = max_of(col(3).into_iter());
    let rhs = l5_l10.powi(4) * linf_l6.powf(0.3) * linf_h1.powf(0.7);
    let holder_l = time_lp(h, &col(4), 1.25);
    let holder_grad = time_lp(h, &col(5), 1.25);
    let skipped = rhs == 0.0;
    Ok(ProductReport {
        window,
        skipped,
        lhs,
        l5_l10,
        linf_l6,
        linf_h1,
        rhs,
        ratio: if skipped { 0.0 } else { lhs / rhs },
        holder_l,
        holder_l_rhs: l5_l10.powi(4) * linf_l6,
        holder_grad,
        holder_grad_rhs: 5.0 * l5_l10.powi(4) * linf_h1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Domain, EigenBasis};
    use crate::solver::{evolve, Recorders, Scheme};
    use std::f64::consts::PI;

    #[test]
    fn zero_forcing_reduces_to_linear_terms() {
        let b = EigenBasis::build(Domain::Interval { length: PI }, 16).unwrap();
        let u0 = SpectralField::mode(&b, 3);
        let data = WaveState::new(u0, SpectralField::zeros(&b), 0.0).unwrap();
        let zero = vec![SpectralField::zeros(&b); 65];
        let r = inhom_strichartz_check(&data, &zero, &zero, 1.0 / 64.0, 4).unwrap();
        assert_eq!(r.windows.len(), 4);
        for w in &r.windows {
            assert_eq!((w.f1, w.f2), (0.0, 0.0));
            assert!((w.data_h1 - 10f64.sqrt()).abs() < 1e-12);
            // energy of a single cosine: ‖u‖²_{H¹}·cos² + ‖u_t‖² sin² peaks at t = 0
            assert!((w.c0_h1 - 10f64.sqrt()).abs() < 1e-12);
        }
        assert!(inhom_strichartz_check(&data, &zero[..10], &zero[..10], 0.1, 4).is_err());
    }

    #[test]
    fn zero_mode_forcing_matches_ode() {
        let b = EigenBasis::build(Domain::Interval { length: PI }, 8).unwrap();
        let data = WaveState::zeros(&b);
        let c = 0.5;
        let f2 = vec![SpectralField::constant(&b, c); 65];
        let zero = vec![SpectralField::zeros(&b); 65];
        let r = inhom_strichartz_check(&data, &zero, &f2, 1.0 / 64.0, 1).unwrap();
        // u = c t²/2, u_t = c t; trapezoid Duhamel is exact for constant forcing
        let w = &r.windows[0];
        assert!((w.c0_l2 - c * PI.sqrt()).abs() < 1e-12);
        assert!((w.c0_h1 - 0.5 * c * PI.sqrt()).abs() < 1e-12);
        assert!((w.f2 - c * PI.powf(0.8)).abs() < 1e-12);
    }

    #[test]
    fn product_check_on_constants_and_zero() {
        let b = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 8).unwrap();
        let zero = evolve(&WaveState::zeros(&b), 1.0, 0.01, 0.1, &Recorders::default()).unwrap();
        let r = nonlinear_product_check(&zero, TimeWindow::new(0.0, 1.0)).unwrap();
        assert!(r.skipped && r.ratio == 0.0);
        // space-constant states: every spatial norm is |Ω|^{1/p}·|a|
        let vol = 4.0 * PI / 3.0;
        let mut traj = Trajectory::start(
            &WaveState::new(
                SpectralField::constant(&b, 0.5),
                SpectralField::zeros(&b),
                0.0,
            )
            .unwrap(),
            0.1,
            0.1,
            Scheme::Strang,
            &Recorders::default(),
        )
        .unwrap();
        for k in 1..=10 {
            let a = 0.5 + 0.02 * k as f64;
            traj.push(
                WaveState::new(
                    SpectralField::constant(&b, a),
                    SpectralField::zeros(&b),
                    k as f64 * 0.1,
                )
                .unwrap(),
            )
            .unwrap();
        }
        let r = nonlinear_product_check(&traj, TimeWindow::new(0.0, 1.0)).unwrap();
        assert!((r.linf_l6 - 0.7 * vol.powf(1.0 / 6.0)).abs() < 1e-12);
        assert!((r.linf_h1 - 0.7 * vol.sqrt()).abs() < 1e-12);
        assert!(r.holder_l <= r.holder_l_rhs * (1.0 + 1e-12));
        assert_eq!(r.holder_grad, 0.0);
        assert!(r.ratio > 0.0 && r.ratio.is_finite());
    }

    #[test]
    fn product_ratio_is_homogeneous() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 30).unwrap();
        let u = SpectralField::from_fn(&b, |p| (-(p[0] * p[0] + p[1] * p[1]) * 4.0).exp());
        let s = WaveState::new(u, SpectralField::zeros(&b), 0.0).unwrap();
        let traj = evolve(&s, 0.5, 0.01, 0.05, &Recorders::default()).unwrap();
        let r1 = nonlinear_product_check(&traj, TimeWindow::new(0.0, 0.5)).unwrap();
        let mut scaled = Trajectory::start(
            &WaveState::new(
                traj.states()[0].u.scaled(3.0),
                traj.states()[0].v.scaled(3.0),
                0.0,
            )
            .unwrap(),
            0.01,
            0.05,
            Scheme::Strang,
            &Recorders::default(),
        )
        .unwrap();
        for s in &traj.states()[1..] {
            scaled
                .push(WaveState::new(s.u.scaled(3.0), s.v.scaled(3.0), s.t).unwrap())
                .unwrap();
        }
        let r3 = nonlinear_product_check(&scaled, TimeWindow::new(0.0, 0.5)).unwrap();
        assert!((r1.ratio - r3.ratio).abs() < 1e-10 * r1.ratio);
        assert!(r1.holder_l <= r1.holder_l_rhs && r1.holder_grad <= r1.holder_grad_rhs);
    }
}
