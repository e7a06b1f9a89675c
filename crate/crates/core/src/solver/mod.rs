//! Time evolution: exact linear propagation, Strang-split stepping of the
//! quintic equation, Duhamel solves and trajectory recording.

mod trajectory;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domains::EigenBasis;
use crate::spectral::{halfwave_sin, SpectralField};
use crate::{Error, Result};

pub use trajectory::{
    BoundaryTrace, ConeRegistration, ConeSlice, ConeTrace, EdgeSample, Recorders, Trajectory,
};

/// Sup-norm threshold of the divergence guard.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// `(u, ∂_t u)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
}

impl WaveState {
    pub fn new(u: SpectralField, v: SpectralField, t: f64) -> Result<Self> {
        if !Arc::ptr_eq(u.basis(), v.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(WaveState { u, v, t })
    }

    pub fn zeros(basis: &Arc<EigenBasis>) -> Self {
        WaveState {
            u: SpectralField::zeros(basis),
            v: SpectralField::zeros(basis),
            t: 0.0,
        }
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        self.u.basis()
    }

    /// `½(‖∇u‖² + ‖v‖²)` by Parseval.
    pub fn linear_energy(&self) -> f64 {
        0.5 * (self.u.dirichlet_energy() + self.v.l2().powi(2))
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .coeffs()
            .iter()
            .chain(self.v.coeffs())
            .all(|c| c.is_finite())
    }
}

/// Per-mode linear flow over `tau`: `u ← c u + s v`, `v ← -ω² s u + c v`.
#[derive(Clone, Debug)]
struct LinearFlow {
    cos: Vec<f64>,
    sin_over: Vec<f64>,
    sin_times: Vec<f64>,
}

impl LinearFlow {
    fn new(basis: &EigenBasis, tau: f64) -> Self {
        let mut cos = Vec::with_capacity(basis.len());
        let mut sin_over = Vec::with_capacity(basis.len());
        let mut sin_times = Vec::with_capacity(basis.len());
        for m in basis.modes() {
            let w = m.frequency;
            cos.push((tau * w).cos());
            sin_over.push(halfwave_sin(tau, m.eigenvalue));
            sin_times.push(w * (tau * w).sin());
        }
        LinearFlow {
            cos,
            sin_over,
            sin_times,
        }
    }

    fn apply(&self, u: &mut [f64], v: &mut [f64]) {
        for k in 0..u.len() {
            let (a, b) = (u[k], v[k]);
            u[k] = self.cos[k] * a + self.sin_over[k] * b;
            v[k] = -self.sin_times[k] * a + self.cos[k] * b;
        }
    }
}

/// Exact solution of the linear Neumann wave equation at `t_target`.
pub fn linear_evolve(state: &WaveState, t_target: f64) -> WaveState {
    let flow = LinearFlow::new(state.basis(), t_target - state.t);
    let mut out = state.clone();
    flow.apply(out.u.coeffs_mut(), out.v.coeffs_mut());
    out.t = t_target;
    out
}

/// `e^{itω} f` as the real pair `(cos(tω) f, sin(tω) f)`.
pub fn halfwave(field: &SpectralField, t: f64) -> (SpectralField, SpectralField) {
    let mut re = field.clone();
    let mut im = field.clone();
    for (k, m) in field.basis().modes().iter().enumerate() {
        let (s, c) = (t * m.frequency).sin_cos();
        re.coeffs_mut()[k] *= c;
        im.coeffs_mut()[k] *= s;
    }
    (re, im)
}

/// Adjoint of `f ↦ (t_i ↦ e^{it_iω} f)` with time weights `w_i`:
/// `Σ_i w_i (cos(t_iω) re_i + sin(t_iω) im_i)`.
pub fn halfwave_adjoint(
    times: &[f64],
    weights: &[f64],
    re: &[SpectralField],
    im: &[SpectralField],
) -> Result<SpectralField> {
    if times.is_empty()
        || times.len() != weights.len()
        || times.len() != re.len()
        || re.len() != im.len()
    {
        return Err(Error::InvalidArgument(
            "halfwave adjoint: inconsistent sample counts".into(),
        ));
    }
    let basis = re[0].basis();
    let mut out = SpectralField::zeros(basis);
    for i in 0..times.len() {
        for (k, m) in basis.modes().iter().enumerate() {
            let (s, c) = (times[i] * m.frequency).sin_cos();
            out.coeffs_mut()[k] += weights[i] * (c * re[i].coeffs()[k] + s * im[i].coeffs()[k]);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Half linear flow, potential kick, half linear flow.
    #[default]
    Strang,
    /// Exact linear flow with trapezoid Duhamel forcing.
    Duhamel,
}

/// Strang stepper with cached half-step propagators. `dt` may be negative,
/// which steps backwards in time.
#[derive(Clone, Debug)]
pub struct Stepper {
    basis: Arc<EigenBasis>,
    dt: f64,
    half: LinearFlow,
}

impl Stepper {
    pub fn new(basis: &Arc<EigenBasis>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must be finite and nonzero, got {dt}"
            )));
        }
        Ok(Stepper {
            basis: basis.clone(),
            dt,
            half: LinearFlow::new(basis, 0.5 * dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &mut WaveState) -> Result<()> {
        if !Arc::ptr_eq(state.basis(), &self.basis) {
            return Err(Error::BasisMismatch);
        }
        let t_fail = state.t;
        self.half.apply(state.u.coeffs_mut(), state.v.coeffs_mut());
        let mut values = state.u.grid_values();
        let mut sup: f64 = 0.0;
        for u in values.iter_mut() {
            sup = sup.max(u.abs());
            *u = u.powi(5);
        }
        if !sup.is_finite() || sup > BLOWUP_THRESHOLD {
            return Err(Error::Diverged {
                time: t_fail,
                reason: format!("sup |u| = {sup:e} during kick"),
            });
        }
        let kick = self.basis.analyze_grid(&values);
        for (v, f) in state.v.coeffs_mut().iter_mut().zip(&kick) {
            *v -= self.dt * f;
        }
        self.half.apply(state.u.coeffs_mut(), state.v.coeffs_mut());
        state.t += self.dt;
        if !state.is_finite() {
            return Err(Error::Diverged {
                time: t_fail,
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(())
    }
}

/// One Strang step of `u_tt - Δu + u⁵ = 0` forward by `dt > 0`.
pub fn nonlinear_step(state: &WaveState, dt: f64) -> Result<WaveState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let mut out = state.clone();
    Stepper::new(state.basis(), dt)?.step(&mut out)?;
    Ok(out)
}

/// Steps of size `dt` in one recording interval, if `dt` divides it.
fn steps_per(interval: f64, dt: f64) -> Result<usize> {
    let n = (interval / dt).round();
    if n < 1.0 || ((n * dt) - interval).abs() > 1e-9 * interval.abs() {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} does not divide the interval {interval}"
        )));
    }
    Ok(n as usize)
}

/// Nonlinear evolution to `t_final`, recording every `dt_record`.
pub fn evolve(
    state: &WaveState,
    t_final: f64,
    dt: f64,
    dt_record: f64,
    recorders: &Recorders,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt_record > 0.0) {
        return Err(Error::InvalidArgument(
            "dt and dt_record must be positive".into(),
        ));
    }
    if !(t_final > state.t) {
        return Err(Error::InvalidArgument(format!(
            "final time {t_final} must exceed the initial time {}",
            state.t
        )));
    }
    let inner = steps_per(dt_record, dt)?;
    let n_records = steps_per(t_final - state.t, dt_record)?;
    recorders.validate(state.basis().domain(), state.t, t_final, dt_record)?;
    let stepper = Stepper::new(state.basis(), dt)?;
    let mut traj = Trajectory::start(state, dt, dt_record, Scheme::Strang, recorders)?;
    let mut cur = state.clone();
    for i in 1..=n_records {
        for _ in 0..inner {
            stepper.step(&mut cur)?;
        }
        // pin the clock to the record grid so long runs do not drift
        cur.t = state.t + i as f64 * dt_record;
        traj.push(cur.clone())?;
    }
    Ok(traj)
}

/// Linear evolution with forcing `f` sampled at `t_0 + i·dt`, `i = 0..=n`:
/// `u_tt - Δu = f`, trapezoid rule in the Duhamel integral with exact
/// propagator kernels. Records every step.
pub fn duhamel_solve(data: &WaveState, forcing: &[SpectralField], dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if forcing.len() < 2 {
        return Err(Error::ForcingMismatch(
            "need at least two forcing samples".into(),
        ));
    }
    if let Some(i) = forcing
        .iter()
        .position(|f| !Arc::ptr_eq(f.basis(), data.basis()))
    {
        return Err(Error::ForcingMismatch(format!(
            "forcing sample {i} uses another basis"
        )));
    }
    let flow = LinearFlow::new(data.basis(), dt);
    let mut traj = Trajectory::start(data, dt, dt, Scheme::Duhamel, &Recorders::default())?;
    let mut cur = data.clone();
    for (n, pair) in forcing.windows(2).enumerate() {
        let (f0, f1) = (pair[0].coeffs(), pair[1].coeffs());
        let (u, v) = (cur.u.coeffs_mut(), cur.v.coeffs_mut());
        flow.apply(u, v);
        let u = cur.u.coeffs_mut();
        for k in 0..u.len() {
            u[k] += 0.5 * dt * flow.sin_over[k] * f0[k];
        }
        let v = cur.v.coeffs_mut();
        for k in 0..v.len() {
            v[k] += 0.5 * dt * (flow.cos[k] * f0[k] + f1[k]);
        }
        cur.t = data.t + (n + 1) as f64 * dt;
        traj.push(cur.clone())?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use std::f64::consts::PI;

    fn interval(n: usize) -> Arc<EigenBasis> {
        EigenBasis::build(Domain::Interval { length: PI }, n).unwrap()
    }

    #[test]
    fn linear_examples() {
        let b = interval(6);
        let s = WaveState::new(SpectralField::mode(&b, 1), SpectralField::zeros(&b), 0.0).unwrap();
        let e = linear_evolve(&s, PI);
        assert!((e.u.coeffs()[1] + 1.0).abs() < 1e-15);
        assert!(e.v.coeffs()[1].abs() < 1e-15);
        let s = WaveState::new(SpectralField::zeros(&b), SpectralField::mode(&b, 0), 0.0).unwrap();
        assert!((linear_evolve(&s, 2.0).u.coeffs()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_group_property_and_energy() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 30).unwrap();
        let u = SpectralField::new(b.clone(), (0..30).map(|k| 1.0 / (1.0 + k as f64)).collect())
            .unwrap();
        let v = SpectralField::new(
            b.clone(),
            (0..30).map(|k| ((k % 3) as f64 - 1.0) * 0.2).collect(),
        )
        .unwrap();
        let s = WaveState::new(u, v, 0.0).unwrap();
        let there = linear_evolve(&s, 1.7);
        assert!((there.linear_energy() - s.linear_energy()).abs() <= 1e-12 * s.linear_energy());
        let back = linear_evolve(&there, 0.0);
        for (a, c) in back.u.coeffs().iter().zip(s.u.coeffs()) {
            assert!((a - c).abs() < 1e-13);
        }
    }

    #[test]
    fn halfwave_composition_and_phase() {
        let b = interval(8);
        let f = SpectralField::new(b.clone(), (0..8).map(|k| (k as f64).sin()).collect()).unwrap();
        let (re, im) = halfwave(&f, 0.0);
        assert_eq!(re.coeffs(), f.coeffs());
        assert!(im.is_zero());
        // e^{itω}e^{isω}f: complex multiplication of the pairs per mode
        let (t, s) = (0.4, 1.1);
        let (a_re, a_im) = halfwave(&f, t);
        let (b_re, b_im) = halfwave(&f, t + s);
        for k in 0..8 {
            let w = b.modes()[k].frequency;
            let (ss, cs) = (s * w).sin_cos();
            assert!(
                (cs * a_re.coeffs()[k] - ss * a_im.coeffs()[k] - b_re.coeffs()[k]).abs() < 1e-12
            );
            assert!(
                (ss * a_re.coeffs()[k] + cs * a_im.coeffs()[k] - b_im.coeffs()[k]).abs() < 1e-12
            );
        }
        // μ = 4, t = π/2: phase e^{iπ}
        let (re, im) = halfwave(&SpectralField::mode(&b, 2), PI / 2.0);
        assert!((re.coeffs()[2] + 1.0).abs() < 1e-15 && im.coeffs()[2].abs() < 1e-15);
    }

    #[test]
    fn halfwave_adjoint_pairs_correctly() {
        let b = interval(5);
        let f = SpectralField::new(b.clone(), vec![0.3, -0.2, 0.5, 0.1, 0.7]).unwrap();
        let g = SpectralField::new(b.clone(), vec![0.1, 0.4, -0.3, 0.2, -0.5]).unwrap();
        let times = [0.0, 0.3, 0.6];
        let weights = [0.1, 0.3, 0.2];
        let (mut lhs, mut re, mut im) = (0.0, Vec::new(), Vec::new());
        for (t, w) in times.iter().zip(weights) {
            let (a, c) = halfwave(&f, *t);
            let (gr, gi) = halfwave(&g, -t * 0.5);
            lhs += w * (a.inner(&gr) + c.inner(&gi));
            re.push(gr);
            im.push(gi);
        }
        let adj = halfwave_adjoint(&times, &weights, &re, &im).unwrap();
        assert!((lhs - f.inner(&adj)).abs() < 1e-14);
    }

    #[test]
    fn zero_data_stays_zero_and_bad_steps_fail() {
        let b = interval(4);
        let s = WaveState::zeros(&b);
        let out = nonlinear_step(&s, 0.1).unwrap();
        assert!(out.u.is_zero() && out.v.is_zero());
        assert!(nonlinear_step(&s, 0.0).is_err());
        assert!(nonlinear_step(&s, -0.1).is_err());
    }

    #[test]
    fn divergence_guard_reports_time() {
        let b = interval(4);
        let s = WaveState::new(
            SpectralField::constant(&b, 50.0),
            SpectralField::zeros(&b),
            0.0,
        )
        .unwrap();
        let err = evolve(&s, 1.0, 0.1, 0.1, &Recorders::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn step_pair_is_reversible() {
        let b = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 24).unwrap();
        let u = SpectralField::from_fn(&b, |p| (-4.0 * (p[0] * p[0])).exp());
        let s = WaveState::new(u, SpectralField::zeros(&b), 0.0).unwrap();
        let mut x = s.clone();
        Stepper::new(&b, 1e-2).unwrap().step(&mut x).unwrap();
        Stepper::new(&b, -1e-2).unwrap().step(&mut x).unwrap();
        for (a, c) in
            x.u.coeffs()
                .iter()
                .chain(x.v.coeffs())
                .zip(s.u.coeffs().iter().chain(s.v.coeffs()))
        {
            assert!((a - c).abs() < 1e-11);
        }
    }

    #[test]
    fn duhamel_constant_forcing_on_zero_mode() {
        let b = interval(4);
        let f = SpectralField::constant(&b, 3.0);
        let dt = 0.05;
        let forcing = vec![f; 21];
        let traj = duhamel_solve(&WaveState::zeros(&b), &forcing, dt).unwrap();
        let last = traj.states().last().unwrap();
        assert!((last.t - 1.0).abs() < 1e-14);
        let want = 0.5 * 3.0 * PI.sqrt();
        assert!((last.u.coeffs()[0] - want).abs() < 1e-12);
        assert!(last.u.coeffs()[1..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn duhamel_without_forcing_is_linear_flow() {
        let b = interval(6);
        let u = SpectralField::new(b.clone(), vec![0.1, 0.5, -0.2, 0.3, 0.0, 0.1]).unwrap();
        let s = WaveState::new(u, SpectralField::zeros(&b), 0.0).unwrap();
        let traj = duhamel_solve(&s, &vec![SpectralField::zeros(&b); 11], 0.1).unwrap();
        let exact = linear_evolve(&s, 1.0);
        for (a, c) in traj
            .states()
            .last()
            .unwrap()
            .u
            .coeffs()
            .iter()
            .zip(exact.u.coeffs())
        {
            assert!((a - c).abs() < 1e-13);
        }
        let other = interval(6);
        assert!(matches!(
            duhamel_solve(
                &s,
                &[SpectralField::zeros(&other), SpectralField::zeros(&other)],
                0.1
            ),
            Err(Error::ForcingMismatch(_))
        ));
    }
}
