use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scheme, WaveState};
use crate::domains::{
    edge_points, sphere_section, BasisDescriptor, BoundaryGrid, ConeSpec, Domain, EigenBasis,
    Point, SurfacePoint,
};
use crate::spectral::{expect_eof, read_record, write_record};
use crate::{Error, Result};

const TRAJECTORY_FORMAT: u32 = 1;

/// A cone whose lateral traces are sampled during evolution, with the
/// spatial resolution of each sphere section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeRegistration {
    pub cone: ConeSpec,
    pub resolution: usize,
}

/// What to sample at every recorded step besides the state itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recorders {
    #[serde(default)]
    pub boundary: bool,
    #[serde(default)]
    pub cones: Vec<ConeRegistration>,
}

fn on_grid(t: f64, t0: f64, h: f64) -> bool {
    let k = ((t - t0) / h).round();
    (t - t0 - k * h).abs() <= 1e-9 * h.max(1.0)
}

impl Recorders {
    pub fn with_cone(mut self, cone: ConeSpec, resolution: usize) -> Self {
        self.cones.push(ConeRegistration { cone, resolution });
        self
    }

    pub fn with_boundary(mut self) -> Self {
        self.boundary = true;
        self
    }

    /// Every registered cone must be valid, lie inside `[t0, t_final]` and
    /// start and end on the record grid.
    pub fn validate(&self, domain: &Domain, t0: f64, t_final: f64, dt_record: f64) -> Result<()> {
        for reg in &self.cones {
            reg.cone.validate(domain)?;
            if reg.resolution == 0 {
                return Err(Error::InvalidCone(
                    "trace resolution must be positive".into(),
                ));
            }
            let (a, b) = reg.cone.absolute_window();
            let tol = 1e-9 * dt_record;
            if a < t0 - tol || b > t_final + tol {
                return Err(Error::InvalidCone(format!(
                    "cone window [{a}, {b}] outside the run [{t0}, {t_final}]"
                )));
            }
            if !on_grid(a, t0, dt_record) || !on_grid(b, t0, dt_record) {
                return Err(Error::InvalidCone(format!(
                    "cone window [{a}, {b}] is not aligned with the record step {dt_record}"
                )));
            }
        }
        Ok(())
    }
}

/// A value of `u` at one edge point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSample {
    pub x: Point,
    pub u: f64,
}

/// Traces on the sphere `|x - x0| = -τ` at one recorded local time.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSlice {
    pub tau: f64,
    pub points: Vec<SurfacePoint>,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub grad: Vec<Point>,
    pub edge: Vec<EdgeSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeTrace {
    pub registration: ConeRegistration,
    pub slices: Vec<ConeSlice>,
}

impl ConeTrace {
    /// Whether this trace has the vertex of `cone` and a window containing
    /// its `[S, T]`.
    pub fn covers(&self, cone: &ConeSpec) -> bool {
        let own = &self.registration.cone;
        let tol = 1e-9;
        own.vertex == cone.vertex
            && (own.vertex_time - cone.vertex_time).abs() <= tol
            && cone.s >= own.s - tol
            && cone.t <= own.t + tol
    }

    /// The consecutive slices with `τ ∈ [s, t]`; both ends must be sampled.
    pub fn slices_between(&self, s: f64, t: f64) -> Result<&[ConeSlice]> {
        let tol = 1e-9;
        let first = self.slices.iter().position(|sl| (sl.tau - s).abs() <= tol);
        let last = self.slices.iter().position(|sl| (sl.tau - t).abs() <= tol);
        match (first, last) {
            (Some(a), Some(b)) if a <= b => Ok(&self.slices[a..=b]),
            _ => Err(Error::InsufficientSamples(format!(
                "no recorded cone slices at both τ = {s} and τ = {t}"
            ))),
        }
    }
}

/// Boundary values of `u` and `∂_t u` at every recorded time.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    pub grid: BoundaryGrid,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub ut: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format: u32,
    scheme: Scheme,
    dt: f64,
    dt_record: f64,
    t_start: f64,
    n_states: usize,
    basis: BasisDescriptor,
    recorders: Recorders,
}

/// States at a uniform record step, with the traces requested at start.
#[derive(Clone, Debug)]
pub struct Trajectory {
    basis: Arc<EigenBasis>,
    scheme: Scheme,
    dt: f64,
    dt_record: f64,
    recorders: Recorders,
    states: Vec<WaveState>,
    cones: Vec<ConeTrace>,
    boundary: Option<BoundaryTrace>,
}

impl Trajectory {
    /// A trajectory holding only `state`, with its traces recorded.
    pub fn start(
        state: &WaveState,
        dt: f64,
        dt_record: f64,
        scheme: Scheme,
        recorders: &Recorders,
    ) -> Result<Self> {
        let basis = state.basis().clone();
        let boundary = recorders.boundary.then(|| BoundaryTrace {
            grid: basis.boundary().clone(),
            times: Vec::new(),
            u: Vec::new(),
            ut: Vec::new(),
        });
        let mut traj = Trajectory {
            cones: recorders
                .cones
                .iter()
                .map(|r| ConeTrace {
                    registration: *r,
                    slices: Vec::new(),
                })
                .collect(),
            basis,
            scheme,
            dt,
            dt_record,
            recorders: recorders.clone(),
            states: Vec::new(),
            boundary,
        };
        traj.push(state.clone())?;
        Ok(traj)
    }

    /// Appends the next state, which must follow the last by `dt_record`.
    pub fn push(&mut self, state: WaveState) -> Result<()> {
        if !Arc::ptr_eq(state.basis(), &self.basis) {
            return Err(Error::BasisMismatch);
        }
        if let Some(last) = self.states.last() {
            if ((state.t - last.t) - self.dt_record).abs() > 1e-9 * self.dt_record {
                return Err(Error::InvalidArgument(format!(
                    "state at t = {} does not follow t = {} by {}",
                    state.t, last.t, self.dt_record
                )));
            }
        }
        self.record_traces(&state)?;
        self.states.push(state);
        Ok(())
    }

    fn record_traces(&mut self, state: &WaveState) -> Result<()> {
        let basis = self.basis.clone();
        if let Some(b) = self.boundary.as_mut() {
            b.times.push(state.t);
            b.u.push(basis.boundary_values(state.u.coeffs()));
            b.ut.push(basis.boundary_values(state.v.coeffs()));
        }
        let domain = *basis.domain();
        for trace in &mut self.cones {
            let reg = trace.registration;
            let cone = reg.cone;
            let tau = state.t - cone.vertex_time;
            let tol = 1e-9 * self.dt_record;
            if tau < cone.s - tol || tau > cone.t + tol {
                continue;
            }
            // snap to the record grid relative to the vertex
            let tau = if (tau - cone.t).abs() <= tol {
                cone.t
            } else if (tau - cone.s).abs() <= tol {
                cone.s
            } else {
                tau
            };
            let radius = (-tau).max(0.0);
            let points = sphere_section(&domain, &cone.vertex, radius, reg.resolution)?;
            let coeff_sets = [state.u.coeffs(), state.v.coeffs()];
            let evals: Vec<[(f64, Point); 2]> = points
                .par_iter()
                .map(|p| {
                    let e = basis.eval_many_with_grad(&coeff_sets, &p.x);
                    [e[0], e[1]]
                })
                .collect();
            let edge = if matches!(domain, Domain::Disk { .. })
                && cone.has_boundary_vertex(&domain)
                && radius > 0.0
            {
                edge_points(&domain, &cone.vertex, radius)?
                    .into_iter()
                    .map(|x| EdgeSample {
                        x,
                        u: basis.eval(state.u.coeffs(), &x),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            trace.slices.push(ConeSlice {
                tau,
                u: evals.iter().map(|e| e[0].0).collect(),
                ut: evals.iter().map(|e| e[1].0).collect(),
                grad: evals.iter().map(|e| e[0].1).collect(),
                points,
                edge,
            });
        }
        Ok(())
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dt_record(&self) -> f64 {
        self.dt_record
    }

    pub fn recorders(&self) -> &Recorders {
        &self.recorders
    }

    pub fn states(&self) -> &[WaveState] {
        &self.states
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().unwrap().t
    }

    /// Index of the recorded state at time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = ((t - self.t_start()) / self.dt_record).round();
        if k < 0.0 || k as usize >= self.states.len() || !on_grid(t, self.t_start(), self.dt_record)
        {
            return Err(Error::InsufficientSamples(format!(
                "no recorded state at t = {t}"
            )));
        }
        Ok(k as usize)
    }

    pub fn state_at(&self, t: f64) -> Result<&WaveState> {
        Ok(&self.states[self.index_of(t)?])
    }

    pub fn cone_traces(&self) -> &[ConeTrace] {
        &self.cones
    }

    /// A registered trace covering `cone`.
    pub fn cone_trace(&self, cone: &ConeSpec) -> Result<&ConeTrace> {
        self.cones
            .iter()
            .find(|c| c.covers(cone))
            .ok_or(Error::UnregisteredCone)
    }

    pub fn boundary_trace(&self) -> Result<&BoundaryTrace> {
        self.boundary.as_ref().ok_or(Error::MissingTraces)
    }

    /// Writes `meta.json` and one `state_%06d.bin` per state (the `u` record
    /// followed by the `∂_t u` record).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let meta = Meta {
            format: TRAJECTORY_FORMAT,
            scheme: self.scheme,
            dt: self.dt,
            dt_record: self.dt_record,
            t_start: self.t_start(),
            n_states: self.states.len(),
            basis: self.basis.descriptor(),
            recorders: self.recorders.clone(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        for (i, s) in self.states.iter().enumerate() {
            let mut w = BufWriter::new(File::create(dir.join(format!("state_{i:06}.bin")))?);
            write_record(&s.u, &mut w)?;
            write_record(&s.v, &mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    /// Rebuilds the basis from the stored descriptor and replays the trace
    /// recorders on the stored states.
    pub fn load(dir: &Path) -> Result<Self> {
        let meta: Meta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        if meta.format != TRAJECTORY_FORMAT {
            return Err(Error::Format(format!(
                "unsupported trajectory format {}",
                meta.format
            )));
        }
        if meta.n_states == 0 {
            return Err(Error::Format("trajectory without states".into()));
        }
        let basis = EigenBasis::from_descriptor(&meta.basis)?;
        let read = |i: usize| -> Result<WaveState> {
            let mut r = BufReader::new(File::open(dir.join(format!("state_{i:06}.bin")))?);
            let u = read_record(&basis, &mut r)?;
            let v = read_record(&basis, &mut r)?;
            expect_eof(&mut r)?;
            WaveState::new(u, v, meta.t_start + i as f64 * meta.dt_record)
        };
        let mut traj = Trajectory::start(
            &read(0)?,
            meta.dt,
            meta.dt_record,
            meta.scheme,
            &meta.recorders,
        )?;
        for i in 1..meta.n_states {
            traj.push(read(i)?)?;
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::evolve;
    use crate::spectral::SpectralField;

    fn disk_run(recorders: &Recorders) -> Trajectory {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 20).unwrap();
        let u = SpectralField::from_fn(&b, |p| {
            0.5 * (-3.0 * ((p[0] - 0.5).powi(2) + p[1] * p[1])).exp()
        });
        let s = WaveState::new(u, SpectralField::zeros(&b), 0.0).unwrap();
        evolve(&s, 0.5, 0.01, 0.05, recorders).unwrap()
    }

    #[test]
    fn recording_is_non_intrusive() {
        let cone = ConeSpec::new([1.0, 0.0, 0.0], 0.5, -0.4, -0.1);
        let plain = disk_run(&Recorders::default());
        let traced = disk_run(&Recorders::default().with_boundary().with_cone(cone, 8));
        for (a, b) in plain.states().iter().zip(traced.states()) {
            assert_eq!(a.u.coeffs(), b.u.coeffs());
            assert_eq!(a.v.coeffs(), b.v.coeffs());
        }
        let trace = traced.cone_trace(&cone).unwrap();
        assert_eq!(trace.slices.len(), 7);
        assert!(trace.slices.iter().all(|s| s.edge.len() == 2));
        assert!(traced.cone_trace(&cone.with_window(-0.3, -0.2)).is_ok());
        assert!(matches!(
            traced.cone_trace(&cone.with_window(-0.45, -0.2)),
            Err(Error::UnregisteredCone)
        ));
        assert_eq!(traced.boundary_trace().unwrap().times.len(), 11);
        assert!(matches!(plain.boundary_trace(), Err(Error::MissingTraces)));
    }

    #[test]
    fn misaligned_cones_are_rejected() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 5).unwrap();
        let s = WaveState::zeros(&b);
        let cone = ConeSpec::new([0.0; 3], 0.5, -0.33, 0.0);
        let err = evolve(&s, 1.0, 0.01, 0.1, &Recorders::default().with_cone(cone, 4)).unwrap_err();
        assert!(matches!(err, Error::InvalidCone(_)));
        let late = ConeSpec::new([0.0; 3], 1.5, -0.3, 0.0);
        assert!(evolve(&s, 1.0, 0.01, 0.1, &Recorders::default().with_cone(late, 4)).is_err());
    }

    #[test]
    fn save_and_load_reproduce_states_and_traces() {
        let cone = ConeSpec::new([1.0, 0.0, 0.0], 0.5, -0.4, 0.0);
        let traj = disk_run(&Recorders::default().with_boundary().with_cone(cone, 6));
        let dir = tempfile::tempdir().unwrap();
        traj.save(dir.path()).unwrap();
        assert!(dir.path().join("state_000010.bin").exists());
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(back.states().len(), traj.states().len());
        for (a, b) in back.states().iter().zip(traj.states()) {
            assert_eq!(a.u.coeffs(), b.u.coeffs());
            assert_eq!(a.t, b.t);
        }
        assert_eq!(back.cone_traces(), traj.cone_traces());
    }
}
