use std::path::{Path, PathBuf};

use nwave_core::domains::{ConeSpec, Domain, Point, MAX_MODES};
use nwave_core::solver::{ConeRegistration, Recorders};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Initial data presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    SingleMode {
        mode: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Gaussian coefficients on the lowest `modes` modes, drawn from the
    /// run seed and `member`, rescaled to `‖u‖ = ‖∂_t u‖ = amplitude`.
    RandomEnsemble {
        modes: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        member: u64,
    },
    RadialBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Point,
        /// Velocity as a multiple of the same bump.
        #[serde(default)]
        velocity: f64,
    },
    ConstantOde {
        value: f64,
        #[serde(default)]
        velocity: f64,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    Energy,
    Flux,
    FluxScan,
    Morawetz,
    L6,
    Qform,
    Edge,
    BoundaryL6,
    ConeNorm,
}

impl Diagnostic {
    fn needs_cone(self) -> bool {
        !matches!(self, Diagnostic::Energy | Diagnostic::BoundaryL6)
    }

    fn needs_boundary_vertex(self) -> bool {
        matches!(self, Diagnostic::Qform | Diagnostic::Edge)
    }

    /// Scans that shrink cones towards the vertex need a trace up to it.
    fn needs_full_cone(self) -> bool {
        matches!(
            self,
            Diagnostic::FluxScan | Diagnostic::L6 | Diagnostic::Qform | Diagnostic::ConeNorm
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub vertex: Point,
    pub vertex_time: f64,
    pub s: f64,
    pub t: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    16
}

impl ConeConfig {
    pub fn spec(&self) -> ConeSpec {
        ConeSpec::new(self.vertex, self.vertex_time, self.s, self.t)
    }

    /// `S, S/2, S/4, S/8`: the bottoms used by the scan diagnostics.
    pub fn reaches_vertex(&self) -> bool {
        self.t == 0.0
    }

    pub fn s_ladder(&self) -> Vec<f64> {
        (0..4).map(|k| self.s / f64::from(1 << k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub lambdas: Vec<f64>,
    pub q: f64,
    /// Sobolev order of the Strichartz data norm.
    pub s: f64,
    pub window: f64,
    pub members: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Dyadic windows of the inhomogeneous and product checks.
    pub windows: usize,
    /// Time steps of the inhomogeneous check over `(0, window)`.
    pub steps: usize,
    /// Forcing amplitudes and frequency of the inhomogeneous check, shaped
    /// like the initial displacement.
    pub f1_amplitude: f64,
    pub f2_amplitude: f64,
    pub forcing_frequency: f64,
    /// Mixed-norm exponents of the cone-norm scan.
    pub cone_p: f64,
    pub cone_q: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            lambdas: (0..9).map(|i| 8.0 + 4.0 * f64::from(i)).collect(),
            q: 5.0,
            s: 0.7,
            window: 1.0,
            members: 64,
            restarts: 8,
            max_iterations: 2000,
            windows: 4,
            steps: 64,
            f1_amplitude: 0.5,
            f2_amplitude: 0.5,
            forcing_frequency: 2.0,
            cone_p: 5.0,
            cone_q: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderLevel {
    pub dt: f64,
    pub n_modes: usize,
}

/// Limits checked after every run; `--strict` turns violations into exit
/// code 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Largest relative energy drift.
    pub energy_drift: f64,
    /// Local energy identity residual relative to the initial energy.
    pub flux_residual: f64,
    /// Relative gap between the two flux expressions.
    pub flux_form_gap: f64,
    /// Morawetz closure residual relative to the initial energy.
    pub morawetz_closure: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            energy_drift: 1e-6,
            flux_residual: 1e-3,
            flux_form_gap: 1e-4,
            morawetz_closure: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub n_modes: usize,
    pub quad_order: Option<usize>,
    pub data: DataSpec,
    pub dt: f64,
    pub t_final: f64,
    pub dt_record: f64,
    pub cones: Vec<ConeConfig>,
    pub boundary_trace: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub output: PathBuf,
    pub seed: u64,
    pub save_trajectory: bool,
    pub scan: ScanConfig,
    pub ladder: Vec<LadderLevel>,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: Domain::Disk { radius: 1.0 },
            n_modes: 40,
            quad_order: None,
            data: DataSpec::RadialBump {
                amplitude: 0.8,
                width: 0.4,
                center: [0.0; 3],
                velocity: 0.0,
            },
            dt: 0.0025,
            t_final: 1.0,
            dt_record: 0.0125,
            cones: Vec::new(),
            boundary_trace: false,
            diagnostics: vec![Diagnostic::Energy],
            output: PathBuf::from("runs/latest"),
            seed: 0,
            save_trajectory: true,
            scan: ScanConfig::default(),
            ladder: Vec::new(),
            thresholds: Thresholds::default(),
        }
    }
}

/// Command-line overrides; each one replaces the field of the same name.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub dt_record: Option<f64>,
    pub n_modes: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, map: &mut Map<String, Value>) {
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set(
            "output",
            self.output
                .as_ref()
                .map(|p| Value::from(p.to_string_lossy().into_owned())),
        );
        set("dt", self.dt.map(Value::from));
        set("t_final", self.t_final.map(Value::from));
        set("dt_record", self.dt_record.map(Value::from));
        set("n_modes", self.n_modes.map(Value::from));
        set("seed", self.seed.map(Value::from));
    }
}

/// A configuration problem, reported with the path of the offending field.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0.join("; "))
    }
}

impl std::error::Error for ConfigError {}

fn fail(msg: impl Into<String>) -> ConfigError {
    ConfigError(vec![msg.into()])
}

/// Resolves file fields over defaults and flags over both, then validates.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut map = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(fail(format!("{}: expected a JSON object", p.display()))),
                Err(e) => return Err(fail(format!("{}: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    overrides.apply(&mut map);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(Value::Object(map))
        .map_err(|e| fail(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `interval / step` when it is a positive integer.
fn divides(step: f64, interval: f64) -> bool {
    let n = (interval / step).round();
    n >= 1.0 && (n * step - interval).abs() <= 1e-9 * interval.abs()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if let Err(e) = self.domain.validate() {
            errs.push(format!("domain: {e}"));
        }
        if self.n_modes == 0 || self.n_modes > MAX_MODES {
            errs.push(format!(
                "n_modes: must lie in 1..={MAX_MODES}, got {}",
                self.n_modes
            ));
        }
        for (name, v) in [
            ("dt", self.dt),
            ("t_final", self.t_final),
            ("dt_record", self.dt_record),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name}: must be positive, got {v}"));
            }
        }
        if errs.is_empty() {
            if !divides(self.dt, self.dt_record) {
                errs.push(format!(
                    "dt: {} does not divide dt_record = {}",
                    self.dt, self.dt_record
                ));
            }
            if !divides(self.dt_record, self.t_final) {
                errs.push(format!(
                    "dt_record: {} does not divide t_final = {}",
                    self.dt_record, self.t_final
                ));
            }
        }
        match self.data {
            DataSpec::SingleMode { mode, .. } if mode >= self.n_modes => {
                errs.push(format!(
                    "data.mode: {mode} is not below n_modes = {}",
                    self.n_modes
                ));
            }
            DataSpec::RandomEnsemble { modes, .. } if modes == 0 || modes > self.n_modes => {
                errs.push(format!(
                    "data.modes: must lie in 1..={}, got {modes}",
                    self.n_modes
                ));
            }
            DataSpec::RadialBump { width, .. } if !(width > 0.0) => {
                errs.push(format!("data.width: must be positive, got {width}"));
            }
            _ => {}
        }
        if errs.is_empty() {
            if let Err(e) =
                self.recorders()
                    .validate(&self.domain, 0.0, self.t_final, self.dt_record)
            {
                errs.push(format!("cones: {e}"));
            }
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            if d.needs_cone() && self.cones.is_empty() {
                errs.push(format!("diagnostics[{i}]: {d:?} needs at least one cone"));
            }
            if d.needs_full_cone() && !self.cones.iter().any(ConeConfig::reaches_vertex) {
                errs.push(format!("diagnostics[{i}]: {d:?} needs a cone with t = 0"));
            }
            if d.needs_boundary_vertex() && self.boundary_cone().is_none() {
                errs.push(format!(
                    "diagnostics[{i}]: {d:?} needs a disk cone with its vertex on the boundary"
                ));
            }
        }
        if (self.diagnostics.contains(&Diagnostic::Qform)
            || self.diagnostics.contains(&Diagnostic::BoundaryL6))
            && !self.boundary_trace
        {
            errs.push(
                "boundary_trace: must be true for the qform and boundary-l6 diagnostics".into(),
            );
        }
        for (i, l) in self.ladder.iter().enumerate() {
            if !(l.dt > 0.0) || l.n_modes == 0 || l.n_modes > MAX_MODES {
                errs.push(format!(
                    "ladder[{i}]: needs dt > 0 and 1 <= n_modes <= {MAX_MODES}"
                ));
            } else if !divides(l.dt, self.dt_record) {
                errs.push(format!(
                    "ladder[{i}].dt: {} does not divide dt_record",
                    l.dt
                ));
            }
        }
        let s = &self.scan;
        if !(s.q >= 1.0 && s.window > 0.0 && s.members > 0 && s.windows > 0 && s.steps >= 2) {
            errs.push(
                "scan: needs q >= 1, window > 0, members > 0, windows > 0 and steps >= 2".into(),
            );
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    pub fn recorders(&self) -> Recorders {
        Recorders {
            boundary: self.boundary_trace,
            cones: self
                .cones
                .iter()
                .map(|c| ConeRegistration {
                    cone: c.spec(),
                    resolution: c.resolution,
                })
                .collect(),
        }
    }

    /// The first cone with its vertex on the boundary of a disk, preferring
    /// one traced up to the vertex.
    pub fn boundary_cone(&self) -> Option<&ConeConfig> {
        if !matches!(self.domain, Domain::Disk { .. }) {
            return None;
        }
        let mut on_wall = self
            .cones
            .iter()
            .filter(|c| c.spec().has_boundary_vertex(&self.domain));
        let first = on_wall.clone().next();
        on_wall.find(|c| c.reaches_vertex()).or(first)
    }

    pub fn full_cones(&self) -> impl Iterator<Item = &ConeConfig> {
        self.cones.iter().filter(|c| c.reaches_vertex())
    }
}
