use std::path::Path;
use std::sync::Arc;

use nwave_core::diagnostics::{
    boundary_l6_trace, edge_trace_scan, energy, energy_spectral, flux, flux_vanishing_scan,
    l6_concentration, morawetz_report, qform_scan, CsvRow,
};
use nwave_core::domains::EigenBasis;
use nwave_core::scaling::{cone_norm_scan, fit_power_law_with, PowerFit};
use nwave_core::solver::{evolve, Trajectory};
use nwave_core::spectral::TimeWindow;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, DataSpec, Diagnostic, ExperimentConfig};
use crate::data::{initial_state, ode_oracle};
use crate::output::{create_dir, enforce, fmt, write_json, write_meta, write_rows, Check, Outcome};

pub fn build_basis(cfg: &ExperimentConfig, n_modes: usize) -> Outcome<Arc<EigenBasis>> {
    Ok(match cfg.quad_order {
        Some(q) => EigenBasis::build_with_quadrature(cfg.domain, n_modes, q)?,
        None => EigenBasis::build(cfg.domain, n_modes)?,
    })
}

struct EnergyRow {
    t: f64,
    energy: f64,
    energy_spectral: f64,
    linear: f64,
    drift: f64,
}

impl CsvRow for EnergyRow {
    fn header() -> Vec<&'static str> {
        vec![
            "t",
            "energy",
            "energy_spectral",
            "linear_energy",
            "relative_drift",
        ]
    }

    fn row(&self) -> Vec<String> {
        [
            self.t,
            self.energy,
            self.energy_spectral,
            self.linear,
            self.drift,
        ]
        .map(fmt)
        .to_vec()
    }
}

struct OdeRow {
    t: f64,
    numeric: f64,
    oracle: f64,
}

impl CsvRow for OdeRow {
    fn header() -> Vec<&'static str> {
        vec!["t", "u_numeric", "u_oracle", "error"]
    }

    fn row(&self) -> Vec<String> {
        [
            self.t,
            self.numeric,
            self.oracle,
            (self.numeric - self.oracle).abs(),
        ]
        .map(fmt)
        .to_vec()
    }
}

struct BoundaryL6Row(nwave_core::diagnostics::BoundaryL6Report);

impl CsvRow for BoundaryL6Row {
    fn header() -> Vec<&'static str> {
        vec!["t_start", "t_end", "l6", "data_norm", "ratio"]
    }

    fn row(&self) -> Vec<String> {
        let r = &self.0;
        [r.window.start, r.window.end, r.value, r.data_norm, r.ratio]
            .map(fmt)
            .to_vec()
    }
}

struct ConeRow {
    cone: usize,
    t: f64,
    value: f64,
}

impl CsvRow for ConeRow {
    fn header() -> Vec<&'static str> {
        vec!["cone", "t", "mixed_norm"]
    }

    fn row(&self) -> Vec<String> {
        vec![self.cone.to_string(), fmt(self.t), fmt(self.value)]
    }
}

fn relative(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x.abs() / scale
    } else {
        x.abs()
    }
}

/// Evaluates the configured diagnostics on `traj`, writing one CSV per
/// diagnostic into `dir`; returns the threshold checks and a summary.
pub fn run_diagnostics(
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    dir: &Path,
) -> Outcome<(Vec<Check>, Map<String, Value>)> {
    let th = &cfg.thresholds;
    let mut checks = Vec::new();
    let mut summary = Map::new();
    let e0 = energy_spectral(&traj.states()[0]);
    summary.insert("initial_energy".into(), json!(e0));

    for d in &cfg.diagnostics {
        match d {
            Diagnostic::Energy => {
                let rows: Vec<EnergyRow> = traj
                    .states()
                    .iter()
                    .map(|s| {
                        let es = energy_spectral(s);
                        EnergyRow {
                            t: s.t,
                            energy: energy(s),
                            energy_spectral: es,
                            linear: s.linear_energy(),
                            drift: relative(es - e0, e0),
                        }
                    })
                    .collect();
                let drift = rows.iter().map(|r| r.drift).fold(0.0, f64::max);
                summary.insert("energy_drift".into(), json!(drift));
                checks.push(Check::at_most("energy_drift", drift, th.energy_drift));
                write_rows(dir, "energy.csv", &rows)?;
            }
            Diagnostic::Flux => {
                let reports = cfg
                    .cones
                    .iter()
                    .map(|c| flux(traj, &c.spec()))
                    .collect::<Result<Vec<_>, _>>()?;
                for (i, r) in reports.iter().enumerate() {
                    checks.push(Check::at_most(
                        format!("cone[{i}].flux_residual"),
                        relative(r.residual, e0),
                        th.flux_residual,
                    ));
                    checks.push(Check::at_most(
                        format!("cone[{i}].flux_form_gap"),
                        relative(r.form_gap(), r.flux.abs()),
                        th.flux_form_gap,
                    ));
                }
                write_rows(dir, "flux.csv", &reports)?;
            }
            Diagnostic::FluxScan => {
                let mut rows = Vec::new();
                for c in cfg.full_cones() {
                    rows.extend(
                        flux_vanishing_scan(traj, &c.vertex, c.vertex_time, &c.s_ladder())?.rows,
                    );
                }
                write_rows(dir, "flux_scan.csv", &rows)?;
            }
            Diagnostic::Morawetz => {
                let reports = cfg
                    .cones
                    .iter()
                    .map(|c| morawetz_report(traj, &c.spec()))
                    .collect::<Result<Vec<_>, _>>()?;
                for (i, r) in reports.iter().enumerate() {
                    checks.push(Check::at_most(
                        format!("cone[{i}].morawetz_closure"),
                        relative(r.closure, e0),
                        th.morawetz_closure,
                    ));
                }
                write_rows(dir, "morawetz.csv", &reports)?;
            }
            Diagnostic::L6 => {
                let c = cfg
                    .full_cones()
                    .next()
                    .ok_or_else(|| ConfigError(vec!["cones: no cone with t = 0".into()]))?;
                let t =
                    l6_concentration(traj, &c.vertex, c.vertex_time, &c.s_ladder(), c.resolution)?;
                summary.insert("l6_tail_decreasing".into(), json!(t.tail_decreasing));
                summary.insert("l6_decay".into(), json!(t.decay));
                write_rows(dir, "l6.csv", &t.rows)?;
            }
            Diagnostic::Qform => {
                let c = cfg
                    .boundary_cone()
                    .ok_or_else(|| ConfigError(vec!["cones: no boundary vertex".into()]))?;
                let scan = qform_scan(traj, &c.vertex, c.vertex_time, &c.s_ladder(), c.resolution)?;
                summary.insert("qform_fit".into(), json!(scan.fit));
                summary.insert(
                    "qform_predicted_exponent".into(),
                    json!(scan.predicted_exponent),
                );
                write_rows(dir, "qform.csv", &scan.rows)?;
            }
            Diagnostic::Edge => {
                let c = cfg
                    .boundary_cone()
                    .ok_or_else(|| ConfigError(vec!["cones: no boundary vertex".into()]))?;
                // bottoms halving towards T, snapped to the record grid
                let h = traj.dt_record();
                let mut s: Vec<f64> = (0..4)
                    .map(|k| c.t + ((c.s - c.t) / f64::from(1 << k) / h).round().min(-1.0) * h)
                    .collect();
                s.dedup_by(|a, b| (*a - *b).abs() < 0.5 * h);
                let scan = edge_trace_scan(traj, &c.vertex, c.vertex_time, &s, c.t)?;
                summary.insert("edge_ratio_fit".into(), json!(scan.ratio_fit));
                summary.insert("edge_ratio_mixed_fit".into(), json!(scan.ratio_mixed_fit));
                write_rows(dir, "edge.csv", &scan.rows)?;
            }
            Diagnostic::BoundaryL6 => {
                let r = boundary_l6_trace(traj, TimeWindow::new(traj.t_start(), traj.t_end()))?;
                summary.insert("boundary_l6_ratio".into(), json!(r.ratio));
                write_rows(dir, "boundary_l6.csv", &[BoundaryL6Row(r)])?;
            }
            Diagnostic::ConeNorm => {
                let mut rows = Vec::new();
                for (i, c) in cfg
                    .cones
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.reaches_vertex())
                {
                    let scan = cone_norm_scan(
                        traj,
                        &c.spec(),
                        &c.s_ladder(),
                        cfg.scan.cone_p,
                        cfg.scan.cone_q,
                    )?;
                    summary.insert(
                        format!("cone[{i}].cone_norm_nonincreasing"),
                        json!(scan.nonincreasing),
                    );
                    rows.extend(scan.rows.iter().map(|r| ConeRow {
                        cone: i,
                        t: r.t,
                        value: r.value,
                    }));
                }
                write_rows(dir, "cone_norm.csv", &rows)?;
            }
        }
    }

    if let DataSpec::ConstantOde { value, velocity } = cfg.data {
        let x = [0.0; 3];
        let steps = ((traj.dt_record() / 1e-4).ceil() as usize).max(1);
        let mut rows = Vec::new();
        let (mut y, mut v) = (value, velocity);
        for (i, s) in traj.states().iter().enumerate() {
            if i > 0 {
                (y, v) = ode_oracle(y, v, traj.dt_record(), steps);
            }
            rows.push(OdeRow {
                t: s.t,
                numeric: s.u.eval(&x),
                oracle: y,
            });
        }
        let worst = rows
            .iter()
            .map(|r| (r.numeric - r.oracle).abs())
            .fold(0.0, f64::max);
        summary.insert("ode_max_error".into(), json!(worst));
        write_rows(dir, "ode.csv", &rows)?;
    }
    Ok((checks, summary))
}

fn finish(
    dir: &Path,
    status: &str,
    checks: &[Check],
    mut summary: Map<String, Value>,
    strict: bool,
) -> Outcome {
    summary.insert("status".into(), json!(status));
    summary.insert("checks".into(), json!(checks));
    write_json(dir, "summary.json", &summary)?;
    enforce(checks, strict)
}

pub fn simulate(cfg: &ExperimentConfig, strict: bool) -> Outcome {
    let dir = &cfg.output;
    create_dir(dir)?;
    write_meta(dir, "simulate", cfg)?;
    let basis = build_basis(cfg, cfg.n_modes)?;
    let data = initial_state(&cfg.data, &basis, cfg.seed);
    let traj = match evolve(&data, cfg.t_final, cfg.dt, cfg.dt_record, &cfg.recorders()) {
        Ok(t) => t,
        Err(e) => {
            let mut s = Map::new();
            s.insert("error".into(), json!(e.to_string()));
            if let nwave_core::Error::Diverged { time, .. } = &e {
                s.insert("failure_time".into(), json!(time));
            }
            finish(dir, "diverged", &[], s, false)?;
            return Err(e.into());
        }
    };
    if cfg.save_trajectory {
        traj.save(&dir.join("trajectory"))?;
    }
    let (checks, mut summary) = run_diagnostics(cfg, &traj, dir)?;
    summary.insert("t_final".into(), json!(traj.t_end()));
    summary.insert("records".into(), json!(traj.states().len()));
    finish(dir, "ok", &checks, summary, strict)
}

/// Re-runs the diagnostics of a stored run on its saved trajectory.
pub fn report(run_dir: &Path, cfg: &ExperimentConfig, out: &Path, strict: bool) -> Outcome {
    let traj = Trajectory::load(&run_dir.join("trajectory"))?;
    create_dir(out)?;
    write_meta(out, "report", cfg)?;
    let (checks, summary) = run_diagnostics(cfg, &traj, out)?;
    finish(out, "ok", &checks, summary, strict)
}

#[derive(Serialize)]
struct ConvergeRow {
    level: usize,
    dt: f64,
    n_modes: usize,
    error: f64,
    energy_drift: f64,
    flux_residual: Option<f64>,
    morawetz_closure: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

impl CsvRow for ConvergeRow {
    fn header() -> Vec<&'static str> {
        vec![
            "level",
            "dt",
            "n_modes",
            "error_vs_finest",
            "energy_drift",
            "flux_residual",
            "morawetz_closure",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.level.to_string(),
            fmt(self.dt),
            self.n_modes.to_string(),
            fmt(self.error),
            fmt(self.energy_drift),
            opt(self.flux_residual),
            opt(self.morawetz_closure),
        ]
    }
}

fn order(xs: &[f64], ys: &[f64]) -> Option<PowerFit> {
    fit_power_law_with(xs, ys, 2).ok()
}

/// Runs every ladder level to `t_final` and compares with the last one.
pub fn converge(cfg: &ExperimentConfig) -> Outcome {
    if cfg.ladder.len() < 3 {
        return Err(ConfigError(vec![format!(
            "ladder: needs at least 3 levels, got {}",
            cfg.ladder.len()
        )])
        .into());
    }
    let dir = &cfg.output;
    create_dir(dir)?;
    write_meta(dir, "converge", cfg)?;
    let recorders = cfg.recorders();
    let mut finals = Vec::new();
    let mut rows = Vec::new();
    for (level, l) in cfg.ladder.iter().enumerate() {
        let basis = build_basis(cfg, l.n_modes)?;
        let data = initial_state(&cfg.data, &basis, cfg.seed);
        let traj = evolve(&data, cfg.t_final, l.dt, cfg.dt_record, &recorders)?;
        let e0 = energy_spectral(&data);
        let drift = traj
            .states()
            .iter()
            .map(|s| relative(energy_spectral(s) - e0, e0))
            .fold(0.0, f64::max);
        let cone = cfg.cones.first().map(|c| c.spec());
        let flux_residual = cone
            .map(|c| flux(&traj, &c).map(|r| r.residual.abs()))
            .transpose()?;
        let morawetz_closure = match cone {
            Some(c) if cfg.diagnostics.contains(&Diagnostic::Morawetz) => {
                Some(morawetz_report(&traj, &c)?.closure.abs())
            }
            _ => None,
        };
        finals.push(traj.states().last().unwrap().u.clone());
        rows.push(ConvergeRow {
            level,
            dt: l.dt,
            n_modes: l.n_modes,
            error: 0.0,
            energy_drift: drift,
            flux_residual,
            morawetz_closure,
        });
    }
    // errors on the quadrature grid of the first level
    let grid = finals[0].basis().clone();
    let finest = finals.last().unwrap().synthesize(grid.nodes())?;
    for (row, u) in rows.iter_mut().zip(&finals) {
        let vals = u.synthesize(grid.nodes())?;
        row.error = grid
            .weights()
            .iter()
            .zip(vals.iter().zip(&finest))
            .map(|(w, (a, b))| w * (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
    }
    let n = rows.len() - 1;
    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let fluxes: Vec<f64> = rows.iter().filter_map(|r| r.flux_residual).collect();
    let closures: Vec<f64> = rows.iter().filter_map(|r| r.morawetz_closure).collect();
    let summary = json!({
        "status": "ok",
        "levels": rows.len(),
        "error_order": order(&dts[..n], &errors[..n]),
        "max_error": errors.iter().fold(0.0f64, |m, e| m.max(*e)),
        "flux_residual_order": if fluxes.len() == dts.len() { order(&dts, &fluxes) } else { None },
        "morawetz_closure_order": if closures.len() == dts.len() { order(&dts, &closures) } else { None },
    });
    write_rows(dir, "converge.csv", &rows)?;
    write_json(dir, "summary.json", &summary)
}
