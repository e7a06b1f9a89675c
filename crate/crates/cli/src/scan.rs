use clap::ValueEnum;
use nwave_core::diagnostics::{qform_scan, CsvRow};
use nwave_core::scaling::{
    cone_norm_scan, inhom_strichartz_check, nonlinear_product_check, projector_exponent_scan,
    strichartz_ratio_scan, OpnormOptions, PowerFit, StrichartzOptions,
};
use nwave_core::solver::{evolve, Trajectory};
use nwave_core::spectral::{SpectralField, TimeWindow};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, DataSpec, ExperimentConfig};
use crate::data::initial_state;
use crate::output::{create_dir, fmt, write_json, write_meta, write_rows, Outcome};
use crate::run::build_basis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Projector,
    Strichartz,
    Inhom,
    Product,
    ConeNorm,
    Qform,
}

struct Summary {
    fit: Option<PowerFit>,
    predicted: Option<f64>,
    converged: bool,
    extra: Value,
}

impl Summary {
    fn plain(extra: Value) -> Self {
        Summary {
            fit: None,
            predicted: None,
            converged: true,
            extra,
        }
    }
}

struct InhomRow(nwave_core::scaling::InhomTerms);

impl CsvRow for InhomRow {
    fn header() -> Vec<&'static str> {
        vec![
            "t_start", "t_end", "l5_w", "c0_h1", "c0_l2", "data_h1", "data_l2", "f1", "f2", "lhs",
            "rhs", "ratio",
        ]
    }

    fn row(&self) -> Vec<String> {
        let r = &self.0;
        [
            r.window.start,
            r.window.end,
            r.l5_w,
            r.c0_h1,
            r.c0_l2,
            r.data_h1,
            r.data_l2,
            r.f1,
            r.f2,
            r.lhs,
            r.rhs,
            r.ratio,
        ]
        .map(fmt)
        .to_vec()
    }
}

struct ProductRow(nwave_core::scaling::ProductReport);

impl CsvRow for ProductRow {
    fn header() -> Vec<&'static str> {
        vec![
            "t_start",
            "t_end",
            "skipped",
            "lhs",
            "l5_l10",
            "linf_l6",
            "linf_h1",
            "rhs",
            "ratio",
            "holder_l",
            "holder_l_rhs",
            "holder_grad",
            "holder_grad_rhs",
        ]
    }

    fn row(&self) -> Vec<String> {
        let r = &self.0;
        let mut out = vec![
            fmt(r.window.start),
            fmt(r.window.end),
            r.skipped.to_string(),
        ];
        out.extend(
            [
                r.lhs,
                r.l5_l10,
                r.linf_l6,
                r.linf_h1,
                r.rhs,
                r.ratio,
                r.holder_l,
                r.holder_l_rhs,
                r.holder_grad,
                r.holder_grad_rhs,
            ]
            .map(fmt),
        );
        out
    }
}

fn simulate(cfg: &ExperimentConfig) -> Outcome<Trajectory> {
    let basis = build_basis(cfg, cfg.n_modes)?;
    let data = initial_state(&cfg.data, &basis, cfg.seed);
    Ok(evolve(
        &data,
        cfg.t_final,
        cfg.dt,
        cfg.dt_record,
        &cfg.recorders(),
    )?)
}

fn no_cone(msg: &str) -> ConfigError {
    ConfigError(vec![format!("cones: {msg}")])
}

/// Runs one scaling experiment and writes `scan.csv` and `summary.json`.
pub fn scan(cfg: &ExperimentConfig, kind: ScanKind) -> Outcome {
    let dir = &cfg.output;
    let sc = &cfg.scan;
    let summary = match kind {
        ScanKind::Projector => {
            let basis = build_basis(cfg, cfg.n_modes)?;
            let opts = OpnormOptions {
                restarts: sc.restarts,
                max_iterations: sc.max_iterations,
                seed: cfg.seed,
                ..OpnormOptions::default()
            };
            let r = projector_exponent_scan(&basis, sc.q, &sc.lambdas, &opts)?;
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &r.rows())?;
            Some(Summary {
                fit: Some(r.fit),
                predicted: r.predicted_exponent,
                converged: r.converged,
                extra: json!({}),
            })
        }
        ScanKind::Strichartz if cfg.data == DataSpec::Zero => None,
        ScanKind::Strichartz => {
            let basis = build_basis(cfg, cfg.n_modes)?;
            let opts = StrichartzOptions {
                q: sc.q,
                s: sc.s,
                window: sc.window,
                members: sc.members,
                seed: cfg.seed,
                ..StrichartzOptions::default()
            };
            let r = strichartz_ratio_scan(&basis, &sc.lambdas, &opts)?;
            let max_ratio = r.values.iter().fold(0.0f64, |m, v| m.max(*v));
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &r.rows())?;
            Some(Summary {
                fit: Some(r.fit),
                predicted: r.predicted_exponent,
                converged: r.converged,
                extra: json!({ "max_ratio": max_ratio }),
            })
        }
        ScanKind::Inhom => {
            let basis = build_basis(cfg, cfg.n_modes)?;
            let data = initial_state(&cfg.data, &basis, cfg.seed);
            let shape = if data.u.is_zero() {
                SpectralField::constant(&basis, 1.0)
            } else {
                data.u.clone()
            };
            let dt = sc.window / sc.steps as f64;
            let (f1, f2): (Vec<_>, Vec<_>) = (0..=sc.steps)
                .map(|k| {
                    let wt = sc.forcing_frequency * k as f64 * dt;
                    (
                        shape.scaled(sc.f1_amplitude * wt.cos()),
                        shape.scaled(sc.f2_amplitude * wt.sin()),
                    )
                })
                .unzip();
            let r = inhom_strichartz_check(&data, &f1, &f2, dt, sc.windows)?;
            let rows: Vec<InhomRow> = r.windows.iter().copied().map(InhomRow).collect();
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &rows)?;
            Some(Summary::plain(json!({ "spread": r.spread })))
        }
        ScanKind::Product => {
            let traj = simulate(cfg)?;
            let (t0, t1) = (traj.t_start(), traj.t_end());
            let rows = (0..sc.windows)
                .map(|k| {
                    nonlinear_product_check(
                        &traj,
                        TimeWindow::new(t0, t0 + (t1 - t0) / f64::from(1u32 << k)),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let max_ratio = rows.iter().fold(0.0f64, |m, r| m.max(r.ratio));
            let skipped = rows.iter().all(|r| r.skipped);
            let rows: Vec<ProductRow> = rows.into_iter().map(ProductRow).collect();
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &rows)?;
            Some(Summary::plain(
                json!({ "max_ratio": max_ratio, "all_skipped": skipped }),
            ))
        }
        ScanKind::ConeNorm => {
            let c = cfg
                .full_cones()
                .next()
                .ok_or_else(|| no_cone("cone-norm scan needs a cone with t = 0"))?;
            let traj = simulate(cfg)?;
            let r = cone_norm_scan(&traj, &c.spec(), &c.s_ladder(), sc.cone_p, sc.cone_q)?;
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &r.rows)?;
            Some(Summary::plain(json!({ "nonincreasing": r.nonincreasing })))
        }
        ScanKind::Qform => {
            let c = cfg.boundary_cone().ok_or_else(|| {
                no_cone("qform scan needs a cone with a boundary vertex on a disk")
            })?;
            let traj = simulate(cfg)?;
            let r = qform_scan(&traj, &c.vertex, c.vertex_time, &c.s_ladder(), c.resolution)?;
            create_dir(dir)?;
            write_rows(dir, "scan.csv", &r.rows)?;
            Some(Summary {
                fit: Some(r.fit),
                predicted: Some(r.predicted_exponent),
                converged: true,
                extra: json!({}),
            })
        }
    };
    create_dir(dir)?;
    write_meta(dir, "scan", cfg)?;
    let out = match summary {
        Some(s) => json!({
            "kind": kind,
            "status": "ok",
            "fit": s.fit,
            "predicted_exponent": s.predicted,
            "converged": s.converged,
            "details": s.extra,
        }),
        None => json!({
            "kind": kind,
            "status": "skipped",
            "reason": "zero data has no Strichartz ratio",
        }),
    };
    write_json(dir, "summary.json", &out)
}
