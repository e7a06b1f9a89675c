//! Projector norms, Strichartz ratios and product estimates with power-law
//! fits.

mod cone;
mod fit;
mod inhom;
mod projector;
mod strichartz;

use serde::Serialize;

use crate::diagnostics::CsvRow;

pub use cone::{cone_mixed_norm, cone_norm_scan, ConeNormRow, ConeNormScan};
pub use fit::{fit_power_law, fit_power_law_with, PowerFit, MIN_FIT_POINTS};
pub use inhom::{
    inhom_strichartz_check, nonlinear_product_check, InhomReport, InhomTerms, ProductReport,
};
pub use projector::{projector_exponent_scan, projector_opnorm, OpnormOptions, OpnormResult};
pub use strichartz::{
    band_ensemble, halfwave_lq, strichartz_ratio, strichartz_ratio_scan, StrichartzOptions,
};

/// A measured quantity over a parameter grid with its log-log fit.
#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub quantity: String,
    pub parameter: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: PowerFit,
    pub predicted_exponent: Option<f64>,
    /// False when some underlying optimization hit its iteration cap.
    pub converged: bool,
}

/// One `(parameter, value)` row of a [`ScanResult`], with the fit repeated.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanRow {
    pub parameter: f64,
    pub value: f64,
    pub exponent: f64,
    pub residual: f64,
}

impl ScanResult {
    pub fn rows(&self) -> Vec<ScanRow> {
        self.parameter
            .iter()
            .zip(&self.values)
            .map(|(p, v)| ScanRow {
                parameter: *p,
                value: *v,
                exponent: self.fit.exponent,
                residual: self.fit.residual,
            })
            .collect()
    }
}

impl CsvRow for ScanRow {
    fn header() -> Vec<&'static str> {
        vec!["parameter", "value", "fit_exponent", "fit_residual"]
    }

    fn row(&self) -> Vec<String> {
        [self.parameter, self.value, self.exponent, self.residual]
            .map(|x| format!("{x:e}"))
            .to_vec()
    }
}
