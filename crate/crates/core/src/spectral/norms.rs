use serde::{Deserialize, Serialize};

use super::{bessel_potential, SpectralField};
use crate::domains::quadrature::trapezoid_weights;
use crate::{Error, Result};

/// Closed time window `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Self {
        TimeWindow { start, end }
    }

    pub fn contains(&self, t: f64, tol: f64) -> bool {
        t >= self.start - tol && t <= self.end + tol
    }
}

/// Which norm to evaluate. Exponents may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    Lq {
        q: f64,
    },
    /// `‖(1 + μ)^{s/2} c‖_{ℓ²}`.
    SobolevHs {
        s: f64,
    },
    /// `‖(1 - Δ_N)^{s/2} u‖_{L^p}`.
    FractionalWsp {
        s: f64,
        p: f64,
    },
    /// `L^p` in time of `L^q` in space.
    MixedLpLq {
        p: f64,
        q: f64,
        window: TimeWindow,
    },
    /// `L^p` in time of `W^{s,r}` in space.
    MixedLpWsp {
        p: f64,
        s: f64,
        r: f64,
        window: TimeWindow,
    },
}

const S_RANGE: (f64, f64) = (-2.0, 3.0);

fn check_exponent(name: &str, e: f64) -> Result<()> {
    if e.is_nan() || e < 1.0 {
        return Err(Error::InvalidNorm(format!(
            "{name} = {e} must lie in [1, ∞]"
        )));
    }
    Ok(())
}

fn check_order(s: f64) -> Result<()> {
    if !(s >= S_RANGE.0 && s <= S_RANGE.1) {
        return Err(Error::InvalidNorm(format!(
            "order s = {s} outside [{}, {}]",
            S_RANGE.0, S_RANGE.1
        )));
    }
    Ok(())
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lq { q } => check_exponent("q", q),
            NormSpec::SobolevHs { s } => check_order(s),
            NormSpec::FractionalWsp { s, p } => {
                check_order(s)?;
                check_exponent("p", p)
            }
            NormSpec::MixedLpLq { p, q, window } => {
                check_exponent("p", p)?;
                check_exponent("q", q)?;
                check_window(&window)
            }
            NormSpec::MixedLpWsp { p, s, r, window } => {
                check_exponent("p", p)?;
                check_order(s)?;
                check_exponent("r", r)?;
                check_window(&window)
            }
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(
            self,
            NormSpec::MixedLpLq { .. } | NormSpec::MixedLpWsp { .. }
        )
    }
}

fn check_window(w: &TimeWindow) -> Result<()> {
    if !(w.start.is_finite() && w.end.is_finite() && w.start < w.end) {
        return Err(Error::InvalidNorm(format!(
            "empty time window [{}, {}]",
            w.start, w.end
        )));
    }
    Ok(())
}

/// `(Σ_j w_j |f_j|^q)^{1/q}`, or the sampled maximum for `q = ∞`.
pub fn grid_lq(weights: &[f64], values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * v.abs().powf(q))
        .sum();
    sum.powf(1.0 / q)
}

/// A spatial norm of a single field.
pub fn norm(field: &SpectralField, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let basis = field.basis();
    match *spec {
        NormSpec::Lq { q } => Ok(grid_lq(basis.weights(), &field.grid_values(), q)),
        NormSpec::SobolevHs { s } => Ok(bessel_potential(field, s).l2()),
        NormSpec::FractionalWsp { s, p } => {
            let g = bessel_potential(field, s);
            Ok(grid_lq(basis.weights(), &g.grid_values(), p))
        }
        _ => Err(Error::InvalidNorm("mixed norms need a time series".into())),
    }
}

/// A space-time norm over a uniformly sampled time series. Samples outside
/// the window are ignored; the time integral uses trapezoid weights.
pub fn mixed_norm(times: &[f64], fields: &[SpectralField], spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if times.len() != fields.len() {
        return Err(Error::SizeMismatch {
            expected: times.len(),
            got: fields.len(),
        });
    }
    let (p, window, inner) = match *spec {
        NormSpec::MixedLpLq { p, q, window } => (p, window, NormSpec::Lq { q }),
        NormSpec::MixedLpWsp { p, s, r, window } => {
            (p, window, NormSpec::FractionalWsp { s, p: r })
        }
        _ => return Err(Error::InvalidNorm("not a mixed norm".into())),
    };
    let tol = 1e-9 * (window.end - window.start);
    let selected: Vec<usize> = (0..times.len())
        .filter(|&i| window.contains(times[i], tol))
        .collect();
    if selected.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in [{}, {}]",
            selected.len(),
            window.start,
            window.end
        )));
    }
    let h = times[selected[1]] - times[selected[0]];
    for pair in selected.windows(2) {
        if pair[1] != pair[0] + 1
            || ((times[pair[1]] - times[pair[0]]) - h).abs() > 1e-9 * h.abs().max(1.0)
        {
            return Err(Error::InvalidArgument(
                "mixed norms need uniformly spaced samples".into(),
            ));
        }
    }
    let inner_values = selected
        .iter()
        .map(|&i| norm(&fields[i], &inner))
        .collect::<Result<Vec<f64>>>()?;
    let w = trapezoid_weights(selected.len(), h);
    Ok(grid_lq(&w, &inner_values, p))
}
