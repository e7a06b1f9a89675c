use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_power_law, ScanResult};
use crate::domains::quadrature::gregory_weights;
use crate::domains::{Domain, EigenBasis, Point};
use crate::spectral::{norm, NormSpec, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzOptions {
    pub q: f64,
    /// Sobolev order of the data norm.
    pub s: f64,
    /// Length of the time window `(0, window)`.
    pub window: f64,
    pub members: usize,
    pub seed: u64,
    /// Time samples per unit time per unit frequency.
    pub samples_per_wave: f64,
}

impl Default for StrichartzOptions {
    fn default() -> Self {
        StrichartzOptions {
            q: 5.0,
            s: 0.7,
            window: 1.0,
            members: 64,
            seed: 7,
            samples_per_wave: 6.0,
        }
    }
}

impl StrichartzOptions {
    fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0 && self.q.is_finite()) || !(self.window > 0.0) || self.members == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid Strichartz options {self:?}"
            )));
        }
        Ok(())
    }
}

/// `‖e^{itω} u0‖_{L^q((0, window) × Ω)}` with `n_t` uniform time samples.
pub fn halfwave_lq(datum: &SpectralField, q: f64, window: f64, n_t: usize) -> f64 {
    let basis = datum.basis();
    let h = window / (n_t - 1) as f64;
    let wt = gregory_weights(n_t, h);
    let slices: Vec<f64> = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * h;
            let (mut re, mut im) = (datum.coeffs().to_vec(), datum.coeffs().to_vec());
            for (k, m) in basis.modes().iter().enumerate() {
                let (s, c) = (t * m.frequency).sin_cos();
                re[k] *= c;
                im[k] *= s;
            }
            let (gr, gi) = (basis.synthesize_grid(&re), basis.synthesize_grid(&im));
            let sum: f64 = basis
                .weights()
                .iter()
                .zip(gr.iter().zip(&gi))
                .map(|(w, (a, b))| w * a.hypot(*b).powf(q))
                .sum();
            wt[i] * sum
        })
        .collect();
    slices.iter().sum::<f64>().powf(1.0 / q)
}

fn time_samples(basis: &EigenBasis, datum: &SpectralField, opts: &StrichartzOptions) -> usize {
    let top = datum
        .coeffs()
        .iter()
        .zip(basis.modes())
        .filter(|(c, _)| **c != 0.0)
        .map(|(_, m)| m.frequency)
        .fold(0.0, f64::max);
    let n = (opts.samples_per_wave * opts.window * top.max(1.0)).ceil() as usize;
    n.max(64) + 1
}

/// `‖e^{itω} u0‖_{L^q((0,T) × Ω)} / ‖u0‖_{H^s}`.
pub fn strichartz_ratio(datum: &SpectralField, opts: &StrichartzOptions) -> Result<f64> {
    opts.validate()?;
    let den = norm(datum, &NormSpec::SobolevHs { s: opts.s })?;
    if den == 0.0 {
        return Err(Error::InvalidArgument("zero datum".into()));
    }
    let n_t = time_samples(datum.basis(), datum, opts);
    Ok(halfwave_lq(datum, opts.q, opts.window, n_t) / den)
}

/// Modes with frequency in `[lo, hi)`.
fn band(basis: &EigenBasis, lo: f64, hi: f64) -> Vec<usize> {
    basis
        .modes()
        .iter()
        .filter(|m| m.frequency >= lo && m.frequency < hi)
        .map(|m| m.index)
        .collect()
}

/// A point for focused data: the centre on the radial ball, a seeded
/// interior point elsewhere.
fn focus_point(domain: &Domain, rng: &mut ChaCha8Rng) -> Point {
    match *domain {
        Domain::BallRadial { .. } => [0.0; 3],
        Domain::Interval { length } => [length * rng.random_range(0.05..0.95), 0.0, 0.0],
        Domain::Disk { radius } => {
            let r = radius * rng.random_range(0.0..0.95f64).sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            [r * a.cos(), r * a.sin(), 0.0]
        }
    }
}

/// Seeded data with spectrum in `[lo, hi)`, unit `L²` norm. Even members
/// are focused at a point, `c_k = a_k e_k(x0)` with random `a_k ∈ [½, 1]`;
/// odd members have Gaussian coefficients.
pub fn band_ensemble(
    basis: &Arc<EigenBasis>,
    lo: f64,
    hi: f64,
    members: usize,
    seed: u64,
) -> Result<Vec<SpectralField>> {
    if hi > basis.max_frequency() + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "band [{lo}, {hi}) is not resolved by a basis reaching frequency {}",
            basis.max_frequency()
        )));
    }
    let idx = band(basis, lo, hi);
    if idx.is_empty() {
        return Err(Error::EmptyCluster(lo));
    }
    (0..members)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64) << 20) ^ lo.to_bits());
            let mut c = vec![0.0; basis.len()];
            if i % 2 == 0 {
                let x0 = focus_point(basis.domain(), &mut rng);
                for &k in &idx {
                    c[k] = rng.random_range(0.5..1.0) * basis.modes()[k].value(&x0);
                }
            } else {
                for &k in &idx {
                    c[k] = StandardNormal.sample(&mut rng);
                }
            }
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                c[idx[0]] = 1.0;
            } else {
                c.iter_mut().for_each(|x| *x /= n);
            }
            SpectralField::new(basis.clone(), c)
        })
        .collect()
}

/// Largest Strichartz ratio over a seeded ensemble in each dyadic band
/// `[λ, 2λ)`, fitted against `λ`.
pub fn strichartz_ratio_scan(
    basis: &Arc<EigenBasis>,
    lambdas: &[f64],
    opts: &StrichartzOptions,
) -> Result<ScanResult> {
    opts.validate()?;
    let values = lambdas
        .iter()
        .map(|&l| {
            let data = band_ensemble(basis, l, 2.0 * l, opts.members, opts.seed)?;
            let ratios = data
                .par_iter()
                .map(|d| strichartz_ratio(d, opts))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ratios.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        quantity: format!("strichartz_ratio_q{}_s{}", opts.q, opts.s),
        fit: fit_power_law(lambdas, &values)?,
        parameter: lambdas.to_vec(),
        values,
        predicted_exponent: Some(0.0),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_mode_datum_has_closed_form_ratio() {
        let ball = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 10).unwrap();
        let a = 0.3;
        let u = SpectralField::constant(&ball, a);
        let opts = StrichartzOptions::default();
        let vol = 4.0 * PI / 3.0;
        let want = (vol * opts.window).powf(0.2) * a / (a * vol.sqrt());
        assert!((strichartz_ratio(&u, &opts).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let ball = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 16).unwrap();
        let data = band_ensemble(&ball, 8.0, 16.0, 4, 1).unwrap();
        let opts = StrichartzOptions::default();
        for d in &data {
            assert!((d.l2() - 1.0).abs() < 1e-14);
            let r1 = strichartz_ratio(d, &opts).unwrap();
            let r2 = strichartz_ratio(&d.scaled(2.0), &opts).unwrap();
            assert!((r1 - r2).abs() < 1e-10 * r1);
        }
    }

    #[test]
    fn ensembles_are_deterministic_and_resolved() {
        let disk = EigenBasis::build(Domain::Disk { radius: 1.0 }, 40).unwrap();
        let a = band_ensemble(&disk, 4.0, 8.0, 6, 3).unwrap();
        let b = band_ensemble(&disk, 4.0, 8.0, 6, 3).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.coeffs() == y.coeffs()));
        assert!(band_ensemble(&disk, 40.0, 80.0, 2, 3).is_err());
    }
}
