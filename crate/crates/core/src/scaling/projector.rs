use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{fit_power_law, ScanResult};
use crate::domains::EigenBasis;
use crate::spectral::grid_lq;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpnormOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Relative change of the objective below which an ascent stops.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OpnormOptions {
    fn default() -> Self {
        OpnormOptions {
            restarts: 8,
            max_iterations: 2000,
            tolerance: 1e-13,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OpnormResult {
    pub lambda: f64,
    pub q: f64,
    pub value: f64,
    /// Maximizer in the full basis (zero off the cluster), unit `ℓ²` norm.
    pub coeffs: Vec<f64>,
    pub cluster: Vec<usize>,
    pub iterations: usize,
    /// False when the best ascent hit the iteration cap.
    pub converged: bool,
}

struct ClusterGrid<'a> {
    weights: &'a [f64],
    /// Mode values on the grid, one row per cluster mode.
    rows: Vec<Vec<f64>>,
}

impl ClusterGrid<'_> {
    fn synth(&self, c: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.weights.len()];
        for (ck, row) in c.iter().zip(&self.rows) {
            for (fj, e) in f.iter_mut().zip(row) {
                *fj += ck * e;
            }
        }
        f
    }

    fn value(&self, c: &[f64], q: f64) -> f64 {
        grid_lq(self.weights, &self.synth(c), q)
    }

    /// `∇_c Σ w |f|^q / q`.
    fn gradient(&self, c: &[f64], q: f64) -> Vec<f64> {
        let f = self.synth(c);
        let g: Vec<f64> = f
            .iter()
            .zip(self.weights)
            .map(|(v, w)| w * v.abs().powf(q - 2.0) * v)
            .collect();
        self.rows
            .iter()
            .map(|row| row.iter().zip(&g).map(|(e, gj)| e * gj).sum())
            .collect()
    }
}

fn normalize(c: &mut [f64]) -> bool {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    c.iter_mut().for_each(|x| *x /= n);
    true
}

/// Normalized-gradient ascent on the unit sphere; monotone for the convex
/// objective `‖f‖_q^q`.
fn ascend(
    grid: &ClusterGrid,
    mut c: Vec<f64>,
    q: f64,
    opts: &OpnormOptions,
) -> (f64, Vec<f64>, usize, bool) {
    let mut val = grid.value(&c, q);
    for it in 1..=opts.max_iterations {
        let mut next = grid.gradient(&c, q);
        if !normalize(&mut next) {
            return (val, c, it, true);
        }
        let nv = grid.value(&next, q);
        if nv < val {
            return (val, c, it, true);
        }
        let done = nv - val <= opts.tolerance * nv;
        c = next;
        val = nv;
        if done {
            return (val, c, it, true);
        }
    }
    (val, c, opts.max_iterations, false)
}

/// Estimate of `sup ‖Π_λ u‖_{L^q} / ‖u‖_{L²}` over the cluster
/// `√μ ∈ [λ, λ + 1)`.
pub fn projector_opnorm(
    basis: &EigenBasis,
    lambda: f64,
    q: f64,
    opts: &OpnormOptions,
) -> Result<OpnormResult> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::InvalidNorm(format!("need 2 <= q < ∞, got q = {q}")));
    }
    let cluster = basis.cluster(lambda);
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(lambda));
    }
    let grid = ClusterGrid {
        weights: basis.weights(),
        rows: cluster.iter().map(|&k| basis.mode_on_grid(k)).collect(),
    };
    let embed = |c: &[f64]| {
        let mut full = vec![0.0; basis.len()];
        for (k, v) in cluster.iter().zip(c) {
            full[*k] = *v;
        }
        full
    };
    if cluster.len() == 1 {
        return Ok(OpnormResult {
            lambda,
            q,
            value: grid.value(&[1.0], q),
            coeffs: embed(&[1.0]),
            cluster,
            iterations: 0,
            converged: true,
        });
    }
    let n = cluster.len();
    let runs: Vec<(f64, Vec<f64>, usize, bool)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let mut c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if !normalize(&mut c) {
                c = vec![0.0; n];
                c[0] = 1.0;
            }
            ascend(&grid, c, q, opts)
        })
        .collect();
    let best = runs
        .into_iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    Ok(OpnormResult {
        lambda,
        q,
        value: best.0,
        coeffs: embed(&best.1),
        cluster,
        iterations: best.2,
        converged: best.3,
    })
}

/// Fits the operator norm against `λ` over the clusters that lie wholly
/// below the top of the basis spectrum.
pub fn projector_exponent_scan(
    basis: &EigenBasis,
    q: f64,
    lambdas: &[f64],
    opts: &OpnormOptions,
) -> Result<ScanResult> {
    let top = basis.max_frequency();
    let usable: Vec<f64> = lambdas
        .iter()
        .copied()
        .filter(|l| *l > 0.0 && l + 1.0 < top && !basis.cluster(*l).is_empty())
        .collect();
    let results = usable
        .iter()
        .map(|&l| projector_opnorm(basis, l, q, opts))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let fit = fit_power_law(&usable, &values)?;
    Ok(ScanResult {
        quantity: format!("projector_opnorm_q{q}"),
        parameter: usable,
        values,
        fit,
        predicted_exponent: if (q - 5.0).abs() < 1e-12 {
            Some(0.4)
        } else if q == 2.0 {
            Some(0.0)
        } else {
            None
        },
        converged: results.iter().all(|r| r.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use crate::spectral::{norm, NormSpec, SpectralField};
    use std::f64::consts::PI;

    #[test]
    fn single_mode_cluster_is_the_mode_norm() {
        let b = EigenBasis::build(Domain::Interval { length: PI }, 12).unwrap();
        let r = projector_opnorm(&b, 3.0, 5.0, &OpnormOptions::default()).unwrap();
        assert_eq!(r.cluster.len(), 1);
        let direct = norm(&SpectralField::mode(&b, 3), &NormSpec::Lq { q: 5.0 }).unwrap();
        assert!((r.value - direct).abs() < 1e-10);
        // dense Riemann sum of |√(2/π) cos 3x|⁵
        let n = 200_000;
        let h = PI / n as f64;
        let dense: f64 = (0..n)
            .map(|j| {
                ((2.0 / PI).sqrt() * (3.0 * (j as f64 + 0.5) * h).cos())
                    .abs()
                    .powi(5)
                    * h
            })
            .sum::<f64>()
            .powf(0.2);
        assert!((r.value - dense).abs() < 1e-8);
    }

    #[test]
    fn q_two_gives_one() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 60).unwrap();
        for lambda in [3.0, 5.0, 7.0] {
            let r = projector_opnorm(&b, lambda, 2.0, &OpnormOptions::default()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "{lambda}: {}", r.value);
        }
    }

    #[test]
    fn two_mode_cluster_matches_angle_sweep() {
        // frequencies k/2 on (0, 2π): the cluster [3, 4) holds k = 6, 7
        let b = EigenBasis::build(Domain::Interval { length: 2.0 * PI }, 16).unwrap();
        let r = projector_opnorm(&b, 3.0, 5.0, &OpnormOptions::default()).unwrap();
        assert_eq!(r.cluster.len(), 2);
        let (e0, e1) = (b.mode_on_grid(r.cluster[0]), b.mode_on_grid(r.cluster[1]));
        let sweep = (0..3600)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 3600.0;
                let f: Vec<f64> = e0
                    .iter()
                    .zip(&e1)
                    .map(|(x, y)| a.cos() * x + a.sin() * y)
                    .collect();
                grid_lq(b.weights(), &f, 5.0)
            })
            .fold(0.0, f64::max);
        assert!(
            r.value >= sweep - 1e-6 && r.value - sweep < 1e-6,
            "{} vs {sweep}",
            r.value
        );
        let u = SpectralField::new(b.clone(), r.coeffs.clone()).unwrap();
        assert!((norm(&u, &NormSpec::Lq { q: 5.0 }).unwrap() - r.value).abs() < 1e-10);
    }

    #[test]
    fn empty_cluster_and_bad_exponent() {
        let b = EigenBasis::build(Domain::Interval { length: PI }, 4).unwrap();
        assert!(matches!(
            projector_opnorm(&b, 10.0, 5.0, &OpnormOptions::default()),
            Err(Error::EmptyCluster(_))
        ));
        assert!(projector_opnorm(&b, 1.0, 1.5, &OpnormOptions::default()).is_err());
    }
}
