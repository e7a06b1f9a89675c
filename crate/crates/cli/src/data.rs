use std::sync::Arc;

use nwave_core::domains::{dot, sub, EigenBasis};
use nwave_core::solver::WaveState;
use nwave_core::spectral::SpectralField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::DataSpec;

fn random_unit(basis: &Arc<EigenBasis>, modes: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut c = vec![0.0; basis.len()];
    for x in c.iter_mut().take(modes) {
        *x = StandardNormal.sample(rng);
    }
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|x| *x /= n);
    }
    SpectralField::new(basis.clone(), c).expect("coefficient count matches the basis")
}

/// The initial state of a preset at `t = 0`.
pub fn initial_state(spec: &DataSpec, basis: &Arc<EigenBasis>, seed: u64) -> WaveState {
    let (u, v) = match *spec {
        DataSpec::SingleMode {
            mode,
            amplitude,
            velocity,
        } => {
            let e = SpectralField::mode(basis, mode);
            (e.scaled(amplitude), e.scaled(velocity))
        }
        DataSpec::RandomEnsemble {
            modes,
            amplitude,
            member,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ member.rotate_left(32));
            let u = random_unit(basis, modes, &mut rng).scaled(amplitude);
            let v = random_unit(basis, modes, &mut rng).scaled(amplitude);
            (u, v)
        }
        DataSpec::RadialBump {
            amplitude,
            width,
            center,
            velocity,
        } => {
            let bump = SpectralField::from_fn(basis, |p| {
                let d = sub(p, &center);
                (-dot(&d, &d) / (width * width)).exp()
            });
            (bump.scaled(amplitude), bump.scaled(velocity))
        }
        DataSpec::ConstantOde { value, velocity } => (
            SpectralField::constant(basis, value),
            SpectralField::constant(basis, velocity),
        ),
        DataSpec::Zero => (SpectralField::zeros(basis), SpectralField::zeros(basis)),
    };
    WaveState::new(u, v, 0.0).expect("both fields share the basis")
}

/// RK4 for `y'' = -y⁵` from `(y0, v0)` over `t` in `n` steps.
pub fn ode_oracle(y0: f64, v0: f64, t: f64, n: usize) -> (f64, f64) {
    let h = t / n as f64;
    let f = |y: f64, v: f64| (v, -y.powi(5));
    let (mut y, mut v) = (y0, v0);
    for _ in 0..n {
        let k1 = f(y, v);
        let k2 = f(y + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(y + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(y + h * k3.0, v + h * k3.1);
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (y, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nwave_core::domains::Domain;

    #[test]
    fn presets_are_deterministic_and_normalised() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 20).unwrap();
        let spec = DataSpec::RandomEnsemble {
            modes: 10,
            amplitude: 0.5,
            member: 2,
        };
        let a = initial_state(&spec, &b, 7);
        assert_eq!(a, initial_state(&spec, &b, 7));
        assert_ne!(a, initial_state(&spec, &b, 8));
        assert!((a.u.l2() - 0.5).abs() < 1e-14 && (a.v.l2() - 0.5).abs() < 1e-14);
        assert!(a.u.coeffs()[10..].iter().all(|c| *c == 0.0));
        let z = initial_state(&DataSpec::Zero, &b, 0);
        assert!(z.u.is_zero() && z.v.is_zero());
    }

    #[test]
    fn ode_oracle_conserves_its_energy() {
        let e = |y: f64, v: f64| 0.5 * v * v + y.powi(6) / 6.0;
        let (y, v) = ode_oracle(1.0, 0.2, 3.0, 6000);
        assert!((e(y, v) - e(1.0, 0.2)).abs() < 1e-10);
    }
}
