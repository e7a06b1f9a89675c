use std::sync::{Arc, OnceLock};

use nwave_core::domains::{Domain, EigenBasis};
use nwave_core::spectral::{
    bessel_potential, norm, projector, spectral_multiplier, NormSpec, SpectralField,
};
use proptest::prelude::*;

fn bases() -> &'static [Arc<EigenBasis>; 3] {
    static CELL: OnceLock<[Arc<EigenBasis>; 3]> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            EigenBasis::build(Domain::Interval { length: 2.0 }, 24).unwrap(),
            EigenBasis::build(Domain::Disk { radius: 1.0 }, 40).unwrap(),
            EigenBasis::build(Domain::BallRadial { radius: 1.5 }, 24).unwrap(),
        ]
    })
}

fn field() -> impl Strategy<Value = SpectralField> {
    (0usize..3, prop::collection::vec(-1.0f64..1.0, 40)).prop_map(|(i, c)| {
        let b = &bases()[i];
        SpectralField::new(b.clone(), c[..b.len()].to_vec()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(f in field()) {
        let l2 = norm(&f, &NormSpec::Lq { q: 2.0 }).unwrap();
        prop_assert!((l2 - f.l2()).abs() <= 1e-10 * (1.0 + f.l2()));
    }

    #[test]
    fn analyze_inverts_synthesize(f in field()) {
        let back = SpectralField::analyze(f.basis(), &f.grid_values()).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn projectors_partition_and_are_idempotent(f in field()) {
        let top = f.basis().max_frequency().floor() as usize;
        let mut sum = SpectralField::zeros(f.basis());
        for lambda in 0..=top {
            let p = projector(&f, lambda as f64);
            prop_assert!(p.l2() <= f.l2() + 1e-15);
            let pp = projector(&p, lambda as f64);
            prop_assert_eq!(pp.coeffs(), p.coeffs());
            sum = sum.axpy(1.0, &p);
        }
        for (a, b) in sum.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn projector_is_self_adjoint(f in field(), lambda in 0.0f64..12.0) {
        let g = SpectralField::new(f.basis().clone(), f.coeffs().iter().rev().copied().collect()).unwrap();
        let a = projector(&f, lambda).inner(&g);
        let b = f.inner(&projector(&g, lambda));
        prop_assert!((a - b).abs() <= 1e-14);
    }

    #[test]
    fn multipliers_compose(f in field(), s1 in -2.0f64..3.0, s2 in -2.0f64..3.0, t in -3.0f64..3.0) {
        let a = bessel_potential(&spectral_multiplier(&f, |mu| (t * mu.sqrt()).cos()).unwrap(), s1);
        let b = spectral_multiplier(&f, |mu| (t * mu.sqrt()).cos() * (1.0 + mu).powf(0.5 * s1)).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let c = bessel_potential(&bessel_potential(&f, s1), s2);
        let d = bessel_potential(&f, s1 + s2);
        for (x, y) in c.coeffs().iter().zip(d.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
