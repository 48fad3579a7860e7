use std::sync::Arc;

use fnls::model::{energy, mass, momentum, Functionals};
use fnls::spectral::apply_d;
use fnls::timestepper::{linear_substep, step};
use fnls::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    Grid::new(-20.0, 20.0, 256).unwrap()
}

#[derive(Debug, Clone)]
struct Bump {
    center: f64,
    width: f64,
    amp: (f64, f64),
    wavenumber: f64,
}

fn bump() -> impl Strategy<Value = Bump> {
    (-6.0..6.0f64, 0.5..2.5f64, (-2.0..2.0f64, -2.0..2.0f64), -2.0..2.0f64).prop_map(
        |(center, width, amp, wavenumber)| Bump {
            center,
            width,
            amp,
            wavenumber,
        },
    )
}

fn field(bumps: &[Bump]) -> ComplexField {
    ComplexField::from_fn(grid(), |x| {
        bumps
            .iter()
            .map(|b| {
                Complex64::new(b.amp.0, b.amp.1)
                    * (-((x - b.center) / b.width).powi(2)).exp()
                    * Complex64::from_polar(1.0, b.wavenumber * x)
            })
            .sum()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn l2(u: &ComplexField) -> f64 {
    u.values().iter().map(|v| v.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(bumps in prop::collection::vec(bump(), 1..4)) {
        let u = field(&bumps);
        let back = u.forward().unwrap().inverse().unwrap();
        prop_assert!(back.linf_distance(&u) <= 1e-12 * u.linf().max(1e-300));
    }

    #[test]
    fn parseval(bumps in prop::collection::vec(bump(), 1..4)) {
        let u = field(&bumps);
        let g = u.grid().clone();
        let phys = g.h() * l2(&u);
        let spec = g.length() * u.forward().unwrap().coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        prop_assert!(rel(phys, spec) <= 1e-12);
    }

    #[test]
    fn functionals_gauge_and_translation_invariant(
        bumps in prop::collection::vec(bump(), 1..4),
        theta in 0.0..std::f64::consts::TAU,
        shift in -100i64..100,
        beta in -0.3..1.4f64,
    ) {
        let p = ModelParams::focusing(beta, 1.0);
        let u = field(&bumps);
        let base = Functionals::compute(&u, &p).unwrap();
        for v in [u.scaled(Complex64::from_polar(1.0, theta)), u.circular_shift(shift)] {
            let f = Functionals::compute(&v, &p).unwrap();
            prop_assert!(rel(base.mass, f.mass) <= 1e-12);
            prop_assert!(rel(base.gradient, f.gradient) <= 1e-12);
            prop_assert!(rel(base.potential, f.potential) <= 1e-12);
            prop_assert!((base.momentum - f.momentum).abs() <= 1e-12 * (base.mass + base.gradient));
        }
    }

    #[test]
    fn linear_flow_is_unitary(bumps in prop::collection::vec(bump(), 1..4), tau in -3.0..3.0f64, lambda in -2.0..2.0f64) {
        let u = field(&bumps);
        let v = linear_substep(&u, tau, lambda).unwrap();
        prop_assert!(rel(l2(&u), l2(&v)) <= 1e-13);
        let p = ModelParams::focusing(0.5, 1.0);
        prop_assert!(rel(mass(&u, &p).unwrap(), mass(&v, &p).unwrap()) <= 1e-12);
    }

    #[test]
    fn fractional_derivatives_compose(bumps in prop::collection::vec(bump(), 1..3), a in 0.1..1.5f64, b in 0.1..1.5f64) {
        let u = field(&bumps);
        let two = apply_d(&apply_d(&u, a).unwrap(), b).unwrap();
        let one = apply_d(&u, a + b).unwrap();
        prop_assert!(two.linf_distance(&one) <= 1e-11 * one.linf().max(1.0));
    }

    #[test]
    fn step_commutes_with_gauge_and_translation(
        bumps in prop::collection::vec(bump(), 1..3),
        theta in 0.0..std::f64::consts::TAU,
        shift in -64i64..64,
    ) {
        let p = ModelParams::focusing(0.6, 1.0);
        let u = field(&bumps).scaled(Complex64::new(0.3, 0.0));
        let rot = Complex64::from_polar(1.0, theta);
        let stepped = step(&u, 1e-3, &p, p.lambda, Scheme::Yoshida4).unwrap();
        let a = step(&u.scaled(rot), 1e-3, &p, p.lambda, Scheme::Yoshida4).unwrap();
        prop_assert!(a.linf_distance(&stepped.scaled(rot)) <= 1e-12 * stepped.linf().max(1.0));
        let b = step(&u.circular_shift(shift), 1e-3, &p, p.lambda, Scheme::Yoshida4).unwrap();
        prop_assert!(b.linf_distance(&stepped.circular_shift(shift)) <= 1e-12 * stepped.linf().max(1.0));
    }

    #[test]
    fn short_evolution_conserves_invariants(bumps in prop::collection::vec(bump(), 1..3)) {
        let p = ModelParams::focusing(0.5, 1.0);
        let mut u = field(&bumps);
        let n = u.len() as f64;
        let mean: Complex64 = u.values().iter().sum::<Complex64>() / n;
        u.values_mut().iter_mut().for_each(|v| *v -= mean);
        let u = u.scaled(Complex64::new(0.2, 0.0));
        let res = evolve(&u, &p, &StepConfig::new(0.05, 50)).unwrap();
        let f = &res.final_field;
        prop_assert!(rel(mass(&u, &p).unwrap(), mass(f, &p).unwrap()) <= 1e-9);
        let e0 = energy(&u, &p).unwrap();
        prop_assert!((e0 - energy(f, &p).unwrap()).abs() <= 1e-6 * e0.abs().max(1e-3));
        let m0 = momentum(&u, &p).unwrap();
        prop_assert!((m0 - momentum(f, &p).unwrap()).abs() <= 1e-6 * mass(&u, &p).unwrap().max(1e-3));
    }

    #[test]
    fn profile_file_round_trip(bumps in prop::collection::vec(bump(), 1..4), t in prop::option::of(-1e3..1e3f64)) {
        use fnls::io::{decode, encode, ProfileFile};
        let file = ProfileFile {
            field: field(&bumps),
            params: ModelParams::new(1.5, -1.0, 0.3, 2.0),
            wave: WaveParams::boosted(1.25, -0.5),
            time: t,
        };
        let back = decode(&encode(&file)).unwrap();
        prop_assert_eq!(encode(&back), encode(&file));
    }
}
