use hydrostat::config::smooth_fields;
use hydrostat::diagnostics::{anisotropic_ratio, norms, regularity_functionals};
use hydrostat::dynamics::dealias;
use hydrostat::snapshot::{decode, encode};
use hydrostat::spectral::{derivative, parity_project, Axis, Grid3, Parity, PhysicalField3D};
use hydrostat::state::{make_state, Params, State};
use hydrostat::stepper::{step, Scheme, StepperConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid3 {
    Grid3::new(8, 8, 8, 1.0).unwrap()
}

fn noise(g: Grid3, seed: u64) -> PhysicalField3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PhysicalField3D::new(g, values).unwrap()
}

fn params_strategy() -> impl Strategy<Value = Params> {
    (
        0.5f64..20.0,
        0.5f64..20.0,
        0.5f64..20.0,
        -2.0f64..2.0,
        0.0f64..0.1,
    )
        .prop_map(|(r1, r2, r3, f0, epsilon)| Params {
            r1,
            r2,
            r3,
            h: 1.0,
            f0,
            epsilon,
        })
}

fn state(seed: u64, amplitude: f64, p: Params) -> State {
    let [v1, v2, t] = smooth_fields(grid(), seed, amplitude);
    make_state([&v1, &v2], &t, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in any::<u64>()) {
        let f = noise(grid(), seed);
        let back = f.forward().inverse();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let g = grid();
        let f = noise(g, seed);
        let quad = f.values().iter().map(|v| v * v).sum::<f64>() * g.volume() / g.len() as f64;
        let spec = f.forward().norm_sq();
        prop_assert!((quad - spec).abs() <= 1e-12 * quad);
    }

    #[test]
    fn parity_projections_split_the_field(seed in any::<u64>()) {
        let f = noise(grid(), seed).forward();
        let even = parity_project(&f, Parity::Even);
        let odd = parity_project(&f, Parity::Odd);
        let mut sum = even.clone();
        sum.axpy(1.0, &odd);
        prop_assert!(sum.max_coeff_diff(&f) < 1e-14);
        prop_assert!(even.inner(&odd).abs() < 1e-12 * f.norm_sq().max(1.0));
        prop_assert!(parity_project(&even, Parity::Even).max_coeff_diff(&even) == 0.0);
    }

    #[test]
    fn z_derivative_flips_parity(seed in any::<u64>()) {
        let f = parity_project(&noise(grid(), seed).forward(), Parity::Even);
        let d = derivative(&f, Axis::Z, 1);
        prop_assert!(parity_project(&d, Parity::Even).norm() < 1e-12 * d.norm().max(1.0));
    }

    #[test]
    fn dealias_is_idempotent(seed in any::<u64>()) {
        let f = dealias(&noise(grid(), seed).forward());
        prop_assert_eq!(dealias(&f).max_coeff_diff(&f), 0.0);
    }

    #[test]
    fn states_satisfy_the_constraints(seed in any::<u64>(), p in params_strategy()) {
        let s = state(seed, 1.0, p);
        prop_assert!(s.barotropic_divergence() < 1e-12);
        let (rv, rt) = s.parity_residuals();
        prop_assert!(rv == 0.0 && rt == 0.0);
        let mut again = s.clone();
        again.project();
        prop_assert!(again.distance_sq(&s).sqrt() < 1e-13 * s.l2_sq().sqrt().max(1.0));
    }

    #[test]
    fn semi_discrete_energy_pairing_is_exact(seed in any::<u64>(), p in params_strategy()) {
        let r = norms(&state(seed, 1.0, p), None).unwrap();
        prop_assert!(r.residual_v < 1e-10, "residual_v {}", r.residual_v);
        prop_assert!(r.residual_t < 1e-10, "residual_t {}", r.residual_t);
    }

    #[test]
    fn regularity_functional_bounds(seed in any::<u64>(), p in params_strategy(), t in 0.0f64..1.0) {
        let r = regularity_functionals(&state(seed, 1.0, p), t);
        prop_assert!(r.x >= 1.0);
        prop_assert_eq!(r.z.to_bits(), r.x.ln().to_bits());
        prop_assert!(r.x_terms.iter().chain(&r.y_terms).all(|v| *v >= 0.0));
        prop_assert!(r.c_r >= 0.0);
    }

    #[test]
    fn anisotropic_ratio_is_scale_invariant(
        seed in any::<u64>(),
        a in 0.1f64..10.0,
        b in 0.1f64..10.0,
        c in 0.1f64..10.0,
    ) {
        let g = grid();
        let f = dealias(&noise(g, seed).forward());
        let gg = dealias(&noise(g, seed ^ 1).forward());
        let hh = dealias(&noise(g, seed ^ 2).forward());
        let r = anisotropic_ratio(&f, &gg, &hh);
        let s = anisotropic_ratio(&f.scaled(a), &gg.scaled(b), &hh.scaled(c));
        prop_assert!((r.ratio1 - s.ratio1).abs() <= 1e-10 * r.ratio1.max(1e-300));
        prop_assert!((r.ratio2 - s.ratio2).abs() <= 1e-10 * r.ratio2.max(1e-300));
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), p in params_strategy(), time in 0.0f64..10.0, steps in any::<u64>()) {
        let s = state(seed, 1.0, p).at_time(time);
        let bytes = encode(&s, steps);
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(back.steps, steps);
        prop_assert_eq!(encode(&back.state, steps), bytes);
    }

    #[test]
    fn horizontally_uniform_temperature_only_diffuses(
        amps in prop::collection::vec(-1.0f64..1.0, 3),
        dt in 1e-4f64..1e-1,
    ) {
        let g = grid();
        let t = PhysicalField3D::from_fn(g, |_, _, z| {
            amps.iter()
                .enumerate()
                .map(|(m, a)| a * ((m + 1) as f64 * std::f64::consts::PI * z).sin())
                .sum()
        });
        let z = PhysicalField3D::zeros(g);
        let s = make_state([&z, &z], &t, Params::default()).unwrap();
        for scheme in [Scheme::ImexEuler, Scheme::ImexRk2] {
            let next = step(&s, dt, &StepperConfig::fixed(scheme, dt, 1.0), None).unwrap();
            prop_assert!(next.v1.norm() == 0.0 && next.v2.norm() == 0.0);
            prop_assert!(next.temperature.norm() <= s.temperature.norm());
        }
    }
}
