use nalgebra::DMatrix;
use netmeasure_core::builtin::ENZYME_SOURCE;
use netmeasure_core::dsl::{mass_action_field, parse_network};
use netmeasure_core::dynamics::{finite_difference_jacobian, DEFAULT_EQUILIBRIUM_TOL};
use netmeasure_core::{find_equilibrium, spectral_abscissa, FnField, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn enzyme() -> impl VectorField {
    mass_action_field(&parse_network(ENZYME_SOURCE).unwrap())
}

/// Classical RK4 until the field is negligible.
fn rk4_limit(f: &impl VectorField, x: &[f64], dt: f64, t_max: f64) -> Vec<f64> {
    let n = x.len();
    let mut x = x.to_vec();
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let steps = (t_max / dt) as usize;
    for _ in 0..steps {
        let k1 = f.eval(&x);
        let k2 = f.eval(&axpy(&x, &k1, dt / 2.0));
        let k3 = f.eval(&axpy(&x, &k2, dt / 2.0));
        let k4 = f.eval(&axpy(&x, &k3, dt));
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if f.eval(&x).iter().all(|v| v.abs() < 1e-13) {
            break;
        }
    }
    x
}

#[test]
fn trivial_equilibria() {
    let eq = find_equilibrium(&FnField::linear(-DMatrix::identity(2, 2)), &[3.0, -2.0], 1e-10).unwrap();
    assert!(eq.point.iter().all(|v| v.abs() < 1e-12));
    let affine = FnField::new(1, |x, o| o[0] = -2.0 * x[0] + 1.0);
    let eq = find_equilibrium(&affine, &[0.0], 1e-10).unwrap();
    assert!((eq.point[0] - 0.5).abs() < 1e-12);
}

#[test]
fn enzyme_equilibrium_matches_long_time_flow() {
    let f = enzyme();
    let eq = find_equilibrium(&f, &[1.0; 7], DEFAULT_EQUILIBRIUM_TOL).unwrap();
    assert!(eq.residual <= 1e-10);
    assert!(eq.point.iter().all(|&v| v > 0.0));
    let flowed = rk4_limit(&f, &[1.0; 7], 1e-3, 400.0);
    for (a, b) in eq.point.iter().zip(&flowed) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!(eq.is_stable());
    assert!(eq.spectral_abscissa < 0.0);
}

#[test]
fn enzyme_jacobian_at_equilibrium() {
    let f = enzyme();
    let eq = find_equilibrium(&f, &[1.0; 7], DEFAULT_EQUILIBRIUM_TOL).unwrap();
    let fd = finite_difference_jacobian(&f, &eq.point);
    assert!((&eq.jacobian - fd).abs().max() < 1e-6);
}

#[test]
fn newton_is_basin_deterministic() {
    let f = enzyme();
    let base = find_equilibrium(&f, &[1.0; 7], DEFAULT_EQUILIBRIUM_TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let start: Vec<f64> = base.point.iter().map(|v| v * rng.gen_range(0.7..1.3)).collect();
        let eq = find_equilibrium(&f, &start, DEFAULT_EQUILIBRIUM_TOL).unwrap();
        assert!(f.eval(&eq.point).iter().all(|v| v.abs() <= DEFAULT_EQUILIBRIUM_TOL));
        for (a, b) in eq.point.iter().zip(&base.point) {
            assert!((a - b).abs() <= 10.0 * DEFAULT_EQUILIBRIUM_TOL * b.abs().max(1.0));
        }
    }
}

#[test]
fn spectral_abscissa_trivia() {
    assert!((spectral_abscissa(&-DMatrix::<f64>::identity(3, 3)).unwrap() + 1.0).abs() < 1e-14);
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert!(spectral_abscissa(&rot).unwrap().abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectral_abscissa_similarity_invariant(seed in 0u64..100_000, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let p = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3) / n as f64);
        let pinv = p.clone().try_inverse().unwrap();
        let a = spectral_abscissa(&j).unwrap();
        let b = spectral_abscissa(&(&p * &j * pinv)).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn equilibrium_residual_within_tolerance(seed in 0u64..100_000, n in 1usize..6) {
        // random stable affine fields x' = J x + b
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut j = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = spectral_abscissa(&j).unwrap() + 0.5;
        for i in 0..n {
            j[(i, i)] -= shift;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f = FnField::new(n, move |x, o| {
            for i in 0..n {
                o[i] = b[i] + (0..n).map(|k| j[(i, k)] * x[k]).sum::<f64>();
            }
        });
        let eq = find_equilibrium(&f, &vec![0.0; n], 1e-10).unwrap();
        prop_assert!(f.eval(&eq.point).iter().all(|v| v.abs() <= 1e-10));
    }
}
