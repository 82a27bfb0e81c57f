use nalgebra::DMatrix;
use netmeasure_core::builtin::{self, ENZYME_SOURCE};
use netmeasure_core::robustness::*;
use netmeasure_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ou1_ensemble(eps: f64, samples: usize, seed: u64) -> SampleEnsemble {
    let cfg = SimConfig::with_spacing(1e-3, 10.0, samples, 0.5, 16, seed);
    simulate(&builtin::ou(1), &IdentityNoise(1), eps, &[0.0], &cfg, "ou").unwrap()
}

#[test]
fn wasserstein_closed_form() {
    let s = solve_lyapunov(&DMatrix::from_element(1, 1, -1.0), &DMatrix::from_element(1, 1, 1.0)).unwrap();
    assert!((wasserstein_robustness(&s).unwrap() - 1.0).abs() < 1e-15);
    for n in 1..6 {
        let s = DMatrix::identity(n, n) * 0.5;
        assert!((wasserstein_robustness(&s).unwrap() - 1.0 / (n as f64).sqrt()).abs() < 1e-14);
    }
}

#[test]
fn wasserstein_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in [2, 4, 7] {
        let mut j = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = spectral_abscissa(&j).unwrap() + 0.5;
        for i in 0..n {
            j[(i, i)] -= shift;
        }
        let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
        let a = DMatrix::identity(n, n);
        let r = wasserstein_robustness(&solve_lyapunov(&j, &a).unwrap()).unwrap();
        let rq = wasserstein_robustness(&solve_lyapunov(&(&q * &j * q.transpose()), &(&q * &a * q.transpose())).unwrap())
            .unwrap();
        assert!((r - rq).abs() < 1e-10);
    }
}

#[test]
fn mean_square_displacement_of_ou() {
    let eps = 0.1;
    let ens = ou1_ensemble(eps, 100_000, 2);
    let msd = mean_square_displacement(&ens, &[0.0]).unwrap();
    // V(eps) = eps² Tr(S) with S = 1/2
    assert!((msd.v_over_eps2 - 0.5).abs() <= 0.03 * 0.5, "{}", msd.v_over_eps2);

    let still = SampleEnsemble::from_points(2, vec![1.0, 2.0, 1.0, 2.0], 0.1, "x");
    assert_eq!(mean_square_displacement(&still, &[1.0, 2.0]).unwrap().v, 0.0);
}

#[test]
fn enzyme_displacement_scales_quadratically() {
    let net = parse_network(ENZYME_SOURCE).unwrap();
    let f = mass_action_field(&net);
    let eq = find_equilibrium(&f, &[1.0; 7], 1e-10).unwrap();
    let ratios: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&eps| {
            let cfg = SimConfig::for_equilibrium(&eq, 20_000, 0.5, 16, 3);
            let ens = simulate(&f, &IdentityNoise(7), eps, &eq.point, &cfg, "enzyme").unwrap();
            mean_square_displacement(&ens, &eq.point).unwrap().v_over_eps2
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / 3.0;
    assert!(ratios.iter().all(|r| (r - mean).abs() <= 0.1 * mean), "{ratios:?}");
}

#[test]
fn functional_robustness_of_ou() {
    let eps = 0.1;
    let ens = ou1_ensemble(eps, 100_000, 5);
    assert_eq!(functional_robustness(&ens, &UnitPerformance(vec![0.0]), eps).unwrap(), 1.0);

    let p = GaussianPerformance::standard(&[0.0]);
    let rf = functional_robustness(&ens, &p, eps).unwrap();
    let exact = 1.0 / (1.0 + eps * eps).sqrt();
    assert!((rf - exact).abs() <= 0.01 * exact);
    let s = DMatrix::from_element(1, 1, 0.5);
    assert!((functional_robustness_gaussian(&s, eps, &p) - exact).abs() < 1e-14);

    assert!(functional_robustness(&ens, &p, 0.2).is_err());
    let pts: Vec<Vec<f64>> = ens.rows().take(100).map(|r| r.to_vec()).collect();
    assert!(check_performance(&p, &pts));
}

#[test]
fn functional_robustness_is_monotone_in_p() {
    let ens = ou1_ensemble(0.2, 20_000, 6);
    let loose = GaussianPerformance::standard(&[0.0]);
    let tight = GaussianPerformance::with_weight(&[0.0], DMatrix::from_element(1, 1, 3.0)).unwrap();
    assert!(functional_robustness(&ens, &tight, 0.2).unwrap() <= functional_robustness(&ens, &loose, 0.2).unwrap());
}

#[test]
fn functional_deficit_scales_like_eps_squared() {
    let eps = [0.05, 0.1, 0.2, 0.4];
    let p = GaussianPerformance::standard(&[0.0]);
    let logs: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let ens = ou1_ensemble(e, 50_000, 9);
            (1.0 - functional_robustness(&ens, &p, e).unwrap()).ln()
        })
        .collect();
    let slope = fit_slope(&eps.map(f64::ln), &logs);
    assert!((slope - 2.0).abs() <= 0.2, "{slope}");

    let s = DMatrix::from_element(1, 1, 0.5);
    let closed: Vec<f64> = eps.iter().map(|&e| (1.0 - functional_robustness_gaussian(&s, e, &p)).ln()).collect();
    assert!((fit_slope(&eps.map(f64::ln), &closed) - 2.0).abs() <= 0.2);
}

#[test]
fn uniform_index_on_linear_fields() {
    for (c, want) in [(1.0, 1.0), (2.0, 2.0)] {
        let f = FnField::linear(-DMatrix::identity(3, 3) * c);
        let u = QuadraticLyapunov::half_norm(&[0.0; 3]);
        let idx = uniform_robustness_index(&f, &[0.0; 3], &u, 1.0, 10_000).unwrap();
        assert!((idx.alpha - want).abs() < 1e-12);
    }
}

#[test]
fn uniform_index_matches_top_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for n in [1, 2] {
        for _ in 0..5 {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let j = -(&b * b.transpose() + DMatrix::identity(n, n) * 0.3);
            let lambda_max = j.clone().symmetric_eigen().eigenvalues.max();
            let x0 = vec![0.5; n];
            let jc = j.clone();
            let c = x0.clone();
            let f = FnField::new(n, move |x, o| {
                for i in 0..n {
                    o[i] = (0..n).map(|k| jc[(i, k)] * (x[k] - c[k])).sum();
                }
            });
            let u = QuadraticLyapunov::half_norm(&x0);
            let idx = uniform_robustness_index(&f, &x0, &u, 0.5, 10_000).unwrap();
            assert!((idx.alpha - lambda_max.abs()).abs() < 1e-3, "{} vs {}", idx.alpha, lambda_max);
        }
    }
}

#[test]
fn uniform_index_shrinks_with_radius() {
    // inward push per unit distance fades away from the origin
    let f = FnField::new(2, |x, o| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        o[0] = -x[0] / (1.0 + r2) + 0.3 * x[1];
        o[1] = -x[1] / (1.0 + r2) - 0.3 * x[0];
    });
    let u = QuadraticLyapunov::half_norm(&[0.0, 0.0]);
    let alphas: Vec<f64> = [0.1, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&r| uniform_robustness_index(&f, &[0.0, 0.0], &u, r, 2_000).unwrap().alpha)
        .collect();
    assert!(alphas.windows(2).all(|w| w[1] <= w[0]), "{alphas:?}");
    assert!(alphas.iter().all(|&a| a >= 0.0));
}

#[test]
fn default_lyapunov_function_is_strong_at_the_enzyme() {
    let net = parse_network(ENZYME_SOURCE).unwrap();
    let f = mass_action_field(&net);
    let eq = find_equilibrium(&f, &[1.0; 7], 1e-10).unwrap();
    let u = QuadraticLyapunov::for_jacobian(&eq.point, &eq.jacobian).unwrap();
    let idx = uniform_robustness_index(&f, &eq.point, &u, 0.01, 10_000).unwrap();
    assert!(idx.alpha > 0.0);
    assert_eq!(idx.points_evaluated + idx.points_skipped, 10_000);
}
