use nalgebra::DMatrix;
use netmeasure_core::analysis::CellStatus;
use netmeasure_core::builtin::{ENZYME_INTERCONVERSION_SOURCE, ENZYME_SOURCE};
use netmeasure_core::info::{gaussian_multivariate_mi, CachedOracle, MeasureOptions};
use netmeasure_core::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E, PI};

const ENZYME_MI0: f64 = 0.0646;

fn enzyme_shape(src: &str) -> (ReactionNetwork, StationaryShape) {
    let net = parse_network(src).unwrap();
    let (_, shape) = gaussian_shape(&mass_action_field(&net), &IdentityNoise(net.dim()), &vec![1.0; net.dim()], 1e-10)
        .unwrap();
    (net, shape)
}

fn set(net: &ReactionNetwork, names: &[&str]) -> IndexSet {
    names.iter().map(|n| net.species_index(n).unwrap()).collect()
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.05
}

fn oracle(s: &DMatrix<f64>, eps: f64) -> GaussianOracle {
    GaussianOracle::new(s.clone(), eps).unwrap()
}

#[test]
fn scalar_and_block_entropies() {
    let h = gaussian_entropy(&DMatrix::from_element(1, 1, 0.5), &IndexSet::from([0]), 1.0).unwrap();
    assert!((h - 0.5 * (PI * E).ln()).abs() < 1e-14);

    let mut s = DMatrix::zeros(4, 4);
    s.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]));
    s.view_mut((2, 2), (2, 2)).copy_from(&DMatrix::from_row_slice(2, 2, &[1.5, -0.4, -0.4, 0.9]));
    for (a, b) in [(vec![0], vec![2]), (vec![0, 1], vec![3]), (vec![1], vec![2, 3])] {
        let (a, b) = (IndexSet::new(a), IndexSet::new(b));
        let joint = gaussian_entropy(&s, &a.union(&b), 0.3).unwrap();
        let split = gaussian_entropy(&s, &a, 0.3).unwrap() + gaussian_entropy(&s, &b, 0.3).unwrap();
        assert!((joint - split).abs() < 1e-12);
    }
}

#[test]
fn bivariate_entropy_matches_quadrature() {
    // -∫ u log u of N(0, eps² S) by a fine midpoint rule
    let (rho, eps) = (0.5f64, 0.1f64);
    let s = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let det = eps.powi(4) * (1.0 - rho * rho);
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let half = 10.0 * eps;
    let m = 1200;
    let h = 2.0 * half / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let x = -half + (i as f64 + 0.5) * h;
        for j in 0..m {
            let y = -half + (j as f64 + 0.5) * h;
            let q = (x * x - 2.0 * rho * x * y + y * y) / (eps * eps * (1.0 - rho * rho));
            let log_u = norm.ln() - 0.5 * q;
            acc -= log_u.exp() * log_u;
        }
    }
    let quad = acc * h * h;
    let exact = gaussian_entropy(&s, &IndexSet::from([0, 1]), eps).unwrap();
    assert!((quad - exact).abs() < 1e-6, "{quad} vs {exact}");
}

#[test]
fn mutual_information_identities() {
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.5]));
    let h = oracle(&diag, 0.1);
    assert!(mutual_information(&h, &IndexSet::from([0]), &IndexSet::from([1, 2])).unwrap().abs() < 1e-12);
    for rho in [-0.9, -0.2, 0.3, 0.75] {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let mi = mutual_information(&oracle(&s, 0.2), &IndexSet::from([0]), &IndexSet::from([1])).unwrap();
        assert!((mi + 0.5 * (1.0 - rho * rho).ln()).abs() < 1e-12);
    }
}

#[test]
fn measures_vanish_without_coupling() {
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.5, 3.0]));
    let h = oracle(&diag, 0.1);
    assert_eq!(multivariate_mi(&h, &IndexSet::empty(), &IndexSet::from([0, 1]), &IndexSet::from([2])).unwrap(), 0.0);
    let m = info::measures_with_oracle(&h, 4, &OutputSelection::All, &MeasureOptions::default()).unwrap();
    assert!(m.outputs.iter().all(|o| o.degeneracy.abs() < 1e-12 && o.complexity.abs() < 1e-12));
    let two = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
    let m = info::measures_with_oracle(&oracle(&two, 1.0), 2, &OutputSelection::All, &MeasureOptions::default())
        .unwrap();
    assert!(m.degeneracy.abs() < 1e-12 && m.complexity.abs() < 1e-12);
}

#[test]
fn two_input_degeneracy_by_hand() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let s = random_spd(&mut rng, 3);
        let h = oracle(&s, 0.1);
        let o = IndexSet::from([2]);
        let mmi = multivariate_mi(&h, &IndexSet::from([0]), &IndexSet::from([1]), &o).unwrap();
        let d = degeneracy_output(&h, &o, 3, 20).unwrap();
        assert!((d - 0.5 * mmi.max(0.0)).abs() < 1e-12);
    }
}

#[test]
fn seven_determinant_route_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let s = random_spd(&mut rng, 6);
        let h = oracle(&s, 0.05);
        let (a, b, o) = (IndexSet::from([0, 3]), IndexSet::from([1]), IndexSet::from([2, 5]));
        let via_h = multivariate_mi(&h, &a, &b, &o).unwrap();
        let via_det = gaussian_multivariate_mi(&s, &a, &b, &o).unwrap();
        assert!((via_h - via_det).abs() < 1e-10);
    }
}

#[test]
fn enzyme_multivariate_mi() {
    let (net, shape) = enzyme_shape(ENZYME_SOURCE);
    let (s1, s2, p) = (set(&net, &["S1"]), set(&net, &["S2"]), set(&net, &["P1", "P2"]));
    let h = GaussianOracle::from_shape(&shape, 0.1).unwrap();
    let mi0 = multivariate_mi(&h, &s1, &s2, &p).unwrap();
    assert!((mi0 - ENZYME_MI0).abs() <= 0.01 * ENZYME_MI0, "{mi0}");

    let d = degeneracy_output(&h, &p, 7, 20).unwrap();
    let c = complexity_output(&h, &p, 7, 20).unwrap();
    assert!(d > 0.0);
    assert!(c >= d);

    let opts = MeasureOptions {
        triples: vec![(s1.clone(), s2.clone(), p.clone())],
        ..MeasureOptions::default()
    };
    let m = eps_sigma_measures(&shape, 0.1, &OutputSelection::Sets(vec![p.clone()]), &opts).unwrap();
    let t = &m.triples[0];
    assert!((t.multivariate_mi - ENZYME_MI0).abs() <= 0.01 * ENZYME_MI0);
    assert_eq!(m.outputs[0].decompositions.len(), 32);
}

#[test]
fn interconversion_sweep() {
    let (net, _) = enzyme_shape(ENZYME_INTERCONVERSION_SOURCE);
    let (s1, s2, p) = (set(&net, &["S1"]), set(&net, &["S2"]), set(&net, &["P1", "P2"]));
    let probe = |ka: f64, kb: f64| {
        let r = mi_sweep(
            &net,
            &[ParamRange { name: "ka".into(), values: vec![ka] }, ParamRange { name: "kb".into(), values: vec![kb] }],
            &s1,
            &s2,
            &p,
        )
        .unwrap();
        r.cells[0].mi.unwrap()
    };
    let coupled = probe(5.0, 5.0);
    assert!((coupled - 0.1205).abs() <= 0.02 * 0.1205, "{coupled}");
    let free = probe(0.0, 0.0);
    assert!((free - ENZYME_MI0).abs() <= 0.01 * ENZYME_MI0, "{free}");

    let grid = [ParamRange::linspace("ka", 0.0, 10.0, 11), ParamRange::linspace("kb", 0.0, 10.0, 11)];
    let r = mi_sweep(&net, &grid, &s1, &s2, &p).unwrap();
    assert_eq!(r.cells.len(), 121);
    assert_eq!(r.invalid_count(), 0);
    assert!(r.cells.iter().all(|c| c.status == CellStatus::Ok && c.mi.unwrap().is_finite()));
}

#[test]
fn lemma_bound_and_complexity_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let s = random_spd(&mut rng, n);
        let h = CachedOracle::new(oracle(&s, 0.1));
        let full = IndexSet::full(n);
        for omask in 1u64..(1 << n) - 1 {
            let o = IndexSet::from_mask(omask);
            let input = full.difference(&o);
            for ik in input.subsets() {
                let ikc = input.difference(&ik);
                let mmi = multivariate_mi(&h, &ik, &ikc, &o).unwrap();
                let bound = mutual_information(&h, &ik, &ikc)
                    .unwrap()
                    .min(mutual_information(&h, &ik, &o).unwrap())
                    .min(mutual_information(&h, &ikc, &o).unwrap());
                assert!(mmi <= bound + 1e-9);
                assert_eq!(mmi, multivariate_mi(&h, &ikc, &ik, &o).unwrap());
                assert!(mutual_information(&h, &ik, &o).unwrap() >= -1e-9);
            }
            let d = degeneracy_output(&h, &o, n, 20).unwrap();
            let c = complexity_output(&h, &o, n, 20).unwrap();
            assert!(d >= 0.0 && c >= d - 1e-12, "C = {c}, D = {d}");
        }
    }
}

#[test]
fn eps_cancels_in_every_mi() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_spd(&mut rng, 5);
    let (a, b, o) = (IndexSet::from([0, 1]), IndexSet::from([3]), IndexSet::from([2, 4]));
    let values: Vec<(f64, f64)> = [0.01, 0.1, 1.0]
        .iter()
        .map(|&eps| {
            let h = oracle(&s, eps);
            (mutual_information(&h, &a, &b).unwrap(), multivariate_mi(&h, &a, &b, &o).unwrap())
        })
        .collect();
    for w in values.windows(2) {
        assert!((w[0].0 - w[1].0).abs() < 1e-12);
        assert!((w[0].1 - w[1].1).abs() < 1e-12);
    }
}

#[test]
fn permutation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let n = 5;
        let s = random_spd(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // coordinate i of the new system is coordinate perm[i] of the old one
        let sp = DMatrix::from_fn(n, n, |i, j| s[(perm[i], perm[j])]);
        let inv: Vec<usize> = (0..n).map(|old| perm.iter().position(|&p| p == old).unwrap()).collect();
        let map = |x: &IndexSet| -> IndexSet { x.iter().map(|i| inv[i]).collect() };
        let (h, hp) = (oracle(&s, 0.1), oracle(&sp, 0.1));
        for omask in 1u64..(1 << n) - 1 {
            let o = IndexSet::from_mask(omask);
            let d = degeneracy_output(&h, &o, n, 20).unwrap();
            let dp = degeneracy_output(&hp, &map(&o), n, 20).unwrap();
            let c = complexity_output(&h, &o, n, 20).unwrap();
            let cp = complexity_output(&hp, &map(&o), n, 20).unwrap();
            assert!((d - dp).abs() < 1e-10 && (c - cp).abs() < 1e-10);
        }
    }
}

#[test]
fn all_outputs_maximum_is_brute_force_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(65);
    for _ in 0..5 {
        let n = 5;
        let s = random_spd(&mut rng, n);
        let m = eps_sigma_measures(
            &StationaryShape::from_parts(vec![0.0; n], -DMatrix::identity(n, n), &s * 2.0).unwrap(),
            0.1,
            &OutputSelection::All,
            &MeasureOptions::default(),
        )
        .unwrap();
        assert_eq!(m.outputs.len(), 30);
        // independent re-enumeration straight from the log-determinants
        let ld = |x: &IndexSet| principal_logdet(&s, x).unwrap();
        let mi = |a: &IndexSet, b: &IndexSet| 0.5 * (ld(a) + ld(b) - ld(&a.union(b)));
        let (mut dmax, mut cmax) = (f64::MIN, f64::MIN);
        for omask in 1u64..31 {
            let o = IndexSet::from_mask(omask);
            let input = o.complement(n);
            let m_in = input.len();
            let (mut d, mut c) = (0.0, 0.0);
            for sub in 0u64..(1 << m_in) {
                let ik: IndexSet = (0..m_in).filter(|b| sub >> b & 1 == 1).map(|b| input.as_slice()[b]).collect();
                let ikc = input.difference(&ik);
                let k = ik.len();
                let binom = (0..k).fold(1.0, |acc, i| acc * (m_in - i) as f64 / (i + 1) as f64);
                if k > 0 && k < m_in {
                    d += (mi(&ik, &o) + mi(&ikc, &o) - mi(&input, &o)).max(0.0) / (2.0 * binom);
                    c += mi(&ik, &ikc) / (2.0 * binom);
                }
            }
            dmax = dmax.max(d);
            cmax = cmax.max(c);
        }
        assert!((m.degeneracy - dmax).abs() < 1e-10);
        assert!((m.complexity - cmax).abs() < 1e-10);
    }
}

#[test]
fn enumeration_cap_is_enforced() {
    let s = DMatrix::<f64>::identity(8, 8);
    let h = oracle(&s, 0.1);
    let err = degeneracy_output(&h, &IndexSet::from([0]), 8, 5).unwrap_err();
    assert!(matches!(err, info::InfoError::EnumerationCap { size: 7, cap: 5 }));
}
