use decolab_core::evolution::asymptotic_state;
use decolab_core::histories::{
    chain_operator, classify, decoherence_functional, decoherence_matrix, flatten_state, griffiths_omnes_check,
    insensitivity_check, records_check, ConsistencyLevel, HistoryChain, ProjectorFamily, Tolerances,
};
use decolab_core::instances::{random_hermitian, random_matrix, random_state, rng};
use decolab_core::linalg::{self, CMat};
use decolab_core::pointer::{extract_weights, pointer_basis, state_from_weights, PointerFrame};
use decolab_core::spectral::SpectralModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_density(seed: u64, n: usize) -> CMat {
    let a = random_matrix(&mut rng(seed), n);
    let r = &a * a.adjoint();
    let tr = r.trace();
    r / tr
}

/// `exp(-i h t)` by scaling and squaring of the Taylor series.
fn expm_oracle(h: &CMat, t: f64) -> CMat {
    let n = h.nrows();
    let a = h * Complex64::new(0.0, -t / 1024.0);
    let mut term = linalg::identity(n);
    let mut sum = linalg::identity(n);
    for k in 1..30 {
        term = &term * &a / Complex64::from(k as f64);
        sum += &term;
    }
    for _ in 0..10 {
        sum = &sum * &sum;
    }
    sum
}

fn diag_h(values: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::from(v)),
    ))
}

#[test]
fn constant_projectors_collapse() {
    let h = diag_h(&[0.0, 1.0, 2.5]);
    let fam = ProjectorFamily::canonical(3);
    let same = HistoryChain::new(vec![0.0, 1.0, 4.0], vec![1, 1, 1], h.clone()).unwrap();
    assert_eq!(chain_operator(&same, &fam).unwrap(), fam.projectors[1]);
    let mixed = HistoryChain::new(vec![0.0, 1.0], vec![0, 2], h).unwrap();
    assert_eq!(chain_operator(&mixed, &fam).unwrap(), CMat::zeros(3, 3));
}

#[test]
fn evolving_projectors_match_matrix_exponential() {
    let h = random_hermitian(&mut rng(11), 3);
    let fam = ProjectorFamily::canonical(3);
    let (t1, t2) = (0.3, 1.7);
    let chain = HistoryChain::new(vec![t1, t2], vec![0, 2], h.clone()).unwrap();
    let p = |l: usize, t: f64| {
        let u = expm_oracle(&h, t);
        &u * &fam.projectors[l] * u.adjoint()
    };
    let oracle = p(0, t1) * p(2, t2);
    let c = chain_operator(&chain, &fam).unwrap();
    assert!(linalg::max_abs(&(c - oracle)) < 1e-12);
}

#[test]
fn repeated_constant_projector_is_idempotent() {
    let h = diag_h(&[0.0, 1.0, 2.0, 3.0]);
    let fam = ProjectorFamily::from_basis(&linalg::identity(4), &[vec![0, 1], vec![2], vec![3]]).unwrap();
    let once = HistoryChain::new(vec![1.0], vec![0], h.clone()).unwrap();
    let twice = HistoryChain::new(vec![1.0, 2.0, 3.0], vec![0, 0, 0], h).unwrap();
    assert_eq!(
        chain_operator(&once, &fam).unwrap(),
        chain_operator(&twice, &fam).unwrap()
    );
}

#[test]
fn trivial_chain_returns_the_state() {
    let rho = random_density(3, 4);
    let fam = ProjectorFamily::trivial(4);
    let c = HistoryChain::new(vec![0.5], vec![0], random_hermitian(&mut rng(4), 4)).unwrap();
    let m = decoherence_matrix(&rho, &c, &c, &fam).unwrap();
    assert!(linalg::max_abs(&(m - &rho)) < 1e-14);
    assert!(decoherence_matrix(&CMat::zeros(3, 3), &c, &c, &fam).is_err());
}

#[test]
fn single_time_probabilities_sum_to_one() {
    let rho = random_density(5, 3);
    let h = random_hermitian(&mut rng(6), 3);
    let fam = ProjectorFamily::canonical(3);
    let mut total = 0.0;
    for l in 0..3 {
        let c = HistoryChain::new(vec![0.8], vec![l], h.clone()).unwrap();
        let d = decoherence_functional(&rho, &c, &c, &fam).unwrap();
        assert!(d.re >= 0.0 && d.im.abs() < 1e-14);
        total += d.re;
    }
    assert!((total - 1.0).abs() < 1e-12);
}

fn final_state(seed: u64) -> (SpectralModel, decolab_core::StateFunctional) {
    let model = SpectralModel::uniform(-1.0, 2.0, 5, vec![2]).unwrap();
    let star = asymptotic_state(&random_state(&mut rng(seed), &model));
    (model, star)
}

#[test]
fn pointer_family_gives_matrix_decoherence() {
    let (model, star) = final_state(21);
    let frame = pointer_basis(&star).unwrap();
    let flat = flatten_state(&star, &frame, &model).unwrap();
    assert!((flat.rho.trace().re - 1.0).abs() < 1e-10);
    let fam = flat.label_family();
    let h = flat.hamiltonian();
    let v = classify(&flat.rho, &fam, &[0.0, 1.0], &h, Tolerances::default()).unwrap();
    assert_eq!(v.level, ConsistencyLevel::Matrix, "{:?}", v.max_violation);
    assert!(v.max_violation.matrix < 1e-10);
    let p = v.probabilities.unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(p.iter().all(|&x| x >= -1e-15));

    // diagonal entries of M are the pointer weights
    for l in 0..fam.len() {
        let c = HistoryChain::new(vec![0.0], vec![l], h.clone()).unwrap();
        let m = decoherence_matrix(&flat.rho, &c, &c, &fam).unwrap();
        let expect = &fam.projectors[l] * flat.rho[(l, l)];
        assert!(linalg::max_abs(&(m - expect)) < 1e-14);
    }
}

#[test]
fn original_basis_is_medium_but_not_matrix() {
    let (model, star) = final_state(22);
    let flat = flatten_state(&star, &PointerFrame::identity(&model), &model).unwrap();
    assert!(linalg::max_offdiag_abs(&flat.rho) > 1e-3);
    let v = classify(
        &flat.rho,
        &flat.label_family(),
        &[0.0, 2.0],
        &flat.hamiltonian(),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(v.level, ConsistencyLevel::Medium, "{:?}", v.max_violation);
    assert!(v.max_violation.matrix > 1e-3);
}

#[test]
fn generic_noncommuting_family_is_inconsistent() {
    let rho = random_density(31, 3);
    let h = random_hermitian(&mut rng(32), 3);
    let fam = ProjectorFamily::canonical(3);
    let v = classify(&rho, &fam, &[0.0, 1.0], &h, Tolerances::default()).unwrap();
    assert_eq!(v.level, ConsistencyLevel::None);
    assert!(v.max_violation.weak > 1e-3);
    assert!(v.probabilities.is_none());

    // brute-force weak violation over all pairs of two-time histories
    let mut worst = 0.0f64;
    for a in 0..9 {
        for b in 0..9 {
            if a == b {
                continue;
            }
            let ca = HistoryChain::new(vec![0.0, 1.0], vec![a / 3, a % 3], h.clone()).unwrap();
            let cb = HistoryChain::new(vec![0.0, 1.0], vec![b / 3, b % 3], h.clone()).unwrap();
            worst = worst.max(decoherence_functional(&rho, &ca, &cb, &fam).unwrap().re.abs());
        }
    }
    assert!((worst - v.max_violation.weak).abs() < 1e-13);
}

#[test]
fn griffiths_omnes_vanishes_for_exact_projectors() {
    let rho = random_density(41, 3);
    let u = linalg::unitary_propagator(&random_hermitian(&mut rng(42), 3), 1.0);
    let fam = ProjectorFamily::from_basis(&u, &[vec![0], vec![1, 2]]).unwrap();
    assert!(griffiths_omnes_check(&rho, &fam).unwrap() < 1e-14);
    let mixed = linalg::identity(3) / Complex64::from(3.0);
    assert!(griffiths_omnes_check(&mixed, &fam).unwrap() < 1e-14);

    let mut broken = fam.projectors.clone();
    broken[0] *= Complex64::from(0.5);
    let bad = ProjectorFamily::unchecked(broken.clone()).unwrap();
    assert!(ProjectorFamily::new(broken).is_err());
    assert!(griffiths_omnes_check(&rho, &bad).unwrap() > 1e-3);
}

#[test]
fn insensitivity_measures_removed_coherences() {
    let (model, star) = final_state(51);
    let frame = pointer_basis(&star).unwrap();
    let flat = flatten_state(&star, &frame, &model).unwrap();
    let (_, dev) = insensitivity_check(&flat.rho, &flat.label_family()).unwrap();
    assert!(dev < 1e-12);

    let rho = random_density(52, 3);
    let fam = ProjectorFamily::canonical(3);
    let (after, dev) = insensitivity_check(&rho, &fam).unwrap();
    let mut removed = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                removed += rho[(i, j)].norm_sqr();
            }
            let expect = if i == j { rho[(i, j)] } else { Complex64::from(0.0) };
            assert!((after[(i, j)] - expect).norm() < 1e-15);
        }
    }
    assert!((dev - removed.sqrt()).abs() < 1e-14);
    assert!(insensitivity_check(&rho, &ProjectorFamily::trivial(3)).unwrap().1 < 1e-15);
}

#[test]
fn pointer_records_reproduce_the_functional() {
    let (model, star) = final_state(61);
    let frame = pointer_basis(&star).unwrap();
    let flat = flatten_state(&star, &frame, &model).unwrap();
    let fam = flat.label_family();
    let h = flat.hamiltonian();
    let times = vec![0.0, 1.5];
    let n = fam.len();
    let chains: Vec<HistoryChain> = (0..n * n)
        .map(|k| HistoryChain::new(times.clone(), vec![k / n, k % n], h.clone()).unwrap())
        .collect();
    let r = records_check(&flat.rho, &fam, &chains, Tolerances::default()).unwrap();
    assert!(r.record_residual < 1e-12, "{r:?}");
    assert!(r.orthogonality < 1e-12);
    assert!(r.trace_identity < 1e-12);
    assert!(r.medium_from_records < 1e-12);
    assert!(r.agrees_with_classify);
}

#[test]
fn extracted_weights_round_trip_to_matrix_level() {
    let (model, star) = final_state(71);
    let frame = pointer_basis(&star).unwrap();
    let w = extract_weights(&star, &frame).unwrap();
    let back = state_from_weights(&model, &frame, &w).unwrap();
    let flat = flatten_state(&back, &frame, &model).unwrap();
    let v = classify(
        &flat.rho,
        &flat.label_family(),
        &[0.0],
        &flat.hamiltonian(),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(v.level, ConsistencyLevel::Matrix);
    let energy = classify(
        &flat.rho,
        &flat.energy_family(),
        &[0.0, 1.0],
        &flat.hamiltonian(),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(energy.level, ConsistencyLevel::Matrix);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hierarchy_is_monotone(seed in 0u64..10_000, t in 0.0..3.0f64, tol in 1e-6..1e-1f64) {
        let rho = random_density(seed, 3);
        let h = random_hermitian(&mut rng(seed + 1), 3);
        let u = linalg::unitary_propagator(&random_hermitian(&mut rng(seed + 2), 3), 0.4);
        let fam = ProjectorFamily::from_basis(&u, &[vec![0], vec![1, 2]]).unwrap();
        let v = classify(&rho, &fam, &[0.0, t + 0.01], &h, Tolerances::uniform(tol)).unwrap();
        let m = v.max_violation;
        prop_assert!(m.weak <= m.medium + 1e-15 && m.medium <= m.matrix + 1e-12);
        if let Some(p) = v.probabilities {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
