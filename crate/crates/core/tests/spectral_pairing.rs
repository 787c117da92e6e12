use decolab_core::instances::{random_observable, random_state, rng};
use decolab_core::spectral::{
    identity_observable, pair, pair_complex, total_probability, validate, Blocks, GeneralizedObservable, SpectralModel,
    StateFunctional,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Term-by-term expansion `sum conj(rho) O` over every block and node pair.
fn brute_force_pair(rho: &StateFunctional, o: &GeneralizedObservable) -> Complex64 {
    let model = rho.model();
    let (m, k) = (model.m(), model.k());
    let w = &model.weights;
    let (r, ob) = (&rho.blocks, &o.blocks);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..m {
        for b in 0..m {
            acc += r.bound[(a, b)].conj() * ob.bound[(a, b)];
            for i in 0..k {
                acc += w[i] * r.diag[i][(a, b)].conj() * ob.diag[i][(a, b)];
                acc += w[i] * r.cross_up[i][(a, b)].conj() * ob.cross_up[i][(a, b)];
                acc += w[i] * r.cross_down[i][(a, b)].conj() * ob.cross_down[i][(a, b)];
                for j in 0..k {
                    acc += w[i] * w[j] * r.kernel[(i * m + a, j * m + b)].conj() * ob.kernel[(i * m + a, j * m + b)];
                }
            }
        }
    }
    acc
}

fn norm(b: &Blocks) -> f64 {
    b.max_abs()
}

#[test]
fn pairing_matches_brute_force_oracle() {
    let model = SpectralModel::uniform(-0.7, 2.0, 3, vec![2]).unwrap();
    for seed in 0..20 {
        let mut g = rng(seed);
        let rho = random_state(&mut g, &model);
        let o = random_observable(&mut g, &model);
        let fast = pair_complex(&rho, &o).unwrap();
        let slow = brute_force_pair(&rho, &o);
        assert!((fast - slow).norm() < 1e-12 * (1.0 + slow.norm()), "{fast} vs {slow}");
    }
}

#[test]
fn constant_continuum_normalizes() {
    let model = SpectralModel::uniform(-1.0, 4.0, 9, vec![1]).unwrap();
    let mut rho = StateFunctional::zeros(&model);
    rho.blocks.bound[(0, 0)] = Complex64::from(0.3);
    for d in &mut rho.blocks.diag {
        d[(0, 0)] = Complex64::from(0.7 / 4.0);
    }
    assert!((total_probability(&rho) - 1.0).abs() < 1e-12);
    assert_eq!(total_probability(&StateFunctional::zeros(&model)), 0.0);
}

#[test]
fn single_node_identity() {
    let model = SpectralModel::new(-1.0, vec![0.5], vec![1.0], vec![1]).unwrap();
    let id = identity_observable(&model);
    assert_eq!(id.blocks.bound[(0, 0)], Complex64::from(1.0));
    assert_eq!(id.blocks.diag[0][(0, 0)], Complex64::from(1.0));
    assert_eq!(id.blocks.kernel[(0, 0)], Complex64::from(0.0));
}

#[test]
fn perturbed_kernel_entry_is_located() {
    let model = SpectralModel::uniform(-1.0, 2.0, 5, vec![2]).unwrap();
    let mut rho = random_state(&mut rng(3), &model);
    assert!(validate(&rho).is_valid());
    rho.blocks.kernel[(2 * 2 + 1, 3 * 2)] += Complex64::new(0.0, 1e-3);
    let rep = validate(&rho);
    assert!(!rep.is_valid());
    assert_eq!(rep.hermiticity.kernel_location, Some((2, 3)));
}

/// Refining the grid changes the pairing of smooth blocks at Simpson order.
#[test]
fn pairing_converges_at_fourth_order() {
    let eval = |k: usize| {
        let model = SpectralModel::uniform(-1.0, 3.0, k, vec![1]).unwrap();
        let mut rho = StateFunctional::zeros(&model);
        let mut o = GeneralizedObservable::zeros(&model);
        for (i, &w) in model.grid.iter().enumerate() {
            rho.blocks.diag[i][(0, 0)] = Complex64::from((-w).exp());
            o.blocks.diag[i][(0, 0)] = Complex64::from((2.0 * w).cos());
            let u = Complex64::new(w.sin(), 0.3 * w);
            rho.blocks.cross_up[i][(0, 0)] = u;
            rho.blocks.cross_down[i][(0, 0)] = u.conj();
            o.blocks.cross_up[i][(0, 0)] = Complex64::from(w * w);
            o.blocks.cross_down[i][(0, 0)] = Complex64::from(w * w);
            for (j, &v) in model.grid.iter().enumerate() {
                rho.blocks.kernel[(i, j)] = Complex64::from((-(w - v).powi(2)).exp());
                o.blocks.kernel[(i, j)] = Complex64::from((w * v).cos());
            }
        }
        pair(&rho, &o).unwrap()
    };
    let reference = eval(641);
    let errs: Vec<f64> = [11usize, 21, 41].iter().map(|&k| (eval(k) - reference).abs()).collect();
    let h = [0.3, 0.15, 0.075];
    let order = decolab_core::fit::scaling_order(&h, &errs).unwrap();
    assert!((order - 4.0).abs() < 0.5, "order {order}, errors {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pairing_is_real_and_bilinear(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let model = SpectralModel::uniform(-0.5, 2.0, 5, vec![2]).unwrap();
        let mut g = rng(seed);
        let r1 = random_state(&mut g, &model);
        let r2 = random_state(&mut g, &model);
        let o = random_observable(&mut g, &model);
        let z = pair_complex(&r1, &o).unwrap();
        prop_assert!(z.im.abs() < 1e-10 * norm(&r1.blocks) * norm(&o.blocks));
        let mix = r1.with_blocks(r1.blocks.scale(a.into()).add(&r2.blocks.scale(b.into())));
        let lhs = pair_complex(&mix, &o).unwrap().re;
        let rhs = a * pair(&r1, &o).unwrap() + b * pair(&r2, &o).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn identity_gives_total_probability(seed in 0u64..10_000) {
        let model = SpectralModel::uniform(-0.5, 1.5, 7, vec![1, 2]).unwrap();
        let rho = random_state(&mut rng(seed), &model);
        prop_assert_eq!(pair(&rho, &identity_observable(&model)).unwrap(), total_probability(&rho));
    }
}
