//! Seeded random test instances: smooth Hermitian observables and positive
//! normalized states over a spectral model.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{CMat, CVec};
use crate::spectral::{Blocks, GeneralizedObservable, SpectralModel, StateFunctional};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // Box-Muller
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    let r = (-2.0 * u.ln()).sqrt();
    Complex64::from_polar(r / std::f64::consts::SQRT_2, 2.0 * std::f64::consts::PI * v)
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    CMat::from_fn(m, m, |_, _| normal_pair(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let a = random_matrix(rng, m);
    (&a + a.adjoint()) * Complex64::from(0.5)
}

/// Vector-valued analytic function on the grid, `sum_n a_n phi_n(w / w_max)`.
fn smooth_vectors<R: Rng + ?Sized>(rng: &mut R, model: &SpectralModel, m: usize) -> Vec<CVec> {
    let wmax = model.omega_max().max(f64::MIN_POSITIVE);
    let coef: Vec<CVec> = (0..4).map(|_| CVec::from_fn(m, |_, _| normal_pair(rng))).collect();
    model
        .grid
        .iter()
        .map(|w| {
            let x = w / wmax;
            let phi = [
                1.0,
                (std::f64::consts::PI * x).cos(),
                (std::f64::consts::PI * x).sin(),
                (-2.0 * x * x).exp(),
            ];
            let mut v = CVec::zeros(m);
            for (a, p) in coef.iter().zip(phi) {
                v += a * Complex64::from(p);
            }
            v
        })
        .collect()
}

fn smooth_matrices<R: Rng + ?Sized>(rng: &mut R, model: &SpectralModel, m: usize) -> Vec<CMat> {
    let cols: Vec<Vec<CVec>> = (0..m).map(|_| smooth_vectors(rng, model, m)).collect();
    (0..model.k())
        .map(|i| CMat::from_fn(m, m, |r, c| cols[c][i][r]))
        .collect()
}

/// Hermitian observable with all five blocks populated by smooth functions.
pub fn random_observable<R: Rng + ?Sized>(rng: &mut R, model: &SpectralModel) -> GeneralizedObservable {
    let (m, k) = (model.m(), model.k());
    let mut b = Blocks::zeros(model);
    b.bound = random_hermitian(rng, m);
    let a = smooth_matrices(rng, model, m);
    b.diag = a.iter().map(|x| (x + x.adjoint()) * Complex64::from(0.5)).collect();
    b.cross_up = smooth_matrices(rng, model, m);
    b.cross_down = b.cross_up.iter().map(|x| x.adjoint()).collect();
    for _ in 0..2 {
        let s: f64 = rng.random_range(-1.0..1.0);
        let v = smooth_vectors(rng, model, m);
        for i in 0..k {
            for j in 0..k {
                let outer = &v[i] * v[j].adjoint() * Complex64::from(s);
                let mut blk = b.kernel.view_mut((i * m, j * m), (m, m));
                blk += outer;
            }
        }
    }
    GeneralizedObservable::new(model.clone(), b).expect("shapes follow the model")
}

/// Positive, normalized state: mixed bound and singular parts plus a
/// coherent wave-packet contribution to the cross and kernel blocks.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, model: &SpectralModel) -> StateFunctional {
    let (m, k) = (model.m(), model.k());
    let mut b = Blocks::zeros(model);
    let a = random_matrix(rng, m);
    b.bound = &a * a.adjoint();
    let cols = smooth_matrices(rng, model, m);
    b.diag = cols.iter().map(|x| x * x.adjoint()).collect();
    let norm: f64 = {
        let tr = |x: &CMat| x.diagonal().iter().map(|z| z.re).sum::<f64>();
        let cont: Vec<f64> = b.diag.iter().map(tr).collect();
        tr(&b.bound) + model.integrate(&cont)
    };
    let inv = Complex64::from(1.0 / norm);
    b.bound *= inv;
    for d in &mut b.diag {
        *d *= inv;
    }

    let eps: f64 = rng.random_range(0.05..0.3) / norm;
    let psi_b = CVec::from_fn(m, |_, _| normal_pair(rng));
    let psi = smooth_vectors(rng, model, m);
    for i in 0..k {
        b.cross_up[i] = &psi[i] * psi_b.adjoint() * Complex64::from(eps);
        b.cross_down[i] = b.cross_up[i].adjoint();
        for j in 0..k {
            let blk = &psi[i] * psi[j].adjoint() * Complex64::from(eps);
            b.set_kernel_block(i, j, &blk);
        }
    }
    StateFunctional::new(model.clone(), b).expect("shapes follow the model")
}

/// Final state built from nonnegative weights in a given pointer frame.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, model: &SpectralModel) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = model.m();
    let mut bound: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let base: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let wmax = model.omega_max().max(f64::MIN_POSITIVE);
    let mut cont: Vec<Vec<f64>> = model
        .grid
        .iter()
        .map(|w| {
            base.iter()
                .enumerate()
                .map(|(r, b)| b * (1.0 + 0.5 * (std::f64::consts::PI * (r as f64 + 1.0) * w / wmax).cos()))
                .collect()
        })
        .collect();
    let sums: Vec<f64> = cont.iter().map(|v| v.iter().sum()).collect();
    let total = bound.iter().sum::<f64>() + model.integrate(&sums);
    bound.iter_mut().for_each(|x| *x /= total);
    cont.iter_mut().flatten().for_each(|x| *x /= total);
    (bound, cont)
}

/// Single-channel state with a Lorentzian coherent kernel
/// `amp^2 g(w) g(w')`, `g(w) = gamma / ((w - center)^2 + gamma^2)`, on top
/// of a bound population and a flat singular diagonal.
pub fn lorentzian_coherence_state(
    model: &SpectralModel,
    center: f64,
    gamma: f64,
    amp: f64,
    bound_weight: f64,
) -> StateFunctional {
    assert_eq!(model.m(), 1, "single-channel builder");
    let mut b = Blocks::zeros(model);
    b.bound[(0, 0)] = Complex64::from(bound_weight);
    let flat = (1.0 - bound_weight) / model.integrate(&vec![1.0; model.k()]);
    let g: Vec<f64> = model
        .grid
        .iter()
        .map(|w| amp * gamma / ((w - center).powi(2) + gamma * gamma))
        .collect();
    for (i, gi) in g.iter().enumerate() {
        b.diag[i][(0, 0)] = Complex64::from(flat);
        for (j, gj) in g.iter().enumerate() {
            b.kernel[(i, j)] = Complex64::from(gi * gj);
        }
    }
    StateFunctional::new(model.clone(), b).expect("shapes follow the model")
}

/// Single-channel observable: identity on the diagonal blocks and the
/// separable kernel `h(w) h(w')` with `h = sin^4(pi w / w_max)`, which
/// vanishes to fourth order at both ends of the grid.
pub fn window_observable(model: &SpectralModel) -> GeneralizedObservable {
    assert_eq!(model.m(), 1, "single-channel builder");
    let mut b = Blocks::zeros(model);
    b.bound[(0, 0)] = Complex64::from(1.0);
    let wmax = model.omega_max();
    let h: Vec<f64> = model
        .grid
        .iter()
        .map(|w| (std::f64::consts::PI * w / wmax).sin().powi(4))
        .collect();
    for (i, hi) in h.iter().enumerate() {
        b.diag[i][(0, 0)] = Complex64::from(1.0);
        for (j, hj) in h.iter().enumerate() {
            b.kernel[(i, j)] = Complex64::from(hi * hj);
        }
    }
    GeneralizedObservable::new(model.clone(), b).expect("shapes follow the model")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{total_probability, validate, HERMITICITY_TOL};

    #[test]
    fn random_state_is_valid() {
        let model = SpectralModel::uniform(-1.0, 3.0, 7, vec![2, 2]).unwrap();
        let rho = random_state(&mut rng(1), &model);
        let rep = validate(&rho);
        assert!(rep.is_valid(), "{rep:?}");
        assert!((total_probability(&rho) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn random_observable_is_hermitian() {
        let model = SpectralModel::uniform(-1.0, 3.0, 5, vec![3]).unwrap();
        let o = random_observable(&mut rng(2), &model);
        o.blocks.ensure_hermitian(HERMITICITY_TOL).unwrap();
    }

    #[test]
    fn seeding_is_deterministic() {
        let model = SpectralModel::uniform(-1.0, 3.0, 5, vec![2]).unwrap();
        assert_eq!(random_state(&mut rng(9), &model), random_state(&mut rng(9), &model));
    }
}
