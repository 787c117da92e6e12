//! Final pointer basis: per-energy eigenbases of the diagonal blocks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::spectral::{
    pair_complex, Blocks, FiveBlock, GeneralizedObservable, SpectralModel, StateFunctional, HERMITICITY_TOL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointerFrame {
    pub u_bound: CMat,
    pub u_cont: Vec<CMat>,
    /// Eigenvalues of the bound block, descending.
    pub spectrum_bound: Vec<f64>,
    /// Eigenvalues per continuum node, descending.
    pub spectra: Vec<Vec<f64>>,
    /// Nodes `i` where the rank labelling between `i` and `i + 1` swaps
    /// eigenvectors (eigenvalue curves cross).
    pub crossings: Vec<usize>,
}

impl PointerFrame {
    pub fn identity(model: &SpectralModel) -> Self {
        let m = model.m();
        Self {
            u_bound: linalg::identity(m),
            u_cont: vec![linalg::identity(m); model.k()],
            spectrum_bound: vec![0.0; m],
            spectra: vec![vec![0.0; m]; model.k()],
            crossings: Vec::new(),
        }
    }

    /// Largest `|U^+ U - I|` over every node.
    pub fn unitarity_violation(&self) -> f64 {
        self.u_cont
            .iter()
            .map(linalg::unitarity_violation)
            .fold(linalg::unitarity_violation(&self.u_bound), f64::max)
    }

    fn check(&self, model: &SpectralModel) -> Result<()> {
        let m = model.m();
        if self.u_bound.shape() != (m, m)
            || self.u_cont.len() != model.k()
            || self.u_cont.iter().any(|u| u.shape() != (m, m))
        {
            return Err(Error::ModelMismatch("pointer frame does not fit the model".into()));
        }
        Ok(())
    }
}

/// Hermitian eigendecomposition of the bound block and of every singular
/// diagonal block.
pub fn pointer_basis(state: &StateFunctional) -> Result<PointerFrame> {
    let b = &state.blocks;
    for (idx, a) in std::iter::once(&b.bound).chain(&b.diag).enumerate() {
        let v = linalg::hermiticity_violation(a);
        if v > HERMITICITY_TOL * linalg::max_abs(a).max(1.0) {
            return Err(Error::NotHermitian {
                block: if idx == 0 { "bound" } else { "diag" },
                violation: v,
                location: (idx > 0).then(|| (idx - 1, idx - 1)),
            });
        }
    }
    let (spectrum_bound, u_bound) = linalg::hermitian_eigen(&b.bound);
    let (spectra, u_cont): (Vec<_>, Vec<_>) = b.diag.iter().map(linalg::hermitian_eigen).unzip();
    let mut crossings = Vec::new();
    for i in 0..u_cont.len().saturating_sub(1) {
        let overlap = u_cont[i].adjoint() * &u_cont[i + 1];
        if (0..overlap.nrows()).any(|r| overlap[(r, r)].norm() < std::f64::consts::FRAC_1_SQRT_2) {
            crossings.push(i);
        }
    }
    Ok(PointerFrame {
        u_bound,
        u_cont,
        spectrum_bound,
        spectra,
        crossings,
    })
}

fn conjugate(b: &Blocks, frame: &PointerFrame, inverse: bool) -> Blocks {
    let m = b.m();
    let k = b.diag.len();
    // forward: U^+ X V, inverse: U X V^+
    let sandwich = |u: &CMat, x: &CMat, v: &CMat| -> CMat {
        if inverse {
            u * x * v.adjoint()
        } else {
            u.adjoint() * x * v
        }
    };
    let ub = &frame.u_bound;
    let uc = &frame.u_cont;
    let mut kernel = CMat::zeros(k * m, k * m);
    for i in 0..k {
        for j in 0..k {
            let x = b.kernel.view((i * m, j * m), (m, m)).into_owned();
            kernel
                .view_mut((i * m, j * m), (m, m))
                .copy_from(&sandwich(&uc[i], &x, &uc[j]));
        }
    }
    Blocks {
        bound: sandwich(ub, &b.bound, ub),
        diag: (0..k).map(|i| sandwich(&uc[i], &b.diag[i], &uc[i])).collect(),
        cross_up: (0..k).map(|i| sandwich(&uc[i], &b.cross_up[i], ub)).collect(),
        cross_down: (0..k).map(|i| sandwich(ub, &b.cross_down[i], &uc[i])).collect(),
        kernel,
    }
}

/// Components in the pointer frame.
pub fn to_pointer_frame<T: FiveBlock>(x: &T, frame: &PointerFrame) -> Result<T> {
    frame.check(x.model())?;
    Ok(x.with_blocks(conjugate(x.blocks(), frame, false)))
}

/// Inverse of [`to_pointer_frame`].
pub fn from_pointer_frame<T: FiveBlock>(x: &T, frame: &PointerFrame) -> Result<T> {
    frame.check(x.model())?;
    Ok(x.with_blocks(conjugate(x.blocks(), frame, true)))
}

/// Pointer observable `P_i^n` for a discrete axis (0-based).
///
/// In the pointer frame its bound and singular blocks are diagonal with
/// entries `r_i^n`, where `r` is the multi-index of the eigenvalue rank.
pub fn pointer_observable_power(
    axis: usize,
    power: i32,
    frame: &PointerFrame,
    model: &SpectralModel,
) -> Result<GeneralizedObservable> {
    if axis >= model.m_dims.len() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for {} axes",
            model.m_dims.len()
        )));
    }
    frame.check(model)?;
    let m = model.m();
    let labels = CMat::from_fn(m, m, |a, b| {
        if a == b {
            Complex64::from((model.multi_index(a)[axis] as f64).powi(power))
        } else {
            linalg::ZERO
        }
    });
    let mut o = GeneralizedObservable::zeros(model);
    o.blocks.bound = labels.clone();
    for d in &mut o.blocks.diag {
        *d = labels.clone();
    }
    from_pointer_frame(&o, frame)
}

pub fn pointer_observable(axis: usize, frame: &PointerFrame, model: &SpectralModel) -> Result<GeneralizedObservable> {
    pointer_observable_power(axis, 1, frame, model)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementReport {
    /// `max |(rho_*|[P_i, O])|`.
    pub max_abs: f64,
    /// Same, divided by the largest entry of the probe.
    pub max_relative: f64,
}

/// Pairing of the final state with commutators of every pointer observable
/// against every probe.
pub fn displacement_annihilation_check(
    rho_star: &StateFunctional,
    frame: &PointerFrame,
    probes: &[GeneralizedObservable],
) -> Result<DisplacementReport> {
    let model = rho_star.model();
    let mut report = DisplacementReport {
        max_abs: 0.0,
        max_relative: 0.0,
    };
    for axis in 0..model.m_dims.len() {
        let p = pointer_observable(axis, frame, model)?;
        for o in probes {
            let c = p.commutator(o)?;
            let v = pair_complex(rho_star, &c)?.norm();
            report.max_abs = report.max_abs.max(v);
            report.max_relative = report.max_relative.max(v / o.blocks.max_abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(report)
}

/// Classical weights `rho_r(w0)` and `rho_r(w)` of a final state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointerWeights {
    pub bound: Vec<f64>,
    /// Indexed `[node][rank]`.
    pub cont: Vec<Vec<f64>>,
}

impl PointerWeights {
    /// Bound weights plus the quadrature of the continuum weights.
    pub fn total(&self, model: &SpectralModel) -> f64 {
        let sums: Vec<f64> = self.cont.iter().map(|v| v.iter().sum()).collect();
        self.bound.iter().sum::<f64>() + model.integrate(&sums)
    }
}

pub fn extract_weights(rho_star: &StateFunctional, frame: &PointerFrame) -> Result<PointerWeights> {
    let d = to_pointer_frame(rho_star, frame)?;
    let diag = |a: &CMat| -> Vec<f64> { a.diagonal().iter().map(|z| z.re).collect() };
    let bound = diag(&d.blocks.bound);
    let cont: Vec<Vec<f64>> = d.blocks.diag.iter().map(diag).collect();
    for (r, w) in bound.iter().enumerate() {
        if *w < -1e-10 {
            return Err(Error::NegativeWeight {
                value: *w,
                location: format!("bound, rank {r}"),
            });
        }
    }
    for (i, ws) in cont.iter().enumerate() {
        for (r, w) in ws.iter().enumerate() {
            if *w < -1e-10 {
                return Err(Error::NegativeWeight {
                    value: *w,
                    location: format!("node {i}, rank {r}"),
                });
            }
        }
    }
    Ok(PointerWeights {
        bound: bound.into_iter().map(|w| w.max(0.0)).collect(),
        cont: cont
            .into_iter()
            .map(|v| v.into_iter().map(|w| w.max(0.0)).collect())
            .collect(),
    })
}

/// Final state with the given weights on the frame's pointer states.
pub fn state_from_weights(
    model: &SpectralModel,
    frame: &PointerFrame,
    weights: &PointerWeights,
) -> Result<StateFunctional> {
    let m = model.m();
    if weights.bound.len() != m || weights.cont.len() != model.k() || weights.cont.iter().any(|v| v.len() != m) {
        return Err(Error::Dimension("weights do not fit the model".into()));
    }
    let diag = |w: &[f64]| CMat::from_fn(m, m, |a, b| if a == b { Complex64::from(w[a]) } else { linalg::ZERO });
    let mut s = StateFunctional::zeros(model);
    s.blocks.bound = diag(&weights.bound);
    for (d, w) in s.blocks.diag.iter_mut().zip(&weights.cont) {
        *d = diag(w);
    }
    from_pointer_frame(&s, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn hadamard_rotation_for_symmetric_block() {
        let model = SpectralModel::uniform(-1.0, 1.0, 3, vec![2]).unwrap();
        let mut rho = StateFunctional::zeros(&model);
        let blk = CMat::from_row_slice(2, 2, &[c(0.5), c(0.25), c(0.25), c(0.5)]);
        rho.blocks.bound = blk.clone();
        for d in &mut rho.blocks.diag {
            *d = blk.clone();
        }
        let f = pointer_basis(&rho).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (u, spec) in std::iter::once((&f.u_bound, &f.spectrum_bound)).chain(f.u_cont.iter().zip(&f.spectra)) {
            assert!((spec[0] - 0.75).abs() < 1e-14 && (spec[1] - 0.25).abs() < 1e-14);
            let expect = CMat::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]);
            assert!(linalg::max_abs(&(u - expect)) < 1e-14);
        }
        assert!(f.crossings.is_empty());
    }

    #[test]
    fn identity_frame_leaves_blocks_alone() {
        let model = SpectralModel::uniform(-1.0, 1.0, 3, vec![2]).unwrap();
        let o = crate::spectral::hamiltonian_observable(&model);
        let f = PointerFrame::identity(&model);
        assert_eq!(to_pointer_frame(&o, &f).unwrap(), o);
    }

    #[test]
    fn pointer_observable_labels() {
        let model = SpectralModel::uniform(-1.0, 1.0, 3, vec![2]).unwrap();
        let f = PointerFrame::identity(&model);
        let p = pointer_observable(0, &f, &model).unwrap();
        assert_eq!(p.blocks.diag[1][(0, 0)], c(0.0));
        assert_eq!(p.blocks.diag[1][(1, 1)], c(1.0));
        assert!(pointer_observable(1, &f, &model).is_err());
    }
}
