//! Spectral model, five-block observables and states, and the pairing.
//!
//! Block layout (continuum node `i` at energy `w_i`, `M` discrete labels):
//!
//! * `bound`      `X(w0)`              M x M
//! * `diag[i]`    `X(w_i)`             M x M, carried with a single quadrature
//! * `cross_up[i]`   `X(w_i, w0)`      M x M
//! * `cross_down[i]` `X(w0, w_i)`      M x M
//! * `kernel`     `X(w_i, w_j)` as block `(i, j)` of one `(K M) x (K M)` matrix
//!
//! With this layout the Hermiticity of an operator is the Hermiticity of
//! `bound`, every `diag[i]` and `kernel`, plus `cross_down[i] = cross_up[i]^+`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::quadrature;

/// Default relative Hermiticity tolerance.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub omega0: f64,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub m_dims: Vec<usize>,
}

impl SpectralModel {
    pub fn new(omega0: f64, grid: Vec<f64>, weights: Vec<f64>, m_dims: Vec<usize>) -> Result<Self> {
        let model = Self {
            omega0,
            grid,
            weights,
            m_dims,
        };
        model.check()?;
        Ok(model)
    }

    /// Uniform grid on `[0, omega_max]` with `k` (odd) nodes and Simpson weights.
    pub fn uniform(omega0: f64, omega_max: f64, k: usize, m_dims: Vec<usize>) -> Result<Self> {
        if !(omega_max > 0.0) {
            return Err(Error::InvalidModel(format!(
                "omega_max must be positive, got {omega_max}"
            )));
        }
        let grid = quadrature::uniform_grid(0.0, omega_max, k);
        let weights = quadrature::simpson_weights(k, omega_max / (k.max(2) - 1) as f64)?;
        Self::new(omega0, grid, weights, m_dims)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.omega0 < 0.0) {
            return Err(Error::InvalidModel(format!(
                "omega0 must be negative, got {}",
                self.omega0
            )));
        }
        if self.grid.is_empty() || self.grid.len() != self.weights.len() {
            return Err(Error::InvalidModel(format!(
                "grid has {} nodes but {} weights",
                self.grid.len(),
                self.weights.len()
            )));
        }
        if self.grid[0] < 0.0 || self.grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("grid must be finite and start at >= 0".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("grid must be strictly increasing".into()));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidModel("quadrature weights must be positive".into()));
        }
        if self.m_dims.contains(&0) {
            return Err(Error::InvalidModel("m_dims entries must be positive".into()));
        }
        Ok(())
    }

    /// Total discrete dimension `M`.
    pub fn m(&self) -> usize {
        self.m_dims.iter().product()
    }

    /// Number of continuum nodes `K`.
    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn omega_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Grid spacing if the grid is uniform (to 1e-9 relative).
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.k() < 2 {
            return None;
        }
        let h = self.grid[1] - self.grid[0];
        let uniform = self
            .grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
        uniform.then_some(h)
    }

    /// Row-major flattening of a multi-index.
    pub fn flat_index(&self, r: &[usize]) -> Result<usize> {
        if r.len() != self.m_dims.len() {
            return Err(Error::Dimension(format!(
                "multi-index of length {} for {} axes",
                r.len(),
                self.m_dims.len()
            )));
        }
        let mut k = 0;
        for (&ri, &d) in r.iter().zip(&self.m_dims) {
            if ri >= d {
                return Err(Error::Dimension(format!("index {ri} out of range {d}")));
            }
            k = k * d + ri;
        }
        Ok(k)
    }

    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut r = vec![0; self.m_dims.len()];
        for (slot, &d) in r.iter_mut().zip(&self.m_dims).rev() {
            *slot = k % d;
            k /= d;
        }
        r
    }

    /// Quadrature of sampled values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    pub fn ensure_same(&self, other: &SpectralModel) -> Result<()> {
        if self.m_dims != other.m_dims {
            return Err(Error::ModelMismatch(format!(
                "m_dims {:?} vs {:?}",
                self.m_dims, other.m_dims
            )));
        }
        if self.omega0 != other.omega0 || self.grid != other.grid || self.weights != other.weights {
            return Err(Error::ModelMismatch("grids or bound energy differ".into()));
        }
        Ok(())
    }
}

/// The five blocks shared by observables and states.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    pub bound: CMat,
    pub diag: Vec<CMat>,
    pub cross_up: Vec<CMat>,
    pub cross_down: Vec<CMat>,
    pub kernel: CMat,
}

impl Blocks {
    pub fn zeros(model: &SpectralModel) -> Self {
        let (m, k) = (model.m(), model.k());
        Self {
            bound: CMat::zeros(m, m),
            diag: vec![CMat::zeros(m, m); k],
            cross_up: vec![CMat::zeros(m, m); k],
            cross_down: vec![CMat::zeros(m, m); k],
            kernel: CMat::zeros(k * m, k * m),
        }
    }

    pub fn check_shape(&self, model: &SpectralModel) -> Result<()> {
        let (m, k) = (model.m(), model.k());
        let sq = |a: &CMat, n: usize| a.nrows() == n && a.ncols() == n;
        let ok = sq(&self.bound, m)
            && self.diag.len() == k
            && self.cross_up.len() == k
            && self.cross_down.len() == k
            && self
                .diag
                .iter()
                .chain(&self.cross_up)
                .chain(&self.cross_down)
                .all(|a| sq(a, m))
            && sq(&self.kernel, k * m);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!("blocks do not match M = {m}, K = {k}")))
        }
    }

    pub fn m(&self) -> usize {
        self.bound.nrows()
    }

    /// Copy of kernel block `(i, j)`.
    pub fn kernel_block(&self, i: usize, j: usize) -> CMat {
        let m = self.m();
        self.kernel.view((i * m, j * m), (m, m)).into_owned()
    }

    pub fn set_kernel_block(&mut self, i: usize, j: usize, b: &CMat) {
        let m = self.m();
        self.kernel.view_mut((i * m, j * m), (m, m)).copy_from(b);
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|x| x * a)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self {
            bound: f(&self.bound),
            diag: self.diag.iter().map(&f).collect(),
            cross_up: self.cross_up.iter().map(&f).collect(),
            cross_down: self.cross_down.iter().map(&f).collect(),
            kernel: f(&self.kernel),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        let z = |a: &[CMat], b: &[CMat]| a.iter().zip(b).map(|(a, b)| f(a, b)).collect();
        Self {
            bound: f(&self.bound, &other.bound),
            diag: z(&self.diag, &other.diag),
            cross_up: z(&self.cross_up, &other.cross_up),
            cross_down: z(&self.cross_down, &other.cross_down),
            kernel: f(&self.kernel, &other.kernel),
        }
    }

    /// Operator adjoint.
    pub fn adjoint(&self) -> Self {
        Self {
            bound: self.bound.adjoint(),
            diag: self.diag.iter().map(|a| a.adjoint()).collect(),
            cross_up: self.cross_down.iter().map(|a| a.adjoint()).collect(),
            cross_down: self.cross_up.iter().map(|a| a.adjoint()).collect(),
            kernel: self.kernel.adjoint(),
        }
    }

    /// Operator composition `self * other`; the continuum index summed over
    /// is integrated with the model quadrature.
    pub fn product(&self, other: &Self, weights: &[f64]) -> Self {
        let m = self.m();
        let k = weights.len();
        let (a, b) = (self, other);

        let mut bound = &a.bound * &b.bound;
        for (z, w) in weights.iter().enumerate() {
            bound += (&a.cross_down[z] * &b.cross_up[z]) * Complex64::from(*w);
        }

        let diag = (0..k).map(|i| &a.diag[i] * &b.diag[i]).collect();

        // Kernel times a weighted stack of cross_up blocks.
        let stack = |blocks: &[CMat]| {
            let mut s = CMat::zeros(k * m, m);
            for (z, blk) in blocks.iter().enumerate() {
                s.view_mut((z * m, 0), (m, m))
                    .copy_from(&(blk * Complex64::from(weights[z])));
            }
            s
        };
        let ku = &a.kernel * stack(&b.cross_up);
        let cross_up = (0..k)
            .map(|i| &a.diag[i] * &b.cross_up[i] + &a.cross_up[i] * &b.bound + ku.view((i * m, 0), (m, m)))
            .collect();

        let mut dn_row = CMat::zeros(m, k * m);
        for (z, blk) in a.cross_down.iter().enumerate() {
            dn_row
                .view_mut((0, z * m), (m, m))
                .copy_from(&(blk * Complex64::from(weights[z])));
        }
        let dk = &dn_row * &b.kernel;
        let cross_down = (0..k)
            .map(|j| &a.bound * &b.cross_down[j] + &a.cross_down[j] * &b.diag[j] + dk.view((0, j * m), (m, m)))
            .collect();

        // A_k W B_k with W the weight on every internal node.
        let mut bw = b.kernel.clone();
        for (z, &wz) in weights.iter().enumerate().take(k) {
            let w = Complex64::from(wz);
            bw.rows_mut(z * m, m).iter_mut().for_each(|x| *x *= w);
        }
        let mut kernel = &a.kernel * bw;
        for i in 0..k {
            for j in 0..k {
                let extra = &a.diag[i] * b.kernel.view((i * m, j * m), (m, m))
                    + a.kernel.view((i * m, j * m), (m, m)) * &b.diag[j]
                    + &a.cross_up[i] * &b.cross_down[j];
                let mut v = kernel.view_mut((i * m, j * m), (m, m));
                v += extra;
            }
        }

        Self {
            bound,
            diag,
            cross_up,
            cross_down,
            kernel,
        }
    }

    pub fn commutator(&self, other: &Self, weights: &[f64]) -> Self {
        self.product(other, weights).sub(&other.product(self, weights))
    }

    /// Largest absolute entry over all blocks.
    pub fn max_abs(&self) -> f64 {
        let mut worst = linalg::max_abs(&self.bound).max(linalg::max_abs(&self.kernel));
        for a in self.diag.iter().chain(&self.cross_up).chain(&self.cross_down) {
            worst = worst.max(linalg::max_abs(a));
        }
        worst
    }

    /// Per-block Hermiticity violations (absolute).
    pub fn hermiticity(&self) -> HermiticityReport {
        let m = self.m();
        let k = self.diag.len();
        let bound = linalg::hermiticity_violation(&self.bound);
        let diag = self.diag.iter().map(linalg::hermiticity_violation).fold(0.0, f64::max);
        let cross = self
            .cross_up
            .iter()
            .zip(&self.cross_down)
            .map(|(u, d)| linalg::max_abs(&(d - u.adjoint())))
            .fold(0.0, f64::max);
        let mut kernel = 0.0f64;
        let mut kernel_location = None;
        for i in 0..k {
            for j in i..k {
                let a = self.kernel.view((i * m, j * m), (m, m));
                let b = self.kernel.view((j * m, i * m), (m, m));
                let v = linalg::max_abs(&(a - b.adjoint()));
                if v > kernel {
                    kernel = v;
                    kernel_location = Some((i, j));
                }
            }
        }
        HermiticityReport {
            bound,
            diag,
            cross,
            kernel,
            kernel_location,
        }
    }

    /// Reject operators whose Hermiticity violation exceeds `tol * max|entry|`.
    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let h = self.hermiticity();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let checks = [
            ("bound", h.bound, None),
            ("diag", h.diag, None),
            ("cross", h.cross, None),
            ("kernel", h.kernel, h.kernel_location),
        ];
        for (block, violation, location) in checks {
            if violation > tol * scale {
                return Err(Error::NotHermitian {
                    block,
                    violation,
                    location,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermiticityReport {
    pub bound: f64,
    pub diag: f64,
    pub cross: f64,
    pub kernel: f64,
    /// Node pair of the worst kernel violation.
    pub kernel_location: Option<(usize, usize)>,
}

impl HermiticityReport {
    pub fn max(&self) -> f64 {
        self.bound.max(self.diag).max(self.cross).max(self.kernel)
    }
}

macro_rules! five_block_type {
    ($name:ident) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            model: SpectralModel,
            pub blocks: Blocks,
        }

        impl $name {
            pub fn new(model: SpectralModel, blocks: Blocks) -> Result<Self> {
                model.check()?;
                blocks.check_shape(&model)?;
                Ok(Self { model, blocks })
            }

            pub fn zeros(model: &SpectralModel) -> Self {
                Self {
                    model: model.clone(),
                    blocks: Blocks::zeros(model),
                }
            }

            pub fn model(&self) -> &SpectralModel {
                &self.model
            }

            pub fn with_blocks(&self, blocks: Blocks) -> Self {
                debug_assert!(blocks.check_shape(&self.model).is_ok());
                Self {
                    model: self.model.clone(),
                    blocks,
                }
            }
        }

        impl FiveBlock for $name {
            fn model(&self) -> &SpectralModel {
                &self.model
            }

            fn blocks(&self) -> &Blocks {
                &self.blocks
            }

            fn with_blocks(&self, blocks: Blocks) -> Self {
                $name::with_blocks(self, blocks)
            }
        }
    };
}

/// Common access to states and observables.
pub trait FiveBlock: Sized {
    fn model(&self) -> &SpectralModel;
    fn blocks(&self) -> &Blocks;
    fn with_blocks(&self, blocks: Blocks) -> Self;
}

five_block_type!(GeneralizedObservable);
five_block_type!(StateFunctional);

impl GeneralizedObservable {
    /// Operator composition `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.model.ensure_same(&other.model)?;
        Ok(self.with_blocks(self.blocks.product(&other.blocks, &self.model.weights)))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.model.ensure_same(&other.model)?;
        Ok(self.with_blocks(self.blocks.commutator(&other.blocks, &self.model.weights)))
    }
}

/// Identity operator: unit bound block and unit singular diagonal.
pub fn identity_observable(model: &SpectralModel) -> GeneralizedObservable {
    let m = model.m();
    let mut o = GeneralizedObservable::zeros(model);
    o.blocks.bound = linalg::identity(m);
    for d in &mut o.blocks.diag {
        *d = linalg::identity(m);
    }
    o
}

/// Free Hamiltonian: `w0` on the bound block and `w` on the singular diagonal.
pub fn hamiltonian_observable(model: &SpectralModel) -> GeneralizedObservable {
    let m = model.m();
    let mut o = GeneralizedObservable::zeros(model);
    o.blocks.bound = linalg::identity(m) * Complex64::from(model.omega0);
    for (d, w) in o.blocks.diag.iter_mut().zip(&model.grid) {
        *d = linalg::identity(m) * Complex64::from(*w);
    }
    o
}

fn real_trace(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `sum_m rho(w0)_mm + int dw sum_m rho(w)_mm`.
pub fn total_probability(state: &StateFunctional) -> f64 {
    let b = &state.blocks;
    let mut cont = 0.0;
    for (d, w) in b.diag.iter().zip(&state.model.weights) {
        cont += real_trace(d) * w;
    }
    real_trace(&b.bound) + cont
}

/// Pairing with the imaginary residual kept.
pub fn pair_complex(state: &StateFunctional, obs: &GeneralizedObservable) -> Result<Complex64> {
    state.model.ensure_same(&obs.model)?;
    let (r, o) = (&state.blocks, &obs.blocks);
    let w = &state.model.weights;
    // Summation order mirrors total_probability so that pairing with the
    // identity reproduces it bit for bit.
    let mut diag = Complex64::new(0.0, 0.0);
    let mut cross = Complex64::new(0.0, 0.0);
    for (i, &wi) in w.iter().enumerate() {
        diag += linalg::trace_product(&r.diag[i], &o.diag[i]) * wi;
        cross += (linalg::trace_product(&r.cross_down[i], &o.cross_up[i])
            + linalg::trace_product(&r.cross_up[i], &o.cross_down[i]))
            * wi;
    }
    let t = kernel_contraction(r, o);
    let mut kernel = Complex64::new(0.0, 0.0);
    for i in 0..w.len() {
        for j in 0..w.len() {
            kernel += t[(i, j)] * (w[i] * w[j]);
        }
    }
    let acc = linalg::trace_product(&r.bound, &o.bound) + diag + cross + kernel;
    Ok(acc)
}

/// `T_ij = Tr(rho(w_j, w_i) O(w_i, w_j))` for every node pair.
pub fn kernel_contraction(r: &Blocks, o: &Blocks) -> CMat {
    let m = r.m();
    let k = r.diag.len();
    let mut t = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = ZERO;
            for a in 0..m {
                for b in 0..m {
                    acc += r.kernel[(j * m + b, i * m + a)] * o.kernel[(i * m + a, j * m + b)];
                }
            }
            t[(i, j)] = acc;
        }
    }
    t
}

/// Mean value `(rho|O)`.
///
/// Both arguments must be Hermitian to the default relative tolerance; the
/// imaginary part of the result is then round-off and is dropped.
pub fn pair(state: &StateFunctional, obs: &GeneralizedObservable) -> Result<f64> {
    state.blocks.ensure_hermitian(HERMITICITY_TOL)?;
    obs.blocks.ensure_hermitian(HERMITICITY_TOL)?;
    Ok(pair_complex(state, obs)?.re)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermiticity: HermiticityReport,
    /// Smallest real part on the diagonals of the bound and singular blocks.
    pub min_diagonal: f64,
    pub negative_diagonal: bool,
    pub normalization_deviation: f64,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        !self.negative_diagonal && self.hermiticity.max() <= self.tolerance && self.normalization_deviation <= 1e-8
    }
}

/// Pure diagnostic report on a state.
pub fn validate(state: &StateFunctional) -> ValidationReport {
    let b = &state.blocks;
    let hermiticity = b.hermiticity();
    let min_diagonal = std::iter::once(&b.bound)
        .chain(&b.diag)
        .flat_map(|a| a.diagonal().iter().map(|z| z.re).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    let tolerance = HERMITICITY_TOL * b.max_abs().max(1.0);
    ValidationReport {
        hermiticity,
        min_diagonal,
        negative_diagonal: min_diagonal < -1e-12,
        normalization_deviation: (total_probability(state) - 1.0).abs(),
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn uniform_model_basics() {
        let m = SpectralModel::uniform(-1.0, 2.0, 5, vec![2, 3]).unwrap();
        assert_eq!(m.m(), 6);
        assert_eq!(m.k(), 5);
        assert_eq!(m.uniform_spacing(), Some(0.5));
        assert!((m.integrate(&[1.0; 5]) - 2.0).abs() < 1e-15);
        assert_eq!(m.flat_index(&[1, 2]).unwrap(), 5);
        assert_eq!(m.multi_index(4), vec![1, 1]);
    }

    #[test]
    fn model_rejects_bad_input() {
        assert!(SpectralModel::uniform(0.5, 2.0, 5, vec![1]).is_err());
        assert!(SpectralModel::uniform(-1.0, 2.0, 4, vec![1]).is_err());
        assert!(SpectralModel::new(-1.0, vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).is_err());
        assert!(SpectralModel::uniform(-1.0, 2.0, 5, vec![0]).is_err());
    }

    #[test]
    fn bound_only_contraction() {
        let model = SpectralModel::uniform(-1.0, 1.0, 3, vec![1]).unwrap();
        let mut rho = StateFunctional::zeros(&model);
        rho.blocks.bound[(0, 0)] = c(1.0, 0.0);
        let mut o = GeneralizedObservable::zeros(&model);
        o.blocks.bound[(0, 0)] = c(2.5, 0.0);
        assert_eq!(pair(&rho, &o).unwrap(), 2.5);
    }

    #[test]
    fn identity_pairs_to_total_probability() {
        let model = SpectralModel::uniform(-1.0, 2.0, 5, vec![1]).unwrap();
        let mut rho = StateFunctional::zeros(&model);
        rho.blocks.bound[(0, 0)] = c(0.3, 0.0);
        for d in &mut rho.blocks.diag {
            d[(0, 0)] = c(0.35, 0.0);
        }
        assert!((total_probability(&rho) - 1.0).abs() < 1e-14);
        let id = identity_observable(&model);
        assert_eq!(pair(&rho, &id).unwrap(), total_probability(&rho));
    }

    #[test]
    fn identity_is_idempotent() {
        let model = SpectralModel::uniform(-1.0, 2.0, 5, vec![2]).unwrap();
        let id = identity_observable(&model);
        assert_eq!(id.compose(&id).unwrap(), id);
    }

    #[test]
    fn validate_flags_negative_and_non_hermitian() {
        let model = SpectralModel::uniform(-1.0, 1.0, 3, vec![1]).unwrap();
        let mut rho = StateFunctional::zeros(&model);
        rho.blocks.bound[(0, 0)] = c(-0.1, 0.0);
        assert!(validate(&rho).negative_diagonal);

        let mut rho = StateFunctional::zeros(&model);
        rho.blocks.kernel[(2, 1)] = c(0.5, 0.0);
        let r = validate(&rho);
        assert_eq!(r.hermiticity.kernel_location, Some((1, 2)));
        assert!(r.hermiticity.kernel > 0.4);
        assert!(matches!(
            pair(&rho, &identity_observable(&model)),
            Err(Error::NotHermitian { block: "kernel", .. })
        ));
    }

    #[test]
    fn mismatch_is_rejected() {
        let a = SpectralModel::uniform(-1.0, 1.0, 3, vec![1]).unwrap();
        let b = SpectralModel::uniform(-1.0, 1.0, 5, vec![1]).unwrap();
        let rho = StateFunctional::zeros(&a);
        assert!(matches!(
            pair(&rho, &identity_observable(&b)),
            Err(Error::ModelMismatch(_))
        ));
    }
}
