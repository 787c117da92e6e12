//! Wigner and Weyl transforms on uniform phase-space grids, correspondence
//! residuals, and the classical decomposition of final states.
//!
//! Conventions: `W(q, p) = (1 / pi hbar) int dl K(q - l, q + l) e^{2 i p l / hbar}`
//! for a state kernel and `O^W = 2 pi hbar` times the same integral for an
//! observable, so that `int W O^W dq dp = Tr(rho O)`.

mod classical;
mod correspondence;
mod kernel;

pub use classical::{
    classical_deviation, decompose_and_reconstruct, momentum_density, sample_momentum_density, trajectory_density,
    ClassicalDeviation, HarmonicChart, ReconstructionReport, TrajectoryDensity, Widths,
};
pub use correspondence::{
    liouville_residual, phase_space_mean, product_residual, LiouvilleOptions, LiouvilleResidual, ProductResidual,
    SeparableHamiltonian,
};
pub use kernel::{derivative_matrix, harmonic_eigenfunction, periodic_grid, PositionKernel};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Edge-to-peak ratio above which a state kernel is not contained in its grid.
pub const EDGE_DECAY_TOL: f64 = 1e-8;

/// Uniform rectangular phase-space grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseGrid {
    pub fn uniform(q_range: (f64, f64), nq: usize, p_range: (f64, f64), np: usize) -> Self {
        Self {
            q: crate::quadrature::uniform_grid(q_range.0, q_range.1, nq),
            p: crate::quadrature::uniform_grid(p_range.0, p_range.1, np),
        }
    }

    pub fn dq(&self) -> f64 {
        spacing(&self.q)
    }

    pub fn dp(&self) -> f64 {
        spacing(&self.p)
    }

    pub fn cell(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.q.len(), self.p.len())
    }
}

fn spacing(x: &[f64]) -> f64 {
    if x.len() < 2 {
        1.0
    } else {
        x[1] - x[0]
    }
}

/// Real function sampled on a phase-space grid, `values[(iq, ip)]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerGrid {
    pub grid: PhaseGrid,
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn cell(&self) -> f64 {
        self.grid.cell()
    }

    /// `sum W * cell`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn constant(grid: &PhaseGrid, value: f64) -> Self {
        let (nq, np) = grid.shape();
        Self {
            grid: grid.clone(),
            values: DMatrix::from_element(nq, np, value),
        }
    }

    pub fn from_fn(grid: &PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = DMatrix::from_fn(grid.q.len(), grid.p.len(), |i, j| f(grid.q[i], grid.p[j]));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `sqrt(sum |W|^2 cell)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.cell()).sqrt()
    }
}

/// Complex symbol on a phase-space grid (non-Hermitian kernels, residual fields).
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    pub grid: PhaseGrid,
    pub values: CMat,
}

impl SymbolGrid {
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn re(&self) -> WignerGrid {
        WignerGrid {
            grid: self.grid.clone(),
            values: self.values.map(|z| z.re),
        }
    }

    /// Restriction to `|q| <= q_max` (rows only).
    pub fn window_q(&self, q_max: f64) -> SymbolGrid {
        let rows: Vec<usize> = (0..self.grid.q.len())
            .filter(|&i| self.grid.q[i].abs() <= q_max)
            .collect();
        let values = CMat::from_fn(rows.len(), self.grid.p.len(), |r, c| self.values[(rows[r], c)]);
        SymbolGrid {
            grid: PhaseGrid {
                q: rows.iter().map(|&i| self.grid.q[i]).collect(),
                p: self.grid.p.clone(),
            },
            values,
        }
    }

    pub fn sub(&self, other: &SymbolGrid) -> SymbolGrid {
        SymbolGrid {
            grid: self.grid.clone(),
            values: &self.values - &other.values,
        }
    }
}

/// Transform settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformOptions {
    /// Number of momentum samples is `p_factor * N`; must be at least 2 so
    /// that the lag sum does not alias.
    pub p_factor: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self { p_factor: 4 }
    }
}

/// Band-limited (periodic) interpolation of `n` samples onto the points
/// shifted by half a spacing. The Nyquist mode of an even grid has no
/// unique interpolant and is dropped; kernels that do not decay (identity,
/// multiplication operators) are therefore best represented on odd grids.
fn half_shift_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let top = (n - 1) / 2;
    DMatrix::from_fn(n, n, |f, a| {
        let u = f as f64 + 0.5 - a as f64;
        let mut acc = 1.0;
        for k in 1..=top {
            acc += 2.0 * (2.0 * std::f64::consts::PI * k as f64 * u / nf).cos();
        }
        acc / nf
    })
}

/// Kernel values at the half-shifted points `K(q_a + dq/2, q_b + dq/2)`.
fn half_shift(values: &CMat) -> CMat {
    // real products are much faster than complex ones
    let s = half_shift_matrix(values.nrows());
    let st = s.transpose();
    let re = &s * values.map(|z| z.re) * &st;
    let im = &s * values.map(|z| z.im) * &st;
    re.zip_map(&im, Complex64::new)
}

/// Core lag transform: `T(q_j, p_k) = (dq / 2 pi hbar) sum_m f(m) c_m e^{i p_k m dq / hbar}`
/// with `c_m = K(q_j - m dq / 2, q_j + m dq / 2)`. Even lags are grid values,
/// odd lags come from the half-shifted kernel.
fn lag_transform(
    values: &CMat,
    q: &[f64],
    hbar: f64,
    opts: TransformOptions,
    weight: impl Fn(isize) -> Complex64,
) -> Result<SymbolGrid> {
    let n = q.len();
    if n < 4 || values.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "kernel must be N x N with N >= 4 on a {n}-point grid"
        )));
    }
    if opts.p_factor < 2 {
        return Err(Error::InvalidArgument("p_factor must be at least 2".into()));
    }
    let shifted = half_shift(values);
    let dq = q[1] - q[0];
    let np = opts.p_factor * n;
    let dp = 2.0 * std::f64::consts::PI * hbar / (np as f64 * dq);
    let p: Vec<f64> = (0..np).map(|k| (k as f64 - (np / 2) as f64) * dp).collect();
    let fft = FftPlanner::new().plan_fft_inverse(np);
    let pref = dq / (2.0 * std::f64::consts::PI * hbar);
    let mut out = CMat::zeros(n, np);
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    for j in 0..n {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let centre = 2 * j as isize;
        let reach = centre.min(2 * n as isize - 1 - centre);
        for m in -reach..=reach {
            let (a, b) = (centre - m, centre + m);
            let c = if m % 2 == 0 {
                values[(a as usize / 2, b as usize / 2)]
            } else {
                shifted[(a as usize / 2, b as usize / 2)]
            };
            // (-1)^m puts zero momentum in the middle of the output
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[m.rem_euclid(np as isize) as usize] += c * weight(m) * sign;
        }
        fft.process(&mut buf);
        for (k, z) in buf.iter().enumerate() {
            out[(j, k)] = z * pref;
        }
    }
    Ok(SymbolGrid {
        grid: PhaseGrid { q: q.to_vec(), p },
        values: out,
    })
}

fn unit(_: isize) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn edge_ratio(values: &CMat) -> f64 {
    let n = values.nrows();
    let peak = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0f64;
    for i in 0..n {
        for &(a, b) in &[(0, i), (n - 1, i), (i, 0), (i, n - 1)] {
            edge = edge.max(values[(a, b)].norm());
        }
    }
    edge / peak
}

/// Wigner function of a state kernel.
pub fn wigner_transform(kernel: &PositionKernel) -> Result<WignerGrid> {
    wigner_transform_with(kernel, TransformOptions::default())
}

pub fn wigner_transform_with(kernel: &PositionKernel, opts: TransformOptions) -> Result<WignerGrid> {
    kernel.ensure_hermitian()?;
    let ratio = edge_ratio(&kernel.values);
    if ratio > EDGE_DECAY_TOL {
        return Err(Error::EdgeDecay { ratio });
    }
    Ok(lag_transform(&kernel.values, &kernel.q, kernel.hbar, opts, unit)?.re())
}

/// Wigner-normalised transform of an arbitrary (possibly non-Hermitian) kernel.
pub fn wigner_symbol(kernel: &PositionKernel, opts: TransformOptions) -> Result<SymbolGrid> {
    lag_transform(&kernel.values, &kernel.q, kernel.hbar, opts, unit)
}

/// Weyl symbol `O^W` of an observable kernel (complex in general).
pub fn weyl_symbol(kernel: &PositionKernel, opts: TransformOptions) -> Result<SymbolGrid> {
    let mut s = lag_transform(&kernel.values, &kernel.q, kernel.hbar, opts, unit)?;
    s.values *= Complex64::from(2.0 * std::f64::consts::PI * kernel.hbar);
    Ok(s)
}

/// Real Weyl symbol of a Hermitian observable kernel.
pub fn weyl_transform(kernel: &PositionKernel) -> Result<WignerGrid> {
    kernel.ensure_hermitian()?;
    Ok(weyl_symbol(kernel, TransformOptions::default())?.re())
}

/// `d/dp` of the Wigner-normalised transform, exact on the lags.
fn wigner_symbol_dp(kernel: &PositionKernel, opts: TransformOptions) -> Result<SymbolGrid> {
    let s = kernel.dq() / kernel.hbar;
    lag_transform(&kernel.values, &kernel.q, kernel.hbar, opts, |m| {
        Complex64::new(0.0, m as f64 * s)
    })
}
