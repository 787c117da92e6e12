use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{weyl_symbol, wigner_symbol, wigner_symbol_dp, PositionKernel, SymbolGrid, TransformOptions, WignerGrid};
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// `sum W_state W_obs cell` on a shared grid.
pub fn phase_space_mean(w_state: &WignerGrid, w_obs: &WignerGrid) -> Result<f64> {
    if w_state.grid != w_obs.grid {
        return Err(Error::ModelMismatch("phase-space grids differ".into()));
    }
    Ok(w_state.values.component_mul(&w_obs.values).sum() * w_state.cell())
}

/// `H = p^2 / 2m + V(q)` with polynomial `V(q) = sum_k potential[k] q^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableHamiltonian {
    pub mass: f64,
    pub potential: Vec<f64>,
}

impl SeparableHamiltonian {
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Self {
            mass,
            potential: vec![0.0, 0.0, mass * omega * omega / 2.0],
        }
    }

    pub fn v(&self, q: f64) -> f64 {
        self.potential.iter().rev().fold(0.0, |acc, c| acc * q + c)
    }

    pub fn dv(&self, q: f64) -> f64 {
        self.potential
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * q + k as f64 * c)
    }

    /// Classical symbol `H(q, p)`.
    pub fn symbol(&self, q: f64, p: f64) -> f64 {
        p * p / (2.0 * self.mass) + self.v(q)
    }
}

/// Settings for the bracket residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleOptions {
    /// Largest admissible relative Fourier content of the kernel rows in
    /// the top quarter of the band.
    pub tail_threshold: f64,
    pub p_factor: usize,
}

impl Default for LiouvilleOptions {
    fn default() -> Self {
        Self {
            tail_threshold: 1e-6,
            p_factor: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleResidual {
    /// `|| i {H, W} - [(1/hbar)[H, rho]]^W ||_2`.
    pub l2: f64,
    pub max: f64,
    /// `|| i {H, W} ||_2`, for scale.
    pub classical_l2: f64,
    pub tail: f64,
}

/// Relative spectral content of the kernel rows near the band edge.
fn spectral_tail(values: &CMat) -> f64 {
    let n = values.ncols();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let (mut peak, mut tail) = (0.0f64, 0.0f64);
    for r in 0..values.nrows() {
        let mut row: Vec<Complex64> = values.row(r).iter().copied().collect();
        fft.process(&mut row);
        for (k, z) in row.iter().enumerate() {
            let freq = k.min(n - k);
            peak = peak.max(z.norm());
            if 8 * freq >= 3 * n {
                tail = tail.max(z.norm());
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

/// `A K - K A` for real `A`, split into real products.
fn real_commutator(a: &DMatrix<f64>, k: &CMat) -> CMat {
    let re = k.map(|z| z.re);
    let im = k.map(|z| z.im);
    let cr = a * &re - &re * a;
    let ci = a * &im - &im * a;
    cr.zip_map(&ci, Complex64::new)
}

/// Compares the classical Liouville action `i {H, W}` on the Wigner function
/// with the Wigner function of `(1/hbar)[H, rho]`.
pub fn liouville_residual(
    kernel: &PositionKernel,
    h: &SeparableHamiltonian,
    opts: LiouvilleOptions,
) -> Result<LiouvilleResidual> {
    kernel.ensure_hermitian()?;
    let tail = spectral_tail(&kernel.values);
    if tail > opts.tail_threshold {
        return Err(Error::GridTooCoarse {
            tail,
            threshold: opts.tail_threshold,
        });
    }
    let topts = TransformOptions {
        p_factor: opts.p_factor,
    };
    let hbar = kernel.hbar;
    let k = &kernel.values;
    let d = kernel.derivative();
    let d2 = &d * &d;
    let q = &kernel.q;

    let dq_kernel = kernel.with_values(real_commutator(&d, k));
    let dw_dq = wigner_symbol(&dq_kernel, topts)?;
    let dw_dp = wigner_symbol_dp(kernel, topts)?;

    let kinetic = real_commutator(&d2, k) * Complex64::from(-hbar * hbar / (2.0 * h.mass));
    let potential = CMat::from_fn(k.nrows(), k.ncols(), |a, b| k[(a, b)] * (h.v(q[a]) - h.v(q[b])));
    let quantum = wigner_symbol(
        &kernel.with_values((kinetic + potential) / Complex64::from(hbar)),
        topts,
    )?;

    let grid = dw_dp.grid.clone();
    let i = Complex64::new(0.0, 1.0);
    let classical = CMat::from_fn(grid.q.len(), grid.p.len(), |a, b| {
        i * (dw_dp.values[(a, b)] * h.dv(grid.q[a]) - dw_dq.values[(a, b)] * (grid.p[b] / h.mass))
    });
    let classical = SymbolGrid {
        grid,
        values: classical,
    };
    let diff = classical.sub(&quantum);
    Ok(LiouvilleResidual {
        l2: diff.l2_norm(),
        max: diff.values.iter().fold(0.0, |m, z| m.max(z.norm())),
        classical_l2: classical.l2_norm(),
        tail,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductResidual {
    /// `(O1 O2)^W - O1^W O2^W` on the (windowed) grid.
    pub field: SymbolGrid,
    pub l2: f64,
    pub rms: f64,
    pub max: f64,
}

/// Deviation of the Weyl symbol of a product from the product of symbols,
/// optionally restricted to `|q| <= window`.
pub fn product_residual(o1: &PositionKernel, o2: &PositionKernel, window: Option<f64>) -> Result<ProductResidual> {
    o1.ensure_same(o2)?;
    let topts = TransformOptions::default();
    let prod = weyl_symbol(&o1.compose(o2)?, topts)?;
    let s1 = weyl_symbol(o1, topts)?;
    let s2 = weyl_symbol(o2, topts)?;
    let mut field = SymbolGrid {
        grid: prod.grid.clone(),
        values: prod.values - s1.values.component_mul(&s2.values),
    };
    if let Some(w) = window {
        field = field.window_q(w);
    }
    let count = field.values.len().max(1) as f64;
    let sq: f64 = field.values.iter().map(|z| z.norm_sqr()).sum();
    Ok(ProductResidual {
        l2: field.l2_norm(),
        rms: (sq / count).sqrt(),
        max: field.values.iter().fold(0.0, |m, z| m.max(z.norm())),
        field,
    })
}
