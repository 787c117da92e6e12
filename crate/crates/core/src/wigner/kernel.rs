use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Position-space kernel `K(x, x')` on a periodic uniform grid.
///
/// The operator matrix is `K dq`, so a state has `sum_j K(x_j, x_j) dq = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionKernel {
    pub q: Vec<f64>,
    pub values: CMat,
    pub hbar: f64,
}

/// `n` points covering `[-length / 2, length / 2)`.
pub fn periodic_grid(n: usize, length: f64) -> Vec<f64> {
    let dq = length / n as f64;
    (0..n).map(|j| -length / 2.0 + j as f64 * dq).collect()
}

/// Fourier differentiation matrix on a periodic grid of `n` points and period `length`.
pub fn derivative_matrix(n: usize, length: f64) -> DMatrix<f64> {
    let scale = PI / length;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return 0.0;
        }
        let d = j as f64 - k as f64;
        let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
        let x = d * PI / n as f64;
        if n.is_multiple_of(2) {
            scale * sign / x.tan()
        } else {
            scale * sign / x.sin()
        }
    })
}

/// Harmonic oscillator eigenfunction `psi_n(x)` for `H = p^2 / 2m + m omega^2 x^2 / 2`.
pub fn harmonic_eigenfunction(x: f64, n: usize, mass: f64, omega: f64, hbar: f64) -> f64 {
    let alpha = mass * omega / hbar;
    let xi = x * alpha.sqrt();
    let mut prev = 0.0;
    let mut cur = (alpha / PI).powf(0.25) * (-xi * xi / 2.0).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl PositionKernel {
    pub fn new(q: Vec<f64>, values: CMat, hbar: f64) -> Result<Self> {
        if q.len() < 4 || values.shape() != (q.len(), q.len()) {
            return Err(Error::Dimension(format!(
                "kernel {:?} does not fit a {}-point grid",
                values.shape(),
                q.len()
            )));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let dq = q[1] - q[0];
        if !(dq > 0.0) || q.windows(2).any(|w| ((w[1] - w[0]) - dq).abs() > 1e-9 * dq) {
            return Err(Error::InvalidArgument(
                "position grid must be uniform and increasing".into(),
            ));
        }
        Ok(Self { q, values, hbar })
    }

    pub fn from_fn(q: &[f64], hbar: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let values = CMat::from_fn(q.len(), q.len(), |a, b| f(q[a], q[b]));
        Self::new(q.to_vec(), values, hbar)
    }

    /// Kernel of the operator whose grid matrix is `m`.
    pub fn from_matrix(q: &[f64], hbar: f64, m: &CMat) -> Result<Self> {
        let dq = q.get(1).map_or(1.0, |x| x - q[0]);
        Self::new(q.to_vec(), m / Complex64::from(dq), hbar)
    }

    /// Pure state `psi(x) conj(psi(x'))`.
    pub fn from_wavefunction(q: &[f64], hbar: f64, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != q.len() {
            return Err(Error::Dimension("wavefunction length differs from grid".into()));
        }
        Self::from_fn_indexed(q, hbar, |a, b| psi[a] * psi[b].conj())
    }

    fn from_fn_indexed(q: &[f64], hbar: f64, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(q.to_vec(), CMat::from_fn(q.len(), q.len(), f), hbar)
    }

    /// Oscillator eigenstate `|n><n|`.
    pub fn harmonic_eigenstate(q: &[f64], hbar: f64, n: usize, mass: f64, omega: f64) -> Result<Self> {
        let psi: Vec<Complex64> = q
            .iter()
            .map(|&x| Complex64::from(harmonic_eigenfunction(x, n, mass, omega, hbar)))
            .collect();
        Self::from_wavefunction(q, hbar, &psi)
    }

    /// Gaussian mixed state whose Wigner function is the product of normal
    /// densities with means `(q0, p0)` and widths `(sigma_q, sigma_p)`.
    pub fn mixed_gaussian(q: &[f64], hbar: f64, centre: (f64, f64), sigma_q: f64, sigma_p: f64) -> Result<Self> {
        let norm = 1.0 / ((2.0 * PI).sqrt() * sigma_q);
        Self::from_fn(q, hbar, |x, y| {
            let mid = (x + y) / 2.0 - centre.0;
            let u = x - y;
            let amp = norm
                * (-mid * mid / (2.0 * sigma_q * sigma_q)).exp()
                * (-sigma_p * sigma_p * u * u / (2.0 * hbar * hbar)).exp();
            Complex64::from_polar(amp, centre.1 * u / hbar)
        })
    }

    /// Observable whose Weyl symbol is `g(q) exp(-(p - p1)^2 / 2 s^2)`.
    pub fn from_gaussian_symbol(q: &[f64], hbar: f64, g: impl Fn(f64) -> f64, p1: f64, s: f64) -> Result<Self> {
        let pref = s / ((2.0 * PI).sqrt() * hbar);
        Self::from_fn(q, hbar, |x, y| {
            let u = x - y;
            let amp = g((x + y) / 2.0) * pref * (-s * s * u * u / (2.0 * hbar * hbar)).exp();
            Complex64::from_polar(amp, p1 * u / hbar)
        })
    }

    pub fn identity(q: &[f64], hbar: f64) -> Result<Self> {
        Self::from_matrix(q, hbar, &linalg::identity(q.len()))
    }

    /// Multiplication operator `f(x)`.
    pub fn position_function(q: &[f64], hbar: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let m = CMat::from_fn(q.len(), q.len(), |a, b| {
            if a == b {
                Complex64::from(f(q[a]))
            } else {
                linalg::ZERO
            }
        });
        Self::from_matrix(q, hbar, &m)
    }

    pub fn position(q: &[f64], hbar: f64) -> Result<Self> {
        Self::position_function(q, hbar, |x| x)
    }

    /// `-i hbar d/dx` by Fourier differentiation.
    pub fn momentum(q: &[f64], hbar: f64) -> Result<Self> {
        let d = derivative_matrix(q.len(), (q[1] - q[0]) * q.len() as f64);
        let m = d.map(|x| Complex64::new(0.0, -hbar * x));
        Self::from_matrix(q, hbar, &m)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    pub fn length(&self) -> f64 {
        self.dq() * self.n() as f64
    }

    /// Grid matrix `K dq`.
    pub fn operator_matrix(&self) -> CMat {
        &self.values * Complex64::from(self.dq())
    }

    pub fn derivative(&self) -> DMatrix<f64> {
        derivative_matrix(self.n(), self.length())
    }

    pub fn trace(&self) -> Complex64 {
        self.values.diagonal().sum() * self.dq()
    }

    /// `Tr(A B)` from kernels.
    pub fn trace_product(&self, other: &PositionKernel) -> Result<Complex64> {
        self.ensure_same(other)?;
        Ok(linalg::trace_product(&self.values, &other.values) * self.dq() * self.dq())
    }

    /// Kernel of the operator product `A B`.
    pub fn compose(&self, other: &PositionKernel) -> Result<PositionKernel> {
        self.ensure_same(other)?;
        Ok(self.with_values(&self.values * &other.values * Complex64::from(self.dq())))
    }

    /// Kernel of `[A, B]`.
    pub fn commutator(&self, other: &PositionKernel) -> Result<PositionKernel> {
        self.ensure_same(other)?;
        let c = linalg::commutator(&self.values, &other.values) * Complex64::from(self.dq());
        Ok(self.with_values(c))
    }

    pub fn with_values(&self, values: CMat) -> PositionKernel {
        PositionKernel {
            q: self.q.clone(),
            values,
            hbar: self.hbar,
        }
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let v = linalg::hermiticity_violation(&self.values);
        if v > crate::spectral::HERMITICITY_TOL * linalg::max_abs(&self.values).max(1.0) {
            return Err(Error::NotHermitian {
                block: "position kernel",
                violation: v,
                location: None,
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_same(&self, other: &PositionKernel) -> Result<()> {
        if self.q.len() != other.q.len()
            || (self.q[0] - other.q[0]).abs() > 1e-12
            || (self.dq() - other.dq()).abs() > 1e-12
            || self.hbar != other.hbar
        {
            return Err(Error::ModelMismatch("kernels live on different grids".into()));
        }
        Ok(())
    }
}
