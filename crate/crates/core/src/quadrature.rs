//! Composite Simpson and Filon-Simpson rules on uniform grids.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform grid of `n` nodes on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}

/// Composite Simpson weights for `n` equally spaced nodes (`n` odd, `n >= 3`).
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidModel(format!(
            "Simpson rule needs an odd node count >= 3, got {n}"
        )));
    }
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    Ok(w)
}

/// Moments `int_{-1}^{1} s^k e^{i theta s} ds` for `k = 0, 1, 2`.
fn filon_moments(theta: f64) -> [Complex64; 3] {
    if theta.abs() < 0.2 {
        filon_moments_series(theta)
    } else {
        filon_moments_closed(theta)
    }
}

fn filon_moments_series(t: f64) -> [Complex64; 3] {
    let t2 = t * t;
    let m0 = 2.0 * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0 + t2 * t2 * t2 * t2 / 362_880.0);
    let m1 = 2.0 * (t / 3.0 - t * t2 / 30.0 + t * t2 * t2 / 840.0 - t * t2 * t2 * t2 / 45_360.0);
    let m2 = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0 - t2 * t2 * t2 / 6480.0 + t2 * t2 * t2 * t2 / 443_520.0);
    [
        Complex64::new(m0, 0.0),
        Complex64::new(0.0, m1),
        Complex64::new(m2, 0.0),
    ]
}

fn filon_moments_closed(t: f64) -> [Complex64; 3] {
    let (s, c) = t.sin_cos();
    let m0 = 2.0 * s / t;
    let m1 = 2.0 * (s - t * c) / (t * t);
    let m2 = 2.0 * ((t * t - 2.0) * s + 2.0 * t * c) / (t * t * t);
    [
        Complex64::new(m0, 0.0),
        Complex64::new(0.0, m1),
        Complex64::new(m2, 0.0),
    ]
}

/// Filon-Simpson weights `w_j` with `int f(x) e^{i kappa x} dx ~ sum_j w_j f(x_j)`
/// on a uniform grid starting at `x0` with spacing `h` and `n` (odd) nodes.
///
/// The amplitude is interpolated by a quadratic on each pair of intervals and
/// the oscillatory factor is integrated exactly. At `kappa = 0` the weights
/// coincide with the Simpson weights.
pub fn filon_weights(x0: f64, h: f64, n: usize, kappa: f64) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    if n < 3 {
        return w;
    }
    let [m0, m1, m2] = filon_moments(kappa * h);
    let left = (m2 - m1) * 0.5;
    let mid = m0 - m2;
    let right = (m2 + m1) * 0.5;
    let mut p = 1;
    while p + 1 < n {
        let xm = x0 + h * p as f64;
        let phase = Complex64::from_polar(h, kappa * xm);
        w[p - 1] += phase * left;
        w[p] += phase * mid;
        w[p + 1] += phase * right;
        p += 2;
    }
    w
}

/// Returns `PV int_a^b g(y) / (x - y) dy` using singularity subtraction.
///
/// `g_nodes` are samples of `g` on the uniform grid, `g_at_x` and
/// `dg_at_x` the value and derivative of `g` at the evaluation point.
pub fn principal_value(grid: &[f64], weights: &[f64], g_nodes: &[f64], x: f64, g_at_x: f64, dg_at_x: f64) -> f64 {
    let a = grid[0];
    let b = grid[grid.len() - 1];
    let h = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
    let mut acc = 0.0;
    for ((&y, &w), &g) in grid.iter().zip(weights).zip(g_nodes) {
        let d = x - y;
        let f = if d.abs() < 1e-9 * h { -dg_at_x } else { (g - g_at_x) / d };
        acc += w * f;
    }
    // Analytic part g(x) * PV int_a^b dy / (x - y); the log is dropped at an
    // endpoint where it diverges (finite-part convention).
    let lo = x - a;
    let hi = b - x;
    if lo > 1e-12 * h && hi > 1e-12 * h {
        acc += g_at_x * (lo / hi).ln();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 11;
        let x = uniform_grid(0.0, 2.0, n);
        let w = simpson_weights(n, x[1] - x[0]).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (x * x * x - x + 1.0)).sum();
        assert!((s - (4.0 - 2.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn simpson_rejects_even_counts() {
        assert!(simpson_weights(4, 0.1).is_err());
    }

    #[test]
    fn filon_reduces_to_simpson_at_zero_frequency() {
        let w = filon_weights(0.0, 0.1, 9, 0.0);
        let s = simpson_weights(9, 0.1).unwrap();
        for (a, b) in w.iter().zip(&s) {
            assert!((a.re - b).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn filon_series_and_closed_form_agree_at_switch() {
        let a = filon_moments_series(0.2);
        let b = filon_moments_closed(0.2);
        for k in 0..3 {
            assert!((a[k] - b[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn filon_is_exact_for_quadratic_amplitude_at_high_frequency() {
        // int_0^1 x^2 e^{i k x} dx in closed form
        let k = 300.0;
        let n = 21;
        let x = uniform_grid(0.0, 1.0, n);
        let w = filon_weights(0.0, x[1] - x[0], n, k);
        let num: Complex64 = x.iter().zip(&w).map(|(x, w)| w * (x * x)).sum();
        let i = Complex64::new(0.0, 1.0);
        // antiderivative of x^2 e^{ikx}: e^{ikx}(x^2/(ik) + 2x/k^2 - 2/(ik^3))
        let anti = |x: f64| (i * k * x).exp() * (x * x / (i * k) + 2.0 * x / (k * k) - 2.0 / (i * k * k * k));
        let reference = anti(1.0) - anti(0.0);
        assert!((num - reference).norm() < 1e-12);
    }

    #[test]
    fn principal_value_of_constant() {
        // PV int_0^2 dy / (x - y) at x = 0.5 is ln(0.5 / 1.5)
        let n = 201;
        let x = uniform_grid(0.0, 2.0, n);
        let w = simpson_weights(n, x[1] - x[0]).unwrap();
        let g = vec![1.0; n];
        let pv = principal_value(&x, &w, &g, 0.5, 1.0, 0.0);
        assert!((pv - (0.5f64 / 1.5).ln()).abs() < 1e-12);
    }

    #[test]
    fn principal_value_of_linear_function() {
        // PV int_0^1 y / (x - y) dy = -1 + x ln(x / (1 - x))
        let n = 101;
        let x = uniform_grid(0.0, 1.0, n);
        let w = simpson_weights(n, x[1] - x[0]).unwrap();
        let g: Vec<f64> = x.clone();
        let at = 0.3;
        let pv = principal_value(&x, &w, &g, at, at, 1.0);
        let exact = -1.0 + at * (at / (1.0 - at)).ln();
        assert!((pv - exact).abs() < 1e-12);
    }
}
