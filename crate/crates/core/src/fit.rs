//! Least-squares helpers: straight lines, exponential decay, scaling orders.

use serde::Serialize;

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = (0..n).map(|i| (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        rms: (ss_res / nf).sqrt(),
        r_squared,
        n,
    })
}

/// Fit `|v| ~ A exp(-rate t)` through a log-linear regression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpFit {
    pub rate: f64,
    pub amplitude: f64,
    /// RMS residual of `ln|v|`.
    pub rms_log: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    pub n: usize,
}

/// Exponential fit over the samples with `|v|` inside `[lo, hi]`.
///
/// Returns `None` when fewer than three samples fall in the window.
pub fn exp_fit_window(t: &[f64], v: &[f64], lo: f64, hi: f64) -> Option<ExpFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .filter(|(_, v)| v.abs() >= lo && v.abs() <= hi)
        .map(|(t, v)| (*t, v.abs().ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let f = line_fit(&xs, &ys)?;
    Some(ExpFit {
        rate: -f.slope,
        amplitude: f.intercept.exp(),
        rms_log: f.rms,
        r_squared: f.r_squared,
        n: f.n,
    })
}

/// Exponential fit of all samples, no window.
pub fn exp_fit(t: &[f64], v: &[f64]) -> Option<ExpFit> {
    exp_fit_window(t, v, f64::MIN_POSITIVE, f64::INFINITY)
}

/// Measured power-law order `p` of `err ~ C s^p` from a ladder of scales.
pub fn scaling_order(scales: &[f64], errors: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.abs().ln()).collect();
    if ly.iter().any(|y| !y.is_finite()) {
        return None;
    }
    line_fit(&lx, &ly).map(|f| f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 2.0 * x).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.rms < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_recovers_rate() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|t| -3.0 * (-0.4 * t).exp()).collect();
        let f = exp_fit(&t, &v).unwrap();
        assert!((f.rate - 0.4).abs() < 1e-12);
        assert!((f.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn window_excludes_samples() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v = [1.0, 0.4, 0.2, 0.1, 1e-12];
        let f = exp_fit_window(&t, &v, 1e-8, 0.5).unwrap();
        assert_eq!(f.n, 3);
    }

    #[test]
    fn order_of_quadratic_law() {
        let s = [0.1, 0.05, 0.025];
        let e: Vec<f64> = s.iter().map(|s| 7.0 * s * s).collect();
        assert!((scaling_order(&s, &e).unwrap() - 2.0).abs() < 1e-12);
    }
}
