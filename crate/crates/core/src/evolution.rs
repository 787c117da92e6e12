//! Free evolution of five-block states, the final diagonal state and
//! weak-limit diagnostics.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit;
use crate::linalg::{self, CMat, CVec};
use crate::quadrature;
use crate::spectral::{kernel_contraction, GeneralizedObservable, StateFunctional};

/// Above this value of `t * omega_max` phases are integrated with Filon weights.
pub const FILON_THRESHOLD: f64 = 50.0;

/// Evolved state: diagonal blocks fixed, off-diagonal blocks rotated.
pub fn evolve(state: &StateFunctional, t: f64) -> StateFunctional {
    let model = state.model();
    let w0 = model.omega0;
    let m = model.m();
    let mut b = state.blocks.clone();
    for (i, &w) in model.grid.iter().enumerate() {
        b.cross_up[i] *= Complex64::from_polar(1.0, (w - w0) * t);
        b.cross_down[i] *= Complex64::from_polar(1.0, (w0 - w) * t);
    }
    for (i, &wi) in model.grid.iter().enumerate() {
        for (j, &wj) in model.grid.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, (wi - wj) * t);
            let mut v = b.kernel.view_mut((i * m, j * m), (m, m));
            v *= phase;
        }
    }
    state.with_blocks(b)
}

/// Final diagonal state: bound and singular blocks kept, the rest zeroed.
pub fn asymptotic_state(state: &StateFunctional) -> StateFunctional {
    let mut b = state.blocks.clone();
    for x in b.cross_up.iter_mut().chain(b.cross_down.iter_mut()) {
        x.fill(linalg::ZERO);
    }
    b.kernel.fill(linalg::ZERO);
    state.with_blocks(b)
}

/// The time-independent ingredients of `(rho(t)|O)`.
///
/// `value(t) = stationary + e^{i w0 t} sum_i w_i up_i e^{-i w_i t}
///   + e^{-i w0 t} sum_i w_i down_i e^{i w_i t}
///   + sum_ij w_i e^{-i w_i t} T_ij w_j e^{i w_j t}`
#[derive(Clone, Debug)]
pub struct MeanValueProfile {
    pub stationary: Complex64,
    up: CVec,
    down: CVec,
    t_mat: CMat,
    grid: Vec<f64>,
    weights: Vec<f64>,
    omega0: f64,
    spacing: Option<f64>,
}

impl MeanValueProfile {
    pub fn new(state: &StateFunctional, obs: &GeneralizedObservable) -> Result<Self> {
        let model = state.model();
        model.ensure_same(obs.model())?;
        let (r, o) = (&state.blocks, &obs.blocks);
        let k = model.k();
        let mut stationary = linalg::trace_product(&r.bound, &o.bound);
        for i in 0..k {
            stationary += linalg::trace_product(&r.diag[i], &o.diag[i]) * model.weights[i];
        }
        let up = CVec::from_fn(k, |i, _| linalg::trace_product(&r.cross_down[i], &o.cross_up[i]));
        let down = CVec::from_fn(k, |i, _| linalg::trace_product(&r.cross_up[i], &o.cross_down[i]));
        let spacing = model.uniform_spacing().filter(|_| k >= 3 && k % 2 == 1);
        Ok(Self {
            stationary,
            up,
            down,
            t_mat: kernel_contraction(r, o),
            grid: model.grid.clone(),
            weights: model.weights.clone(),
            omega0: model.omega0,
            spacing,
        })
    }

    /// `int dw e^{i kappa w} f(w)` weights on the grid.
    fn phase_weights(&self, kappa: f64) -> CVec {
        let omax = self.grid.last().copied().unwrap_or(0.0);
        match self.spacing {
            Some(h) if (kappa * omax).abs() > FILON_THRESHOLD => {
                CVec::from_vec(quadrature::filon_weights(self.grid[0], h, self.grid.len(), kappa))
            }
            _ => CVec::from_fn(self.grid.len(), |i, _| {
                Complex64::from_polar(self.weights[i], kappa * self.grid[i])
            }),
        }
    }

    /// Off-diagonal contribution at time `t` (complex; the imaginary part is
    /// Hermiticity round-off).
    pub fn off_diagonal(&self, t: f64) -> Complex64 {
        let wm = self.phase_weights(-t);
        let wp = self.phase_weights(t);
        let cross = Complex64::from_polar(1.0, self.omega0 * t) * wm.dot(&self.up)
            + Complex64::from_polar(1.0, -self.omega0 * t) * wp.dot(&self.down);
        let kernel = (wm.transpose() * &self.t_mat * &wp)[(0, 0)];
        cross + kernel
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.stationary + self.off_diagonal(t)
    }
}

/// `(rho(t)|O)` with the phases applied inside the quadrature.
pub fn mean_value_at(state: &StateFunctional, obs: &GeneralizedObservable, t: f64) -> Result<f64> {
    Ok(MeanValueProfile::new(state, obs)?.value(t).re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitConfig {
    /// Lower edge of the fit window on `|value|`.
    pub floor: f64,
    /// Upper edge as a fraction of `|value|` at the first time.
    pub ceiling_fraction: f64,
    /// A fitted rate is reported only below this RMS residual of `ln|value|`.
    pub max_rms: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            ceiling_fraction: 0.5,
            max_rms: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_rate: Option<f64>,
    /// RMS log residual of the fit; infinite when no fit was possible.
    pub fit_residual: f64,
    pub r_squared: Option<f64>,
}

impl DecaySeries {
    /// Largest `|value|` over `t in [t0, t1]`.
    pub fn max_abs_in(&self, t0: f64, t1: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// `values[i] = (rho(t_i)|O) - (rho_*|O)`, optionally with an exponential fit.
pub fn weak_limit_decay(
    state: &StateFunctional,
    obs: &GeneralizedObservable,
    times: &[f64],
    fit_cfg: Option<FitConfig>,
) -> Result<DecaySeries> {
    if times.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 time samples, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "times must be finite and strictly increasing".into(),
        ));
    }
    let profile = MeanValueProfile::new(state, obs)?;
    let values: Vec<f64> = times.iter().map(|&t| profile.off_diagonal(t).re).collect();
    let mut series = DecaySeries {
        times: times.to_vec(),
        values,
        fitted_rate: None,
        fit_residual: f64::INFINITY,
        r_squared: None,
    };
    if let Some(cfg) = fit_cfg {
        let hi = cfg.ceiling_fraction * series.values[0].abs();
        if let Some(f) = fit::exp_fit_window(&series.times, &series.values, cfg.floor, hi) {
            series.fit_residual = f.rms_log;
            series.r_squared = Some(f.r_squared);
            if f.rms_log < cfg.max_rms && f.rate > 0.0 {
                series.fitted_rate = Some(f.rate);
            }
        }
    }
    Ok(series)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub early_amplitude: f64,
    pub late_amplitude: f64,
    /// `late / early`; stays near 1 when nothing decoheres.
    pub ratio: f64,
    /// `late >= early / 2`.
    pub persists: bool,
}

/// Off-diagonal contribution `sum_{i != j} rho_ji O_ij e^{i (w_i - w_j) t}`
/// for several bound states.
///
/// The time list is split at `split` (default: its midpoint time) into an
/// early and a late window; amplitudes are `max |value|` per window.
pub fn discrete_obstruction(
    energies: &[f64],
    rho: &CMat,
    obs: &CMat,
    times: &[f64],
    split: Option<f64>,
) -> Result<ObstructionReport> {
    let n = energies.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two bound states".into()));
    }
    if rho.shape() != (n, n) || obs.shape() != (n, n) {
        return Err(Error::Dimension(format!("expected {n} x {n} matrices")));
    }
    for (name, a) in [("rho", rho), ("obs", obs)] {
        let v = linalg::hermiticity_violation(a);
        if v > 1e-10 * linalg::max_abs(a).max(1.0) {
            return Err(Error::NotHermitian {
                block: if name == "rho" { "rho" } else { "obs" },
                violation: v,
                location: None,
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if energies[i] == energies[j] {
                return Err(Error::DegenerateEnergies(i, j));
            }
        }
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time list".into()));
    }
    let values: Vec<f64> = times
        .iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        acc += rho[(j, i)] * obs[(i, j)] * Complex64::from_polar(1.0, (energies[i] - energies[j]) * t);
                    }
                }
            }
            acc.re
        })
        .collect();
    let split = split.unwrap_or_else(|| 0.5 * (times[0] + times[times.len() - 1]));
    let amp = |late: bool| {
        times
            .iter()
            .zip(&values)
            .filter(|(t, _)| (**t >= split) == late)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    };
    let early_amplitude = amp(false);
    let late_amplitude = amp(true);
    let ratio = if early_amplitude > 0.0 {
        late_amplitude / early_amplitude
    } else {
        f64::NAN
    };
    Ok(ObstructionReport {
        times: times.to_vec(),
        values,
        early_amplitude,
        late_amplitude,
        ratio,
        persists: late_amplitude >= 0.5 * early_amplitude,
    })
}
