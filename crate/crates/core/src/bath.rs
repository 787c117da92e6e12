//! Oscillator linearly coupled to a continuum of bath modes.
//!
//! Adimensional units: `Q = (b + b^dag) / sqrt 2`, `P = i (b^dag - b) / sqrt 2`.
//! The bath starts in its vacuum; the oscillator in a state described by its
//! first and second moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::fit::{exp_fit_window, line_fit};
use crate::quadrature::{filon_weights, principal_value, simpson_weights};

/// Allowed deviation of the completeness integral from 1.
pub const COMPLETENESS_TOL: f64 = 5e-3;

/// Largest node count of the refined panel around the oscillator frequency.
const MAX_FINE_NODES: usize = 20_001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

/// Parameters of the default form factor `V(w) = lambda sqrt(w) exp(-w / w_c)`
/// with `w_c = cutoff_ratio * omega_osc`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BathConfig {
    pub omega_osc: f64,
    pub coupling: f64,
    pub cutoff_ratio: f64,
    pub omega_max: f64,
    /// Node count of the coarse grid on `[0, omega_max]` (odd).
    pub nodes: usize,
    /// Smallest regularization in the epsilon ladder of the oracle path.
    pub epsilon: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            omega_osc: 1.0,
            coupling: 0.1,
            cutoff_ratio: 5.0,
            omega_max: 20.0,
            nodes: 2001,
            epsilon: 1e-4,
        }
    }
}

/// Uniform Simpson panel inside the composite grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Panel {
    start: usize,
    n: usize,
    x0: f64,
    h: f64,
}

/// Composite grid made of uniform panels sharing their end nodes.
fn composite(segments: &[(f64, f64, f64)]) -> Result<(Vec<f64>, Vec<f64>, Vec<Panel>)> {
    let mut grid = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut panels = Vec::new();
    for &(a, b, target) in segments {
        let len = b - a;
        if !(len > 0.0) {
            continue;
        }
        let half = (len / (2.0 * target)).ceil().max(1.0) as usize;
        let n = 2 * half + 1;
        let h = len / (n - 1) as f64;
        let w = simpson_weights(n, h)?;
        let start = if grid.is_empty() { 0 } else { grid.len() - 1 };
        for (i, wi) in w.iter().enumerate() {
            if i == 0 && start < grid.len() {
                weights[start] += wi;
            } else {
                grid.push(a + h * i as f64);
                weights.push(*wi);
            }
        }
        panels.push(Panel { start, n, x0: a, h });
    }
    Ok((grid, weights, panels))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BathModel {
    pub config: BathConfig,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// `V(w)^2` on the grid.
    pub v2: Vec<f64>,
    pub eta_plus: Vec<Complex64>,
    /// Dressed spectral density `V^2 / |eta_+|^2` on the grid.
    pub density: Vec<f64>,
    panels: Vec<Panel>,
}

impl BathModel {
    pub fn new(config: BathConfig) -> Result<Self> {
        let c = config;
        if !(c.omega_osc > 0.0 && c.coupling >= 0.0 && c.cutoff_ratio > 0.0 && c.omega_max > 0.0 && c.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid bath parameters: {c:?}")));
        }
        if c.nodes < 3 || c.nodes.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "bath grid needs an odd node count >= 3, got {}",
                c.nodes
            )));
        }
        let hc = c.omega_max / (c.nodes - 1) as f64;
        let mut model = Self {
            config,
            grid: Vec::new(),
            weights: Vec::new(),
            v2: Vec::new(),
            eta_plus: Vec::new(),
            density: Vec::new(),
            panels: Vec::new(),
        };
        let om = c.omega_osc;
        let gamma0 = PI * model.form_factor_sq(om);
        let mut segments = vec![(0.0, c.omega_max, hc)];
        if gamma0 > 0.0 && gamma0 / 10.0 < hc && om < c.omega_max {
            // resolve the narrow resonance around the oscillator frequency
            let half = (60.0 * gamma0).min(0.5 * om);
            let (a, b) = ((om - half).max(0.0), (om + half).min(c.omega_max));
            let hf = (gamma0 / 10.0).max((b - a) / (MAX_FINE_NODES - 1) as f64);
            segments = vec![(0.0, a, hc), (a, b, hf), (b, c.omega_max, hc)];
        }
        let (grid, weights, panels) = composite(&segments)?;
        model.v2 = grid.iter().map(|&w| model.form_factor_sq(w)).collect();
        model.grid = grid;
        model.weights = weights;
        model.panels = panels;
        model.eta_plus = model.grid.iter().map(|&w| model.eta_unchecked(w)).collect();
        if c.coupling > 0.0 {
            let (i, min) = model
                .eta_plus
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, z)| if z.norm() < acc.1 { (i, z.norm()) } else { acc },
                );
            if min < 1e-10 {
                return Err(Error::Bath(format!("eta_+ vanishes at w = {}", model.grid[i])));
            }
        }
        model.density = model
            .v2
            .iter()
            .zip(&model.eta_plus)
            .map(|(v, e)| if *v == 0.0 { 0.0 } else { v / e.norm_sqr() })
            .collect();
        Ok(model)
    }

    fn cutoff(&self) -> f64 {
        self.config.cutoff_ratio * self.config.omega_osc
    }

    /// `V(w)^2`.
    pub fn form_factor_sq(&self, w: f64) -> f64 {
        let l = self.config.coupling;
        l * l * w * (-2.0 * w / self.cutoff()).exp()
    }

    fn form_factor_sq_deriv(&self, w: f64) -> f64 {
        let l = self.config.coupling;
        let wc = self.cutoff();
        l * l * (-2.0 * w / wc).exp() * (1.0 - 2.0 * w / wc)
    }

    /// Oscillator decoupled from the bath.
    pub fn is_free(&self) -> bool {
        self.config.coupling == 0.0
    }

    fn eta_unchecked(&self, w: f64) -> Complex64 {
        let pv = principal_value(
            &self.grid,
            &self.weights,
            &self.v2,
            w,
            self.form_factor_sq(w),
            self.form_factor_sq_deriv(w),
        );
        Complex64::new(w - self.config.omega_osc - pv, PI * self.form_factor_sq(w))
    }

    fn check_omega(&self, w: f64) -> Result<()> {
        if !(w >= 0.0 && w <= self.config.omega_max) {
            return Err(Error::InvalidArgument(format!(
                "frequency {w} outside [0, {}]",
                self.config.omega_max
            )));
        }
        Ok(())
    }

    /// `int rho(w) e^{-i w t} dw` with the dressed density `rho`; Filon on every panel.
    fn continuum_amplitude(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.panels {
            let w = filon_weights(p.x0, p.h, p.n, -t);
            acc += w
                .iter()
                .zip(&self.density[p.start..p.start + p.n])
                .map(|(w, d)| w * d)
                .sum::<Complex64>();
        }
        acc
    }

    /// Survival amplitude `G(t)` with `<b(t)> = G(t) <b>_0`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        if self.is_free() {
            Complex64::from_polar(1.0, -self.config.omega_osc * t)
        } else {
            self.continuum_amplitude(t)
        }
    }
}

/// `eta_pm(w) = w - Omega - int V(w')^2 / (w - w' pm i0) dw'`.
pub fn eta(model: &BathModel, w: f64, branch: Branch) -> Result<Complex64> {
    model.check_omega(w)?;
    let up = model.eta_unchecked(w);
    Ok(match branch {
        Branch::Upper => up,
        Branch::Lower => up.conj(),
    })
}

/// Same integral with a finite regularization `eps` in place of `i0`,
/// integrated on a mesh graded geometrically towards `w`.
pub fn eta_regularized(model: &BathModel, w: f64, branch: Branch, eps: f64) -> Result<Complex64> {
    model.check_omega(w)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regularization must be positive, got {eps}"
        )));
    }
    let wmax = model.config.omega_max;
    let mut radii = vec![0.0];
    let mut r = 50.0 * eps;
    while r < wmax {
        radii.push(r);
        r *= 10.0;
    }
    radii.push(wmax);
    let mut segments = Vec::new();
    for k in (1..radii.len()).rev() {
        let h = radii[k] / 500.0;
        segments.push(((w - radii[k]).max(0.0), (w - radii[k - 1]).max(0.0), h));
    }
    for k in 1..radii.len() {
        let h = radii[k] / 500.0;
        segments.push(((w + radii[k - 1]).min(wmax), (w + radii[k]).min(wmax), h));
    }
    let (grid, weights, _) = composite(&segments)?;
    let s = match branch {
        Branch::Upper => eps,
        Branch::Lower => -eps,
    };
    let integral: Complex64 = grid
        .iter()
        .zip(&weights)
        .map(|(&y, &q)| q * model.form_factor_sq(y) / Complex64::new(w - y, s))
        .sum();
    Ok(Complex64::from(w - model.config.omega_osc) - integral)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrapolated {
    pub value: Complex64,
    /// Difference between the last two extrapolants.
    pub residual: f64,
}

/// First-order Richardson extrapolation of `eta_regularized` to `eps -> 0`
/// over a decreasing ladder of at least three regularizations.
pub fn eta_extrapolated(model: &BathModel, w: f64, branch: Branch, ladder: &[f64]) -> Result<Extrapolated> {
    if ladder.len() < 3 || ladder.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::InvalidArgument(
            "epsilon ladder must hold >= 3 decreasing values".into(),
        ));
    }
    let vals: Vec<Complex64> = ladder
        .iter()
        .map(|&e| eta_regularized(model, w, branch, e))
        .collect::<Result<_>>()?;
    let ext: Vec<Complex64> = (1..ladder.len())
        .map(|i| {
            let r = ladder[i - 1] / ladder[i];
            vals[i] + (vals[i] - vals[i - 1]) / (r - 1.0)
        })
        .collect();
    let n = ext.len();
    Ok(Extrapolated {
        value: ext[n - 1],
        residual: (ext[n - 1] - ext[n - 2]).norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Completeness {
    /// `int V^2 / |eta_+|^2 dw`, or 1 for a free oscillator.
    pub value: f64,
    pub deviation: f64,
    /// The bare frequency lies outside the sampled band.
    pub outside_band: bool,
    /// `Re eta_+(0) >= 0`: a bound state below the continuum.
    pub bound_below: bool,
    /// Density at `omega_max` relative to its peak.
    pub edge_density: f64,
}

impl Completeness {
    pub fn ok(&self) -> bool {
        self.deviation <= COMPLETENESS_TOL
    }

    /// Error carrying the diagnostics when the integral is off.
    pub fn check(&self) -> Result<()> {
        if self.ok() {
            return Ok(());
        }
        let mut causes = Vec::new();
        if self.outside_band {
            causes.push("oscillator frequency beyond omega_max (truncation)".to_string());
        }
        if self.bound_below {
            causes.push("bound state below the continuum".to_string());
        }
        if self.edge_density > 1e-6 {
            causes.push(format!("density not decayed at omega_max ({:.2e})", self.edge_density));
        }
        if causes.is_empty() {
            causes.push("grid too coarse for the resonance".into());
        }
        Err(Error::Bath(format!(
            "completeness {} deviates from 1 by {:.3e}: {}",
            self.value,
            self.deviation,
            causes.join("; ")
        )))
    }
}

pub fn completeness(model: &BathModel) -> Completeness {
    if model.is_free() {
        return Completeness {
            value: 1.0,
            deviation: 0.0,
            outside_band: false,
            bound_below: false,
            edge_density: 0.0,
        };
    }
    let value: f64 = model.density.iter().zip(&model.weights).map(|(d, w)| d * w).sum();
    let peak = model.density.iter().fold(0.0f64, |m, d| m.max(*d));
    let edge = model.density[model.density.len() - 1];
    Completeness {
        value,
        deviation: (value - 1.0).abs(),
        outside_band: model.config.omega_osc >= model.config.omega_max,
        bound_below: model.eta_plus[0].re >= 0.0,
        edge_density: if peak > 0.0 { edge / peak } else { 0.0 },
    }
}

/// Oscillator moments at `t = 0`: means and the raw moments
/// `nbar = <b^dag b>`, `alpha = <b b>` (so `<b b^dag> = nbar + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorInitialState {
    pub q0: f64,
    pub p0: f64,
    pub nbar: f64,
    pub alpha: Complex64,
}

impl OscillatorInitialState {
    pub fn vacuum() -> Self {
        Self::coherent(0.0, 0.0)
    }

    pub fn coherent(q0: f64, p0: f64) -> Self {
        let b = Complex64::new(q0, p0) / SQRT_2;
        Self {
            q0,
            p0,
            nbar: b.norm_sqr(),
            alpha: b * b,
        }
    }

    /// `<b>_0`.
    pub fn mean_b(&self) -> Complex64 {
        Complex64::new(self.q0, self.p0) / SQRT_2
    }

    /// Central moments `(<b^dag b> - |<b>|^2, <b b> - <b>^2)`.
    fn central(&self) -> (f64, Complex64) {
        let b = self.mean_b();
        (self.nbar - b.norm_sqr(), self.alpha - b * b)
    }

    /// Rejects moments that no density matrix can have.
    pub fn validate(&self) -> Result<()> {
        let finite =
            self.q0.is_finite() && self.p0.is_finite() && self.nbar.is_finite() && self.alpha.norm().is_finite();
        if !finite || self.nbar < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid oscillator moments: {self:?}")));
        }
        let (n, a) = self.central();
        // det of the (Q, P) covariance minus 1/4 equals n (n + 1) - |a|^2
        let slack = n * (n + 1.0) - a.norm_sqr();
        if n < -1e-12 || slack < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "oscillator moments violate the uncertainty relation (n = {n:.3e}, |a|^2 = {:.3e})",
                a.norm_sqr()
            )));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    Ok(())
}

/// `(<Q>_t, <P>_t)`.
pub fn mean_qp(model: &BathModel, init: &OscillatorInitialState, t: f64) -> Result<(f64, f64)> {
    init.validate()?;
    check_time(t)?;
    let z = model.amplitude(t) * init.mean_b();
    Ok((SQRT_2 * z.re, SQRT_2 * z.im))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spiral {
    pub times: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub radius: Vec<f64>,
    /// Unwrapped polar angle of `(<Q>, <P>)`.
    pub angle: Vec<f64>,
    /// Largest increase of the radius between samples, relative to the first radius.
    pub ripple: f64,
    /// Fitted `gamma` in `radius ~ exp(-gamma t)`.
    pub decay_rate: Option<f64>,
    /// Fitted clockwise winding rate.
    pub rotation_rate: Option<f64>,
    /// `pi V(rotation_rate)^2`.
    pub golden_rule: Option<f64>,
}

pub fn spiral_trace(model: &BathModel, init: &OscillatorInitialState, times: &[f64]) -> Result<Spiral> {
    if times.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidArgument("times must be increasing".into()));
    }
    let points: Vec<(f64, f64)> = times.iter().map(|&t| mean_qp(model, init, t)).collect::<Result<_>>()?;
    let radius: Vec<f64> = points.iter().map(|(q, p)| q.hypot(*p)).collect();
    let mut angle: Vec<f64> = Vec::with_capacity(points.len());
    for &(q, p) in &points {
        let a = p.atan2(q);
        let unwrapped = match angle.last() {
            Some(&prev) => a + 2.0 * PI * ((prev - a) / (2.0 * PI)).round(),
            None => a,
        };
        angle.push(unwrapped);
    }
    let r0 = radius.first().copied().unwrap_or(0.0);
    let ripple = if r0 > 0.0 {
        radius.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]) / r0))
    } else {
        0.0
    };
    // the phase is only meaningful while the spiral is well above the noise floor
    let live: Vec<usize> = (0..radius.len())
        .filter(|&i| r0 > 0.0 && radius[i] > 1e-6 * r0)
        .collect();
    let rotation_rate = if live.len() >= 3 {
        let ts: Vec<f64> = live.iter().map(|&i| times[i]).collect();
        let an: Vec<f64> = live.iter().map(|&i| angle[i]).collect();
        line_fit(&ts, &an).map(|f| -f.slope)
    } else {
        None
    };
    let decay_rate = if model.is_free() || r0 == 0.0 {
        None
    } else {
        exp_fit_window(times, &radius, 1e-4 * r0, r0).map(|f| f.rate)
    };
    let golden_rule = rotation_rate
        .filter(|w| *w >= 0.0 && *w <= model.config.omega_max && !model.is_free())
        .map(|w| PI * model.form_factor_sq(w));
    Ok(Spiral {
        times: times.to_vec(),
        points,
        radius,
        angle,
        ripple,
        decay_rate,
        rotation_rate,
        golden_rule,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub t: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    /// `<Q^2>`.
    pub q2: f64,
    /// `<P^2>`.
    pub p2: f64,
    /// `<(QP + PQ) / 2>`.
    pub qp: f64,
}

impl Moments {
    pub fn var_q(&self) -> f64 {
        self.q2 - self.mean_q * self.mean_q
    }

    pub fn var_p(&self) -> f64 {
        self.p2 - self.mean_p * self.mean_p
    }

    pub fn covariance(&self) -> f64 {
        self.qp - self.mean_q * self.mean_p
    }

    /// `Delta Q Delta P`.
    pub fn spread_product(&self) -> f64 {
        (self.var_q().max(0.0) * self.var_p().max(0.0)).sqrt()
    }
}

/// First and second moments of the oscillator at time `t`.
///
/// With the bath in its vacuum, `<A_w A_w'^dag>` reduces to
/// `delta(w - w') + nbar V V' / (eta_- eta_+')` by the canonical commutator of
/// the dressed modes, so `<b b^dag>_t = c + nbar |G|^2`,
/// `<b^dag b>_t = nbar |G|^2` and `<b b>_t = alpha G^2`, where `c` is the
/// completeness integral and `G` the survival amplitude.
pub fn moments(model: &BathModel, init: &OscillatorInitialState, t: f64) -> Result<Moments> {
    init.validate()?;
    check_time(t)?;
    let g = model.amplitude(t);
    let c = completeness(model).value;
    let mb = g * init.mean_b();
    let n = init.nbar * g.norm_sqr();
    let bb = init.alpha * g * g;
    Ok(Moments {
        t,
        mean_q: SQRT_2 * mb.re,
        mean_p: SQRT_2 * mb.im,
        q2: c / 2.0 + n + bb.re,
        p2: c / 2.0 + n - bb.re,
        qp: bb.im,
    })
}

/// `<Q(t)^2>`.
pub fn second_moment_q(model: &BathModel, init: &OscillatorInitialState, t: f64) -> Result<f64> {
    moments(model, init, t).map(|m| m.q2)
}

/// `<P(t)^2>`.
pub fn second_moment_p(model: &BathModel, init: &OscillatorInitialState, t: f64) -> Result<f64> {
    moments(model, init, t).map(|m| m.p2)
}

/// Late-time `(Delta Q, Delta P)`; equal by construction.
pub fn asymptotic_spreads(model: &BathModel) -> (f64, f64) {
    let s = (completeness(model).value / 2.0).sqrt();
    (s, s)
}

/// `(Delta q, Delta v)` in physical units for mass `m`, frequency `omega` and `hbar`.
pub fn dimensional_spreads(mass: f64, omega: f64, hbar: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0 && omega > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass, frequency and hbar must be positive: ({mass}, {omega}, {hbar})"
        )));
    }
    Ok((
        (hbar / (2.0 * mass * omega)).sqrt(),
        (hbar * omega / (2.0 * mass)).sqrt(),
    ))
}
