use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{PhaseGrid, WignerGrid};
use crate::error::{Error, Result};
use crate::evolution::MeanValueProfile;
use crate::pointer::PointerWeights;
use crate::spectral::{GeneralizedObservable, SpectralModel, StateFunctional};

/// Oscillator action-angle chart: `H = e0 + omega (q^2 + p^2) / 2`,
/// angle `a = atan2(-p, q)` so that `a(t) = a(0) + omega t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicChart {
    pub omega: f64,
    /// Energy at the chart origin; must lie below every energy in use.
    pub e0: f64,
}

impl HarmonicChart {
    /// Chart with its origin safely below the bound energy.
    pub fn for_model(model: &SpectralModel, omega: f64) -> Self {
        Self {
            omega,
            e0: 2.0 * model.omega0.min(0.0) - 1.0,
        }
    }

    pub fn energy(&self, q: f64, p: f64) -> f64 {
        self.e0 + self.omega * (q * q + p * p) / 2.0
    }

    pub fn angle(&self, q: f64, p: f64) -> f64 {
        (-p).atan2(q)
    }

    /// Phase-space point at energy `x` and angle `a`.
    pub fn point(&self, x: f64, a: f64) -> Result<(f64, f64)> {
        let r = self.radius(x)?;
        Ok((r * a.cos(), -r * a.sin()))
    }

    fn radius(&self, x: f64) -> Result<f64> {
        if x <= self.e0 {
            return Err(Error::SingularChart(format!(
                "energy {x} is at or below the chart origin {}",
                self.e0
            )));
        }
        Ok((2.0 * (x - self.e0) / self.omega).sqrt())
    }

    fn check(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "chart frequency must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Gaussian widths of the delta approximants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    pub energy: f64,
    pub angle: f64,
}

impl Widths {
    pub fn uniform(sigma: f64) -> Self {
        Self {
            energy: sigma,
            angle: sigma,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.energy > 0.0 && self.angle > 0.0) {
            return Err(Error::InvalidArgument(format!("widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    (-x * x / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

fn wrapped_gaussian(a: f64, sigma: f64) -> f64 {
    let base = (a + PI).rem_euclid(2.0 * PI) - PI;
    (-2..=2).map(|n| gaussian(base + 2.0 * PI * n as f64, sigma)).sum()
}

fn check_levels(model: &SpectralModel) -> Result<()> {
    if model.m() != 1 {
        return Err(Error::InvalidArgument(
            "the oscillator chart has no pointer axes; the model must have a single internal level".into(),
        ));
    }
    Ok(())
}

/// Energy-shell density `N_sigma(H - x) omega / 2 pi`, normalized over the plane.
pub fn momentum_density(x: f64, chart: &HarmonicChart, widths: Widths) -> Result<impl Fn(f64, f64) -> f64> {
    chart.check()?;
    widths.check()?;
    let c = *chart;
    Ok(move |q: f64, p: f64| gaussian(c.energy(q, p) - x, widths.energy) * c.omega / (2.0 * PI))
}

/// Samples `f` on `grid` and rescales so that `sum W cell = 1`.
fn normalized_sample(grid: &PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Result<WignerGrid> {
    let mut w = WignerGrid::from_fn(grid, f);
    let total = w.integral();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("density has no mass on the grid".into()));
    }
    w.values /= total;
    Ok(w)
}

pub fn sample_momentum_density(x: f64, chart: &HarmonicChart, widths: Widths, grid: &PhaseGrid) -> Result<WignerGrid> {
    let f = momentum_density(x, chart, widths)?;
    normalized_sample(grid, f)
}

/// Bundle of classical motions at energy `x` starting near angle `a0[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDensity {
    pub x: f64,
    /// Pointer multi-index (empty for the oscillator chart).
    pub r: Vec<usize>,
    pub a0: Vec<f64>,
    pub widths: Widths,
}

impl TrajectoryDensity {
    /// Unnormalized density on the plane at time `t`.
    pub fn eval(&self, chart: &HarmonicChart, t: f64, q: f64, p: f64) -> f64 {
        let at = self.a0[0] + chart.omega * t;
        gaussian(chart.energy(q, p) - self.x, self.widths.energy)
            * chart.omega
            * wrapped_gaussian(chart.angle(q, p) - at, self.widths.angle)
    }

    fn check(&self, chart: &HarmonicChart) -> Result<()> {
        chart.check()?;
        self.widths.check()?;
        if self.a0.len() != 1 || !self.r.is_empty() {
            return Err(Error::Dimension(
                "oscillator chart takes one angle and no pointer labels".into(),
            ));
        }
        chart.radius(self.x)?;
        Ok(())
    }
}

/// Trajectory density at time `t`, normalized on `grid`.
pub fn trajectory_density(
    td: &TrajectoryDensity,
    t: f64,
    chart: &HarmonicChart,
    grid: &PhaseGrid,
) -> Result<WignerGrid> {
    td.check(chart)?;
    normalized_sample(grid, |q, p| td.eval(chart, t, q, p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub reconstructed: WignerGrid,
    /// `sum rho*^W cell`.
    pub total: f64,
    pub min_value: f64,
    /// Max deviation of the continuum part from the sharp density
    /// `w(H) omega / 2 pi`.
    pub max_error: f64,
    /// Max deviation of the a0-averaged trajectory density from the
    /// momentum density at the heaviest node, relative to its peak.
    pub marginal_error: f64,
    pub sigma: f64,
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let i = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let s = (x - x0) / (x1 - x0);
    values[i - 1] * (1.0 - s) + values[i] * s
}

/// Builds `rho*^W` from pointer weights as a mixture of energy-shell densities
/// and checks it against the sharp classical density.
pub fn decompose_and_reconstruct(
    weights: &PointerWeights,
    model: &SpectralModel,
    widths: Widths,
    chart: &HarmonicChart,
    grid: &PhaseGrid,
) -> Result<ReconstructionReport> {
    check_levels(model)?;
    chart.check()?;
    widths.check()?;
    chart.radius(model.omega0)?;
    chart.radius(model.grid[0])?;
    if weights.bound.len() != 1 || weights.cont.len() != model.k() {
        return Err(Error::Dimension("weights do not fit the model".into()));
    }
    let cont: Vec<f64> = weights.cont.iter().map(|v| v[0]).collect();
    let shell = |x: f64| momentum_density(x, chart, widths);
    let bound = shell(model.omega0)?;
    let shells: Vec<_> = model.grid.iter().map(|&x| shell(x)).collect::<Result<_>>()?;

    let continuum = WignerGrid::from_fn(grid, |q, p| {
        shells
            .iter()
            .zip(&cont)
            .zip(&model.weights)
            .map(|((f, w), qw)| qw * w * f(q, p))
            .sum()
    });
    let mut reconstructed = continuum.clone();
    let wb = weights.bound[0];
    for (i, &q) in grid.q.iter().enumerate() {
        for (j, &p) in grid.p.iter().enumerate() {
            reconstructed.values[(i, j)] += wb * bound(q, p);
        }
    }
    let sharp = WignerGrid::from_fn(grid, |q, p| {
        interpolate(&model.grid, &cont, chart.energy(q, p)) * chart.omega / (2.0 * PI)
    });
    let max_error = (&continuum.values - &sharp.values).amax();
    let min_value = reconstructed.min();
    if min_value < -1e-8 {
        return Err(Error::NegativeDensity(min_value));
    }

    let heaviest = cont
        .iter()
        .enumerate()
        .fold(0, |best, (i, w)| if *w > cont[best] { i } else { best });
    let x = model.grid[heaviest];
    let target = WignerGrid::from_fn(grid, shell(x)?);
    let n_a = ((8.0 * PI / widths.angle).ceil() as usize).max(16);
    let mut avg = WignerGrid::constant(grid, 0.0);
    for k in 0..n_a {
        let td = TrajectoryDensity {
            x,
            r: Vec::new(),
            a0: vec![2.0 * PI * k as f64 / n_a as f64],
            widths,
        };
        avg.values += WignerGrid::from_fn(grid, |q, p| td.eval(chart, 0.0, q, p)).values / n_a as f64;
    }
    let peak = target.values.amax().max(f64::MIN_POSITIVE);
    let marginal_error = (&avg.values - &target.values).amax() / peak;

    Ok(ReconstructionReport {
        total: reconstructed.integral(),
        min_value,
        max_error,
        marginal_error,
        sigma: widths.energy,
        reconstructed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalDeviation {
    pub t: f64,
    /// `max |(rho*|O)|` over the probes.
    pub scale: f64,
    /// `max |(rho(t)|O) - (rho*|O)|` over the probes.
    pub deviation: f64,
}

/// Weak size of `Delta rho(t) = rho(t) - rho*` measured on probe observables,
/// one entry per time.
///
/// The Wigner map is linear and preserves pairings, so this equals the same
/// quantity computed from `rho^W(t) - rho*^W` against the probe symbols.
pub fn classical_deviation(
    state: &StateFunctional,
    probes: &[GeneralizedObservable],
    times: &[f64],
) -> Result<Vec<ClassicalDeviation>> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one probe observable is required".into(),
        ));
    }
    let profiles: Vec<MeanValueProfile> = probes
        .iter()
        .map(|o| MeanValueProfile::new(state, o))
        .collect::<Result<_>>()?;
    let scale = profiles.iter().fold(0.0f64, |m, p| m.max(p.stationary.re.abs()));
    Ok(times
        .iter()
        .map(|&t| ClassicalDeviation {
            t,
            scale,
            deviation: profiles.iter().fold(0.0f64, |m, p| m.max(p.off_diagonal(t).re.abs())),
        })
        .collect())
}
