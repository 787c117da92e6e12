//! Metric registry and the computations behind each manifest subcommand.
//!
//! Every manifest names a subcommand and a list of metrics from [`REGISTRY`].
//! Metrics are grouped; a run computes only the groups its metrics need.

use crate::emit::linspace;
use crate::error::{CliError, CliResult};
use decolab_core::bath::{
    asymptotic_spreads, completeness, moments, spiral_trace, BathConfig, BathModel, OscillatorInitialState,
};
use decolab_core::evolution::{asymptotic_state, discrete_obstruction, mean_value_at, weak_limit_decay, FitConfig};
use decolab_core::fit::{exp_fit, scaling_order};
use decolab_core::histories::{
    classify, flatten_state, insensitivity_check, records_check, ConsistencyLevel, FlattenedState, HistoryChain,
    Tolerances,
};
use decolab_core::instances::{
    lorentzian_coherence_state, random_hermitian, random_observable, random_state, rng, window_observable,
};
use decolab_core::linalg::{self, CMat};
use decolab_core::pointer::{
    displacement_annihilation_check, extract_weights, pointer_basis, state_from_weights, to_pointer_frame,
    PointerFrame, PointerWeights,
};
use decolab_core::spectral::{pair, SpectralModel, StateFunctional};
use decolab_core::wigner::{
    decompose_and_reconstruct, harmonic_eigenfunction, liouville_residual, periodic_grid, phase_space_mean,
    product_residual, weyl_symbol, wigner_transform, HarmonicChart, LiouvilleOptions, PhaseGrid, PositionKernel,
    SeparableHamiltonian, TransformOptions, Widths,
};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Evolve,
    Pointer,
    Wigner,
    Classical,
    Bath,
    Histories,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Evolve => "evolve",
            Subcommand::Pointer => "pointer",
            Subcommand::Wigner => "wigner",
            Subcommand::Classical => "classical",
            Subcommand::Bath => "bath",
            Subcommand::Histories => "histories",
        }
    }

    /// Input file keys a manifest may provide.
    pub fn input_keys(self) -> &'static [&'static str] {
        match self {
            Subcommand::Bath => &["config"],
            Subcommand::Classical => &["weights"],
            _ => &[],
        }
    }
}

pub struct MetricInfo {
    pub name: &'static str,
    pub subcommand: Subcommand,
    pub group: &'static str,
    pub description: &'static str,
}

const fn metric(
    name: &'static str,
    subcommand: Subcommand,
    group: &'static str,
    description: &'static str,
) -> MetricInfo {
    MetricInfo {
        name,
        subcommand,
        group,
        description,
    }
}

use Subcommand::{Bath as B, Classical as C, Evolve as E, Histories as H, Pointer as P, Wigner as W};

pub const REGISTRY: &[MetricInfo] = &[
    metric(
        "bath.completeness",
        B,
        "completeness",
        "integral of the dressed spectral density",
    ),
    metric(
        "bath.gamma_fit",
        B,
        "spiral",
        "exponential rate of the mean-value spiral radius",
    ),
    metric("bath.golden_rule", B, "spiral", "pi V^2 at the fitted rotation rate"),
    metric("bath.gamma_ratio", B, "spiral", "gamma_fit / golden_rule"),
    metric("bath.spiral_r_squared", B, "spiral", "R^2 of the log-linear radius fit"),
    metric("bath.rotation_rate", B, "spiral", "winding rate of the spiral"),
    metric(
        "bath.delta_q_late",
        B,
        "late",
        "position spread at late_factor / gamma_fit",
    ),
    metric(
        "bath.delta_p_late",
        B,
        "late",
        "momentum spread at late_factor / gamma_fit",
    ),
    metric(
        "bath.uncertainty_late",
        B,
        "late",
        "spread product at late_factor / gamma_fit",
    ),
    metric(
        "bath.asymptotic_delta_q",
        B,
        "late",
        "closed-form t -> infinity position spread",
    ),
    metric(
        "bath.asymptotic_delta_p",
        B,
        "late",
        "closed-form t -> infinity momentum spread",
    ),
    metric(
        "bath.asymptotic_product",
        B,
        "late",
        "closed-form t -> infinity spread product",
    ),
    metric(
        "evolve.late_deviation",
        E,
        "decay",
        "|<O>(t) - <O>_*| at late_factor / gamma",
    ),
    metric(
        "evolve.fitted_rate",
        E,
        "decay",
        "fitted decay rate of the off-diagonal mean value",
    ),
    metric("evolve.rate_ratio", E, "decay", "fitted_rate / (2 gamma)"),
    metric("evolve.fit_r_squared", E, "decay", "R^2 of the decay fit"),
    metric(
        "evolve.residue_error",
        E,
        "residue",
        "max relative deviation from the pole-residue oracle",
    ),
    metric(
        "evolve.obstruction_ratio",
        E,
        "obstruction",
        "late / early oscillation amplitude for bound states",
    ),
    metric(
        "pointer.offdiag_max",
        P,
        "frame",
        "largest off-diagonal entry of bound and diagonal blocks in the frame",
    ),
    metric(
        "pointer.pairing_invariance",
        P,
        "frame",
        "largest pairing change under the frame change",
    ),
    metric("pointer.displacement_abs", P, "displacement", "max |(rho_*|[P_i, O])|"),
    metric(
        "pointer.displacement_relative",
        P,
        "displacement",
        "max |(rho_*|[P_i, O])| / max|O|",
    ),
    metric(
        "wigner.normalization_error",
        W,
        "normalization",
        "max |integral W - 1| for oscillator eigenstates",
    ),
    metric(
        "wigner.mean_trace_error",
        W,
        "mean",
        "max |phase-space mean - Tr(rho O)|",
    ),
    metric(
        "wigner.liouville_order",
        W,
        "liouville",
        "measured hbar order of the bracket residual",
    ),
    metric(
        "wigner.product_order",
        W,
        "product",
        "measured hbar order of the product residual",
    ),
    metric(
        "classical.error_ratio_1",
        C,
        "reconstruction",
        "error(sigma_2) / error(sigma_1)",
    ),
    metric(
        "classical.error_ratio_2",
        C,
        "reconstruction",
        "error(sigma_3) / error(sigma_2)",
    ),
    metric(
        "classical.error_over_sigma",
        C,
        "reconstruction",
        "max over widths of error / sigma",
    ),
    metric(
        "classical.min_density",
        C,
        "reconstruction",
        "smallest reconstructed value",
    ),
    metric(
        "classical.marginal_error",
        C,
        "reconstruction",
        "trajectory marginal vs momentum density",
    ),
    metric(
        "histories.pointer_level",
        H,
        "pointer",
        "consistency level of the pointer family (0 none .. 3 matrix)",
    ),
    metric(
        "histories.pointer_matrix_violation",
        H,
        "pointer",
        "largest trace norm of off-diagonal M",
    ),
    metric(
        "histories.mbasis_level",
        H,
        "mbasis",
        "consistency level of the original-basis family",
    ),
    metric(
        "histories.mbasis_matrix_violation",
        H,
        "mbasis",
        "largest trace norm of off-diagonal M",
    ),
    metric(
        "histories.mbasis_offdiag",
        H,
        "mbasis",
        "largest off-diagonal entry of the flattened state",
    ),
    metric(
        "histories.insensitivity",
        H,
        "insensitivity",
        "Frobenius change of rho under the family pinching",
    ),
    metric("histories.records_identity", H, "records", "max |Tr(R rho R') - D|"),
    metric("histories.records_residual", H, "records", "max ||C^dag rho - R rho||"),
];

pub fn metric_info(name: &str) -> Option<&'static MetricInfo> {
    REGISTRY.iter().find(|m| m.name == name)
}

pub type Params = BTreeMap<String, serde_json::Value>;
pub type Inputs = BTreeMap<String, PathBuf>;
pub type Metrics = BTreeMap<String, f64>;

fn parse_params<T: DeserializeOwned>(p: &Params) -> CliResult<T> {
    let obj: serde_json::Map<String, serde_json::Value> = p.clone().into_iter().collect();
    serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| CliError::Input(format!("params: {e}")))
}

fn no_fit(what: &str) -> CliError {
    CliError::NonConvergence(format!("{what}: no acceptable fit"))
}

/// Computes the groups needed by `metrics` and returns every metric they produce.
pub fn compute(sub: Subcommand, metrics: &[&str], params: &Params, inputs: &Inputs) -> CliResult<Metrics> {
    let mut groups = BTreeSet::new();
    for name in metrics {
        let info = metric_info(name).ok_or_else(|| CliError::Input(format!("unknown metric {name:?}")))?;
        if info.subcommand != sub {
            return Err(CliError::Input(format!(
                "metric {name:?} belongs to {}, not {}",
                info.subcommand.name(),
                sub.name()
            )));
        }
        groups.insert(info.group);
    }
    for key in inputs.keys() {
        if !sub.input_keys().contains(&key.as_str()) {
            return Err(CliError::Input(format!("{} takes no input {key:?}", sub.name())));
        }
    }
    match sub {
        Subcommand::Bath => bath(&groups, params, inputs),
        Subcommand::Evolve => evolve(&groups, params),
        Subcommand::Pointer => pointer(&groups, params),
        Subcommand::Wigner => wigner(&groups, params),
        Subcommand::Classical => classical(params, inputs),
        Subcommand::Histories => histories(&groups, params),
    }
}

// ---- bath ----

/// Bath model plus an optional initial state, as read by `bath --config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BathFile {
    #[serde(flatten)]
    pub model: BathConfig,
    #[serde(default)]
    pub init: Option<OscillatorInitialState>,
}

pub fn default_init() -> OscillatorInitialState {
    OscillatorInitialState::coherent(1.0, 0.5)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BathParams {
    model: BathConfig,
    init: OscillatorInitialState,
    fit_window: [f64; 2],
    dt: f64,
    late_factor: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            model: BathConfig::default(),
            init: default_init(),
            fit_window: [5.0, 50.0],
            dt: 0.25,
            late_factor: 40.0,
        }
    }
}

fn steps(a: f64, b: f64, dt: f64) -> CliResult<Vec<f64>> {
    if !(dt > 0.0 && b > a) {
        return Err(CliError::Input(format!("bad sampling [{a}, {b}] step {dt}")));
    }
    let n = ((b - a) / dt).round() as usize + 1;
    Ok(linspace(a, b, n.max(2)))
}

fn bath(groups: &BTreeSet<&str>, params: &Params, inputs: &Inputs) -> CliResult<Metrics> {
    let mut p: BathParams = parse_params(params)?;
    if let Some(path) = inputs.get("config") {
        let file: BathFile = decolab_core::io::read_json(path)?;
        p.model = file.model;
        if let Some(init) = file.init {
            p.init = init;
        }
    }
    let model = BathModel::new(p.model)?;
    let mut out = Metrics::new();
    if groups.contains("completeness") {
        out.insert("bath.completeness".into(), completeness(&model).value);
    }
    if groups.contains("spiral") || groups.contains("late") {
        let times = steps(p.fit_window[0], p.fit_window[1], p.dt)?;
        let s = spiral_trace(&model, &p.init, &times)?;
        let fit = exp_fit(&times, &s.radius).ok_or_else(|| no_fit("spiral radius"))?;
        let golden = s.golden_rule.ok_or_else(|| no_fit("spiral rotation"))?;
        out.insert("bath.gamma_fit".into(), fit.rate);
        out.insert("bath.golden_rule".into(), golden);
        out.insert("bath.gamma_ratio".into(), fit.rate / golden);
        out.insert("bath.spiral_r_squared".into(), fit.r_squared);
        out.insert("bath.rotation_rate".into(), s.rotation_rate.unwrap_or(f64::NAN));
        if groups.contains("late") {
            if !(fit.rate > 0.0) {
                return Err(no_fit("spiral does not decay"));
            }
            let mo = moments(&model, &p.init, p.late_factor / fit.rate)?;
            let (dq, dp) = (mo.var_q().sqrt(), mo.var_p().sqrt());
            out.insert("bath.delta_q_late".into(), dq);
            out.insert("bath.delta_p_late".into(), dp);
            out.insert("bath.uncertainty_late".into(), dq * dp);
            let (aq, ap) = asymptotic_spreads(&model);
            out.insert("bath.asymptotic_delta_q".into(), aq);
            out.insert("bath.asymptotic_delta_p".into(), ap);
            out.insert("bath.asymptotic_product".into(), aq * ap);
        }
    }
    Ok(out)
}

// ---- evolve ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvolveParams {
    omega0: f64,
    omega_max: f64,
    nodes: usize,
    center: f64,
    gamma: f64,
    amp: f64,
    bound_weight: f64,
    dt: f64,
    t_max: f64,
    late_factor: f64,
    residue_times: Vec<f64>,
    energies: Vec<f64>,
    seed: u64,
    window: [f64; 2],
    sample_dt: f64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            omega0: -1.0,
            omega_max: 10.0,
            nodes: 801,
            center: 5.0,
            gamma: 0.2,
            amp: 0.05,
            bound_weight: 0.3,
            dt: 0.25,
            t_max: 50.0,
            late_factor: 10.0,
            residue_times: vec![5.0, 10.0, 20.0, 30.0],
            energies: vec![-1.0, -0.45],
            seed: 11,
            window: [100.0, 200.0],
            sample_dt: 0.01,
        }
    }
}

/// `|int g h e^{-i w t}|^2` from the pole of the Lorentzian at `center - i gamma`.
fn residue_oracle(p: &EvolveParams, t: f64) -> f64 {
    let z = Complex64::new(p.center, -p.gamma);
    let h = (z * PI / p.omega_max).sin().powi(4);
    (p.amp * PI * h * (Complex64::new(0.0, -1.0) * z * t).exp()).norm_sqr()
}

fn evolve(groups: &BTreeSet<&str>, params: &Params) -> CliResult<Metrics> {
    let p: EvolveParams = parse_params(params)?;
    let mut out = Metrics::new();
    if groups.contains("decay") || groups.contains("residue") {
        let model = SpectralModel::uniform(p.omega0, p.omega_max, p.nodes, vec![1])?;
        let rho = lorentzian_coherence_state(&model, p.center, p.gamma, p.amp, p.bound_weight);
        let o = window_observable(&model);
        let stationary = pair(&asymptotic_state(&rho), &o)?;
        if groups.contains("decay") {
            let late = mean_value_at(&rho, &o, p.late_factor / p.gamma)? - stationary;
            out.insert("evolve.late_deviation".into(), late.abs());
            let times = steps(0.0, p.t_max, p.dt)?;
            let series = weak_limit_decay(&rho, &o, &times, Some(FitConfig::default()))?;
            let rate = series.fitted_rate.ok_or_else(|| no_fit("off-diagonal decay"))?;
            out.insert("evolve.fitted_rate".into(), rate);
            out.insert("evolve.rate_ratio".into(), rate / (2.0 * p.gamma));
            out.insert("evolve.fit_r_squared".into(), series.r_squared.unwrap_or(f64::NAN));
        }
        if groups.contains("residue") {
            let mut worst = 0.0f64;
            for &t in &p.residue_times {
                let num = mean_value_at(&rho, &o, t)? - stationary;
                let exact = residue_oracle(&p, t);
                worst = worst.max((num - exact).abs() / exact);
            }
            out.insert("evolve.residue_error".into(), worst);
        }
    }
    if groups.contains("obstruction") {
        let n = p.energies.len();
        let mut g = rng(p.seed);
        let rho = random_hermitian(&mut g, n);
        let obs = random_hermitian(&mut g, n);
        let times = steps(p.window[0], p.window[1], p.sample_dt)?;
        let r = discrete_obstruction(&p.energies, &rho, &obs, &times, None)?;
        out.insert("evolve.obstruction_ratio".into(), r.ratio);
    }
    Ok(out)
}

// ---- pointer ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PointerParams {
    instances: u64,
    seed: u64,
    omega0: f64,
    omega_max: f64,
    nodes: usize,
    m_dims: Vec<usize>,
    probes: usize,
    probe_seed: u64,
}

impl Default for PointerParams {
    fn default() -> Self {
        Self {
            instances: 100,
            seed: 1000,
            omega0: -0.5,
            omega_max: 2.0,
            nodes: 5,
            m_dims: vec![2],
            probes: 20,
            probe_seed: 77,
        }
    }
}

fn frame_offdiag(rho: &StateFunctional, f: &PointerFrame) -> CliResult<f64> {
    let d = to_pointer_frame(rho, f)?;
    Ok(std::iter::once(&d.blocks.bound)
        .chain(&d.blocks.diag)
        .map(linalg::max_offdiag_abs)
        .fold(0.0, f64::max))
}

fn pointer(groups: &BTreeSet<&str>, params: &Params) -> CliResult<Metrics> {
    let p: PointerParams = parse_params(params)?;
    let model = SpectralModel::uniform(p.omega0, p.omega_max, p.nodes, p.m_dims.clone())?;
    let mut out = Metrics::new();
    if groups.contains("frame") {
        let (mut offdiag, mut pairing) = (0.0f64, 0.0f64);
        for seed in p.seed..p.seed + p.instances {
            let mut g = rng(seed);
            let rho = random_state(&mut g, &model);
            let o = random_observable(&mut g, &model);
            let f = pointer_basis(&rho)?;
            offdiag = offdiag.max(frame_offdiag(&rho, &f)?);
            let a = pair(&rho, &o)?;
            let b = pair(&to_pointer_frame(&rho, &f)?, &to_pointer_frame(&o, &f)?)?;
            pairing = pairing.max((a - b).abs());
        }
        out.insert("pointer.offdiag_max".into(), offdiag);
        out.insert("pointer.pairing_invariance".into(), pairing);
    }
    if groups.contains("displacement") {
        let mut g = rng(p.probe_seed);
        let star = asymptotic_state(&random_state(&mut g, &model));
        let f = pointer_basis(&star)?;
        let probes: Vec<_> = (0..p.probes).map(|_| random_observable(&mut g, &model)).collect();
        let r = displacement_annihilation_check(&star, &f, &probes)?;
        out.insert("pointer.displacement_abs".into(), r.max_abs);
        out.insert("pointer.displacement_relative".into(), r.max_relative);
    }
    Ok(out)
}

// ---- wigner ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WignerParams {
    hbars: Vec<f64>,
    seeds: u64,
    liouville_points: usize,
    liouville_length: f64,
    product_points: usize,
    product_length: f64,
}

impl Default for WignerParams {
    fn default() -> Self {
        Self {
            hbars: vec![0.1, 0.05, 0.025],
            seeds: 10,
            liouville_points: 401,
            liouville_length: 8.0,
            product_points: 241,
            product_length: 12.0,
        }
    }
}

/// Random combination of the lowest oscillator eigenfunctions; a density
/// matrix when `positive`.
fn smooth_kernel(seed: u64, q: &[f64], hbar: f64, levels: usize, positive: bool) -> CliResult<PositionKernel> {
    let mut c = random_hermitian(&mut rng(seed), levels);
    if positive {
        c = &c * c.adjoint();
        let tr = c.trace();
        c /= tr;
    }
    let basis = CMat::from_fn(q.len(), levels, |a, n| {
        Complex64::from(harmonic_eigenfunction(q[a], n, 1.0, 1.0, hbar))
    });
    Ok(PositionKernel::new(q.to_vec(), &basis * c * basis.adjoint(), hbar)?)
}

fn wigner(groups: &BTreeSet<&str>, params: &Params) -> CliResult<Metrics> {
    let p: WignerParams = parse_params(params)?;
    let mut out = Metrics::new();
    if groups.contains("normalization") {
        let q = periodic_grid(128, 16.0);
        let mut worst = 0.0f64;
        for n in 0..2 {
            let w = wigner_transform(&PositionKernel::harmonic_eigenstate(&q, 1.0, n, 1.0, 1.0)?)?;
            worst = worst.max((w.integral() - 1.0).abs());
        }
        out.insert("wigner.normalization_error".into(), worst);
    }
    if groups.contains("mean") {
        let q = periodic_grid(64, 16.0);
        let mut worst = 0.0f64;
        for seed in 0..p.seeds {
            let rho = smooth_kernel(100 + seed, &q, 1.0, 6, true)?;
            let obs = smooth_kernel(200 + seed, &q, 1.0, 6, false)?;
            let w = wigner_transform(&rho)?;
            let o = weyl_symbol(&obs, TransformOptions::default())?.re();
            let trace = rho.trace_product(&obs)?;
            worst = worst.max((phase_space_mean(&w, &o)? - trace.re).abs());
        }
        out.insert("wigner.mean_trace_error".into(), worst);
    }
    if groups.contains("liouville") {
        let h = SeparableHamiltonian {
            mass: 1.0,
            potential: vec![0.0, 0.0, 0.5, 0.0, 0.5],
        };
        let q = periodic_grid(p.liouville_points, p.liouville_length);
        let res = p
            .hbars
            .iter()
            .map(|&hb| {
                let k = PositionKernel::mixed_gaussian(&q, hb, (0.3, -0.2), 0.5, 0.5)?;
                Ok(liouville_residual(&k, &h, LiouvilleOptions::default())?.l2)
            })
            .collect::<CliResult<Vec<f64>>>()?;
        let order = scaling_order(&p.hbars, &res).ok_or_else(|| no_fit("bracket residual order"))?;
        out.insert("wigner.liouville_order".into(), order);
    }
    if groups.contains("product") {
        let q = periodic_grid(p.product_points, p.product_length);
        let res = p
            .hbars
            .iter()
            .map(|&hb| {
                let o1 = PositionKernel::from_gaussian_symbol(&q, hb, |x| (-x * x / 2.0).exp(), 0.3, 0.25)?;
                let o2 =
                    PositionKernel::from_gaussian_symbol(&q, hb, |x| (-(x - 0.5).powi(2) / 2.0).exp(), -0.1, 0.25)?;
                Ok(product_residual(&o1, &o2, None)?.l2)
            })
            .collect::<CliResult<Vec<f64>>>()?;
        let order = scaling_order(&p.hbars, &res).ok_or_else(|| no_fit("product residual order"))?;
        out.insert("wigner.product_order".into(), order);
    }
    Ok(out)
}

// ---- classical ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ClassicalParams {
    omega0: f64,
    omega_max: f64,
    nodes: usize,
    bound_weight: f64,
    /// Lorentzian coherence on top of the diagonal weights; removed by the
    /// pointer step.
    coherence: [f64; 3],
    widths: Vec<f64>,
    extent: f64,
    points: usize,
    chart: HarmonicChart,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            omega0: -0.5,
            omega_max: 12.0,
            nodes: 2401,
            bound_weight: 0.2,
            coherence: [5.0, 0.2, 0.05],
            widths: vec![0.1, 0.05, 0.025],
            extent: 5.5,
            points: 81,
            chart: HarmonicChart { omega: 1.0, e0: -2.0 },
        }
    }
}

/// Diagonal weights `w e^{-w}` plus a bound population.
fn smooth_weights(model: &SpectralModel, bound: f64) -> PointerWeights {
    let raw: Vec<f64> = model.grid.iter().map(|w| w * (-w).exp()).collect();
    let norm = model.integrate(&raw);
    PointerWeights {
        bound: vec![bound],
        cont: raw.iter().map(|w| vec![(1.0 - bound) * w / norm]).collect(),
    }
}

/// A decohering state runs through the pointer step before reconstruction.
fn pointer_weights(p: &ClassicalParams) -> CliResult<(SpectralModel, PointerWeights)> {
    let model = SpectralModel::uniform(p.omega0, p.omega_max, p.nodes, vec![1])?;
    let mut state = state_from_weights(
        &model,
        &PointerFrame::identity(&model),
        &smooth_weights(&model, p.bound_weight),
    )?;
    let [center, gamma, amp] = p.coherence;
    state.blocks.kernel = lorentzian_coherence_state(&model, center, gamma, amp, p.bound_weight)
        .blocks
        .kernel;
    let frame = pointer_basis(&state)?;
    let w = extract_weights(&asymptotic_state(&state), &frame)?;
    Ok((model, w))
}

fn classical(params: &Params, inputs: &Inputs) -> CliResult<Metrics> {
    let p: ClassicalParams = parse_params(params)?;
    if p.widths.len() < 3 {
        return Err(CliError::Input("classical needs at least three widths".into()));
    }
    let (model, weights) = match inputs.get("weights") {
        Some(path) => crate::commands::read_weights(path)?,
        None => pointer_weights(&p)?,
    };
    let grid = PhaseGrid::uniform((-p.extent, p.extent), p.points, (-p.extent, p.extent), p.points);
    let mut errors = Vec::new();
    let (mut min_density, mut marginal, mut over_sigma) = (f64::INFINITY, 0.0f64, 0.0f64);
    for &s in &p.widths {
        let rep = decompose_and_reconstruct(&weights, &model, Widths::uniform(s), &p.chart, &grid)?;
        min_density = min_density.min(rep.min_value);
        marginal = marginal.max(rep.marginal_error);
        over_sigma = over_sigma.max(rep.max_error / s);
        errors.push(rep.max_error);
    }
    let mut out = Metrics::new();
    out.insert("classical.error_ratio_1".into(), errors[1] / errors[0]);
    out.insert("classical.error_ratio_2".into(), errors[2] / errors[1]);
    out.insert("classical.error_over_sigma".into(), over_sigma);
    out.insert("classical.min_density".into(), min_density);
    out.insert("classical.marginal_error".into(), marginal);
    Ok(out)
}

// ---- histories ----

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HistoriesParams {
    omega0: f64,
    omega_max: f64,
    nodes: usize,
    m_dims: Vec<usize>,
    seed: u64,
    mbasis_seed: u64,
    times: Vec<f64>,
    mbasis_times: Vec<f64>,
    records_times: Vec<f64>,
    tol: f64,
}

impl Default for HistoriesParams {
    fn default() -> Self {
        Self {
            omega0: -1.0,
            omega_max: 2.0,
            nodes: 5,
            m_dims: vec![2],
            seed: 21,
            mbasis_seed: 22,
            times: vec![0.0, 1.0],
            mbasis_times: vec![0.0, 2.0],
            records_times: vec![0.0, 1.5],
            tol: 1e-10,
        }
    }
}

pub fn level_number(l: ConsistencyLevel) -> f64 {
    match l {
        ConsistencyLevel::None => 0.0,
        ConsistencyLevel::Weak => 1.0,
        ConsistencyLevel::Medium => 2.0,
        ConsistencyLevel::Matrix => 3.0,
    }
}

fn histories(groups: &BTreeSet<&str>, params: &Params) -> CliResult<Metrics> {
    let p: HistoriesParams = parse_params(params)?;
    let model = SpectralModel::uniform(p.omega0, p.omega_max, p.nodes, p.m_dims.clone())?;
    let tol = Tolerances::uniform(p.tol);
    let final_state = |seed| asymptotic_state(&random_state(&mut rng(seed), &model));
    let pointer_flat = || -> CliResult<FlattenedState> {
        let star = final_state(p.seed);
        let frame = pointer_basis(&star)?;
        Ok(flatten_state(&star, &frame, &model)?)
    };
    let mut out = Metrics::new();
    let flat = if groups.contains("pointer") || groups.contains("insensitivity") || groups.contains("records") {
        Some(pointer_flat()?)
    } else {
        None
    };
    if let Some(flat) = &flat {
        let fam = flat.label_family();
        let h = flat.hamiltonian();
        if groups.contains("pointer") {
            let v = classify(&flat.rho, &fam, &p.times, &h, tol)?;
            out.insert("histories.pointer_level".into(), level_number(v.level));
            out.insert("histories.pointer_matrix_violation".into(), v.max_violation.matrix);
        }
        if groups.contains("insensitivity") {
            out.insert(
                "histories.insensitivity".into(),
                insensitivity_check(&flat.rho, &fam)?.1,
            );
        }
        if groups.contains("records") {
            let n = fam.len();
            let k = p.records_times.len();
            let chains = (0..n.pow(k as u32))
                .map(|mut idx| {
                    let mut labels = vec![0; k];
                    for slot in labels.iter_mut().rev() {
                        *slot = idx % n;
                        idx /= n;
                    }
                    HistoryChain::new(p.records_times.clone(), labels, h.clone())
                })
                .collect::<decolab_core::error::Result<Vec<_>>>()?;
            let r = records_check(&flat.rho, &fam, &chains, tol)?;
            out.insert("histories.records_identity".into(), r.trace_identity);
            out.insert("histories.records_residual".into(), r.record_residual);
        }
    }
    if groups.contains("mbasis") {
        let star = final_state(p.mbasis_seed);
        let flat = flatten_state(&star, &PointerFrame::identity(&model), &model)?;
        let v = classify(
            &flat.rho,
            &flat.label_family(),
            &p.mbasis_times,
            &flat.hamiltonian(),
            tol,
        )?;
        out.insert("histories.mbasis_level".into(), level_number(v.level));
        out.insert("histories.mbasis_matrix_violation".into(), v.max_violation.matrix);
        out.insert("histories.mbasis_offdiag".into(), linalg::max_offdiag_abs(&flat.rho));
    }
    Ok(out)
}
