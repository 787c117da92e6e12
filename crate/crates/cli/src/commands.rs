//! Direct subcommands: read inputs, compute, emit CSV or JSON.

use crate::args::{BathArgs, ClassicalArgs, EvolveArgs, HistoriesArgs, PointerArgs, WignerArgs};
use crate::emit::{self, fmt_f64, parse_f64, Table};
use crate::error::{CliError, CliResult};
use crate::experiments::{default_init, BathFile};
use decolab_core::bath::{moments, BathModel};
use decolab_core::evolution::{asymptotic_state, MeanValueProfile};
use decolab_core::histories::{classify, ProjectorFamily, Tolerances};
use decolab_core::io::{load_observable, load_state, matrix_from_json, read_json, KernelJson, MatrixJson};
use decolab_core::pointer::{extract_weights, pointer_basis, PointerWeights};
use decolab_core::spectral::SpectralModel;
use decolab_core::wigner::{
    decompose_and_reconstruct, trajectory_density, wigner_transform_with, HarmonicChart, PhaseGrid, TrajectoryDensity,
    TransformOptions, Widths,
};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const EVOLVE_HEADER: &[&str] = &["t", "mean", "offdiag"];
pub const WEIGHTS_HEADER: &[&str] = &["kind", "x", "dw", "r", "weight"];
pub const WIGNER_HEADER: &[&str] = &["q", "p", "W"];
pub const CLASSICAL_HEADER: &[&str] = &["q", "p", "W", "trajectory"];
pub const BATH_HEADER: &[&str] = &["t", "meanQ", "meanP", "varQ", "varP"];

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    v.as_deref()
        .ok_or_else(|| CliError::Input(format!("--{flag} is required")))
}

pub fn evolve(a: &EvolveArgs) -> CliResult<()> {
    let state = load_state(required(&a.state, "state")?)?;
    let obs = load_observable(required(&a.obs, "obs")?)?;
    let times = emit::parse_time_range(a.times.as_deref().unwrap_or("0:50:201"))?;
    let profile = MeanValueProfile::new(&state, &obs)?;
    let mut t = Table::new(EVOLVE_HEADER);
    for &s in &times {
        t.push_numbers(&[s, profile.value(s).re, profile.off_diagonal(s).re]);
    }
    emit::output(a.out.as_deref(), &t.to_csv()?)
}

fn weights_table(model: &SpectralModel, w: &PointerWeights) -> Table {
    let mut t = Table::new(WEIGHTS_HEADER);
    for (r, x) in w.bound.iter().enumerate() {
        t.rows.push(vec![
            "bound".into(),
            fmt_f64(model.omega0),
            fmt_f64(0.0),
            r.to_string(),
            fmt_f64(*x),
        ]);
    }
    for (i, ws) in w.cont.iter().enumerate() {
        for (r, x) in ws.iter().enumerate() {
            t.rows.push(vec![
                "cont".into(),
                fmt_f64(model.grid[i]),
                fmt_f64(model.weights[i]),
                r.to_string(),
                fmt_f64(*x),
            ]);
        }
    }
    t
}

/// Reads a weights CSV back into its model and weights.
pub fn read_weights(path: &Path) -> CliResult<(SpectralModel, PointerWeights)> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut omega0 = None;
    let mut bound = Vec::new();
    let (mut grid, mut dw, mut cont): (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in emit::read_csv(path, WEIGHTS_HEADER)?.iter().enumerate() {
        let x = parse_f64(&rec[1], "x")?;
        let q = parse_f64(&rec[2], "dw")?;
        let r: usize = rec[3].parse().map_err(|_| bad(format!("row {}: bad rank", line + 1)))?;
        let w = parse_f64(&rec[4], "weight")?;
        match &rec[0] {
            "bound" => {
                if r != bound.len() || omega0.is_some_and(|o| o != x) {
                    return Err(bad(format!("row {}: bound rows out of order", line + 1)));
                }
                omega0 = Some(x);
                bound.push(w);
            }
            "cont" => {
                if r == 0 {
                    grid.push(x);
                    dw.push(q);
                    cont.push(Vec::new());
                }
                let ok = cont.last().is_some_and(|v| v.len() == r) && grid.last() == Some(&x);
                if !ok {
                    return Err(bad(format!("row {}: continuum rows out of order", line + 1)));
                }
                cont.last_mut().expect("checked above").push(w);
            }
            other => return Err(bad(format!("row {}: unknown kind {other:?}", line + 1))),
        }
    }
    let omega0 = omega0.ok_or_else(|| bad("no bound rows".into()))?;
    let m = bound.len();
    if cont.iter().any(|v| v.len() != m) {
        return Err(bad("every node needs one weight per rank".into()));
    }
    let model = SpectralModel::new(omega0, grid, dw, vec![m])?;
    Ok((model, PointerWeights { bound, cont }))
}

pub fn pointer(a: &PointerArgs) -> CliResult<()> {
    let state = load_state(required(&a.state, "state")?)?;
    let frame = pointer_basis(&state)?;
    let w = extract_weights(&asymptotic_state(&state), &frame)?;
    if let Some(p) = &a.weights {
        emit::write_csv(p, &weights_table(state.model(), &w))?;
    }
    emit::output(a.out.as_deref(), &emit::json_string(&frame)?)
}

pub fn wigner(a: &WignerArgs) -> CliResult<()> {
    let kj: KernelJson = read_json(required(&a.kernel, "kernel")?)?;
    let mut k = kj.to_kernel()?;
    if let Some(h) = a.hbar {
        if !(h > 0.0) {
            return Err(CliError::Input("--hbar must be positive".into()));
        }
        k.hbar = h;
    }
    let opts = TransformOptions {
        p_factor: a.p_factor.unwrap_or(TransformOptions::default().p_factor),
    };
    let w = wigner_transform_with(&k, opts)?;
    let mut t = Table::new(WIGNER_HEADER);
    for (i, &q) in w.grid.q.iter().enumerate() {
        for (j, &p) in w.grid.p.iter().enumerate() {
            t.push_numbers(&[q, p, w.values[(i, j)]]);
        }
    }
    emit::output(a.out.as_deref(), &t.to_csv()?)
}

pub fn classical(a: &ClassicalArgs) -> CliResult<()> {
    let (model, weights) = read_weights(required(&a.weights, "weights")?)?;
    let widths = Widths::uniform(a.widths.unwrap_or(0.05));
    let chart = HarmonicChart::for_model(&model, a.omega.unwrap_or(1.0));
    let extent = a.extent.unwrap_or(4.0);
    let n = a.points.unwrap_or(81);
    if !(extent > 0.0) || n < 2 {
        return Err(CliError::Input(
            "--extent must be positive and --points at least 2".into(),
        ));
    }
    let grid = PhaseGrid::uniform((-extent, extent), n, (-extent, extent), n);
    let rep = decompose_and_reconstruct(&weights, &model, widths, &chart, &grid)?;
    // trajectory of the heaviest continuum shell
    let heaviest = (0..model.k())
        .max_by(|&i, &j| (weights.cont[i][0] * model.weights[i]).total_cmp(&(weights.cont[j][0] * model.weights[j])))
        .ok_or_else(|| CliError::Input("empty grid".into()))?;
    let td = TrajectoryDensity {
        x: model.grid[heaviest],
        r: Vec::new(),
        a0: vec![a.a0.unwrap_or(0.0)],
        widths,
    };
    let traj = trajectory_density(&td, a.t.unwrap_or(0.0), &chart, &grid)?;
    let mut t = Table::new(CLASSICAL_HEADER);
    for (i, &q) in grid.q.iter().enumerate() {
        for (j, &p) in grid.p.iter().enumerate() {
            t.push_numbers(&[q, p, rep.reconstructed.values[(i, j)], traj.values[(i, j)]]);
        }
    }
    emit::output(a.out.as_deref(), &t.to_csv()?)
}

pub fn bath(a: &BathArgs) -> CliResult<()> {
    let file: BathFile = match &a.config {
        Some(p) => read_json(p)?,
        None => BathFile::default(),
    };
    let model = BathModel::new(file.model)?;
    let init = file.init.unwrap_or_else(default_init);
    let times = emit::parse_time_range(a.times.as_deref().unwrap_or("0:50:201"))?;
    let mut t = Table::new(BATH_HEADER);
    for &s in &times {
        let m = moments(&model, &init, s)?;
        t.push_numbers(&[s, m.mean_q, m.mean_p, m.var_q(), m.var_p()]);
    }
    emit::output(a.out.as_deref(), &t.to_csv()?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    projectors: Vec<MatrixJson>,
}

pub fn histories(a: &HistoriesArgs) -> CliResult<()> {
    let rho = matrix_from_json(&read_json::<MatrixJson>(required(&a.rho, "rho")?)?)?;
    let fam: FamilyFile = read_json(required(&a.family, "family")?)?;
    let projectors = fam
        .projectors
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let family = ProjectorFamily::new(projectors)?;
    let h = match &a.hamiltonian {
        Some(p) => matrix_from_json(&read_json::<MatrixJson>(p)?)?,
        None => decolab_core::linalg::zeros(family.dim),
    };
    let times = emit::parse_time_list(a.times.as_deref().unwrap_or("0,1"))?;
    let tol = Tolerances::uniform(a.tol.unwrap_or(Tolerances::default().weak));
    let v = classify(&rho, &family, &times, &h, tol)?;
    emit::output(a.out.as_deref(), &emit::json_string(&v)?)
}
