//! Browser bindings: bath trajectories, oscillator Wigner functions and
//! history classification.

use decolab_core::bath::{moments, BathConfig, BathModel, OscillatorInitialState};
use decolab_core::histories::{classify, ProjectorFamily, Tolerances};
use decolab_core::instances::{random_hermitian, random_matrix, rng};
use decolab_core::linalg::CMat;
use decolab_core::wigner::{periodic_grid, wigner_transform, PositionKernel};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn js_err(e: decolab_core::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows `[t, <Q>, <P>, var Q, var P]`, flattened, for `n` times in `[0, t_max]`.
#[wasm_bindgen]
pub fn bath_trajectory(coupling: f64, q0: f64, p0: f64, t_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if n < 2 || t_max.is_nan() || t_max <= 0.0 {
        return Err(JsError::new("need n >= 2 and t_max > 0"));
    }
    let model = BathModel::new(BathConfig {
        coupling,
        ..BathConfig::default()
    })
    .map_err(js_err)?;
    let init = OscillatorInitialState::coherent(q0, p0);
    let mut out = Vec::with_capacity(5 * n);
    for i in 0..n {
        let t = t_max * i as f64 / (n - 1) as f64;
        let m = moments(&model, &init, t).map_err(js_err)?;
        out.extend_from_slice(&[t, m.mean_q, m.mean_p, m.var_q(), m.var_p()]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct WignerImage {
    q: Vec<f64>,
    p: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl WignerImage {
    #[wasm_bindgen(getter)]
    pub fn q(&self) -> Vec<f64> {
        self.q.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn p(&self) -> Vec<f64> {
        self.p.clone()
    }

    /// Row-major, one row per `q`.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// Wigner function of the `level`-th oscillator eigenstate.
#[wasm_bindgen]
pub fn oscillator_wigner(level: usize, hbar: f64, points: usize, length: f64) -> Result<WignerImage, JsError> {
    let q = periodic_grid(points, length);
    let k = PositionKernel::harmonic_eigenstate(&q, hbar, level, 1.0, 1.0).map_err(js_err)?;
    let w = wigner_transform(&k).map_err(js_err)?;
    let values = (0..w.grid.q.len())
        .flat_map(|i| (0..w.grid.p.len()).map(move |j| (i, j)))
        .map(|(i, j)| w.values[(i, j)])
        .collect();
    Ok(WignerImage {
        q: w.grid.q.clone(),
        p: w.grid.p.clone(),
        values,
    })
}

/// Classifies the canonical-basis histories of a random density matrix.
/// With `coherent` the state has off-diagonal entries; with `mixing` the
/// Hamiltonian does not commute with the projectors. Returns the verdict as JSON.
#[wasm_bindgen]
pub fn classify_histories(
    dim: usize,
    seed: u64,
    times: Vec<f64>,
    coherent: bool,
    mixing: bool,
) -> Result<String, JsError> {
    if dim == 0 {
        return Err(JsError::new("dimension must be positive"));
    }
    let mut g = rng(seed);
    let a = random_matrix(&mut g, dim);
    let mut rho = &a * a.adjoint();
    if !coherent {
        rho = CMat::from_fn(dim, dim, |i, j| if i == j { rho[(i, j)] } else { Complex64::from(0.0) });
    }
    let tr = rho.trace();
    rho /= tr;
    let h = if mixing {
        random_hermitian(&mut g, dim)
    } else {
        CMat::from_fn(dim, dim, |i, j| Complex64::from(if i == j { i as f64 } else { 0.0 }))
    };
    let v = classify(
        &rho,
        &ProjectorFamily::canonical(dim),
        &times,
        &h,
        Tolerances::default(),
    )
    .map_err(js_err)?;
    decolab_core::io::to_json_string(&v).map_err(js_err)
}
