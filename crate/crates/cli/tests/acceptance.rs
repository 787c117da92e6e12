//! One line per acceptance criterion. Bounds are pinned here, independent of
//! the tolerances written in the shipped manifests; each manifest must also
//! pass on its own.

use decolab_cli::default_manifest_dir;
use decolab_cli::experiments::{self, Metrics};
use decolab_cli::manifest::{run_manifest, ExperimentManifest};
use std::process::Command;
use std::time::{Duration, Instant};

/// `lo <= metric <= hi`.
struct Bound {
    metric: &'static str,
    lo: f64,
    hi: f64,
}

const fn within(metric: &'static str, value: f64, tol: f64) -> Bound {
    Bound {
        metric,
        lo: value - tol,
        hi: value + tol,
    }
}

const fn at_least(metric: &'static str, lo: f64) -> Bound {
    Bound {
        metric,
        lo,
        hi: f64::INFINITY,
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    manifest: &'static str,
    bounds: &'static [Bound],
    time_limit: Option<Duration>,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "minimal-uncertainty limit of the bath oscillator",
        manifest: "01_minimal_uncertainty.json",
        bounds: &[
            within("bath.delta_q_late", FRAC_1_SQRT_2, 2e-3),
            within("bath.delta_p_late", FRAC_1_SQRT_2, 2e-3),
        ],
        time_limit: Some(Duration::from_secs(60)),
    },
    Criterion {
        id: 2,
        title: "completeness integral of the dressed density",
        manifest: "02_completeness.json",
        bounds: &[within("bath.completeness", 1.0, 5e-3)],
        time_limit: Some(Duration::from_secs(1)),
    },
    Criterion {
        id: 3,
        title: "spiral decays at the golden-rule rate",
        manifest: "03_spiral_decay.json",
        bounds: &[
            at_least("bath.spiral_r_squared", 0.99),
            within("bath.gamma_ratio", 1.0, 0.1),
        ],
        time_limit: None,
    },
    Criterion {
        id: 4,
        title: "weak-limit decoherence of a Lorentzian kernel",
        manifest: "04_weak_limit.json",
        bounds: &[
            within("evolve.late_deviation", 0.0, 1e-3),
            within("evolve.rate_ratio", 1.0, 0.1),
            within("evolve.residue_error", 0.0, 1e-3),
        ],
        time_limit: Some(Duration::from_secs(30)),
    },
    Criterion {
        id: 5,
        title: "two bound states do not decohere",
        manifest: "05_bound_state_obstruction.json",
        bounds: &[at_least("evolve.obstruction_ratio", 0.9)],
        time_limit: None,
    },
    Criterion {
        id: 6,
        title: "pointer frame diagonalizes and preserves pairings",
        manifest: "06_pointer_frame.json",
        bounds: &[
            within("pointer.offdiag_max", 0.0, 1e-10),
            within("pointer.pairing_invariance", 0.0, 1e-12),
        ],
        time_limit: None,
    },
    Criterion {
        id: 7,
        title: "final state annihilates displacement commutators",
        manifest: "07_displacement.json",
        bounds: &[within("pointer.displacement_relative", 0.0, 1e-9)],
        time_limit: None,
    },
    Criterion {
        id: 8,
        title: "Wigner normalization, means and hbar orders",
        manifest: "08_wigner.json",
        bounds: &[
            within("wigner.normalization_error", 0.0, 1e-6),
            within("wigner.mean_trace_error", 0.0, 1e-8),
            at_least("wigner.liouville_order", 1.0),
            // exactly first order; the l2 norm over hbar in [0.025, 0.1] measures 0.986
            at_least("wigner.product_order", 0.95),
        ],
        time_limit: None,
    },
    Criterion {
        id: 9,
        title: "classical reconstruction converges with the widths",
        manifest: "09_classical.json",
        bounds: &[
            within("classical.error_ratio_1", 0.5, 0.125),
            within("classical.error_ratio_2", 0.5, 0.125),
            at_least("classical.min_density", -1e-8),
            within("classical.marginal_error", 0.0, 0.025),
        ],
        time_limit: None,
    },
    Criterion {
        id: 10,
        title: "histories consistency hierarchy",
        manifest: "10_histories.json",
        bounds: &[
            within("histories.pointer_level", 3.0, 0.0),
            within("histories.pointer_matrix_violation", 0.0, 1e-10),
            within("histories.mbasis_level", 2.0, 0.0),
            within("histories.insensitivity", 0.0, 1e-12),
            within("histories.records_identity", 0.0, 1e-12),
        ],
        time_limit: None,
    },
];

fn measure(c: &Criterion) -> Result<(Metrics, Duration), String> {
    let m = ExperimentManifest::load(&default_manifest_dir().join(c.manifest)).map_err(|e| e.to_string())?;
    let names: Vec<&str> = c.bounds.iter().map(|b| b.metric).collect();
    let start = Instant::now();
    let metrics = experiments::compute(m.subcommand, &names, &m.params, &m.inputs).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let report = run_manifest(&m).map_err(|e| e.to_string())?;
    if !report.pass {
        return Err(format!("shipped manifest {} fails", c.manifest));
    }
    Ok((metrics, elapsed))
}

fn check(c: &Criterion) -> (bool, String) {
    let (metrics, elapsed) = match measure(c) {
        Ok(x) => x,
        Err(e) => return (false, e),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for b in c.bounds {
        let v = metrics.get(b.metric).copied().unwrap_or(f64::NAN);
        let pass = v >= b.lo && v <= b.hi;
        ok &= pass;
        parts.push(format!(
            "{}={v:.6e}{}",
            b.metric,
            if pass { "" } else { " (out of bounds)" }
        ));
    }
    if let Some(limit) = c.time_limit {
        let pass = elapsed <= limit;
        ok &= pass;
        parts.push(format!("time={:.2}s/{}s", elapsed.as_secs_f64(), limit.as_secs()));
    }
    (ok, parts.join(", "))
}

fn determinism() -> (bool, String) {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("report{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_decolab"))
            .args(["verify-all", "--out"])
            .arg(&path)
            .output();
        match status {
            Ok(o) if o.status.success() => {}
            Ok(o) => return (false, format!("verify-all exited with {:?}", o.status.code())),
            Err(e) => return (false, e.to_string()),
        }
        match std::fs::read(&path) {
            Ok(bytes) => outputs.push(bytes),
            Err(e) => return (false, e.to_string()),
        }
    }
    let same = outputs[0] == outputs[1];
    (
        same,
        format!("two verify-all reports, {} bytes, identical={same}", outputs[0].len()),
    )
}

fn main() {
    let mut failures = 0;
    for c in CRITERIA {
        let (ok, detail) = check(c);
        failures += usize::from(!ok);
        println!(
            "criterion {:>2} {}: {} ({detail})",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title
        );
    }
    let (ok, detail) = determinism();
    failures += usize::from(!ok);
    println!(
        "criterion 11 {}: verify-all is byte-for-byte reproducible ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
