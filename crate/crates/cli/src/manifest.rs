//! Experiment manifests: run a subcommand's metrics and compare against
//! expected values.

use crate::error::{CliError, CliResult};
use crate::experiments::{self, metric_info, Inputs, Params, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub name: String,
    pub subcommand: Subcommand,
    /// Input files, relative to the manifest's directory.
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub params: Params,
    pub expected: Vec<Expectation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricResult {
    pub metric: String,
    pub expected: f64,
    pub tolerance: f64,
    pub actual: f64,
    /// `actual - expected`.
    pub delta: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub subcommand: Subcommand,
    pub pass: bool,
    pub metrics: Vec<MetricResult>,
}

impl ExperimentManifest {
    /// Reads a manifest and resolves its inputs against the manifest's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut m: ExperimentManifest = decolab_core::io::read_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in m.inputs.values_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Input(format!("manifest {:?}: {msg}", self.name)));
        if self.expected.is_empty() {
            return bad("no expected metrics".into());
        }
        for e in &self.expected {
            let Some(info) = metric_info(&e.metric) else {
                return bad(format!("unknown metric {:?}", e.metric));
            };
            if info.subcommand != self.subcommand {
                return bad(format!(
                    "metric {:?} does not belong to {}",
                    e.metric,
                    self.subcommand.name()
                ));
            }
            if !(e.tolerance >= 0.0 && e.tolerance.is_finite() && e.value.is_finite()) {
                return bad(format!(
                    "metric {:?}: value and tolerance must be finite, tolerance >= 0",
                    e.metric
                ));
            }
        }
        for (key, p) in &self.inputs {
            if !p.is_file() {
                return bad(format!("input {key:?}: missing file {}", p.display()));
            }
        }
        Ok(())
    }
}

pub fn run_manifest(m: &ExperimentManifest) -> CliResult<Report> {
    m.validate()?;
    let names: Vec<&str> = m.expected.iter().map(|e| e.metric.as_str()).collect();
    let actual = experiments::compute(m.subcommand, &names, &m.params, &m.inputs)?;
    let metrics: Vec<MetricResult> = m
        .expected
        .iter()
        .map(|e| {
            let a = actual.get(&e.metric).copied().unwrap_or(f64::NAN);
            let delta = a - e.value;
            MetricResult {
                metric: e.metric.clone(),
                expected: e.value,
                tolerance: e.tolerance,
                actual: a,
                delta,
                pass: delta.abs() <= e.tolerance,
            }
        })
        .collect();
    Ok(Report {
        name: m.name.clone(),
        subcommand: m.subcommand,
        pass: metrics.iter().all(|r| r.pass),
        metrics,
    })
}

/// One line per metric, for the terminal.
pub fn summary_lines(r: &Report) -> String {
    r.metrics
        .iter()
        .map(|m| {
            format!(
                "{} {}/{}: actual {:.6e}, expected {:.6e} +- {:.1e}, delta {:.3e}\n",
                if m.pass { "PASS" } else { "FAIL" },
                r.name,
                m.metric,
                m.actual,
                m.expected,
                m.tolerance,
                m.delta
            )
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestOutcome {
    /// File name within the manifest directory.
    pub file: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub pass: bool,
    pub manifests: Vec<ManifestOutcome>,
}

impl Aggregate {
    /// Most severe exit code among the manifests.
    pub fn exit_code(&self) -> i32 {
        self.manifests.iter().map(|m| m.exit_code).max().unwrap_or(0)
    }
}

pub fn manifest_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: no manifests", dir.display())));
    }
    Ok(files)
}

fn run_file(path: &Path) -> ManifestOutcome {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    match ExperimentManifest::load(path).and_then(|m| run_manifest(&m)) {
        Ok(r) => ManifestOutcome {
            file,
            exit_code: if r.pass {
                0
            } else {
                CliError::MetricFailure(0).exit_code()
            },
            report: Some(r),
            error: None,
        },
        Err(e) => ManifestOutcome {
            file,
            exit_code: e.exit_code(),
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every `*.json` manifest in `dir` in file-name order.
pub fn verify_all(dir: &Path, parallel: bool) -> CliResult<Aggregate> {
    let files = manifest_files(dir)?;
    let manifests: Vec<ManifestOutcome> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = files.iter().map(|f| s.spawn(move || run_file(f))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("manifest worker panicked"))
                .collect()
        })
    } else {
        files.iter().map(|f| run_file(f)).collect()
    };
    Ok(Aggregate {
        pass: manifests.iter().all(|m| m.exit_code == 0),
        manifests,
    })
}
