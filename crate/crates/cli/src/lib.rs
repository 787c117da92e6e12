//! Command-line front end: subcommands, config defaults, manifests.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod manifest;

use args::{Cli, Command};
use clap::Parser;
use error::{CliError, CliResult};
use std::ffi::OsString;
use std::path::PathBuf;

/// Shipped manifests, one or more per acceptance criterion.
pub fn default_manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("manifests")
}

fn dispatch(cmd: Command) -> CliResult<()> {
    let root = config::config_root();
    let root = root.as_deref();
    match cmd {
        Command::Evolve(a) => commands::evolve(&config::merge(a, "evolve", root)?),
        Command::Pointer(a) => commands::pointer(&config::merge(a, "pointer", root)?),
        Command::Wigner(a) => commands::wigner(&config::merge(a, "wigner", root)?),
        Command::Classical(a) => commands::classical(&config::merge(a, "classical", root)?),
        Command::Bath(a) => commands::bath(&config::merge(a, "bath", root)?),
        Command::Histories(a) => commands::histories(&config::merge(a, "histories", root)?),
        Command::Run(a) => {
            let m = manifest::ExperimentManifest::load(&a.manifest)?;
            let report = manifest::run_manifest(&m)?;
            eprint!("{}", manifest::summary_lines(&report));
            emit::output(a.out.as_deref(), &emit::json_string(&report)?)?;
            let failed = report.metrics.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::MetricFailure(failed));
            }
            Ok(())
        }
        Command::VerifyAll(a) => {
            let dir = a.dir.unwrap_or_else(default_manifest_dir);
            let agg = manifest::verify_all(&dir, a.parallel)?;
            for m in &agg.manifests {
                match (&m.report, &m.error) {
                    (Some(r), _) => eprint!("{}", manifest::summary_lines(r)),
                    (None, Some(e)) => eprintln!("ERROR {}: {e}", m.file),
                    _ => {}
                }
            }
            emit::output(a.out.as_deref(), &emit::json_string(&agg)?)?;
            match agg.exit_code() {
                0 => Ok(()),
                1 => Err(CliError::MetricFailure(
                    agg.manifests.iter().filter(|m| m.exit_code == 1).count(),
                )),
                2 => Err(CliError::Input("one or more manifests could not run".into())),
                _ => Err(CliError::NonConvergence(
                    "one or more manifests did not converge".into(),
                )),
            }
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("decolab: {e}");
            e.exit_code()
        }
    }
}
