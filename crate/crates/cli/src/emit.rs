//! Deterministic CSV/JSON output and small parsers for series flags.

use crate::error::{CliError, CliResult};
use serde::Serialize;
use std::path::Path;

/// Fixed float formatting: 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table whose numeric cells are already formatted.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| fmt_f64(*x)).collect());
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(e.to_string())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(decolab_core::io::write_text(path, text)?)
}

pub fn write_csv(path: &Path, table: &Table) -> CliResult<()> {
    write_text(path, &table.to_csv()?)
}

pub fn json_string<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(decolab_core::io::to_json_string(value)?)
}

/// Writes to `path`, or to stdout when absent.
pub fn output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads every record of a CSV file with the given header.
pub fn read_csv(path: &Path, header: &[&str]) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let got = r.headers().map_err(csv_err)?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(CliError::Input(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.records()
        .map(|rec| rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Input(format!("{what}: not a number: {s:?}")))
}

/// `t0:t1:n` gives `n` equally spaced times including both ends.
pub fn parse_time_range(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Input(format!("times must look like t0:t1:n, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let t0 = parse_f64(parts[0], "t0")?;
    let t1 = parse_f64(parts[1], "t1")?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(t1 > t0) {
        return Err(bad());
    }
    Ok(linspace(t0, t1, n))
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + i as f64 * h }).collect()
}

/// Comma-separated list of times.
pub fn parse_time_list(spec: &str) -> CliResult<Vec<f64>> {
    spec.split(',').map(|s| parse_f64(s, "times")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_keeps_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn time_ranges() {
        assert_eq!(parse_time_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_time_range("1:0:3").is_err());
        assert!(parse_time_range("0:1").is_err());
        assert_eq!(parse_time_list("0, 1.5,2").unwrap(), vec![0.0, 1.5, 2.0]);
    }

    #[test]
    fn csv_uses_lf() {
        let mut t = Table::new(&["a", "b"]);
        t.push_numbers(&[1.0, 2.0]);
        let s = t.to_csv().unwrap();
        assert_eq!(s, "a,b\n1.0000000000000000e0,2.0000000000000000e0\n");
    }
}
