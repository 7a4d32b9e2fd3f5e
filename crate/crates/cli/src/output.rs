//! File outputs: fixed-format CSV, pretty JSON and the per-run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Twelve significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV text with a header line and LF line endings.
pub fn csv<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.as_ref().join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    tool_version: &'a str,
    schema_version: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    threads: usize,
    duration_seconds: f64,
    outputs: &'a [String],
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    warnings: &'a [String],
}

/// One command invocation: collects output files and warnings, then writes
/// the manifest.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    started: Instant,
    outputs: Vec<String>,
    warnings: Vec<String>,
    pub seed: Option<u64>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(Self {
            command,
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            seed: None,
        })
    }

    /// Path of `<command><suffix>` inside the output directory.
    fn path(&self, suffix: &str) -> (String, PathBuf) {
        let name = format!("{}{suffix}", self.command);
        let path = self.out_dir.join(&name);
        (name, path)
    }

    fn write(&mut self, suffix: &str, text: &str) -> CliResult<PathBuf> {
        let (name, path) = self.path(suffix);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name);
        Ok(path)
    }

    pub fn csv<R: AsRef<[String]>>(&mut self, suffix: &str, header: &[&str], rows: &[R]) -> CliResult<PathBuf> {
        self.write(suffix, &csv(header, rows))
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("output values serialize");
        text.push('\n');
        self.write(suffix, &text)
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    pub fn finish(self, config: &RunConfig) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            tool_version: TOOL_VERSION,
            schema_version: SCHEMA_VERSION,
            config,
            seed: self.seed,
            threads: rayon::current_num_threads(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.outputs,
            warnings: &self.warnings,
        };
        let (_, path) = self.path(".manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        for name in &self.outputs {
            println!("wrote {}", self.out_dir.join(name).display());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_number_format() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(num(123456.0), "1.23456000000e5");
    }

    #[test]
    fn csv_layout() {
        let rows = vec![vec!["1".to_string(), "2".to_string()]];
        assert_eq!(csv(&["a", "b"], &rows), "a,b\n1,2\n");
    }
}
