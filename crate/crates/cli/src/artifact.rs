//! Artifact writing: CSV tables with round-trippable numbers and the JSON
//! summary document.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::CliError;

/// Decimal text with 17 significant digits; `parse(print(x)) == x` exactly
/// for every finite double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, content).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Paths of the files a command produced, plus the echoed configuration that
/// reproduces them.
#[derive(Debug)]
pub struct RunArtifact {
    #[allow(dead_code)]
    pub config_echo: ConfigFile,
    pub series_path: PathBuf,
    pub snapshots_path: Option<PathBuf>,
    pub report_path: PathBuf,
}

impl RunArtifact {
    pub fn describe(&self) -> String {
        let mut parts = vec![
            format!("series: {}", self.series_path.display()),
            format!("summary: {}", self.report_path.display()),
        ];
        if let Some(s) = &self.snapshots_path {
            parts.push(format!("snapshots: {}", s.display()));
        }
        parts.join(", ")
    }
}

/// Final verdict of a command, mapped onto the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    CheckFailed,
    RuntimeFailure,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::CheckFailed => 1,
            Verdict::RuntimeFailure => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::CheckFailed => "fail",
            Verdict::RuntimeFailure => "runtime-failure",
        }
    }
}

/// Write `summary.json` with the fixed top-level keys.
pub fn write_summary(
    out_dir: &Path,
    echo: &ConfigFile,
    results: Value,
    verdict: Verdict,
    failures: &[String],
) -> Result<PathBuf, CliError> {
    let doc = json!({
        "config_echo": echo,
        "results": results,
        "verdict": verdict.label(),
        "failures": failures,
    });
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serialization cannot fail");
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

pub fn write_config_echo(out_dir: &Path, echo: &ConfigFile) -> Result<PathBuf, CliError> {
    let path = out_dir.join("config_echo.json");
    let mut text = serde_json::to_string_pretty(echo).expect("config serialization cannot fail");
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

/// Assemble a CSV document from a header and rows of preformatted cells.
pub fn csv_document(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
