//! Input parsing and the error-to-exit-code policy.

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// CLI failure with its exit code: 1 input error, 2 budget/feasibility
/// refusal, 3 internal invariant violation.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<qshift::Error> for CliError {
    fn from(e: qshift::Error) -> Self {
        let code = if e.is_budget() {
            2
        } else if e.is_input() {
            1
        } else {
            3
        };
        let mut message = e.to_string();
        if e.is_budget() {
            message.push_str(" (try --mode asymptotic)");
        }
        CliError { message, code }
    }
}

/// Reads one observation per line; blank lines and `#` comments are
/// skipped. Errors name the file and line.
pub fn read_observations(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|e| {
            CliError::input(format!(
                "{}:{}: cannot parse '{trimmed}' as a number ({e})",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::input(format!(
            "{}: no observations found",
            path.display()
        )));
    }
    Ok(values)
}

/// FNV-1a 64-bit digest of the raw input bytes, for report provenance.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn digest_files(paths: &[&Path]) -> Result<String, CliError> {
    let mut all = Vec::new();
    for p in paths {
        let bytes =
            std::fs::read(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        all.extend_from_slice(&bytes);
        all.push(0);
    }
    Ok(format!("fnv1a64:{:016x}", fnv1a64(&all)))
}
