//! Report envelopes, pattern files and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use obstruct_core::pattern::{Pattern, Provenance};
use obstruct_core::Ratio;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

pub const TOOL: &str = "obstruct";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level JSON document written by every subcommand.
///
/// `wall_clock_seconds` is the only field that varies between reruns of
/// the same configuration.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport<C, R> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: C,
    pub report: R,
    pub pass: bool,
    pub wall_clock_seconds: f64,
}

impl<C: Serialize, R: Serialize> RunReport<C, R> {
    pub fn new(command: &str, config: C, report: R, pass: bool, seconds: f64) -> Self {
        RunReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config,
            report,
            pass,
            wall_clock_seconds: seconds,
        }
    }
}

/// On-disk pattern: `{n, p, Q, A_num, A_den, indices, provenance,
/// epsilon_verified}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternFile {
    pub n: u64,
    pub p: u32,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "A_num")]
    pub a_num: i64,
    #[serde(rename = "A_den")]
    pub a_den: u64,
    pub indices: Vec<u64>,
    pub provenance: Provenance,
    pub epsilon_verified: Option<f64>,
}

impl PatternFile {
    pub fn new(pattern: &Pattern, p: u32, q: u64, a: Ratio, epsilon: Option<f64>) -> Self {
        PatternFile {
            n: pattern.n() as u64,
            p,
            q,
            a_num: a.num,
            a_den: a.den,
            indices: pattern.indices().to_vec(),
            provenance: pattern.provenance(),
            epsilon_verified: epsilon,
        }
    }

    pub fn pattern(&self) -> Result<Pattern> {
        let universe = match self.provenance {
            Provenance::Elementary => 0,
            _ => self.q,
        };
        let pattern = Pattern::new(self.indices.clone(), universe, self.provenance)?;
        if pattern.n() as u64 != self.n {
            bail!("pattern file lists {} indices but n = {}", pattern.n(), self.n);
        }
        Ok(pattern)
    }

    pub fn leading(&self) -> Result<Ratio> {
        Ok(Ratio::new(self.a_num, self.a_den)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing pattern file {}", path.display()))
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes the report to `path`, or to stdout when no path is given.
pub fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
