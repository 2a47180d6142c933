//! `obstruct`: construct and verify obstruction patterns and sets.

mod commands;
mod output;
mod render;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::{
    CalibrateArgs, ConstructArgs, DensityArgs, DiscrepancyArgs, NocopyArgs, RenderArgs, VerifyArgs,
};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "OBSTRUCT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "obstruct", version, about = "Obstruction patterns for large dilates")]
struct Cli {
    /// Worker threads; defaults to $OBSTRUCT_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Key-value file whose entries are read as flags of the subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a pattern (thinned or elementary) and write a pattern file.
    Construct(ConstructArgs),
    /// Check that a pattern hits every short interval.
    Verify(VerifyArgs),
    /// Density of an annular set in a centered cube.
    Density(DensityArgs),
    /// Sample placements of dilated copies and check that none fits in the set.
    Nocopy(NocopyArgs),
    /// Exact discrepancy and Erdős–Turán bound of a point set.
    Discrepancy(DiscrepancyArgs),
    /// Draw a planar annular set as SVG.
    Render(RenderArgs),
    /// Search thinned patterns for the smallest certified epsilon.
    Calibrate(CalibrateArgs),
}

const SUBCOMMANDS: [&str; 7] = [
    "construct",
    "verify",
    "density",
    "nocopy",
    "discrepancy",
    "render",
    "calibrate",
];

/// Turns `key = value` lines into `--key value` flags.
fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        let key = key.trim_start_matches('-');
        if key.is_empty() || key == "config" {
            bail!("config line {}: bad key in {raw:?}", no + 1);
        }
        flags.push(format!("--{key}").into());
        match value {
            Some("true") | None => {}
            Some(v) => flags.push(v.into()),
        }
    }
    Ok(flags)
}

/// Splices config-file flags in right after the subcommand name so that
/// later command-line flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let flags = config_flags(&text)?;
    let Some(pos) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
            Ok(Some(n))
        }
        _ => Ok(None),
    }
}

/// Exit code for an error: `1` for a failed internal invariant, `2` for
/// usage, budget, input and I/O problems.
fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<obstruct_core::Error>() {
        Some(obstruct_core::Error::Invariant(_)) => 1,
        _ => 2,
    }
}

fn run() -> Result<bool> {
    let args = expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Verify(a) => commands::verify(a),
        Command::Density(a) => commands::density(a),
        Command::Nocopy(a) => commands::nocopy(a),
        Command::Discrepancy(a) => commands::discrepancy(a),
        Command::Render(a) => commands::render(a),
        Command::Calibrate(a) => commands::calibrate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let flags = config_flags("n = 8\n# comment\nQ=64\ncalibrate\nseed = 3 # trailing\n").unwrap();
        let flags: Vec<String> = flags.into_iter().map(|f| f.into_string().unwrap()).collect();
        assert_eq!(flags, ["--n", "8", "--Q", "64", "--calibrate", "--seed", "3"]);
    }

    #[test]
    fn config_key_cannot_recurse() {
        assert!(config_flags("config = other.cfg").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
