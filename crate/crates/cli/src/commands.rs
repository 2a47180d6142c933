//! Subcommand arguments and drivers.
//!
//! Every driver returns `Ok(pass)`; errors map to exit code 2 except
//! failed invariants.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use log::info;
use obstruct_core::annulus::AnnulusSpec;
use obstruct_core::discrepancy::{exact_discrepancy, DiscrepancyReport};
use obstruct_core::measure::{density as annulus_density, DensityMethod, DensityReport};
use obstruct_core::nets::{
    build_nets_with_budget, calibrate_net, calibrate_thinned, scale_for_budget, verify_hitting_net,
    verify_hitting_sampled, HittingReport, NetSpec, DEFAULT_NET_BUDGET,
};
use obstruct_core::pattern::{elementary_epsilon, elementary_pattern, thin_pattern, Pattern};
use obstruct_core::primes::{bertrand_prime, is_prime};
use obstruct_core::reduction::{no_copy_check, NoCopyReport, PlacementSampler};
use obstruct_core::{Leading, PolySeq, Ratio, TorusPoint};
use serde::{Deserialize, Serialize};

use crate::output::{emit, write_atomic, write_csv, write_json, PatternFile, RunReport};
use crate::render::{render_svg, RenderSummary};

fn finish<C: Serialize, R: Serialize>(
    command: &str,
    config: C,
    report: R,
    pass: bool,
    started: Instant,
    path: Option<&Path>,
) -> Result<bool> {
    let run = RunReport::new(command, config, report, pass, started.elapsed().as_secs_f64());
    emit(path, &run)?;
    Ok(pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Thinned,
    Elementary,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct ConstructArgs {
    #[arg(long, value_enum, default_value = "thinned")]
    pub mode: Mode,
    /// Pattern size.
    #[arg(long)]
    pub n: u64,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Leading denominator; defaults to the Bertrand prime for (n, p).
    #[arg(long = "Q")]
    pub q: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Verify the pattern at this epsilon (sampled check); with
    /// `--calibrate`, stop once this epsilon is reached.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Retry thinning seeds and keep the pattern with the smallest gap.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long, default_value_t = 8)]
    pub retries: u32,
    /// Coefficient vectors for the sampled check.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Pattern file to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// CSV dump of the pattern indices.
    #[arg(long)]
    #[serde(skip)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct ConstructReport {
    pub n: u64,
    pub q: u64,
    pub q_is_prime: bool,
    pub leading: Ratio,
    pub epsilon_verified: Option<f64>,
    pub hitting: Option<HittingReport>,
    /// `(seed, sampled worst gap)` per calibration attempt.
    pub attempts: Vec<(u64, f64)>,
}

pub fn construct(args: ConstructArgs) -> Result<bool> {
    let started = Instant::now();
    let (pattern, q, a, p) = match args.mode {
        Mode::Thinned => {
            let q = match args.q {
                Some(q) => q,
                None => bertrand_prime(args.n, args.p)?,
            };
            let pattern = if args.calibrate {
                None
            } else {
                Some(thin_pattern(args.n, q, args.seed)?)
            };
            (pattern, q, Ratio::reciprocal(q)?, args.p)
        }
        Mode::Elementary => {
            ensure!(args.p == 2, "the elementary construction is quadratic; got p = {}", args.p);
            ensure!(!args.calibrate, "--calibrate applies to thinned patterns only");
            let (pattern, a) = elementary_pattern(args.n)?;
            (Some(pattern), a.den, a, 2)
        }
    };

    let leading = Leading::Rational(a);
    let (pattern, hitting, attempts, eps_verified, pass) = match pattern {
        None => {
            let cal = calibrate_thinned(args.n, q, p, args.seed, args.retries, args.samples, args.epsilon)?;
            let pass = args.epsilon.is_none_or(|t| cal.epsilon <= t);
            (cal.pattern, Some(cal.report), cal.attempts, Some(cal.epsilon), pass)
        }
        Some(pattern) => {
            let eps = match args.mode {
                Mode::Elementary => Some(args.epsilon.unwrap_or_else(|| elementary_epsilon(args.n))),
                Mode::Thinned => args.epsilon,
            };
            match eps {
                None => (pattern, None, Vec::new(), None, true),
                Some(eps) => {
                    let r = verify_hitting_sampled(&pattern, leading, p, eps, args.samples, args.seed)?;
                    let pass = r.pass;
                    (pattern, Some(r), Vec::new(), pass.then_some(eps), pass)
                }
            }
        }
    };

    let file = PatternFile::new(&pattern, p, q, a, eps_verified);
    write_json(&args.out, &file)?;
    if let Some(path) = &args.dump {
        dump_indices(path, &pattern)?;
    }
    let report = ConstructReport {
        n: args.n,
        q,
        q_is_prime: is_prime(q),
        leading: a,
        epsilon_verified: eps_verified,
        hitting,
        attempts,
    };
    finish("construct", &args, report, pass, started, args.report.as_deref())
}

fn dump_indices(path: &Path, pattern: &Pattern) -> Result<()> {
    write_csv(path, &["k"], pattern.indices().iter().map(|k| vec![k.to_string()]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitMethod {
    Net,
    Sampled,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// Interval length; defaults to the file's `epsilon_verified`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "sampled")]
    pub method: HitMethod,
    /// Net resolution scale: a number in (0, 1] or `auto` to fit the budget.
    #[arg(long, default_value = "1")]
    pub scale: String,
    /// Maximum number of net cells.
    #[arg(long, default_value_t = DEFAULT_NET_BUDGET)]
    pub budget: u128,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub nets: Option<NetSpec>,
    pub hitting: HittingReport,
}

fn pattern_epsilon(file: &PatternFile, flag: Option<f64>) -> Result<f64> {
    match flag.or(file.epsilon_verified) {
        Some(e) => Ok(e),
        None => bail!("no --epsilon given and the pattern file records no verified epsilon"),
    }
}

pub fn verify(args: VerifyArgs) -> Result<bool> {
    let started = Instant::now();
    let file = PatternFile::load(&args.pattern)?;
    let pattern = file.pattern()?;
    let a = file.leading()?;
    let eps = pattern_epsilon(&file, args.epsilon)?;
    let report = match args.method {
        HitMethod::Sampled => VerifyReport {
            nets: None,
            hitting: verify_hitting_sampled(
                &pattern,
                Leading::Rational(a),
                file.p,
                eps,
                args.samples,
                args.seed,
            )?,
        },
        HitMethod::Net => {
            ensure!(a.num == 1, "net verification needs A = 1/Q, got {}/{}", a.num, a.den);
            let scale = match args.scale.as_str() {
                "auto" => scale_for_budget(file.p, a.den, eps, args.budget),
                s => s
                    .parse::<f64>()
                    .with_context(|| format!("--scale {s:?} is neither a number nor `auto`"))?,
            };
            let nets = build_nets_with_budget(file.p, a.den, eps, scale, args.budget)?;
            info!("net with {} cells, transfer slack {}", nets.total_cells, nets.transfer_slack);
            let hitting = verify_hitting_net(&pattern, a, file.p, eps, &nets)?;
            VerifyReport {
                nets: Some(nets),
                hitting,
            }
        }
    };
    let pass = report.hitting.pass;
    finish("verify", &args, report, pass, started, args.report.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethodArg {
    Slice,
    Mc,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct DensityArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long)]
    pub epsilon: f64,
    /// Side of the centered cube.
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, value_enum, default_value = "mc")]
    pub method: DensityMethodArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest acceptable shortfall from the target density.
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

pub fn density(args: DensityArgs) -> Result<bool> {
    let started = Instant::now();
    let spec = AnnulusSpec::new(args.d, args.p, args.epsilon)?;
    let method = match args.method {
        DensityMethodArg::Slice => DensityMethod::ExactSlice,
        DensityMethodArg::Mc => DensityMethod::MonteCarlo { samples: args.samples },
    };
    let report: DensityReport = annulus_density(&spec, args.r, method, args.seed)?;
    let pass = report.shortfall() <= args.tolerance;
    finish("density", &args, report, pass, started, args.report.as_deref())
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct NocopyArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Set thickness parameter; defaults to the file's `epsilon_verified`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Comma-separated shell offsets `j`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub j: Vec<i64>,
    /// Placements per `j`.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

pub fn nocopy(args: NocopyArgs) -> Result<bool> {
    let started = Instant::now();
    let file = PatternFile::load(&args.pattern)?;
    let pattern = file.pattern()?;
    let a = file.leading()?;
    let eps = pattern_epsilon(&file, args.epsilon)?;
    let spec = AnnulusSpec::new(args.d, file.p, eps)?;
    let sampler = PlacementSampler {
        seed: args.seed,
        count: args.samples,
    };
    let report: NoCopyReport = no_copy_check(&spec, &pattern, a, &args.j, sampler, file.epsilon_verified)?;
    let pass = report.pass;
    finish("nocopy", &args, report, pass, started, args.report.as_deref())
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct DiscrepancyArgs {
    /// Text file with one point per line, as a decimal or `num/den`.
    #[arg(long, conflicts_with_all = ["a_num", "a_den", "lower"])]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long)]
    pub a_num: Option<i64>,
    #[arg(long)]
    pub a_den: Option<u64>,
    /// Lower coefficients `B_1..B_{p-1}` as decimals or `num/den`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Vec<String>,
    /// Number of terms `k = 0..N-1` of the generated sequence.
    #[arg(long)]
    pub n_terms: Option<u64>,
    /// Erdős–Turán cutoff; defaults to the number of points.
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// CSV dump of the points.
    #[arg(long)]
    #[serde(skip)]
    pub dump: Option<PathBuf>,
}

/// Parses a decimal or an exact `num/den` into a torus point.
fn parse_point(s: &str) -> Result<TorusPoint> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let num: i128 = n.trim().parse().with_context(|| format!("bad numerator in {s:?}"))?;
        let den: u64 = d.trim().parse().with_context(|| format!("bad denominator in {s:?}"))?;
        ensure!(den > 0, "zero denominator in {s:?}");
        Ok(TorusPoint::from_ratio(num, den))
    } else {
        let x: f64 = s.parse().with_context(|| format!("bad number {s:?}"))?;
        ensure!(x.is_finite(), "non-finite point {s:?}");
        Ok(TorusPoint::from_f64(x))
    }
}

fn read_points(path: &Path) -> Result<Vec<TorusPoint>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_point)
        .collect()
}

pub fn discrepancy(args: DiscrepancyArgs) -> Result<bool> {
    let started = Instant::now();
    let points = match &args.points {
        Some(path) => read_points(path)?,
        None => {
            let (Some(num), Some(den), Some(n)) = (args.a_num, args.a_den, args.n_terms) else {
                bail!("give --points, or --a-num, --a-den and --n-terms");
            };
            let lower = if args.lower.is_empty() {
                vec![TorusPoint::ZERO; args.degree.saturating_sub(1) as usize]
            } else {
                args.lower.iter().map(|s| parse_point(s)).collect::<Result<_>>()?
            };
            let f = PolySeq::new(args.degree, Leading::Rational(Ratio::new(num, den)?), lower)?;
            let n = i64::try_from(n).context("--n-terms too large")?;
            (0..n).map(|k| f.eval(k)).collect()
        }
    };
    let m = args.m.unwrap_or(points.len() as u64);
    let report: DiscrepancyReport = exact_discrepancy(&points)?.with_erdos_turan(&points, m)?;
    if let Some(path) = &args.dump {
        write_csv(
            path,
            &["index", "bits", "value"],
            points
                .iter()
                .enumerate()
                .map(|(i, t)| vec![i.to_string(), t.bits().to_string(), format!("{:.17}", t.to_f64())]),
        )?;
    }
    // Exit 1 would mean the bound failed to dominate, which is a bug.
    let pass = report.et_bound.is_some_and(|b| b >= report.exact_discrepancy);
    finish("discrepancy", &args, report, pass, started, args.report.as_deref())
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct RenderArgs {
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long = "R")]
    pub r: f64,
    /// Raster resolution for odd `p`.
    #[arg(long, default_value_t = 300)]
    pub pixels: u32,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

pub fn render(args: RenderArgs) -> Result<bool> {
    let started = Instant::now();
    let spec = AnnulusSpec::new(2, args.p, args.epsilon)?;
    let (svg, summary): (String, RenderSummary) = render_svg(&spec, args.r, args.pixels)?;
    write_atomic(&args.out, svg.as_bytes())?;
    finish("render", &args, summary, true, started, args.report.as_deref())
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long = "Q")]
    pub q: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Thinning seeds to try.
    #[arg(long, default_value_t = 16)]
    pub retries: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Required epsilon; the run fails if calibration does not reach it.
    #[arg(long)]
    pub target: Option<f64>,
    /// Cell budget for the net check.
    #[arg(long, default_value_t = 10_000_000)]
    pub net_cells: u128,
    /// Rounds of `ε ← (worst gap + 2δ)/0.9` in the net calibration.
    #[arg(long, default_value_t = 8)]
    pub max_rounds: u32,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct CalibrateReport {
    pub q: u64,
    pub seed: u64,
    /// Smallest epsilon the sampled check passes with.
    pub sampled_epsilon: f64,
    pub sampled: HittingReport,
    /// `(seed, sampled worst gap)` per attempt.
    pub attempts: Vec<(u64, f64)>,
    pub nets: NetSpec,
    pub net: HittingReport,
    /// Epsilon guaranteed for every real coefficient vector by the net run.
    pub effective_epsilon: Option<f64>,
    pub target: Option<f64>,
}

pub fn calibrate(args: CalibrateArgs) -> Result<bool> {
    let started = Instant::now();
    let q = match args.q {
        Some(q) => q,
        None => bertrand_prime(args.n, args.p)?,
    };
    let cal = calibrate_thinned(args.n, q, args.p, args.seed, args.retries, args.samples, args.target)?;
    let start = cal.epsilon.max(1e-6);
    let (nets, net) = calibrate_net(&cal.pattern, q, args.p, start, args.net_cells, args.max_rounds)?;
    let effective = net.certified_epsilon();
    let verified = effective.map_or(cal.epsilon, |e| e.max(cal.epsilon));
    let seed = match cal.pattern.provenance() {
        obstruct_core::pattern::Provenance::Thinned { seed } => seed,
        _ => args.seed,
    };
    let file = PatternFile::new(&cal.pattern, args.p, q, Ratio::reciprocal(q)?, Some(verified));
    write_json(&args.out, &file)?;
    let pass = effective.is_some()
        && args
            .target
            .is_none_or(|t| cal.epsilon <= t && effective.is_some_and(|e| e <= t));
    let report = CalibrateReport {
        q,
        seed,
        sampled_epsilon: cal.epsilon,
        sampled: cal.report,
        attempts: cal.attempts,
        nets,
        net,
        effective_epsilon: effective,
        target: args.target,
    };
    finish("calibrate", &args, report, pass, started, args.report.as_deref())
}
