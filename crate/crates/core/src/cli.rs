//! Command-line front end: argument parsing, file formats and the command
//! implementations. [`run`] writes to any sink so commands can be exercised
//! in-process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::angles::{AngleReport, InclinationBudget};
use crate::corpus::{AngleRule, FamilySpec, EXAMPLE3_DEFAULT_DIM};
use crate::diagnostics::{bound_report, bound_trace, dichotomy_report, BoundReport, DichotomyVerdict};
use crate::dynamics::{iterate_vector, slow_vector_probe, ConvergenceTrace, IndexSchedule, SlowSequence};
use crate::error::{Error, Result};
use crate::numerics::{TolerancePolicy, Vector};
use crate::subspace::{Subspace, SubspaceSystem};

/// On-disk description of a system: spanning vectors per subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub dim: usize,
    pub subspaces: Vec<SubspaceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceEntry {
    pub name: String,
    pub vectors: Vec<Vec<f64>>,
}

impl SystemFile {
    pub fn from_system(system: &SubspaceSystem) -> Self {
        Self {
            dim: system.ambient_dim(),
            subspaces: system
                .subspaces()
                .iter()
                .map(|s| SubspaceEntry {
                    name: s.name().to_string(),
                    vectors: s.generators().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_system(&self) -> Result<SubspaceSystem> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if self.subspaces.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 subspaces, got {}",
                self.subspaces.len()
            )));
        }
        let tol = TolerancePolicy::default();
        let subspaces = self
            .subspaces
            .iter()
            .map(|e| Subspace::from_vectors(e.name.clone(), self.dim, e.vectors.clone(), &tol))
            .collect::<Result<Vec<_>>>()?;
        SubspaceSystem::with_tolerance(subspaces, tol)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn load_system(path: &Path) -> Result<SubspaceSystem> {
    SystemFile::read(path)?.to_system()
}

/// Writes `n,measured,<bound columns>` with shortest round-trip decimals.
pub fn write_trace<W: Write>(trace: &ConvergenceTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string(), "measured".to_string()];
    header.extend(trace.bounds.iter().map(|b| b.name.clone()));
    w.write_record(&header)?;
    for (i, r) in trace.records.iter().enumerate() {
        let mut row = vec![r.n.to_string(), r.error.to_string()];
        row.extend(trace.bounds.iter().map(|b| b.values[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace_file(trace: &ConvergenceTrace, path: &Path) -> Result<()> {
    write_trace(trace, fs::File::create(path)?)
}

#[derive(Debug, Parser)]
#[command(name = "altproj", version, about = "Friedrichs angles and alternating projections for N subspaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a system file from a built-in family
    Gen(GenArgs),
    /// Report the angle parameters of a system
    Angles(AnglesArgs),
    /// Run alternating projections on a vector and trace the error
    Iterate(IterateArgs),
    /// Check measured convergence against the bounds
    Bounds(BoundsArgs),
    /// Build a vector whose error dominates a given sequence
    ProbeSlow(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Example3,
    TwoLines,
    Tilted,
    Random,
    CommonCore,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Angle in radians
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// inv-k, const:THETA or list:T1,T2,...
    #[arg(long, default_value = "inv-k")]
    pub rule: String,
    /// Comma-separated subspace dimensions
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub core_dim: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnglesArgs {
    pub system: PathBuf,
    /// Multistart count for the inclination estimate
    #[arg(long, default_value_t = 32)]
    pub starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Cyclic,
    Random,
    Explicit,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    pub system: PathBuf,
    #[arg(long, value_enum, default_value = "cyclic")]
    pub order: OrderArg,
    /// 1-based projector indices for --order explicit
    #[arg(long, value_delimiter = ',')]
    pub indices: Vec<usize>,
    /// Window length in which every projector must appear (random order)
    #[arg(long)]
    pub coverage_window: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `random` or comma-separated coordinates
    #[arg(long, default_value = "random")]
    pub x0: String,
    /// Passes for cyclic order, single projections otherwise
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// CSV destination; stdout when absent
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub system: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    /// Also write the operator trace with bound columns
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "inv-k")]
    pub rule: String,
    /// pow:P, log or file:PATH
    #[arg(long)]
    pub seq: String,
    #[arg(long)]
    pub horizon: usize,
    /// Allowed excess of ‖x‖ over the largest sequence term
    #[arg(long, default_value_t = 1.0)]
    pub slack: f64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn parse_rule(text: &str) -> Result<AngleRule> {
    if text == "inv-k" {
        return Ok(AngleRule::InverseK);
    }
    if let Some(v) = text.strip_prefix("const:") {
        return Ok(AngleRule::Constant(parse_f64(v)?));
    }
    if let Some(v) = text.strip_prefix("list:") {
        return Ok(AngleRule::Explicit(
            v.split(',').map(parse_f64).collect::<Result<_>>()?,
        ));
    }
    Err(Error::InvalidParameter(format!("unknown angle rule '{text}'")))
}

pub fn parse_sequence(text: &str) -> Result<SlowSequence> {
    if text == "log" {
        return Ok(SlowSequence::Log);
    }
    if let Some(p) = text.strip_prefix("pow:") {
        return Ok(SlowSequence::Power(parse_f64(p)?));
    }
    if let Some(path) = text.strip_prefix("file:") {
        let body = fs::read_to_string(path)?;
        let values = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(parse_f64)
            .collect::<Result<Vec<_>>>()?;
        return Ok(SlowSequence::Explicit(values));
    }
    Err(Error::InvalidParameter(format!("unknown sequence '{text}'")))
}

fn parse_f64(text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("not a number: '{text}'")))
}

fn require<T>(value: Option<T>, flag: &str, family: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for {family}")))
}

impl GenArgs {
    pub fn family_spec(&self) -> Result<FamilySpec> {
        Ok(match self.family {
            FamilyArg::Example3 => FamilySpec::Example3 {
                dim: self.dim.unwrap_or(EXAMPLE3_DEFAULT_DIM),
            },
            FamilyArg::TwoLines => FamilySpec::TwoLines {
                theta: require(self.theta, "theta", "two-lines")?,
            },
            FamilyArg::Tilted => FamilySpec::TiltedPairs {
                k: require(self.k, "k", "tilted")?,
                rule: parse_rule(&self.rule)?,
            },
            FamilyArg::Random => FamilySpec::Random {
                dim: require(self.dim, "dim", "random")?,
                dims: self.dims.clone(),
                seed: self.seed,
            },
            FamilyArg::CommonCore => FamilySpec::CommonCore {
                dim: require(self.dim, "dim", "common-core")?,
                dims: self.dims.clone(),
                core_dim: require(self.core_dim, "core-dim", "common-core")?,
                seed: self.seed,
            },
        })
    }
}

#[derive(Debug, Serialize)]
struct BoundsOutput {
    #[serde(flatten)]
    report: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<DichotomyVerdict>,
}

#[derive(Debug, Serialize)]
struct ProbeOutput {
    x: Vec<f64>,
    success: bool,
    achieved_horizon: usize,
    norm: f64,
    norm_budget: f64,
}

fn initial_vector(spec: &str, dim: usize, seed: u64) -> Result<Vector> {
    if spec == "random" {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)));
    }
    let coords = spec.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: coords.len(),
        });
    }
    Ok(Vector::from_vec(coords))
}

fn schedule_for(args: &IterateArgs, count: usize) -> Result<IndexSchedule> {
    // keep the schedule stream independent of the x0 stream
    let seed = args.seed.wrapping_add(1);
    match args.order {
        OrderArg::Cyclic => IndexSchedule::cyclic(count),
        OrderArg::Random => match args.coverage_window {
            Some(w) => IndexSchedule::random_covering(count, seed, w),
            None => IndexSchedule::random(count, seed),
        },
        OrderArg::Explicit => {
            if args.indices.iter().any(|&i| i == 0) {
                return Err(Error::InvalidParameter("indices are 1-based".into()));
            }
            IndexSchedule::explicit(count, args.indices.iter().map(|i| i - 1).collect())
        }
    }
}

/// Executes a parsed command, writing its primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Gen(args) => {
            let system = args.family_spec()?.build()?;
            let json = SystemFile::from_system(&system).to_json()?;
            match &args.output {
                Some(path) => fs::write(path, json)?,
                None => out.write_all(json.as_bytes())?,
            }
        }
        Command::Angles(args) => {
            let system = load_system(&args.system)?;
            let budget = InclinationBudget {
                starts: args.starts,
                ..InclinationBudget::default()
            };
            let report = AngleReport::compute(&system, &budget)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Iterate(args) => {
            let system = load_system(&args.system)?;
            let x0 = initial_vector(&args.x0, system.ambient_dim(), args.seed)?;
            let schedule = schedule_for(args, system.len())?;
            let trace = iterate_vector(&system, &x0, &schedule, args.iters)?;
            match &args.trace {
                Some(path) => write_trace_file(&trace, path)?,
                None => write_trace(&trace, &mut *out)?,
            }
        }
        Command::Bounds(args) => {
            let system = load_system(&args.system)?;
            let report = bound_report(&system, args.iters, &InclinationBudget::default())?;
            let verdict = if report.degenerate {
                None
            } else {
                Some(dichotomy_report(&system)?)
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&BoundsOutput { report, verdict })?)?;
            if let Some(path) = &args.trace {
                write_trace_file(&bound_trace(&system, args.iters)?, path)?;
            }
        }
        Command::ProbeSlow(args) => {
            let angles = parse_rule(&args.rule)?.angles(args.k)?;
            let seq = parse_sequence(&args.seq)?;
            let probe = slow_vector_probe(&angles, &seq, args.horizon, args.slack)?;
            if let Some(path) = &args.trace {
                write_trace_file(&probe.trace, path)?;
            }
            let output = ProbeOutput {
                x: probe.x,
                success: probe.success,
                achieved_horizon: probe.achieved_horizon,
                norm: probe.norm,
                norm_budget: probe.norm_budget,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&output)?)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
/// Usage errors give 1 (help and version give 0), numerical failures 2.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            std::iter::once("altproj").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn rule_and_sequence_parsing() {
        assert_eq!(parse_rule("inv-k").unwrap(), AngleRule::InverseK);
        assert_eq!(parse_rule("const:0.5").unwrap(), AngleRule::Constant(0.5));
        assert_eq!(parse_rule("list:1,0.5").unwrap(), AngleRule::Explicit(vec![1.0, 0.5]));
        assert!(parse_rule("nope").is_err());
        assert_eq!(parse_sequence("pow:0.5").unwrap(), SlowSequence::Power(0.5));
        assert_eq!(parse_sequence("log").unwrap(), SlowSequence::Log);
        assert!(parse_sequence("pow:x").is_err());
    }

    #[test]
    fn gen_example_dims() {
        let (code, out, _) = run_args(&["gen", "--family", "example3", "--dim", "12"]);
        assert_eq!(code, 0);
        let file: SystemFile = serde_json::from_str(&out).unwrap();
        assert_eq!(file.dim, 12);
        let dims: Vec<usize> = file.subspaces.iter().map(|s| s.vectors.len()).collect();
        assert_eq!(dims, vec![4, 5, 6]);
    }

    #[test]
    fn gen_missing_parameter_is_usage_error() {
        let (code, _, err) = run_args(&["gen", "--family", "two-lines"]);
        assert_eq!(code, 1);
        assert!(err.contains("--theta"));
        let (code, _, _) = run_args(&["gen", "--family", "bogus"]);
        assert_eq!(code, 1);
        let (code, _, _) = run_args(&["gen", "--family", "two-lines", "--theta", "0"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("probe-slow"));
    }

    #[test]
    fn system_file_validation() {
        let bad = SystemFile {
            dim: 2,
            subspaces: vec![SubspaceEntry {
                name: "a".into(),
                vectors: vec![vec![1.0, 0.0]],
            }],
        };
        assert!(bad.to_system().is_err());
        let ragged = SystemFile {
            dim: 2,
            subspaces: vec![
                SubspaceEntry {
                    name: "a".into(),
                    vectors: vec![vec![1.0, 0.0]],
                },
                SubspaceEntry {
                    name: "b".into(),
                    vectors: vec![vec![1.0]],
                },
            ],
        };
        assert!(ragged.to_system().is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let system = crate::corpus::two_lines(1.0).unwrap();
        let trace = bound_trace(&system, 3).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,measured,corMain,DeHu,KW");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
        let value: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, trace.records[0].error);
    }
}
