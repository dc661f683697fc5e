//! The `qcp` command line.
//!
//! Every command is a deterministic function of its flags. Outputs are
//! written next to a JSON manifest recording the command, its parameters,
//! the master seed, the tool version and the files produced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::latin::{generate, GeneratorSpec, InstanceFile, PartialLatinSquare};
use crate::portfolio::{
    enumerate_portfolios, frontier_csv, frontier_rows, portfolio_pmf, stats, Component,
    PortfolioSpec,
};
use crate::profiles::{
    collect, fill_range, phase_csv, phase_sweep, to_distribution, DistributionOptions,
    EmpiricalDistribution, HeuristicTemplate, Source,
};
use crate::seed::{derive_seed, STREAM_GENERATOR};
use crate::solver::{solve, HeuristicConfig, Outcome, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_UNSAT: i32 = 10;
pub const EXIT_CUTOFF: i32 = 11;

pub const DEFAULT_CUTOFF: u64 = 1_000_000;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "qcp", version, about = "Quasigroup completion profiles and algorithm portfolios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random partial Latin squares.
    Gen(GenArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Collect backtrack distributions for one or more heuristics.
    Profile(ProfileArgs),
    /// Exact runtime law of a fixed portfolio.
    Portfolio(PortfolioArgs),
    /// Evaluate every allocation of N processors and mark the efficient set.
    Frontier(FrontierArgs),
    /// Phase-transition sweep over pre-assignment fractions.
    Phase(PhaseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub struct Cutoff(pub Option<u64>);

impl From<Cutoff> for String {
    fn from(c: Cutoff) -> String {
        c.0.map_or_else(|| "unbounded".into(), |v| v.to_string())
    }
}

fn parse_cutoff(s: &str) -> std::result::Result<Cutoff, String> {
    match s {
        "unbounded" | "none" => Ok(Cutoff(None)),
        _ => s
            .parse::<u64>()
            .map(|v| Cutoff(Some(v)))
            .map_err(|_| format!("cutoff must be a non-negative integer or `unbounded`, got `{s}`")),
    }
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse()
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub order: usize,
    /// Fraction of the order² cells to pre-assign.
    #[arg(long, default_value_t = 0.0)]
    pub fill: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = InstanceFormat::Text)]
    pub format: InstanceFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_parser = parse_strategy, default_value = "r-brelaz-r")]
    pub heuristic: Strategy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_cutoff, default_value = "1000000")]
    pub cutoff: Cutoff,
    #[arg(long, value_enum, default_value_t = InstanceFormat::Text)]
    pub format: InstanceFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    /// Profile a single fixed instance file.
    #[arg(long, conflicts_with_all = ["order", "fill"])]
    pub instance: Option<PathBuf>,
    /// Order of the instance class. Without --fill this is the empty square.
    #[arg(long, required_unless_present = "instance")]
    pub order: Option<usize>,
    /// Generate a fresh instance per run with this pre-assignment fraction.
    #[arg(long)]
    pub fill: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy,
          default_value = "brelaz-s,brelaz-r,r-brelaz-s,r-brelaz-r")]
    pub heuristics: Vec<Strategy>,
    #[arg(long)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_cutoff, default_value = "1000000")]
    pub cutoff: Cutoff,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Condition on runs that did not prove unsatisfiability.
    #[arg(long)]
    pub sat_only: bool,
    /// Largest censored mass accepted by the dominance report.
    #[arg(long, default_value_t = 0.0)]
    pub censor_threshold: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct PortfolioArgs {
    /// Distribution file and processor count, as `PATH:COUNT`.
    #[arg(long = "component", required = true, value_parser = parse_component)]
    pub components: Vec<(PathBuf, u32)>,
    /// Replace the censored tail by a point at cutoff + 1 instead of refusing.
    #[arg(long)]
    pub cap_censored: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

fn parse_component(s: &str) -> std::result::Result<(PathBuf, u32), String> {
    let (path, count) = s
        .rsplit_once(':')
        .ok_or_else(|| format!("expected PATH:COUNT, got `{s}`"))?;
    let count: u32 = count
        .parse()
        .map_err(|_| format!("bad processor count in `{s}`"))?;
    if count == 0 {
        return Err("processor count must be positive".into());
    }
    Ok((PathBuf::from(path), count))
}

#[derive(Debug, Args, Serialize)]
pub struct FrontierArgs {
    /// Distribution files, one per algorithm.
    #[arg(long = "dist", required = true)]
    pub dists: Vec<PathBuf>,
    /// Total processors N.
    #[arg(long)]
    pub processors: u32,
    #[arg(long)]
    pub cap_censored: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long)]
    pub order: usize,
    /// Explicit fill fractions; overrides the range flags.
    #[arg(long, value_delimiter = ',')]
    pub fills: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub fill_start: f64,
    #[arg(long, default_value_t = 0.6)]
    pub fill_stop: f64,
    #[arg(long, default_value_t = 0.05)]
    pub fill_step: f64,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, value_parser = parse_strategy, default_value = "r-brelaz-r")]
    pub heuristic: Strategy,
    #[arg(long, value_parser = parse_cutoff, default_value = "1000000")]
    pub cutoff: Cutoff,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

/// Reproduction record written beside every output.
#[derive(Debug, Serialize)]
pub struct ExperimentManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub parameters: &'a P,
    pub master_seed: Option<u64>,
    pub tool_version: &'a str,
    pub outputs: Vec<String>,
}

fn write_manifest<P: Serialize>(
    path: &Path,
    command: &str,
    parameters: &P,
    master_seed: Option<u64>,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = ExperimentManifest {
        command,
        parameters,
        master_seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(path, text)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::in_file(path.display().to_string(), e.into()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::in_file(path.display().to_string(), e.into()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::in_file(path.display().to_string(), e.into()))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// `<file>.manifest.json` beside a single-file output.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Writes to stdout, ignoring a closed pipe.
fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

/// Reads a text or JSON instance file; JSON is detected by a leading `{`.
pub fn read_instance(path: &Path) -> Result<PartialLatinSquare> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        InstanceFile::from_json(&text).and_then(|f| f.square())
    } else {
        PartialLatinSquare::parse_text(&text)
    };
    parsed.map_err(|e| Error::in_file(path.display().to_string(), e))
}

fn read_distribution(path: &Path, cap_censored: bool) -> Result<EmpiricalDistribution> {
    let wrap = |e| Error::in_file(path.display().to_string(), e);
    let dist = EmpiricalDistribution::from_json(&read(path)?).map_err(wrap)?;
    if dist.censored_mass() == 0.0 {
        return Ok(dist);
    }
    if !cap_censored {
        return Err(wrap(Error::Censored {
            mass: dist.censored_mass(),
            threshold: 0.0,
        }));
    }
    let cap = dist
        .meta()
        .cutoff
        .map(|c| c + 1)
        .or_else(|| dist.support().last().map(|m| m + 1))
        .unwrap_or(0);
    dist.cap_censored(cap).map_err(wrap)
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Profile(a) => cmd_profile(&a),
        Command::Portfolio(a) => cmd_portfolio(&a),
        Command::Frontier(a) => cmd_frontier(&a),
        Command::Phase(a) => cmd_phase(&a),
    }
}

/// Maps a library error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else {
        EXIT_DATA
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32> {
    GeneratorSpec::new(a.order, a.fill, a.seed)?;
    create_dir(&a.out)?;
    let width = a.count.saturating_sub(1).to_string().len().max(4);
    let mut outputs = Vec::new();
    let mut failures = 0;
    for i in 0..a.count {
        let spec = GeneratorSpec::new(a.order, a.fill, derive_seed(a.seed, i as u64, STREAM_GENERATOR))?;
        match generate(&spec) {
            Ok(square) => {
                let (name, body) = match a.format {
                    InstanceFormat::Text => (format!("instance_{i:0width$}.txt"), square.to_text()),
                    InstanceFormat::Json => (
                        format!("instance_{i:0width$}.json"),
                        InstanceFile::new(&square, Some(spec)).to_json()?,
                    ),
                };
                write(&a.out.join(&name), body)?;
                outputs.push(name);
            }
            Err(e) => {
                eprintln!("instance {i}: {e}");
                failures += 1;
            }
        }
    }
    write_manifest(&a.out.join(MANIFEST_NAME), "gen", a, Some(a.seed), outputs)?;
    if a.count > 0 && failures == a.count {
        return Err(Error::PlacementExhausted {
            placed: 0,
            target: GeneratorSpec::new(a.order, a.fill, 0)?.target_count(),
        });
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SolveReport {
    outcome: String,
    backtracks: u64,
    nodes: u64,
    heuristic: Strategy,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    completion: Option<Vec<Vec<Option<u8>>>>,
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let square = read_instance(&a.instance)?;
    let res = solve(&square, &HeuristicConfig::new(a.heuristic, a.seed, a.cutoff.0))?;
    let code = match res.outcome {
        Outcome::Sat(_) => EXIT_OK,
        Outcome::Unsat => EXIT_UNSAT,
        Outcome::Cutoff => EXIT_CUTOFF,
    };
    let text = match a.format {
        InstanceFormat::Text => {
            let mut s = format!(
                "{}\nbacktracks {}\nnodes {}\n",
                res.outcome.kind(),
                res.backtracks,
                res.nodes
            );
            if let Outcome::Sat(done) = &res.outcome {
                s.push_str(&done.to_text());
            }
            s
        }
        InstanceFormat::Json => {
            let report = SolveReport {
                outcome: res.outcome.kind().to_string(),
                backtracks: res.backtracks,
                nodes: res.nodes,
                heuristic: a.heuristic,
                seed: a.seed,
                completion: match &res.outcome {
                    Outcome::Sat(done) => Some(done.rows()),
                    _ => None,
                },
            };
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s
        }
    };
    print_stdout(&text);
    Ok(code)
}

#[derive(Serialize)]
struct DominanceEntry {
    a: Strategy,
    b: Strategy,
    /// `true`/`false`, or `censored` when a censored mass exceeds the threshold.
    dominates: String,
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<i32> {
    if a.runs == 0 {
        return Err(Error::EmptyRunSet);
    }
    let source = match (&a.instance, a.order, a.fill) {
        (Some(path), _, _) => Source::instance(&read_instance(path)?),
        (None, Some(order), None) => Source::instance(&PartialLatinSquare::new_empty(order)?),
        (None, Some(order), Some(fill)) => Source::generated(order, fill)?,
        (None, None, _) => unreachable!("clap requires --order without --instance"),
    };
    create_dir(&a.out)?;
    let exec = Execution::from_jobs(a.jobs);
    let options = DistributionOptions {
        sat_only: a.sat_only,
    };
    let mut outputs = Vec::new();
    let mut dists = Vec::new();
    for &strategy in &a.heuristics {
        let runs = collect(&source, HeuristicTemplate::new(strategy, a.cutoff.0), a.runs, a.seed, exec)?;
        let dist = to_distribution(&runs, options)?;
        let name = strategy.name();
        for (file, body) in [
            (format!("{name}.runs.json"), runs.to_json()?),
            (format!("{name}.dist.json"), dist.to_json()?),
            (format!("{name}.cdf.csv"), dist.to_csv()),
        ] {
            write(&a.out.join(&file), body)?;
            outputs.push(file);
        }
        let s = dist.summary();
        eprintln!(
            "{name}: median {} censored {}",
            s.median.map_or_else(|| "NA".into(), |m| m.to_string()),
            s.censored_mass
        );
        dists.push((strategy, dist));
    }

    let mut entries = Vec::new();
    for (sa, da) in &dists {
        for (sb, db) in &dists {
            if sa == sb {
                continue;
            }
            let verdict = match da.dominates(db, a.censor_threshold) {
                Ok(v) => v.to_string(),
                Err(Error::Censored { .. }) => "censored".to_string(),
                Err(e) => return Err(e),
            };
            entries.push(DominanceEntry {
                a: *sa,
                b: *sb,
                dominates: verdict,
            });
        }
    }
    let (file, body) = match a.format {
        ReportFormat::Csv => {
            let mut s = String::from("a,b,dominates\n");
            for e in &entries {
                s.push_str(&format!("{},{},{}\n", e.a, e.b, e.dominates));
            }
            ("dominance.csv", s)
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&entries)?;
            s.push('\n');
            ("dominance.json", s)
        }
    };
    write(&a.out.join(file), body)?;
    outputs.push(file.to_string());
    write_manifest(&a.out.join(MANIFEST_NAME), "profile", a, Some(a.seed), outputs)?;
    Ok(EXIT_OK)
}

pub fn cmd_portfolio(a: &PortfolioArgs) -> Result<i32> {
    let components = a
        .components
        .iter()
        .map(|(path, n)| {
            Ok(Component {
                distribution: read_distribution(path, a.cap_censored)?,
                processors: *n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pmf = portfolio_pmf(&PortfolioSpec::new(components)?)?;
    let st = stats(&pmf)?;
    print_stdout(&format!("mean {}\nstd {}\n", st.mean, st.std));
    if let Some(out) = &a.out {
        let body = match a.format {
            ReportFormat::Csv => pmf.to_csv(),
            ReportFormat::Json => pmf.to_json()?,
        };
        write(out, body)?;
        write_manifest(&sidecar(out), "portfolio", a, None, vec![file_name(out)])?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_frontier(a: &FrontierArgs) -> Result<i32> {
    let dists = a
        .dists
        .iter()
        .map(|p| read_distribution(p, a.cap_censored))
        .collect::<Result<Vec<_>>>()?;
    let all = enumerate_portfolios(&dists, a.processors, Execution::from_jobs(a.jobs))?;
    let rows = frontier_rows(&all);
    let body = match a.format {
        ReportFormat::Csv => frontier_csv(&rows),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
    };
    write(&a.out, body)?;
    for r in rows.iter().filter(|r| r.on_frontier) {
        eprintln!("efficient {:?}: mean {} std {}", r.allocation, r.mean, r.std);
    }
    write_manifest(&sidecar(&a.out), "frontier", a, None, vec![file_name(&a.out)])?;
    Ok(EXIT_OK)
}

pub fn cmd_phase(a: &PhaseArgs) -> Result<i32> {
    let fills = match &a.fills {
        Some(f) if !f.is_empty() => f.clone(),
        _ => fill_range(a.fill_start, a.fill_stop, a.fill_step),
    };
    let rows = phase_sweep(
        a.order,
        &fills,
        a.instances,
        HeuristicTemplate::new(a.heuristic, a.cutoff.0),
        a.seed,
        Execution::from_jobs(a.jobs),
    )?;
    let body = match a.format {
        ReportFormat::Csv => phase_csv(&rows),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
    };
    write(&a.out, body)?;
    write_manifest(&sidecar(&a.out), "phase", a, Some(a.seed), vec![file_name(&a.out)])?;
    Ok(EXIT_OK)
}
