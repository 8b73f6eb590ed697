//! Command-line front end.
//!
//! Exit codes: 0 optimal or pass, 1 Monte Carlo pass rule failed,
//! 2 infeasible, 3 solver limit reached, 64 usage or input error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::case::{resolve_case, SystemCase};
use crate::clearing::{clear, sweep, ClearingOptions, ClearingResult, NetworkMode};
use crate::error::Error;
use crate::miqp::{MiqpSettings, MiqpStatus};
use crate::output;
use crate::pricing::SettlementOptions;
use crate::reformulation::{BuildOptions, MarginMode, ProgramKind, VarianceMode};
use crate::stochastic::{empirical_cost, empirical_violation_rates, sample_scenarios, SamplingMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "inertia-market", version, about = "Chance-constrained market clearing with energy, reserve and inertia prices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clear one market case and write commitment, dispatch, prices,
    /// settlement and the equilibrium report.
    Clear(ClearArgs),
    /// Clear market cases 1 to 6 and write a combined summary.
    Sweep(CommonArgs),
    /// Validate a clearing's chance constraints and expected cost by Monte
    /// Carlo simulation.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    PaperVerbatim,
    SymmetricMargins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VarianceArg {
    PerSystem,
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NetworkArg {
    On,
    Off,
    Auto,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Case file, or `illustrative` / `three-node` for the built-in cases.
    #[arg(long, default_value = "illustrative")]
    case: String,
    #[arg(long, value_enum, default_value = "paper-verbatim")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "per-system")]
    variance: VarianceArg,
    #[arg(long, value_enum, default_value = "auto")]
    network: NetworkArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Relative optimality gap at which branch-and-bound stops.
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    #[arg(long, default_value_t = 2000)]
    node_limit: usize,
    /// Wall-clock limit of the commitment search in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Require every storage unit to end the day at its initial energy.
    #[arg(long)]
    terminal_energy: bool,
    /// Pay wind farms for energy as well as inertia.
    #[arg(long)]
    pay_wind_energy: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Record wall-clock timings in the manifest. Timed manifests differ
    /// between runs.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Clone, Args)]
struct ClearArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=6))]
    market_case: u8,
}

#[derive(Debug, Clone, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=6))]
    market_case: u8,
    /// Manifest of a previous clearing; replaces the case and mode flags.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case_id: u8,
    pub kind: ProgramKind,
    pub status: MiqpStatus,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub equilibrium_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOutcome {
    pub samples: usize,
    pub seed: u64,
    pub sampling: SamplingMode,
    pub violations_pass: bool,
    pub cost_z: f64,
    pub pass: bool,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub case: String,
    pub market_cases: Vec<u8>,
    pub margin_mode: MarginMode,
    pub variance_mode: VarianceMode,
    pub network: NetworkMode,
    pub terminal_energy: bool,
    pub pay_wind_energy: bool,
    pub solver: MiqpSettings,
    pub out: String,
    pub results: Vec<CaseOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloOutcome>,
    /// Wall-clock seconds per step, only with `--timings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_s: Option<Vec<(String, f64)>>,
}

struct Setup {
    case: SystemCase,
    case_arg: String,
    options: ClearingOptions,
    out: PathBuf,
    timings: bool,
}

impl CommonArgs {
    fn setup(&self) -> Result<Setup, Error> {
        if !(self.gap_tol >= 0.0) {
            return Err(Error::InvalidInput("--gap-tol must be non-negative".into()));
        }
        let time_limit = match self.time_limit {
            Some(s) if !(s > 0.0) || !s.is_finite() => {
                return Err(Error::InvalidInput("--time-limit must be a positive number of seconds".into()))
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        let options = ClearingOptions {
            build: BuildOptions {
                margin_mode: match self.mode {
                    ModeArg::PaperVerbatim => MarginMode::PaperVerbatim,
                    ModeArg::SymmetricMargins => MarginMode::SymmetricMargins,
                },
                variance_mode: match self.variance {
                    VarianceArg::PerSystem => VarianceMode::PerSystem,
                    VarianceArg::Aggregated => VarianceMode::Aggregated,
                },
                terminal_energy: self.terminal_energy,
            },
            network: match self.network {
                NetworkArg::On => NetworkMode::On,
                NetworkArg::Off => NetworkMode::Off,
                NetworkArg::Auto => NetworkMode::Auto,
            },
            miqp: MiqpSettings {
                gap_tol: self.gap_tol,
                node_limit: Some(self.node_limit),
                time_limit,
                threads: self.threads as usize,
                ..MiqpSettings::default()
            },
            settlement: SettlementOptions {
                pay_wind_energy: self.pay_wind_energy,
            },
            ..ClearingOptions::default()
        };
        Ok(Setup {
            case: resolve_case(&self.case)?,
            case_arg: self.case.clone(),
            options,
            out: self.out.clone(),
            timings: self.timings,
        })
    }
}

impl Setup {
    fn manifest(&self, command: &str, results: &[&ClearingResult], timings: Vec<(String, f64)>) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            case: self.case_arg.clone(),
            market_cases: results.iter().map(|r| r.case_id).collect(),
            margin_mode: self.options.build.margin_mode,
            variance_mode: self.options.build.variance_mode,
            network: self.options.network,
            terminal_energy: self.options.build.terminal_energy,
            pay_wind_energy: self.options.settlement.pay_wind_energy,
            solver: self.options.miqp.clone(),
            out: self.out.display().to_string(),
            results: results.iter().map(|r| outcome(r)).collect(),
            montecarlo: None,
            timings_s: self.timings.then_some(timings),
        }
    }
}

fn outcome(r: &ClearingResult) -> CaseOutcome {
    CaseOutcome {
        case_id: r.case_id,
        kind: r.kind(),
        status: r.miqp.status,
        objective: r.miqp.objective,
        best_bound: r.miqp.best_bound,
        gap: r.miqp.gap,
        nodes: r.miqp.nodes_explored,
        equilibrium_pass: r.equilibrium.pass,
    }
}

fn warn_limit(r: &ClearingResult) {
    eprintln!(
        "warning: case {} stopped at {} after {} nodes (gap {:.3e})",
        r.case_id,
        r.miqp.status.as_str(),
        r.miqp.nodes_explored,
        r.miqp.gap
    );
}

fn limit_code(results: &[&ClearingResult]) -> i32 {
    let mut code = EXIT_OK;
    for r in results.iter().filter(|r| r.miqp.status != MiqpStatus::Optimal) {
        warn_limit(r);
        code = EXIT_LIMIT;
    }
    code
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::NotOptimal(_) => EXIT_LIMIT,
        Error::Io { .. }
        | Error::Parse(_)
        | Error::Validation { .. }
        | Error::MarketCaseOutOfRange(_)
        | Error::InvalidInput(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn cmd_clear(args: &ClearArgs) -> Result<i32, Error> {
    let setup = args.common.setup()?;
    let result = clear(&setup.case, args.market_case, &setup.options)?;
    output::write_clearing(&setup.out, &setup.case, &result)?;
    let manifest = setup.manifest("clear", &[&result], vec![("clear".into(), secs(result.elapsed))]);
    output::write_json(&setup.out.join("manifest.json"), &manifest)?;
    Ok(limit_code(&[&result]))
}

fn cmd_sweep(args: &CommonArgs) -> Result<i32, Error> {
    let setup = args.setup()?;
    let results = sweep(&setup.case, &setup.options)?;
    output::create_dir(&setup.out)?;
    for r in &results {
        let dir = setup.out.join(format!("case-{}", r.case_id));
        output::write_clearing(&dir, &setup.case, r)?;
        let mut m = setup.manifest("sweep", &[r], vec![("clear".into(), secs(r.elapsed))]);
        m.out = dir.display().to_string();
        output::write_json(&dir.join("manifest.json"), &m)?;
    }
    output::write_file(&setup.out.join("summary.csv"), &output::summary_csv(&results))?;
    output::write_file(&setup.out.join("price_series.csv"), &output::price_series_csv(&results))?;
    let refs: Vec<&ClearingResult> = results.iter().collect();
    Ok(limit_code(&refs))
}

fn read_manifest(path: &Path) -> Result<RunManifest, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_montecarlo(args: &MonteCarloArgs) -> Result<i32, Error> {
    let (mut setup, case_id) = match &args.manifest {
        None => (args.common.setup()?, args.market_case),
        Some(path) => {
            let m = read_manifest(path)?;
            let &[case_id] = m.market_cases.as_slice() else {
                return Err(Error::InvalidInput(
                    "the manifest must describe a single clearing; use a per-case manifest of a sweep".into(),
                ));
            };
            let setup = Setup {
                case: resolve_case(&m.case)?,
                case_arg: m.case.clone(),
                options: ClearingOptions {
                    build: BuildOptions {
                        margin_mode: m.margin_mode,
                        variance_mode: m.variance_mode,
                        terminal_energy: m.terminal_energy,
                    },
                    network: m.network,
                    miqp: m.solver.clone(),
                    settlement: SettlementOptions {
                        pay_wind_energy: m.pay_wind_energy,
                    },
                    ..ClearingOptions::default()
                },
                out: args.common.out.clone(),
                timings: args.common.timings,
            };
            (setup, case_id)
        }
    };
    setup.options.miqp.threads = args.common.threads as usize;
    let threads = setup.options.miqp.threads;
    let result = clear(&setup.case, case_id, &setup.options)?;
    let started = Instant::now();
    let n = args.samples as usize;
    let sampling = SamplingMode::for_variance(setup.options.build.variance_mode);
    let scenarios = sample_scenarios(&setup.case, n, args.seed, sampling, threads)?;
    let violations = empirical_violation_rates(&setup.case, &result.built, &result.schedule, &scenarios, threads);
    let cost = empirical_cost(&setup.case, &result.schedule, &scenarios, threads);
    let analytic = result.total_cost();
    let z = cost.z_score(analytic);
    let pass = violations.pass && z <= 3.0;

    output::create_dir(&setup.out)?;
    output::write_file(&setup.out.join("violations.csv"), &output::violations_csv(&violations))?;
    output::write_file(&setup.out.join("empirical_cost.csv"), &output::empirical_cost_csv(&cost, analytic))?;
    let mut m = setup.manifest(
        "montecarlo",
        &[&result],
        vec![("clear".into(), secs(result.elapsed)), ("montecarlo".into(), secs(started.elapsed()))],
    );
    m.montecarlo = Some(MonteCarloOutcome {
        samples: n,
        seed: args.seed,
        sampling,
        violations_pass: violations.pass,
        cost_z: z,
        pass,
    });
    output::write_json(&setup.out.join("manifest.json"), &m)?;
    if result.miqp.status != MiqpStatus::Optimal {
        warn_limit(&result);
        return Ok(EXIT_LIMIT);
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Clear(a) => cmd_clear(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_market_case_is_a_usage_error() {
        assert_eq!(run(["inertia-market", "clear", "--market-case", "7"]), EXIT_USAGE);
        assert_eq!(run(["inertia-market", "clear", "--market-case", "0"]), EXIT_USAGE);
    }

    #[test]
    fn zero_samples_is_a_usage_error() {
        assert_eq!(run(["inertia-market", "montecarlo", "--samples", "0"]), EXIT_USAGE);
    }

    #[test]
    fn missing_case_file_is_an_input_error() {
        assert_eq!(run(["inertia-market", "clear", "--case", "/nonexistent/case.json"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(["inertia-market", "--help"]), EXIT_OK);
    }
}
