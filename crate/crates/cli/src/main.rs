#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sigmaflow_cli::commands::{self, PhaseRequest, OBSTACLE_POINTS};
use sigmaflow_cli::config::{FileConfig, Family, InitialChoice, ProblemArgs, RunConfig, SchemeArgs, DEFAULT_POINTS};
use sigmaflow_cli::CliResult;

#[derive(Parser, Debug)]
#[command(name = "sigmaflow", version)]
#[command(about = "Reduced inverse σ_k-flows on ℙⁿ#ℙ̄ⁿ and X_{m,n}: case labels, limits, flows, obstacle solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Case label, invariant, threshold and (on blow-up) λ and the limit class.
    Classify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        json: bool,
    },
    /// Closed-form limit profile as `x,f,fprime` CSV.
    Stationary {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contact point of a blow-up instance.
    Lambda {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        json: bool,
    },
    /// Evolve from chord (or closed-form) data to the steady state.
    Evolve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, value_enum)]
        initial: Option<InitialChoice>,
        /// Directory for snapshots.csv, profiles.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projected SOR solve of the obstacle problem on ℙⁿ#ℙ̄ⁿ.
    Obstacle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Case labels over a grid of classes.
    PhaseDiagram {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
        /// `lo,hi` of α (or b).
        #[arg(long, alias = "alpha-range", alias = "b-range", value_parser = parse_range)]
        a_range: (f64, f64),
        /// `lo,hi` of β (or b′).
        #[arg(long, alias = "beta-range", alias = "bprime-range", value_parser = parse_range)]
        c_range: (f64, f64),
        /// `N` or `NxM` cells (α by β).
        #[arg(long, default_value = "50", value_parser = parse_resolution)]
        resolution: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase diagram and four-case profile data for ℙⁿ#ℙ̄ⁿ.
    Report {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once([',', ':']).ok_or_else(|| format!("expected lo,hi but got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(hi > lo) {
        return Err(format!("empty range {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{e}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Classify { problem, json } => {
            commands::classify(&RunConfig::resolve(&problem, None, None, None, DEFAULT_POINTS)?, json)
        }
        Command::Stationary { problem, out } => {
            commands::stationary_profile(&RunConfig::resolve(&problem, None, None, out, DEFAULT_POINTS)?)
        }
        Command::Lambda { problem, json } => {
            commands::lambda(&RunConfig::resolve(&problem, None, None, None, DEFAULT_POINTS)?, json)
        }
        Command::Evolve { problem, scheme, initial, out } => {
            commands::evolve_cmd(&RunConfig::resolve(&problem, Some(&scheme), initial, out, DEFAULT_POINTS)?)
        }
        Command::Obstacle { problem, omega, tol, out } => {
            commands::obstacle_cmd(&RunConfig::resolve(&problem, None, None, out, OBSTACLE_POINTS)?, omega, tol)
        }
        Command::PhaseDiagram { config, family, m, n, k, a_range, c_range, resolution, out } => {
            let file = match &config {
                Some(path) => FileConfig::load(path)?,
                None => FileConfig::default(),
            };
            let req = PhaseRequest {
                family: family.map_or_else(|| file.get("family"), |f| Ok(Some(f)))?.unwrap_or(Family::Pn),
                m: m.map_or_else(|| file.get("m"), |v| Ok(Some(v)))?.unwrap_or(0),
                n: n.map_or_else(|| file.get("n"), |v| Ok(Some(v)))?.unwrap_or(2),
                k: k.map_or_else(|| file.get("k"), |v| Ok(Some(v)))?.unwrap_or(1),
                a_range,
                c_range,
                resolution,
                out: out.map_or_else(|| file.get("out"), |v| Ok(Some(v)))?,
            };
            commands::phase_diagram(&req)
        }
        Command::Report { n, k, points, resolution, out } => commands::report(n, k, points, resolution, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

