//! Run configuration: command-line flags over an optional `key = value`
//! file over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use sigmaflow_core::{FluxFunction, PnProblem, Problem, SchemeConfig, XmnProblem};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Pn,
    Xmn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FluxChoice {
    NegIdentity,
    NegLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitialChoice {
    /// Linear between the boundary values.
    Chord,
    /// The closed-form limit sampled on the grid.
    Analytic,
}

macro_rules! from_str_via_value_enum {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    )*};
}

from_str_via_value_enum!(Family, FluxChoice, InitialChoice);

/// Keys accepted in a configuration file.
pub const FILE_KEYS: &[&str] = &[
    "family",
    "m",
    "n",
    "k",
    "alpha",
    "beta",
    "b",
    "b_prime",
    "flux",
    "points",
    "cfl",
    "steady_tol",
    "max_time",
    "max_steps",
    "theta",
    "dt_max",
    "record_every",
    "initial",
    "out",
];

/// Parsed `key = value` lines. `#` starts a comment; `-` in keys reads as `_`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::BadInput(format!("config line {}: expected key = value", no + 1)));
            };
            let key = key.trim().replace('-', "_");
            let key = if key == "bprime" { "b_prime".to_string() } else { key };
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(CliError::BadInput(format!("config line {}: unknown key `{key}`", no + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::BadInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::BadInput(format!("config key `{key}` = `{v}`: {e}"))))
            .transpose()
    }
}

/// Flag if given, else the file value.
fn pick<T>(flag: Option<T>, file: &FileConfig, key: &str) -> CliResult<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Problem selection shared by every command.
#[derive(Args, Clone, Debug, Default)]
pub struct ProblemArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long = "bprime", alias = "b-prime", allow_hyphen_values = true)]
    pub b_prime: Option<f64>,
    #[arg(long, value_enum)]
    pub flux: Option<FluxChoice>,
    /// Grid nodes.
    #[arg(long)]
    pub points: Option<usize>,
}

/// Time-stepping flags.
#[derive(Args, Clone, Debug, Default)]
pub struct SchemeArgs {
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub steady_tol: Option<f64>,
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
}

/// Everything a command needs, after merging.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub family: Family,
    pub problem: Problem,
    pub flux: FluxFunction,
    pub points: usize,
    pub scheme: SchemeConfig,
    pub initial: InitialChoice,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_POINTS: usize = 400;

impl RunConfig {
    pub fn resolve(
        problem: &ProblemArgs,
        scheme: Option<&SchemeArgs>,
        initial: Option<InitialChoice>,
        out: Option<PathBuf>,
        default_points: usize,
    ) -> CliResult<Self> {
        let file = match &problem.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let family = pick(problem.family, &file, "family")?.unwrap_or(Family::Pn);
        let n = pick(problem.n, &file, "n")?.unwrap_or(2);
        let k = pick(problem.k, &file, "k")?.unwrap_or(1);
        let required = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::BadInput(format!("--{name} is required for family {family:?}")))
        };
        let problem_value: Problem = match family {
            Family::Pn => {
                let alpha = required(pick(problem.alpha, &file, "alpha")?, "alpha")?;
                let beta = required(pick(problem.beta, &file, "beta")?, "beta")?;
                PnProblem::new(n, k, alpha, beta)?.into()
            }
            Family::Xmn => {
                let m = pick(problem.m, &file, "m")?.unwrap_or(0);
                let b = required(pick(problem.b, &file, "b")?, "b")?;
                let b_prime = required(pick(problem.b_prime, &file, "b_prime")?, "bprime")?;
                XmnProblem::new(m, n, k, b, b_prime)?.into()
            }
        };
        let flux = match pick(problem.flux, &file, "flux")?.unwrap_or(FluxChoice::NegIdentity) {
            FluxChoice::NegIdentity => FluxFunction::NegIdentity,
            FluxChoice::NegLog => FluxFunction::NegLog,
        };
        let points = pick(problem.points, &file, "points")?.unwrap_or(default_points);

        let s = scheme.cloned().unwrap_or_default();
        let d = SchemeConfig::default();
        let scheme = SchemeConfig {
            cfl: pick(s.cfl, &file, "cfl")?.unwrap_or(d.cfl),
            steady_tol: pick(s.steady_tol, &file, "steady_tol")?.unwrap_or(d.steady_tol),
            max_time: pick(s.max_time, &file, "max_time")?.or(d.max_time),
            max_steps: pick(s.max_steps, &file, "max_steps")?.or(d.max_steps),
            theta: pick(s.theta, &file, "theta")?.unwrap_or(d.theta),
            dt_max: pick(s.dt_max, &file, "dt_max")?.unwrap_or(d.dt_max),
            record_every: pick(s.record_every, &file, "record_every")?.unwrap_or(d.record_every),
            ..d
        };
        scheme.validate()?;
        Ok(Self {
            family,
            problem: problem_value,
            flux,
            points,
            scheme,
            initial: pick(initial, &file, "initial")?.unwrap_or(InitialChoice::Chord),
            out: pick(out, &file, "out")?,
        })
    }
}
