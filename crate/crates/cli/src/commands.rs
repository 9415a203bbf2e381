//! The subcommands. Each returns the text for stdout; artifacts go to the
//! output directory when one is configured.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sigmaflow_core::classes::{classify_pn, classify_xmn_exact, limit_class, ratio_pn, LimitClass};
use sigmaflow_core::diagnostics::lambda_from_flow;
use sigmaflow_core::flow::output::{write_profiles, write_snapshots, RunSummary};
use sigmaflow_core::flow::{evolve, Grid, Initial};
use sigmaflow_core::gpoly::topological_constant_xmn;
use sigmaflow_core::obstacle::{self, complementarity_residual, default_omega, solve_psor, ObstacleProblem};
use sigmaflow_core::phase::{phase_diagram_pn, phase_diagram_xmn, BracketReport, PhaseDiagram};
use sigmaflow_core::stationary::{solve_lambda_pn, solve_xmn_system, stationary, stationary_constant};
use sigmaflow_core::{CaseLabel, CaseVariant, FlowProblem, PnProblem, Problem, RunStatus, XmnSystem};

use crate::config::{Family, InitialChoice, RunConfig};
use crate::error::{CliError, CliResult};

/// Version of every JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::BadInput(format!("cannot create {}: {e}", dir.display())))
}

fn create_file(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path).map_err(|e| CliError::BadInput(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Outcome of `classify`.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    pub n: u32,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_prime: Option<f64>,
    /// `ratio` on `ℙⁿ#ℙ̄ⁿ`, `c_k` on `X_{m,n}`.
    pub invariant_name: &'static str,
    pub invariant: f64,
    pub threshold: f64,
    pub case: CaseVariant,
    pub detail: Option<String>,
    /// `σ_k` along the limit.
    pub sigma_k: f64,
    pub lambda: Option<f64>,
    pub limit_class: Option<LimitClass>,
}

pub fn classify_report(problem: &Problem) -> CliResult<ClassifyReport> {
    let (label, invariant, system): (CaseLabel, f64, Option<XmnSystem>) = match problem {
        Problem::Pn(p) => (classify_pn(p), ratio_pn(p), None),
        Problem::Xmn(p) => {
            let ck = topological_constant_xmn(p)?;
            let label = classify_xmn_exact(p, &ck.exact);
            let system = (label.variant == CaseVariant::CurrentBlowup).then(|| solve_xmn_system(p)).transpose()?;
            (label, ck.value, system)
        }
    };
    let lambda = match (problem, label.variant) {
        (Problem::Pn(p), CaseVariant::CurrentBlowup) => Some(solve_lambda_pn(p)?),
        (Problem::Xmn(_), CaseVariant::CurrentBlowup) => system.map(|s| s.lambda),
        _ => None,
    };
    let mut report = ClassifyReport {
        schema_version: SCHEMA_VERSION,
        family: problem.family_name(),
        m: None,
        n: 0,
        k: problem.k(),
        alpha: None,
        beta: None,
        b: None,
        b_prime: None,
        invariant_name: "ratio",
        invariant,
        threshold: 0.0,
        case: label.variant,
        detail: label.detail.map(|d| d.to_string()),
        sigma_k: stationary_constant(problem)?,
        lambda,
        limit_class: lambda.map(|l| limit_class(problem, l)).transpose()?,
    };
    match problem {
        Problem::Pn(p) => {
            report.n = p.n;
            report.alpha = Some(p.alpha);
            report.beta = Some(p.beta);
            report.threshold = p.threshold();
        }
        Problem::Xmn(p) => {
            report.m = Some(p.m);
            report.n = p.n;
            report.b = Some(p.b);
            report.b_prime = Some(p.b_prime);
            report.invariant_name = "c_k";
            report.threshold = p.threshold();
        }
    }
    Ok(report)
}

impl ClassifyReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<12}{v}\n"));
        line("family", self.family.to_string());
        match self.m {
            Some(m) => line("dimensions", format!("m={m} n={} k={}", self.n, self.k)),
            None => line("dimensions", format!("n={} k={}", self.n, self.k)),
        }
        match (self.alpha, self.beta, self.b, self.b_prime) {
            (Some(a), Some(b), _, _) => line("classes", format!("alpha={a} beta={b}")),
            (_, _, Some(b), Some(bp)) => line("classes", format!("b={b} b_prime={bp}")),
            _ => {}
        }
        line(self.invariant_name, self.invariant.to_string());
        line("threshold", self.threshold.to_string());
        match &self.detail {
            Some(d) => line("case", format!("{} ({d})", self.case)),
            None => line("case", self.case.to_string()),
        }
        line("sigma_k", self.sigma_k.to_string());
        if let Some(l) = self.lambda {
            line("lambda", l.to_string());
        }
        if let Some(c) = &self.limit_class {
            line("limit class", c.class.to_string());
            line("current", format!("{}[{}]", c.current_coefficient, c.current_divisor));
        }
        s
    }
}

pub fn classify(cfg: &RunConfig, as_json: bool) -> CliResult<String> {
    let report = classify_report(&cfg.problem)?;
    if as_json {
        json(&report)
    } else {
        Ok(report.to_text())
    }
}

/// `x, f, fprime` of the closed-form limit on the configured grid.
pub fn stationary_profile(cfg: &RunConfig) -> CliResult<String> {
    let s = stationary(&cfg.problem)?;
    let grid = Grid::new(s.x_lo, s.x_hi, cfg.points)?;
    match &cfg.out {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join("stationary.csv");
            s.write_csv_to(grid.nodes(), create_file(&path)?)?;
            Ok(format!("{}\n", path.display()))
        }
        None => {
            let mut buf = Vec::new();
            s.write_csv_to(grid.nodes(), &mut buf)?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub schema_version: u32,
    pub family: &'static str,
    pub lambda: f64,
    /// `(α, β)` of the contact system on `X_{m,n}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_beta: Option<f64>,
    pub current_coefficient: f64,
}

/// Contact point of a blow-up instance.
pub fn lambda(cfg: &RunConfig, as_json: bool) -> CliResult<String> {
    let report = classify_report(&cfg.problem)?;
    let Some(lambda) = report.lambda else {
        return Err(CliError::BadInput(format!("no contact point: the limit is {}", report.case)));
    };
    let (system_alpha, system_beta) = match &cfg.problem {
        Problem::Xmn(p) => {
            let s = solve_xmn_system(p)?;
            (Some(s.alpha), Some(s.beta))
        }
        Problem::Pn(_) => (None, None),
    };
    let out = LambdaReport {
        schema_version: SCHEMA_VERSION,
        family: report.family,
        lambda,
        system_alpha,
        system_beta,
        current_coefficient: report.limit_class.map_or(f64::NAN, |c| c.current_coefficient),
    };
    if as_json {
        return json(&out);
    }
    let mut s = format!("lambda      {}\n", out.lambda);
    if let (Some(a), Some(b)) = (out.system_alpha, out.system_beta) {
        s.push_str(&format!("alpha       {a}\nbeta        {b}\n"));
    }
    s.push_str(&format!("current     {}\n", out.current_coefficient));
    Ok(s)
}

/// Runs the flow. Writes `snapshots.csv`, `profiles.csv` and `summary.json`
/// when an output directory is set; prints the summary either way.
pub fn evolve_cmd(cfg: &RunConfig) -> CliResult<String> {
    let fp = FlowProblem::new(cfg.problem.clone(), cfg.flux.clone())?;
    let grid = fp.grid(cfg.points)?;
    let init = match cfg.initial {
        InitialChoice::Chord => Initial::Chord,
        InitialChoice::Analytic => {
            let s = fp.analytic()?;
            Initial::Custom(grid.nodes().iter().map(|&x| s.value(x)).collect::<Result<_, _>>()?)
        }
    };
    let mut scheme = cfg.scheme.clone();
    scheme.keep_snapshots = cfg.out.is_some();
    let run = evolve(&fp, &grid, &scheme, &init)?;
    let lambda = if fp.case_label()?.variant == CaseVariant::CurrentBlowup {
        Some(lambda_from_flow(&fp, &run.state)?)
    } else {
        None
    };
    let summary = RunSummary::new(&fp, &run, lambda)?;
    let text = summary.to_json()? + "\n";
    if let Some(dir) = &cfg.out {
        create_dir(dir)?;
        write_snapshots(&run, create_file(&dir.join("snapshots.csv"))?)?;
        write_profiles(&fp, &run, create_file(&dir.join("profiles.csv"))?)?;
        create_file(&dir.join("summary.json"))?.write_all(text.as_bytes())?;
    }
    if run.status == RunStatus::Indeterminate {
        print!("{text}");
        return Err(CliError::Indeterminate(format!(
            "not steady after {} steps (t = {}, max |rhs| = {:e})",
            run.steps, run.state.t, run.final_residual
        )));
    }
    Ok(text)
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstacleReport {
    pub schema_version: u32,
    pub n: u32,
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    pub points: usize,
    pub omega: f64,
    pub sweeps: usize,
    pub polish_steps: usize,
    pub lambda: f64,
    pub lambda_analytic: Option<f64>,
    pub energy: f64,
    pub complementarity: f64,
    /// Sup distance to the closed-form limit at the nodes.
    pub sup_gap: f64,
}

pub const OBSTACLE_POINTS: usize = 800;

/// PSOR solve of the obstacle problem on `ℙⁿ#ℙ̄ⁿ`.
pub fn obstacle_cmd(cfg: &RunConfig, omega: Option<f64>, tol: f64) -> CliResult<String> {
    let Problem::Pn(p) = &cfg.problem else {
        return Err(CliError::BadInput("the obstacle formulation is available on ℙⁿ#ℙ̄ⁿ only".into()));
    };
    let problem = ObstacleProblem::from_pn(p)?;
    let x = problem.grid(cfg.points)?;
    let omega = omega.unwrap_or_else(|| default_omega(cfg.points));
    let sol = solve_psor(&problem, &x, omega, tol)?;
    let limit = stationary(&cfg.problem)?;
    let mut sup_gap = 0.0f64;
    for (xi, fi) in x.iter().zip(&sol.f) {
        sup_gap = sup_gap.max((limit.value(*xi)? - fi).abs());
    }
    let report = ObstacleReport {
        schema_version: SCHEMA_VERSION,
        n: p.n,
        k: p.k,
        alpha: p.alpha,
        beta: p.beta,
        points: cfg.points,
        omega,
        sweeps: sol.sweeps,
        polish_steps: sol.polish_steps,
        lambda: sol.lambda,
        lambda_analytic: (classify_pn(p).variant == CaseVariant::CurrentBlowup).then_some(limit.lambda),
        energy: obstacle::energy(&problem, &x, &sol.f)?,
        complementarity: complementarity_residual(&problem, &x, &sol.f)?.max(),
        sup_gap,
    };
    let text = json(&report)?;
    if let Some(dir) = &cfg.out {
        create_dir(dir)?;
        obstacle::write_csv(&problem, &sol, create_file(&dir.join("obstacle.csv"))?)?;
        create_file(&dir.join("obstacle.json"))?.write_all(text.as_bytes())?;
    }
    Ok(text)
}

/// Parameters of `phase-diagram`.
#[derive(Clone, Debug)]
pub struct PhaseRequest {
    pub family: Family,
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub a_range: (f64, f64),
    pub c_range: (f64, f64),
    pub resolution: (usize, usize),
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseSummary {
    pub schema_version: u32,
    pub family: &'static str,
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub resolution: (usize, usize),
    pub smooth: usize,
    pub conic: usize,
    pub blowup: usize,
    /// Cells whose empirical label differs from the analytic one.
    pub disagreements: usize,
    pub bracket: BracketReport,
}

fn build_diagram(req: &PhaseRequest) -> CliResult<PhaseDiagram> {
    Ok(match req.family {
        Family::Pn => phase_diagram_pn(req.n, req.k, req.a_range, req.c_range, req.resolution)?,
        Family::Xmn => phase_diagram_xmn(req.m, req.n, req.k, req.a_range, req.c_range, req.resolution)?,
    })
}

/// `c, a_boundary` rows; empty `a_boundary` when the row has none.
fn write_boundary<W: Write>(d: &PhaseDiagram, out: W) -> CliResult<()> {
    let names = match d.family {
        sigmaflow_core::phase::PhaseFamily::Pn => ["beta", "alpha_boundary"],
        sigmaflow_core::phase::PhaseFamily::Xmn => ["b_prime", "b_boundary"],
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for &c in &d.c_values {
        let b = d.analytic_boundary(c)?.filter(|b| b.is_finite());
        w.write_record(&[c.to_string(), b.map(|b| b.to_string()).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

fn phase_summary(req: &PhaseRequest, d: &PhaseDiagram) -> CliResult<PhaseSummary> {
    let count = |v: CaseVariant| d.cells.iter().filter(|c| c.case == v).count();
    Ok(PhaseSummary {
        schema_version: SCHEMA_VERSION,
        family: match req.family {
            Family::Pn => "pn",
            Family::Xmn => "xmn",
        },
        m: req.m,
        n: req.n,
        k: req.k,
        resolution: req.resolution,
        smooth: count(CaseVariant::Smooth),
        conic: count(CaseVariant::ConicBoundary),
        blowup: count(CaseVariant::CurrentBlowup),
        disagreements: d.cells.iter().filter(|c| c.empirical.is_some_and(|e| e != c.case)).count(),
        bracket: d.bracket_report()?,
    })
}

/// Case labels over a grid of classes. With an output directory, writes
/// `phase.csv` and `boundary.csv` and prints a summary; otherwise prints
/// the cell CSV.
pub fn phase_diagram(req: &PhaseRequest) -> CliResult<String> {
    let d = build_diagram(req)?;
    match &req.out {
        Some(dir) => {
            create_dir(dir)?;
            d.write_csv(create_file(&dir.join("phase.csv"))?)?;
            write_boundary(&d, create_file(&dir.join("boundary.csv"))?)?;
            json(&phase_summary(req, &d)?)
        }
        None => {
            let mut buf = Vec::new();
            d.write_csv(&mut buf)?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
    }
}

/// One curve of the four-case picture.
#[derive(Clone, Debug, Serialize)]
pub struct CaseCurve {
    pub subcase: String,
    pub alpha: f64,
    pub beta: f64,
    pub file: String,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub n: u32,
    pub k: u32,
    pub phase: PhaseSummary,
    pub cases: Vec<CaseCurve>,
}

/// `α` on the boundary of the cone for this `β`.
pub fn conic_alpha(n: u32, k: u32, beta: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    (((n - k) / n * (beta.powf(n) - 1.0) + 1.0) / beta.powf(n - k)).powf(1.0 / k)
}

/// Figure data: the phase diagram over `α, β ∈ [1.05, 3]` and the initial,
/// final and closed-form profiles for one instance of each sub-case at
/// `β = 2`.
pub fn report(n: u32, k: u32, points: usize, resolution: usize, out: &Path) -> CliResult<String> {
    if k >= n {
        return Err(CliError::BadInput(format!("k = {k} leaves no blow-up region for n = {n}")));
    }
    create_dir(out)?;
    let req = PhaseRequest {
        family: Family::Pn,
        m: 0,
        n,
        k,
        a_range: (1.05, 3.0),
        c_range: (1.05, 3.0),
        resolution: (resolution, resolution),
        out: None,
    };
    let d = build_diagram(&req)?;
    d.write_csv(create_file(&out.join("phase.csv"))?)?;
    write_boundary(&d, create_file(&out.join("boundary.csv"))?)?;
    let phase = phase_summary(&req, &d)?;

    let beta = 2.0;
    let tangent = conic_alpha(n, k, beta);
    let alphas = [beta + 1.0, 0.5 * (tangent + beta), tangent, 1.0 + 0.8 * (tangent - 1.0)];
    let mut cases = Vec::new();
    for alpha in alphas {
        let p = PnProblem::new(n, k, alpha, beta)?;
        let subcase = classify_pn(&p).detail.map(|d| d.to_string()).unwrap_or_default();
        let fp = FlowProblem::new(p, sigmaflow_core::FluxFunction::NegIdentity)?;
        let grid = fp.grid(points)?;
        let scheme = sigmaflow_core::SchemeConfig::default();
        let run = evolve(&fp, &grid, &scheme, &Initial::Chord)?;
        let lambda = (fp.case_label()?.variant == CaseVariant::CurrentBlowup)
            .then(|| lambda_from_flow(&fp, &run.state))
            .transpose()?;
        let file = format!("case_{}.csv", subcase.to_lowercase());
        write_profiles(&fp, &run, create_file(&out.join(&file))?)?;
        cases.push(CaseCurve { subcase, alpha, beta, file, summary: RunSummary::new(&fp, &run, lambda)? });
    }
    let text = json(&Report { schema_version: SCHEMA_VERSION, n, k, phase, cases })?;
    create_file(&out.join("report.json"))?.write_all(text.as_bytes())?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conic_alpha_is_on_the_boundary() {
        assert!((conic_alpha(2, 1, 2.0) - 1.25).abs() < 1e-15);
        for (n, k) in [(3, 1), (3, 2), (4, 3)] {
            let p = PnProblem::new(n, k, conic_alpha(n, k, 1.7), 1.7).unwrap();
            assert!((ratio_pn(&p) - p.threshold()).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_text_lines() {
        let r = classify_report(&PnProblem::new(2, 1, 1.2, 2.0).unwrap().into()).unwrap();
        let t = r.to_text();
        assert!(t.contains("case        CurrentBlowup (Obstacle)\n"), "{t}");
        assert!(t.lines().any(|l| l.starts_with("lambda      1.0733")));
        assert!(r.limit_class.is_some());
    }
}
