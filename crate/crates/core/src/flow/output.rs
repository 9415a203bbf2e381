//! Snapshot CSV and run-summary JSON.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

use super::{FlowProblem, FlowRun, RunStatus};

/// Version of the [`RunSummary`] layout.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Writes `t, x, f, fprime, sigma_k` rows for every kept snapshot.
pub fn write_snapshots<W: Write>(run: &FlowRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "f", "fprime", "sigma_k"])?;
    let x = run.state.grid.nodes();
    for s in &run.snapshots {
        for i in 0..x.len() {
            w.write_record(&[
                s.t.to_string(),
                x[i].to_string(),
                s.f[i].to_string(),
                s.fx[i].to_string(),
                s.sigma[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `x, f0, f_final, f_analytic` rows.
pub fn write_profiles<W: Write>(fp: &FlowProblem, run: &FlowRun, out: W) -> Result<()> {
    let analytic = fp.analytic()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "f0", "f_final", "f_analytic"])?;
    let (f0, f1) = (run.initial.f(), run.state.f());
    for (i, &x) in run.state.grid.nodes().iter().enumerate() {
        w.write_record(&[
            x.to_string(),
            f0[i].to_string(),
            f1[i].to_string(),
            analytic.value(x)?.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Machine-readable summary of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub family: String,
    pub case: String,
    pub detail: Option<String>,
    pub status: RunStatus,
    pub steps: usize,
    pub final_time: f64,
    pub final_residual: f64,
    pub sup_error: f64,
    pub wall_time: f64,
    pub lambda_estimate: Option<f64>,
    pub lambda_analytic: f64,
}

impl RunSummary {
    pub fn new(fp: &FlowProblem, run: &FlowRun, lambda_estimate: Option<f64>) -> Result<Self> {
        let label = fp.case_label()?;
        let analytic = fp.analytic()?;
        Ok(Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            family: fp.problem.family_name().into(),
            case: label.variant.to_string(),
            detail: label.detail.map(|d| d.to_string()),
            status: run.status,
            steps: run.steps,
            final_time: run.state.t,
            final_residual: run.final_residual,
            sup_error: run.records.last().map_or(f64::NAN, |r| r.sup_error),
            wall_time: run.wall_time,
            lambda_estimate,
            lambda_analytic: analytic.lambda,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
