//! Case labels over a grid of classes.
//!
//! On `ℙⁿ#ℙ̄ⁿ` each cell also carries an independent label read off the
//! discrete unconstrained solution `g̃` of `Lg = 0`: the limit is smooth
//! when `g̃′(1) > 0` and blows up when `g̃′(1) < 0`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{classify_pn, classify_xmn_exact, CaseVariant, PnProblem, XmnProblem};
use crate::error::{Error, Result};
use crate::gpoly::topological_constant_xmn;

/// Nodes of the unconstrained solve behind the empirical label.
pub const EMPIRICAL_POINTS: usize = 401;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhaseFamily {
    Pn,
    Xmn,
}

/// One cell. `a` is `α` (or `b`), `c` is `β` (or `b′`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseCell {
    pub row: usize,
    pub col: usize,
    pub a: f64,
    pub c: f64,
    /// Ratio on `ℙⁿ#ℙ̄ⁿ`, `c_k` on `X_{m,n}`.
    pub invariant: f64,
    pub threshold: f64,
    pub case: CaseVariant,
    pub empirical: Option<CaseVariant>,
    /// `g̃′(1)` behind the empirical label.
    pub slope: Option<f64>,
}

/// Row-major grid: rows step through `c`, columns through `a`.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiagram {
    pub family: PhaseFamily,
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub a_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub cells: Vec<PhaseCell>,
}

fn axis(range: (f64, f64), count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(range.1 > range.0) {
        return Err(Error::InvalidParameter(format!("axis {range:?} with {count} samples")));
    }
    Ok((0..count).map(|i| range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64).collect())
}

/// `g̃′(1)` of the three-point solution of `Lg = 0`, `g(1) = 1`,
/// `g(β) = α^k`, by a second-order one-sided difference.
pub fn unconstrained_slope(p: &PnProblem, points: usize) -> Result<f64> {
    if points < 5 {
        return Err(Error::InvalidParameter(format!("{points} nodes")));
    }
    let (n, k) = (p.n as i32, p.k as i32);
    let h = (p.beta - 1.0) / (points - 1) as f64;
    let x = |i: usize| 1.0 + i as f64 * h;
    let w = |t: f64| t.powi(n + 1 - 2 * k);
    let r = (k * (n - k)) as f64;
    // rows −pm g_{i−1} + d g_i − pp g_{i+1} = 0, Thomas elimination
    let mut cp = vec![0.0; points];
    let mut dp = vec![0.0; points];
    dp[0] = 1.0;
    for i in 1..points - 1 {
        let xi = x(i);
        let pp = w(xi + 0.5 * h);
        let pm = w(xi - 0.5 * h);
        let d = pp + pm + h * h * r * w(xi) / (xi * xi);
        let den = d - pm * cp[i - 1];
        cp[i] = pp / den;
        dp[i] = pm * dp[i - 1] / den;
    }
    let mut g = vec![0.0; points];
    g[0] = 1.0;
    g[points - 1] = p.alpha.powi(k);
    for i in (1..points - 1).rev() {
        g[i] = dp[i] + cp[i] * g[i + 1];
    }
    Ok((-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h))
}

fn pn_cell(n: u32, k: u32, row: usize, col: usize, a: f64, c: f64, points: usize) -> Result<PhaseCell> {
    let p = PnProblem::new(n, k, a, c)?;
    let slope = unconstrained_slope(&p, points)?;
    let empirical = if p.alpha > p.beta || slope > 0.0 {
        CaseVariant::Smooth
    } else if slope < 0.0 {
        CaseVariant::CurrentBlowup
    } else {
        CaseVariant::ConicBoundary
    };
    Ok(PhaseCell {
        row,
        col,
        a,
        c,
        invariant: crate::classes::ratio_pn(&p),
        threshold: p.threshold(),
        case: classify_pn(&p).variant,
        empirical: Some(empirical),
        slope: Some(slope),
    })
}

fn xmn_cell(m: u32, n: u32, k: u32, row: usize, col: usize, a: f64, c: f64) -> Result<PhaseCell> {
    let p = XmnProblem::new(m, n, k, a, c)?;
    let ck = topological_constant_xmn(&p)?;
    Ok(PhaseCell {
        row,
        col,
        a,
        c,
        invariant: ck.value,
        threshold: p.threshold(),
        case: classify_xmn_exact(&p, &ck.exact).variant,
        empirical: None,
        slope: None,
    })
}

/// Sweep over `α × β`; cells are evaluated in parallel.
pub fn phase_diagram_pn(
    n: u32,
    k: u32,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<PhaseDiagram> {
    PnProblem::new(n, k, alpha_range.0.max(1.0 + 1e-9), beta_range.0.max(1.0 + 1e-9))?;
    let a_values = axis(alpha_range, resolution.0)?;
    let c_values = axis(beta_range, resolution.1)?;
    let cells = (0..a_values.len() * c_values.len())
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / a_values.len(), idx % a_values.len());
            pn_cell(n, k, row, col, a_values[col], c_values[row], EMPIRICAL_POINTS)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { family: PhaseFamily::Pn, m: 0, n, k, a_values, c_values, cells })
}

/// Sweep over `b × b′`.
pub fn phase_diagram_xmn(
    m: u32,
    n: u32,
    k: u32,
    b_range: (f64, f64),
    b_prime_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<PhaseDiagram> {
    let a_values = axis(b_range, resolution.0)?;
    let c_values = axis(b_prime_range, resolution.1)?;
    let cells = (0..a_values.len() * c_values.len())
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / a_values.len(), idx % a_values.len());
            xmn_cell(m, n, k, row, col, a_values[col], c_values[row])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { family: PhaseFamily::Xmn, m, n, k, a_values, c_values, cells })
}

impl PhaseDiagram {
    pub fn row(&self, r: usize) -> &[PhaseCell] {
        let w = self.a_values.len();
        &self.cells[r * w..(r + 1) * w]
    }

    /// Writes one row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let (a_name, c_name) = match self.family {
            PhaseFamily::Pn => ("alpha", "beta"),
            PhaseFamily::Xmn => ("b", "b_prime"),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record([a_name, c_name, "invariant", "threshold", "case", "empirical", "slope"])?;
        for cell in &self.cells {
            w.write_record(&[
                cell.a.to_string(),
                cell.c.to_string(),
                cell.invariant.to_string(),
                cell.threshold.to_string(),
                cell.case.to_string(),
                cell.empirical.map(|e| e.to_string()).unwrap_or_default(),
                cell.slope.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Checks every row against the analytic boundary.
    pub fn bracket_report(&self) -> Result<BracketReport> {
        let mut report = BracketReport { rows: self.c_values.len(), bracketing: 0, failures: Vec::new() };
        for r in 0..self.c_values.len() {
            let row = self.row(r);
            let boundary = self.analytic_boundary(self.c_values[r])?;
            if row_brackets(row, &self.a_values, boundary) {
                report.bracketing += 1;
            } else {
                report.failures.push(r);
            }
        }
        Ok(report)
    }

    /// `a` at which the invariant meets the threshold for fixed `c`, if any.
    pub fn analytic_boundary(&self, c: f64) -> Result<Option<f64>> {
        let (n, k) = (self.n as f64, self.k as f64);
        match self.family {
            PhaseFamily::Pn => {
                if self.k == self.n {
                    return Ok(None);
                }
                let ak = ((n - k) / n * (c.powf(n) - 1.0) + 1.0) / c.powf(n - k);
                Ok(Some(ak.powf(1.0 / k)))
            }
            PhaseFamily::Xmn => {
                if self.k > self.n {
                    return Ok(None);
                }
                // c_k grows with b; bisect between the axis ends
                let gap = |b: f64| -> Result<f64> {
                    let p = XmnProblem::new(self.m, self.n, self.k, b, c)?;
                    Ok(topological_constant_xmn(&p)?.value - p.threshold())
                };
                let (mut lo, mut hi) = (self.a_values[0], self.a_values[self.a_values.len() - 1]);
                let (glo, ghi) = (gap(lo)?, gap(hi)?);
                if glo >= 0.0 || ghi <= 0.0 {
                    return Ok(if glo >= 0.0 { Some(f64::NEG_INFINITY) } else { Some(f64::INFINITY) });
                }
                while hi - lo > 1e-12 * hi {
                    let mid = 0.5 * (lo + hi);
                    if gap(mid)? < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(Some(0.5 * (lo + hi)))
            }
        }
    }
}

fn is_blowup(cell: &PhaseCell) -> bool {
    cell.empirical.unwrap_or(cell.case) == CaseVariant::CurrentBlowup
}

/// Blow-up cells precede smooth ones and the switch straddles `boundary`.
fn row_brackets(row: &[PhaseCell], a: &[f64], boundary: Option<f64>) -> bool {
    let switch = row.iter().position(|c| !is_blowup(c)).unwrap_or(row.len());
    if row[switch..].iter().any(is_blowup) {
        return false;
    }
    match boundary {
        None => switch == 0,
        Some(b) => {
            let left_ok = switch == 0 || a[switch - 1] < b;
            let right_ok = switch == row.len() || a[switch] > b;
            left_ok && right_ok
        }
    }
}

/// Outcome of [`PhaseDiagram::bracket_report`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub rows: usize,
    pub bracketing: usize,
    pub failures: Vec<usize>,
}

impl BracketReport {
    pub fn all(&self) -> bool {
        self.failures.is_empty()
    }
}
