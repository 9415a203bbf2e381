//! Time evolution of the reduced flows on a uniform 1-D grid.
//!
//! `ℙⁿ#ℙ̄ⁿ` runs on `x ∈ [1, β]` with `f(1) = 1, f(β) = α`, in the variable
//! `g = f^k` when `k > 1`. `X_{m,n}` runs on `x ∈ [0, b′]` with `f(0) = 0,
//! f(b′) = b`. The contract scheme is explicit Euler with a stability-limited
//! step; `theta > 0` switches to a frozen-coefficient θ-scheme.

pub mod output;
pub mod rhs;

use std::time::Instant;

use serde::Serialize;

use crate::classes::{classify_pn, classify_xmn_exact, CaseLabel, Problem};
use crate::error::{Error, Result};
use crate::gpoly::{g_mn, g_mnk, topological_constant_xmn, GRatio};
use crate::potential::{make_profile, FluxFunction, Potential, RadialPotential};
use crate::stationary::{stationary, StationaryProfile};

pub use rhs::{coefficients, rhs, rhs_general_k, rhs_jflow, rhs_xmn, Coefficients};

/// Uniform grid on `[x_lo, x_hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
    #[serde(skip)]
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, points: usize) -> Result<Self> {
        if points < 16 {
            return Err(Error::InvalidParameter(format!("grid needs >= 16 points, got {points}")));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty interval [{x_lo}, {x_hi}]")));
        }
        let h = (x_hi - x_lo) / (points - 1) as f64;
        let mut nodes: Vec<f64> = (0..points).map(|i| x_lo + h * i as f64).collect();
        nodes[points - 1] = x_hi;
        Ok(Self { x_lo, x_hi, points, nodes })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The unknown the scheme advances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variable {
    F,
    /// `g = f^k`
    G,
}

/// One experiment: manifold data, flux function and radial potential.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowProblem {
    pub problem: Problem,
    pub flux: FluxFunction,
    pub potential: Potential,
}

impl FlowProblem {
    /// Uses the logistic potential whose limits match the boundary data.
    pub fn new(problem: impl Into<Problem>, flux: FluxFunction) -> Result<Self> {
        let problem = problem.into();
        let (lo, hi) = match &problem {
            Problem::Pn(p) => (1.0, p.alpha),
            Problem::Xmn(p) => (0.0, p.b),
        };
        let potential = make_profile(lo, hi)?.into();
        Ok(Self { problem, flux, potential })
    }

    pub fn with_potential(problem: impl Into<Problem>, flux: FluxFunction, potential: Potential) -> Result<Self> {
        let fp = Self::new(problem, flux)?;
        let (lo, hi) = (fp.flat_value(), fp.boundary_hi());
        if (potential.lo() - lo).abs() > 1e-12 || (potential.hi() - hi).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "potential limits ({}, {}) do not match boundary data ({lo}, {hi})",
                potential.lo(),
                potential.hi()
            )));
        }
        Ok(Self { potential, ..fp })
    }

    pub fn x_range(&self) -> (f64, f64) {
        match &self.problem {
            Problem::Pn(p) => (1.0, p.beta),
            Problem::Xmn(p) => (0.0, p.b_prime),
        }
    }

    /// Value of `f` on the flat part and at `x_lo`.
    pub fn flat_value(&self) -> f64 {
        match &self.problem {
            Problem::Pn(_) => 1.0,
            Problem::Xmn(_) => 0.0,
        }
    }

    /// `f(x_hi)`.
    pub fn boundary_hi(&self) -> f64 {
        match &self.problem {
            Problem::Pn(p) => p.alpha,
            Problem::Xmn(p) => p.b,
        }
    }

    pub fn variable(&self) -> Variable {
        match &self.problem {
            Problem::Pn(p) if p.k > 1 => Variable::G,
            _ => Variable::F,
        }
    }

    fn k(&self) -> u32 {
        self.problem.k()
    }

    pub fn to_evolution(&self, f: f64) -> f64 {
        match self.variable() {
            Variable::F => f,
            Variable::G => f.powi(self.k() as i32),
        }
    }

    pub fn from_evolution(&self, u: f64) -> f64 {
        match self.variable() {
            Variable::F => u,
            Variable::G => u.max(0.0).powf(1.0 / self.k() as f64),
        }
    }

    pub fn grid(&self, points: usize) -> Result<Grid> {
        let (lo, hi) = self.x_range();
        Grid::new(lo, hi, points)
    }

    pub fn case_label(&self) -> Result<CaseLabel> {
        Ok(match &self.problem {
            Problem::Pn(p) => classify_pn(p),
            Problem::Xmn(p) => classify_xmn_exact(p, &topological_constant_xmn(p)?.exact),
        })
    }

    /// Closed-form limit profile.
    pub fn analytic(&self) -> Result<StationaryProfile> {
        stationary(&self.problem)
    }
}

/// Nodal state in the evolution variable.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: Vec<f64>,
    pub variable: Variable,
    pub k: u32,
    pub grid: Grid,
}

impl FlowState {
    /// Nodal values of `f`.
    pub fn f(&self) -> Vec<f64> {
        match self.variable {
            Variable::F => self.u.clone(),
            Variable::G => {
                let e = 1.0 / self.k as f64;
                self.u.iter().map(|&g| g.max(0.0).powf(e)).collect()
            }
        }
    }

    /// `f′` by central differences, second-order one-sided at the ends.
    pub fn fx(&self) -> Vec<f64> {
        derivative(&self.f(), self.grid.spacing())
    }
}

pub(crate) fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

/// Initial data.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    /// Linear in the evolution variable between the boundary values.
    Chord,
    /// Nodal values of `f`.
    Custom(Vec<f64>),
}

/// Time-stepping parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeConfig {
    /// Fraction of the explicit stability limit.
    pub cfl: f64,
    /// Steady once `max |rhs| < steady_tol` for `steady_window` consecutive steps.
    pub steady_tol: f64,
    pub steady_window: usize,
    /// Defaults to `1e4` diffusion times of the initial state.
    pub max_time: Option<f64>,
    pub max_steps: Option<usize>,
    /// Implicitness of the frozen-coefficient step; `0` is explicit Euler.
    pub theta: f64,
    /// Step used when `theta > 0`.
    pub dt_max: f64,
    /// Overrides the adaptive step (explicit only).
    pub fixed_dt: Option<f64>,
    /// A diagnostic record every this many steps.
    pub record_every: usize,
    /// Keep full profiles at every record.
    pub keep_snapshots: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            steady_tol: 1e-8,
            steady_window: 100,
            max_time: None,
            max_steps: None,
            theta: 0.0,
            dt_max: 0.05,
            fixed_dt: None,
            record_every: 1000,
            keep_snapshots: false,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl = {} not in (0, 1]", self.cfl)));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::InvalidParameter("steady_tol must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta = {} not in [0, 1]", self.theta)));
        }
        if self.theta > 0.0 && !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter("dt_max must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    Converged,
    /// `max_time` or `max_steps` reached before the steady criterion.
    Indeterminate,
}

/// Diagnostics at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub step: usize,
    /// Sup-norm distance of `f` to the closed-form limit.
    pub sup_error: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub min_fx: f64,
    pub max_rhs: f64,
    pub rhs_min: f64,
    pub rhs_max: f64,
}

/// Full profile at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub f: Vec<f64>,
    pub fx: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Result of [`evolve`].
#[derive(Clone, Debug)]
pub struct FlowRun {
    pub state: FlowState,
    pub initial: FlowState,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub status: RunStatus,
    pub steps: usize,
    pub wall_time: f64,
    pub dt_reductions: usize,
    pub final_residual: f64,
    pub max_time: f64,
}

/// Builds and checks initial data.
pub fn initial_state(fp: &FlowProblem, grid: &Grid, init: &Initial) -> Result<FlowState> {
    let (lo, hi) = (fp.flat_value(), fp.boundary_hi());
    let (ulo, uhi) = (fp.to_evolution(lo), fp.to_evolution(hi));
    let u: Vec<f64> = match init {
        Initial::Chord => grid
            .nodes()
            .iter()
            .map(|&x| ulo + (uhi - ulo) * (x - grid.x_lo) / (grid.x_hi - grid.x_lo))
            .collect(),
        Initial::Custom(f) => {
            if f.len() != grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "initial data has {} values for {} nodes",
                    f.len(),
                    grid.len()
                )));
            }
            let scale = hi.abs().max(1.0);
            if (f[0] - lo).abs() > 1e-12 * scale || (f[f.len() - 1] - hi).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter("initial data misses the boundary values".into()));
            }
            if f.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidParameter("initial data is not monotone".into()));
            }
            let mut u: Vec<f64> = f.iter().map(|&v| fp.to_evolution(v)).collect();
            u[0] = ulo;
            let last = u.len() - 1;
            u[last] = uhi;
            u
        }
    };
    Ok(FlowState { t: 0.0, u, variable: fp.variable(), k: fp.k(), grid: grid.clone() })
}

/// `σ_k` of the eigenvalue tuple at every node.
pub fn sigma_profile(fp: &FlowProblem, state: &FlowState) -> Vec<f64> {
    let x = state.grid.nodes();
    let h = state.grid.spacing();
    match &fp.problem {
        Problem::Pn(p) => {
            let (n, k) = (p.n as f64, p.k as f64);
            let c = crate::sigma::binomial(p.n as usize, p.k as usize) / n;
            let gp = derivative(&state.u, h);
            x.iter()
                .zip(&state.u)
                .zip(&gp)
                .map(|((&x, &g), &gp)| c * (x.powf(1.0 - k) * gp + (n - k) * x.powf(-k) * g))
                .collect()
        }
        Problem::Xmn(p) => {
            let sig = rhs::XmnSigma::new(p.m, p.n, p.k);
            let f = &state.u;
            let fx = derivative(f, h);
            x.iter()
                .enumerate()
                .map(|(i, &x)| {
                    let q = if x > 0.0 { f[i] / x } else { fx[i] };
                    sig.sigma((1.0 + f[i]) / (1.0 + x), q, fx[i])
                })
                .collect()
        }
    }
}

/// `max |rhs|` over interior nodes.
pub fn residual(fp: &FlowProblem, state: &FlowState) -> Result<f64> {
    Ok(rhs(fp, state)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

struct Monitor<'a> {
    fp: &'a FlowProblem,
    analytic: Vec<f64>,
    keep: bool,
}

impl Monitor<'_> {
    fn record(&self, state: &FlowState, step: usize, c: &Coefficients, r: &[f64], snaps: &mut Vec<Snapshot>) -> StepRecord {
        let f = state.f();
        let h = state.grid.spacing();
        let interior = 1..f.len() - 1;
        let sup_error = f.iter().zip(&self.analytic).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &s in &c.sigma[interior.clone()] {
            smin = smin.min(s);
            smax = smax.max(s);
        }
        let min_fx = f.windows(2).fold(f64::INFINITY, |m, w| m.min((w[1] - w[0]) / h));
        let (mut rmin, mut rmax, mut rabs) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &v in &r[interior] {
            rmin = rmin.min(v);
            rmax = rmax.max(v);
            rabs = rabs.max(v.abs());
        }
        if self.keep {
            snaps.push(Snapshot { t: state.t, fx: state.fx(), sigma: sigma_profile(self.fp, state), f });
        }
        StepRecord {
            t: state.t,
            step,
            sup_error,
            sigma_min: smin,
            sigma_max: smax,
            min_fx,
            max_rhs: rabs,
            rhs_min: rmin,
            rhs_max: rmax,
        }
    }
}

/// Runs the flow from `init` until steady or `max_time`.
pub fn evolve(fp: &FlowProblem, grid: &Grid, scheme: &SchemeConfig, init: &Initial) -> Result<FlowRun> {
    let state = initial_state(fp, grid, init)?;
    evolve_from(fp, state, scheme)
}

/// Runs the flow from an existing state.
pub fn evolve_from(fp: &FlowProblem, mut state: FlowState, scheme: &SchemeConfig) -> Result<FlowRun> {
    scheme.validate()?;
    let start = Instant::now();
    let initial = state.clone();
    let analytic = fp.analytic()?;
    let monitor = Monitor {
        fp,
        analytic: state.grid.nodes().iter().map(|&x| analytic.value(x)).collect::<Result<_>>()?,
        keep: scheme.keep_snapshots,
    };
    let h = state.grid.spacing();
    let n = state.u.len();
    let (ulo, uhi) = (fp.to_evolution(fp.flat_value()), fp.to_evolution(fp.boundary_hi()));
    let slack = 1e-12 * uhi.abs().max(1.0);

    let mut c = Coefficients::default();
    coefficients(fp, &state.grid, &state.u, &mut c)?;
    let mut r = vec![0.0; n];
    let (inv_h2, inv_2h) = (1.0 / (h * h), 0.5 / h);
    let fill_rhs = |c: &Coefficients, u: &[f64], r: &mut [f64]| {
        let mut m = 0.0f64;
        let (u, r) = (&u[..n], &mut r[..n]);
        let (w, a2, a1, a0, s) = (&c.w[..n], &c.a2[..n], &c.a1[..n], &c.a0[..n], &c.s[..n]);
        for i in 1..n - 1 {
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
            let d1 = (u[i + 1] - u[i - 1]) * inv_2h;
            let v = w[i] * (a2[i] * d2 + a1[i] * d1 + a0[i] * u[i] + s[i]);
            r[i] = v;
            m = m.max(v.abs());
        }
        m
    };
    let mut max_rhs = fill_rhs(&c, &state.u, &mut r);

    let max_time = scheme.max_time.unwrap_or_else(|| {
        let w = (1..n - 1).map(|i| c.w[i] * c.a2[i]).fold(0.0f64, f64::max);
        let w = if w > 0.0 { w } else { (fp.potential.hi() - fp.potential.lo()) / 4.0 };
        1e4 * (state.grid.x_hi - state.grid.x_lo).powi(2) / w
    });

    let mut snapshots = Vec::new();
    let mut records = vec![monitor.record(&state, 0, &c, &r, &mut snapshots)];
    let mut steps = 0usize;
    let mut below = 0usize;
    let mut factor = 1.0f64;
    let mut reductions = 0usize;
    let mut next = state.u.clone();
    let mut tri = Tridiagonal::new(n);

    let status = loop {
        if max_rhs < scheme.steady_tol {
            below += 1;
            if steps == 0 || below >= scheme.steady_window {
                break RunStatus::Converged;
            }
        } else {
            below = 0;
        }
        if state.t >= max_time || scheme.max_steps.is_some_and(|m| steps >= m) {
            break RunStatus::Indeterminate;
        }
        let dt = if let Some(dt) = scheme.fixed_dt {
            dt * factor
        } else if scheme.theta > 0.0 {
            scheme.dt_max * factor
        } else {
            scheme.cfl * c.explicit_dt() * factor
        };
        if scheme.theta > 0.0 {
            tri.step(&c, &state.u, &r, dt, scheme.theta, h, &mut next);
        } else {
            let (u, r, next) = (&state.u[..n], &r[..n], &mut next[..n]);
            for i in 1..n - 1 {
                next[i] = u[i] + dt * r[i];
            }
        }
        next[0] = state.u[0];
        next[n - 1] = state.u[n - 1];
        // admissible: within bounds and monotone to 1e-8 in slope
        let mut ok = true;
        let drop = -1e-8 * h;
        let (lo, hi) = (ulo - slack, uhi + slack);
        for i in 1..n {
            let (v, prev) = (next[i], next[i - 1]);
            ok &= v >= lo && v <= hi && v - prev >= drop;
        }
        if !ok {
            factor *= 0.5;
            reductions += 1;
            if factor < 1e-6 {
                return Err(Error::Scheme(format!(
                    "no admissible step at t = {} after {reductions} reductions",
                    state.t
                )));
            }
            log::debug!("step rejected at t = {}, step factor now {factor}", state.t);
            continue;
        }
        for v in next.iter_mut() {
            *v = v.clamp(ulo, uhi);
        }
        std::mem::swap(&mut state.u, &mut next);
        state.t += dt;
        steps += 1;
        if scheme.theta > 0.0 && factor < 1.0 {
            factor = (factor * 1.25).min(1.0);
        }
        coefficients(fp, &state.grid, &state.u, &mut c)?;
        max_rhs = fill_rhs(&c, &state.u, &mut r);
        if steps.is_multiple_of(scheme.record_every) {
            records.push(monitor.record(&state, steps, &c, &r, &mut snapshots));
        }
    };
    if records.last().map(|r| r.step) != Some(steps) {
        records.push(monitor.record(&state, steps, &c, &r, &mut snapshots));
    }
    Ok(FlowRun {
        state,
        initial,
        records,
        snapshots,
        status,
        steps,
        wall_time: start.elapsed().as_secs_f64(),
        dt_reductions: reductions,
        final_residual: max_rhs,
        max_time,
    })
}

/// Scratch space for the θ-step.
struct Tridiagonal {
    c: Vec<f64>,
    d: Vec<f64>,
}

impl Tridiagonal {
    fn new(n: usize) -> Self {
        Self { c: vec![0.0; n], d: vec![0.0; n] }
    }

    /// `(I − θ dt A) u_new = u + (1−θ) dt A u + θ dt W s` with frozen `A`.
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, co: &Coefficients, u: &[f64], r: &[f64], dt: f64, theta: f64, h: f64, out: &mut [f64]) {
        let n = u.len();
        let td = theta * dt;
        let (mut prev_c, mut prev_d) = (0.0, 0.0);
        for i in 1..n - 1 {
            let w = co.w[i];
            let mut lower = -td * w * (co.a2[i] / (h * h) - co.a1[i] / (2.0 * h));
            let mut upper = -td * w * (co.a2[i] / (h * h) + co.a1[i] / (2.0 * h));
            let diag = 1.0 - td * w * (-2.0 * co.a2[i] / (h * h) + co.a0[i]);
            let mut rhs = u[i] + (1.0 - theta) * dt * r[i] + td * w * co.s[i];
            // Dirichlet values move to the right-hand side
            if i == 1 {
                rhs -= lower * u[0];
                lower = 0.0;
            }
            if i == n - 2 {
                rhs -= upper * u[n - 1];
                upper = 0.0;
            }
            let denom = diag - lower * prev_c;
            self.c[i] = upper / denom;
            self.d[i] = (rhs - lower * prev_d) / denom;
            prev_c = self.c[i];
            prev_d = self.d[i];
        }
        out[n - 2] = self.d[n - 2];
        for i in (1..n - 2).rev() {
            out[i] = self.d[i] - self.c[i] * out[i + 1];
        }
    }
}

/// Sup-norm gap between `∂_t G^{m,n,k}_1(f, x)` obtained from the `f`-form
/// right-hand side and from the parabolic `G`-form
/// `∂_f G_k · Q(f) · (G_k′/G′)′`, on one state. Only for `X_{m,n}` with the
/// default flux; the gap is a truncation error of order `h²`.
pub fn g_form_consistency(fp: &FlowProblem, state: &FlowState) -> Result<f64> {
    let Problem::Xmn(p) = &fp.problem else {
        return Err(Error::InvalidParameter("G-form check applies to X_{m,n}".into()));
    };
    if fp.flux != FluxFunction::NegIdentity {
        return Err(Error::InvalidParameter("G-form check uses F = −x".into()));
    }
    let gk = g_mnk(p.m, p.n, p.k)?;
    let ratio = GRatio::new(&gk);
    let gk_f = gk.poly.to_float();
    let base = g_mn(p.m, p.n).deriv_x().to_float();
    let x = state.grid.nodes();
    let h = state.grid.spacing();
    let f = &state.u;
    let lhs = rhs(fp, state)?;
    let n = f.len();
    // σ = G_k′/G′ from nodal G_k values
    let gvals: Vec<f64> = (0..n).map(|i| gk_f.eval(f[i], x[i])).collect();
    let dg = derivative(&gvals, h);
    let sigma: Vec<f64> = (0..n).map(|i| dg[i] / base.eval(0.0, x[i])).collect();
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        let ds = (sigma[i + 1] - sigma[i - 1]) / (2.0 * h);
        let g_form = ratio.dg_df(f[i], x[i]) * fp.potential.q_clamped(f[i]) * ds;
        let f_form = ratio.dg_df(f[i], x[i]) * lhs[i];
        worst = worst.max((g_form - f_form).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
