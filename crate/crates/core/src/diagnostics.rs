//! Post-processing of profiles: the radial curve `v′(ρ)`, contact point and
//! cone-angle fits, oscillation and pole coefficient, trace of `χ_φ`.

use std::io::Write;

use serde::Serialize;

use crate::classes::Problem;
use crate::error::{Error, Result};
use crate::flow::{FlowProblem, FlowState, Variable};
use crate::potential::RadialPotential;
use crate::stationary::StationaryProfile;

/// A non-decreasing profile `f` on `[x_lo, x_hi]` with `f(x_lo)` equal to
/// the flat value.
pub trait MonotoneProfile {
    fn x_range(&self) -> (f64, f64);
    fn flat_value(&self) -> f64;
    /// `f(x) − flat_value`.
    fn excess(&self, x: f64) -> Result<f64>;
    fn slope(&self, x: f64) -> Result<f64>;

    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.flat_value() + self.excess(x)?)
    }
}

impl MonotoneProfile for StationaryProfile {
    fn x_range(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    fn flat_value(&self) -> f64 {
        self.flat_value
    }

    fn excess(&self, x: f64) -> Result<f64> {
        StationaryProfile::excess(self, x)
    }

    fn slope(&self, x: f64) -> Result<f64> {
        self.derivative(x)
    }
}

/// Piecewise-linear interpolant of nodal data on a uniform grid.
///
/// With a contact point `λ` set, the excess is zero up to `λ` and
/// quadratic in `x − λ` on the cell that follows it.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalProfile {
    pub x: Vec<f64>,
    pub excess: Vec<f64>,
    pub slope: Vec<f64>,
    pub flat: f64,
    pub contact: Option<f64>,
}

impl NodalProfile {
    pub fn new(x: Vec<f64>, f: &[f64], flat: f64) -> Result<Self> {
        if x.len() != f.len() || x.len() < 3 {
            return Err(Error::InvalidParameter("nodal profile needs matching arrays of length ≥ 3".into()));
        }
        let excess: Vec<f64> = f.iter().map(|v| v - flat).collect();
        let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let slope = crate::flow::derivative(f, h);
        Ok(Self { x, excess, slope, flat, contact: None })
    }

    /// Pins the profile to the flat value on `[x_lo, λ]`.
    pub fn with_contact(mut self, lambda: f64) -> Result<Self> {
        let (lo, hi) = self.x_range();
        if !(lambda >= lo && lambda < hi) {
            return Err(Error::Domain { value: lambda, lo, hi });
        }
        for (e, &x) in self.excess.iter_mut().zip(&self.x) {
            if x <= lambda {
                *e = 0.0;
            }
        }
        self.contact = Some(lambda);
        Ok(self)
    }

    /// [`NodalProfile::from_state`] with the contact point of
    /// [`lambda_from_nodes`].
    pub fn from_state_with_contact(fp: &FlowProblem, state: &FlowState) -> Result<Self> {
        let p = Self::from_state(fp, state)?;
        let lambda = lambda_from_nodes(&p.x, &p.excess)?;
        p.with_contact(lambda)
    }

    /// Profile of a flow state; for the `g`-variable the excess is formed
    /// without cancellation.
    pub fn from_state(fp: &FlowProblem, state: &FlowState) -> Result<Self> {
        let flat = fp.flat_value();
        let mut p = Self::new(state.grid.nodes().to_vec(), &state.f(), flat)?;
        if state.variable == Variable::G {
            let k = state.k as f64;
            for (e, &g) in p.excess.iter_mut().zip(&state.u) {
                *e = ((g - 1.0).max(-1.0).ln_1p() / k).exp_m1();
            }
        }
        Ok(p)
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let n = self.x.len();
        let (lo, hi) = (self.x[0], self.x[n - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { value: x, lo, hi });
        }
        let h = (hi - lo) / (n - 1) as f64;
        let i = (((x - lo) / h) as usize).min(n - 2);
        Ok((i, ((x - self.x[i]) / h).clamp(0.0, 1.0)))
    }
}

impl MonotoneProfile for NodalProfile {
    fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn flat_value(&self) -> f64 {
        self.flat
    }

    fn excess(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        if let Some(lambda) = self.contact {
            if x <= lambda {
                return Ok(0.0);
            }
            if self.x[i] <= lambda {
                let s = (x - lambda) / (self.x[i + 1] - lambda);
                return Ok(self.excess[i + 1] * s * s);
            }
        }
        Ok(self.excess[i] + t * (self.excess[i + 1] - self.excess[i]))
    }

    fn slope(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        Ok(self.slope[i] + t * (self.slope[i + 1] - self.slope[i]))
    }
}

/// `v′(ρ)` sampled on a `ρ` grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialCurve {
    pub rho: Vec<f64>,
    pub vprime: Vec<f64>,
    /// `u′(ρ)` fell outside the open range of `f`.
    pub clipped: Vec<bool>,
}

impl RadialCurve {
    pub fn any_clipped(&self) -> bool {
        self.clipped.iter().any(|&c| c)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rho", "vprime", "clipped"])?;
        for i in 0..self.rho.len() {
            w.write_record(&[
                self.rho[i].to_string(),
                self.vprime[i].to_string(),
                u8::from(self.clipped[i]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform `ρ` grid on `[−r, r]`.
pub fn rho_grid(r: f64, points: usize) -> Result<Vec<f64>> {
    if !(r > 0.0) || points < 2 {
        return Err(Error::InvalidParameter(format!("ρ grid with R = {r}, {points} points")));
    }
    Ok((0..points).map(|i| -r + 2.0 * r * i as f64 / (points - 1) as f64).collect())
}

fn invert_excess<P: MonotoneProfile + ?Sized>(profile: &P, y: f64, top: f64) -> Result<(f64, bool)> {
    let (mut lo, mut hi) = profile.x_range();
    if y >= top {
        return Ok((hi, true));
    }
    // largest x with excess(x) ≤ y
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.excess(mid)? <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, y <= 0.0))
}

/// Solves `f(v′(ρ)) = u′(ρ)` by bisection in `x` at each sample.
pub fn reconstruct_vprime<P, U>(profile: &P, potential: &U, rho: &[f64]) -> Result<RadialCurve>
where
    P: MonotoneProfile + ?Sized,
    U: RadialPotential + ?Sized,
{
    if (potential.lo() - profile.flat_value()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "potential starts at {} but the profile is flat at {}",
            potential.lo(),
            profile.flat_value()
        )));
    }
    let top = profile.excess(profile.x_range().1)?;
    let mut curve = RadialCurve { rho: rho.to_vec(), vprime: Vec::with_capacity(rho.len()), clipped: Vec::with_capacity(rho.len()) };
    for &r in rho {
        let (x, clipped) = invert_excess(profile, potential.uprime_excess(r), top)?;
        curve.vprime.push(x);
        curve.clipped.push(clipped);
    }
    Ok(curve)
}

/// Fit `v′ − λ ≈ c e^{pρ}` as `ρ → −∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r2: f64,
    pub points: usize,
}

impl ConeFit {
    /// Exponent within `0.05` of `1/2`.
    pub fn is_conic(&self) -> bool {
        (self.exponent - 0.5).abs() <= 0.05
    }
}

/// Window on `v′ − λ` used by [`fit_cone_exponent`].
pub const FIT_WINDOW: (f64, f64) = (1e-8, 1e-2);

/// Least squares of `ln(v′ − λ)` against `ρ` over [`FIT_WINDOW`].
pub fn fit_cone_exponent(curve: &RadialCurve, lambda: f64) -> Result<ConeFit> {
    let pts: Vec<(f64, f64)> = curve
        .rho
        .iter()
        .zip(&curve.vprime)
        .zip(&curve.clipped)
        .filter(|&((_, &v), &c)| !c && v - lambda > FIT_WINDOW.0 && v - lambda < FIT_WINDOW.1)
        .map(|((&r, &v), _)| (r, (v - lambda).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "{} samples with v′ − λ in ({:e}, {:e})",
            pts.len(),
            FIT_WINDOW.0,
            FIT_WINDOW.1
        )));
    }
    let (slope, intercept, r2) = least_squares(&pts);
    Ok(ConeFit { exponent: slope, coefficient: intercept.exp(), r2, points: pts.len() })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Oscillation of the reduced potential difference and its slope at `−∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Oscillation {
    pub osc: f64,
    pub pole_coeff: f64,
}

/// `φ′ = v′_limit − v′_initial`, integrated from `−R` by the trapezoid rule.
/// The pole coefficient is the least-squares slope over the leftmost
/// eighth of the window.
pub fn oscillation_and_pole(limit: &RadialCurve, initial: &RadialCurve) -> Result<Oscillation> {
    if limit.rho != initial.rho {
        return Err(Error::InvalidParameter("curves are sampled on different ρ grids".into()));
    }
    let rho = &limit.rho;
    let n = rho.len();
    if n < 16 || rho[0] > -20.0 || rho[n - 1] < 20.0 {
        return Err(Error::InvalidParameter("ρ grid must span [−20, 20] with at least 16 samples".into()));
    }
    let dphi: Vec<f64> = limit.vprime.iter().zip(&initial.vprime).map(|(a, b)| a - b).collect();
    let scale = limit.vprime[n - 1].abs().max(1.0);
    if dphi[n - 1].abs() > 1e-6 * scale {
        return Err(Error::ClassMismatch(format!(
            "φ′(+R) = {:e}; the potentials grow apart at +∞",
            dphi[n - 1]
        )));
    }
    let mut phi = vec![0.0; n];
    for i in 1..n {
        phi[i] = phi[i - 1] + 0.5 * (rho[i] - rho[i - 1]) * (dphi[i] + dphi[i - 1]);
    }
    let (min, max) = phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let tail = (n / 8).max(3);
    let pts: Vec<(f64, f64)> = (0..tail).map(|i| (rho[i], phi[i])).collect();
    let (slope, _, _) = least_squares(&pts);
    Ok(Oscillation { osc: max - min, pole_coeff: slope })
}

/// Trace of `χ_φ` with respect to `ω` along the curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TraceProfile {
    Values(Vec<f64>),
    /// First sample where `f_x < 1e−12`.
    BlowUp { rho: f64, x: f64 },
}

/// `(n−1)x/f + 1/f_x` on `ℙⁿ#ℙ̄ⁿ`, `n(1+x)/(1+f) + m x/f + 1/f_x` on
/// `X_{m,n}`, evaluated at `x = v′(ρ)`.
pub fn trace_profile<P, U>(problem: &Problem, profile: &P, potential: &U, rho: &[f64]) -> Result<TraceProfile>
where
    P: MonotoneProfile + ?Sized,
    U: RadialPotential + ?Sized,
{
    let curve = reconstruct_vprime(profile, potential, rho)?;
    let mut out = Vec::with_capacity(rho.len());
    for (&r, &x) in rho.iter().zip(&curve.vprime) {
        let fx = profile.slope(x)?;
        if !(fx >= 1e-12) {
            return Ok(TraceProfile::BlowUp { rho: r, x });
        }
        let f = profile.value(x)?;
        out.push(match problem {
            Problem::Pn(p) => (p.n - 1) as f64 * x / f + 1.0 / fx,
            Problem::Xmn(p) => {
                let mixed = if p.m == 0 { 0.0 } else { p.m as f64 * x / f };
                p.n as f64 * (1.0 + x) / (1.0 + f) + mixed + 1.0 / fx
            }
        });
    }
    Ok(TraceProfile::Values(out))
}

/// Contact point read off a flow state: `√(f − flat)` is extrapolated
/// linearly to zero from the first two nodes whose excess exceeds
/// `1e−4` of the full rise. Nodes nearer the contact are skipped, since
/// the flow approaches the obstacle slowly there.
pub fn lambda_from_flow(fp: &FlowProblem, state: &FlowState) -> Result<f64> {
    let p = NodalProfile::from_state(fp, state)?;
    lambda_from_nodes(&p.x, &p.excess)
}

/// As [`lambda_from_flow`] for nodal excess values.
pub fn lambda_from_nodes(x: &[f64], excess: &[f64]) -> Result<f64> {
    let n = x.len();
    let rise = excess[n - 1];
    if !(rise > 0.0) {
        return Err(Error::InvalidParameter("profile does not rise".into()));
    }
    let i = excess
        .iter()
        .position(|&e| e > 1e-4 * rise)
        .ok_or_else(|| Error::Inconsistency("no node above the threshold".into()))?;
    if i + 1 >= n {
        return Err(Error::InsufficientResolution("contact at the last node".into()));
    }
    let (s1, s2) = (excess[i].sqrt(), excess[i + 1].sqrt());
    let root = x[i] - s1 * (x[i + 1] - x[i]) / (s2 - s1);
    Ok(root.clamp(x[0], x[n - 1]))
}

/// Sup distance between two profiles on the given nodes.
pub fn sup_distance<A, B>(a: &A, b: &B, nodes: &[f64]) -> Result<f64>
where
    A: MonotoneProfile + ?Sized,
    B: MonotoneProfile + ?Sized,
{
    let mut d = 0.0f64;
    for &x in nodes {
        d = d.max((a.value(x)? - b.value(x)?).abs());
    }
    Ok(d)
}
