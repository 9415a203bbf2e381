//! Radial Calabi-ansatz potentials `u(ρ)` and the flux functions `F`.
//!
//! The reduced flows only need `u′`, `u″` and the diffusion factor
//! `Q(y) = u″(u′⁻¹(y))`. The default family is the logistic profile
//! `u′(ρ) = (lo + hi·e^ρ)/(1 + e^ρ)`, for which `Q(y) = (y − lo)(hi − y)/(hi − lo)`
//! and `u′⁻¹(y) = ln((y − lo)/(hi − y))` are closed-form.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Operations the flow and diagnostics need from a radial potential.
pub trait RadialPotential {
    /// `lim_{ρ→−∞} u′(ρ)`
    fn lo(&self) -> f64;
    /// `lim_{ρ→+∞} u′(ρ)`
    fn hi(&self) -> f64;
    fn uprime(&self, rho: f64) -> f64;
    fn u2(&self, rho: f64) -> f64;
    /// `u′⁻¹(y)`; `−∞` at or below `lo`, `+∞` at or above `hi`.
    fn invert(&self, y: f64) -> f64;

    /// `Q(y) = u″(u′⁻¹(y))` on `[lo, hi]`.
    fn q(&self, y: f64) -> Result<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        if !(y >= lo && y <= hi) {
            return Err(Error::Domain { value: y, lo, hi });
        }
        Ok(self.q_clamped(y))
    }

    /// `Q` extended by zero outside `[lo, hi]`; used on the solver hot path.
    fn q_clamped(&self, y: f64) -> f64;

    /// `u′(ρ) − lo`, which implementations should compute without cancellation.
    fn uprime_excess(&self, rho: f64) -> f64 {
        self.uprime(rho) - self.lo()
    }
}

/// Logistic radial profile with prescribed limits of `u′`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialProfile {
    pub lo: f64,
    pub hi: f64,
}

/// Builds the logistic profile; on `X_{m,n}` use `lo = 0`.
pub fn make_profile(lo: f64, hi: f64) -> Result<PotentialProfile> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "potential limits need hi > lo >= 0, got lo = {lo}, hi = {hi}"
        )));
    }
    Ok(PotentialProfile { lo, hi })
}

fn logistic(rho: f64) -> f64 {
    if rho >= 0.0 {
        1.0 / (1.0 + (-rho).exp())
    } else {
        let e = rho.exp();
        e / (1.0 + e)
    }
}

impl RadialPotential for PotentialProfile {
    fn lo(&self) -> f64 {
        self.lo
    }

    fn hi(&self) -> f64 {
        self.hi
    }

    fn uprime(&self, rho: f64) -> f64 {
        let s = logistic(rho);
        // lo·(1 − s) + hi·s keeps both tails accurate
        self.lo * logistic(-rho) + self.hi * s
    }

    fn u2(&self, rho: f64) -> f64 {
        (self.hi - self.lo) * logistic(rho) * logistic(-rho)
    }

    fn uprime_excess(&self, rho: f64) -> f64 {
        (self.hi - self.lo) * logistic(rho)
    }

    fn invert(&self, y: f64) -> f64 {
        if y <= self.lo {
            f64::NEG_INFINITY
        } else if y >= self.hi {
            f64::INFINITY
        } else {
            ((y - self.lo) / (self.hi - y)).ln()
        }
    }

    fn q_clamped(&self, y: f64) -> f64 {
        if y <= self.lo || y >= self.hi {
            0.0
        } else {
            (y - self.lo) * (self.hi - y) / (self.hi - self.lo)
        }
    }
}

/// `Q(y)` for the logistic profile; errors outside `[lo, hi]`.
pub fn q_of(profile: &PotentialProfile, y: f64) -> Result<f64> {
    profile.q(y)
}

/// `u′⁻¹(y)` for the logistic profile, `±∞` at or beyond the limits.
pub fn invert_uprime(profile: &PotentialProfile, y: f64) -> f64 {
    profile.invert(y)
}

/// `u′` tabulated on a `ρ` grid, linearly interpolated.
///
/// The first and last tabulated values are taken as the limits of `u′`; the
/// table should reach far enough into both tails that `u″` is negligible there.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedProfile {
    rho: Vec<f64>,
    uprime: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(rho: Vec<f64>, uprime: Vec<f64>) -> Result<Self> {
        if rho.len() != uprime.len() || rho.len() < 3 {
            return Err(Error::InvalidParameter(
                "tabulated profile needs at least 3 (rho, u') rows".into(),
            ));
        }
        if rho.iter().chain(&uprime).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite entry in profile table".into()));
        }
        if rho.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("rho column must be strictly increasing".into()));
        }
        if uprime.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("u' column must be strictly increasing".into()));
        }
        if uprime[0] < 0.0 {
            return Err(Error::InvalidParameter("u' must be nonnegative".into()));
        }
        let last = rho.len() - 1;
        let mut slope = vec![0.0; rho.len()];
        for i in 1..last {
            slope[i] = (uprime[i + 1] - uprime[i - 1]) / (rho[i + 1] - rho[i - 1]);
        }
        Ok(Self { rho, uprime, slope })
    }

    /// Reads a headed two-column CSV `(rho, uprime)`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rho = Vec::new();
        let mut up = Vec::new();
        for row in reader.records() {
            let row = row?;
            if row.len() != 2 {
                return Err(Error::Parse(format!("expected 2 columns, found {}", row.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            };
            rho.push(parse(&row[0])?);
            up.push(parse(&row[1])?);
        }
        Self::new(rho, up)
    }

    /// Samples a profile onto a table.
    pub fn sample<P: RadialPotential>(p: &P, rho: &[f64]) -> Result<Self> {
        Self::new(rho.to_vec(), rho.iter().map(|&r| p.uprime(r)).collect())
    }

    fn locate(xs: &[f64], v: f64) -> usize {
        // index i with xs[i] <= v < xs[i+1], clamped to valid segments
        match xs.binary_search_by(|p| p.partial_cmp(&v).unwrap()) {
            Ok(i) => i.min(xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(xs.len() - 2),
        }
    }
}

impl RadialPotential for TabulatedProfile {
    fn lo(&self) -> f64 {
        self.uprime[0]
    }

    fn hi(&self) -> f64 {
        *self.uprime.last().unwrap()
    }

    fn uprime(&self, rho: f64) -> f64 {
        if rho <= self.rho[0] {
            return self.lo();
        }
        if rho >= *self.rho.last().unwrap() {
            return self.hi();
        }
        let i = Self::locate(&self.rho, rho);
        let w = (rho - self.rho[i]) / (self.rho[i + 1] - self.rho[i]);
        self.uprime[i] + w * (self.uprime[i + 1] - self.uprime[i])
    }

    fn u2(&self, rho: f64) -> f64 {
        if rho <= self.rho[0] || rho >= *self.rho.last().unwrap() {
            return 0.0;
        }
        let i = Self::locate(&self.rho, rho);
        let w = (rho - self.rho[i]) / (self.rho[i + 1] - self.rho[i]);
        self.slope[i] + w * (self.slope[i + 1] - self.slope[i])
    }

    fn invert(&self, y: f64) -> f64 {
        if y <= self.lo() {
            return f64::NEG_INFINITY;
        }
        if y >= self.hi() {
            return f64::INFINITY;
        }
        let i = Self::locate(&self.uprime, y);
        let w = (y - self.uprime[i]) / (self.uprime[i + 1] - self.uprime[i]);
        self.rho[i] + w * (self.rho[i + 1] - self.rho[i])
    }

    fn q_clamped(&self, y: f64) -> f64 {
        if y <= self.lo() || y >= self.hi() {
            return 0.0;
        }
        self.u2(self.invert(y))
    }
}

/// Either kind of potential, so problems can own one without generics.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Logistic(PotentialProfile),
    Tabulated(TabulatedProfile),
}

impl From<PotentialProfile> for Potential {
    fn from(p: PotentialProfile) -> Self {
        Potential::Logistic(p)
    }
}

impl From<TabulatedProfile> for Potential {
    fn from(p: TabulatedProfile) -> Self {
        Potential::Tabulated(p)
    }
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Potential::Logistic($p) => $e,
            Potential::Tabulated($p) => $e,
        }
    };
}

impl RadialPotential for Potential {
    fn lo(&self) -> f64 {
        dispatch!(self, p => p.lo())
    }
    fn hi(&self) -> f64 {
        dispatch!(self, p => p.hi())
    }
    fn uprime(&self, rho: f64) -> f64 {
        dispatch!(self, p => p.uprime(rho))
    }
    fn u2(&self, rho: f64) -> f64 {
        dispatch!(self, p => p.u2(rho))
    }
    fn invert(&self, y: f64) -> f64 {
        dispatch!(self, p => p.invert(y))
    }
    fn q_clamped(&self, y: f64) -> f64 {
        dispatch!(self, p => p.q_clamped(y))
    }
    fn uprime_excess(&self, rho: f64) -> f64 {
        dispatch!(self, p => p.uprime_excess(rho))
    }
}

/// The function `F` in the flow `∂φ/∂t = F(σ_k(χ_φ⁻¹)) − F(c_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxFunction {
    /// `F(s) = −s`
    NegIdentity,
    /// `F(s) = −log s`
    NegLog,
    /// Sampled `F`, linearly interpolated between strictly increasing `x`.
    Custom { x: Vec<f64>, f: Vec<f64> },
}

impl FluxFunction {
    pub fn custom(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() != f.len() || x.len() < 3 {
            return Err(Error::InvalidParameter("custom flux needs >= 3 samples".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x[0] <= 0.0 {
            return Err(Error::InvalidParameter(
                "custom flux abscissae must be positive and increasing".into(),
            ));
        }
        Ok(FluxFunction::Custom { x, f })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxFunction::NegIdentity => "neg_identity",
            FluxFunction::NegLog => "neg_log",
            FluxFunction::Custom { .. } => "custom",
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            FluxFunction::NegIdentity => -s,
            FluxFunction::NegLog => -s.ln(),
            FluxFunction::Custom { x, f } => {
                let last = x.len() - 1;
                let i = TabulatedProfile::locate(x, s);
                let w = (s - x[i]) / (x[i + 1] - x[i]);
                if s < x[0] || s > x[last] {
                    // linear extrapolation from the end segment
                    return f[i] + w * (f[i + 1] - f[i]);
                }
                f[i] + w * (f[i + 1] - f[i])
            }
        }
    }

    /// `−F′(s)`, positive for admissible flux functions.
    pub fn neg_derivative(&self, s: f64) -> f64 {
        match self {
            FluxFunction::NegIdentity => 1.0,
            FluxFunction::NegLog => 1.0 / s,
            FluxFunction::Custom { x, f } => {
                let i = TabulatedProfile::locate(x, s);
                -(f[i + 1] - f[i]) / (x[i + 1] - x[i])
            }
        }
    }
}

/// Outcome of checking `F′ < 0`, `F″ ≥ 0`, `F″ + F′/x ≤ 0` on samples.
#[derive(Clone, Debug, Serialize)]
pub struct FluxReport {
    pub passed: bool,
    pub max_first: f64,
    pub min_second: f64,
    pub max_combination: f64,
    pub failures: Vec<String>,
}

/// Absolute slack on the concavity inequalities, applied relative to the
/// magnitude of the derivatives involved.
pub const FLUX_TOL: f64 = 1e-8;

/// Checks the concavity conditions with Richardson-extrapolated central
/// differences at `samples` equispaced points of `range`.
pub fn validate_flux(flux: &FluxFunction, range: (f64, f64), samples: usize) -> Result<FluxReport> {
    let (a, b) = range;
    if !(a > 0.0 && b > a) || samples < 3 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < a < b and >= 3 samples, got [{a}, {b}] with {samples}"
        )));
    }
    let mut report = FluxReport {
        passed: true,
        max_first: f64::NEG_INFINITY,
        min_second: f64::INFINITY,
        max_combination: f64::NEG_INFINITY,
        failures: Vec::new(),
    };
    for i in 0..samples {
        let x = a + (b - a) * i as f64 / (samples - 1) as f64;
        let h = 2e-3 * x;
        let (d1, d2) = match richardson(flux, x, h) {
            Some(d) => d,
            None => {
                report.passed = false;
                report.failures.push(format!("non-finite F near x = {x}"));
                continue;
            }
        };
        let combo = d2 + d1 / x;
        let scale = 1f64.max(d1.abs()).max(d2.abs()).max((d1 / x).abs());
        report.max_first = report.max_first.max(d1);
        report.min_second = report.min_second.min(d2);
        report.max_combination = report.max_combination.max(combo);
        if d1 >= -FLUX_TOL {
            report.passed = false;
            report.failures.push(format!("F'({x}) = {d1} is not negative"));
        }
        if d2 < -FLUX_TOL * scale {
            report.passed = false;
            report.failures.push(format!("F''({x}) = {d2} is negative"));
        }
        if combo > FLUX_TOL * scale {
            report.passed = false;
            report.failures.push(format!("F'' + F'/x = {combo} > 0 at x = {x}"));
        }
    }
    Ok(report)
}

fn richardson(flux: &FluxFunction, x: f64, h: f64) -> Option<(f64, f64)> {
    let fx = flux.value(x);
    let diffs = |h: f64| {
        let (p, m) = (flux.value(x + h), flux.value(x - h));
        ((p - m) / (2.0 * h), (p - 2.0 * fx + m) / (h * h))
    };
    let (a1, a2) = diffs(h);
    let (b1, b2) = diffs(0.5 * h);
    let d1 = (4.0 * b1 - a1) / 3.0;
    let d2 = (4.0 * b2 - a2) / 3.0;
    (fx.is_finite() && d1.is_finite() && d2.is_finite()).then_some((d1, d2))
}
