//! Closed-form stationary profiles and contact-point solvers.
//!
//! On `ℙⁿ#ℙ̄ⁿ` the limit is stored in the variable `g = f^k`, which solves an
//! Euler ODE with solutions `g = a x^k + b x^{k−n}`. On `X_{m,n}` the limit is the
//! level set `G^{m,n,k}_1(f, x) = α G^{m,n}_1(x) + β`, solved pointwise in `f`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::classes::{
    classify_pn, classify_xmn_exact, ratio_pn, CaseVariant, PnProblem, Problem, XmnProblem,
};
use crate::error::{Error, Result};
use crate::gpoly::{a_coefficients, g_mn, g_mnk, topological_constant_xmn, BivariatePoly};
use crate::sigma::{binomial, grouped_sigma};

/// Which manifold family a profile belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    Pn,
    Xmn,
}

/// Dense univariate polynomial in `x`, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct UPoly(pub Vec<f64>);

impl UPoly {
    fn from_bivariate(p: &BivariatePoly) -> Self {
        let mut c = vec![0.0; p.degree_x() as usize + 1];
        for (i, j, v) in p.terms() {
            debug_assert_eq!(i, 0);
            c[j as usize] += crate::gpoly::rational_to_f64(v);
        }
        UPoly(c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn deriv(&self) -> Self {
        UPoly(self.0.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect())
    }

    fn axpy(&self, a: f64, other: &UPoly) -> Self {
        let len = self.0.len().max(other.0.len());
        UPoly(
            (0..len)
                .map(|j| {
                    a * self.0.get(j).copied().unwrap_or(0.0) + other.0.get(j).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    /// Coefficients in powers of `(x − c)`.
    fn shifted(&self, c: f64) -> Self {
        let mut a = self.0.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                a[j] += c * a[j + 1];
            }
        }
        UPoly(a)
    }
}

/// Branch data of the increasing part of a profile.
#[derive(Clone, Debug, PartialEq)]
pub enum Branch {
    /// `g(x) = a x^k + b x^{k−n}`, `f = g^{1/k}`.
    Pn { n: u32, k: u32, a: f64, b: f64 },
    /// `Σ_{i≥1} a_i(x) f^i = D(x)` where `D = αG + β − a_0`.
    Xmn {
        m: u32,
        n: u32,
        k: u32,
        alpha: f64,
        beta: f64,
        /// `a_1 … a_k`
        a: Vec<UPoly>,
        /// `D′` in powers of `(x − λ)`, integrated on evaluation.
        d_prime_at_lambda: UPoly,
        d_at_lambda: f64,
    },
}

/// Piecewise limit profile: flat on `[x_lo, λ]`, strictly increasing after.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryProfile {
    pub family: Family,
    pub x_lo: f64,
    pub x_hi: f64,
    pub lambda: f64,
    pub flat_value: f64,
    pub boundary_hi: f64,
    pub branch: Branch,
}

impl StationaryProfile {
    fn check(&self, x: f64) -> Result<()> {
        if !(x >= self.x_lo && x <= self.x_hi) {
            return Err(Error::Domain { value: x, lo: self.x_lo, hi: self.x_hi });
        }
        Ok(())
    }

    /// `f∞(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.flat_value + self.excess(x)?)
    }

    /// `f∞(x) − flat_value`, accurate near the contact point.
    pub fn excess(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        if x <= self.lambda {
            return Ok(0.0);
        }
        Ok(match &self.branch {
            Branch::Pn { k, .. } => (self.g_minus_one(x).ln_1p() / *k as f64).exp_m1(),
            Branch::Xmn { .. } => self.solve_level(x),
        })
    }

    /// `f∞′(x)`; zero on the flat part.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        if x <= self.lambda {
            return Ok(0.0);
        }
        Ok(match &self.branch {
            Branch::Pn { n, k, a, b } => {
                let (kf, nf) = (*k as f64, *n as f64);
                let g = 1.0 + self.g_minus_one(x);
                let gp = kf * a * x.powf(kf - 1.0) + (kf - nf) * b * x.powf(kf - nf - 1.0);
                gp / (kf * g.powf((kf - 1.0) / kf))
            }
            Branch::Xmn { a, d_prime_at_lambda, .. } => {
                let f = self.solve_level(x);
                let d = x - self.lambda;
                let num = d_prime_at_lambda.eval(d)
                    - a.iter()
                        .enumerate()
                        .map(|(i, ai)| ai.deriv().eval(x) * f.powi(i as i32 + 1))
                        .sum::<f64>();
                let den: f64 = a
                    .iter()
                    .enumerate()
                    .map(|(i, ai)| (i + 1) as f64 * ai.eval(x) * f.powi(i as i32))
                    .sum();
                num / den
            }
        })
    }

    /// `g(x) − 1` for the `ℙⁿ#ℙ̄ⁿ` branch; `g(λ) = 1` in every case.
    fn g_minus_one(&self, x: f64) -> f64 {
        let Branch::Pn { n, k, a, b } = &self.branch else {
            unreachable!()
        };
        let (kf, nf, l) = (*k as f64, *n as f64, self.lambda);
        let s = ((x - l) / l).ln_1p();
        a * l.powf(kf) * (kf * s).exp_m1() + b * l.powf(kf - nf) * ((kf - nf) * s).exp_m1()
    }

    fn d_of(&self, x: f64) -> f64 {
        let Branch::Xmn { d_prime_at_lambda, d_at_lambda, .. } = &self.branch else {
            unreachable!()
        };
        // D(x) = D(λ) + Σ c_j (x−λ)^{j+1}/(j+1)
        let t = x - self.lambda;
        let integral = d_prime_at_lambda
            .0
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * t + c / (j + 1) as f64)
            * t;
        d_at_lambda + integral
    }

    /// Positive root in `f` of `Σ_{i≥1} a_i(x) f^i = D(x)`.
    fn solve_level(&self, x: f64) -> f64 {
        let Branch::Xmn { a, .. } = &self.branch else {
            unreachable!()
        };
        let target = self.d_of(x);
        if target <= 0.0 {
            return 0.0;
        }
        let coeffs: Vec<f64> = a.iter().map(|ai| ai.eval(x)).collect();
        let lhs = |f: f64| coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * f);
        let dlhs = |f: f64| {
            coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (i, &c)| acc * f + (i + 1) as f64 * c)
        };
        let mut hi = self.boundary_hi.max(1.0);
        while lhs(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi.max(1e-300) && hi - lo > 0.0 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if lhs(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Newton from the right converges monotonically: lhs is convex in f ≥ 0
        let mut f = hi;
        for _ in 0..50 {
            let step = (lhs(f) - target) / dlhs(f);
            let next = f - step;
            if !(next < f) || next < lo {
                break;
            }
            f = next;
        }
        f
    }

    /// Writes `x, f, fprime` rows on `grid`.
    pub fn write_csv(&self, grid: &[f64], path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "f", "fprime"])?;
        for &x in grid {
            w.write_record(&[x.to_string(), self.value(x)?.to_string(), self.derivative(x)?.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Same as [`write_csv`](Self::write_csv) into any writer.
    pub fn write_csv_to<W: Write>(&self, grid: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f", "fprime"])?;
        for &x in grid {
            w.write_record(&[x.to_string(), self.value(x)?.to_string(), self.derivative(x)?.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `σ_k` of the eigenvalue tuple at `x`, from the closed-form branch.
    pub fn sigma(&self, x: f64) -> Result<f64> {
        let f = self.value(x)?;
        let fp = self.derivative(x)?;
        Ok(match &self.branch {
            Branch::Pn { n, k, .. } => grouped_sigma(&[(f / x, *n as usize - 1), (fp, 1)], *k as usize),
            Branch::Xmn { m, n, k, .. } => grouped_sigma(
                &[((1.0 + f) / (1.0 + x), *n as usize), (f / x, *m as usize), (fp, 1)],
                *k as usize,
            ),
        })
    }
}

/// `f∞(x)`, with a domain error outside `[x_lo, x_hi]`.
pub fn eval_stationary(s: &StationaryProfile, x: f64) -> Result<f64> {
    s.value(x)
}

/// `h(λ) − nα^k` for the `ℙⁿ#ℙ̄ⁿ` contact equation; decreasing on `(0, β)`.
fn lambda_residual_pn(p: &PnProblem, l: f64) -> (f64, f64) {
    let (n, k) = (p.n as f64, p.k as f64);
    let u = p.beta / l;
    let v = l / p.beta;
    let h = (n - k) * u.powf(k) + k * v.powf(n - k) - n * p.alpha.powf(k);
    let dh = (-(n - k) * k * u.powf(k) + k * (n - k) * v.powf(n - k)) / l;
    (h, dh)
}

/// Contact point `λ ∈ (1, β)` of a blow-up instance on `ℙⁿ#ℙ̄ⁿ`.
///
/// Returns 1 in the boundary case. Bisection to an interval of `1e−12`,
/// followed by a Newton polish so the rescaled class lands on the
/// boundary to working precision.
pub fn solve_lambda_pn(p: &PnProblem) -> Result<f64> {
    match classify_pn(p).variant {
        CaseVariant::ConicBoundary => return Ok(1.0),
        CaseVariant::Smooth => {
            return Err(Error::CaseMismatch(format!(
                "(n={}, k={}, α={}, β={}) is in the cone; no contact point",
                p.n, p.k, p.alpha, p.beta
            )))
        }
        CaseVariant::CurrentBlowup => {}
    }
    let (mut lo, mut hi) = (1.0, p.beta);
    if !(lambda_residual_pn(p, lo).0 > 0.0 && lambda_residual_pn(p, hi).0 < 0.0) {
        return Err(Error::Inconsistency("contact equation is not bracketed by [1, β]".into()));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if lambda_residual_pn(p, mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut l = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (h, dh) = lambda_residual_pn(p, l);
        if h == 0.0 || dh == 0.0 {
            break;
        }
        let next = l - h / dh;
        if (next - l).abs() > 1e-12 {
            break;
        }
        l = next;
    }
    if !(l > 1.0 && l < p.beta) {
        return Err(Error::Inconsistency(format!("contact point {l} outside (1, β)")));
    }
    Ok(l)
}

/// Limit profile on `ℙⁿ#ℙ̄ⁿ` over `[1, β]`.
pub fn stationary_pn(p: &PnProblem) -> Result<StationaryProfile> {
    let (n, k) = (p.n as f64, p.k as f64);
    let (lambda, a, b) = match classify_pn(p).variant {
        CaseVariant::CurrentBlowup => {
            let l = solve_lambda_pn(p)?;
            (l, (n - k) / (n * l.powf(k)), k * l.powf(n - k) / n)
        }
        _ => {
            let a = ratio_pn(p);
            (1.0, a, 1.0 - a)
        }
    };
    Ok(StationaryProfile {
        family: Family::Pn,
        x_lo: 1.0,
        x_hi: p.beta,
        lambda,
        flat_value: 1.0,
        boundary_hi: p.alpha,
        branch: Branch::Pn { n: p.n, k: p.k, a, b },
    })
}

/// Solution of the `X_{m,n}` contact system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XmnSystem {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Sign changes of the scalar residual on a 200-point sample of `(0, b′)`.
    pub sign_changes: usize,
}

struct XmnPolys {
    g: UPoly,
    a0: UPoly,
    a: Vec<UPoly>,
    gk_at_boundary: f64,
}

fn xmn_polys(p: &XmnProblem) -> Result<XmnPolys> {
    let gk = g_mnk(p.m, p.n, p.k)?;
    let coeffs = a_coefficients(&gk)?;
    let gk_f = gk.poly.to_float();
    Ok(XmnPolys {
        g: UPoly::from_bivariate(&g_mn(p.m, p.n)),
        a0: UPoly::from_bivariate(&coeffs[0]),
        a: coeffs[1..].iter().map(to_upoly_in_x).collect(),
        gk_at_boundary: gk_f.eval(p.b, p.b_prime),
    })
}

fn to_upoly_in_x(p: &BivariatePoly) -> UPoly {
    UPoly::from_bivariate(p)
}

/// `(α, β, λ)` with `G^{m,n,k}_1(f, x) = αG^{m,n}_1(x) + β` and first-order
/// contact with `f = 0` at `λ`.
///
/// Non-blow-up instances return `(c_k, 0, 0)`. In the blow-up case the two
/// contact conditions give `α = C(n,k)/(1+λ)^k` and `β = a_0(λ) − αG(λ)`, and the
/// boundary condition leaves a scalar equation in `λ` solved by bisection.
pub fn solve_xmn_system(p: &XmnProblem) -> Result<XmnSystem> {
    let ck = topological_constant_xmn(p)?;
    if classify_xmn_exact(p, &ck.exact).variant != CaseVariant::CurrentBlowup {
        return Ok(XmnSystem { alpha: ck.value, beta: 0.0, lambda: 0.0, sign_changes: 0 });
    }
    let polys = xmn_polys(p)?;
    let cnk = binomial(p.n as usize, p.k as usize);
    let k = p.k as i32;
    let gb = polys.g.eval(p.b_prime);
    let coeffs = |l: f64| {
        let alpha = cnk / (1.0 + l).powi(k);
        let beta = polys.a0.eval(l) - alpha * polys.g.eval(l);
        (alpha, beta)
    };
    let residual = |l: f64| {
        let (alpha, beta) = coeffs(l);
        polys.gk_at_boundary - alpha * gb - beta
    };
    let samples = 200;
    let mut sign_changes = 0;
    let mut prev = residual(0.0);
    for i in 1..=samples {
        let r = residual(p.b_prime * i as f64 / samples as f64);
        if (r > 0.0) != (prev > 0.0) {
            sign_changes += 1;
        }
        prev = r;
    }
    if sign_changes != 1 {
        log::warn!("contact residual changes sign {sign_changes} times on (0, b')");
    }
    let (mut lo, mut hi) = (0.0, p.b_prime);
    if !(residual(lo) < 0.0 && residual(hi) > 0.0) {
        return Err(Error::Inconsistency("contact residual has no sign change on (0, b')".into()));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let (alpha, beta) = coeffs(lambda);
    Ok(XmnSystem { alpha, beta, lambda, sign_changes })
}

/// Limit profile on `X_{m,n}` over `[0, b′]`.
pub fn stationary_xmn(p: &XmnProblem) -> Result<StationaryProfile> {
    let sys = solve_xmn_system(p)?;
    let polys = xmn_polys(p)?;
    let (alpha, beta, lambda) = (sys.alpha, sys.beta, sys.lambda);
    let d = polys.g.axpy(alpha, &UPoly(polys.a0.0.iter().map(|c| -c).collect()));
    let d_at_lambda = if lambda > 0.0 { 0.0 } else { d.eval(0.0) + beta };
    Ok(StationaryProfile {
        family: Family::Xmn,
        x_lo: 0.0,
        x_hi: p.b_prime,
        lambda,
        flat_value: 0.0,
        boundary_hi: p.b,
        branch: Branch::Xmn {
            m: p.m,
            n: p.n,
            k: p.k,
            alpha,
            beta,
            a: polys.a,
            d_prime_at_lambda: d.deriv().shifted(lambda),
            d_at_lambda,
        },
    })
}

/// Limit profile for either family.
pub fn stationary(problem: &Problem) -> Result<StationaryProfile> {
    match problem {
        Problem::Pn(p) => stationary_pn(p),
        Problem::Xmn(p) => stationary_xmn(p),
    }
}

/// Value of `σ_k` along the limit, determined by the problem alone.
pub fn stationary_constant(problem: &Problem) -> Result<f64> {
    match problem {
        Problem::Pn(p) => {
            let (n, k) = (p.n as f64, p.k as f64);
            let cnk = binomial(p.n as usize, p.k as usize);
            Ok(match classify_pn(p).variant {
                CaseVariant::CurrentBlowup => cnk * (n - k) / (n * solve_lambda_pn(p)?.powf(k)),
                _ => cnk * ratio_pn(p),
            })
        }
        Problem::Xmn(p) => Ok(solve_xmn_system(p)?.alpha),
    }
}

/// `sup |σ_k − c|` over `grid`, with `c` from [`stationary_constant`].
pub fn stationary_residual(s: &StationaryProfile, problem: &Problem, grid: &[f64]) -> Result<f64> {
    let c = stationary_constant(problem)?;
    let mut worst: f64 = 0.0;
    for &x in grid {
        if x <= s.lambda {
            return Err(Error::Domain { value: x, lo: s.lambda, hi: s.x_hi });
        }
        worst = worst.max((s.sigma(x)? - c).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pn(n: u32, k: u32, a: f64, b: f64) -> PnProblem {
        PnProblem::new(n, k, a, b).unwrap()
    }

    fn interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    #[test]
    fn smooth_pn_coefficients() {
        let s = stationary_pn(&pn(2, 1, 3.0, 2.0)).unwrap();
        let Branch::Pn { a, b, .. } = s.branch else { panic!() };
        assert!((a - 5.0 / 3.0).abs() < 1e-14 && (b + 2.0 / 3.0).abs() < 1e-14);
        assert!((s.value(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.value(2.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_pn_has_zero_slope() {
        let s = stationary_pn(&pn(2, 1, 1.25, 2.0)).unwrap();
        let Branch::Pn { a, b, .. } = s.branch else { panic!() };
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);
        assert_eq!(s.lambda, 1.0);
        assert!(s.derivative(1.0 + 1e-12).unwrap().abs() < 1e-10);
    }

    #[test]
    fn blowup_pn_profile() {
        let p = pn(2, 1, 1.2, 2.0);
        let l = solve_lambda_pn(&p).unwrap();
        assert!((l - (2.4 - 1.76f64.sqrt())).abs() < 1e-12);
        let s = stationary_pn(&p).unwrap();
        let Branch::Pn { a, b, .. } = s.branch else { panic!() };
        assert!((a - 1.0 / (2.0 * l)).abs() < 1e-14 && (b - l / 2.0).abs() < 1e-14);
        assert!((s.value(2.0).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(s.value(l).unwrap(), 1.0);
        assert_eq!(s.derivative(l).unwrap(), 0.0);
        assert!(s.value(1.0).unwrap() == 1.0);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(solve_lambda_pn(&pn(2, 1, 1.25, 2.0)).unwrap(), 1.0);
        // 4/λ + λ²/4 = 3.6
        let l = solve_lambda_pn(&pn(3, 1, 1.2, 2.0)).unwrap();
        assert!((4.0 / l + l * l / 4.0 - 3.6).abs() < 1e-12);
        assert!((l - 1.245).abs() < 5e-4, "{l}");
        assert!(matches!(solve_lambda_pn(&pn(2, 1, 3.0, 2.0)), Err(Error::CaseMismatch(_))));
    }

    #[test]
    fn scaling_link() {
        for &(n, k, a, b) in &[(2, 1, 1.2, 2.0), (3, 1, 1.2, 2.0), (4, 2, 1.3, 2.5), (3, 2, 1.1, 3.0)] {
            let p = pn(n, k, a, b);
            let l = solve_lambda_pn(&p).unwrap();
            let r = p.with_beta(b / l).unwrap();
            assert_eq!(classify_pn(&r).variant, CaseVariant::ConicBoundary, "{n} {k} {a} {b}");
        }
    }

    #[test]
    fn c1_across_contact() {
        for &(n, k, a, b) in &[(2, 1, 1.2, 2.0), (4, 3, 1.5, 3.0)] {
            let s = stationary_pn(&pn(n, k, a, b)).unwrap();
            let (h, l) = (1e-4, s.lambda);
            let f = |x: f64| s.value(x).unwrap();
            // second-order one-sided differences
            let right = (-3.0 * f(l) + 4.0 * f(l + h) - f(l + 2.0 * h)) / (2.0 * h);
            assert!(right.abs() < 1e-6, "{right}");
            let left = (3.0 * f(l) - 4.0 * f(l - h) + f(l - 2.0 * h)) / (2.0 * h);
            assert!(left.abs() < 1e-6);
        }
    }

    #[test]
    fn residual_examples() {
        for &(n, k, a, b) in &[(2, 1, 3.0, 2.0), (2, 1, 1.2, 2.0), (3, 2, 2.0, 1.5), (4, 2, 1.3, 2.5)] {
            let p = pn(n, k, a, b);
            let s = stationary_pn(&p).unwrap();
            let grid = interior(s.lambda, s.x_hi, 50);
            let r = stationary_residual(&s, &Problem::Pn(p.clone()), &grid).unwrap();
            assert!(r <= 1e-10, "{n} {k} {a} {b}: {r}");
        }
        let p = pn(2, 1, 3.0, 2.0);
        let mut s = stationary_pn(&p).unwrap();
        if let Branch::Pn { a, b, .. } = &mut s.branch {
            *a += 1e-3;
            *b -= 1e-3;
        }
        let r = stationary_residual(&s, &Problem::Pn(p), &interior(1.0, 2.0, 50)).unwrap();
        assert!(r > 1e-4);
    }

    #[test]
    fn xmn_system_blowup() {
        let p = XmnProblem::new(0, 1, 1, 0.1, 2.0).unwrap();
        let sys = solve_xmn_system(&p).unwrap();
        let l = 2.3 - (2.3f64 * 2.3 - 3.4).sqrt();
        assert!((sys.lambda - l).abs() < 1e-11);
        assert!((sys.alpha - 1.0 / (1.0 + l)).abs() < 1e-11);
        assert!((sys.alpha * 4.0 + sys.beta - 2.3).abs() < 1e-11);
        assert_eq!(sys.sign_changes, 1);
        assert!((sys.alpha - 0.51942).abs() < 1e-5 && (sys.beta - 0.22233).abs() < 1e-5);
    }

    #[test]
    fn xmn_system_degenerate_cases() {
        let third = |v: i64| num_rational::BigRational::new(v.into(), 3.into());
        let p = XmnProblem::exact(0, 1, 1, third(2), third(6)).unwrap();
        let sys = solve_xmn_system(&p).unwrap();
        assert_eq!((sys.lambda, sys.beta), (0.0, 0.0));
        assert!((sys.alpha - 1.0).abs() < 1e-15);
        let sys = solve_xmn_system(&XmnProblem::new(0, 1, 1, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((sys.alpha, sys.beta, sys.lambda), (2.0, 0.0, 0.0));
    }

    #[test]
    fn xmn_profiles() {
        let s = stationary_xmn(&XmnProblem::new(0, 1, 1, 1.0, 1.0).unwrap()).unwrap();
        assert!((s.value(1.0).unwrap() - 1.0).abs() < 1e-12);
        // f = x solves f x + f + x = x² + 2x
        assert!((s.value(0.3).unwrap() - 0.3).abs() < 1e-12);
        assert!((s.derivative(0.3).unwrap() - 1.0).abs() < 1e-10);

        let p = XmnProblem::new(0, 1, 1, 0.1, 2.0).unwrap();
        let s = stationary_xmn(&p).unwrap();
        assert!((s.value(2.0).unwrap() - 0.1).abs() < 1e-10);
        let x = 1.5;
        let Branch::Xmn { alpha, beta, .. } = s.branch else { panic!() };
        let f = (alpha * (x * x / 2.0 + x) + beta - x) / (1.0 + x);
        assert!((s.value(x).unwrap() - f).abs() < 1e-12);
        let grid = interior(s.lambda, 2.0, 40);
        let prob = Problem::Xmn(p);
        assert!(stationary_residual(&s, &prob, &grid).unwrap() < 1e-10);
        let mut last = 0.0;
        for &x in &grid {
            let v = s.value(x).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn xmn_higher_k_profiles() {
        for &(m, n, k, b, bp) in &[(1, 2, 1, 0.2, 1.5), (2, 3, 2, 0.5, 1.0), (1, 1, 2, 0.7, 1.3), (0, 2, 2, 0.3, 2.0)] {
            let p = XmnProblem::new(m, n, k, b, bp).unwrap();
            let s = stationary_xmn(&p).unwrap();
            assert!((s.value(bp).unwrap() - b).abs() < 1e-9, "{m} {n} {k}");
            let grid = interior(s.lambda, bp, 40);
            let r = stationary_residual(&s, &Problem::Xmn(p), &grid).unwrap();
            assert!(r < 1e-8, "{m} {n} {k}: {r}");
        }
    }

    #[test]
    fn strict_slope_at_x_lo_in_strict_cases() {
        let s = stationary_pn(&pn(2, 1, 1.5, 2.0)).unwrap();
        assert!(s.derivative(1.0 + 1e-9).unwrap() > 1e-6);
        let s = stationary_pn(&pn(2, 1, 1.25, 2.0)).unwrap();
        assert!(s.derivative(1.0 + 1e-9).unwrap() < 1e-6);
    }

    #[test]
    fn csv_export() {
        let s = stationary_pn(&pn(2, 1, 3.0, 2.0)).unwrap();
        let mut buf = Vec::new();
        s.write_csv_to(&[1.0, 1.5, 2.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,f,fprime\n1,1,"));
        assert!(s.value(2.5).is_err());
    }
}
