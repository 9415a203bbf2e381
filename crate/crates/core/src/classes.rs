//! Kähler-class bookkeeping for `ℙⁿ#ℙ̄ⁿ` and `X_{m,n}`: topological ratios,
//! cone membership, case classification and the class of singular limits.
//!
//! Classes are taken in normalised form. On `ℙⁿ#ℙ̄ⁿ` a class `B[E∞] − A[E0]`
//! (`B > A > 0`) is rescaled by `1/A` to `(B/A)[E∞] − [E0]`, so only the
//! `E∞`-coefficient is stored. On `X_{m,n}` a class `a[D_H] + b[D∞]` is
//! rescaled by `1/a`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpoly::{rational_from_f64, rational_to_f64};
use crate::sigma::binomial;

/// Absolute tolerance used to declare a boundary case with float inputs.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `ω ∈ α[E∞] − [E0]`, `χ ∈ β[E∞] − [E0]` on `ℙⁿ#ℙ̄ⁿ`, flow degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PnProblem {
    pub n: u32,
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    exact: Option<(BigRational, BigRational)>,
}

impl PnProblem {
    pub fn new(n: u32, k: u32, alpha: f64, beta: f64) -> Result<Self> {
        Self::validate(n, k, alpha, beta)?;
        Ok(Self { n, k, alpha, beta, exact: None })
    }

    /// Problem with rational class coefficients; thresholds are then decided
    /// exactly.
    pub fn exact(n: u32, k: u32, alpha: BigRational, beta: BigRational) -> Result<Self> {
        let (a, b) = (rational_to_f64(&alpha), rational_to_f64(&beta));
        Self::validate(n, k, a, b)?;
        if alpha <= BigRational::one() || beta <= BigRational::one() {
            return Err(Error::InvalidParameter("alpha and beta must exceed 1".into()));
        }
        Ok(Self { n, k, alpha: a, beta: b, exact: Some((alpha, beta)) })
    }

    /// Normalises `ω ∈ B_ω[E∞] − A_ω[E0]`, `χ ∈ B_χ[E∞] − A_χ[E0]`.
    pub fn from_classes(n: u32, k: u32, omega: (f64, f64), chi: (f64, f64)) -> Result<Self> {
        let (bw, aw) = omega;
        let (bc, ac) = chi;
        if !(aw > 0.0 && ac > 0.0) {
            return Err(Error::InvalidParameter("E0 coefficients must be positive".into()));
        }
        Self::new(n, k, bw / aw, bc / ac)
    }

    fn validate(n: u32, k: u32, alpha: f64, beta: f64) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
        }
        if k < 1 || k > n {
            return Err(Error::InvalidParameter(format!("k = {k} must lie in [1, {n}]")));
        }
        if !(alpha.is_finite() && alpha > 1.0) || !(beta.is_finite() && beta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha}, beta = {beta} must both exceed 1"
            )));
        }
        Ok(())
    }

    pub fn exact_classes(&self) -> Option<&(BigRational, BigRational)> {
        self.exact.as_ref()
    }

    /// Same `n`, `k`, `α` with `β` replaced.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n, self.k, self.alpha, beta)
    }

    /// `(n − k)/n`, the cone threshold.
    pub fn threshold(&self) -> f64 {
        (self.n - self.k) as f64 / self.n as f64
    }
}

/// `ω ∈ [D_H] + b[D∞]`, `χ ∈ [D_H] + b′[D∞]` on `X_{m,n}`, flow degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct XmnProblem {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub b: f64,
    pub b_prime: f64,
    exact: Option<(BigRational, BigRational)>,
}

impl XmnProblem {
    pub fn new(m: u32, n: u32, k: u32, b: f64, b_prime: f64) -> Result<Self> {
        Self::validate(m, n, k, b, b_prime)?;
        Ok(Self { m, n, k, b, b_prime, exact: None })
    }

    pub fn exact(m: u32, n: u32, k: u32, b: BigRational, b_prime: BigRational) -> Result<Self> {
        let (bf, bpf) = (rational_to_f64(&b), rational_to_f64(&b_prime));
        Self::validate(m, n, k, bf, bpf)?;
        if b <= BigRational::zero() || b_prime <= BigRational::zero() {
            return Err(Error::InvalidParameter("b and b' must be positive".into()));
        }
        Ok(Self { m, n, k, b: bf, b_prime: bpf, exact: Some((b, b_prime)) })
    }

    fn validate(m: u32, n: u32, k: u32, b: f64, b_prime: f64) -> Result<()> {
        if n < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if k < 1 || k > m + n + 1 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} must lie in [1, {}]",
                m + n + 1
            )));
        }
        if !(b.is_finite() && b > 0.0) || !(b_prime.is_finite() && b_prime > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "b = {b}, b' = {b_prime} must both be positive"
            )));
        }
        Ok(())
    }

    /// `(b, b′)` as exact rationals; float inputs convert without rounding.
    pub fn exact_classes(&self) -> Result<(BigRational, BigRational)> {
        match &self.exact {
            Some((b, bp)) => Ok((b.clone(), bp.clone())),
            None => Ok((rational_from_f64(self.b)?, rational_from_f64(self.b_prime)?)),
        }
    }

    /// `C(n, k)`, the cone threshold for `k ≤ n`.
    pub fn threshold(&self) -> f64 {
        binomial(self.n as usize, self.k as usize)
    }

    /// Total complex dimension `m + n + 1`.
    pub fn dimension(&self) -> u32 {
        self.m + self.n + 1
    }
}

/// Either manifold family.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Pn(PnProblem),
    Xmn(XmnProblem),
}

impl Problem {
    pub fn k(&self) -> u32 {
        match self {
            Problem::Pn(p) => p.k,
            Problem::Xmn(p) => p.k,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Problem::Pn(_) => "pn",
            Problem::Xmn(_) => "xmn",
        }
    }
}

impl From<PnProblem> for Problem {
    fn from(p: PnProblem) -> Self {
        Problem::Pn(p)
    }
}

impl From<XmnProblem> for Problem {
    fn from(p: XmnProblem) -> Self {
        Problem::Xmn(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CaseVariant {
    Smooth,
    ConicBoundary,
    CurrentBlowup,
}

impl fmt::Display for CaseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseVariant::Smooth => "Smooth",
            CaseVariant::ConicBoundary => "ConicBoundary",
            CaseVariant::CurrentBlowup => "CurrentBlowup",
        };
        f.write_str(s)
    }
}

/// Sub-cases of the four-case picture on `ℙⁿ#ℙ̄ⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PnSubcase {
    /// `α > β`: concave limit.
    Concave,
    /// convex limit with positive slope at `x = 1`
    ConvexInterior,
    /// convex limit tangent to the obstacle at `x = 1`
    ConvexTangent,
    /// flat part on `[1, λ]`
    Obstacle,
}

impl PnSubcase {
    pub fn variant(self) -> CaseVariant {
        match self {
            PnSubcase::Concave | PnSubcase::ConvexInterior => CaseVariant::Smooth,
            PnSubcase::ConvexTangent => CaseVariant::ConicBoundary,
            PnSubcase::Obstacle => CaseVariant::CurrentBlowup,
        }
    }
}

impl fmt::Display for PnSubcase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CaseLabel {
    pub variant: CaseVariant,
    pub detail: Option<PnSubcase>,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.detail {
            Some(d) => write!(f, "{} ({d})", self.variant),
            None => write!(f, "{}", self.variant),
        }
    }
}

/// Coefficients of a class on a named divisor basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassVector {
    pub basis: Vec<String>,
    pub coeffs: Vec<f64>,
}

impl ClassVector {
    pub fn new(basis: &[&str], coeffs: Vec<f64>) -> Result<Self> {
        if basis.len() != coeffs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} basis divisors but {} coefficients",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis: basis.iter().map(|s| s.to_string()).collect(), coeffs })
    }

    pub fn coeff(&self, divisor: &str) -> Option<f64> {
        self.basis.iter().position(|b| b == divisor).map(|i| self.coeffs[i])
    }
}

impl fmt::Display for ClassVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (b, c)) in self.basis.iter().zip(&self.coeffs).enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c:+}[{b}]")?;
        }
        Ok(())
    }
}

/// Class of the singular limit and the coefficient of the current of
/// integration it carries along the exceptional divisor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitClass {
    pub class: ClassVector,
    pub current_divisor: String,
    pub current_coefficient: f64,
}

/// `(α^k β^{n−k} − 1)/(β^n − 1)`.
pub fn ratio_pn(p: &PnProblem) -> f64 {
    let (n, k) = (p.n as i32, p.k as i32);
    (p.alpha.powi(k) * p.beta.powi(n - k) - 1.0) / (p.beta.powi(n) - 1.0)
}

/// Exact ratio, when the problem was built from rationals.
pub fn ratio_pn_exact(p: &PnProblem) -> Option<BigRational> {
    let (alpha, beta) = p.exact.as_ref()?;
    let (n, k) = (p.n as i32, p.k as i32);
    let one = BigRational::one();
    Some((num_traits::pow(alpha.clone(), k as usize) * num_traits::pow(beta.clone(), (n - k) as usize) - &one)
        / (num_traits::pow(beta.clone(), n as usize) - &one))
}

fn compare_ratio_pn(p: &PnProblem) -> Ordering {
    if let Some(r) = ratio_pn_exact(p) {
        let threshold = BigRational::new((p.n - p.k).into(), p.n.into());
        return r.cmp(&threshold);
    }
    compare_with_tol(ratio_pn(p), p.threshold())
}

fn compare_with_tol(value: f64, threshold: f64) -> Ordering {
    if (value - threshold).abs() <= BOUNDARY_TOL {
        Ordering::Equal
    } else if value > threshold {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

fn alpha_exceeds_beta(p: &PnProblem) -> bool {
    match &p.exact {
        Some((a, b)) => a > b,
        None => p.alpha > p.beta,
    }
}

pub fn classify_pn(p: &PnProblem) -> CaseLabel {
    let detail = if alpha_exceeds_beta(p) {
        PnSubcase::Concave
    } else {
        // sign of the limit slope at x = 1 follows the ratio comparison; α = β
        // lands in ConvexInterior
        match compare_ratio_pn(p) {
            Ordering::Greater => PnSubcase::ConvexInterior,
            Ordering::Equal => PnSubcase::ConvexTangent,
            Ordering::Less => PnSubcase::Obstacle,
        }
    };
    CaseLabel { variant: detail.variant(), detail: Some(detail) }
}

/// `[χ] ∈ 𝒞_k(ω)`.
pub fn cone_membership_pn(p: &PnProblem) -> bool {
    compare_ratio_pn(p) == Ordering::Greater
}

fn label_from_ordering(o: Ordering) -> CaseLabel {
    let variant = match o {
        Ordering::Greater => CaseVariant::Smooth,
        Ordering::Equal => CaseVariant::ConicBoundary,
        Ordering::Less => CaseVariant::CurrentBlowup,
    };
    CaseLabel { variant, detail: None }
}

/// Classification on `X_{m,n}` from a float topological constant.
pub fn classify_xmn(p: &XmnProblem, ck: f64) -> CaseLabel {
    if p.k > p.n {
        return label_from_ordering(Ordering::Greater);
    }
    label_from_ordering(compare_with_tol(ck, p.threshold()))
}

/// Classification on `X_{m,n}` from the exact topological constant.
pub fn classify_xmn_exact(p: &XmnProblem, ck: &BigRational) -> CaseLabel {
    if p.k > p.n {
        return label_from_ordering(Ordering::Greater);
    }
    let threshold = BigRational::from_integer(crate::gpoly::binomial_exact(p.n, p.k));
    label_from_ordering(ck.cmp(&threshold))
}

/// Class of the limit for contact point `lambda`.
///
/// On `ℙⁿ#ℙ̄ⁿ` the limit lies in `β[E∞] − λ[E0]` and carries the current
/// `(λ − 1)[E0]`; on `X_{m,n}` it lies in `[D_H] + b′[D∞] − λ[E]` on the blow-up
/// and carries `λ[E]`.
pub fn limit_class(problem: &Problem, lambda: f64) -> Result<LimitClass> {
    match problem {
        Problem::Pn(p) => {
            if !(lambda >= 1.0 && lambda < p.beta) {
                return Err(Error::CaseMismatch(format!(
                    "contact point {lambda} outside [1, {})",
                    p.beta
                )));
            }
            Ok(LimitClass {
                class: ClassVector::new(&["E_inf", "E_0"], vec![p.beta, -lambda])?,
                current_divisor: "E_0".into(),
                current_coefficient: lambda - 1.0,
            })
        }
        Problem::Xmn(p) => {
            if !(lambda >= 0.0 && lambda < p.b_prime) {
                return Err(Error::CaseMismatch(format!(
                    "contact point {lambda} outside [0, {})",
                    p.b_prime
                )));
            }
            Ok(LimitClass {
                class: ClassVector::new(&["D_H", "D_inf", "E"], vec![1.0, p.b_prime, -lambda])?,
                current_divisor: "E".into(),
                current_coefficient: lambda,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio_pn(&PnProblem::new(2, 1, 2.0, 2.0).unwrap()), 1.0);
        assert!((ratio_pn(&PnProblem::new(2, 1, 1.25, 2.0).unwrap()) - 0.5).abs() < 1e-15);
        assert!((ratio_pn(&PnProblem::new(2, 1, 1.2, 2.0).unwrap()) - 1.4 / 3.0).abs() < 1e-15);
        let p = PnProblem::exact(2, 1, r(6, 5), r(2, 1)).unwrap();
        assert_eq!(ratio_pn_exact(&p).unwrap(), r(7, 15));
    }

    #[test]
    fn classify_examples() {
        let smooth = classify_pn(&PnProblem::new(2, 1, 2.0, 2.0).unwrap());
        assert_eq!(smooth.variant, CaseVariant::Smooth);
        assert_eq!(smooth.detail, Some(PnSubcase::ConvexInterior));

        let conic = classify_pn(&PnProblem::new(2, 1, 1.25, 2.0).unwrap());
        assert_eq!(conic.variant, CaseVariant::ConicBoundary);
        assert_eq!(conic.detail, Some(PnSubcase::ConvexTangent));

        let blow = classify_pn(&PnProblem::new(2, 1, 1.2, 2.0).unwrap());
        assert_eq!(blow.variant, CaseVariant::CurrentBlowup);
        assert_eq!(blow.detail, Some(PnSubcase::Obstacle));

        let concave = classify_pn(&PnProblem::new(2, 1, 3.0, 2.0).unwrap());
        assert_eq!(concave.detail, Some(PnSubcase::Concave));
    }

    #[test]
    fn exact_boundary_is_detected() {
        // n = 3, k = 1, β = 2: (4α − 1)/7 = 2/3 at α = 17/12
        let p = PnProblem::exact(3, 1, r(17, 12), r(2, 1)).unwrap();
        assert_eq!(classify_pn(&p).variant, CaseVariant::ConicBoundary);
        // α < β boundary: n = 2, k = 1, β = 3, α = (1 + 4)/3 = 5/3
        let p = PnProblem::exact(2, 1, r(5, 3), r(3, 1)).unwrap();
        assert_eq!(classify_pn(&p).variant, CaseVariant::ConicBoundary);
    }

    #[test]
    fn cone_membership_examples() {
        assert!(cone_membership_pn(&PnProblem::new(2, 1, 3.0, 2.0).unwrap()));
        assert!(!cone_membership_pn(&PnProblem::new(2, 1, 1.25, 2.0).unwrap()));
        for &(a, b) in &[(1.01, 9.0), (1.5, 1.2), (4.0, 50.0)] {
            assert!(cone_membership_pn(&PnProblem::new(4, 4, a, b).unwrap()));
        }
    }

    #[test]
    fn classify_xmn_examples() {
        let p = XmnProblem::new(0, 1, 1, 1.0, 1.0).unwrap();
        assert_eq!(classify_xmn(&p, 2.0).variant, CaseVariant::Smooth);
        let p = XmnProblem::new(0, 1, 1, 2.0 / 3.0, 2.0).unwrap();
        assert_eq!(classify_xmn(&p, 1.0).variant, CaseVariant::ConicBoundary);
        let p = XmnProblem::new(0, 1, 1, 0.1, 2.0).unwrap();
        assert_eq!(classify_xmn(&p, 0.575).variant, CaseVariant::CurrentBlowup);
        let p = XmnProblem::new(1, 1, 2, 0.1, 2.0).unwrap();
        assert_eq!(classify_xmn(&p, 1e-3).variant, CaseVariant::Smooth);
    }

    #[test]
    fn limit_class_examples() {
        let p: Problem = PnProblem::new(2, 1, 1.2, 2.0).unwrap().into();
        let lc = limit_class(&p, 1.07335).unwrap();
        assert_eq!(lc.class.coeffs, vec![2.0, -1.07335]);
        assert!((lc.current_coefficient - 0.07335).abs() < 1e-12);
        let lc = limit_class(&p, 1.0).unwrap();
        assert_eq!(lc.current_coefficient, 0.0);
        assert!(limit_class(&p, 2.5).is_err());

        let x: Problem = XmnProblem::new(0, 1, 1, 0.1, 2.0).unwrap().into();
        let lc = limit_class(&x, 0.92523).unwrap();
        assert_eq!(lc.class.coeff("D_H"), Some(1.0));
        assert_eq!(lc.class.coeff("D_inf"), Some(2.0));
        assert_eq!(lc.class.coeff("E"), Some(-0.92523));
        assert!(limit_class(&x, -0.1).is_err());
    }

    #[test]
    fn invalid_problems_are_rejected() {
        assert!(PnProblem::new(1, 1, 2.0, 2.0).is_err());
        assert!(PnProblem::new(2, 3, 2.0, 2.0).is_err());
        assert!(PnProblem::new(2, 1, 1.0, 2.0).is_err());
        assert!(XmnProblem::new(0, 1, 3, 1.0, 1.0).is_err());
        assert!(XmnProblem::new(0, 1, 1, 0.0, 1.0).is_err());
        assert!(ClassVector::new(&["a", "b"], vec![1.0]).is_err());
    }

    #[test]
    fn from_classes_normalises() {
        let p = PnProblem::from_classes(2, 1, (6.0, 2.0), (8.0, 4.0)).unwrap();
        assert_eq!((p.alpha, p.beta), (3.0, 2.0));
    }
}
