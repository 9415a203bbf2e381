//! Exact rational polynomials in `(f, x)` for the `G`-functions of the
//! projective bundles `X_{m,n}`.
//!
//! `G^{m,n}_a(x) = ∫_0^x t^m (t + a)^n dt` and `G^{m,n,k}_1(f, x)` is the `k`-th
//! Taylor coefficient in `t` of `G^{m,n}_{1+t}(x + t f)`. Everything in this
//! module is computed in arbitrary-precision rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::classes::XmnProblem;
use crate::error::{Error, Result};

/// Exact binomial coefficient.
pub fn binomial_exact(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Converts a finite `f64` to the rational it represents exactly.
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite value {v}")))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sparse polynomial `Σ c_{ij} f^i x^j` with rational coefficients.
///
/// Keys are `(power of f, power of x)`; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BivariatePoly {
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, 0, 0)
    }

    /// `c · f^i · x^j`
    pub fn monomial(c: BigRational, f_pow: u32, x_pow: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(f_pow, x_pow, c);
        p
    }

    /// The variable `x`.
    pub fn x() -> Self {
        Self::monomial(BigRational::one(), 0, 1)
    }

    /// The variable `f`.
    pub fn f() -> Self {
        Self::monomial(BigRational::one(), 1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, f_pow: u32, x_pow: u32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((f_pow, x_pow)).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(f_pow, x_pow));
        }
    }

    pub fn coeff(&self, f_pow: u32, x_pow: u32) -> BigRational {
        self.terms
            .get(&(f_pow, x_pow))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Terms in canonical order (ascending `f` power, then `x` power).
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &BigRational)> {
        self.terms.iter().map(|(&(i, j), c)| (i, j, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_f(&self) -> u32 {
        self.terms.keys().map(|&(i, _)| i).max().unwrap_or(0)
    }

    pub fn degree_x(&self) -> u32 {
        self.terms.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (&(i, j), v) in &self.terms {
            out.add_term(i, j, v * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `∂/∂x`
    pub fn deriv_x(&self) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            if j > 0 {
                out.add_term(i, j - 1, c * BigRational::from_integer(j.into()));
            }
        }
        out
    }

    /// `∂/∂f`
    pub fn deriv_f(&self) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            if i > 0 {
                out.add_term(i - 1, j, c * BigRational::from_integer(i.into()));
            }
        }
        out
    }

    /// Substitutes `f ↦ replacement` (a polynomial in `f`, `x`).
    pub fn substitute_f(&self, replacement: &BivariatePoly) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            let part = &replacement.pow(i) * &Self::monomial(c.clone(), 0, j);
            out = &out + &part;
        }
        out
    }

    pub fn eval(&self, f: &BigRational, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(i, j), c) in &self.terms {
            acc += c * pow_rational(f, i) * pow_rational(x, j);
        }
        acc
    }

    /// Groups terms by powers of `f`: entry `i` is the coefficient of `f^i`,
    /// a polynomial in `x` alone.
    pub fn f_coefficients(&self) -> Vec<BivariatePoly> {
        let mut out = vec![BivariatePoly::zero(); self.degree_f() as usize + 1];
        for (&(i, j), c) in &self.terms {
            out[i as usize].add_term(0, j, c.clone());
        }
        out
    }

    /// Floating-point copy for fast repeated evaluation.
    pub fn to_float(&self) -> FloatPoly {
        FloatPoly {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| (i as i32, j as i32, rational_to_f64(c)))
                .collect(),
        }
    }

    /// True when every stored coefficient is strictly positive.
    pub fn all_coefficients_positive(&self) -> bool {
        self.terms.values().all(|c| c.is_positive())
    }
}

fn pow_rational(base: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

impl Add for &BivariatePoly {
    type Output = BivariatePoly;
    fn add(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
}

impl Sub for &BivariatePoly {
    type Output = BivariatePoly;
    fn sub(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, -c.clone());
        }
        out
    }
}

impl Neg for &BivariatePoly {
    type Output = BivariatePoly;
    fn neg(self) -> BivariatePoly {
        self.scale(&-BigRational::one())
    }
}

impl Mul for &BivariatePoly {
    type Output = BivariatePoly;
    fn mul(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = BivariatePoly::zero();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

/// Canonical text form: `c * f^i * x^j + ...` in ascending `(i, j)` order,
/// with `c` written as `p` or `p/q`. The zero polynomial prints as `0`.
impl fmt::Display for BivariatePoly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        for (idx, (&(i, j), c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(out, " + ")?;
            }
            write!(out, "{c} * f^{i} * x^{j}")?;
        }
        Ok(())
    }
}

impl FromStr for BivariatePoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut out = BivariatePoly::zero();
        if s == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let parts: Vec<&str> = term.split(" * ").map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("malformed term `{term}`")));
            }
            let c = BigRational::from_str(parts[0])
                .map_err(|e| Error::Parse(format!("coefficient `{}`: {e}", parts[0])))?;
            let i = parse_power(parts[1], "f")?;
            let j = parse_power(parts[2], "x")?;
            out.add_term(i, j, c);
        }
        Ok(out)
    }
}

fn parse_power(s: &str, var: &str) -> Result<u32> {
    let rest = s
        .strip_prefix(var)
        .and_then(|r| r.strip_prefix('^'))
        .ok_or_else(|| Error::Parse(format!("expected `{var}^n`, got `{s}`")))?;
    rest.parse()
        .map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))
}

/// Floating-point polynomial in `(f, x)` used on hot evaluation paths.
#[derive(Clone, Debug, Default)]
pub struct FloatPoly {
    terms: Vec<(i32, i32, f64)>,
}

impl FloatPoly {
    pub fn eval(&self, f: f64, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(i, j, c)| c * f.powi(i) * x.powi(j))
            .sum()
    }
}

/// Indices of a `G`-function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GSpec {
    pub m: u32,
    pub n: u32,
    pub k: u32,
}

impl GSpec {
    pub fn new(m: u32, n: u32, k: u32) -> Result<Self> {
        if k > m + n + 1 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds m + n + 1 = {}",
                m + n + 1
            )));
        }
        Ok(Self { m, n, k })
    }
}

/// `G^{m,n,k}_1` together with its indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFunction {
    pub spec: GSpec,
    pub poly: BivariatePoly,
}

/// `G^{m,n}_1(x) = Σ_j C(n,j) x^{m+j+1} / (m+j+1)`.
pub fn g_mn(m: u32, n: u32) -> BivariatePoly {
    let mut out = BivariatePoly::zero();
    for j in 0..=n {
        let c = BigRational::new(binomial_exact(n, j), BigInt::from(m + j + 1));
        out.add_term(0, m + j + 1, c);
    }
    out
}

/// `G^{m,n,k}_1(f, x)`: the `t^k` coefficient of
/// `Σ_j C(n,j) (1+t)^{n-j} (x + t f)^{m+j+1} / (m+j+1)`.
pub fn g_mnk(m: u32, n: u32, k: u32) -> Result<GFunction> {
    let spec = GSpec::new(m, n, k)?;
    let mut poly = BivariatePoly::zero();
    for j in 0..=n {
        let p = m + j + 1;
        let outer = BigRational::new(binomial_exact(n, j), BigInt::from(p));
        // t^i from (x + t f)^p, t^{k-i} from (1 + t)^{n-j}
        for i in 0..=k.min(p) {
            let from_one_plus_t = binomial_exact(n - j, k - i);
            if from_one_plus_t.is_zero() {
                continue;
            }
            let c = &outer
                * BigRational::from_integer(from_one_plus_t * binomial_exact(p, i));
            poly.add_term(i, p - i, c);
        }
    }
    Ok(GFunction { spec, poly })
}

/// Splits `G^{m,n,k}_1 = Σ_i f^i a_i(x)` and checks the constant-in-`f`
/// identity `a_0 = C(n,k) G^{m,n-k}_1` (or `a_0 = 0` when `k > n`).
pub fn a_coefficients(g: &GFunction) -> Result<Vec<BivariatePoly>> {
    let GSpec { m, n, k } = g.spec;
    let mut coeffs = g.poly.f_coefficients();
    if coeffs.len() > k as usize + 1 {
        return Err(Error::Inconsistency(format!(
            "G^{{{m},{n},{k}}} has f-degree {} > k",
            coeffs.len() - 1
        )));
    }
    coeffs.resize(k as usize + 1, BivariatePoly::zero());
    let expected = if k <= n {
        g_mn(m, n - k).scale(&BigRational::from_integer(binomial_exact(n, k)))
    } else {
        BivariatePoly::zero()
    };
    if coeffs[0] != expected {
        return Err(Error::Inconsistency(format!(
            "a_0 of G^{{{m},{n},{k}}} is {} but expected {}",
            coeffs[0], expected
        )));
    }
    Ok(coeffs)
}

/// Exact and floating values of a topological constant.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologicalConstant {
    pub exact: BigRational,
    pub value: f64,
}

/// `c_k = G^{m,n,k}_1(b, b') / G^{m,n}_1(b')`, evaluated exactly.
pub fn topological_constant_xmn(p: &XmnProblem) -> Result<TopologicalConstant> {
    let (b, b_prime) = p.exact_classes()?;
    if b_prime.is_zero() {
        return Err(Error::InvalidParameter("b' must be nonzero".into()));
    }
    let g = g_mnk(p.m, p.n, p.k)?;
    let num = g.poly.eval(&b, &b_prime);
    let den = g_mn(p.m, p.n).eval(&BigRational::zero(), &b_prime);
    if den.is_zero() {
        return Err(Error::InvalidParameter("G^{m,n}_1(b') vanishes".into()));
    }
    let exact = num / den;
    let value = rational_to_f64(&exact);
    Ok(TopologicalConstant { exact, value })
}

/// `σ_k` of the `X_{m,n}` eigenvalue tuple computed through the `G`-ratio
/// `d/dx[G^{m,n,k}_1(f(x), x)] / (G^{m,n}_1)'(x)`.
pub struct GRatio {
    dg_dx: FloatPoly,
    dg_df: FloatPoly,
    dbase: FloatPoly,
}

impl GRatio {
    pub fn new(g: &GFunction) -> Self {
        let base = g_mn(g.spec.m, g.spec.n);
        Self {
            dg_dx: g.poly.deriv_x().to_float(),
            dg_df: g.poly.deriv_f().to_float(),
            dbase: base.deriv_x().to_float(),
        }
    }

    pub fn sigma(&self, f: f64, fx: f64, x: f64) -> f64 {
        (self.dg_dx.eval(f, x) + fx * self.dg_df.eval(f, x)) / self.dbase.eval(0.0, x)
    }

    /// `∂G^{m,n,k}_1/∂f`, the factor linking `∂_t G` to `∂_t f`.
    pub fn dg_df(&self, f: f64, x: f64) -> f64 {
        self.dg_df.eval(f, x)
    }
}
