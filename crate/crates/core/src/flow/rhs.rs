//! Right-hand sides of the reduced flows in frozen-coefficient form
//! `W·[a2·u″ + a1·u′ + a0·u + s]`, discretized with central differences.

use crate::classes::Problem;
use crate::error::{Error, Result};
use crate::potential::{FluxFunction, Potential, RadialPotential};
use crate::sigma::binomial;

use super::{FlowProblem, FlowState, Grid, Variable};

/// Nodal coefficients of the linearized operator at interior nodes.
///
/// On `ℙⁿ#ℙ̄ⁿ` everything but `w` and `sigma` depends on the grid alone and is
/// filled once per grid.
#[derive(Clone, Debug, Default)]
pub struct Coefficients {
    pub w: Vec<f64>,
    pub a2: Vec<f64>,
    pub a1: Vec<f64>,
    pub a0: Vec<f64>,
    pub s: Vec<f64>,
    /// local σ_k, the argument of `F′`
    pub sigma: Vec<f64>,
    /// `max_i w_i (2 a2_i / h² + |a0_i|)`
    pub max_rate: f64,
    // σ_k = sig_d·g′ + sig_v·g on ℙⁿ#ℙ̄ⁿ; 1/(1+x) and 1/x (or 0) on X_{m,n}
    sig_d: Vec<f64>,
    sig_v: Vec<f64>,
    xmn: Option<XmnSigma>,
    // last f = g^{1/k}, the Newton start for the next call
    root: Vec<f64>,
    inv_x: Vec<f64>,
    prepared: Option<(usize, u64, u64)>,
}

impl Coefficients {
    fn prepare(&mut self, fp: &FlowProblem, grid: &Grid) {
        let key = (grid.points, grid.x_lo.to_bits(), grid.x_hi.to_bits());
        if self.prepared == Some(key) {
            return;
        }
        let len = grid.points;
        for v in [
            &mut self.w,
            &mut self.a2,
            &mut self.a1,
            &mut self.a0,
            &mut self.s,
            &mut self.sigma,
            &mut self.sig_d,
            &mut self.sig_v,
            &mut self.root,
            &mut self.inv_x,
        ] {
            v.clear();
            v.resize(len, 0.0);
        }
        if let Problem::Pn(p) = &fp.problem {
            let (n, k) = (p.n as f64, p.k as f64);
            let c = binomial(p.n as usize, p.k as usize) / n;
            for (i, &x) in grid.nodes().iter().enumerate() {
                self.a2[i] = 1.0;
                self.a1[i] = (n + 1.0 - 2.0 * k) / x;
                self.a0[i] = -k * (n - k) / (x * x);
                self.sig_d[i] = c * x.powf(1.0 - k);
                self.sig_v[i] = c * (n - k) * x.powf(-k);
                self.inv_x[i] = 1.0 / x;
            }
        }
        if let Problem::Xmn(p) = &fp.problem {
            for (i, &x) in grid.nodes().iter().enumerate() {
                self.sig_d[i] = 1.0 / (1.0 + x);
                self.sig_v[i] = if p.m > 0 && x > 0.0 { 1.0 / x } else { 0.0 };
            }
            self.xmn = Some(XmnSigma::new(p.m, p.n, p.k));
        }
        self.prepared = Some(key);
    }

    /// `W·[…]` applied to `u` at interior node `i`.
    #[inline]
    pub fn apply(&self, u: &[f64], i: usize, h: f64) -> f64 {
        self.apply_scaled(u, i, 1.0 / (h * h), 0.5 / h)
    }

    #[inline(always)]
    pub(crate) fn apply_scaled(&self, u: &[f64], i: usize, inv_h2: f64, inv_2h: f64) -> f64 {
        let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        let d1 = (u[i + 1] - u[i - 1]) * inv_2h;
        self.w[i] * (self.a2[i] * d2 + self.a1[i] * d1 + self.a0[i] * u[i] + self.s[i])
    }

    /// Stability limit of one explicit Euler step, before the safety factor.
    pub fn explicit_dt(&self) -> f64 {
        if self.max_rate > 0.0 {
            1.0 / self.max_rate
        } else {
            f64::INFINITY
        }
    }
}

/// Group sizes for σ_k of `(p × n, q × m, r)` on `X_{m,n}`.
#[derive(Clone, Debug)]
pub(crate) struct XmnSigma {
    m: usize,
    n: usize,
    k: usize,
}

/// Largest `k` handled without allocating.
const STACK_K: usize = 7;

/// Adds `times` copies of `v` to the elementary symmetric sums `e[0..]`.
#[inline(always)]
fn push(e: &mut [f64], v: f64, times: usize) {
    for _ in 0..times {
        for j in (1..e.len()).rev() {
            e[j] += v * e[j - 1];
        }
    }
}

impl XmnSigma {
    pub(crate) fn new(m: u32, n: u32, k: u32) -> Self {
        Self { m: m as usize, n: n as usize, k: k as usize }
    }

    /// `(σ_k, ∂σ/∂p, ∂σ/∂q, ∂σ/∂r)` with `p` repeated `n` times and `q` repeated `m` times.
    #[inline]
    pub(crate) fn with_partials(&self, p: f64, q: f64, r: f64) -> (f64, f64, f64, f64) {
        let (m, n) = (self.m as f64, self.n as f64);
        match self.k {
            1 => return (n * p + m * q + r, n, m, 1.0),
            2 => {
                let s1 = n * p + m * q;
                let s2 = 0.5 * (n * (n - 1.0) * p * p + m * (m - 1.0) * q * q) + n * m * p * q;
                return (s2 + r * s1, n * ((n - 1.0) * p + m * q + r), m * ((m - 1.0) * q + n * p + r), s1);
            }
            _ => {}
        }
        if self.k <= STACK_K {
            let mut buf = [0.0; 3 * (STACK_K + 1)];
            self.partials_in(p, q, r, &mut buf[..3 * (self.k + 1)])
        } else {
            self.partials_in(p, q, r, &mut vec![0.0; 3 * (self.k + 1)])
        }
    }

    #[inline(always)]
    fn partials_in(&self, p: f64, q: f64, r: f64, buf: &mut [f64]) -> (f64, f64, f64, f64) {
        let (m, n, k) = (self.m, self.n, self.k);
        let (t, rest) = buf.split_at_mut(k + 1);
        let (ep, eq) = rest.split_at_mut(k + 1);
        // common part: p × (n−1), q × (m−1)
        t[0] = 1.0;
        push(t, p, n.saturating_sub(1));
        push(t, q, m.saturating_sub(1));
        ep.copy_from_slice(t);
        eq.copy_from_slice(t);
        if m > 0 {
            push(ep, q, 1);
            push(t, q, 1);
        }
        if n > 0 {
            push(eq, p, 1);
            push(t, p, 1);
        }
        let with_r = |e: &[f64], j: usize| if j == 0 { e[0] } else { e[j] + r * e[j - 1] };
        let s = with_r(t, k);
        let sr = t[k - 1];
        let sp = if n > 0 { n as f64 * with_r(ep, k - 1) } else { 0.0 };
        let sq = if m > 0 { m as f64 * with_r(eq, k - 1) } else { 0.0 };
        (s, sp, sq, sr)
    }

    pub(crate) fn sigma(&self, p: f64, q: f64, r: f64) -> f64 {
        self.with_partials(p, q, r).0
    }
}

/// Fills `w` and `sigma` on `ℙⁿ#ℙ̄ⁿ` and returns the largest rate. A
/// nonzero `K` fixes `k` at compile time.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn pn_pass<const K: u32>(
    fp: &FlowProblem,
    n: u32,
    k: u32,
    u: &[f64],
    c: &mut Coefficients,
    inv2h: f64,
    inv_h2: f64,
    q: impl Fn(f64) -> f64,
) -> Result<f64> {
    let len = u.len();
    let plain = matches!(fp.flux, FluxFunction::NegIdentity);
    let k = if K > 0 { K as i32 } else { k as i32 };
    let cn1 = binomial(n as usize - 1, k as usize - 1);
    let (w, sigma, root) = (&mut c.w[..len], &mut c.sigma[..len], &mut c.root[..len]);
    let (sd, sv, a0, inv_x) = (&c.sig_d[..len], &c.sig_v[..len], &c.a0[..len], &c.inv_x[..len]);
    let mut max_rate = 0.0f64;
    for i in 1..len - 1 {
        let g = u[i];
        let s = sd[i] * (u[i + 1] - u[i - 1]) * inv2h + sv[i] * g;
        let mut wi = if k == 1 {
            q(g)
        } else {
            let f = if k == 2 { g.sqrt() } else { kth_root(g, k, root[i]) };
            root[i] = f;
            q(f) * cn1 * pow_small(f * inv_x[i], k - 1)
        };
        if !plain {
            wi *= flux_weight(fp, s)?;
        }
        w[i] = wi;
        sigma[i] = s;
        max_rate = max_rate.max(wi * (2.0 * inv_h2 - a0[i]));
    }
    Ok(max_rate)
}

/// `g^{1/k}` for `k ≥ 3` by Halley's method from `guess`; falls back to
/// `powf` when the guess is poor. Convergence is cubic, so a relative
/// change below `1e−6` leaves an error far below rounding.
#[inline(always)]
fn kth_root(g: f64, k: i32, guess: f64) -> f64 {
    if !(g > 0.0) {
        return 0.0;
    }
    if guess > 0.0 {
        let (km, kp) = ((k - 1) as f64, (k + 1) as f64);
        let mut f = guess;
        for _ in 0..4 {
            let fk = pow_small(f, k);
            let next = f * (km * fk + kp * g) / (kp * fk + km * g);
            let done = (next - f).abs() <= 1e-6 * next;
            f = next;
            if done {
                return f;
            }
        }
    }
    g.powf(1.0 / k as f64)
}

/// `v^e` for small non-negative `e` by repeated multiplication.
#[inline(always)]
fn pow_small(v: f64, e: i32) -> f64 {
    match e {
        0 => 1.0,
        1 => v,
        2 => v * v,
        3 => v * v * v,
        4 => (v * v) * (v * v),
        _ => v.powi(e),
    }
}

/// `−F′(σ)`, which must be positive.
fn flux_weight(fp: &FlowProblem, sigma: f64) -> Result<f64> {
    let w = fp.flux.neg_derivative(sigma);
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Integrity(format!(
            "−F′(σ) = {w} at σ = {sigma} is not positive"
        )));
    }
    Ok(w)
}

/// Fills `c` for the state `u` (in the evolution variable).
pub fn coefficients(fp: &FlowProblem, grid: &Grid, u: &[f64], c: &mut Coefficients) -> Result<()> {
    c.prepare(fp, grid);
    let len = u.len();
    let h = grid.spacing();
    let (inv2h, inv_h2) = (0.5 / h, 1.0 / (h * h));
    let x = grid.nodes();
    let plain = matches!(fp.flux, FluxFunction::NegIdentity);
    let mut max_rate = 0.0f64;
    match &fp.problem {
        Problem::Pn(p) if p.k == 1 && plain && matches!(fp.potential, Potential::Logistic(_)) => {
            // hot path of the J-flow: W = Q(f) in closed form
            let Potential::Logistic(prof) = &fp.potential else { unreachable!() };
            let (lo, hi, inv) = (prof.lo, prof.hi, 1.0 / (prof.hi - prof.lo));
            let (w, sigma) = (&mut c.w[..len], &mut c.sigma[..len]);
            let (sd, sv, a0) = (&c.sig_d[..len], &c.sig_v[..len], &c.a0[..len]);
            for i in 1..len - 1 {
                let g = u[i];
                let q = ((g - lo) * (hi - g) * inv).max(0.0);
                w[i] = q;
                sigma[i] = sd[i] * (u[i + 1] - u[i - 1]) * inv2h + sv[i] * g;
                max_rate = max_rate.max(q * (2.0 * inv_h2 - a0[i]));
            }
        }
        Problem::Pn(p) => {
            max_rate = match &fp.potential {
                Potential::Logistic(prof) if plain => {
                    let (lo, hi, inv) = (prof.lo, prof.hi, 1.0 / (prof.hi - prof.lo));
                    let q = |f: f64| ((f - lo) * (hi - f) * inv).max(0.0);
                    match p.k {
                        1 => pn_pass::<1>(fp, p.n, p.k, u, c, inv2h, inv_h2, q)?,
                        2 => pn_pass::<2>(fp, p.n, p.k, u, c, inv2h, inv_h2, q)?,
                        3 => pn_pass::<3>(fp, p.n, p.k, u, c, inv2h, inv_h2, q)?,
                        4 => pn_pass::<4>(fp, p.n, p.k, u, c, inv2h, inv_h2, q)?,
                        _ => pn_pass::<0>(fp, p.n, p.k, u, c, inv2h, inv_h2, q)?,
                    }
                }
                pot => pn_pass::<0>(fp, p.n, p.k, u, c, inv2h, inv_h2, |f| pot.q_clamped(f))?,
            };
        }
        Problem::Xmn(_) => {
            let Coefficients { w, a2, a1, a0, s, sigma, sig_d, sig_v, xmn, .. } = c;
            let sig = xmn.as_ref().expect("prepared for X_{m,n}");
            for i in 1..len - 1 {
                let (xi, f) = (x[i], u[i]);
                let fp_ = (u[i + 1] - u[i - 1]) * inv2h;
                let (ip, iq) = (sig_d[i], sig_v[i]);
                let (sk, sp, sq, sr) = sig.with_partials((1.0 + f) * ip, f / xi, fp_);
                let mut wi = fp.potential.q_clamped(f);
                if !plain {
                    wi *= flux_weight(fp, sk)?;
                }
                w[i] = wi;
                a2[i] = sr;
                a1[i] = sp * ip + sq * iq;
                a0[i] = -(sp * ip * ip + sq * iq * iq);
                s[i] = -sp * ip * ip;
                sigma[i] = sk;
                max_rate = max_rate.max(wi * (2.0 * sr * inv_h2 + a0[i].abs()));
            }
        }
    }
    c.max_rate = max_rate;
    Ok(())
}

/// Evaluates the right-hand side; endpoints are zero.
pub fn rhs(fp: &FlowProblem, state: &FlowState) -> Result<Vec<f64>> {
    let mut c = Coefficients::default();
    coefficients(fp, &state.grid, &state.u, &mut c)?;
    let h = state.grid.spacing();
    let mut out = vec![0.0; state.u.len()];
    for (i, o) in out.iter_mut().enumerate().take(state.u.len() - 1).skip(1) {
        *o = c.apply(&state.u, i, h);
    }
    Ok(out)
}

/// J-flow (`k = 1` on `ℙⁿ#ℙ̄ⁿ`):
/// `−F′·Q(f)·[f″ + (n−1)f′/x − (n−1)f/x²]`.
pub fn rhs_jflow(fp: &FlowProblem, state: &FlowState) -> Result<Vec<f64>> {
    match &fp.problem {
        Problem::Pn(p) if p.k == 1 && state.variable == Variable::F => {}
        _ => return Err(Error::InvalidParameter("rhs_jflow needs k = 1 on Pn".into())),
    }
    let h = state.grid.spacing();
    if let Some(w) = state.u.windows(2).find(|w| (w[1] - w[0]) / h < -1e-10) {
        return Err(Error::Integrity(format!(
            "state is not monotone: {} after {}",
            w[1], w[0]
        )));
    }
    rhs(fp, state)
}

/// General `k` on `ℙⁿ#ℙ̄ⁿ` in `g = f^k`:
/// `−F′·C(n−1,k−1)(f/x)^{k−1}Q(f)·[g″ + (n+1−2k)g′/x − k(n−k)g/x²]`.
pub fn rhs_general_k(fp: &FlowProblem, state: &FlowState) -> Result<Vec<f64>> {
    if !matches!(fp.problem, Problem::Pn(_)) || state.variable != Variable::G && fp.problem.k() > 1 {
        return Err(Error::InvalidParameter("rhs_general_k needs a Pn problem in g".into()));
    }
    if let Some(g) = state.u.iter().find(|&&g| g < 0.0) {
        return Err(Error::Integrity(format!("negative g = {g}")));
    }
    rhs(fp, state)
}

/// `X_{m,n}`: `−F′·Q(f)·∂_x σ_k((1+f)/(1+x) ×n, f/x ×m, f′)`.
pub fn rhs_xmn(fp: &FlowProblem, state: &FlowState) -> Result<Vec<f64>> {
    if !matches!(fp.problem, Problem::Xmn(_)) {
        return Err(Error::InvalidParameter("rhs_xmn needs an Xmn problem".into()));
    }
    if let Some(f) = state.u.iter().find(|&&f| f < -1e-12) {
        return Err(Error::Integrity(format!("negative f = {f}")));
    }
    rhs(fp, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::{grouped_sigma, grouped_sigma_partial};

    #[test]
    fn xmn_sigma_matches_grouped() {
        for &(m, n, k) in &[(0u32, 1u32, 1u32), (2, 3, 2), (1, 2, 4), (3, 1, 5), (2, 2, 1)] {
            let s = XmnSigma::new(m, n, k);
            let (p, q, r) = (0.7, 1.3, 0.4);
            let groups = [(p, n as usize), (q, m as usize), (r, 1)];
            let (v, sp, sq, sr) = s.with_partials(p, q, r);
            let k = k as usize;
            assert!((v - grouped_sigma(&groups, k)).abs() < 1e-12);
            assert!((sp - grouped_sigma_partial(&groups, k, 0)).abs() < 1e-12);
            assert!((sq - grouped_sigma_partial(&groups, k, 1)).abs() < 1e-12);
            assert!((sr - grouped_sigma_partial(&groups, k, 2)).abs() < 1e-12);
        }
    }
}
