//! Elementary symmetric polynomials of eigenvalue tuples with repeated entries.
//!
//! The reduced flows only ever see tuples made of a few distinct values, each
//! repeated a fixed number of times, so the tuple is stored as `(value,
//! multiplicity)` groups and `σ_k` is assembled group by group.

/// Binomial coefficient as `f64`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `σ_k` of a plain list of values.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    if k > values.len() {
        return 0.0;
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in values {
        for j in (1..=k).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// All `σ_0..=σ_k` of a grouped tuple.
pub fn grouped_sigmas(groups: &[(f64, usize)], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &(v, mult) in groups {
        if mult == 0 {
            continue;
        }
        let mut next = vec![0.0; k + 1];
        for (j, slot) in next.iter_mut().enumerate() {
            let mut pow = 1.0;
            for i in 0..=mult.min(j) {
                *slot += binomial(mult, i) * pow * e[j - i];
                pow *= v;
            }
        }
        e = next;
    }
    e
}

/// `σ_k` of a grouped tuple.
pub fn grouped_sigma(groups: &[(f64, usize)], k: usize) -> f64 {
    grouped_sigmas(groups, k)[k]
}

/// Partial derivative of `σ_k` with respect to the value of group `which`
/// (all copies move together): `mult · σ_{k-1}` of the tuple with one copy removed.
pub fn grouped_sigma_partial(groups: &[(f64, usize)], k: usize, which: usize) -> f64 {
    if k == 0 || groups[which].1 == 0 {
        return 0.0;
    }
    let mult = groups[which].1;
    let mut reduced = groups.to_vec();
    reduced[which].1 -= 1;
    mult as f64 * grouped_sigma(&reduced, k - 1)
}
