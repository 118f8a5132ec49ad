//! Exact counting of Pólya trees with restricted outdegrees, plus a
//! brute-force isomorphism-class enumerator used as an independent oracle.
//!
//! The counts satisfy `A(z) = z·Z_Ω(A(z), A(z²), A(z³), ...)`. Coefficients are
//! produced one at a time: `a_n = [z^{n-1}] Σ_{k∈Ω} h_k` where the `h_k` are
//! kept as exact series and only need `a_m` for `m < n`.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::degree::DegreeSet;
use crate::error::{PolyaError, Result};
use crate::series::ExactSeries;

pub const DEFAULT_ORDER: usize = 400;
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// `a_0..a_N`, the number of Pólya trees with `n` vertices and outdegrees in Ω.
#[derive(Debug, Clone)]
pub struct CountTable {
    omega: DegreeSet,
    counts: ExactSeries,
}

impl CountTable {
    pub fn omega(&self) -> &DegreeSet {
        &self.omega
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.counts.truncation_order()
    }

    pub fn get(&self, n: usize) -> &BigUint {
        self.counts.coeff(n)
    }

    pub fn series(&self) -> &ExactSeries {
        &self.counts
    }

    /// `ln a_n`, or `-inf` for `a_n = 0`. Exact to double rounding for any size.
    pub fn ln_count(&self, n: usize) -> f64 {
        ln_big(self.get(n))
    }

    /// `a_n` as `f64`; infinity if it does not fit.
    pub fn count_f64(&self, n: usize) -> f64 {
        self.get(n).to_f64().unwrap_or(f64::INFINITY)
    }

    /// Sizes `n <= N` with `a_n > 0`.
    pub fn admissible_sizes(&self) -> Vec<usize> {
        (0..=self.order()).filter(|&n| !self.get(n).is_zero()).collect()
    }

    pub fn is_admissible(&self, n: usize) -> bool {
        n <= self.order() && !self.get(n).is_zero()
    }
}

pub(crate) fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact coefficients `a_0..a_N`.
pub fn count_coefficients(omega: &DegreeSet, order: usize) -> CountTable {
    let n_max = order.max(1);
    // h_k series are needed for k in Ω (finite case) or for the finitely many
    // k below the tail that must be subtracted from the exponential.
    let h_count = omega.boundary();
    let mut a = vec![BigUint::zero(); n_max + 1];
    // h[k][m] = [z^m] h_k(A(z), A(z²), ...), m < n_max
    let mut h: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); n_max]; h_count];
    // exponential route for the tail: g = exp(Σ_i A(z^i)/i), weighted[j] = Σ_{d|j} d·a_d
    let mut g = vec![BigUint::zero(); n_max];
    let mut weighted = vec![BigUint::zero(); n_max];

    for n in 1..=n_max {
        let m = n - 1;
        if h_count > 0 {
            h[0][m] = if m == 0 { BigUint::from(1u32) } else { BigUint::zero() };
        }
        for k in 1..h_count.min(m + 1) {
            let mut acc = BigUint::zero();
            for i in 1..=k {
                // [z^j] A(z^i) = a_{j/i} when i | j
                let mut j = i;
                while j <= m {
                    let coeff = &a[j / i];
                    let other = &h[k - i][m - j];
                    if !coeff.is_zero() && !other.is_zero() {
                        acc += coeff * other;
                    }
                    j += i;
                }
            }
            let q = &acc / k as u64;
            debug_assert!(&q * k as u64 == acc);
            h[k][m] = q;
        }
        if let Some(tail) = omega.tail_from() {
            if m == 0 {
                g[0] = BigUint::from(1u32);
            } else {
                let mut w = BigUint::zero();
                for d in (1..=m).filter(|d| m % d == 0) {
                    if !a[d].is_zero() {
                        w += &a[d] * d as u64;
                    }
                }
                weighted[m] = w;
                let mut acc = BigUint::zero();
                for j in 1..=m {
                    if !weighted[j].is_zero() && !g[m - j].is_zero() {
                        acc += &weighted[j] * &g[m - j];
                    }
                }
                let q = &acc / m as u64;
                debug_assert!(&q * m as u64 == acc);
                g[m] = q;
            }
            let mut value = g[m].clone();
            for k in (0..tail.min(m + 1)).filter(|&k| !omega.contains(k)) {
                value -= &h[k][m];
            }
            a[n] = value;
        } else {
            let mut value = BigUint::zero();
            for &k in omega.explicit().iter().filter(|&&k| k <= m) {
                value += &h[k][m];
            }
            a[n] = value;
        }
    }
    a.truncate(order + 1);
    CountTable {
        omega: omega.clone(),
        counts: ExactSeries::from_coeffs(a, order),
    }
}

/// `z·Z_Ω(f(z), f(z²), f(z³), ...)` for a series `f` with `f(0) = 0`, computed
/// with whole-series arithmetic. A series is a count table for Ω exactly
/// when it is a fixed point of this map.
pub fn functional_equation_rhs(omega: &DegreeSet, f: &ExactSeries) -> ExactSeries {
    let order = f.truncation_order();
    assert!(f.coeff(0).is_zero(), "series must vanish at 0");
    let powers: Vec<ExactSeries> = (1..=order).map(|i| f.compose_pow(i)).collect();
    let h_count = omega.boundary().min(order + 1);
    let mut h: Vec<ExactSeries> = vec![ExactSeries::one(order)];
    for k in 1..h_count {
        let mut acc = ExactSeries::zero(order);
        for i in 1..=k {
            acc = &acc + &(&powers[i - 1] * &h[k - i]);
        }
        h.push(acc.div_exact(k as u64));
    }
    let total = match omega.tail_from() {
        None => omega
            .explicit()
            .iter()
            .filter(|&&k| k < h_count)
            .fold(ExactSeries::zero(order), |acc, &k| &acc + &h[k]),
        Some(tail) => {
            // n·[z^n] Σ_i f(z^i)/i = Σ_{d | n} d·f_d
            let weighted: Vec<BigUint> = (0..=order)
                .map(|n| {
                    (1..=n)
                        .filter(|d| n % d == 0)
                        .fold(BigUint::zero(), |acc, d| acc + f.coeff(d) * d as u64)
                })
                .collect();
            let mut total =
                ExactSeries::exp_from_weighted(&ExactSeries::from_coeffs(weighted, order));
            for k in (0..tail.min(h_count)).filter(|&k| !omega.contains(k)) {
                let coeffs = total
                    .coeffs()
                    .iter()
                    .zip(h[k].coeffs())
                    .map(|(t, s)| t - s)
                    .collect();
                total = ExactSeries::from_coeffs(coeffs, order);
            }
            total
        }
    };
    total.shift_up()
}

/// Sizes `n <= N` for which trees exist.
pub fn admissible_sizes(counts: &CountTable) -> Vec<usize> {
    counts.admissible_sizes()
}

/// Canonical encoding of an unlabeled rooted tree: `(` + sorted child
/// encodings + `)`. Two rooted trees are isomorphic iff their encodings agree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalTree {
    pub encoding: String,
    pub size: usize,
}

impl CanonicalTree {
    /// Encodes a tree given as a parent array in which every parent index is
    /// smaller than its child's index; `parents[0]` is the root.
    pub fn from_parents(parents: &[Option<usize>]) -> Self {
        let n = parents.len();
        let mut children: Vec<Vec<String>> = vec![Vec::new(); n];
        let mut root_code = String::new();
        for v in (0..n).rev() {
            let mut kids = std::mem::take(&mut children[v]);
            kids.sort_unstable();
            let mut code = String::with_capacity(2 + kids.iter().map(String::len).sum::<usize>());
            code.push('(');
            for k in &kids {
                code.push_str(k);
            }
            code.push(')');
            match parents[v] {
                Some(p) => {
                    assert!(p < v, "parent index must precede child index");
                    children[p].push(code);
                }
                None => root_code = code,
            }
        }
        Self {
            encoding: root_code,
            size: n,
        }
    }

    /// Outdegrees in preorder, read back from the encoding.
    pub fn outdegrees(&self) -> Vec<usize> {
        let bytes = self.encoding.as_bytes();
        let mut out = Vec::with_capacity(self.size);
        let mut stack: Vec<usize> = Vec::new();
        for &b in bytes {
            if b == b'(' {
                if let Some(&top) = stack.last() {
                    out[top] += 1;
                }
                out.push(0);
                stack.push(out.len() - 1);
            } else {
                stack.pop();
            }
        }
        out
    }
}

/// Every isomorphism class of rooted trees with `n` vertices and all
/// outdegrees in Ω, built as a root plus a multiset of smaller classes.
pub fn brute_force_enumerate(omega: &DegreeSet, n: usize) -> Result<BTreeSet<CanonicalTree>> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(PolyaError::SizeGuardExceeded {
            requested: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n == 0 {
        return Ok(BTreeSet::new());
    }
    // classes[s] = encodings of size-s trees
    let mut classes: Vec<Vec<String>> = vec![Vec::new(); n + 1];
    for size in 1..=n {
        // all trees of size < size, ordered by (size, index)
        let pool: Vec<(usize, &str)> = (1..size)
            .flat_map(|s| classes[s].iter().map(move |c| (s, c.as_str())))
            .collect();
        let mut found = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        collect_multisets(omega, &pool, size - 1, 0, &mut chosen, &mut found);
        classes[size] = found;
    }
    Ok(classes[n]
        .iter()
        .map(|e| CanonicalTree {
            encoding: e.clone(),
            size: n,
        })
        .collect())
}

fn collect_multisets(
    omega: &DegreeSet,
    pool: &[(usize, &str)],
    remaining: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<String>,
) {
    if remaining == 0 {
        if omega.contains(chosen.len()) {
            let mut kids: Vec<&str> = chosen.iter().map(|&i| pool[i].1).collect();
            kids.sort_unstable();
            let mut code = String::from("(");
            for k in kids {
                code.push_str(k);
            }
            code.push(')');
            out.push(code);
        }
        return;
    }
    for idx in start..pool.len() {
        let (size, _) = pool[idx];
        if size > remaining {
            break;
        }
        chosen.push(idx);
        collect_multisets(omega, pool, remaining - size, idx, chosen, out);
        chosen.pop();
    }
}

/// Canonical class frequencies of a batch of trees.
pub fn class_histogram<'a>(trees: impl IntoIterator<Item = &'a CanonicalTree>) -> HashMap<String, u64> {
    let mut hist = HashMap::new();
    for t in trees {
        *hist.entry(t.encoding.clone()).or_insert(0) += 1;
    }
    hist
}
