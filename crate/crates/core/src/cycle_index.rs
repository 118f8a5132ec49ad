//! Restricted cycle index sums evaluated at real power-sum arguments.
//!
//! For power sums `p = (p_1, p_2, ...)` the cycle index sum over the symmetric
//! group `S_k` is the complete homogeneous function
//!
//! ```text
//! h_k(p) = (1/k!) Σ_{σ ∈ S_k} p_1^{σ_1} ··· p_k^{σ_k},   k·h_k = Σ_{i=1..k} p_i·h_{k-i}
//! ```
//!
//! and `Z_Ω(p) = Σ_{k ∈ Ω} h_k(p)`. The fixpoint-free part
//! `D_m(p) = h_m(0, p_2, p_3, ...)` splits `h_k = Σ_j p_1^j/j! · D_{k-j}`.
//!
//! Degree sets with a tail `{k ≥ K}` are handled through the closed form
//! `Σ_{k ≥ 0} h_k = exp(Σ_i p_i/i)` minus finitely many corrections.

use crate::degree::DegreeSet;
use crate::error::{PolyaError, Result};

/// Threshold below which `p_i / i` is treated as negligible when choosing the
/// default truncation index.
pub const NEGLIGIBLE_TERM: f64 = 1e-18;
/// Cap on the automatically chosen truncation index.
pub const AUTO_INDEX_CAP: usize = 64;

/// Power sums `p_1..p_I` with memoized `h_k` and `D_m` for `k, m <= I`.
///
/// The table is immutable once built, so shared references can be read from
/// any number of threads.
#[derive(Debug, Clone)]
pub struct PowerSumTable {
    values: Vec<f64>,
    tail_bound: f64,
    h: Vec<f64>,
    d: Vec<f64>,
}

impl PowerSumTable {
    /// `values[i-1] = p_i`. `tail_bound` bounds `Σ_{i > I} p_i / i`.
    pub fn new(values: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PolyaError::Divergent(
                "power sums must be finite and nonnegative".into(),
            ));
        }
        if !(tail_bound >= 0.0) {
            return Err(PolyaError::Divergent(format!("tail bound {tail_bound}")));
        }
        let len = values.len();
        let mut h = vec![0.0; len + 1];
        let mut d = vec![0.0; len + 1];
        h[0] = 1.0;
        d[0] = 1.0;
        for k in 1..=len {
            let mut acc_h = 0.0;
            let mut acc_d = 0.0;
            for i in 1..=k {
                acc_h += values[i - 1] * h[k - i];
                if i >= 2 {
                    acc_d += values[i - 1] * d[k - i];
                }
            }
            h[k] = acc_h / k as f64;
            d[k] = acc_d / k as f64;
        }
        Ok(Self {
            values,
            tail_bound,
            h,
            d,
        })
    }

    /// Tabulates `p_i = f(i)`.
    ///
    /// The truncation index is the smallest `i` with `p_i / i < 1e-18`
    /// (capped at 64) but at least `min_len`. When `domination = (c, r)` with
    /// `p_i <= c·r^i` for all `i` and `r < 1`, the tail bound is the geometric
    /// remainder; otherwise the entries past the table are taken to be zero.
    pub fn from_fn(
        f: impl Fn(usize) -> f64,
        min_len: usize,
        domination: Option<(f64, f64)>,
    ) -> Result<Self> {
        let mut values = Vec::new();
        let mut i = 1;
        loop {
            let v = f(i);
            values.push(v);
            let auto_done = v / (i as f64) < NEGLIGIBLE_TERM || i >= AUTO_INDEX_CAP;
            if auto_done && i >= min_len {
                break;
            }
            i += 1;
        }
        let tail_bound = match domination {
            Some((scale, ratio)) => {
                if !(ratio < 1.0) {
                    return Err(PolyaError::Divergent(format!(
                        "geometric ratio {ratio} is not below 1"
                    )));
                }
                let next = values.len() + 1;
                scale * ratio.powi(next as i32) / (next as f64 * (1.0 - ratio))
            }
            None => 0.0,
        };
        Self::new(values, tail_bound)
    }

    /// Same table with `p_1` replaced.
    pub fn with_first(&self, p1: f64) -> Result<Self> {
        let mut values = self.values.clone();
        if values.is_empty() {
            values.push(p1);
        } else {
            values[0] = p1;
        }
        Self::new(values, self.tail_bound)
    }

    /// Truncation index `I`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `p_i`, 1-based; zero past the table.
    pub fn p(&self, i: usize) -> f64 {
        self.values.get(i.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn h(&self, k: usize) -> Result<f64> {
        self.h.get(k).copied().ok_or(PolyaError::TruncationTooShort {
            requested: k,
            available: self.len(),
        })
    }

    pub fn d(&self, m: usize) -> Result<f64> {
        self.d.get(m).copied().ok_or(PolyaError::TruncationTooShort {
            requested: m,
            available: self.len(),
        })
    }

    /// `Σ_{i ≥ from} p_i / i` over the table.
    fn log_sum_from(&self, from: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .skip(from - 1)
            .map(|(idx, v)| v / (idx + 1) as f64)
            .sum()
    }
}

/// `h_k(p)`.
pub fn complete_homogeneous(p: &PowerSumTable, k: usize) -> Result<f64> {
    p.h(k)
}

/// `D_m(p)`, the weight of fixpoint-free permutations of order `m`.
pub fn fixpoint_free_weight(p: &PowerSumTable, m: usize) -> Result<f64> {
    p.d(m)
}

/// A value together with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    pub tail_certificate: f64,
}

/// Which family of weights a shifted sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weights {
    /// `h_m`, all permutations.
    Homogeneous,
    /// `D_m`, fixpoint-free permutations.
    FixpointFree,
}

fn shifted_sum(omega: &DegreeSet, p: &PowerSumTable, shift: usize, w: Weights) -> Result<Certified> {
    let weight = |m: usize| match w {
        Weights::Homogeneous => p.h(m),
        Weights::FixpointFree => p.d(m),
    };
    match omega.tail_from() {
        None => {
            let mut value = 0.0;
            for &k in omega.explicit().iter().filter(|&&k| k >= shift) {
                value += weight(k - shift)?;
            }
            Ok(Certified {
                value,
                tail_certificate: 0.0,
            })
        }
        Some(tail) => {
            if !p.tail_bound().is_finite() {
                return Err(PolyaError::Divergent("infinite tail bound".into()));
            }
            let log_sum = match w {
                Weights::Homogeneous => p.log_sum_from(1),
                Weights::FixpointFree => p.log_sum_from(2),
            };
            let total = log_sum.exp();
            let mut value = total;
            // complement of {m : m + shift ∈ Ω} is finite and lies below `tail - shift`
            for m in 0..tail.saturating_sub(shift) {
                if !omega.contains(m + shift) {
                    value -= weight(m)?;
                }
            }
            Ok(Certified {
                value,
                tail_certificate: total * p.tail_bound().exp_m1(),
            })
        }
    }
}

/// `Σ_{m ≥ 0, m + shift ∈ Ω} h_m(p)`.
pub fn shifted_homogeneous_sum(omega: &DegreeSet, p: &PowerSumTable, shift: usize) -> Result<Certified> {
    shifted_sum(omega, p, shift, Weights::Homogeneous)
}

/// `Σ_{m ≥ 0, m + shift ∈ Ω} D_m(p)`.
pub fn shifted_fixpoint_free_sum(
    omega: &DegreeSet,
    p: &PowerSumTable,
    shift: usize,
) -> Result<Certified> {
    shifted_sum(omega, p, shift, Weights::FixpointFree)
}

/// `Z_Ω(p)` with a bound on the truncation error.
pub fn cycle_index_eval(omega: &DegreeSet, p: &PowerSumTable) -> Result<Certified> {
    shifted_homogeneous_sum(omega, p, 0)
}

/// Mixed partial derivative `∂^r Z_Ω / ∂s_{a_1} ··· ∂s_{a_r}`.
///
/// Uses `∂h_k/∂p_i = h_{k-i}/i`, so the result is
/// `(Π 1/a_j) · Σ_{k ∈ Ω} h_{k - Σ a_j}`.
pub fn cycle_index_derivative(omega: &DegreeSet, p: &PowerSumTable, axes: &[usize]) -> Result<f64> {
    if axes.contains(&0) {
        return Err(PolyaError::InvalidConfig("axes are 1-based".into()));
    }
    let shift: usize = axes.iter().sum();
    let denom: f64 = axes.iter().map(|&a| a as f64).product();
    Ok(shifted_homogeneous_sum(omega, p, shift)?.value / denom)
}

/// `∂Z_Ω/∂s_axis` (order 1) or `∂²Z_Ω/∂s_axis²` (order 2).
pub fn cycle_index_partial(omega: &DegreeSet, p: &PowerSumTable, axis: usize, order: usize) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(PolyaError::InvalidConfig(format!("order {order} not in 1..=2")));
    }
    cycle_index_derivative(omega, p, &vec![axis; order])
}
