//! Truncated power series with arbitrary-precision nonnegative coefficients.

use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// `Σ_{n=0..=N} c_n z^n` with `N` fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSeries {
    coeffs: Vec<BigUint>,
}

impl ExactSeries {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![BigUint::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = BigUint::from(1u32);
        s
    }

    /// Pads or truncates `coeffs` to the requested order.
    pub fn from_coeffs(mut coeffs: Vec<BigUint>, order: usize) -> Self {
        coeffs.resize(order + 1, BigUint::zero());
        Self { coeffs }
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &BigUint {
        &self.coeffs[n]
    }

    pub fn into_coeffs(self) -> Vec<BigUint> {
        self.coeffs
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// `f(z^k)`, truncated at the same order.
    pub fn compose_pow(&self, k: usize) -> Self {
        assert!(k >= 1, "compose_pow needs k >= 1");
        let order = self.truncation_order();
        let mut out = Self::zero(order);
        for (n, c) in self.coeffs.iter().enumerate() {
            let m = n * k;
            if m > order {
                break;
            }
            out.coeffs[m] = c.clone();
        }
        out
    }

    /// Multiplies every coefficient by `k`.
    pub fn scale(&self, k: u64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Divides every coefficient by `k`; panics if some coefficient is not a
    /// multiple of `k`.
    pub fn div_exact(&self, k: u64) -> Self {
        let k = BigUint::from(k);
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| {
                    let q = c / &k;
                    assert!(&q * &k == *c, "inexact division by {k}");
                    q
                })
                .collect(),
        }
    }

    /// `z · f(z)`.
    pub fn shift_up(&self) -> Self {
        let order = self.truncation_order();
        let mut out = Self::zero(order);
        out.coeffs[1..].clone_from_slice(&self.coeffs[..order]);
        out
    }

    /// `exp(g)` where `g` has zero constant term and is described by its
    /// weighted coefficients `w_n = n·[z^n] g`, which must be integers.
    ///
    /// Solves `n·e_n = Σ_{j=1..n} w_j · e_{n-j}`; each division is exact when
    /// `exp(g)` has integer coefficients.
    pub fn exp_from_weighted(weighted: &Self) -> Self {
        let order = weighted.truncation_order();
        let mut out = Self::one(order);
        for n in 1..=order {
            let mut acc = BigUint::zero();
            for j in 1..=n {
                if !weighted.coeffs[j].is_zero() && !out.coeffs[n - j].is_zero() {
                    acc += &weighted.coeffs[j] * &out.coeffs[n - j];
                }
            }
            let q = &acc / n as u64;
            debug_assert!(&q * n as u64 == acc);
            out.coeffs[n] = q;
        }
        out
    }

    /// Coefficients as `f64` (may overflow to infinity past ~1e308).
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY))
            .collect()
    }
}

impl Add for &ExactSeries {
    type Output = ExactSeries;

    fn add(self, rhs: &ExactSeries) -> ExactSeries {
        assert_eq!(self.truncation_order(), rhs.truncation_order());
        ExactSeries {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Mul for &ExactSeries {
    type Output = ExactSeries;

    /// Schoolbook product truncated at the common order.
    fn mul(self, rhs: &ExactSeries) -> ExactSeries {
        assert_eq!(self.truncation_order(), rhs.truncation_order());
        let order = self.truncation_order();
        let mut out = ExactSeries::zero(order);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs[..=order - i].iter().enumerate() {
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }
}
