//! Numeric evaluation of the counting series and location of its dominant
//! singularity.
//!
//! Near the singularity the series converges like `n^{-3/2}`, so `A(ρ)` is
//! never summed directly. Instead the pair `(ρ, A(ρ))` is the solution of
//!
//! ```text
//! w = E(z, w),    E_w(z, w) = 1,    E(z, w) = z·Z_Ω(w, A(z²), A(z³), ...)
//! ```
//!
//! which only needs `A` at `z^i, i >= 2`, well inside the disk of convergence.

use serde::Serialize;

use crate::cycle_index::{shifted_homogeneous_sum, PowerSumTable};
use crate::degree::DegreeSet;
use crate::enumerate::CountTable;
use crate::error::{PolyaError, Result};

/// Default relative distance from the singularity below which series
/// evaluation is refused.
pub const DEFAULT_SINGULARITY_MARGIN: f64 = 1e-3;
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
/// Power sums below this size are dropped when tabulating `A(ρ^i)`.
const NEGLIGIBLE_POWER: f64 = 1e-18;
const MAX_TABLE_LEN: usize = 512;

/// `A(x) = Σ a_n x^n` from a finite count table, with a certified-in-practice
/// bound on the omitted tail.
#[derive(Debug, Clone)]
pub struct GfEvaluator {
    coeffs: Vec<f64>,
    ln_coeffs: Vec<f64>,
    top: usize,
    radius: f64,
    radius_lower: f64,
}

impl GfEvaluator {
    pub fn new(counts: &CountTable) -> Result<Self> {
        let order = counts.order();
        let coeffs: Vec<f64> = (0..=order).map(|n| counts.count_f64(n)).collect();
        let ln_coeffs: Vec<f64> = (0..=order).map(|n| counts.ln_count(n)).collect();
        let top = (0..=order)
            .rev()
            .find(|&n| ln_coeffs[n].is_finite())
            .ok_or_else(|| PolyaError::BracketFailure("empty count table".into()))?;
        let radius = radius_estimate(counts)?;
        Ok(Self {
            coeffs,
            ln_coeffs,
            top,
            radius,
            radius_lower: radius * (1.0 - DEFAULT_SINGULARITY_MARGIN),
        })
    }

    /// Corrected coefficient-ratio estimate of ρ.
    pub fn radius_estimate(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn term(&self, n: usize, x: f64) -> f64 {
        let c = self.coeffs[n];
        if c == 0.0 {
            0.0
        } else if c.is_finite() {
            c * x.powi(n as i32)
        } else {
            (self.ln_coeffs[n] + n as f64 * x.ln()).exp()
        }
    }

    /// Bound on `Σ_{n > top} a_n x^n` (and its derivative) by geometric
    /// extrapolation `a_n <= a_top · ρ_lo^{-(n - top)}`.
    fn tail_bounds(&self, x: f64) -> Result<(f64, f64)> {
        let r = x / self.radius_lower;
        if r >= 1.0 {
            return Err(PolyaError::TooCloseToSingularity {
                x,
                coefficients: self.order(),
            });
        }
        let last = self.term(self.top, x);
        let n = self.top as f64;
        let value = last * r / (1.0 - r);
        let deriv = if x > 0.0 {
            last / x * (n * r / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)))
        } else {
            0.0
        };
        Ok((value, deriv))
    }

    /// `A(x)` with truncation error below `tol`.
    pub fn eval(&self, x: f64, tol: f64) -> Result<f64> {
        if x < 0.0 || !x.is_finite() {
            return Err(PolyaError::InvalidConfig(format!("argument {x} outside [0, ρ)")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let (bound, _) = self.tail_bounds(x)?;
        if bound > tol {
            return Err(PolyaError::TooCloseToSingularity {
                x,
                coefficients: self.order(),
            });
        }
        // sum smallest terms first
        Ok((1..=self.top).rev().map(|n| self.term(n, x)).sum())
    }

    /// `A'(x)` with truncation error below `tol`.
    pub fn eval_prime(&self, x: f64, tol: f64) -> Result<f64> {
        if x < 0.0 || !x.is_finite() {
            return Err(PolyaError::InvalidConfig(format!("argument {x} outside [0, ρ)")));
        }
        if x == 0.0 {
            return Ok(self.coeffs.get(1).copied().unwrap_or(0.0));
        }
        let (_, bound) = self.tail_bounds(x)?;
        if bound > tol {
            return Err(PolyaError::TooCloseToSingularity {
                x,
                coefficients: self.order(),
            });
        }
        Ok((1..=self.top)
            .rev()
            .map(|n| n as f64 * self.term(n, x) / x)
            .sum())
    }
}

/// `A(x)`; see [`GfEvaluator::eval`].
pub fn eval_a(counts: &CountTable, x: f64, tol: f64) -> Result<f64> {
    GfEvaluator::new(counts)?.eval(x, tol)
}

/// `A'(x)`; see [`GfEvaluator::eval_prime`].
pub fn eval_a_prime(counts: &CountTable, x: f64, tol: f64) -> Result<f64> {
    GfEvaluator::new(counts)?.eval_prime(x, tol)
}

/// ρ estimated from the last two admissible coefficients with the
/// `n^{-3/2}` correction: `ρ ≈ (a_n / a_{n+s})^{1/s} · (n / (n+s))^{3/(2s)}`.
pub fn radius_estimate(counts: &CountTable) -> Result<f64> {
    let sizes = counts.admissible_sizes();
    if sizes.len() < 3 {
        return Err(PolyaError::BracketFailure(
            "too few nonzero coefficients for a ratio estimate".into(),
        ));
    }
    let n2 = sizes[sizes.len() - 1];
    let n1 = sizes[sizes.len() - 2];
    let s = (n2 - n1) as f64;
    let ln_ratio = counts.ln_count(n1) - counts.ln_count(n2);
    let est = ((ln_ratio + 1.5 * ((n1 as f64).ln() - (n2 as f64).ln())) / s).exp();
    if !(est > 0.0 && est < 1.0) {
        return Err(PolyaError::BracketFailure(format!("ratio estimate {est} outside (0, 1)")));
    }
    Ok(est)
}

/// Derivatives of `E(z, w) = z·Z_Ω(w, A(z²), A(z³), ...)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EPartials {
    pub e: f64,
    pub e_w: f64,
    pub e_ww: f64,
    pub e_z: f64,
    pub e_wz: f64,
}

/// Power sums `p_1 = w, p_i = A(z^i)` long enough for every shifted sum used
/// by the solver and the laws.
fn power_sums_at(omega: &DegreeSet, eval: &GfEvaluator, z: f64, w: f64, tol: f64) -> Result<PowerSumTable> {
    let min_len = required_len(omega, z);
    let mut values = Vec::with_capacity(min_len);
    values.push(w);
    for i in 2..=min_len {
        values.push(eval.eval(z.powi(i as i32), tol)?);
    }
    // A(x) <= x·A(z)/z <= x·w'/z for x <= z, with w' a generous stand-in for A(z)
    let scale = 2.0 * w.max(1.0) / z;
    let next = min_len + 1;
    let tail = scale * z.powi(next as i32) / (next as f64 * (1.0 - z));
    PowerSumTable::new(values, tail)
}

fn required_len(omega: &DegreeSet, z: f64) -> usize {
    let geometric = (NEGLIGIBLE_POWER.ln() / z.ln()).ceil() as usize + 1;
    let structural = omega.boundary() + 3;
    geometric.max(structural).min(MAX_TABLE_LEN)
}

fn partials(omega: &DegreeSet, eval: &GfEvaluator, z: f64, w: f64, tol: f64) -> Result<EPartials> {
    let p = power_sums_at(omega, eval, z, w, tol)?;
    let shifted = |s: usize| -> Result<f64> { Ok(shifted_homogeneous_sum(omega, &p, s)?.value) };
    let z0 = shifted(0)?;
    let z1 = shifted(1)?;
    let z11 = shifted(2)?;
    // dp_i/dz = i z^{i-1} A'(z^i); ∂Z/∂s_i = shifted(i)/i
    let mut chain = 0.0;
    let mut chain_w = 0.0;
    for i in 2..=p.len() {
        let x = z.powi(i as i32);
        let d = eval.eval_prime(x, tol)?;
        chain += shifted(i)? * x * d;
        chain_w += shifted(i + 1)? * x * d;
    }
    Ok(EPartials {
        e: z * z0,
        e_w: z * z1,
        e_ww: z * z11,
        e_z: z0 + chain,
        e_wz: z1 + chain_w,
    })
}

/// Solved singular point `(ρ, A(ρ))` with the tabulated `A(ρ^i)` and
/// `A'(ρ^i)` for `i >= 2`.
#[derive(Debug, Clone, Serialize)]
pub struct SingularData {
    pub omega: DegreeSet,
    pub rho: f64,
    pub a_rho: f64,
    /// `tails[i] = A(ρ^i)` for `2 <= i < tails.len()`; entries 0 and 1 unused.
    pub tails: Vec<f64>,
    /// `d_tails[i] = A'(ρ^i)`, same indexing.
    pub d_tails: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub partials: EPartials,
}

impl SingularData {
    /// `A(ρ^j)` for any `j >= 1`. Past the table `ρ^j < 1e-18`, where
    /// `A(x) = x` to double precision.
    pub fn a_at_power(&self, j: u64) -> f64 {
        match j {
            0 => panic!("A(1) diverges"),
            1 => self.a_rho,
            j if (j as usize) < self.tails.len() => self.tails[j as usize],
            j => powu(self.rho, j),
        }
    }

    /// `A'(ρ^j)` for `j >= 2`.
    pub fn a_prime_at_power(&self, j: u64) -> f64 {
        if (j as usize) < self.d_tails.len() {
            self.d_tails[j as usize]
        } else {
            1.0
        }
    }

    /// Power sums `p_1 = A(ρ), p_i = A(ρ^i)` with at least `min_len` entries.
    pub fn power_sums(&self, min_len: usize) -> Result<PowerSumTable> {
        let len = min_len.max(self.tails.len() - 1);
        let values: Vec<f64> = (1..=len as u64).map(|j| self.a_at_power(j)).collect();
        let next = len + 1;
        let scale = 2.0 * self.a_rho.max(1.0) / self.rho;
        let tail = scale * self.rho.powi(next as i32) / (next as f64 * (1.0 - self.rho));
        PowerSumTable::new(values, tail)
    }

    /// Power sums at argument `ρ^e`: `p_i = A(ρ^{e·i})`, `len` entries.
    pub fn power_sums_at_exponent(&self, e: u64, len: usize) -> Result<PowerSumTable> {
        let values: Vec<f64> = (1..=len as u64).map(|i| self.a_at_power(e * i)).collect();
        PowerSumTable::new(values, 0.0)
    }
}

pub(crate) fn powu(x: f64, j: u64) -> f64 {
    if j <= i32::MAX as u64 {
        x.powi(j as i32)
    } else {
        0.0
    }
}

/// Solves `w = E(z, w), E_w(z, w) = 1` by damped Newton iteration.
pub fn solve_singularity(omega: &DegreeSet, counts: &CountTable, tol: f64) -> Result<SingularData> {
    let eval = GfEvaluator::new(counts)?;
    let series_tol = 1e-17;
    let z0 = eval.radius_estimate();
    let w0 = initial_w(omega, &eval, z0, series_tol)?;

    let residual_of = |z: f64, w: f64| -> Result<(f64, f64, f64, EPartials)> {
        let d = partials(omega, &eval, z, w, series_tol)?;
        let f1 = d.e - w;
        let f2 = d.e_w - 1.0;
        Ok((f1, f2, f1.hypot(f2), d))
    };

    let (mut z, mut w) = (z0, w0);
    let (mut f1, mut f2, mut res, mut d) = residual_of(z, w)?;
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < MAX_NEWTON_ITERATIONS {
        if res < tol {
            // a couple of extra steps to land on the rounding floor
            polish += 1;
            if polish > 2 {
                break;
            }
        }
        iterations += 1;
        let j11 = d.e_z;
        let j12 = d.e_w - 1.0;
        let j21 = d.e_wz;
        let j22 = d.e_ww;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dz = (f1 * j22 - f2 * j12) / det;
        let dw = (j11 * f2 - j21 * f1) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let zn = z - step * dz;
            let wn = w - step * dw;
            if zn > 0.0 && zn < 1.0 && wn > 0.0 {
                if let Ok((g1, g2, r, dn)) = residual_of(zn, wn) {
                    if r < res {
                        z = zn;
                        w = wn;
                        f1 = g1;
                        f2 = g2;
                        res = r;
                        d = dn;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(res < tol) {
        return Err(PolyaError::NoConvergence {
            iterations,
            residual: res,
            z,
            w,
        });
    }

    let len = required_len(omega, z);
    let mut tails = vec![f64::NAN; len + 1];
    let mut d_tails = vec![f64::NAN; len + 1];
    for i in 2..=len {
        let x = z.powi(i as i32);
        tails[i] = eval.eval(x, series_tol)?;
        d_tails[i] = eval.eval_prime(x, series_tol)?;
    }
    Ok(SingularData {
        omega: omega.clone(),
        rho: z,
        a_rho: w,
        tails,
        d_tails,
        residual: res,
        iterations,
        partials: d,
    })
}

/// For fixed `z`, the `w` with `E_w(z, w) = 1`; `E_w` is increasing in `w`.
fn initial_w(omega: &DegreeSet, eval: &GfEvaluator, z: f64, tol: f64) -> Result<f64> {
    let e_w = |w: f64| -> Result<f64> { Ok(partials(omega, eval, z, w, tol)?.e_w) };
    let mut hi = 1.0;
    let mut guard = 0;
    while e_w(hi)? < 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(PolyaError::BracketFailure("E_w stays below 1".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e_w(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `E` and its partials at an arbitrary point, for diagnostics and tests.
pub fn e_partials(omega: &DegreeSet, counts: &CountTable, z: f64, w: f64) -> Result<EPartials> {
    let eval = GfEvaluator::new(counts)?;
    partials(omega, &eval, z, w, 1e-17)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::count_coefficients;

    #[test]
    fn eval_small_arguments() {
        let counts = count_coefficients(&DegreeSet::naturals(), 400);
        assert_eq!(eval_a(&counts, 0.0, 1e-15).unwrap(), 0.0);
        let x = 1e-6;
        let ratio = eval_a(&counts, x, 1e-20).unwrap() / x;
        assert!((ratio - 1.0).abs() < 2e-6);
        assert_eq!(eval_a_prime(&counts, 0.0, 1e-15).unwrap(), 1.0);
    }

    #[test]
    fn eval_partial_sum_oracle() {
        let counts = count_coefficients(&DegreeSet::naturals(), 400);
        let x: f64 = 0.1;
        let partial: f64 = (1..=50).map(|n| counts.count_f64(n) * x.powi(n as i32)).sum();
        let v = eval_a(&counts, x, 1e-15).unwrap();
        assert!((v - partial).abs() < 1e-14, "{v} vs {partial}");
    }

    #[test]
    fn eval_prime_monotone_and_finite_difference() {
        let counts = count_coefficients(&DegreeSet::naturals(), 400);
        let ev = GfEvaluator::new(&counts).unwrap();
        assert!(ev.eval_prime(0.2, 1e-14).unwrap() > ev.eval_prime(0.1, 1e-14).unwrap());
        let h = 1e-5;
        let fd = (ev.eval(0.1 + h, 1e-16).unwrap() - ev.eval(0.1 - h, 1e-16).unwrap()) / (2.0 * h);
        assert!((fd - ev.eval_prime(0.1, 1e-16).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn refuses_near_singularity() {
        let counts = count_coefficients(&DegreeSet::naturals(), 400);
        let rho = radius_estimate(&counts).unwrap();
        assert!(matches!(
            eval_a(&counts, rho, 1e-10),
            Err(PolyaError::TooCloseToSingularity { .. })
        ));
        assert!(matches!(
            eval_a(&counts, 0.999 * rho, 1e-12),
            Err(PolyaError::TooCloseToSingularity { .. })
        ));
    }

    #[test]
    fn unrestricted_singularity() {
        let omega = DegreeSet::naturals();
        let counts = count_coefficients(&omega, 400);
        let sing = solve_singularity(&omega, &counts, DEFAULT_SOLVE_TOL).unwrap();
        assert!((sing.a_rho - 1.0).abs() < 1e-8, "{}", sing.a_rho);
        assert!((sing.rho - 0.338_321_856).abs() < 1e-8, "{}", sing.rho);
        assert!(sing.residual < DEFAULT_SOLVE_TOL);
        assert!(sing.tails.windows(2).skip(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn binary_singularity() {
        // Z = 1 + s1²/2 + s2/2 ⇒ E_w = z·w = 1 ⇒ A(ρ) = 1/ρ
        let omega: DegreeSet = "0,2".parse().unwrap();
        let counts = count_coefficients(&omega, 400);
        let sing = solve_singularity(&omega, &counts, DEFAULT_SOLVE_TOL).unwrap();
        assert!((sing.a_rho * sing.rho - 1.0).abs() < 1e-10);
        assert!(sing.rho > 0.0 && sing.rho < 1.0);
    }
}
