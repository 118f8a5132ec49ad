//! Height law of the continuum random tree.
//!
//! `P(H > x) = 2 Σ_{k≥1} (4k²x² − 1) exp(−2k²x²)`. This theta series converges
//! slowly and cancels badly as `x → 0`, so below [`DUAL_BELOW`] the tail is
//! computed from the Jacobi-transformed distribution function
//! `P(H ≤ x) = (π/2)·(2π/x²)^{3/2} Σ_{k≥1} k² exp(−π²k²/(2x²))`,
//! which converges fast exactly where the direct series does not.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

pub const DEFAULT_CUTOFF: f64 = 1e-16;
/// Lower end of the grid used by the Monte Carlo comparisons.
pub const GRID_LOW: f64 = 0.05;
pub const DUAL_BELOW: f64 = 1.0;

/// Tail `P(H > x)`, summing until terms drop below `cutoff_tol`.
pub fn crt_height_tail(x: f64, cutoff_tol: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < DUAL_BELOW {
        return (1.0 - dual_cdf(x, cutoff_tol)).clamp(0.0, 1.0);
    }
    let x2 = x * x;
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let a = 2.0 * k * k * x2;
        let term = (2.0 * a - 1.0) * (-a).exp();
        sum += term;
        if term.abs() < cutoff_tol {
            break;
        }
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn dual_cdf(x: f64, cutoff_tol: f64) -> f64 {
    let scale = PI / 2.0 * (2.0 * PI / (x * x)).powf(1.5);
    let b = PI * PI / (2.0 * x * x);
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = k * k * (-b * k * k).exp();
        sum += term;
        if scale * term < cutoff_tol || term == 0.0 {
            break;
        }
        k += 1.0;
    }
    scale * sum
}

/// Distribution function `P(H ≤ x)`, accurate in relative terms for small `x`.
pub fn crt_height_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < DUAL_BELOW {
        dual_cdf(x, DEFAULT_CUTOFF * 1e-300).min(1.0)
    } else {
        1.0 - crt_height_tail(x, DEFAULT_CUTOFF)
    }
}

/// `E[H^p]`: `√(π/2)` for `p = 1`, `2^{−p/2} p(p−1) Γ(p/2) ζ(p)` beyond.
pub fn crt_height_moment(p: u32) -> f64 {
    assert!(p >= 1, "moment order must be positive");
    if p == 1 {
        return (PI / 2.0).sqrt();
    }
    let p_f = p as f64;
    2f64.powf(-p_f / 2.0) * p_f * (p_f - 1.0) * gamma(p_f / 2.0) * zeta(p)
}

/// Riemann zeta at an integer `s ≥ 2`, by a partial sum plus an
/// Euler-Maclaurin tail.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2);
    const N: u32 = 64;
    let sf = s as f64;
    let head: f64 = (1..N).rev().map(|k| (k as f64).powf(-sf)).sum();
    let n = N as f64;
    let tail = n.powf(1.0 - sf) / (sf - 1.0) + 0.5 * n.powf(-sf) + sf * n.powf(-sf - 1.0) / 12.0
        - sf * (sf + 1.0) * (sf + 2.0) * n.powf(-sf - 3.0) / 720.0;
    head + tail
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `E[H^p]` as `∫ p·x^{p−1}·P(H > x) dx`, truncated where the tail vanishes.
pub fn moment_by_quadrature(p: u32, tol: f64) -> f64 {
    let pf = p as f64;
    let f = move |x: f64| pf * x.powi(p as i32 - 1) * crt_height_tail(x, DEFAULT_CUTOFF);
    integrate(&f, 0.0, DUAL_BELOW, tol) + integrate(&f, DUAL_BELOW, 10.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_limits_and_monotonicity() {
        assert_eq!(crt_height_tail(0.0, DEFAULT_CUTOFF), 1.0);
        assert!(crt_height_tail(8.0, DEFAULT_CUTOFF) < 1e-50);
        let mut prev = 1.0;
        for i in 0..=2000 {
            let x = i as f64 * 0.003;
            let t = crt_height_tail(x, DEFAULT_CUTOFF);
            assert!((0.0..=1.0).contains(&t));
            assert!(t <= prev, "tail increases at {x}");
            prev = t;
        }
        // both series agree where they overlap
        for x in [0.6, 0.9, 1.0, 1.3] {
            let direct = 2.0
                * (1..200)
                    .map(|k| {
                        let a = 2.0 * (k * k) as f64 * x * x;
                        (2.0 * a - 1.0) * (-a).exp()
                    })
                    .sum::<f64>();
            let dual = 1.0 - dual_cdf(x, DEFAULT_CUTOFF);
            assert!((direct - dual).abs() < 1e-13, "x={x}: {direct} vs {dual}");
        }
        let small = crt_height_cdf(0.3);
        assert!((small / 1.4098285611329345e-21 - 1.0).abs() < 1e-12, "{small}");
    }

    #[test]
    fn tail_integrates_to_mean() {
        let mean = moment_by_quadrature(1, 1e-12);
        assert!((mean - (PI / 2.0).sqrt()).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn closed_form_moments() {
        assert!((crt_height_moment(1) - 1.2533141373155).abs() < 1e-12);
        assert!((crt_height_moment(2) - PI * PI / 6.0).abs() < 1e-10);
        assert!((zeta(4) - PI.powi(4) / 90.0).abs() < 1e-13);
        for p in 1..=3 {
            let q = moment_by_quadrature(p, 1e-11);
            assert!((q - crt_height_moment(p)).abs() < 1e-6, "p={p}: {q}");
        }
    }
}
