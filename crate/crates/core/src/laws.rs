//! Offspring and forest laws of the colored decomposition, and the constants
//! derived from them.
//!
//! A vertex generated at exponent 1 (a "blue" vertex) has `ξ` blue children,
//! coming from fixed points of the cycle type, and a forest of `ζ` further
//! vertices hanging off it through cycles of length at least 2.

use serde::Serialize;

use crate::analysis::SingularData;
use crate::cycle_index::{cycle_index_eval, shifted_fixpoint_free_sum, shifted_homogeneous_sum};
use crate::degree::DegreeSet;
use crate::enumerate::CountTable;
use crate::error::{PolyaError, Result};

pub const DEFAULT_MASS_TOL: f64 = 1e-12;
pub const MAX_SUPPORT: usize = 512;
const FOREST_START: usize = 64;
/// Relative disagreement tolerated between the two σ² routes.
pub const SIGMA_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OffspringLaw {
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub truncation_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForestLaw {
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub truncation_mass: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivedConstants {
    pub mean_xi: f64,
    pub sigma2: f64,
    pub sigma2_pmf: f64,
    pub mean_zeta: f64,
    pub mean_zeta_pmf: f64,
    pub c_omega: f64,
    pub d_omega: f64,
    pub blue_fraction: f64,
}

fn moments(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    let second: f64 = pmf.iter().enumerate().map(|(j, p)| (j * j) as f64 * p).sum();
    (mean, second - mean * mean)
}

/// `P(ξ = j) = (ρ/A)·(A^j/j!)·Σ_{m: m+j ∈ Ω} D_m(p)` with `p_i = A(ρ^i)`.
pub fn offspring_law(omega: &DegreeSet, sing: &SingularData, mass_tol: f64) -> Result<OffspringLaw> {
    let p = sing.power_sums(omega.boundary() + 2)?;
    let a = sing.a_rho;
    let lead = sing.rho / a;
    let mut pmf = Vec::new();
    let mut term = 1.0; // A^j / j!
    let mut truncation_mass = 0.0;
    for j in 0..=MAX_SUPPORT {
        if j > 0 {
            term *= a / j as f64;
        }
        let weight = shifted_fixpoint_free_sum(omega, &p, j)?.value;
        pmf.push(lead * term * weight);
        match omega.tail_from() {
            None => {
                if j >= omega.boundary() {
                    break;
                }
            }
            Some(k) if j >= k => {
                // beyond the tail start the weight is constant; the rest is a
                // Poisson-type tail
                let mut rest = 0.0;
                let mut t = term;
                for i in (j + 1).. {
                    t *= a / i as f64;
                    rest += t;
                    if t < rest * 1e-17 || t == 0.0 {
                        break;
                    }
                }
                truncation_mass = lead * weight * rest;
                if truncation_mass <= mass_tol {
                    break;
                }
            }
            Some(_) => {}
        }
        if j == MAX_SUPPORT {
            return Err(PolyaError::TruncationTooShort {
                requested: MAX_SUPPORT + 1,
                available: MAX_SUPPORT,
            });
        }
    }
    while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
        pmf.pop();
    }
    let (mean, variance) = moments(&pmf);
    Ok(OffspringLaw {
        pmf,
        mean,
        variance,
        truncation_mass,
    })
}

/// Law of `ζ`, the number of vertices contributed by cycles of length `>= 2`
/// at a blue vertex. The generating function is
/// `(ρ/A)·Σ_m c_m·D_m(q(z))` with `q_i(z) = A((zρ)^i)` and
/// `c_m = Σ_{j: j+m ∈ Ω} A^j/j!`; its coefficients are extracted exactly up
/// to the chosen support, which doubles until the leftover mass is below
/// `mass_tol`.
pub fn forest_law(
    omega: &DegreeSet,
    counts: &CountTable,
    sing: &SingularData,
    mass_tol: f64,
) -> Result<ForestLaw> {
    let p = sing.power_sums(omega.boundary() + 2)?;
    let total = sing.rho / sing.a_rho * cycle_index_eval(omega, &p)?.value;
    let mut support = FOREST_START;
    loop {
        let pmf = forest_pmf(omega, counts, sing, support)?;
        let mass: f64 = pmf.iter().sum();
        let truncation_mass = (total - mass).max(0.0);
        if truncation_mass <= mass_tol {
            let mut pmf = pmf;
            while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
                pmf.pop();
            }
            let (mean, _) = moments(&pmf);
            return Ok(ForestLaw {
                pmf,
                mean,
                truncation_mass,
            });
        }
        if support >= MAX_SUPPORT {
            return Err(PolyaError::TruncationTooShort {
                requested: support * 2,
                available: MAX_SUPPORT,
            });
        }
        support = (support * 2).min(MAX_SUPPORT);
    }
}

fn forest_pmf(omega: &DegreeSet, counts: &CountTable, sing: &SingularData, support: usize) -> Result<Vec<f64>> {
    let half = support / 2;
    if counts.order() < half {
        return Err(PolyaError::TruncationTooShort {
            requested: half,
            available: counts.order(),
        });
    }
    let a = sing.a_rho;
    let rho = sing.rho;
    // q_i has coefficient a_n ρ^{in} at z^{in}
    let coeffs: Vec<f64> = (0..=half).map(|n| counts.count_f64(n)).collect();
    let q = |i: usize| -> Vec<(usize, f64)> {
        (1..=support / i)
            .map(|n| (i * n, coeffs[n] * rho.powi((i * n) as i32)))
            .filter(|&(_, v)| v > 0.0)
            .collect()
    };
    let qs: Vec<Vec<(usize, f64)>> = (0..=support)
        .map(|i| if i < 2 { Vec::new() } else { q(i) })
        .collect();

    let max_m = match omega.max_degree() {
        Some(d) => d.min(support),
        None => support,
    };
    // D_m as series in z, valuation >= m
    let mut d: Vec<Vec<f64>> = Vec::with_capacity(max_m + 1);
    let mut unit = vec![0.0; support + 1];
    unit[0] = 1.0;
    d.push(unit);
    for m in 1..=max_m {
        let mut acc = vec![0.0; support + 1];
        for i in 2..=m {
            let prev = &d[m - i];
            for &(e, v) in &qs[i] {
                for t in (m - i)..=(support - e.min(support)) {
                    if e + t > support {
                        break;
                    }
                    acc[e + t] += v * prev[t];
                }
            }
        }
        for x in &mut acc {
            *x /= m as f64;
        }
        d.push(acc);
    }

    let c = |m: usize| -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        match omega.tail_from() {
            None => {
                for j in 0.. {
                    if j > 0 {
                        term *= a / j as f64;
                    }
                    let k = j + m;
                    if omega.max_degree().is_some_and(|mx| k > mx) {
                        break;
                    }
                    if omega.contains(k) {
                        sum += term;
                    }
                }
                sum
            }
            Some(tail) => {
                // e^A minus the excluded j
                let mut excluded = 0.0;
                for j in 0..tail.saturating_sub(m) {
                    if j > 0 {
                        term *= a / j as f64;
                    }
                    if !omega.contains(j + m) {
                        excluded += term;
                    }
                }
                a.exp() - excluded
            }
        }
    };

    let lead = rho / a;
    let mut pmf = vec![0.0; support + 1];
    for (m, dm) in d.iter().enumerate() {
        let cm = c(m);
        if cm == 0.0 {
            continue;
        }
        for (t, v) in dm.iter().enumerate().skip(m) {
            pmf[t] += lead * cm * v;
        }
    }
    Ok(pmf)
}

/// σ², E[ζ] by closed forms and by the pmfs, plus the scaling constants.
pub fn derived_constants(
    omega: &DegreeSet,
    sing: &SingularData,
    xi: &OffspringLaw,
    zeta: &ForestLaw,
) -> Result<DerivedConstants> {
    let p = sing.power_sums(omega.boundary() + 3)?;
    let rho = sing.rho;
    let a = sing.a_rho;
    let z1 = shifted_homogeneous_sum(omega, &p, 1)?.value;
    let z11 = shifted_homogeneous_sum(omega, &p, 2)?.value;
    let mean_xi = rho * z1;
    let sigma2 = rho * a * z11 + mean_xi - mean_xi * mean_xi;
    let scale = sigma2.abs().max(xi.variance.abs()).max(f64::MIN_POSITIVE);
    if (sigma2 - xi.variance).abs() > SIGMA_CONSISTENCY_TOL * scale {
        return Err(PolyaError::InconsistentSigma {
            formula: sigma2,
            pmf: xi.variance,
        });
    }

    let mut mean_zeta = 0.0;
    for i in 2..=p.len() {
        let x = rho.powi(i as i32);
        mean_zeta += shifted_homogeneous_sum(omega, &p, i)?.value * x * sing.a_prime_at_power(i as u64);
    }
    mean_zeta *= rho / a;

    let e = &sing.partials;
    let d_omega = omega.span() as f64 * (rho * e.e_z / (2.0 * std::f64::consts::PI * e.e_ww)).sqrt();
    Ok(DerivedConstants {
        mean_xi,
        sigma2,
        sigma2_pmf: xi.variance,
        mean_zeta,
        mean_zeta_pmf: zeta.mean,
        c_omega: (1.0 + mean_zeta).sqrt() * sigma2.sqrt() / 2.0,
        d_omega,
        blue_fraction: 1.0 / (1.0 + mean_zeta),
    })
}

/// Everything the sampler and the experiments need about one degree set.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub omega: DegreeSet,
    pub counts: CountTable,
    pub sing: SingularData,
    pub xi: OffspringLaw,
    pub zeta: ForestLaw,
    pub constants: DerivedConstants,
}

impl Analysis {
    pub fn run(omega: &DegreeSet, order: usize, tol: f64) -> Result<Self> {
        let counts = crate::enumerate::count_coefficients(omega, order);
        let sing = crate::analysis::solve_singularity(omega, &counts, tol)?;
        let xi = offspring_law(omega, &sing, DEFAULT_MASS_TOL)?;
        let zeta = forest_law(omega, &counts, &sing, DEFAULT_MASS_TOL)?;
        let constants = derived_constants(omega, &sing, &xi, &zeta)?;
        Ok(Self {
            omega: omega.clone(),
            counts,
            sing,
            xi,
            zeta,
            constants,
        })
    }
}
