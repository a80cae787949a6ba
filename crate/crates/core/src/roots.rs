//! Simultaneous complex polynomial root finding (Aberth–Ehrlich).
//!
//! Coefficients are in ascending order: `coeffs[k]` multiplies `x^k`.
//! Points outside the unit disk are evaluated through the reversed
//! polynomial so high degrees never overflow.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::compensated;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AberthConfig {
    pub max_iterations: usize,
    /// Converged once every step is below `step_tolerance · (1 + |z|)`.
    pub step_tolerance: f64,
    /// Acceptance bound on the scaled backward residual when the iteration
    /// cap is reached (clustered or multiple roots converge only linearly).
    pub residual_tolerance: f64,
    pub polish_iterations: usize,
}

impl Default for AberthConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-13,
            residual_tolerance: 1e-8,
            polish_iterations: 3,
        }
    }
}

/// All roots of the polynomial, with multiplicity.
pub fn find_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    find_roots_with(coeffs, &AberthConfig::default())
}

pub fn find_roots_with(coeffs: &[Complex64], cfg: &AberthConfig) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Parameter("polynomial has non-finite coefficients".into()));
    }
    let Some(lead) = coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)) else {
        return Err(Error::Parameter("zero polynomial has no well-defined roots".into()));
    };
    if lead + 1 != coeffs.len() {
        return Err(Error::Parameter("leading coefficient is zero".into()));
    }
    // Exact zero roots from vanishing low-order coefficients.
    let zeros = coeffs.iter().take_while(|c| **c == Complex64::new(0.0, 0.0)).count();
    let poly = &coeffs[zeros..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let degree = poly.len() - 1;
    match degree {
        0 => {}
        1 => roots.push(-poly[0] / poly[1]),
        _ => roots.extend(aberth(poly, cfg)?),
    }
    Ok(roots)
}

fn aberth(poly: &[Complex64], cfg: &AberthConfig) -> Result<Vec<Complex64>> {
    let n = poly.len() - 1;
    let rev: Vec<Complex64> = poly.iter().rev().copied().collect();
    let d_poly = derivative(poly);
    let d_rev = derivative(&rev);

    let upper = cauchy_upper_bound(poly);
    let lower = 1.0 / cauchy_upper_bound(&rev);
    let radius = (upper * lower).sqrt();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64 + PI / (2.0 * n as f64) + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut converged = false;
    let mut iterations = 0;
    let mut max_step = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        max_step = 0.0f64;
        for k in 0..n {
            let ratio = newton_ratio(poly, &d_poly, &rev, &d_rev, z[k]);
            if ratio == Complex64::new(0.0, 0.0) {
                continue;
            }
            let zk = z[k];
            let repulsion: Complex64 = z
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, zj)| (zk - zj).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[k] = zk - step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step < cfg.step_tolerance {
            converged = true;
            break;
        }
    }

    for root in z.iter_mut() {
        *root = polish(poly, &rev, &d_poly, &d_rev, *root, cfg.polish_iterations);
    }

    let residual = max_scaled_residual(poly, &z);
    if !converged && !(residual <= cfg.residual_tolerance) {
        return Err(Error::RootFinder {
            iterations,
            max_step,
            residual,
        });
    }
    Ok(z)
}

pub fn derivative(poly: &[Complex64]) -> Vec<Complex64> {
    poly.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// `p(z)/p'(z)`; for `|z| > 1` uses `p/p' = z·q / (n·q - y·q')` with
/// `q` the reversed polynomial and `y = 1/z`.
fn newton_ratio(
    poly: &[Complex64],
    d_poly: &[Complex64],
    rev: &[Complex64],
    d_rev: &[Complex64],
    z: Complex64,
) -> Complex64 {
    let n = (poly.len() - 1) as f64;
    if z.norm() <= 1.0 {
        horner(poly, z) / horner(d_poly, z)
    } else {
        let y = z.inv();
        let q = horner(rev, y);
        z * q / (q * n - y * horner(d_rev, y))
    }
}

fn polish(
    poly: &[Complex64],
    rev: &[Complex64],
    d_poly: &[Complex64],
    d_rev: &[Complex64],
    mut z: Complex64,
    iterations: usize,
) -> Complex64 {
    let n = (poly.len() - 1) as f64;
    let mut last = f64::INFINITY;
    for _ in 0..iterations {
        let step = if z.norm() <= 1.0 {
            compensated::horner(poly, z) / horner(d_poly, z)
        } else {
            let y = z.inv();
            let q = compensated::horner(rev, y);
            z * q / (q * n - y * horner(d_rev, y))
        };
        if !(step.re.is_finite() && step.im.is_finite()) || step.norm() >= last {
            break;
        }
        last = step.norm();
        z -= step;
        if last <= f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}

/// `|p(z)| / (max|a_k| · max(1, |z|)^n)`, maximized over the roots.
pub fn max_scaled_residual(poly: &[Complex64], roots: &[Complex64]) -> f64 {
    let scale = poly.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rev: Vec<Complex64> = poly.iter().rev().copied().collect();
    roots
        .iter()
        .map(|&z| {
            let v = if z.norm() <= 1.0 {
                compensated::horner(poly, z)
            } else {
                compensated::horner(&rev, z.inv())
            };
            v.norm() / scale
        })
        .fold(0.0, f64::max)
}

/// Unique positive root of `|a_n| x^n - Σ_{k<n} |a_k| x^k`; every root of the
/// polynomial lies inside this radius.
pub fn cauchy_upper_bound(poly: &[Complex64]) -> f64 {
    let n = poly.len() - 1;
    let lead = poly[n].norm();
    let mags: Vec<f64> = poly[..n].iter().map(|c| c.norm() / lead).collect();
    if mags.iter().all(|&m| m == 0.0) {
        return f64::MIN_POSITIVE.sqrt();
    }
    // F(x)/x^n = 1 - Σ m_k x^{k-n} is increasing in x.
    let excess = |x: f64| {
        1.0 - mags
            .iter()
            .enumerate()
            .map(|(k, m)| m * x.powi(k as i32 - n as i32))
            .sum::<f64>()
    };
    let mut hi = 1.0 + mags.iter().copied().fold(0.0, f64::max);
    let mut lo = hi;
    while excess(lo) > 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    hi
}

/// Expands `lead · ∏ (x - r)` into ascending coefficients.
pub fn poly_from_roots(roots: &[Complex64], lead: Complex64) -> Vec<Complex64> {
    let mut poly = vec![lead];
    for &r in roots {
        poly.push(Complex64::new(0.0, 0.0));
        for k in (0..poly.len()).rev() {
            let prev = if k > 0 { poly[k - 1] } else { Complex64::new(0.0, 0.0) };
            poly[k] = prev - r * poly[k];
        }
    }
    poly
}
