//! Spectral factorization of the designed pattern.
//!
//! The correlation sums are the Laurent coefficients `c_k`, `k = -(M-1)..=(M-1)`,
//! of `g(x) = φ(x)·φ*(1/x)` where `φ(x) = v_1 + v_2 x + … + v_M x^{M-1}`.
//! The pattern is `f(u) = g(e^{-j2π(Δ/λ)u})`. Roots of `g` come in pairs
//! `(x, 1/x̄)`; choosing one root per pair gives a factor `φ` with the same
//! `|φ|` on the unit circle and therefore the same pattern.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::array::PrecodingVector;
use crate::error::{Error, Result};
use crate::roots::{self, find_roots};
use crate::samples::SampleSystem;

/// `|c_{M-1}|` below this fraction of `max |c_k|` counts as a degree collapse.
pub const LEADING_TOLERANCE: f64 = 1e-12;
/// Roots within this distance of the unit circle form a double root.
pub const UNIT_CIRCLE_TOLERANCE: f64 = 1e-6;
/// Relative partner-distance bound used when pairing roots.
pub const PAIRING_TOLERANCE: f64 = 1e-5;
/// Most negative spectrum value accepted by the nonnegativity guard.
pub const NEGATIVE_SPECTRUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSpectrum {
    /// `coeffs[i]` is `c_{i-(M-1)}`.
    coeffs: Vec<Complex64>,
}

impl LaurentSpectrum {
    /// Builds the spectrum from `c_{-(M-1)}..=c_0`; the positive lags are the
    /// conjugate mirror.
    pub fn from_negative_lags(lags: &[Complex64]) -> Result<Self> {
        let m = lags.len();
        if m < 2 {
            return Err(Error::Parameter("spectrum needs at least two lags".into()));
        }
        let mut coeffs = Vec::with_capacity(2 * m - 1);
        coeffs.extend_from_slice(&lags[..m - 1]);
        coeffs.push(Complex64::new(lags[m - 1].re, 0.0));
        coeffs.extend(lags[..m - 1].iter().rev().map(|c| c.conj()));
        let spectrum = Self { coeffs };
        let scale = spectrum.max_coeff();
        let leading = spectrum.coeffs[0].norm();
        if !(leading >= LEADING_TOLERANCE * scale) {
            return Err(Error::PerfectBroadbeam { leading });
        }
        Ok(spectrum)
    }

    pub fn antennas(&self) -> usize {
        self.coeffs.len().div_ceil(2)
    }

    /// Coefficient `c_lag`.
    pub fn lag(&self, lag: isize) -> Complex64 {
        self.coeffs[(lag + self.antennas() as isize - 1) as usize]
    }

    /// Total power `c_0 = ‖v‖²`.
    pub fn power(&self) -> f64 {
        self.lag(0).re
    }

    /// `h(x) = x^{M-1} g(x)`, degree `2M-2`, ascending coefficients.
    pub fn ordinary_polynomial(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `g(e^{jω})`, real for a hermitian spectrum.
    pub fn evaluate_on_circle(&self, omega: f64) -> f64 {
        let m = self.antennas() as isize;
        let c0 = self.lag(0).re;
        // c_k e^{jωk} + c_{-k} e^{-jωk} = 2 Re(c_k e^{jωk})
        c0 + (1..m)
            .map(|k| 2.0 * (self.lag(k) * Complex64::from_polar(1.0, omega * k as f64)).re)
            .sum::<f64>()
    }

    /// Designed pattern at sine argument `u`.
    pub fn pattern_at_sine(&self, spacing: f64, u: f64) -> f64 {
        self.evaluate_on_circle(-2.0 * PI * spacing * u)
    }

    /// Minimum of `g` on a `64·M`-point grid over the unit circle.
    pub fn min_on_circle(&self) -> f64 {
        let n = 64 * self.antennas();
        (0..n)
            .map(|i| self.evaluate_on_circle(2.0 * PI * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Factorization needs a nonnegative spectrum on the whole circle.
    pub fn check_nonnegative(&self) -> Result<()> {
        let min = self.min_on_circle();
        if min < -NEGATIVE_SPECTRUM_TOLERANCE {
            Err(Error::NegativeSpectrum { min })
        } else {
            Ok(())
        }
    }
}

pub fn laurent_from_system(sys: &SampleSystem) -> Result<LaurentSpectrum> {
    LaurentSpectrum::from_negative_lags(sys.correlation_sums())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    /// Root with `|x| ≤ 1`, selected when the mask bit is clear.
    pub inner: Complex64,
    /// Its partner, close to `1/x̄`.
    pub outer: Complex64,
    pub on_unit_circle: bool,
}

impl RootPair {
    pub fn select(&self, flip: bool) -> Complex64 {
        if flip && !self.on_unit_circle {
            self.outer
        } else {
            self.inner
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootPairing {
    pub pairs: Vec<RootPair>,
    /// Largest scaled backward residual of the roots.
    pub residual: f64,
}

impl RootPairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Indices of pairs whose two selections differ.
    pub fn free_pairs(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.on_unit_circle)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn selected_roots(&self, mask: &SelectionMask) -> Result<Vec<Complex64>> {
        if mask.len() != self.pairs.len() {
            return Err(Error::Dimension {
                expected: self.pairs.len(),
                found: mask.len(),
            });
        }
        Ok(self
            .pairs
            .iter()
            .zip(&mask.0)
            .map(|(p, &b)| p.select(b))
            .collect())
    }
}

/// One bit per root pair; a set bit picks the outer root `1/x̄`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMask(pub Vec<bool>);

impl SelectionMask {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Bit `i` of `bits` drives pair `i`.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        Self((0..len).map(|i| i < 64 && (bits >> i) & 1 == 1).collect())
    }

    pub fn to_bits(&self) -> Option<u64> {
        if self.0.len() > 64 {
            return None;
        }
        Some(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .fold(0u64, |acc, (i, _)| acc | (1 << i)),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }

    /// Lexicographic order with pair `len-1` most significant, matching the
    /// integer value of the mask.
    pub fn cmp_value(&self, other: &Self) -> std::cmp::Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

/// Greedy conjugate-reciprocal matching: repeatedly take the unmatched root
/// farthest from the unit circle (in `|log|u||`) and match it to the
/// unmatched root nearest `1/ū`.
pub fn pair_roots(roots: &[Complex64]) -> Result<RootPairing> {
    if !roots.len().is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "cannot pair an odd number of roots ({})",
            roots.len()
        )));
    }
    let mut unmatched: Vec<Complex64> = roots.to_vec();
    let mut pairs = Vec::with_capacity(roots.len() / 2);
    while !unmatched.is_empty() {
        let (ui, _) = unmatched
            .iter()
            .enumerate()
            .map(|(i, u)| (i, u.norm().ln().abs()))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let u = unmatched.swap_remove(ui);
        let target = u.conj().inv();
        let (vi, distance) = unmatched
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - target).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let tolerance = PAIRING_TOLERANCE * (1.0 + target.norm());
        if !(distance <= tolerance) {
            return Err(Error::Pairing { distance, tolerance });
        }
        let v = unmatched.swap_remove(vi);
        let on_unit_circle = (u.norm() - 1.0).abs() <= UNIT_CIRCLE_TOLERANCE
            && (v.norm() - 1.0).abs() <= UNIT_CIRCLE_TOLERANCE;
        let pair = if on_unit_circle {
            let mid = (u + v) * 0.5;
            let on_circle = mid / mid.norm();
            RootPair {
                inner: on_circle,
                outer: on_circle,
                on_unit_circle,
            }
        } else if u.norm() <= v.norm() {
            RootPair {
                inner: u,
                outer: v,
                on_unit_circle,
            }
        } else {
            RootPair {
                inner: v,
                outer: u,
                on_unit_circle,
            }
        };
        pairs.push(pair);
    }
    pairs.sort_by(|a, b| {
        (a.inner.arg(), a.inner.norm())
            .partial_cmp(&(b.inner.arg(), b.inner.norm()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(RootPairing {
        pairs,
        residual: 0.0,
    })
}

/// Roots of `h`, paired, with a nonnegativity guard up front.
pub fn factorize(spectrum: &LaurentSpectrum) -> Result<RootPairing> {
    spectrum.check_nonnegative()?;
    let h = spectrum.ordinary_polynomial();
    let roots = find_roots(h)?;
    let residual = roots::max_scaled_residual(h, &roots);
    let mut pairing = pair_roots(&roots)?;
    pairing.residual = residual;
    Ok(pairing)
}

/// Coefficients of `scale · ∏ (x - α_m)` in ascending order; `α_m` follows
/// the mask.
pub fn expand_selection(
    pairing: &RootPairing,
    mask: &SelectionMask,
    scale: Complex64,
) -> Result<PrecodingVector> {
    let roots = pairing.selected_roots(mask)?;
    Ok(PrecodingVector(roots::poly_from_roots(&roots, scale)))
}

/// Scale and phase that make the monic factor reproduce the spectrum:
/// `‖v‖² = c_0` and `v_1` real and nonnegative.
pub fn matching_scale(monic: &[Complex64], power: f64) -> Complex64 {
    let energy: f64 = monic.iter().map(|c| c.norm_sqr()).sum();
    let magnitude = (power / energy).sqrt();
    let first = monic[0];
    let phase = if first.norm() > 0.0 {
        first.conj() / first.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    phase * magnitude
}

/// The precoder for `mask` whose autocorrelation equals the spectrum.
pub fn spectral_factor(
    spectrum: &LaurentSpectrum,
    pairing: &RootPairing,
    mask: &SelectionMask,
) -> Result<PrecodingVector> {
    let monic = expand_selection(pairing, mask, Complex64::new(1.0, 0.0))?;
    let scale = matching_scale(monic.as_slice(), spectrum.power());
    let mut v = monic.scaled(scale);
    // Exactly real, rather than real up to rounding of the phase product.
    v.0[0] = Complex64::new(v.0[0].norm(), 0.0);
    Ok(v)
}

/// `ρ_k = Σ_m v_{m+k} v̄_m` for `k = 0..M-1`.
pub fn autocorrelation(v: &[Complex64]) -> Vec<Complex64> {
    (0..v.len())
        .map(|k| v[k..].iter().zip(v).map(|(a, b)| a * b.conj()).sum())
        .collect()
}
