//! Sample directions, the node matrix `W`, its inverse `P`, ripple targets
//! and the correlation sums `rᵀ p_i`.
//!
//! With sample sines `u_k = 2(k-M)/(2M-1)` and nodes `x_k = e^{-j2π(Δ/λ)u_k}`,
//! entry `(i, k)` of `W` is `x_k^{i-M}`. Row `M` is all ones, so the column
//! sums of `P = W⁻¹` form the unit vector `e_M`: a perfectly flat pattern can
//! only come from a single active antenna.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::UlaGeometry;
use crate::compensated;
use crate::error::{Error, Result};

/// Two nodes closer than this are treated as coincident.
pub const NODE_TOLERANCE: f64 = 1e-10;
/// Maximum tolerated `|W·P - I|` entry.
pub const INVERSE_TOLERANCE: f64 = 1e-9;
/// Maximum imaginary part of the zero-lag correlation sum.
pub const POWER_IMAG_TOLERANCE: f64 = 1e-10;
/// Threshold on `Σ_i` for the impossibility verdict.
pub const SIGMA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RippleKind {
    Zero,
    Alternating,
    Sinusoidal,
    SeededRandom,
}

fn default_harmonic() -> u32 {
    1
}

/// Shape of the allowed pattern fluctuation `ε(θ)` at the sample directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RippleProfile {
    pub kind: RippleKind,
    pub xi: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
}

impl RippleProfile {
    pub fn new(kind: RippleKind, xi: f64) -> Self {
        Self {
            kind,
            xi,
            seed: 0,
            harmonic: 1,
        }
    }

    pub fn zero() -> Self {
        Self::new(RippleKind::Zero, 0.0)
    }

    pub fn alternating(xi: f64) -> Self {
        Self::new(RippleKind::Alternating, xi)
    }

    pub fn sinusoidal(xi: f64, harmonic: u32) -> Self {
        Self {
            harmonic,
            ..Self::new(RippleKind::Sinusoidal, xi)
        }
    }

    pub fn seeded_random(xi: f64, seed: u64) -> Self {
        Self {
            seed,
            ..Self::new(RippleKind::SeededRandom, xi)
        }
    }

    /// Same shape, different amplitude.
    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi.is_finite() && (0.0..1.0).contains(&self.xi)) {
            return Err(Error::Parameter(format!(
                "ripple amplitude xi must lie in [0, 1), got {}",
                self.xi
            )));
        }
        if self.kind == RippleKind::Sinusoidal && self.harmonic == 0 {
            return Err(Error::Parameter("sinusoidal harmonic must be positive".into()));
        }
        Ok(())
    }

    /// True when the profile describes a perfectly flat target.
    pub fn is_flat(&self) -> bool {
        self.kind == RippleKind::Zero || self.xi == 0.0
    }
}

/// Ripple `ε_k` at each sample sine. Every shape lives in `[-1, 1]` and is
/// scaled by `xi`, so a sweep over `xi` rescales one fixed shape.
pub fn ripple_samples(profile: &RippleProfile, sample_sines: &[f64]) -> Vec<f64> {
    let xi = profile.xi;
    match profile.kind {
        RippleKind::Zero => vec![0.0; sample_sines.len()],
        // 1-based sample index k, so the first sample gets -xi.
        RippleKind::Alternating => (1..=sample_sines.len())
            .map(|k| if k % 2 == 1 { -xi } else { xi })
            .collect(),
        RippleKind::Sinusoidal => sample_sines
            .iter()
            .map(|u| xi * (PI * profile.harmonic as f64 * u).cos())
            .collect(),
        RippleKind::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
            sample_sines
                .iter()
                .map(|_| xi * rng.random_range(-1.0..=1.0))
                .collect()
        }
    }
}

/// `u_k = 2(k-M)/(2M-1)` for `k = 1..=2M-1`; `u_M = 0` exactly.
pub fn sample_sines(antennas: usize) -> Vec<f64> {
    let m = antennas as i64;
    let count = 2 * m - 1;
    (1..=count)
        .map(|k| 2.0 * (k - m) as f64 / count as f64)
        .collect()
}

/// Column sums `Σ_i` of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaVector(pub Vec<Complex64>);

#[derive(Debug, Clone)]
pub struct SampleSystem {
    geometry: UlaGeometry,
    sample_sines: Vec<f64>,
    nodes: Vec<Complex64>,
    w: DMatrix<Complex64>,
    p: DMatrix<Complex64>,
    targets: Vec<f64>,
    lag_sums: Vec<Complex64>,
}

impl SampleSystem {
    /// Builds the system for `r_k = 1 + ε(θ_k)` drawn from `profile`.
    pub fn build(geom: &UlaGeometry, profile: &RippleProfile) -> Result<Self> {
        profile.validate()?;
        let sines = sample_sines(geom.antennas());
        let targets = ripple_samples(profile, &sines)
            .into_iter()
            .map(|e| 1.0 + e)
            .collect();
        Self::from_targets(geom, targets)
    }

    /// Builds the system for an explicit target vector `r` of length `2M-1`.
    pub fn from_targets(geom: &UlaGeometry, targets: Vec<f64>) -> Result<Self> {
        let m = geom.antennas();
        if m < 2 {
            return Err(Error::Parameter(format!(
                "sample system needs at least 2 antennas, got {m}"
            )));
        }
        let count = 2 * m - 1;
        if targets.len() != count {
            return Err(Error::Dimension {
                expected: count,
                found: targets.len(),
            });
        }
        let sample_sines = sample_sines(m);
        let d = geom.spacing();
        let nodes: Vec<Complex64> = sample_sines
            .iter()
            .map(|u| Complex64::from_polar(1.0, -2.0 * PI * d * u))
            .collect();
        check_distinct(&nodes)?;

        let (w, p) = if d == 0.5 {
            dft_system(m)
        } else {
            let w = DMatrix::from_fn(count, count, |i, k| {
                let lag = i as f64 - (m - 1) as f64;
                Complex64::from_polar(1.0, -2.0 * PI * d * lag * sample_sines[k])
            });
            let p = w
                .clone()
                .try_inverse()
                .ok_or(Error::Conditioning { residual: f64::INFINITY })?;
            let p = refine_inverse(&w, p);
            let residual = inverse_residual(&w, &p);
            if !(residual <= INVERSE_TOLERANCE) {
                return Err(Error::Conditioning { residual });
            }
            (w, p)
        };

        let lag_sums: Vec<Complex64> = (0..count)
            .map(|i| {
                p.column(i)
                    .iter()
                    .zip(&targets)
                    .map(|(p, r)| p * *r)
                    .sum()
            })
            .collect();
        let power = lag_sums[m - 1];
        if power.im.abs() > POWER_IMAG_TOLERANCE {
            return Err(Error::ComplexPower { imag: power.im });
        }

        Ok(Self {
            geometry: *geom,
            sample_sines,
            nodes,
            w,
            p,
            targets,
            lag_sums,
        })
    }

    pub fn geometry(&self) -> &UlaGeometry {
        &self.geometry
    }

    pub fn antennas(&self) -> usize {
        self.geometry.antennas()
    }

    pub fn sample_sines(&self) -> &[f64] {
        &self.sample_sines
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn w(&self) -> &DMatrix<Complex64> {
        &self.w
    }

    pub fn p(&self) -> &DMatrix<Complex64> {
        &self.p
    }

    /// Target pattern `r` at the sample directions.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `rᵀ p_i` for `i = 1..=M`; entry `M` is the total power `‖v‖²`.
    pub fn correlation_sums(&self) -> &[Complex64] {
        &self.lag_sums[..self.antennas()]
    }

    /// `rᵀ p_i` for all `i = 1..=2M-1`, i.e. the Laurent coefficients for
    /// lags `-(M-1)..=(M-1)`.
    pub fn all_lag_sums(&self) -> &[Complex64] {
        &self.lag_sums
    }

    pub fn sigma(&self) -> SigmaVector {
        let count = self.p.ncols();
        SigmaVector((0..count).map(|i| self.p.column(i).sum()).collect())
    }

    pub fn inverse_residual(&self) -> f64 {
        inverse_residual(&self.w, &self.p)
    }
}

pub fn build_sample_system(geom: &UlaGeometry, profile: &RippleProfile) -> Result<SampleSystem> {
    SampleSystem::build(geom, profile)
}

/// Δ/λ = 1/2 makes the nodes the (2M-1)-th roots of unity, so `W` is a
/// scaled DFT matrix and `P = Wᴴ/(2M-1)`.
fn dft_system(m: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let count = 2 * m - 1;
    let n = count as i64;
    let centre = m as i64 - 1;
    let entry = |i: usize, k: usize| {
        let prod = ((i as i64 - centre) * (k as i64 - centre)).rem_euclid(n);
        Complex64::from_polar(1.0, -2.0 * PI * prod as f64 / n as f64)
    };
    let w = DMatrix::from_fn(count, count, entry);
    let scale = 1.0 / count as f64;
    let p = DMatrix::from_fn(count, count, |k, i| entry(i, k).conj() * scale);
    (w, p)
}

fn check_distinct(nodes: &[Complex64]) -> Result<()> {
    for (a, x) in nodes.iter().enumerate() {
        for (b, y) in nodes.iter().enumerate().skip(a + 1) {
            if (x - y).norm() < NODE_TOLERANCE {
                return Err(Error::CoincidentNodes {
                    first: a + 1,
                    second: b + 1,
                });
            }
        }
    }
    Ok(())
}

/// `I - W·P`, accumulated in compensated arithmetic.
fn residual_matrix(w: &DMatrix<Complex64>, p: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = w.nrows();
    let rows: Vec<Vec<Complex64>> = (0..n).map(|i| w.row(i).iter().copied().collect()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let wp = compensated::dot(rows[i].iter().zip(p.column(j).iter()));
        let target = if i == j { 1.0 } else { 0.0 };
        Complex64::new(target, 0.0) - wp
    })
}

/// Newton refinement `P ← P + P(I - WP)`; each step squares the relative
/// error as long as the residual is computed accurately.
fn refine_inverse(w: &DMatrix<Complex64>, mut p: DMatrix<Complex64>) -> DMatrix<Complex64> {
    for _ in 0..3 {
        let r = residual_matrix(w, &p);
        if r.iter().all(|x| x.norm() < f64::EPSILON) {
            break;
        }
        p += &p * r;
    }
    p
}

fn inverse_residual(w: &DMatrix<Complex64>, p: &DMatrix<Complex64>) -> f64 {
    residual_matrix(w, p).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ImpossibilityReport {
    pub sigma: SigmaVector,
    /// `max_{i≠M} |Σ_i|`
    pub max_off_target: f64,
    /// `|Σ_M - 1|`
    pub target_error: f64,
    pub verdict: bool,
}

/// Numerically certifies that a flat pattern forces every cross-lag
/// correlation of `v` to vanish while `‖v‖² = 1`, i.e. `v` is a unit vector.
pub fn verify_impossibility(geom: &UlaGeometry) -> Result<ImpossibilityReport> {
    let sys = SampleSystem::build(geom, &RippleProfile::zero())?;
    let sigma = sys.sigma();
    let centre = geom.antennas() - 1;
    let max_off_target = sigma
        .0
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != centre)
        .map(|(_, s)| s.norm())
        .fold(0.0, f64::max);
    let target_error = (sigma.0[centre] - 1.0).norm();
    let verdict = max_off_target <= SIGMA_TOLERANCE && target_error <= SIGMA_TOLERANCE;
    Ok(ImpossibilityReport {
        sigma,
        max_off_target,
        target_error,
        verdict,
    })
}
