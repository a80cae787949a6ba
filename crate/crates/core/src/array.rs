//! Uniform linear and rectangular array geometries, steering vectors and
//! transmit beampatterns.
//!
//! A ULA with `M` isotropic elements spaced `Δ` apart has steering vector
//! `a_m(θ) = exp(j·2π·(m-1)·(Δ/λ)·sin θ)`, and a precoder `v` radiates
//! `f(θ) = |vᴴ a(θ)|²`. The rectangular array is the Kronecker product of an
//! azimuth and an elevation ULA evaluated at the composite phase arguments
//! `sin ψ sin θ` and `sin ψ cos θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pattern values in `[-PATTERN_CLAMP, 0)` are round-off and reported as zero.
pub const PATTERN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UlaFields", into = "UlaFields")]
pub struct UlaGeometry {
    antennas: usize,
    spacing: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UlaFields {
    antennas: usize,
    spacing: f64,
}

impl TryFrom<UlaFields> for UlaGeometry {
    type Error = Error;
    fn try_from(s: UlaFields) -> Result<Self> {
        UlaGeometry::new(s.antennas, s.spacing)
    }
}

impl From<UlaGeometry> for UlaFields {
    fn from(g: UlaGeometry) -> Self {
        UlaFields {
            antennas: g.antennas,
            spacing: g.spacing,
        }
    }
}

impl UlaGeometry {
    /// `spacing` is the element spacing in wavelengths (Δ/λ).
    pub fn new(antennas: usize, spacing: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::Parameter("antenna count must be at least 1".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Parameter(format!(
                "spacing ratio must be finite and positive, got {spacing}"
            )));
        }
        Ok(Self { antennas, spacing })
    }

    pub fn half_wavelength(antennas: usize) -> Result<Self> {
        Self::new(antennas, 0.5)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UraGeometry {
    pub azimuth: UlaGeometry,
    pub elevation: UlaGeometry,
}

impl UraGeometry {
    pub fn new(azimuth: UlaGeometry, elevation: UlaGeometry) -> Self {
        Self { azimuth, elevation }
    }

    pub fn antennas(&self) -> usize {
        self.azimuth.antennas * self.elevation.antennas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Ula(UlaGeometry),
    Ura(UraGeometry),
}

impl Geometry {
    pub fn antennas(&self) -> usize {
        match self {
            Geometry::Ula(g) => g.antennas(),
            Geometry::Ura(g) => g.antennas(),
        }
    }
}

impl From<UlaGeometry> for Geometry {
    fn from(g: UlaGeometry) -> Self {
        Geometry::Ula(g)
    }
}

impl From<UraGeometry> for Geometry {
    fn from(g: UraGeometry) -> Self {
        Geometry::Ura(g)
    }
}

/// Azimuth `θ` and, for rectangular arrays, elevation `ψ`, both in radians
/// within `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: Option<f64>,
}

impl Direction {
    pub fn ula(azimuth: f64) -> Result<Self> {
        check_angle(azimuth)?;
        Ok(Self {
            azimuth,
            elevation: None,
        })
    }

    pub fn ura(elevation: f64, azimuth: f64) -> Result<Self> {
        check_angle(azimuth)?;
        check_angle(elevation)?;
        Ok(Self {
            azimuth,
            elevation: Some(elevation),
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: Option<f64>) -> Result<Self> {
        match elevation_deg {
            None => Self::ula(azimuth_deg.to_radians()),
            Some(e) => Self::ura(e.to_radians(), azimuth_deg.to_radians()),
        }
    }

    /// Effective ULA sine arguments `(sin ψ sin θ, sin ψ cos θ)`.
    pub fn ura_sines(&self) -> (f64, f64) {
        let psi = self.elevation.unwrap_or(0.0);
        let s = psi.sin();
        (s * self.azimuth.sin(), s * self.azimuth.cos())
    }
}

fn check_angle(a: f64) -> Result<()> {
    // Grid endpoints computed as -π/2 + k·step can overshoot by an ulp.
    if a.is_finite() && a.abs() <= FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "angle {a} rad outside [-pi/2, pi/2]"
        )))
    }
}

/// Complex precoding weights, one per antenna. Rectangular arrays use the
/// azimuth-major Kronecker order `v_a ⊗ v_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrecodingVector(pub Vec<Complex64>);

impl PrecodingVector {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Parameter("precoding vector is empty".into()));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Parameter("precoding vector has non-finite entries".into()));
        }
        Ok(Self(coefficients))
    }

    /// Standard basis vector `e_index` of length `len` (0-based index).
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self(self.0.iter().map(|c| c / n).collect())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|c| c.conj()).collect())
    }

    pub fn powers(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(kron(&self.0, &other.0))
    }
}

pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// ULA steering vector for an arbitrary sine argument `u` (`u = sin θ` for a
/// plain ULA, a composite argument for the axes of a rectangular array).
pub fn steering_at_sine(geom: &UlaGeometry, u: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * geom.spacing * u;
    (0..geom.antennas)
        .map(|m| {
            if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, step * m as f64)
            }
        })
        .collect()
}

pub fn steering_vector_ula(geom: &UlaGeometry, azimuth: f64) -> Vec<Complex64> {
    steering_at_sine(geom, azimuth.sin())
}

pub fn steering_vector_ura(geom: &UraGeometry, dir: &Direction) -> Vec<Complex64> {
    let (ua, ue) = dir.ura_sines();
    kron(
        &steering_at_sine(&geom.azimuth, ua),
        &steering_at_sine(&geom.elevation, ue),
    )
}

/// `|vᴴ a|²` for an explicit steering vector.
pub fn pattern_with_steering(v: &[Complex64], a: &[Complex64]) -> Result<f64> {
    if v.len() != a.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: v.len(),
        });
    }
    let s: Complex64 = v.iter().zip(a).map(|(v, a)| v.conj() * a).sum();
    clamp_pattern(s.norm_sqr())
}

/// ULA beampattern at sine argument `u`.
pub fn pattern_at_sine(geom: &UlaGeometry, v: &[Complex64], u: f64) -> Result<f64> {
    pattern_with_steering(v, &steering_at_sine(geom, u))
}

pub fn beampattern(geom: &Geometry, v: &PrecodingVector, dir: &Direction) -> Result<f64> {
    match geom {
        Geometry::Ula(g) => pattern_at_sine(g, v.as_slice(), dir.azimuth.sin()),
        Geometry::Ura(g) => pattern_with_steering(v.as_slice(), &steering_vector_ura(g, dir)),
    }
}

/// Maps tiny negative round-off to zero and rejects anything more negative.
pub fn clamp_pattern(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -PATTERN_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Internal(format!("negative pattern value {value:e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternPoint {
    pub direction: Direction,
    pub value: f64,
}

/// `grid_size` uniform angles over `[-π/2, π/2]`, endpoints included.
pub fn angle_grid(grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::Parameter(format!(
            "grid size must be at least 2, got {grid_size}"
        )));
    }
    let step = PI / (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|i| {
            if i == grid_size - 1 {
                FRAC_PI_2
            } else {
                -FRAC_PI_2 + step * i as f64
            }
        })
        .collect())
}

/// Pattern over a uniform θ grid (ULA) or ψ×θ grid (URA, ψ-major).
pub fn beampattern_grid(
    geom: &Geometry,
    v: &PrecodingVector,
    grid_size: usize,
) -> Result<Vec<PatternPoint>> {
    if v.len() != geom.antennas() {
        return Err(Error::Dimension {
            expected: geom.antennas(),
            found: v.len(),
        });
    }
    let angles = angle_grid(grid_size)?;
    let mut out = Vec::new();
    match geom {
        Geometry::Ula(_) => {
            for &theta in &angles {
                let direction = Direction::ula(theta)?;
                out.push(PatternPoint {
                    direction,
                    value: beampattern(geom, v, &direction)?,
                });
            }
        }
        Geometry::Ura(_) => {
            out.reserve(grid_size * grid_size);
            for &psi in &angles {
                for &theta in &angles {
                    let direction = Direction::ura(psi, theta)?;
                    out.push(PatternPoint {
                        direction,
                        value: beampattern(geom, v, &direction)?,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn single_antenna_steering_is_one() {
        let g = UlaGeometry::new(1, 0.37).unwrap();
        for theta in [-1.2, 0.0, 0.4, FRAC_PI_2] {
            assert_eq!(steering_vector_ula(&g, theta), vec![c(1.0, 0.0)]);
        }
    }

    #[test]
    fn two_element_steering() {
        let g = UlaGeometry::half_wavelength(2).unwrap();
        let a0 = steering_vector_ula(&g, 0.0);
        assert!(close(a0[0], c(1.0, 0.0), 0.0));
        assert!(close(a0[1], c(1.0, 0.0), 1e-15));
        let a90 = steering_vector_ula(&g, FRAC_PI_2);
        assert_eq!(a90[0], c(1.0, 0.0));
        assert!(close(a90[1], c(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn ura_steering_cases() {
        let one = UraGeometry::new(
            UlaGeometry::new(1, 0.5).unwrap(),
            UlaGeometry::new(1, 0.5).unwrap(),
        );
        let d = Direction::ura(0.7, -0.3).unwrap();
        assert_eq!(steering_vector_ura(&one, &d), vec![c(1.0, 0.0)]);

        let g = UraGeometry::new(
            UlaGeometry::new(3, 0.4).unwrap(),
            UlaGeometry::new(2, 0.9).unwrap(),
        );
        let broadside = steering_vector_ura(&g, &Direction::ura(0.0, 1.1).unwrap());
        assert!(broadside.iter().all(|&a| close(a, c(1.0, 0.0), 1e-15)));

        // ψ=π/2, θ=0: azimuth phase sin ψ sin θ = 0, elevation phase π·sin ψ cos θ = π,
        // so a = [1, 1] ⊗ [1, -1].
        let g = UraGeometry::new(
            UlaGeometry::half_wavelength(2).unwrap(),
            UlaGeometry::half_wavelength(2).unwrap(),
        );
        let a = steering_vector_ura(&g, &Direction::ura(FRAC_PI_2, 0.0).unwrap());
        let expected = [c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        assert!(a.iter().zip(expected).all(|(x, y)| close(*x, y, 1e-15)));
        // θ=π/2 moves the phase onto the azimuth factor: [1, -1] ⊗ [1, 1].
        let a = steering_vector_ura(&g, &Direction::ura(FRAC_PI_2, FRAC_PI_2).unwrap());
        let expected = [c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)];
        assert!(a.iter().zip(expected).all(|(x, y)| close(*x, y, 1e-15)));
    }

    #[test]
    fn pattern_examples() {
        let g1: Geometry = UlaGeometry::new(1, 0.5).unwrap().into();
        let v = PrecodingVector::unit(1, 0);
        assert_eq!(beampattern(&g1, &v, &Direction::ula(0.3).unwrap()).unwrap(), 1.0);

        let g2: Geometry = UlaGeometry::half_wavelength(2).unwrap().into();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = PrecodingVector::new(vec![c(s, 0.0), c(s, 0.0)]).unwrap();
        let f = beampattern(&g2, &v, &Direction::ula(0.0).unwrap()).unwrap();
        assert!((f - 2.0).abs() < 1e-14);

        let g16: Geometry = UlaGeometry::half_wavelength(16).unwrap().into();
        let e1 = PrecodingVector::unit(16, 0);
        for p in beampattern_grid(&g16, &e1, 1801).unwrap() {
            assert!((p.value - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pattern_dimension_mismatch() {
        let g: Geometry = UlaGeometry::half_wavelength(4).unwrap().into();
        let v = PrecodingVector::unit(3, 0);
        let err = beampattern(&g, &v, &Direction::ula(0.0).unwrap()).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 4, found: 3 });
    }

    #[test]
    fn grid_shape() {
        let g: Geometry = UlaGeometry::new(1, 0.5).unwrap().into();
        let v = PrecodingVector::unit(1, 0);
        let grid = beampattern_grid(&g, &v, 181).unwrap();
        assert_eq!(grid.len(), 181);
        assert!(grid.iter().all(|p| p.value == 1.0));

        let grid = beampattern_grid(&g, &v, 2).unwrap();
        assert_eq!(grid[0].direction.azimuth, -FRAC_PI_2);
        assert_eq!(grid[1].direction.azimuth, FRAC_PI_2);

        assert!(matches!(beampattern_grid(&g, &v, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn invalid_geometry_and_angles() {
        assert!(UlaGeometry::new(0, 0.5).is_err());
        assert!(UlaGeometry::new(4, 0.0).is_err());
        assert!(UlaGeometry::new(4, f64::NAN).is_err());
        assert!(Direction::ula(2.0).is_err());
        assert!(Direction::ura(-1.6, 0.0).is_err());
    }

    #[test]
    fn clamp_behaviour() {
        assert_eq!(clamp_pattern(-5e-13).unwrap(), 0.0);
        assert_eq!(clamp_pattern(0.25).unwrap(), 0.25);
        assert!(matches!(clamp_pattern(-1e-9), Err(Error::Internal(_))));
    }

    #[test]
    fn geometry_json_rejects_unknown_keys() {
        let g: Geometry =
            serde_json::from_str(r#"{"type":"ula","antennas":16,"spacing":0.5}"#).unwrap();
        assert_eq!(g.antennas(), 16);
        assert!(serde_json::from_str::<Geometry>(
            r#"{"type":"ula","antennas":16,"spacing":0.5,"extra":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<Geometry>(r#"{"type":"ula","antennas":0,"spacing":0.5}"#)
            .is_err());
    }

    fn cvec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
            .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
    }

    proptest! {
        #[test]
        fn conjugation_reciprocity(v in cvec(7), theta in -FRAC_PI_2..FRAC_PI_2, d in 0.1f64..1.0) {
            let g = UlaGeometry::new(7, d).unwrap();
            let f = pattern_at_sine(&g, &v, theta.sin()).unwrap();
            let vc: Vec<_> = v.iter().map(|c| c.conj()).collect();
            let f2 = pattern_at_sine(&g, &vc, (-theta).sin()).unwrap();
            prop_assert!((f - f2).abs() <= 1e-10 * (1.0 + f));
        }

        #[test]
        fn scalar_scaling(v in cvec(5), theta in -FRAC_PI_2..FRAC_PI_2, cr in -2.0f64..2.0, ci in -2.0f64..2.0) {
            let g: Geometry = UlaGeometry::half_wavelength(5).unwrap().into();
            let c = Complex64::new(cr, ci);
            let pv = PrecodingVector(v);
            let dir = Direction::ula(theta).unwrap();
            let f = beampattern(&g, &pv, &dir).unwrap();
            let fs = beampattern(&g, &pv.scaled(c), &dir).unwrap();
            prop_assert!((fs - c.norm_sqr() * f).abs() <= 1e-10 * (1.0 + fs));
            prop_assert!(f >= 0.0);
        }

        #[test]
        fn ura_factorizes(va in cvec(3), ve in cvec(4), psi in -FRAC_PI_2..FRAC_PI_2, theta in -FRAC_PI_2..FRAC_PI_2) {
            let az = UlaGeometry::new(3, 0.5).unwrap();
            let el = UlaGeometry::new(4, 0.35).unwrap();
            let g = Geometry::Ura(UraGeometry::new(az, el));
            let v = PrecodingVector(kron(&va, &ve));
            let dir = Direction::ura(psi, theta).unwrap();
            let (ua, ue) = dir.ura_sines();
            let f = beampattern(&g, &v, &dir).unwrap();
            let fa = pattern_at_sine(&az, &va, ua).unwrap();
            let fe = pattern_at_sine(&el, &ve, ue).unwrap();
            prop_assert!((f - fa * fe).abs() <= 1e-10 * (1.0 + f));
        }
    }
}
