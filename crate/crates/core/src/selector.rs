//! End-to-end broadbeam design for linear and rectangular arrays.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{kron, pattern_at_sine, Geometry, PrecodingVector, UlaGeometry, UraGeometry};
use crate::error::{Error, Result};
use crate::samples::{RippleKind, RippleProfile, SampleSystem};
use crate::search::{dynamic_range, papr, Metric, SearchSpace};
use crate::spectral::{factorize, laurent_from_system, spectral_factor, SelectionMask};

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRequest {
    pub geometry: Geometry,
    pub profile: RippleProfile,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub v_max: Option<f64>,
}

fn default_metric() -> Metric {
    Metric::Papr
}

impl DesignRequest {
    pub fn new(geometry: impl Into<Geometry>, profile: RippleProfile, metric: Metric) -> Self {
        Self {
            geometry: geometry.into(),
            profile,
            metric,
            v_max: None,
        }
    }

    pub fn with_v_max(mut self, v_max: f64) -> Self {
        self.v_max = Some(v_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if let Some(v) = self.v_max {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("v_max must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Optimized precoder for one linear array (or one axis of a rectangular one).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDesign {
    pub geometry: UlaGeometry,
    pub profile: RippleProfile,
    pub metric: Metric,
    /// Unit-norm precoder.
    pub v: PrecodingVector,
    /// Spectral factor before power normalization; its pattern interpolates
    /// the ripple targets exactly and `‖·‖² = rᵀ p_M`.
    pub synthesized: PrecodingVector,
    pub papr: f64,
    pub dynamic_range: f64,
    pub mask: SelectionMask,
    pub targets: Vec<f64>,
    /// Pattern of `synthesized` at the sample directions.
    pub sample_pattern: Vec<f64>,
    pub heuristic: bool,
    pub candidates: u64,
}

impl BeamDesign {
    pub fn papr_db(&self) -> f64 {
        to_db(self.papr)
    }

    pub fn dynamic_range_db(&self) -> f64 {
        to_db(self.dynamic_range)
    }

    /// Power of the synthesized factor, `rᵀ p_M`.
    pub fn spectral_power(&self) -> f64 {
        self.synthesized.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakConstrainedDesign {
    pub v_scaled: PrecodingVector,
    pub v_max: f64,
    pub radiated_power: f64,
    pub radiated_fraction: f64,
}

/// Scales `v` so the strongest antenna radiates exactly `v_max`. The
/// radiated fraction `‖v‖²/(M·v_max)` then equals `1/PAPR`.
pub fn peak_power_normalize(v: &PrecodingVector, v_max: f64) -> Result<PeakConstrainedDesign> {
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::Parameter(format!("v_max must be positive, got {v_max}")));
    }
    let peak = v.powers().into_iter().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Parameter("precoding vector is zero".into()));
    }
    let scale = (v_max / peak).sqrt();
    let v_scaled = v.scaled(Complex64::new(scale, 0.0));
    let radiated_power = v_scaled.norm_sqr();
    Ok(PeakConstrainedDesign {
        v_scaled,
        v_max,
        radiated_power,
        radiated_fraction: radiated_power / (v.len() as f64 * v_max),
    })
}

/// Runs the full pipeline for a linear array: sample system, spectrum, roots,
/// selection search, normalization.
pub fn design_ula(geom: &UlaGeometry, profile: &RippleProfile, metric: Metric) -> Result<BeamDesign> {
    profile.validate()?;
    let sys = SampleSystem::build(geom, profile)?;
    let spectrum = laurent_from_system(&sys)?;
    let pairing = factorize(&spectrum)?;
    let space = SearchSpace::new(&pairing);
    let found = space.best(metric)?;
    let synthesized = spectral_factor(&spectrum, &pairing, &found.mask)?;
    let v = synthesized.normalized();
    let sample_pattern = sys
        .sample_sines()
        .iter()
        .map(|&u| pattern_at_sine(geom, synthesized.as_slice(), u))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamDesign {
        geometry: *geom,
        profile: *profile,
        metric,
        papr: papr(v.as_slice()),
        dynamic_range: dynamic_range(v.as_slice()),
        v,
        synthesized,
        mask: found.mask,
        targets: sys.targets().to_vec(),
        sample_pattern,
        heuristic: found.heuristic,
        candidates: found.candidates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlaOutcome {
    pub design: BeamDesign,
    pub peak: Option<PeakConstrainedDesign>,
}

pub fn design_broadbeam_ula(geom: &UlaGeometry, req: &DesignRequest) -> Result<UlaOutcome> {
    req.validate()?;
    let design = design_ula(geom, &req.profile, req.metric)?;
    let peak = req
        .v_max
        .map(|vm| peak_power_normalize(&design.v, vm))
        .transpose()?;
    Ok(UlaOutcome { design, peak })
}

/// Per-axis ripple so that `(1 + ξ_axis)² = 1 + ξ`.
pub fn axis_ripple(xi: f64) -> f64 {
    (1.0 + xi).sqrt() - 1.0
}

/// Rectangular design `v = v_a ⊗ v_e`; an axis with one element contributes
/// the scalar 1.
#[derive(Debug, Clone, PartialEq)]
pub struct UraOutcome {
    pub geometry: UraGeometry,
    pub azimuth: Option<BeamDesign>,
    pub elevation: Option<BeamDesign>,
    pub v: PrecodingVector,
    pub papr: f64,
    pub dynamic_range: f64,
    pub peak: Option<PeakConstrainedDesign>,
}

fn design_axis(
    geom: &UlaGeometry,
    profile: &RippleProfile,
    metric: Metric,
) -> Result<(Option<BeamDesign>, PrecodingVector)> {
    if geom.antennas() == 1 {
        return Ok((None, PrecodingVector::unit(1, 0)));
    }
    let d = design_ula(geom, profile, metric)?;
    let v = d.v.clone();
    Ok((Some(d), v))
}

pub fn design_broadbeam_ura(geom: &UraGeometry, req: &DesignRequest) -> Result<UraOutcome> {
    req.validate()?;
    let base = req.profile.with_xi(axis_ripple(req.profile.xi));
    let elevation_profile = match base.kind {
        RippleKind::SeededRandom => RippleProfile {
            seed: base.seed.wrapping_add(1),
            ..base
        },
        _ => base,
    };
    let (azimuth, va) = design_axis(&geom.azimuth, &base, req.metric)?;
    let (elevation, ve) = design_axis(&geom.elevation, &elevation_profile, req.metric)?;
    let v = PrecodingVector(kron(va.as_slice(), ve.as_slice()));
    let peak = req
        .v_max
        .map(|vm| peak_power_normalize(&v, vm))
        .transpose()?;
    Ok(UraOutcome {
        geometry: *geom,
        azimuth,
        elevation,
        papr: papr(v.as_slice()),
        dynamic_range: dynamic_range(v.as_slice()),
        v,
        peak,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignOutcome {
    Ula(UlaOutcome),
    Ura(UraOutcome),
}

impl DesignOutcome {
    pub fn v(&self) -> &PrecodingVector {
        match self {
            DesignOutcome::Ula(o) => &o.design.v,
            DesignOutcome::Ura(o) => &o.v,
        }
    }

    pub fn papr(&self) -> f64 {
        match self {
            DesignOutcome::Ula(o) => o.design.papr,
            DesignOutcome::Ura(o) => o.papr,
        }
    }

    pub fn dynamic_range(&self) -> f64 {
        match self {
            DesignOutcome::Ula(o) => o.design.dynamic_range,
            DesignOutcome::Ura(o) => o.dynamic_range,
        }
    }

    pub fn peak(&self) -> Option<&PeakConstrainedDesign> {
        match self {
            DesignOutcome::Ula(o) => o.peak.as_ref(),
            DesignOutcome::Ura(o) => o.peak.as_ref(),
        }
    }
}

pub fn design(req: &DesignRequest) -> Result<DesignOutcome> {
    match &req.geometry {
        Geometry::Ula(g) => design_broadbeam_ula(g, req).map(DesignOutcome::Ula),
        Geometry::Ura(g) => design_broadbeam_ura(g, req).map(DesignOutcome::Ura),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub papr: f64,
    pub dynamic_range: f64,
    pub radiated_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub xi: f64,
    pub result: std::result::Result<SweepMetrics, Error>,
}

/// One design per ripple amplitude, all sharing the shape of `profile`.
/// Radiated fractions assume a per-antenna peak of `1/M`.
pub fn sweep_xi(
    geometry: &Geometry,
    profile: &RippleProfile,
    xis: &[f64],
    metric: Metric,
) -> Vec<SweepRow> {
    let v_max = 1.0 / geometry.antennas() as f64;
    xis.iter()
        .map(|&xi| {
            let result = (|| {
                if !(xi > 0.0) {
                    return Err(Error::PerfectBroadbeam { leading: 0.0 });
                }
                let req = DesignRequest {
                    geometry: *geometry,
                    profile: profile.with_xi(xi),
                    metric,
                    v_max: Some(v_max),
                };
                let out = design(&req)?;
                let peak = out
                    .peak()
                    .ok_or_else(|| Error::Internal("missing peak design".into()))?;
                Ok(SweepMetrics {
                    papr: out.papr(),
                    dynamic_range: out.dynamic_range(),
                    radiated_fraction: peak.radiated_fraction,
                })
            })();
            SweepRow { xi, result }
        })
        .collect()
}

/// Counts, per decade of `xi`, the rows where the dynamic range increases
/// over the previous successful row; returns the largest per-decade count.
pub fn dynamic_range_violations_per_decade(rows: &[SweepRow]) -> usize {
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|m| (r.xi, m.dynamic_range)))
        .collect();
    let mut per_decade = std::collections::BTreeMap::new();
    for w in ok.windows(2) {
        if w[1].1 > w[0].1 {
            let decade = w[1].0.log10().floor() as i64;
            *per_decade.entry(decade).or_insert(0usize) += 1;
        }
    }
    per_decade.values().copied().max().unwrap_or(0)
}
