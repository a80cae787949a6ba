//! File formats: design documents, run configs and CSV tables.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{
    angle_grid, beampattern, Direction, Geometry, PrecodingVector, UlaGeometry, UraGeometry,
};
use crate::error::{Error, Result};
use crate::network::{NetworkConfig, SimulationReport};
use crate::samples::RippleProfile;
use crate::search::Metric;
use crate::selector::{
    to_db, BeamDesign, DesignOutcome, DesignRequest, PeakConstrainedDesign, SweepRow,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Points of the exported θ grid (0.1° steps).
pub const PATTERN_POINTS: usize = 1801;
/// Points per axis of the exported rectangular pattern (1° steps).
pub const PATTERN_2D_POINTS: usize = 181;

/// Complex numbers are stored as `[re, im]`.
pub fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_pairs(p: &[[f64; 2]]) -> Vec<Complex64> {
    p.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

/// `None` for non-finite values, which JSON cannot carry.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub papr: f64,
    pub papr_db: f64,
    /// `null` when some antenna is silent.
    pub dynamic_range: Option<f64>,
    pub dynamic_range_db: Option<f64>,
}

impl Metrics {
    pub fn new(papr: f64, dynamic_range: f64) -> Self {
        Self {
            papr,
            papr_db: to_db(papr),
            dynamic_range: finite(dynamic_range),
            dynamic_range_db: finite(to_db(dynamic_range)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDocument {
    pub geometry: UlaGeometry,
    pub profile: RippleProfile,
    pub mask: Vec<u8>,
    pub v: Vec<[f64; 2]>,
    pub metrics: Metrics,
    pub heuristic: bool,
    pub candidates: u64,
}

impl From<&BeamDesign> for AxisDocument {
    fn from(d: &BeamDesign) -> Self {
        Self {
            geometry: d.geometry,
            profile: d.profile,
            mask: d.mask.0.iter().map(|&b| b as u8).collect(),
            v: to_pairs(d.v.as_slice()),
            metrics: Metrics::new(d.papr, d.dynamic_range),
            heuristic: d.heuristic,
            candidates: d.candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakDocument {
    pub v_max: f64,
    pub radiated_power: f64,
    pub radiated_fraction: f64,
    pub v_scaled: Vec<[f64; 2]>,
}

impl From<&PeakConstrainedDesign> for PeakDocument {
    fn from(p: &PeakConstrainedDesign) -> Self {
        Self {
            v_max: p.v_max,
            radiated_power: p.radiated_power,
            radiated_fraction: p.radiated_fraction,
            v_scaled: to_pairs(p.v_scaled.as_slice()),
        }
    }
}

/// Serialized result of one design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub schema: u32,
    pub geometry: Geometry,
    pub profile: RippleProfile,
    pub metric: Metric,
    /// Unit-norm precoder.
    pub v: Vec<[f64; 2]>,
    pub metrics: Metrics,
    /// Root selection of a linear design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<u8>>,
    pub heuristic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth: Option<AxisDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevation: Option<AxisDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<PeakDocument>,
}

impl DesignDocument {
    pub fn new(req: &DesignRequest, outcome: &DesignOutcome) -> Self {
        let (mask, heuristic, azimuth, elevation) = match outcome {
            DesignOutcome::Ula(o) => (
                Some(AxisDocument::from(&o.design).mask),
                o.design.heuristic,
                None,
                None,
            ),
            DesignOutcome::Ura(o) => {
                let az = o.azimuth.as_ref().map(AxisDocument::from);
                let el = o.elevation.as_ref().map(AxisDocument::from);
                let h = az.iter().chain(&el).any(|a| a.heuristic);
                (None, h, az, el)
            }
        };
        Self {
            schema: SCHEMA_VERSION,
            geometry: req.geometry,
            profile: req.profile,
            metric: req.metric,
            v: to_pairs(outcome.v().as_slice()),
            metrics: Metrics::new(outcome.papr(), outcome.dynamic_range()),
            mask,
            heuristic,
            azimuth,
            elevation,
            peak: outcome.peak().map(PeakDocument::from),
        }
    }

    pub fn precoder(&self) -> Result<PrecodingVector> {
        let v = PrecodingVector::new(from_pairs(&self.v))?;
        if v.len() != self.geometry.antennas() {
            return Err(Error::Dimension {
                expected: self.geometry.antennas(),
                found: v.len(),
            });
        }
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("design documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("invalid design document: {e}")))?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported design schema {}",
                doc.schema
            )));
        }
        Ok(doc)
    }
}

/// Sweep section of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub xi_list: Vec<f64>,
}

/// Versioned top-level config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub design: Option<DesignRequest>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub network: Option<NetworkConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("invalid config: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported config schema {}, expected {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        if let Some(d) = &cfg.design {
            d.validate()?;
        }
        if let Some(n) = &cfg.network {
            n.validate()?;
        }
        Ok(cfg)
    }
}

/// Nine significant digits.
pub fn sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `theta_deg,pattern,pattern_db` over the θ grid.
pub fn pattern_csv(geom: &Geometry, v: &PrecodingVector, points: usize) -> Result<String> {
    if let Geometry::Ura(g) = geom {
        return azimuth_cut_csv(g, v, points);
    }
    let mut out = String::from("theta_deg,pattern,pattern_db\n");
    for theta in angle_grid(points)? {
        let f = beampattern(geom, v, &Direction::ula(theta)?)?;
        writeln!(out, "{},{},{}", sig9(theta.to_degrees()), sig9(f), sig9(to_db(f))).unwrap();
    }
    Ok(out)
}

/// `psi_deg,theta_deg,pattern,pattern_db`, ψ-major.
pub fn pattern_2d_csv(geom: &UraGeometry, v: &PrecodingVector, points: usize) -> Result<String> {
    let g = Geometry::Ura(*geom);
    let angles = angle_grid(points)?;
    let mut out = String::from("psi_deg,theta_deg,pattern,pattern_db\n");
    for &psi in &angles {
        for &theta in &angles {
            let f = beampattern(&g, v, &Direction::ura(psi, theta)?)?;
            writeln!(
                out,
                "{},{},{},{}",
                sig9(psi.to_degrees()),
                sig9(theta.to_degrees()),
                sig9(f),
                sig9(to_db(f))
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Horizon cut `ψ = π/2` over θ.
pub fn azimuth_cut_csv(geom: &UraGeometry, v: &PrecodingVector, points: usize) -> Result<String> {
    let g = Geometry::Ura(*geom);
    let mut out = String::from("theta_deg,pattern,pattern_db\n");
    for theta in angle_grid(points)? {
        let f = beampattern(&g, v, &Direction::ura(std::f64::consts::FRAC_PI_2, theta)?)?;
        writeln!(out, "{},{},{}", sig9(theta.to_degrees()), sig9(f), sig9(to_db(f))).unwrap();
    }
    Ok(out)
}

/// Cut `θ = 0` over ψ.
pub fn elevation_cut_csv(geom: &UraGeometry, v: &PrecodingVector, points: usize) -> Result<String> {
    let g = Geometry::Ura(*geom);
    let mut out = String::from("psi_deg,pattern,pattern_db\n");
    for psi in angle_grid(points)? {
        let f = beampattern(&g, v, &Direction::ura(psi, 0.0)?)?;
        writeln!(out, "{},{},{}", sig9(psi.to_degrees()), sig9(f), sig9(to_db(f))).unwrap();
    }
    Ok(out)
}

/// Per-antenna powers of the unit-norm precoder and, when present, of the
/// peak-normalized one.
pub fn antenna_power_csv(v: &PrecodingVector, peak: Option<&PeakDocument>) -> String {
    let scaled = peak.map(|p| from_pairs(&p.v_scaled));
    let mut out = String::from("antenna,power,power_db");
    if scaled.is_some() {
        out.push_str(",power_scaled");
    }
    out.push('\n');
    for (m, p) in v.powers().into_iter().enumerate() {
        write!(out, "{},{},{}", m + 1, sig9(p), sig9(to_db(p))).unwrap();
        if let Some(s) = &scaled {
            write!(out, ",{}", sig9(s[m].norm_sqr())).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("xi,papr_db,dr_db,radiated_fraction\n");
    for r in rows {
        match &r.result {
            Ok(m) => writeln!(
                out,
                "{},{},{},{}",
                sig9(r.xi),
                sig9(to_db(m.papr)),
                sig9(to_db(m.dynamic_range)),
                sig9(m.radiated_fraction)
            )
            .unwrap(),
            Err(_) => writeln!(out, "{},ERROR,ERROR,ERROR", sig9(r.xi)).unwrap(),
        }
    }
    out
}

pub fn sinr_cdf_csv(report: &SimulationReport) -> String {
    let mut out = String::from("sinr_db,cdf_broadbeam,cdf_geometry\n");
    for row in &report.cdf {
        writeln!(
            out,
            "{},{},{}",
            sig9(row.sinr_db),
            sig9(row.cdf_broadbeam),
            sig9(row.cdf_geometry)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary<'a> {
    pub schema: u32,
    pub config: &'a NetworkConfig,
    #[serde(flatten)]
    pub report: &'a SimulationReport,
}

pub fn simulation_summary_json(cfg: &NetworkConfig, report: &SimulationReport) -> String {
    let summary = SimulationSummary {
        schema: SCHEMA_VERSION,
        config: cfg,
        report,
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("summaries serialize");
    s.push('\n');
    s
}
