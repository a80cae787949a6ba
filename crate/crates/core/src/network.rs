//! Monte-Carlo downlink SINR over a hexagonal cellular layout.
//!
//! Every base station transmits its own symbol stream through the same
//! broadbeam precoder. Links see Rayleigh fading `g ~ CN(0, I_M)` scaled by
//! the distance path loss `d^{-γ}`. The geometry baseline replaces the array
//! by a single full-power antenna.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::PrecodingVector;
use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSet {
    /// Users of the central cell only.
    Center,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Hexagon circumradius in meters.
    pub cell_radius: f64,
    /// Minimum user distance from its serving site, meters.
    pub cell_hole: f64,
    /// 1, 7 or 19 sites (centre plus zero, one or two rings).
    pub cells: usize,
    pub users_per_cell: usize,
    /// dBm.
    pub bs_power: f64,
    pub bandwidth_hz: f64,
    /// dBm/Hz.
    pub noise_density: f64,
    pub path_loss_exponent: f64,
    pub antennas: usize,
    pub drops: usize,
    pub channel_draws_per_drop: usize,
    pub seed: u64,
    pub measure: MeasurementSet,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            cell_radius: 1600.0,
            cell_hole: 100.0,
            cells: 19,
            users_per_cell: 10,
            bs_power: 46.0,
            bandwidth_hz: 20e6,
            noise_density: -174.0,
            path_loss_exponent: 3.8,
            antennas: 16,
            drops: 10,
            channel_draws_per_drop: 1000,
            seed: 0,
            measure: MeasurementSet::Center,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius", self.cell_radius),
            ("cell_hole", self.cell_hole),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cell_hole >= self.cell_radius * SQRT_3 / 2.0 {
            return Err(Error::Parameter("cell hole must fit inside the cell".into()));
        }
        if ![1, 7, 19].contains(&self.cells) {
            return Err(Error::Parameter(format!(
                "cells must be 1, 7 or 19, got {}",
                self.cells
            )));
        }
        if !(self.path_loss_exponent > 2.0 && self.path_loss_exponent < 4.0) {
            return Err(Error::Parameter(format!(
                "path loss exponent must lie in (2, 4), got {}",
                self.path_loss_exponent
            )));
        }
        for (name, v) in [
            ("users_per_cell", self.users_per_cell),
            ("antennas", self.antennas),
            ("drops", self.drops),
            ("channel_draws_per_drop", self.channel_draws_per_drop),
        ] {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        if !(self.bs_power.is_finite() && self.noise_density.is_finite()) {
            return Err(Error::Parameter("power levels must be finite".into()));
        }
        Ok(())
    }

    /// `P/(N₀B)` in dB.
    pub fn snr_db(&self) -> f64 {
        self.bs_power - (self.noise_density + 10.0 * self.bandwidth_hz.log10())
    }

    pub fn snr(&self) -> f64 {
        10f64.powf(self.snr_db() / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Site centres: origin, then the rings of a hexagonal lattice with
/// inter-site distance `√3·R`.
pub fn build_topology(cfg: &NetworkConfig) -> Vec<Point> {
    let r = cfg.cell_radius;
    let isd = SQRT_3 * r;
    let mut sites = vec![Point { x: 0.0, y: 0.0 }];
    let at = |dist: f64, deg: f64| Point {
        x: dist * deg.to_radians().cos(),
        y: dist * deg.to_radians().sin(),
    };
    if cfg.cells >= 7 {
        sites.extend((0..6).map(|k| at(isd, 30.0 + 60.0 * k as f64)));
    }
    if cfg.cells >= 19 {
        for k in 0..6 {
            sites.push(at(2.0 * isd, 30.0 + 60.0 * k as f64));
            sites.push(at(3.0 * r, 60.0 * k as f64));
        }
    }
    sites
}

/// Inside the hexagon of circumradius `r` with vertices at 0°, 60°, … .
pub fn in_hexagon(dx: f64, dy: f64, r: f64) -> bool {
    dy.abs() <= SQRT_3 / 2.0 * r && SQRT_3 * dx.abs() + dy.abs() <= SQRT_3 * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct User {
    pub cell: usize,
    pub position: Point,
}

/// Users uniform over each hexagonal cell, outside the hole around the site.
pub fn drop_users<R: Rng>(cfg: &NetworkConfig, sites: &[Point], rng: &mut R) -> Vec<User> {
    let r = cfg.cell_radius;
    let half_height = SQRT_3 / 2.0 * r;
    let mut users = Vec::with_capacity(sites.len() * cfg.users_per_cell);
    for (cell, site) in sites.iter().enumerate() {
        let mut placed = 0;
        while placed < cfg.users_per_cell {
            let dx = rng.random_range(-r..=r);
            let dy = rng.random_range(-half_height..=half_height);
            if in_hexagon(dx, dy, r) && dx.hypot(dy) >= cfg.cell_hole {
                users.push(User {
                    cell,
                    position: Point {
                        x: site.x + dx,
                        y: site.y + dy,
                    },
                });
                placed += 1;
            }
        }
    }
    users
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `M` i.i.d. `CN(0, 1)` fading coefficients.
pub fn draw_fading<R: Rng>(rng: &mut R, antennas: usize) -> Vec<Complex64> {
    (0..antennas).map(|_| complex_gaussian(rng)).collect()
}

/// `snr·g_s / (1 + snr·Σ g_i)` for per-link received gains.
pub fn sinr(snr: f64, serving_gain: f64, interference_gains: &[f64]) -> f64 {
    snr * serving_gain / (1.0 + snr * interference_gains.iter().sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrSample {
    pub sinr_broadbeam: f64,
    pub sinr_geometry: f64,
    pub user: usize,
    pub drop: usize,
    pub draw: usize,
}

/// Per-user link gains for one fading draw: `β·|gᴴv|²` and `β·|h|²` per site.
fn link_gains<R: Rng>(
    rng: &mut R,
    betas: &[f64],
    v: &[Complex64],
    broadbeam: &mut Vec<f64>,
    geometry: &mut Vec<f64>,
) {
    broadbeam.clear();
    geometry.clear();
    for &beta in betas {
        let proj: Complex64 = v.iter().map(|w| complex_gaussian(rng).conj() * w).sum();
        broadbeam.push(beta * proj.norm_sqr());
        geometry.push(beta * complex_gaussian(rng).norm_sqr());
    }
}

fn split_serving(gains: &[f64], serving: usize, others: &mut Vec<f64>) -> f64 {
    others.clear();
    others.extend(
        gains
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != serving)
            .map(|(_, g)| *g),
    );
    gains[serving]
}

fn simulate_drop(cfg: &NetworkConfig, sites: &[Point], v: &[Complex64], drop: usize) -> Vec<SinrSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(drop as u64);
    let users = drop_users(cfg, sites, &mut rng);
    let measured: Vec<(usize, &User)> = users
        .iter()
        .enumerate()
        .filter(|(_, u)| cfg.measure == MeasurementSet::All || u.cell == 0)
        .collect();
    let betas: Vec<Vec<f64>> = measured
        .iter()
        .map(|(_, u)| {
            sites
                .iter()
                .map(|s| u.position.distance(s).powf(-cfg.path_loss_exponent))
                .collect()
        })
        .collect();
    let snr = cfg.snr();
    let mut out = Vec::with_capacity(cfg.channel_draws_per_drop * measured.len());
    let (mut bb, mut geo, mut others) = (Vec::new(), Vec::new(), Vec::new());
    for draw in 0..cfg.channel_draws_per_drop {
        for ((index, user), beta) in measured.iter().zip(&betas) {
            link_gains(&mut rng, beta, v, &mut bb, &mut geo);
            let s = split_serving(&bb, user.cell, &mut others);
            let sinr_broadbeam = sinr(snr, s, &others);
            let s = split_serving(&geo, user.cell, &mut others);
            let sinr_geometry = sinr(snr, s, &others);
            out.push(SinrSample {
                sinr_broadbeam,
                sinr_geometry,
                user: *index,
                drop,
                draw,
            });
        }
    }
    out
}

/// All SINR samples, ordered by drop, draw and user.
pub fn simulate_samples(cfg: &NetworkConfig, v: &PrecodingVector) -> Result<Vec<SinrSample>> {
    cfg.validate()?;
    if v.len() != cfg.antennas {
        return Err(Error::Dimension {
            expected: cfg.antennas,
            found: v.len(),
        });
    }
    if (v.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "precoder must be unit-norm, has norm² {}",
            v.norm_sqr()
        )));
    }
    let sites = build_topology(cfg);
    let per_drop: Vec<Vec<SinrSample>> = (0..cfg.drops)
        .into_par_iter()
        .map(|d| simulate_drop(cfg, &sites, v.as_slice(), d))
        .collect();
    Ok(per_drop.into_iter().flatten().collect())
}

pub const CDF_MIN_DB: f64 = -20.0;
pub const CDF_MAX_DB: f64 = 60.0;
pub const CDF_STEP_DB: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfRow {
    pub sinr_db: f64,
    pub cdf_broadbeam: f64,
    pub cdf_geometry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub samples: usize,
    pub snr_db: f64,
    pub broadbeam_db: Quantiles,
    pub geometry_db: Quantiles,
    /// `median(broadbeam) - median(geometry)` in dB.
    pub median_gap_db: f64,
    pub ks_distance: f64,
    #[serde(skip)]
    pub cdf: Vec<CdfRow>,
}

pub fn to_db_values(samples: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().map(|s| 10.0 * s.log10()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn quantiles(sorted: &[f64]) -> Quantiles {
    Quantiles {
        p5: quantile(sorted, 0.05),
        p50: quantile(sorted, 0.5),
        p95: quantile(sorted, 0.95),
    }
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|s| *s <= x) as f64 / sorted.len() as f64
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter()
        .chain(&b)
        .map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs())
        .fold(0.0, f64::max)
}

pub fn cdf_grid() -> Vec<f64> {
    let n = ((CDF_MAX_DB - CDF_MIN_DB) / CDF_STEP_DB).round() as usize;
    (0..=n).map(|i| CDF_MIN_DB + CDF_STEP_DB * i as f64).collect()
}

pub fn report(cfg: &NetworkConfig, samples: &[SinrSample]) -> SimulationReport {
    let bb: Vec<f64> = samples.iter().map(|s| s.sinr_broadbeam).collect();
    let geo: Vec<f64> = samples.iter().map(|s| s.sinr_geometry).collect();
    let bb_db = to_db_values(&bb);
    let geo_db = to_db_values(&geo);
    let cdf = cdf_grid()
        .into_iter()
        .map(|x| CdfRow {
            sinr_db: x,
            cdf_broadbeam: ecdf(&bb_db, x),
            cdf_geometry: ecdf(&geo_db, x),
        })
        .collect();
    let broadbeam_db = quantiles(&bb_db);
    let geometry_db = quantiles(&geo_db);
    SimulationReport {
        samples: samples.len(),
        snr_db: cfg.snr_db(),
        median_gap_db: broadbeam_db.p50 - geometry_db.p50,
        ks_distance: ks_distance(&bb_db, &geo_db),
        broadbeam_db,
        geometry_db,
        cdf,
    }
}

pub fn simulate(cfg: &NetworkConfig, v: &PrecodingVector) -> Result<SimulationReport> {
    let samples = simulate_samples(cfg, v)?;
    Ok(report(cfg, &samples))
}

/// Mean of `|x|` for `x` uniform on the hexagon of circumradius `r` minus the
/// central disk of radius `hole`, by polar quadrature.
pub fn analytic_mean_distance(r: f64, hole: f64) -> f64 {
    // Boundary distance at angle φ: apothem / cos(φ - nearest edge normal).
    let apothem = SQRT_3 / 2.0 * r;
    let steps = 20_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..steps {
        let phi = (i as f64 + 0.5) / steps as f64 * PI / 3.0;
        let rho = apothem / (phi - PI / 6.0).cos();
        num += (rho.powi(3) - hole.powi(3)) / 3.0;
        den += (rho.powi(2) - hole.powi(2)) / 2.0;
    }
    num / den
}
