use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use broadbeam::array::{Geometry, UlaGeometry, UraGeometry};
use broadbeam::network::{self, MeasurementSet, NetworkConfig};
use broadbeam::report::{
    antenna_power_csv, azimuth_cut_csv, elevation_cut_csv, pattern_2d_csv, pattern_csv,
    simulation_summary_json, sinr_cdf_csv, sweep_csv, DesignDocument, RunConfig,
    PATTERN_2D_POINTS, PATTERN_POINTS,
};
use broadbeam::samples::{verify_impossibility, RippleKind, RippleProfile};
use broadbeam::search::Metric;
use broadbeam::selector::{self, dynamic_range_violations_per_decade, sweep_xi, DesignRequest};

/// Broadbeam precoder design for uniform linear and rectangular arrays.
#[derive(Debug, Parser)]
#[command(name = "broadbeam", version)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check numerically that a perfectly flat pattern forces a unit vector.
    VerifyTheorem(VerifyArgs),
    /// Design a broadbeam and export it with its pattern.
    Design(DesignArgs),
    /// Design over a list of ripple amplitudes.
    Sweep(SweepArgs),
    /// Downlink SINR in a hexagonal network.
    Simulate(SimulateArgs),
    /// Evaluate the pattern of a saved design.
    Pattern(PatternArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    antennas: usize,
    /// Element spacing in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    spacing: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Zero,
    Alternating,
    Sinusoidal,
    SeededRandom,
}

impl From<ProfileArg> for RippleKind {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Zero => RippleKind::Zero,
            ProfileArg::Alternating => RippleKind::Alternating,
            ProfileArg::Sinusoidal => RippleKind::Sinusoidal,
            ProfileArg::SeededRandom => RippleKind::SeededRandom,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Papr,
    DynamicRange,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Papr => Metric::Papr,
            MetricArg::DynamicRange => Metric::DynamicRange,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Center,
    All,
}

fn parse_ura(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, e) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AZxEL, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(a)?, parse(e)?))
}

/// Design parameters; a `--config` file takes precedence over flags.
#[derive(Debug, Args)]
struct DesignFlags {
    /// Run config JSON with a `design` section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Linear array size.
    #[arg(long, default_value_t = 16)]
    antennas: usize,
    /// Rectangular array as AZxEL, e.g. 8x8.
    #[arg(long, value_parser = parse_ura)]
    ura: Option<(usize, usize)>,
    /// Element spacing in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    spacing: f64,
    #[arg(long, value_enum, default_value = "alternating")]
    profile: ProfileArg,
    #[arg(long, default_value_t = 0.01)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    harmonic: u32,
    #[arg(long, value_enum, default_value = "papr")]
    metric: MetricArg,
    /// Per-antenna power limit; defaults to 1/M.
    #[arg(long)]
    v_max: Option<f64>,
}

impl DesignFlags {
    fn request(&self) -> Result<DesignRequest> {
        let mut req = match &self.config {
            Some(path) => load_config(path)?
                .design
                .with_context(|| format!("{} has no design section", path.display()))?,
            None => {
                let geometry = match self.ura {
                    Some((a, e)) => Geometry::Ura(UraGeometry::new(
                        UlaGeometry::new(a, self.spacing)?,
                        UlaGeometry::new(e, self.spacing)?,
                    )),
                    None => Geometry::Ula(UlaGeometry::new(self.antennas, self.spacing)?),
                };
                let profile = RippleProfile {
                    kind: self.profile.into(),
                    xi: self.xi,
                    seed: self.seed,
                    harmonic: self.harmonic,
                };
                DesignRequest {
                    geometry,
                    profile,
                    metric: self.metric.into(),
                    v_max: self.v_max,
                }
            }
        };
        if req.v_max.is_none() {
            req.v_max = Some(1.0 / req.geometry.antennas() as f64);
        }
        req.validate()?;
        Ok(req)
    }
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    design: DesignFlags,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    design: DesignFlags,
    /// Comma-separated ripple amplitudes; falls back to the config's sweep section.
    #[arg(long, value_delimiter = ',')]
    xi_list: Vec<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Run config JSON with a `network` section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Design JSON written by `design`.
    #[arg(long)]
    design: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// 1 (no interference), 7 or 19 sites.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    path_loss_exponent: Option<f64>,
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
}

#[derive(Debug, Args)]
struct PatternArgs {
    /// Design JSON written by `design`.
    #[arg(long)]
    design: PathBuf,
    /// Points per angular axis; 1801 for linear and 181 for rectangular arrays by default.
    #[arg(long)]
    grid: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RunConfig::from_json(&text)?)
}

fn load_design(path: &Path) -> Result<DesignDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(DesignDocument::from_json(&text)?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let geom = UlaGeometry::new(args.antennas, args.spacing)?;
    let rep = verify_impossibility(&geom)?;
    println!("antennas {} spacing {}", args.antennas, args.spacing);
    println!("max off-target |sigma_i| = {:.3e}", rep.max_off_target);
    println!("|sigma_M - 1| = {:.3e}", rep.target_error);
    println!(
        "verdict: {}",
        if rep.verdict {
            "PASS (only unit vectors give a flat pattern)"
        } else {
            "FAIL"
        }
    );
    Ok(rep.verdict)
}

fn design(args: &DesignArgs) -> Result<()> {
    let req = args.design.request()?;
    if req.profile.is_flat() {
        bail!(
            "xi = 0 requests a perfectly flat pattern, which only single-antenna unit vectors \
             achieve; no broadbeam exists (run verify-theorem)"
        );
    }
    let outcome = selector::design(&req)?;
    let doc = DesignDocument::new(&req, &outcome);
    let v = doc.precoder()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out, "design.json", &doc.to_json())?;
    write(&args.out, "antenna_power.csv", &antenna_power_csv(&v, doc.peak.as_ref()))?;
    match &req.geometry {
        Geometry::Ula(_) => {
            write(&args.out, "pattern.csv", &pattern_csv(&req.geometry, &v, PATTERN_POINTS)?)?;
        }
        Geometry::Ura(g) => {
            write(&args.out, "pattern_2d.csv", &pattern_2d_csv(g, &v, PATTERN_2D_POINTS)?)?;
            write(&args.out, "cut_azimuth.csv", &azimuth_cut_csv(g, &v, PATTERN_POINTS)?)?;
            write(&args.out, "cut_elevation.csv", &elevation_cut_csv(g, &v, PATTERN_POINTS)?)?;
        }
    }
    println!("antennas {}", req.geometry.antennas());
    println!("PAPR {:.4} dB", doc.metrics.papr_db);
    match doc.metrics.dynamic_range_db {
        Some(dr) => println!("dynamic range {dr:.4} dB"),
        None => println!("dynamic range inf (silent antenna)"),
    }
    if let Some(p) = &doc.peak {
        println!(
            "radiated fraction {:.6} at v_max {:.6}",
            p.radiated_fraction, p.v_max
        );
    }
    if doc.heuristic {
        println!("search: heuristic (too many root pairs for exhaustive enumeration)");
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let req = args.design.request()?;
    let xis = if !args.xi_list.is_empty() {
        args.xi_list.clone()
    } else {
        match &args.design.config {
            Some(p) => load_config(p)?
                .sweep
                .map(|s| s.xi_list)
                .with_context(|| "no --xi-list and no sweep section in config")?,
            None => bail!("--xi-list is required without a config sweep section"),
        }
    };
    let rows = sweep_xi(&req.geometry, &req.profile, &xis, req.metric);
    for r in &rows {
        if let Err(e) = &r.result {
            eprintln!("xi {}: ERROR {e}", r.xi);
        }
    }
    emit(args.out.as_deref(), &sweep_csv(&rows))?;
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|m| (r.xi, m.radiated_fraction)))
        .collect();
    if ok.len() >= 2 {
        let (first, last) = (ok[0], ok[ok.len() - 1]);
        eprintln!(
            "radiated fraction trend: {:.4} at xi {} -> {:.4} at xi {} ({})",
            first.1,
            first.0,
            last.1,
            last.0,
            if last.1 > first.1 { "increasing" } else { "not increasing" }
        );
        eprintln!(
            "dynamic range: at most {} increase(s) per decade of xi",
            dynamic_range_violations_per_decade(&rows)
        );
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let doc = load_design(&args.design)?;
    let v = doc.precoder()?;
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?.network.unwrap_or_default(),
        None => NetworkConfig {
            antennas: v.len(),
            ..NetworkConfig::default()
        },
    };
    if let Some(c) = args.cells {
        cfg.cells = c;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.drops {
        cfg.drops = d;
    }
    if let Some(d) = args.draws {
        cfg.channel_draws_per_drop = d;
    }
    if let Some(g) = args.path_loss_exponent {
        cfg.path_loss_exponent = g;
    }
    if let Some(m) = args.measure {
        cfg.measure = match m {
            MeasureArg::Center => MeasurementSet::Center,
            MeasureArg::All => MeasurementSet::All,
        };
    }
    cfg.validate()?;
    if cfg.antennas != v.len() {
        bail!(
            "design has {} antennas but the network config expects {}",
            v.len(),
            cfg.antennas
        );
    }
    let rep = network::simulate(&cfg, &v)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out, "sinr_cdf.csv", &sinr_cdf_csv(&rep))?;
    write(&args.out, "summary.json", &simulation_summary_json(&cfg, &rep))?;
    println!("samples {} snr {:.2} dB", rep.samples, rep.snr_db);
    println!(
        "median SINR broadbeam {:.3} dB, geometry {:.3} dB",
        rep.broadbeam_db.p50, rep.geometry_db.p50
    );
    let gap = rep.median_gap_db.abs();
    println!(
        "median gap {gap:.3} dB ({})",
        if gap < 1.0 { "PASS < 1 dB" } else { "FAIL >= 1 dB" }
    );
    if cfg.cells == 1 {
        println!(
            "single-cell distributional identity: KS {:.4} ({})",
            rep.ks_distance,
            if rep.ks_distance < 0.02 { "PASS < 0.02" } else { "FAIL >= 0.02" }
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn pattern(args: &PatternArgs) -> Result<()> {
    let doc = load_design(&args.design)?;
    let v = doc.precoder()?;
    let csv = match &doc.geometry {
        g @ Geometry::Ula(_) => pattern_csv(g, &v, args.grid.unwrap_or(PATTERN_POINTS))?,
        Geometry::Ura(g) => pattern_2d_csv(g, &v, args.grid.unwrap_or(PATTERN_2D_POINTS))?,
    };
    emit(args.out.as_deref(), &csv)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::VerifyTheorem(a) => verify(a),
        Command::Design(a) => design(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Pattern(a) => pattern(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
