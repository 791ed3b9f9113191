//! The `qnoise` command line.
//!
//! Exit codes: 0 on success, 1 when an analysis fails or a verification
//! check does not pass, 2 on usage and configuration errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{FileConfig, Overrides, RunConfig, Units, SEED_ENV};
use crate::detection::{self, NoiseSpectrum, SpectrumKind};
use crate::ensemble::NoisePowerSeries;
use crate::error::{Error, Result};
use crate::experiment::{self, ScanSetup, TotalSetup};
use crate::inference::{
    bootstrap_errors, fit_correlation, fit_total, fit_total_joint, CorrelationSeries, FitReport,
    ThicknessPoint, ThicknessSeries,
};
use crate::io::{self, FitData, ReportDocument, ScanFile};
use crate::model::NoiseKind;
use crate::stats::McEstimate;
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qnoise", version, about = "Noise transport through diffusive media")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Random seed (default: config, then $QNOISE_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Shot-noise band `lo,hi` (MHz in lab units).
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    pub sn_band: Option<Pair>,
    /// Technical-noise band `lo,hi`.
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    pub tn_band: Option<Pair>,
    /// Excluded window `lo,hi`; repeat for several windows.
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    pub exclude: Vec<Pair>,
    /// Units of numbers given on the command line.
    #[arg(long, global = true, value_parser = parse_units)]
    pub units: Option<Units>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub [f64; 2]);

fn parse_pair(s: &str) -> std::result::Result<Pair, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'lo,hi', got '{s}'"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("not a number: '{x}'"));
    Ok(Pair([num(a)?, num(b)?]))
}

fn parse_units(s: &str) -> std::result::Result<Units, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic measurements.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Reduce and fit measurements.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the self-verification suite.
    Verify(VerifyArgs),
    /// Merge JSON reports into a plot-ready CSV of data and fitted curves.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Sample, reference and thermal spectra of a thickness series.
    Total(SimulateTotalArgs),
    /// Frequency scans of the noise in single speckle spots.
    Speckle(SimulateSpeckleArgs),
}

#[derive(Debug, Args)]
pub struct SimulateTotalArgs {
    /// Sample thicknesses (μm in lab units).
    #[arg(long, value_delimiter = ',')]
    pub thicknesses: Option<Vec<f64>>,
    /// Transport mean free path in μm.
    #[arg(long)]
    pub ell_um: Option<f64>,
    /// Diffusion constant in m²/s.
    #[arg(long)]
    pub diffusivity: Option<f64>,
    /// Sample positions per thickness.
    #[arg(long)]
    pub positions: Option<usize>,
    /// Output channels per realization.
    #[arg(long)]
    pub channels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateSpeckleArgs {
    /// Sample thickness (μm in lab units).
    #[arg(long)]
    pub thickness: Option<f64>,
    /// Transport mean free path in μm.
    #[arg(long)]
    pub ell_um: Option<f64>,
    /// Diffusion constant in m²/s.
    #[arg(long)]
    pub diffusivity: Option<f64>,
    /// Optical frequency steps per scan.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Optical frequency step (THz in lab units, Hz in SI).
    #[arg(long)]
    pub step: Option<f64>,
    /// Independent scans (speckle spots).
    #[arg(long)]
    pub scans: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeTotalArgs {
    /// Directory with the spectra (default: `<out>/total`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fit both noise kinds with one shared boundary offset.
    #[arg(long)]
    pub joint: bool,
    /// Bootstrap resamples over sample positions (0 = off).
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sn,
    Tn,
}

impl From<KindArg> for NoiseKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sn => NoiseKind::ShotNoise,
            KindArg::Tn => NoiseKind::TechnicalNoise,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeCorrelationArgs {
    /// Scan file or correlation file (default: `<out>/speckle/scan.csv`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sample thickness when the input does not record one (μm in lab units).
    #[arg(long)]
    pub thickness: Option<f64>,
    /// Number of lags, including zero, taken from a scan.
    #[arg(long)]
    pub lags: Option<usize>,
    /// Noise kind of a correlation file without a `kind` entry.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Bootstrap resamples over scans (0 = off).
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Thickness series: reduction and transmission-law fits.
    Total(AnalyzeTotalArgs),
    /// Frequency scans: noise correlation and diffusion-constant fits.
    Correlation(AnalyzeCorrelationArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only the named checks (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Multiplies every bound; 0 makes every check fail.
    #[arg(long)]
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON reports to merge (default: every `report_*.json` in the output
    /// directory).
    pub inputs: Vec<PathBuf>,
    /// Output file (default: `<out>/plot.csv`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let g = &cli.global;
    let mut o = Overrides {
        seed: g.seed,
        units: g.units,
        out: g.out.clone(),
        sn_band: g.sn_band.map(|p| p.0),
        tn_band: g.tn_band.map(|p| p.0),
        exclude: (!g.exclude.is_empty()).then(|| g.exclude.iter().map(|p| p.0).collect()),
        ..Default::default()
    };
    match &cli.command {
        Command::Simulate(SimulateCommand::Total(a)) => {
            o.thicknesses = a.thicknesses.clone();
            o.ell_m = a.ell_um.map(|x| x / 1e6);
            o.diffusivity = a.diffusivity;
            o.positions = a.positions;
            o.n_channels = a.channels;
        }
        Command::Simulate(SimulateCommand::Speckle(a)) => {
            o.scan_thickness = a.thickness;
            o.ell_m = a.ell_um.map(|x| x / 1e6);
            o.diffusivity = a.diffusivity;
            o.n_steps = a.steps;
            o.step = a.step;
            o.n_scans = a.scans;
        }
        Command::Analyze(AnalyzeCommand::Total(a)) => {
            o.joint = a.joint.then_some(true);
            o.bootstrap = a.bootstrap;
        }
        Command::Analyze(AnalyzeCommand::Correlation(a)) => {
            o.scan_thickness = a.thickness;
            o.n_lags = a.lags;
            o.bootstrap = a.bootstrap;
        }
        Command::Verify(a) => o.tolerance_scale = a.tolerance_scale,
        Command::Report(_) => {}
    }
    o
}

fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(&file, &overrides(&cli), env_seed.as_deref())?;
    match &cli.command {
        Command::Simulate(SimulateCommand::Total(_)) => simulate_total(&cfg),
        Command::Simulate(SimulateCommand::Speckle(_)) => simulate_speckle(&cfg),
        Command::Analyze(AnalyzeCommand::Total(a)) => analyze_total(&cfg, a.input.as_deref()),
        Command::Analyze(AnalyzeCommand::Correlation(a)) => {
            analyze_correlation(&cfg, a.input.as_deref(), a.kind.map(Into::into))
        }
        Command::Verify(a) => run_verify(&cfg, &a.only),
        Command::Report(a) => report(&cfg, &a.inputs, a.output.as_deref()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Write `path` and announce it.
fn emit(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn total_setup(cfg: &RunConfig) -> TotalSetup {
    TotalSetup {
        medium: cfg.medium,
        z_front_m: cfg.z_front_m,
        z_back_m: cfg.z_back_m,
        thicknesses_m: cfg.total.thicknesses_m.clone(),
        positions: cfg.total.positions,
        n_channels: cfg.total.n_channels,
        input: cfg.total.input.clone(),
        grid_hz: detection::linear_grid(cfg.total.f_min_hz, cfg.total.f_max_hz, cfg.total.n_points),
        thermal_level: cfg.total.thermal_level,
        jitter_rel: cfg.total.jitter_rel,
        seed: cfg.seed,
    }
}

fn simulate_total(cfg: &RunConfig) -> Result<i32> {
    let m = experiment::simulate_total(&total_setup(cfg))?;
    let dir = cfg.out.join("total");
    create_dir(&dir)?;
    emit(&dir.join("reference.csv"), &io::spectrum_to_string(&m.reference))?;
    emit(&dir.join("thermal.csv"), &io::spectrum_to_string(&m.thermal))?;
    for (i, s) in m.samples.iter().enumerate() {
        emit(&dir.join(format!("sample_{i:04}.csv")), &io::spectrum_to_string(s))?;
    }
    Ok(EXIT_OK)
}

pub fn scan_setup(cfg: &RunConfig) -> Result<ScanSetup> {
    let s = &cfg.scan;
    Ok(ScanSetup {
        medium: cfg.medium,
        geometry: cfg.scan_geometry()?,
        n_steps: s.n_steps,
        step_rad_s: s.step_rad_s,
        n_scans: s.n_scans,
        spot_transmission: s.spot_transmission,
        tech_level: s.tech_level,
        jitter_rel: s.jitter_rel,
        seed: cfg.seed,
    })
}

fn simulate_speckle(cfg: &RunConfig) -> Result<i32> {
    let setup = scan_setup(cfg)?;
    let data = experiment::simulate_scan(&setup)?;
    let geom = setup.geometry;
    let meta: BTreeMap<String, String> = [
        ("l_eff_m", io::fmt_num(geom.effective_thickness())),
        ("thickness_m", io::fmt_num(geom.thickness())),
        ("diffusivity_m2_s", io::fmt_num(setup.medium.diffusivity())),
        ("step_rad_s", io::fmt_num(setup.step_rad_s)),
        ("n_scans", setup.n_scans.to_string()),
        ("spot_transmission", io::fmt_num(setup.spot_transmission)),
        ("tech_level", io::fmt_num(setup.tech_level)),
        ("seed", setup.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let dir = cfg.out.join("speckle");
    create_dir(&dir)?;
    let file = ScanFile {
        meta,
        sn: data.sn,
        tn: data.tn,
    };
    emit(&dir.join("scan.csv"), &io::scan_to_string(&file))?;
    Ok(EXIT_OK)
}

/// Spectra of a thickness series as read from disk.
struct TotalFiles {
    reference: NoiseSpectrum,
    thermal: Option<NoiseSpectrum>,
    samples: Vec<NoiseSpectrum>,
}

fn read_total_dir(dir: &Path) -> Result<TotalFiles> {
    let files = io::csv_files(dir)?;
    let mut reference = None;
    let mut thermal = None;
    let mut samples = Vec::new();
    for path in files {
        let spec = io::read_spectrum_csv(&path)?;
        let slot = match spec.meta.kind {
            SpectrumKind::Reference => &mut reference,
            SpectrumKind::Thermal => &mut thermal,
            SpectrumKind::Sample => {
                samples.push(spec);
                continue;
            }
        };
        if slot.is_some() {
            return Err(Error::InvalidData(format!(
                "more than one {} spectrum in {}",
                spec.meta.kind.as_str(),
                dir.display()
            )));
        }
        *slot = Some(spec);
    }
    let reference = reference
        .ok_or_else(|| Error::InvalidData(format!("no reference spectrum in {}", dir.display())))?;
    if samples.is_empty() {
        return Err(Error::InvalidData(format!("no sample spectra in {}", dir.display())));
    }
    Ok(TotalFiles {
        reference,
        thermal,
        samples,
    })
}

fn thickness_key(l_m: f64) -> String {
    format!("L{l_m:.6e}m")
}

/// Reduce a thickness series and fit both transmission laws.
pub fn analyze_total_files(
    cfg: &RunConfig,
    reference: &NoiseSpectrum,
    thermal: Option<&NoiseSpectrum>,
    samples: &[NoiseSpectrum],
) -> Result<ReportDocument> {
    let mut doc = ReportDocument::new("analyze total", cfg.to_json());
    let thermal = match thermal {
        Some(t) => t.clone(),
        None => {
            doc.warnings.push("no thermal spectrum; assuming a zero detector floor".into());
            let mut t = detection::synth_thermal(reference.omega_hz(), 0.0, 0.0, 0)?;
            t.meta.rbw_hz = reference.meta.rbw_hz;
            t.meta.vbw_hz = reference.meta.vbw_hz;
            t
        }
    };
    let shot_level = match reference.meta.extra.get("shot_level") {
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| Error::InvalidData(format!("invalid shot_level '{v}' in reference")))?,
        None => {
            doc.warnings
                .push("reference records no shot_level; using the configured input level".into());
            cfg.total.input.shot_level
        }
    };

    // (thickness, reduction) per sample, in file order
    let mut reduced = Vec::with_capacity(samples.len());
    let mut clamped = 0;
    for s in samples {
        let l = s.meta.thickness_m.ok_or_else(|| {
            Error::InvalidData(format!("sample '{}' records no thickness_m", s.meta.sample_id))
        })?;
        let r = detection::reduce_measurement(s, reference, &thermal, &cfg.bands, shot_level)?;
        clamped += r.clamped_points;
        reduced.push((l, r));
    }
    if clamped > 0 {
        doc.warnings.push(format!(
            "{clamped} spectral points clamped to zero by thermal subtraction"
        ));
    }

    let mut by_l: BTreeMap<u64, Vec<&detection::Reduction>> = BTreeMap::new();
    for (l, r) in &reduced {
        by_l.entry(l.to_bits()).or_default().push(r);
    }
    let mut series: BTreeMap<&str, Vec<ThicknessPoint>> = BTreeMap::new();
    let single = by_l.values().any(|v| v.len() < 2);
    if single {
        doc.warnings
            .push("a thickness has a single sample position; fits are unweighted".into());
    }
    for (bits, rs) in &by_l {
        let l = f64::from_bits(*bits);
        let key = thickness_key(l);
        let pick = |f: fn(&detection::Reduction) -> f64| -> McEstimate {
            let v: Vec<f64> = rs.iter().map(|r| f(r)).collect();
            McEstimate::from_samples(&v).expect("non-empty group")
        };
        let sn = pick(|r| r.t_sn_corrected.value);
        let tn = pick(|r| r.t_tn_corrected.value);
        let tn_raw = pick(|r| r.t_tn_hat.value);
        let sn_raw = pick(|r| r.t_sn_hat.value);
        doc.estimates.insert(format!("t_sn_{key}"), sn);
        doc.estimates.insert(format!("t_tn_{key}"), tn);
        doc.estimates.insert(format!("t_sn_raw_{key}"), sn_raw);
        doc.estimates.insert(format!("t_tn_raw_{key}"), tn_raw);
        for (label, est) in [("sn", sn), ("tn", tn)] {
            series.entry(label).or_default().push(ThicknessPoint {
                l_m: l,
                t_hat: est.value,
                stderr: if single { 0.0 } else { est.stderr },
            });
        }
    }
    if by_l.len() < 3 {
        return Err(Error::InvalidData(format!(
            "a thickness fit needs >= 3 distinct thicknesses, got {}",
            by_l.len()
        )));
    }
    let sn = ThicknessSeries::new(series.remove("sn").unwrap_or_default())?;
    let tn = ThicknessSeries::new(series.remove("tn").unwrap_or_default())?;
    let thickness_data = |fit: &str, kind: NoiseKind, s: &ThicknessSeries| FitData::Thickness {
        fit: fit.to_string(),
        kind,
        points: s.points().to_vec(),
    };
    if cfg.fit.joint {
        let r = fit_total_joint(&sn, &tn)?;
        doc.data.push(thickness_data("total_joint", NoiseKind::ShotNoise, &sn));
        doc.push_fit(r, thickness_data("total_joint", NoiseKind::TechnicalNoise, &tn));
    } else {
        doc.push_fit(fit_total(&sn, NoiseKind::ShotNoise)?, thickness_data("total_sn", NoiseKind::ShotNoise, &sn));
        doc.push_fit(
            fit_total(&tn, NoiseKind::TechnicalNoise)?,
            thickness_data("total_tn", NoiseKind::TechnicalNoise, &tn),
        );
    }

    if cfg.fit.bootstrap > 0 {
        let sample_points = |f: fn(&detection::Reduction) -> f64| -> Vec<ThicknessPoint> {
            reduced
                .iter()
                .map(|(l, r)| ThicknessPoint {
                    l_m: *l,
                    t_hat: f(r),
                    stderr: 0.0,
                })
                .collect()
        };
        for (kind, pts) in [
            (NoiseKind::ShotNoise, sample_points(|r| r.t_sn_corrected.value)),
            (NoiseKind::TechnicalNoise, sample_points(|r| r.t_tn_corrected.value)),
        ] {
            let fitter = |p: &[ThicknessPoint]| fit_total(&ThicknessSeries::new(p.to_vec())?, kind);
            let summary = bootstrap_errors(fitter, &pts, None, cfg.fit.bootstrap, cfg.seed)?;
            if summary.n_failed > 0 {
                doc.warnings.push(format!(
                    "bootstrap of total_{}: {} of {} resamples failed",
                    kind.label(),
                    summary.n_failed,
                    summary.n_resamples
                ));
            }
            doc.bootstrap.insert(format!("total_{}", kind.label()), summary);
        }
    }
    Ok(doc)
}

fn analyze_total(cfg: &RunConfig, input: Option<&Path>) -> Result<i32> {
    let dir = input.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("total"));
    let files = read_total_dir(&dir)?;
    let doc = analyze_total_files(cfg, &files.reference, files.thermal.as_ref(), &files.samples)?;
    create_dir(&cfg.out)?;
    emit(&cfg.out.join("report_total.json"), &doc.to_json()?)?;
    print_fits(&doc);
    Ok(EXIT_OK)
}

fn print_fits(doc: &ReportDocument) {
    for f in &doc.fits {
        let mut parts = vec![f.fit.clone()];
        if let (Some(v), Some(e)) = (f.ell_m, f.ell_stderr_m) {
            parts.push(format!("ell_m={v:.4e}+-{e:.1e}"));
        }
        if let Some(z) = f.z0_m {
            parts.push(format!("z0_m={z:.4e}"));
        }
        if let (Some(v), Some(e)) = (f.d_m2_s, f.d_stderr_m2_s) {
            parts.push(format!("D_m2_s={v:.4}+-{e:.2}"));
        }
        if let Some(k) = f.kappa {
            parts.push(format!("kappa={k:.4}"));
        }
        parts.push(format!("chi2/dof={:.3}/{}", f.chi2, f.dof));
        println!("{}", parts.join(" "));
        for w in &f.warnings {
            println!("  warning: {w}");
        }
    }
    for w in &doc.warnings {
        println!("warning: {w}");
    }
}

fn select_rows(powers: &NoisePowerSeries, rows: &[usize]) -> NoisePowerSeries {
    NoisePowerSeries {
        omega_grid: powers.omega_grid.clone(),
        power: rows.iter().map(|&r| powers.power[r].clone()).collect(),
    }
}

fn correlation_data(fit: &str, kind: NoiseKind, series: &CorrelationSeries) -> FitData {
    FitData::Correlation {
        fit: fit.to_string(),
        kind,
        l_eff_m: series.l_eff_m(),
        points: series.points().to_vec(),
    }
}

/// Correlation estimates and fits for both noise kinds of a scan file.
pub fn analyze_scan(cfg: &RunConfig, scan: &ScanFile) -> Result<(ReportDocument, Vec<(NoiseKind, CorrelationSeries)>)> {
    let mut doc = ReportDocument::new("analyze correlation", cfg.to_json());
    let l_eff = match scan.meta.get("l_eff_m") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| Error::InvalidData(format!("invalid l_eff_m '{v}' in scan")))?,
        None => cfg.scan_geometry()?.effective_thickness(),
    };
    let n_lags = cfg.scan.n_lags;
    let mut out = Vec::new();
    for (kind, powers) in [(NoiseKind::ShotNoise, &scan.sn), (NoiseKind::TechnicalNoise, &scan.tn)] {
        let series = experiment::correlation_from_powers(powers, l_eff, n_lags)?;
        let report = fit_correlation(&series, kind)?;
        let fit = report.model.clone();
        if cfg.fit.bootstrap > 0 {
            let rows: Vec<usize> = (0..powers.power.len()).collect();
            let fitter = |sel: &[usize]| -> Result<FitReport> {
                let s = experiment::correlation_from_powers(&select_rows(powers, sel), l_eff, n_lags)?;
                fit_correlation(&s, kind)
            };
            let summary = bootstrap_errors(fitter, &rows, None, cfg.fit.bootstrap, cfg.seed)?;
            if summary.n_failed > 0 {
                doc.warnings.push(format!(
                    "bootstrap of {fit}: {} of {} resamples failed",
                    summary.n_failed, summary.n_resamples
                ));
            }
            doc.bootstrap.insert(fit.clone(), summary);
        }
        doc.push_fit(report, correlation_data(&fit, kind, &series));
        out.push((kind, series));
    }
    Ok((doc, out))
}

fn analyze_correlation(cfg: &RunConfig, input: Option<&Path>, kind: Option<NoiseKind>) -> Result<i32> {
    let path = input
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out.join("speckle").join("scan.csv"));
    let text = fs::read_to_string(&path)?;
    let is_scan = text.lines().any(|l| l.trim() == io::SCAN_HEADER);
    create_dir(&cfg.out)?;
    let doc = if is_scan {
        let scan = io::read_scan_csv(&path)?;
        let (doc, series) = analyze_scan(cfg, &scan)?;
        for (kind, s) in &series {
            emit(
                &cfg.out.join(format!("correlation_{}.csv", kind.label())),
                &io::correlation_to_string(s, *kind),
            )?;
        }
        doc
    } else {
        let fallback = cfg.scan_geometry()?.effective_thickness();
        let (file_kind, series) = io::read_correlation_csv(&path, Some(fallback))?;
        let kind = match (kind, file_kind) {
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => {
                return Err(Error::config(format!(
                    "{} records no noise kind; pass --kind",
                    path.display()
                )))
            }
        };
        let mut doc = ReportDocument::new("analyze correlation", cfg.to_json());
        let report = fit_correlation(&series, kind)?;
        let fit = report.model.clone();
        doc.push_fit(report, correlation_data(&fit, kind, &series));
        doc
    };
    emit(&cfg.out.join("report_correlation.json"), &doc.to_json()?)?;
    print_fits(&doc);
    Ok(EXIT_OK)
}

fn run_verify(cfg: &RunConfig, only: &[String]) -> Result<i32> {
    let report = verify::run_verify(cfg.seed, cfg.tolerance_scale, only)?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    create_dir(&cfg.out)?;
    emit(&cfg.out.join("verify.json"), &report.to_json()?)?;
    if report.passed {
        println!("verification passed");
        Ok(EXIT_OK)
    } else {
        println!("verification FAILED");
        Ok(EXIT_FAILURE)
    }
}

fn report(cfg: &RunConfig, inputs: &[PathBuf], output: Option<&Path>) -> Result<i32> {
    let inputs: Vec<PathBuf> = if inputs.is_empty() {
        let mut found: Vec<PathBuf> = fs::read_dir(&cfg.out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("report_") && n.ends_with(".json"))
            })
            .collect();
        found.sort();
        found
    } else {
        inputs.to_vec()
    };
    if inputs.is_empty() {
        return Err(Error::InvalidData(format!(
            "no report_*.json files in {}",
            cfg.out.display()
        )));
    }
    let docs = inputs
        .iter()
        .map(|p| ReportDocument::read(p))
        .collect::<Result<Vec<_>>>()?;
    let rows = io::plot_rows(&docs)?;
    let sources: Vec<String> = inputs
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let output = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out.join("plot.csv"));
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    emit(&output, &io::plot_to_string(&rows, &sources))?;
    Ok(EXIT_OK)
}

