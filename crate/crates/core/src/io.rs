//! File formats.
//!
//! All files are UTF-8 CSV with `#`-prefixed `key=value` metadata lines
//! before a fixed header row. Numbers are written with 17 significant
//! digits so a write/read cycle is lossless. Stored quantities are SI.
//!
//! * spectrum: `omega_hz,psd`
//! * correlation: `delta_omega_rad_s,c_hat,stderr`
//! * frequency scan: `omega_rad_s,scan,sn_power,tn_power`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{NoiseSpectrum, SpectrumKind, SpectrumMeta};
use crate::ensemble::NoisePowerSeries;
use crate::error::{Error, Result};
use crate::inference::{
    BootstrapSummary, CorrelationPoint, CorrelationSeries, FitReport, ThicknessPoint,
};
use crate::model::NoiseKind;
use crate::stats::McEstimate;

pub const SPECTRUM_HEADER: &str = "omega_hz,psd";
pub const CORRELATION_HEADER: &str = "delta_omega_rad_s,c_hat,stderr";
pub const SCAN_HEADER: &str = "omega_rad_s,scan,sn_power,tn_power";

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    meta: BTreeMap<String, String>,
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_table(path: &Path, text: &str, header: &str) -> Result<Table> {
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    let n_cols = header.split(',').count();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if rest.is_empty() {
                    continue;
                }
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| parse_err(path, line_no, format!("malformed metadata line '{line}'")))?;
                let k = k.trim();
                if k.is_empty() {
                    return Err(parse_err(path, line_no, "empty metadata key"));
                }
                meta.insert(k.to_string(), v.trim().to_string());
                continue;
            }
            if line != header {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected header '{header}', found '{line}'"),
                ));
            }
            seen_header = true;
            continue;
        }
        if line.starts_with('#') {
            return Err(parse_err(path, line_no, "metadata after the header"));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_cols {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {n_cols} cells, found {}", cells.len()),
            ));
        }
        let values = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line_no, format!("non-numeric cell '{c}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line_no, values));
    }
    if !seen_header {
        return Err(parse_err(path, text.lines().count().max(1), format!("missing header '{header}'")));
    }
    Ok(Table { meta, rows })
}

fn write_meta(out: &mut String, meta: &BTreeMap<String, String>) {
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
}

fn take<T: std::str::FromStr>(
    meta: &mut BTreeMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<Option<T>> {
    match meta.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| parse_err(path, 0, format!("invalid value '{v}' for metadata key '{key}'"))),
    }
}

pub fn spectrum_to_string(spec: &NoiseSpectrum) -> String {
    let m = &spec.meta;
    let mut meta = m.extra.clone();
    meta.insert("kind".into(), m.kind.as_str().into());
    meta.insert("sample_id".into(), m.sample_id.clone());
    if let Some(t) = m.thickness_m {
        meta.insert("thickness_m".into(), fmt_num(t));
    }
    meta.insert("seed".into(), m.seed.to_string());
    meta.insert("rbw_hz".into(), fmt_num(m.rbw_hz));
    meta.insert("vbw_hz".into(), fmt_num(m.vbw_hz));
    meta.insert("clamped_points".into(), m.clamped_points.to_string());
    let mut out = String::new();
    write_meta(&mut out, &meta);
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for (w, p) in spec.omega_hz().iter().zip(spec.psd()) {
        let _ = writeln!(out, "{},{}", fmt_num(*w), fmt_num(*p));
    }
    out
}

pub fn parse_spectrum(path: &Path, text: &str) -> Result<NoiseSpectrum> {
    let table = parse_table(path, text, SPECTRUM_HEADER)?;
    let mut extra = table.meta;
    let kind = match extra.remove("kind") {
        None => SpectrumKind::Sample,
        Some(k) => k.parse().map_err(|e: String| parse_err(path, 0, e))?,
    };
    let mut meta = SpectrumMeta::new(kind, extra.remove("sample_id").unwrap_or_default());
    meta.thickness_m = take(&mut extra, "thickness_m", path)?;
    if let Some(seed) = take(&mut extra, "seed", path)? {
        meta.seed = seed;
    }
    if let Some(v) = take(&mut extra, "rbw_hz", path)? {
        meta.rbw_hz = v;
    }
    if let Some(v) = take(&mut extra, "vbw_hz", path)? {
        meta.vbw_hz = v;
    }
    if let Some(v) = take(&mut extra, "clamped_points", path)? {
        meta.clamped_points = v;
    }
    meta.extra = extra;

    let mut omega = Vec::with_capacity(table.rows.len());
    let mut psd = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        if let Some(&prev) = omega.last() {
            if row[0] <= prev {
                return Err(parse_err(
                    path,
                    *line,
                    format!("non-monotone grid: {} follows {}", row[0], prev),
                ));
            }
        }
        omega.push(row[0]);
        psd.push(row[1]);
    }
    NoiseSpectrum::new(omega, psd, meta).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_spectrum_csv(spec: &NoiseSpectrum, path: &Path) -> Result<()> {
    fs::write(path, spectrum_to_string(spec))?;
    Ok(())
}

pub fn read_spectrum_csv(path: &Path) -> Result<NoiseSpectrum> {
    parse_spectrum(path, &fs::read_to_string(path)?)
}

pub fn correlation_to_string(series: &CorrelationSeries, kind: NoiseKind) -> String {
    let mut meta = BTreeMap::new();
    meta.insert("kind".to_string(), kind.label().to_string());
    meta.insert("l_eff_m".to_string(), fmt_num(series.l_eff_m()));
    let mut out = String::new();
    write_meta(&mut out, &meta);
    out.push_str(CORRELATION_HEADER);
    out.push('\n');
    for p in series.points() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(p.delta_omega_rad_s),
            fmt_num(p.c_hat),
            fmt_num(p.stderr)
        );
    }
    out
}

pub fn write_correlation_csv(series: &CorrelationSeries, kind: NoiseKind, path: &Path) -> Result<()> {
    fs::write(path, correlation_to_string(series, kind))?;
    Ok(())
}

/// Correlation file with its noise kind (if recorded) and thickness. A
/// `fallback_l_eff_m` is used when the file does not record `l_eff_m`.
pub fn read_correlation_csv(
    path: &Path,
    fallback_l_eff_m: Option<f64>,
) -> Result<(Option<NoiseKind>, CorrelationSeries)> {
    let text = fs::read_to_string(path)?;
    let mut table = parse_table(path, &text, CORRELATION_HEADER)?;
    let kind = match table.meta.remove("kind").as_deref() {
        None => None,
        Some("sn") => Some(NoiseKind::ShotNoise),
        Some("tn") => Some(NoiseKind::TechnicalNoise),
        Some(other) => return Err(parse_err(path, 0, format!("unknown noise kind '{other}'"))),
    };
    let l_eff = take::<f64>(&mut table.meta, "l_eff_m", path)?
        .or(fallback_l_eff_m)
        .ok_or_else(|| parse_err(path, 0, "no l_eff_m metadata and no thickness given"))?;
    let mut points = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        if let Some(prev) = points.last().map(|p: &CorrelationPoint| p.delta_omega_rad_s) {
            if row[0] <= prev {
                return Err(parse_err(path, *line, format!("non-monotone lags: {} follows {prev}", row[0])));
            }
        }
        points.push(CorrelationPoint {
            delta_omega_rad_s: row[0],
            c_hat: row[1],
            stderr: row[2],
        });
    }
    let series = CorrelationSeries::new(points, l_eff).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok((kind, series))
}

/// A frequency scan in one speckle spot with the metadata needed for the
/// correlation fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFile {
    pub meta: BTreeMap<String, String>,
    pub sn: NoisePowerSeries,
    pub tn: NoisePowerSeries,
}

pub fn scan_to_string(scan: &ScanFile) -> String {
    let mut out = String::new();
    write_meta(&mut out, &scan.meta);
    out.push_str(SCAN_HEADER);
    out.push('\n');
    for (r, (sn, tn)) in scan.sn.power.iter().zip(&scan.tn.power).enumerate() {
        for (i, w) in scan.sn.omega_grid.iter().enumerate() {
            let _ = writeln!(out, "{},{r},{},{}", fmt_num(*w), fmt_num(sn[i]), fmt_num(tn[i]));
        }
    }
    out
}

pub fn write_scan_csv(scan: &ScanFile, path: &Path) -> Result<()> {
    fs::write(path, scan_to_string(scan))?;
    Ok(())
}

/// Rows must be grouped by scan index (0, 1, …) with the same increasing
/// frequency grid in every scan.
pub fn read_scan_csv(path: &Path) -> Result<ScanFile> {
    let text = fs::read_to_string(path)?;
    let table = parse_table(path, &text, SCAN_HEADER)?;
    let mut grid: Vec<f64> = Vec::new();
    let mut sn: Vec<Vec<f64>> = Vec::new();
    let mut tn: Vec<Vec<f64>> = Vec::new();
    for (line, row) in &table.rows {
        let scan = row[1];
        if scan < 0.0 || scan.fract() != 0.0 {
            return Err(parse_err(path, *line, format!("invalid scan index {scan}")));
        }
        let scan = scan as usize;
        if scan == sn.len() {
            sn.push(Vec::new());
            tn.push(Vec::new());
        } else if scan + 1 != sn.len() {
            return Err(parse_err(path, *line, format!("scan {scan} out of order")));
        }
        let i = sn[scan].len();
        if scan == 0 {
            if let Some(&prev) = grid.last() {
                if row[0] <= prev {
                    return Err(parse_err(path, *line, format!("non-monotone grid: {} follows {prev}", row[0])));
                }
            }
            grid.push(row[0]);
        } else if grid.get(i) != Some(&row[0]) {
            return Err(parse_err(path, *line, "scan grid differs from the first scan"));
        }
        if row[2] < 0.0 || row[3] < 0.0 {
            return Err(parse_err(path, *line, "negative noise power"));
        }
        sn[scan].push(row[2]);
        tn[scan].push(row[3]);
    }
    if sn.is_empty() {
        return Err(parse_err(path, 0, "scan file has no rows"));
    }
    if let Some(r) = sn.iter().position(|row| row.len() != grid.len()) {
        return Err(parse_err(path, 0, format!("scan {r} is incomplete")));
    }
    Ok(ScanFile {
        meta: table.meta,
        sn: NoisePowerSeries {
            omega_grid: grid.clone(),
            power: sn,
        },
        tn: NoisePowerSeries {
            omega_grid: grid,
            power: tn,
        },
    })
}

/// One fit in the stable report layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub fit: String,
    pub ell_m: Option<f64>,
    pub ell_stderr_m: Option<f64>,
    pub z0_m: Option<f64>,
    #[serde(rename = "D_m2_s")]
    pub d_m2_s: Option<f64>,
    #[serde(rename = "D_stderr_m2_s")]
    pub d_stderr_m2_s: Option<f64>,
    pub kappa: Option<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub n_points: usize,
    pub warnings: Vec<String>,
}

impl From<&FitReport> for FitSummary {
    fn from(r: &FitReport) -> Self {
        let get = |k: &str| r.params.get(k).copied();
        let err = |k: &str| r.stderr.get(k).copied();
        // the joint fit reports one mean free path per noise kind
        let ell_key = if r.params.contains_key("ell_m") { "ell_m" } else { "ell_sn_m" };
        Self {
            fit: r.model.clone(),
            ell_m: get(ell_key),
            ell_stderr_m: err(ell_key),
            z0_m: get("z0_m"),
            d_m2_s: get("D_m2_s"),
            d_stderr_m2_s: err("D_m2_s"),
            kappa: get("kappa"),
            chi2: r.chi2,
            dof: r.dof,
            n_points: r.n_points,
            warnings: r.warnings.clone(),
        }
    }
}

/// Data behind a fit, kept so reports can be re-plotted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FitData {
    Thickness {
        fit: String,
        kind: NoiseKind,
        points: Vec<ThicknessPoint>,
    },
    Correlation {
        fit: String,
        kind: NoiseKind,
        l_eff_m: f64,
        points: Vec<CorrelationPoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub fits: Vec<FitSummary>,
    pub details: Vec<FitReport>,
    pub data: Vec<FitData>,
    pub estimates: BTreeMap<String, McEstimate>,
    pub bootstrap: BTreeMap<String, BootstrapSummary>,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            config,
            fits: Vec::new(),
            details: Vec::new(),
            data: Vec::new(),
            estimates: BTreeMap::new(),
            bootstrap: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_fit(&mut self, report: FitReport, data: FitData) {
        self.fits.push(FitSummary::from(&report));
        self.details.push(report);
        self.data.push(data);
    }

    /// Serialized JSON; fails if any number is not finite.
    pub fn to_json(&self) -> Result<String> {
        if let Some(path) = self.first_non_finite() {
            return Err(Error::InvalidData(format!("non-finite number in report at {path}")));
        }
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    fn first_non_finite(&self) -> Option<String> {
        let bad = |x: f64| !x.is_finite();
        let opt = |x: Option<f64>| x.is_some_and(bad);
        for (i, f) in self.fits.iter().enumerate() {
            let fields = [f.ell_m, f.ell_stderr_m, f.z0_m, f.d_m2_s, f.d_stderr_m2_s, f.kappa];
            if fields.into_iter().any(opt) || bad(f.chi2) {
                return Some(format!("fits[{i}]"));
            }
        }
        for (i, r) in self.details.iter().enumerate() {
            let any = r.params.values().chain(r.stderr.values()).copied().any(bad)
                || r.covariance.iter().flatten().copied().any(bad)
                || bad(r.chi2);
            if any {
                return Some(format!("details[{i}]"));
            }
        }
        for (i, d) in self.data.iter().enumerate() {
            let any = match d {
                FitData::Thickness { points, .. } => points
                    .iter()
                    .any(|p| bad(p.l_m) || bad(p.t_hat) || bad(p.stderr)),
                FitData::Correlation { points, l_eff_m, .. } => {
                    bad(*l_eff_m)
                        || points
                            .iter()
                            .any(|p| bad(p.delta_omega_rad_s) || bad(p.c_hat) || bad(p.stderr))
                }
            };
            if any {
                return Some(format!("data[{i}]"));
            }
        }
        for (k, e) in &self.estimates {
            if bad(e.value) || bad(e.stderr) {
                return Some(format!("estimates.{k}"));
            }
        }
        for (k, b) in &self.bootstrap {
            if b.stderr.values().copied().any(bad) {
                return Some(format!("bootstrap.{k}"));
            }
        }
        None
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub const PLOT_HEADER: &str = "fit,kind,role,x,y,stderr";

/// One row of the plot file. `x` is a thickness (m) for thickness fits and
/// a frequency offset (rad/s) for correlation fits; `role` is `data` or
/// `model`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub fit: String,
    pub kind: NoiseKind,
    pub role: String,
    pub x: f64,
    pub y: f64,
    pub stderr: f64,
}

/// Value of a fitted curve at `x`. Correlation curves need the effective
/// thickness of the series.
pub fn predict(report: &FitReport, kind: NoiseKind, l_eff_m: Option<f64>, x: f64) -> Option<f64> {
    let p = |k: &str| report.params.get(k).copied();
    if report.model.starts_with("total_") {
        let ell = match (report.model.as_str(), kind) {
            ("total_joint", NoiseKind::ShotNoise) => p("ell_sn_m")?,
            ("total_joint", NoiseKind::TechnicalNoise) => p("ell_tn_m")?,
            _ => p("ell_m")?,
        };
        let t = ell / (x + p("z0_m")?);
        return Some(match kind {
            NoiseKind::ShotNoise => t,
            NoiseKind::TechnicalNoise => t * t,
        });
    }
    if report.model.starts_with("correlation_") {
        let l = l_eff_m?;
        let eta = 2.0 * l * l * x / p("D_m2_s")?;
        let f = crate::model::f_eta_unchecked(eta);
        let kappa = p("kappa")?;
        return Some(match kind {
            NoiseKind::ShotNoise => kappa * f,
            NoiseKind::TechnicalNoise => kappa * (f * f + 4.0 * f),
        });
    }
    None
}

const CURVE_POINTS: usize = 101;

/// `(x, y, stderr)` of one data point.
type Xys = (f64, f64, f64);

/// Data and fitted curves of every fit in the given reports.
pub fn plot_rows(reports: &[ReportDocument]) -> Result<Vec<PlotRow>> {
    let mut rows = Vec::new();
    for doc in reports {
        for data in &doc.data {
            let (fit, kind, l_eff, xs): (&str, NoiseKind, Option<f64>, Vec<Xys>) = match data {
                FitData::Thickness { fit, kind, points } => (
                    fit,
                    *kind,
                    None,
                    points.iter().map(|p| (p.l_m, p.t_hat, p.stderr)).collect(),
                ),
                FitData::Correlation {
                    fit,
                    kind,
                    l_eff_m,
                    points,
                } => (
                    fit,
                    *kind,
                    Some(*l_eff_m),
                    points.iter().map(|p| (p.delta_omega_rad_s, p.c_hat, p.stderr)).collect(),
                ),
            };
            let report = doc
                .details
                .iter()
                .find(|r| r.model == fit)
                .ok_or_else(|| Error::InvalidData(format!("no fit '{fit}' for its data")))?;
            for &(x, y, stderr) in &xs {
                rows.push(PlotRow {
                    fit: fit.to_string(),
                    kind,
                    role: "data".into(),
                    x,
                    y,
                    stderr,
                });
            }
            let lo = xs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = xs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                continue;
            }
            for i in 0..CURVE_POINTS {
                let x = lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64;
                let y = predict(report, kind, l_eff, x)
                    .filter(|y| y.is_finite())
                    .ok_or_else(|| Error::InvalidData(format!("cannot evaluate fit '{fit}' at {x}")))?;
                rows.push(PlotRow {
                    fit: fit.to_string(),
                    kind,
                    role: "model".into(),
                    x,
                    y,
                    stderr: 0.0,
                });
            }
        }
    }
    Ok(rows)
}

pub fn plot_to_string(rows: &[PlotRow], sources: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sources={}", sources.join(";"));
    out.push_str(PLOT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.fit,
            r.kind.label(),
            r.role,
            fmt_num(r.x),
            fmt_num(r.y),
            fmt_num(r.stderr)
        );
    }
    out
}

pub fn read_plot_csv(path: &Path) -> Result<Vec<PlotRow>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || (!seen_header && line.starts_with('#')) {
            continue;
        }
        if !seen_header {
            if line != PLOT_HEADER {
                return Err(parse_err(path, line_no, format!("expected header '{PLOT_HEADER}'")));
            }
            seen_header = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(parse_err(path, line_no, format!("expected 6 cells, found {}", cells.len())));
        }
        let kind = match cells[1] {
            "sn" => NoiseKind::ShotNoise,
            "tn" => NoiseKind::TechnicalNoise,
            other => return Err(parse_err(path, line_no, format!("unknown noise kind '{other}'"))),
        };
        if cells[2] != "data" && cells[2] != "model" {
            return Err(parse_err(path, line_no, format!("unknown role '{}'", cells[2])));
        }
        let num = |c: &str| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, line_no, format!("non-numeric cell '{c}'")))
        };
        rows.push(PlotRow {
            fit: cells[0].to_string(),
            kind,
            role: cells[2].to_string(),
            x: num(cells[3])?,
            y: num(cells[4])?,
            stderr: num(cells[5])?,
        });
    }
    if !seen_header {
        return Err(parse_err(path, 1, format!("missing header '{PLOT_HEADER}'")));
    }
    Ok(rows)
}

/// Every `*.csv` file directly inside `dir`, sorted by name.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.csv")
    }

    #[test]
    fn spectrum_round_trip_is_exact() {
        let mut meta = SpectrumMeta::new(SpectrumKind::Reference, "ref");
        meta.thickness_m = Some(12.5e-6);
        meta.seed = 42;
        meta.extra.insert("tech_exponent".into(), "8".into());
        let spec = NoiseSpectrum::new(
            vec![1e5, 1.1e5, 2.0 / 3.0 * 1e6],
            vec![0.1 + 0.2, 1e-300, std::f64::consts::PI],
            meta,
        )
        .unwrap();
        let back = parse_spectrum(p(), &spectrum_to_string(&spec)).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn header_comment_sets_kind() {
        let s = parse_spectrum(p(), "# kind=reference\nomega_hz,psd\n1,2\n2,3\n").unwrap();
        assert_eq!(s.meta.kind, SpectrumKind::Reference);
        assert_eq!(s.psd(), &[2.0, 3.0]);
    }

    #[test]
    fn duplicated_frequency_names_line() {
        let err = parse_spectrum(p(), "# kind=sample\nomega_hz,psd\n1,2\n2,3\n2,4\n").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("non-monotone"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let cases = [
            ("# kind\nomega_hz,psd\n1,2\n", 1),
            ("omega,psd\n1,2\n", 1),
            ("omega_hz,psd\n1,abc\n", 2),
            ("omega_hz,psd\n1,2,3\n", 2),
            ("omega_hz,psd\n1,2\n# late=1\n", 3),
            ("omega_hz,psd\n1,-2\n", 0),
        ];
        for (text, expected) in cases {
            match parse_spectrum(p(), text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn correlation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let series = CorrelationSeries::new(
            (0..5)
                .map(|i| CorrelationPoint {
                    delta_omega_rad_s: i as f64 * 1.5e10,
                    c_hat: 1.0 / (1.0 + i as f64),
                    stderr: 0.01,
                })
                .collect(),
            18e-6,
        )
        .unwrap();
        write_correlation_csv(&series, NoiseKind::TechnicalNoise, &path).unwrap();
        let (kind, back) = read_correlation_csv(&path, None).unwrap();
        assert_eq!(kind, Some(NoiseKind::TechnicalNoise));
        assert_eq!(back, series);
    }

    #[test]
    fn scan_round_trip_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let grid = vec![0.0, 1.0, 2.0];
        let scan = ScanFile {
            meta: [("l_eff_m".to_string(), "1.8e-5".to_string())].into(),
            sn: NoisePowerSeries {
                omega_grid: grid.clone(),
                power: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            },
            tn: NoisePowerSeries {
                omega_grid: grid,
                power: vec![vec![1.0, 4.0, 9.0], vec![16.0, 25.0, 36.0]],
            },
        };
        write_scan_csv(&scan, &path).unwrap();
        assert_eq!(read_scan_csv(&path).unwrap(), scan);

        std::fs::write(&path, format!("{SCAN_HEADER}\n0,1,1,1\n")).unwrap();
        assert!(read_scan_csv(&path).is_err());
    }

    #[test]
    fn report_rejects_non_finite_numbers() {
        let mut doc = ReportDocument::new("test", serde_json::json!({}));
        doc.estimates.insert(
            "x".into(),
            McEstimate {
                value: f64::NAN,
                stderr: 0.0,
                n: 1,
            },
        );
        assert!(doc.to_json().is_err());
        doc.estimates.clear();
        let json = doc.to_json().unwrap();
        assert_eq!(serde_json::from_str::<ReportDocument>(&json).unwrap(), doc);
    }
}
