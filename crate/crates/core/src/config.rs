//! Run configuration.
//!
//! Values come from command-line flags, then a TOML file, then the
//! `QNOISE_SEED` environment variable (seed only), then defaults. Numbers in
//! the file are read in the file's own `units`; numbers on the command line
//! in the effective units (`--units`, else the file's, else `lab`). The
//! resolved [`RunConfig`] is always SI.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{BandPlan, InputNoiseModel, Interval, Spike};
use crate::error::{Error, Result};
use crate::model::{Geometry, MediumParams};

pub const SEED_ENV: &str = "QNOISE_SEED";

/// Units of user-facing numbers. Lengths are μm (lab) or m (si);
/// detection frequencies MHz or Hz; optical frequency steps THz or Hz,
/// converted to angular frequency internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Si,
    #[default]
    Lab,
}

impl Units {
    pub fn length_m(self, x: f64) -> f64 {
        match self {
            Units::Si => x,
            Units::Lab => x / 1e6,
        }
    }

    pub fn rf_hz(self, x: f64) -> f64 {
        match self {
            Units::Si => x,
            Units::Lab => x * 1e6,
        }
    }

    pub fn optical_rad_s(self, x: f64) -> f64 {
        let hz = match self {
            Units::Si => x,
            Units::Lab => x * 1e12,
        };
        2.0 * std::f64::consts::PI * hz
    }

    fn interval(self, [lo, hi]: [f64; 2]) -> Result<Interval> {
        Interval::new(self.rf_hz(lo), self.rf_hz(hi))
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "si" => Ok(Units::Si),
            "lab" => Ok(Units::Lab),
            other => Err(format!("unknown units '{other}' (expected si or lab)")),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Si => "si",
            Units::Lab => "lab",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub units: Option<Units>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub bands: BandsSection,
    #[serde(default)]
    pub medium: MediumSection,
    #[serde(default)]
    pub total: TotalSection,
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsSection {
    pub sn: Option<[f64; 2]>,
    pub tn: Option<[f64; 2]>,
    pub exclude: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub ell: Option<f64>,
    pub diffusivity: Option<f64>,
    pub z_front: Option<f64>,
    pub z_back: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TotalSection {
    pub thicknesses: Option<Vec<f64>>,
    pub positions: Option<usize>,
    pub n_channels: Option<usize>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub n_points: Option<usize>,
    pub thermal_level: Option<f64>,
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub shot_level: Option<f64>,
    pub tech_amplitude: Option<f64>,
    pub tech_corner: Option<f64>,
    pub tech_exponent: Option<f64>,
    /// `[center, width, height]` per spike.
    pub spikes: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub thickness: Option<f64>,
    pub n_steps: Option<usize>,
    pub step: Option<f64>,
    pub n_scans: Option<usize>,
    pub spot_transmission: Option<f64>,
    pub tech_level: Option<f64>,
    pub jitter: Option<f64>,
    pub n_lags: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub joint: Option<bool>,
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub tolerance_scale: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Command-line values, in the effective units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub units: Option<Units>,
    pub out: Option<PathBuf>,
    pub sn_band: Option<[f64; 2]>,
    pub tn_band: Option<[f64; 2]>,
    pub exclude: Option<Vec<[f64; 2]>>,
    /// Mean free path in metres, independent of `units`.
    pub ell_m: Option<f64>,
    pub diffusivity: Option<f64>,
    pub thicknesses: Option<Vec<f64>>,
    pub positions: Option<usize>,
    pub n_channels: Option<usize>,
    pub scan_thickness: Option<f64>,
    pub n_steps: Option<usize>,
    pub step: Option<f64>,
    pub n_scans: Option<usize>,
    pub n_lags: Option<usize>,
    pub joint: Option<bool>,
    pub bootstrap: Option<usize>,
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalSettings {
    pub thicknesses_m: Vec<f64>,
    pub positions: usize,
    pub n_channels: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub n_points: usize,
    pub thermal_level: f64,
    pub jitter_rel: f64,
    pub input: InputNoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub thickness_m: f64,
    pub n_steps: usize,
    pub step_rad_s: f64,
    pub n_scans: usize,
    pub spot_transmission: f64,
    pub tech_level: f64,
    pub jitter_rel: f64,
    pub n_lags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub joint: bool,
    pub bootstrap: usize,
}

/// Fully resolved configuration, SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub units: Units,
    pub out: PathBuf,
    pub bands: BandPlan,
    pub medium: MediumParams,
    pub z_front_m: f64,
    pub z_back_m: f64,
    pub total: TotalSettings,
    pub scan: ScanSettings,
    pub fit: FitSettings,
    pub tolerance_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(&FileConfig::default(), &Overrides::default(), None)
            .expect("defaults are valid")
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::config(format!("{name} must be > 0, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::config(format!("{name} must be >= 0, got {x}")))
    }
}

impl RunConfig {
    /// Merge flags, file and environment seed over the defaults.
    pub fn resolve(file: &FileConfig, flags: &Overrides, env_seed: Option<&str>) -> Result<Self> {
        let fu = file.units.unwrap_or_default();
        let units = flags.units.or(file.units).unwrap_or_default();
        // a value from the flags (in `units`) or the file (in `fu`)
        let pick = |flag: Option<f64>, from_file: Option<f64>, conv: fn(Units, f64) -> f64, default: f64| {
            flag.map(|x| conv(units, x))
                .or(from_file.map(|x| conv(fu, x)))
                .unwrap_or(default)
        };
        let plain = |x: Option<f64>, y: Option<f64>, default: f64| x.or(y).unwrap_or(default);

        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::config(format!("{SEED_ENV}='{s}' is not a non-negative integer")))
            })
            .transpose()?;
        let seed = flags.seed.or(file.seed).or(env_seed).unwrap_or(0);

        let default_bands = BandPlan::default();
        let band = |flag: Option<[f64; 2]>, from_file: Option<[f64; 2]>, default: Interval| -> Result<Interval> {
            match (flag, from_file) {
                (Some(b), _) => units.interval(b),
                (None, Some(b)) => fu.interval(b),
                (None, None) => Ok(default),
            }
        };
        let exclusions = match (&flags.exclude, &file.bands.exclude) {
            (Some(ex), _) => ex.iter().map(|&b| units.interval(b)).collect::<Result<Vec<_>>>()?,
            (None, Some(ex)) => ex.iter().map(|&b| fu.interval(b)).collect::<Result<Vec<_>>>()?,
            (None, None) => default_bands.exclusions.clone(),
        };
        let bands = BandPlan::new(
            band(flags.tn_band, file.bands.tn, default_bands.tn_band)?,
            band(flags.sn_band, file.bands.sn, default_bands.sn_band)?,
            exclusions,
        )?;

        let m = &file.medium;
        let medium = MediumParams::new(
            flags.ell_m.or(m.ell.map(|x| fu.length_m(x))).unwrap_or(1e-6),
            plain(flags.diffusivity, m.diffusivity, 34.0),
        )?;
        let z_front_m = non_negative("z_front", pick(None, m.z_front, Units::length_m, 0.0))?;
        let z_back_m = non_negative("z_back", pick(None, m.z_back, Units::length_m, 0.0))?;

        let t = &file.total;
        let thicknesses_m: Vec<f64> = match (&flags.thicknesses, &t.thicknesses) {
            (Some(v), _) => v.iter().map(|&x| units.length_m(x)).collect(),
            (None, Some(v)) => v.iter().map(|&x| fu.length_m(x)).collect(),
            (None, None) => vec![5e-6, 10e-6, 15e-6, 20e-6],
        };
        if thicknesses_m.is_empty() {
            return Err(Error::config("no thicknesses given"));
        }
        for &l in &thicknesses_m {
            Geometry::new(l, z_front_m, z_back_m)?;
        }
        let i = &file.input;
        let d_in = InputNoiseModel::default();
        let input = InputNoiseModel {
            shot_level: i.shot_level.unwrap_or(d_in.shot_level),
            tech_amplitude: i.tech_amplitude.unwrap_or(d_in.tech_amplitude),
            tech_corner_hz: i.tech_corner.map(|x| fu.rf_hz(x)).unwrap_or(d_in.tech_corner_hz),
            tech_exponent: i.tech_exponent.unwrap_or(d_in.tech_exponent),
            spikes: match &i.spikes {
                None => d_in.spikes,
                Some(v) => v
                    .iter()
                    .map(|&[c, w, h]| Spike {
                        center_hz: fu.rf_hz(c),
                        width_hz: fu.rf_hz(w),
                        height: h,
                    })
                    .collect(),
            },
        };
        input.validate()?;
        let total = TotalSettings {
            thicknesses_m,
            positions: flags.positions.or(t.positions).unwrap_or(8),
            n_channels: flags.n_channels.or(t.n_channels).unwrap_or(1000),
            f_min_hz: positive("f_min", pick(None, t.f_min, Units::rf_hz, 0.1e6))?,
            f_max_hz: positive("f_max", pick(None, t.f_max, Units::rf_hz, 3.2e6))?,
            n_points: t.n_points.unwrap_or(311),
            thermal_level: non_negative("thermal_level", t.thermal_level.unwrap_or(0.5))?,
            jitter_rel: non_negative("total jitter", t.jitter.unwrap_or(0.02))?,
            input,
        };
        if total.positions == 0 || total.n_channels == 0 {
            return Err(Error::config("positions and n_channels must be >= 1"));
        }
        if total.f_max_hz <= total.f_min_hz || total.n_points < 2 {
            return Err(Error::config("detection grid needs f_max > f_min and >= 2 points"));
        }

        let s = &file.scan;
        let scan = ScanSettings {
            thickness_m: positive(
                "scan thickness",
                pick(flags.scan_thickness, s.thickness, Units::length_m, 18e-6),
            )?,
            n_steps: flags.n_steps.or(s.n_steps).unwrap_or(200),
            step_rad_s: positive("scan step", pick(flags.step, s.step, Units::optical_rad_s, 2.0 * std::f64::consts::PI * 0.5e12))?,
            n_scans: flags.n_scans.or(s.n_scans).unwrap_or(400),
            spot_transmission: positive("spot_transmission", s.spot_transmission.unwrap_or(1e-4))?,
            tech_level: non_negative("tech_level", s.tech_level.unwrap_or(100.0))?,
            jitter_rel: non_negative("scan jitter", s.jitter.unwrap_or(0.0))?,
            n_lags: flags.n_lags.or(s.n_lags).unwrap_or(20),
        };
        if scan.n_steps < 4 || scan.n_scans == 0 {
            return Err(Error::config("a scan needs >= 4 steps and >= 1 scan"));
        }

        let fit = FitSettings {
            joint: flags.joint.or(file.fit.joint).unwrap_or(false),
            bootstrap: flags.bootstrap.or(file.fit.bootstrap).unwrap_or(0),
        };
        if fit.bootstrap != 0 && fit.bootstrap < crate::inference::MIN_RESAMPLES {
            return Err(Error::config(format!(
                "bootstrap needs 0 (off) or >= {} resamples",
                crate::inference::MIN_RESAMPLES
            )));
        }
        let tolerance_scale = non_negative(
            "tolerance_scale",
            flags.tolerance_scale.or(file.verify.tolerance_scale).unwrap_or(1.0),
        )?;

        Ok(Self {
            seed,
            units,
            out: flags
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("qnoise-out")),
            bands,
            medium,
            z_front_m,
            z_back_m,
            total,
            scan,
            fit,
            tolerance_scale,
        })
    }

    pub fn scan_geometry(&self) -> Result<Geometry> {
        Geometry::new(self.scan.thickness_m, self.z_front_m, self.z_back_m)
    }

    /// Echo for reports.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.seed, 0);
        assert_eq!(c.units, Units::Lab);
        assert_eq!(c.bands, BandPlan::default());
        assert!((c.scan.step_rad_s - std::f64::consts::PI * 1e12).abs() < 1.0);
        assert_eq!(c.total.thicknesses_m.len(), 4);
    }

    #[test]
    fn precedence_flag_file_env_default() {
        let file = FileConfig::parse("seed = 7\n").unwrap();
        let flags = Overrides {
            seed: Some(3),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&file, &flags, Some("9")).unwrap().seed, 3);
        assert_eq!(RunConfig::resolve(&file, &Overrides::default(), Some("9")).unwrap().seed, 7);
        let empty = FileConfig::default();
        assert_eq!(RunConfig::resolve(&empty, &Overrides::default(), Some("9")).unwrap().seed, 9);
        assert!(RunConfig::resolve(&empty, &Overrides::default(), Some("x")).is_err());
    }

    #[test]
    fn file_and_flag_units_are_independent() {
        let file = FileConfig::parse(
            "units = \"si\"\n[medium]\nell = 2e-6\n[bands]\nsn = [1.6e6, 2.9e6]\n",
        )
        .unwrap();
        let flags = Overrides {
            units: Some(Units::Lab),
            tn_band: Some([0.3, 0.8]),
            ..Default::default()
        };
        let c = RunConfig::resolve(&file, &flags, None).unwrap();
        assert_eq!(c.medium.ell(), 2e-6);
        assert_eq!(c.bands.sn_band, Interval::new(1.6e6, 2.9e6).unwrap());
        assert!((c.bands.tn_band.lo - 0.3e6).abs() < 1e-6);
        assert_eq!(c.units, Units::Lab);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(FileConfig::parse("bogus = 1\n").is_err());
        let bad = [
            "[medium]\nell = -1\n",
            "[bands]\nsn = [3.0, 1.0]\n",
            "[bands]\ntn = [1.0, 2.0]\n",
            "[total]\nthicknesses = []\n",
            "[fit]\nbootstrap = 10\n",
        ];
        for text in bad {
            let f = FileConfig::parse(text).unwrap();
            assert!(RunConfig::resolve(&f, &Overrides::default(), None).is_err(), "{text}");
        }
    }
}
