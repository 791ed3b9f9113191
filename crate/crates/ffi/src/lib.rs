//! C interface to `qnoise`.
//!
//! Every fallible function returns a [`QnoiseStatus`]; on failure the
//! message is available from [`qnoise_last_error`] on the same thread.
//! Objects are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use qnoise::detection::{self, BandPlan, Interval, NoiseSpectrum, SpectrumKind, SpectrumMeta};
use qnoise::inference::{
    fit_correlation, fit_total, CorrelationPoint, CorrelationSeries, FitReport, ThicknessPoint,
    ThicknessSeries,
};
use qnoise::model::{self, ContrastModel, Geometry, MediumParams, NoiseKind};
use qnoise::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnoiseStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Shape = 4,
    InvalidData = 5,
    Numerical = 6,
    Io = 7,
    Parse = 8,
    Panic = 9,
}

/// Noise kind selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnoiseKind {
    ShotNoise = 0,
    TechnicalNoise = 1,
}

impl From<QnoiseKind> for NoiseKind {
    fn from(k: QnoiseKind) -> Self {
        match k {
            QnoiseKind::ShotNoise => NoiseKind::ShotNoise,
            QnoiseKind::TechnicalNoise => NoiseKind::TechnicalNoise,
        }
    }
}

/// Spectrum role.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnoiseSpectrumKind {
    Sample = 0,
    Reference = 1,
    Thermal = 2,
}

/// Detection bands in Hz. The exclusion window is used when
/// `has_exclusion` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnoiseBandPlan {
    pub tn_lo_hz: f64,
    pub tn_hi_hz: f64,
    pub sn_lo_hz: f64,
    pub sn_hi_hz: f64,
    pub has_exclusion: bool,
    pub exclusion_lo_hz: f64,
    pub exclusion_hi_hz: f64,
}

/// Band estimates of one sample spectrum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QnoiseReduction {
    pub t_sn: f64,
    pub t_sn_stderr: f64,
    pub t_tn: f64,
    pub t_tn_stderr: f64,
    pub t_sn_raw: f64,
    pub t_tn_raw: f64,
    pub tn_bias_bound: f64,
    pub clamped_points: usize,
}

/// Opaque noise spectrum.
pub struct QnoiseSpectrum(NoiseSpectrum);

/// Opaque fit result.
pub struct QnoiseFitReport(FitReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QnoiseStatus {
    match e {
        Error::Domain(_) | Error::DivisionDomain { .. } => QnoiseStatus::Domain,
        Error::Config(_) => QnoiseStatus::Config,
        Error::Shape(_) | Error::GridMismatch(_) | Error::MetadataMismatch(_) => QnoiseStatus::Shape,
        Error::NotPositiveSemidefinite { .. }
        | Error::DegenerateVariance(_)
        | Error::SingularDesign(_)
        | Error::NonConvergence { .. } => QnoiseStatus::Numerical,
        Error::Io(_) => QnoiseStatus::Io,
        Error::Parse { .. } | Error::Json(_) => QnoiseStatus::Parse,
        _ => QnoiseStatus::InvalidData,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> QnoiseStatus
where
    F: FnOnce() -> Result<(), (QnoiseStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QnoiseStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            QnoiseStatus::Panic
        }
    }
}

fn lift(e: Error) -> (QnoiseStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (QnoiseStatus, String) {
    (QnoiseStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (QnoiseStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn array<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (QnoiseStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (QnoiseStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (QnoiseStatus::InvalidData, "path is not UTF-8".to_string()))?;
    Ok(Path::new(s))
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qnoise_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qnoise_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Correlation kernel `f(η)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_f_eta(eta: f64, out: *mut f64) -> QnoiseStatus {
    guard(|| write(out, model::f_eta(eta).map_err(lift)?, "out"))
}

/// Dimensionless frequency `η = 2 L_eff² Δω / D` (Δω in rad/s).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_eta_of(
    delta_omega_rad_s: f64,
    l_eff_m: f64,
    diffusivity_m2_s: f64,
    out: *mut f64,
) -> QnoiseStatus {
    guard(|| {
        let eta = model::eta_of(delta_omega_rad_s, l_eff_m, diffusivity_m2_s).map_err(lift)?;
        write(out, eta, "out")
    })
}

/// Normalized noise correlation with contrast `kappa` in (0, 1].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_corr_model(kind: QnoiseKind, eta: f64, kappa: f64, out: *mut f64) -> QnoiseStatus {
    guard(|| {
        let contrast = ContrastModel::new(kappa).map_err(lift)?;
        write(out, model::corr_model(kind.into(), eta, contrast).map_err(lift)?, "out")
    })
}

/// Total noise transmission of a slab. `diffusive` is set to false when the
/// sample is too thin for the diffusion result to hold.
///
/// # Safety
/// `out` and `diffusive` must be valid for writes; `diffusive` may be null.
#[no_mangle]
pub unsafe extern "C" fn qnoise_total_transmission(
    kind: QnoiseKind,
    ell_m: f64,
    thickness_m: f64,
    z_front_m: f64,
    z_back_m: f64,
    out: *mut f64,
    diffusive: *mut bool,
) -> QnoiseStatus {
    guard(|| {
        // the diffusivity does not enter the total transmission
        let medium = MediumParams::new(ell_m, 1.0).map_err(lift)?;
        let geom = Geometry::new(thickness_m, z_front_m, z_back_m).map_err(lift)?;
        let t = model::total_transmission(kind.into(), &medium, &geom);
        write(out, t.value, "out")?;
        if !diffusive.is_null() {
            diffusive.write(t.diffusive);
        }
        Ok(())
    })
}

/// Normalized field covariance between two optical frequencies.
///
/// # Safety
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_field_covariance(
    delta_omega_rad_s: f64,
    l_eff_m: f64,
    diffusivity_m2_s: f64,
    re: *mut f64,
    im: *mut f64,
) -> QnoiseStatus {
    guard(|| {
        let g = model::field_covariance(delta_omega_rad_s, l_eff_m, diffusivity_m2_s).map_err(lift)?;
        write(re, g.re, "re")?;
        write(im, g.im, "im")
    })
}

/// Spectrum from arrays of `n` frequencies (Hz) and densities.
///
/// # Safety
/// `omega_hz` and `psd` must hold `n` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_new(
    kind: QnoiseSpectrumKind,
    omega_hz: *const f64,
    psd: *const f64,
    n: usize,
    out: *mut *mut QnoiseSpectrum,
) -> QnoiseStatus {
    guard(|| {
        let omega = array(omega_hz, n, "omega_hz")?.to_vec();
        let psd = array(psd, n, "psd")?.to_vec();
        let kind = match kind {
            QnoiseSpectrumKind::Sample => SpectrumKind::Sample,
            QnoiseSpectrumKind::Reference => SpectrumKind::Reference,
            QnoiseSpectrumKind::Thermal => SpectrumKind::Thermal,
        };
        let spec = NoiseSpectrum::new(omega, psd, SpectrumMeta::new(kind, "")).map_err(lift)?;
        write(out, Box::into_raw(Box::new(QnoiseSpectrum(spec))), "out")
    })
}

/// Read a spectrum CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_read(path: *const c_char, out: *mut *mut QnoiseSpectrum) -> QnoiseStatus {
    guard(|| {
        let spec = qnoise::io::read_spectrum_csv(path_arg(path)?).map_err(lift)?;
        write(out, Box::into_raw(Box::new(QnoiseSpectrum(spec))), "out")
    })
}

/// Write a spectrum CSV file.
///
/// # Safety
/// `spectrum` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_write(spectrum: *const QnoiseSpectrum, path: *const c_char) -> QnoiseStatus {
    guard(|| {
        let spec = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        qnoise::io::write_spectrum_csv(&spec.0, path_arg(path)?).map_err(lift)
    })
}

/// Number of points, 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_len(spectrum: *const QnoiseSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copy the spectrum into caller arrays of length `n`, which must equal
/// the spectrum length.
///
/// # Safety
/// `spectrum` must be a live handle; `omega_hz` and `psd` valid for `n`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_copy(
    spectrum: *const QnoiseSpectrum,
    omega_hz: *mut f64,
    psd: *mut f64,
    n: usize,
) -> QnoiseStatus {
    guard(|| {
        let spec = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.0;
        if n != spec.len() {
            return Err((
                QnoiseStatus::Shape,
                format!("buffer holds {n} points, spectrum has {}", spec.len()),
            ));
        }
        if omega_hz.is_null() || psd.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(spec.omega_hz().as_ptr(), omega_hz, n);
        ptr::copy_nonoverlapping(spec.psd().as_ptr(), psd, n);
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnoise_spectrum_free(spectrum: *mut QnoiseSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Default detection bands.
#[no_mangle]
pub extern "C" fn qnoise_band_plan_default() -> QnoiseBandPlan {
    let p = BandPlan::default();
    let ex = p.exclusions[0];
    QnoiseBandPlan {
        tn_lo_hz: p.tn_band.lo,
        tn_hi_hz: p.tn_band.hi,
        sn_lo_hz: p.sn_band.lo,
        sn_hi_hz: p.sn_band.hi,
        has_exclusion: true,
        exclusion_lo_hz: ex.lo,
        exclusion_hi_hz: ex.hi,
    }
}

fn band_plan(p: &QnoiseBandPlan) -> qnoise::Result<BandPlan> {
    let exclusions = if p.has_exclusion {
        vec![Interval::new(p.exclusion_lo_hz, p.exclusion_hi_hz)?]
    } else {
        Vec::new()
    };
    BandPlan::new(
        Interval::new(p.tn_lo_hz, p.tn_hi_hz)?,
        Interval::new(p.sn_lo_hz, p.sn_hi_hz)?,
        exclusions,
    )
}

/// Thermal subtraction, reference normalization and band estimates of one
/// sample spectrum. `thermal` may be null for a zero detector floor.
///
/// # Safety
/// Handles must be live (or null where allowed); `plan` readable; `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_reduce(
    sample: *const QnoiseSpectrum,
    reference: *const QnoiseSpectrum,
    thermal: *const QnoiseSpectrum,
    plan: *const QnoiseBandPlan,
    shot_level: f64,
    out: *mut QnoiseReduction,
) -> QnoiseStatus {
    guard(|| {
        let sample = &sample.as_ref().ok_or_else(|| null("sample"))?.0;
        let reference = &reference.as_ref().ok_or_else(|| null("reference"))?.0;
        let plan = band_plan(plan.as_ref().ok_or_else(|| null("plan"))?).map_err(lift)?;
        let zero;
        let thermal = match thermal.as_ref() {
            Some(t) => &t.0,
            None => {
                let mut t = detection::synth_thermal(reference.omega_hz(), 0.0, 0.0, 0).map_err(lift)?;
                t.meta.rbw_hz = reference.meta.rbw_hz;
                t.meta.vbw_hz = reference.meta.vbw_hz;
                zero = t;
                &zero
            }
        };
        let r = detection::reduce_measurement(sample, reference, thermal, &plan, shot_level).map_err(lift)?;
        write(
            out,
            QnoiseReduction {
                t_sn: r.t_sn_corrected.value,
                t_sn_stderr: r.t_sn_corrected.stderr,
                t_tn: r.t_tn_corrected.value,
                t_tn_stderr: r.t_tn_corrected.stderr,
                t_sn_raw: r.t_sn_hat.value,
                t_tn_raw: r.t_tn_hat.value,
                tn_bias_bound: r.tn_bias_bound,
                clamped_points: r.clamped_points,
            },
            "out",
        )
    })
}

/// Transmission-law fit of `n` thickness points (metres). Pass null
/// `stderr` for an unweighted fit. Parameters: `ell_m`, `z0_m`.
///
/// # Safety
/// Arrays must hold `n` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_total(
    kind: QnoiseKind,
    thickness_m: *const f64,
    t_hat: *const f64,
    stderr: *const f64,
    n: usize,
    out: *mut *mut QnoiseFitReport,
) -> QnoiseStatus {
    guard(|| {
        let l = array(thickness_m, n, "thickness_m")?;
        let t = array(t_hat, n, "t_hat")?;
        let s = if stderr.is_null() { None } else { Some(array(stderr, n, "stderr")?) };
        let points = (0..n)
            .map(|i| ThicknessPoint {
                l_m: l[i],
                t_hat: t[i],
                stderr: s.map_or(0.0, |s| s[i]),
            })
            .collect();
        let series = ThicknessSeries::new(points).map_err(lift)?;
        let report = fit_total(&series, kind.into()).map_err(lift)?;
        write(out, Box::into_raw(Box::new(QnoiseFitReport(report))), "out")
    })
}

/// Diffusion-constant fit of `n` correlation points starting at zero lag
/// (rad/s). Pass null `stderr` for an unweighted fit. Parameters:
/// `D_m2_s`, `kappa`.
///
/// # Safety
/// Arrays must hold `n` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_correlation(
    kind: QnoiseKind,
    delta_omega_rad_s: *const f64,
    c_hat: *const f64,
    stderr: *const f64,
    n: usize,
    l_eff_m: f64,
    out: *mut *mut QnoiseFitReport,
) -> QnoiseStatus {
    guard(|| {
        let dw = array(delta_omega_rad_s, n, "delta_omega_rad_s")?;
        let c = array(c_hat, n, "c_hat")?;
        let s = if stderr.is_null() { None } else { Some(array(stderr, n, "stderr")?) };
        let points = (0..n)
            .map(|i| CorrelationPoint {
                delta_omega_rad_s: dw[i],
                c_hat: c[i],
                stderr: s.map_or(0.0, |s| s[i]),
            })
            .collect();
        let series = CorrelationSeries::new(points, l_eff_m).map_err(lift)?;
        let report = fit_correlation(&series, kind.into()).map_err(lift)?;
        write(out, Box::into_raw(Box::new(QnoiseFitReport(report))), "out")
    })
}

/// Value and standard error of a named parameter.
///
/// # Safety
/// `report` must be a live handle, `name` a NUL-terminated string, `value`
/// valid for writes; `stderr` may be null.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_report_param(
    report: *const QnoiseFitReport,
    name: *const c_char,
    value: *mut f64,
    stderr: *mut f64,
) -> QnoiseStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_string_lossy();
        let v = *r.params.get(name.as_ref()).ok_or_else(|| {
            (
                QnoiseStatus::InvalidData,
                format!("no parameter '{name}'; available: {}", r.param_names.join(", ")),
            )
        })?;
        write(value, v, "value")?;
        if !stderr.is_null() {
            stderr.write(r.stderr.get(name.as_ref()).copied().unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// Chi-square and degrees of freedom.
///
/// # Safety
/// `report` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_report_chi2(
    report: *const QnoiseFitReport,
    chi2: *mut f64,
    dof: *mut usize,
) -> QnoiseStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        write(chi2, r.chi2, "chi2")?;
        write(dof, r.dof, "dof")
    })
}

/// Number of warnings attached to the fit.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_report_warning_count(report: *const QnoiseFitReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.warnings.len())
}

/// The full report as a JSON string, released with [`qnoise_string_free`].
/// Null on failure.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_report_to_json(report: *const QnoiseFitReport) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let json = serde_json::to_string(r).map_err(|e| (QnoiseStatus::Parse, e.to_string()))?;
        out = CString::new(json)
            .map_err(|e| (QnoiseStatus::InvalidData, e.to_string()))?
            .into_raw();
        Ok(())
    });
    if status == QnoiseStatus::Ok {
        out
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnoise_fit_report_free(report: *mut QnoiseFitReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnoise_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
