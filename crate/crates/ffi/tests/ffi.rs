use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qnoise_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qnoise_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn model_functions_match_the_library() {
    let mut f = 0.0;
    assert_eq!(unsafe { qnoise_f_eta(2.0, &mut f) }, QnoiseStatus::Ok);
    assert_eq!(f, qnoise::model::f_eta(2.0).unwrap());

    let mut eta = 0.0;
    let st = unsafe { qnoise_eta_of(1e9, 10e-6, 34.0, &mut eta) };
    assert_eq!(st, QnoiseStatus::Ok);
    assert!((eta - 2.0 * 1e-10 * 1e9 / 34.0).abs() < 1e-15);

    let mut c = 0.0;
    assert_eq!(unsafe { qnoise_corr_model(QnoiseKind::TechnicalNoise, 0.0, 0.5, &mut c) }, QnoiseStatus::Ok);
    assert!((c - 2.5).abs() < 1e-12);

    let (mut t, mut diffusive) = (0.0, false);
    let st = unsafe { qnoise_total_transmission(QnoiseKind::ShotNoise, 1e-6, 10e-6, 0.0, 0.0, &mut t, &mut diffusive) };
    assert_eq!(st, QnoiseStatus::Ok);
    assert!((t - 0.1).abs() < 1e-12 && diffusive);

    let (mut re, mut im) = (0.0, 0.0);
    let st = unsafe { qnoise_field_covariance(1e12, 10e-6, 34.0, &mut re, &mut im) };
    assert_eq!(st, QnoiseStatus::Ok);
    let eta = 2.0 * 1e-10 * 1e12 / 34.0;
    assert!(((re * re + im * im) - qnoise::model::f_eta(eta).unwrap()).abs() < 1e-12);
}

#[test]
fn errors_set_status_and_message() {
    let mut f = 0.0;
    assert_eq!(unsafe { qnoise_f_eta(-1.0, &mut f) }, QnoiseStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { qnoise_f_eta(1.0, ptr::null_mut()) }, QnoiseStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut c = 0.0;
    assert_eq!(unsafe { qnoise_corr_model(QnoiseKind::ShotNoise, 1.0, 1.5, &mut c) }, QnoiseStatus::Domain);
}

#[test]
fn spectrum_handle_round_trips_through_a_file() {
    let omega = [1.0e6, 2.0e6, 3.0e6];
    let psd = [1.0, 2.0, 3.0];
    let mut spec = ptr::null_mut();
    let st = unsafe { qnoise_spectrum_new(QnoiseSpectrumKind::Sample, omega.as_ptr(), psd.as_ptr(), 3, &mut spec) };
    assert_eq!(st, QnoiseStatus::Ok);
    assert_eq!(unsafe { qnoise_spectrum_len(spec) }, 3);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { qnoise_spectrum_write(spec, path.as_ptr()) }, QnoiseStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { qnoise_spectrum_read(path.as_ptr(), &mut back) }, QnoiseStatus::Ok);
    let (mut o, mut p) = ([0.0; 3], [0.0; 3]);
    assert_eq!(unsafe { qnoise_spectrum_copy(back, o.as_mut_ptr(), p.as_mut_ptr(), 3) }, QnoiseStatus::Ok);
    assert_eq!((o, p), (omega, psd));
    assert_eq!(unsafe { qnoise_spectrum_copy(back, o.as_mut_ptr(), p.as_mut_ptr(), 2) }, QnoiseStatus::Shape);

    let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { qnoise_spectrum_read(missing.as_ptr(), &mut none) }, QnoiseStatus::Io);
    assert!(none.is_null());

    let bad = [2.0e6, 1.0e6, 3.0e6];
    let mut rejected = ptr::null_mut();
    let st = unsafe { qnoise_spectrum_new(QnoiseSpectrumKind::Sample, bad.as_ptr(), psd.as_ptr(), 3, &mut rejected) };
    assert_ne!(st, QnoiseStatus::Ok);
    unsafe {
        qnoise_spectrum_free(spec);
        qnoise_spectrum_free(back);
        qnoise_spectrum_free(ptr::null_mut());
    }
}

#[test]
fn reduction_recovers_both_transmissions() {
    let omega: Vec<f64> = (0..=310).map(|i| 0.1e6 + 1e4 * i as f64).collect();
    let tech: Vec<f64> = omega.iter().map(|w| (1.0e6 / w).powi(8)).collect();
    let reference: Vec<f64> = tech.iter().map(|t| 1.0 + t).collect();
    let sample: Vec<f64> = tech.iter().map(|t| 0.1 + 0.01 * t).collect();
    let (mut r, mut s) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        qnoise_spectrum_new(QnoiseSpectrumKind::Reference, omega.as_ptr(), reference.as_ptr(), omega.len(), &mut r);
        qnoise_spectrum_new(QnoiseSpectrumKind::Sample, omega.as_ptr(), sample.as_ptr(), omega.len(), &mut s);
    }
    let plan = qnoise_band_plan_default();
    assert_eq!(plan.sn_lo_hz, 1.5e6);
    let mut out = QnoiseReduction::default();
    let st = unsafe { qnoise_reduce(s, r, ptr::null(), &plan, 1.0, &mut out) };
    assert_eq!(st, QnoiseStatus::Ok, "{}", last_error());
    assert!((out.t_sn - 0.1).abs() < 1e-9, "{out:?}");
    assert!((out.t_tn - 0.01).abs() < 1e-9, "{out:?}");
    assert!(out.t_tn_raw > out.t_tn);

    let flat = vec![2.0; omega.len()];
    let mut f = ptr::null_mut();
    unsafe { qnoise_spectrum_new(QnoiseSpectrumKind::Reference, omega.as_ptr(), flat.as_ptr(), omega.len(), &mut f) };
    let st = unsafe { qnoise_reduce(s, f, ptr::null(), &plan, 1.0, &mut out) };
    assert_eq!(st, QnoiseStatus::Numerical);
    unsafe {
        qnoise_spectrum_free(r);
        qnoise_spectrum_free(s);
        qnoise_spectrum_free(f);
    }
}

#[test]
fn fits_expose_parameters_and_json() {
    let l: Vec<f64> = (1..=8).map(|i| 5e-6 * i as f64).collect();
    let t: Vec<f64> = l.iter().map(|l| 1e-6 / l).collect();
    let mut report = ptr::null_mut();
    let st = unsafe { qnoise_fit_total(QnoiseKind::ShotNoise, l.as_ptr(), t.as_ptr(), ptr::null(), l.len(), &mut report) };
    assert_eq!(st, QnoiseStatus::Ok, "{}", last_error());
    let (mut ell, mut se) = (0.0, 0.0);
    let name = CString::new("ell_m").unwrap();
    assert_eq!(unsafe { qnoise_fit_report_param(report, name.as_ptr(), &mut ell, &mut se) }, QnoiseStatus::Ok);
    assert!((ell - 1e-6).abs() < 1e-12);
    let nope = CString::new("nope").unwrap();
    assert_eq!(
        unsafe { qnoise_fit_report_param(report, nope.as_ptr(), &mut ell, ptr::null_mut()) },
        QnoiseStatus::InvalidData
    );
    let (mut chi2, mut dof) = (0.0, 0usize);
    assert_eq!(unsafe { qnoise_fit_report_chi2(report, &mut chi2, &mut dof) }, QnoiseStatus::Ok);
    assert_eq!(dof, 6);
    let json = unsafe { qnoise_fit_report_to_json(report) };
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["dof"], 6);
    unsafe {
        qnoise_string_free(json);
        qnoise_fit_report_free(report);
    }

    let eta_step = 1.5;
    let (l_eff, d) = (18e-6, 34.0);
    let dw: Vec<f64> = (0..20).map(|i| i as f64 * eta_step * d / (2.0 * l_eff * l_eff)).collect();
    let c: Vec<f64> = dw
        .iter()
        .map(|&w| 0.9 * qnoise::model::f_eta(qnoise::model::eta_of(w, l_eff, d).unwrap()).unwrap())
        .collect();
    let mut corr = ptr::null_mut();
    let st = unsafe {
        qnoise_fit_correlation(QnoiseKind::ShotNoise, dw.as_ptr(), c.as_ptr(), ptr::null(), dw.len(), l_eff, &mut corr)
    };
    assert_eq!(st, QnoiseStatus::Ok, "{}", last_error());
    let name = CString::new("D_m2_s").unwrap();
    let mut fitted = 0.0;
    assert_eq!(unsafe { qnoise_fit_report_param(corr, name.as_ptr(), &mut fitted, ptr::null_mut()) }, QnoiseStatus::Ok);
    assert!((fitted - d).abs() / d < 1e-6);
    unsafe { qnoise_fit_report_free(corr) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(qnoise_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"qnoise.h\"\n\
         int check(void) {\n\
           double f;\n\
           QnoiseBandPlan plan = qnoise_band_plan_default();\n\
           QnoiseStatus st = qnoise_f_eta(1.0, &f);\n\
           (void)plan;\n\
           return st == QNOISE_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for compiler in ["cc", "c++"] {
        let mut cmd = Command::new(compiler);
        if compiler == "c++" {
            cmd.args(["-x", "c++"]);
        }
        let out = match cmd.arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(&include).arg(&src).output() {
            Ok(o) => o,
            Err(e) => {
                eprintln!("skipping {compiler}: {e}");
                continue;
            }
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
