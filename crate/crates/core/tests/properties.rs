use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use qnoise::detection::{NoiseSpectrum, SpectrumKind, SpectrumMeta};
use qnoise::inference::{
    bootstrap_errors, fit_correlation, fit_total, CorrelationPoint, CorrelationSeries, ThicknessPoint, ThicknessSeries,
};
use qnoise::io;
use qnoise::model::{self, NoiseKind};
use qnoise::stats::stream_rng;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn law(kind: NoiseKind, ell: f64, z0: f64, l: f64) -> f64 {
    let t = ell / (l + z0);
    match kind {
        NoiseKind::ShotNoise => t,
        NoiseKind::TechnicalNoise => t * t,
    }
}

fn noisy_thickness(kind: NoiseKind, scale: f64, noise: f64, n: usize, seed: u64) -> ThicknessSeries {
    let mut rng = stream_rng(seed, 0);
    let points = (0..n)
        .map(|i| {
            let l = (4.0 + 36.0 * i as f64 / (n - 1) as f64) * scale;
            let t = law(kind, 1.1 * scale, 1.5 * scale, l);
            let z: f64 = rng.sample(StandardNormal);
            ThicknessPoint {
                l_m: l,
                t_hat: t * (1.0 + noise * z),
                stderr: t * noise,
            }
        })
        .collect();
    ThicknessSeries::new(points).unwrap()
}

fn noisy_correlation(kind: NoiseKind, l: f64, d: f64, seed: u64) -> CorrelationSeries {
    let mut rng = stream_rng(seed, 1);
    let step = 1.5 * d / (2.0 * l * l);
    let points = (0..20)
        .map(|k| {
            let dw = step * k as f64;
            let f = model::f_eta(model::eta_of(dw, l, d).unwrap()).unwrap();
            let shape = match kind {
                NoiseKind::ShotNoise => f,
                NoiseKind::TechnicalNoise => f * f + 4.0 * f,
            };
            let z: f64 = rng.sample(StandardNormal);
            CorrelationPoint {
                delta_omega_rad_s: dw,
                c_hat: 0.8 * shape + 0.03 * z,
                stderr: 0.03,
            }
        })
        .collect();
    CorrelationSeries::new(points, l).unwrap()
}

#[test]
fn exact_data_round_trips() {
    for kind in [NoiseKind::ShotNoise, NoiseKind::TechnicalNoise] {
        let r = fit_total(&noisy_thickness(kind, 1e-6, 0.0, 8, 0), kind).unwrap();
        assert!(rel(r.param("ell_m"), 1.1e-6) < 1e-6);
        assert!(rel(r.param("z0_m"), 1.5e-6) < 1e-6);

        let l = 18e-6;
        let step = 1.5 * 34.0 / (2.0 * l * l);
        let points = (0..20)
            .map(|k| {
                let eta = 1.5 * k as f64;
                let c = model::corr_model(kind, eta, model::ContrastModel::new(0.8).unwrap()).unwrap();
                CorrelationPoint {
                    delta_omega_rad_s: step * k as f64,
                    c_hat: c,
                    stderr: 0.01,
                }
            })
            .collect();
        let r = fit_correlation(&CorrelationSeries::new(points, l).unwrap(), kind).unwrap();
        assert!(rel(r.param("D_m2_s"), 34.0) < 1e-6);
        assert!(rel(r.param("kappa"), 0.8) < 1e-6);
    }
}

#[test]
fn length_units_scale_out_of_thickness_fits() {
    for kind in [NoiseKind::ShotNoise, NoiseKind::TechnicalNoise] {
        // the same numbers read as micrometres and as metres
        let um = noisy_thickness(kind, 1.0, 0.04, 8, 3);
        let m = ThicknessSeries::new(
            um.points()
                .iter()
                .map(|p| ThicknessPoint {
                    l_m: p.l_m * 1e-6,
                    ..*p
                })
                .collect(),
        )
        .unwrap();
        let a = fit_total(&um, kind).unwrap();
        let b = fit_total(&m, kind).unwrap();
        for key in ["ell_m", "z0_m"] {
            assert!(rel(b.param(key), a.param(key) * 1e-6) < 1e-9, "{key}");
            assert!(rel(b.param_stderr(key), a.param_stderr(key) * 1e-6) < 1e-9, "{key}");
        }
        assert!(rel(b.chi2, a.chi2) < 1e-9);
        assert_eq!(a.dof, b.dof);
    }
}

#[test]
fn length_units_leave_contrast_invariant() {
    // L → cL together with D → c²D leaves every η unchanged
    let a = noisy_correlation(NoiseKind::ShotNoise, 18.0, 34e12, 5);
    let b = CorrelationSeries::new(a.points().to_vec(), 18e-6).unwrap();
    let ra = fit_correlation(&a, NoiseKind::ShotNoise).unwrap();
    let rb = fit_correlation(&b, NoiseKind::ShotNoise).unwrap();
    assert!(rel(rb.param("D_m2_s"), ra.param("D_m2_s") * 1e-12) < 1e-6);
    assert!(rel(rb.param("kappa"), ra.param("kappa")) < 1e-6);
    assert!(rel(rb.chi2, ra.chi2) < 1e-6);
    assert_eq!(ra.dof, rb.dof);
}

#[test]
fn common_error_scale_only_rescales_chi2() {
    let c = 3.0;
    for kind in [NoiseKind::ShotNoise, NoiseKind::TechnicalNoise] {
        let s = noisy_thickness(kind, 1e-6, 0.05, 8, 9);
        let scaled = ThicknessSeries::new(
            s.points()
                .iter()
                .map(|p| ThicknessPoint {
                    stderr: p.stderr * c,
                    ..*p
                })
                .collect(),
        )
        .unwrap();
        let a = fit_total(&s, kind).unwrap();
        let b = fit_total(&scaled, kind).unwrap();
        for key in ["ell_m", "z0_m"] {
            assert!(rel(b.param(key), a.param(key)) < 1e-10);
        }
        assert!(rel(b.chi2, a.chi2 / (c * c)) < 1e-10);

        let s = noisy_correlation(kind, 18e-6, 34.0, 9);
        let scaled = CorrelationSeries::new(
            s.points()
                .iter()
                .map(|p| CorrelationPoint {
                    stderr: p.stderr * c,
                    ..*p
                })
                .collect(),
            s.l_eff_m(),
        )
        .unwrap();
        let a = fit_correlation(&s, kind).unwrap();
        let b = fit_correlation(&scaled, kind).unwrap();
        assert!(rel(b.param("D_m2_s"), a.param("D_m2_s")) < 1e-6);
        assert!(rel(b.param("kappa"), a.param("kappa")) < 1e-6);
        assert!(rel(b.chi2, a.chi2 / (c * c)) < 1e-6);
    }
}

#[test]
fn squared_shot_law_gives_the_same_technical_fit() {
    let sn = noisy_thickness(NoiseKind::ShotNoise, 1e-6, 0.0, 8, 0);
    let tn = ThicknessSeries::new(
        sn.points()
            .iter()
            .map(|p| ThicknessPoint {
                t_hat: p.t_hat * p.t_hat,
                stderr: 2.0 * p.t_hat * p.stderr,
                ..*p
            })
            .collect(),
    )
    .unwrap();
    let a = fit_total(&sn, NoiseKind::ShotNoise).unwrap();
    let b = fit_total(&tn, NoiseKind::TechnicalNoise).unwrap();
    for key in ["ell_m", "z0_m"] {
        assert!(rel(b.param(key), a.param(key)) < 1e-9, "{key}");
    }
}

/// Shot-noise law with additive i.i.d. Gaussian errors of width `sigma`.
fn additive_thickness(sigma: f64, n: usize, seed: u64) -> ThicknessSeries {
    let mut rng = stream_rng(seed, 2);
    let points = (0..n)
        .map(|i| {
            let l = (4.0 + 36.0 * i as f64 / (n - 1) as f64) * 1e-6;
            let z: f64 = rng.sample(StandardNormal);
            ThicknessPoint {
                l_m: l,
                t_hat: law(NoiseKind::ShotNoise, 1.1e-6, 1.5e-6, l) + sigma * z,
                stderr: sigma,
            }
        })
        .collect();
    ThicknessSeries::new(points).unwrap()
}

fn bootstrap_ratios(seed: u64) -> [f64; 2] {
    let s = additive_thickness(2e-3, 50, seed);
    let fit = fit_total(&s, NoiseKind::ShotNoise).unwrap();
    let fitter = |pts: &[ThicknessPoint]| fit_total(&ThicknessSeries::new(pts.to_vec())?, NoiseKind::ShotNoise);
    let b = bootstrap_errors(fitter, s.points(), None, 1000, seed).unwrap();
    assert_eq!(b.n_failed, 0);
    ["ell_m", "z0_m"].map(|key| b.stderr[key] / fit.param_stderr(key))
}

#[test]
fn bootstrap_tracks_the_analytic_error() {
    for seed in 0..5 {
        for (key, ratio) in ["ell_m", "z0_m"].iter().zip(bootstrap_ratios(seed)) {
            assert!((ratio - 1.0).abs() < 0.3, "seed {seed} {key}: bootstrap/analytic = {ratio}");
        }
    }

    let fitter = |pts: &[ThicknessPoint]| fit_total(&ThicknessSeries::new(pts.to_vec())?, NoiseKind::ShotNoise);
    let exact = additive_thickness(0.0, 50, 17);
    let b = bootstrap_errors(fitter, exact.points(), None, 200, 2).unwrap();
    assert!(b.stderr["ell_m"] / 1.1e-6 < 1e-8);
    assert!(bootstrap_errors(fitter, exact.points(), Some(&[0; 50]), 200, 2).is_err());
}

fn spectrum_strategy() -> impl Strategy<Value = NoiseSpectrum> {
    (
        prop::collection::vec((1e-3f64..1e3, 1e-30f64..1e30), 1..60),
        0.0f64..1e7,
        any::<u64>(),
        "[a-z0-9_]{0,12}",
    )
        .prop_map(|(steps, start, seed, id)| {
            let mut w = start;
            let (mut omega, mut psd) = (Vec::new(), Vec::new());
            for (dw, p) in steps {
                omega.push(w);
                psd.push(p);
                w += dw;
            }
            let mut meta = SpectrumMeta::new(SpectrumKind::Reference, id);
            meta.seed = seed;
            meta.thickness_m = Some(start * 1e-12 + 1e-7);
            meta.extra.insert("note".into(), "x=y".into());
            NoiseSpectrum::new(omega, psd, meta).unwrap()
        })
}

proptest! {
    #[test]
    fn spectrum_csv_round_trip(spec in spectrum_strategy()) {
        let text = io::spectrum_to_string(&spec);
        let back = io::parse_spectrum(std::path::Path::new("mem.csv"), &text).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn correlation_csv_round_trip(
        cs in prop::collection::vec((-1.0f64..6.0, 1e-6f64..1.0), 4..40),
        step in 1e6f64..1e14,
        l in 1e-7f64..1e-3,
        tn in any::<bool>(),
    ) {
        let kind = if tn { NoiseKind::TechnicalNoise } else { NoiseKind::ShotNoise };
        let points = cs
            .iter()
            .enumerate()
            .map(|(k, &(c, s))| CorrelationPoint { delta_omega_rad_s: step * k as f64, c_hat: c, stderr: s })
            .collect();
        let series = CorrelationSeries::new(points, l).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        io::write_correlation_csv(&series, kind, &path).unwrap();
        let (k, back) = io::read_correlation_csv(&path, None).unwrap();
        prop_assert_eq!(k, Some(kind));
        prop_assert_eq!(back, series);
    }
}
