#ifndef QNOISE_H
#define QNOISE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum QnoiseStatus {
  QNOISE_STATUS_OK = 0,
  QNOISE_STATUS_NULL_POINTER = 1,
  QNOISE_STATUS_DOMAIN = 2,
  QNOISE_STATUS_CONFIG = 3,
  QNOISE_STATUS_SHAPE = 4,
  QNOISE_STATUS_INVALID_DATA = 5,
  QNOISE_STATUS_NUMERICAL = 6,
  QNOISE_STATUS_IO = 7,
  QNOISE_STATUS_PARSE = 8,
  QNOISE_STATUS_PANIC = 9,
} QnoiseStatus;

/**
 * Noise kind selector.
 */
typedef enum QnoiseKind {
  QNOISE_KIND_SHOT_NOISE = 0,
  QNOISE_KIND_TECHNICAL_NOISE = 1,
} QnoiseKind;

/**
 * Spectrum role.
 */
typedef enum QnoiseSpectrumKind {
  QNOISE_SPECTRUM_KIND_SAMPLE = 0,
  QNOISE_SPECTRUM_KIND_REFERENCE = 1,
  QNOISE_SPECTRUM_KIND_THERMAL = 2,
} QnoiseSpectrumKind;

/**
 * Opaque fit result.
 */
typedef struct QnoiseFitReport QnoiseFitReport;

/**
 * Opaque noise spectrum.
 */
typedef struct QnoiseSpectrum QnoiseSpectrum;

/**
 * Detection bands in Hz. The exclusion window is used when
 * `has_exclusion` is true.
 */
typedef struct QnoiseBandPlan {
  double tn_lo_hz;
  double tn_hi_hz;
  double sn_lo_hz;
  double sn_hi_hz;
  bool has_exclusion;
  double exclusion_lo_hz;
  double exclusion_hi_hz;
} QnoiseBandPlan;

/**
 * Band estimates of one sample spectrum.
 */
typedef struct QnoiseReduction {
  double t_sn;
  double t_sn_stderr;
  double t_tn;
  double t_tn_stderr;
  double t_sn_raw;
  double t_tn_raw;
  double tn_bias_bound;
  size_t clamped_points;
} QnoiseReduction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *qnoise_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *qnoise_version(void);

/**
 * Correlation kernel `f(η)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_f_eta(double eta, double *out);

/**
 * Dimensionless frequency `η = 2 L_eff² Δω / D` (Δω in rad/s).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_eta_of(double delta_omega_rad_s,
                                double l_eff_m,
                                double diffusivity_m2_s,
                                double *out);

/**
 * Normalized noise correlation with contrast `kappa` in (0, 1].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_corr_model(enum QnoiseKind kind, double eta, double kappa, double *out);

/**
 * Total noise transmission of a slab. `diffusive` is set to false when the
 * sample is too thin for the diffusion result to hold.
 *
 * # Safety
 * `out` and `diffusive` must be valid for writes; `diffusive` may be null.
 */
enum QnoiseStatus qnoise_total_transmission(enum QnoiseKind kind,
                                            double ell_m,
                                            double thickness_m,
                                            double z_front_m,
                                            double z_back_m,
                                            double *out,
                                            bool *diffusive);

/**
 * Normalized field covariance between two optical frequencies.
 *
 * # Safety
 * `re` and `im` must be valid for writes.
 */
enum QnoiseStatus qnoise_field_covariance(double delta_omega_rad_s,
                                          double l_eff_m,
                                          double diffusivity_m2_s,
                                          double *re,
                                          double *im);

/**
 * Spectrum from arrays of `n` frequencies (Hz) and densities.
 *
 * # Safety
 * `omega_hz` and `psd` must hold `n` values; `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_spectrum_new(enum QnoiseSpectrumKind kind,
                                      const double *omega_hz,
                                      const double *psd,
                                      size_t n,
                                      struct QnoiseSpectrum **out);

/**
 * Read a spectrum CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_spectrum_read(const char *path, struct QnoiseSpectrum **out);

/**
 * Write a spectrum CSV file.
 *
 * # Safety
 * `spectrum` must be a live handle; `path` a NUL-terminated string.
 */
enum QnoiseStatus qnoise_spectrum_write(const struct QnoiseSpectrum *spectrum, const char *path);

/**
 * Number of points, 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t qnoise_spectrum_len(const struct QnoiseSpectrum *spectrum);

/**
 * Copy the spectrum into caller arrays of length `n`, which must equal
 * the spectrum length.
 *
 * # Safety
 * `spectrum` must be a live handle; `omega_hz` and `psd` valid for `n`
 * writes.
 */
enum QnoiseStatus qnoise_spectrum_copy(const struct QnoiseSpectrum *spectrum,
                                       double *omega_hz,
                                       double *psd,
                                       size_t n);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void qnoise_spectrum_free(struct QnoiseSpectrum *spectrum);

/**
 * Default detection bands.
 */
struct QnoiseBandPlan qnoise_band_plan_default(void);

/**
 * Thermal subtraction, reference normalization and band estimates of one
 * sample spectrum. `thermal` may be null for a zero detector floor.
 *
 * # Safety
 * Handles must be live (or null where allowed); `plan` readable; `out`
 * valid for writes.
 */
enum QnoiseStatus qnoise_reduce(const struct QnoiseSpectrum *sample,
                                const struct QnoiseSpectrum *reference,
                                const struct QnoiseSpectrum *thermal,
                                const struct QnoiseBandPlan *plan,
                                double shot_level,
                                struct QnoiseReduction *out);

/**
 * Transmission-law fit of `n` thickness points (metres). Pass null
 * `stderr` for an unweighted fit. Parameters: `ell_m`, `z0_m`.
 *
 * # Safety
 * Arrays must hold `n` values; `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_fit_total(enum QnoiseKind kind,
                                   const double *thickness_m,
                                   const double *t_hat,
                                   const double *stderr,
                                   size_t n,
                                   struct QnoiseFitReport **out);

/**
 * Diffusion-constant fit of `n` correlation points starting at zero lag
 * (rad/s). Pass null `stderr` for an unweighted fit. Parameters:
 * `D_m2_s`, `kappa`.
 *
 * # Safety
 * Arrays must hold `n` values; `out` must be valid for writes.
 */
enum QnoiseStatus qnoise_fit_correlation(enum QnoiseKind kind,
                                         const double *delta_omega_rad_s,
                                         const double *c_hat,
                                         const double *stderr,
                                         size_t n,
                                         double l_eff_m,
                                         struct QnoiseFitReport **out);

/**
 * Value and standard error of a named parameter.
 *
 * # Safety
 * `report` must be a live handle, `name` a NUL-terminated string, `value`
 * valid for writes; `stderr` may be null.
 */
enum QnoiseStatus qnoise_fit_report_param(const struct QnoiseFitReport *report,
                                          const char *name,
                                          double *value,
                                          double *stderr);

/**
 * Chi-square and degrees of freedom.
 *
 * # Safety
 * `report` must be a live handle; outputs valid for writes.
 */
enum QnoiseStatus qnoise_fit_report_chi2(const struct QnoiseFitReport *report,
                                         double *chi2,
                                         size_t *dof);

/**
 * Number of warnings attached to the fit.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t qnoise_fit_report_warning_count(const struct QnoiseFitReport *report);

/**
 * The full report as a JSON string, released with [`qnoise_string_free`].
 * Null on failure.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *qnoise_fit_report_to_json(const struct QnoiseFitReport *report);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void qnoise_fit_report_free(struct QnoiseFitReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void qnoise_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNOISE_H */
