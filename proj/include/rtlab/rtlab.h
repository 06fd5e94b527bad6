/* rtlab — Rayleigh-Taylor instability laboratory.
 *
 * C interface to the solver core: opaque handles, integer status codes,
 * thread-local error messages. The CLI is a thin client of this header;
 * JSON run configurations drive the experiment pipelines (see README for
 * the schema).
 */
#ifndef RTLAB_H
#define RTLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtlab_status {
    RTLAB_OK = 0,
    RTLAB_BAD_SPEC,
    RTLAB_NON_POSITIVE_DENSITY,
    RTLAB_SINGULAR_FORMS,
    RTLAB_NO_CONVERGENCE,
    RTLAB_DEGENERATE_MODE,
    RTLAB_INCOMPATIBLE_DIVERGENCE,
    RTLAB_SOLVER_FAILURE,
    RTLAB_DENSITY_UNDERFLOW,
    RTLAB_NOT_CONTRACTING,
    RTLAB_CFL_VIOLATION,
    RTLAB_NEVER_ESCAPES,
    RTLAB_REGIME_VIOLATION,
    RTLAB_IO_ERROR,
    RTLAB_INTERNAL
} rtlab_status;

const char* rtlab_version(void);
const char* rtlab_status_name(rtlab_status status);

/* Message of the most recent failure on the calling thread. */
const char* rtlab_last_error(void);

/* ------------------------------------------------------------------ */
/* Density profiles                                                    */
/* ------------------------------------------------------------------ */

typedef struct rtlab_profile rtlab_profile;

/* family: "affine" [a,b], "exponential" [a,b], "tanh-step" [a,b,c,w]. */
rtlab_status rtlab_profile_create(const char* family, const double* params,
                                  int n_params, double height,
                                  rtlab_profile** out);
/* Monotone cubic through (x3, rho) samples; x3 ascending from 0. */
rtlab_status rtlab_profile_create_tabulated(const double* x3,
                                            const double* rho, int n,
                                            rtlab_profile** out);
rtlab_status rtlab_profile_create_from_csv(const char* path,
                                           rtlab_profile** out);
void rtlab_profile_destroy(rtlab_profile* profile);

rtlab_status rtlab_profile_eval(const rtlab_profile* profile, double x3,
                                double* rho, double* drho, double* ddrho);
/* Hydrostatic pressure -g * integral_0^x3 rho. */
rtlab_status rtlab_profile_pressure(const rtlab_profile* profile, double x3,
                                    double g, double* pressure);
/* satisfied != 0 iff rho' > 0 somewhere; witness maximizes rho'. */
rtlab_status rtlab_profile_check_rt(const rtlab_profile* profile,
                                    int* satisfied, double* witness);

/* ------------------------------------------------------------------ */
/* Normal modes                                                        */
/* ------------------------------------------------------------------ */

typedef struct rtlab_growth_result {
    double lambda;     /* largest growth rate, 0 when stable */
    double alpha_at_0; /* sign decides stability */
    int iterations;
    int converged;
} rtlab_growth_result;

/* Layer reduction at wavenumber k (M3 = 0 and lambda = 0 give pure
 * hydrodynamics). n_modes is the vertical spectral resolution. */
rtlab_status rtlab_growth_rate(const rtlab_profile* profile, double k,
                               double mu, double g, double height, int n_modes,
                               double M3, double lambda,
                               rtlab_growth_result* out);

/* Clamped box of width L: the unreduced 2D streamfunction problem. */
rtlab_status rtlab_box_growth_rate(const rtlab_profile* profile, double L,
                                   double height, int nx_modes, int nz_modes,
                                   double mu, double g,
                                   rtlab_growth_result* out);

/* Largest magnetic quotient over the wavenumber grid, divided by lambda;
 * threshold_field is the |M3| above which no listed wavenumber grows. */
rtlab_status rtlab_critical_field(const rtlab_profile* profile, double lambda,
                                  const double* ks, int nk, double mu,
                                  double g, double height, int n_modes,
                                  double* m_star, double* threshold_field);

/* ------------------------------------------------------------------ */
/* Config-driven pipelines                                             */
/* ------------------------------------------------------------------ */

/* Run a named command ("growth", "critical-field", "make-initial-data",
 * "simulate", "escape", "error-scaling", "gronwall", "mhd-threshold",
 * "certify") with a JSON configuration. CSV/field outputs are written under
 * the config's out_dir; the verdict JSON is returned through verdict_out
 * (free it with rtlab_string_free). */
rtlab_status rtlab_run(const char* command, const char* config_json,
                       char** verdict_out);

/* Default configuration as JSON (the schema reference). */
rtlab_status rtlab_default_config(char** config_out);

void rtlab_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RTLAB_H */
