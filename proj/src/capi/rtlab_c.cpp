#include "rtlab/rtlab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/normal_modes.hpp"
#include "core/profile.hpp"

namespace {

thread_local std::string g_last_error;

rtlab_status to_status(rtlab::ErrorCode code) {
    using rtlab::ErrorCode;
    switch (code) {
        case ErrorCode::Ok: return RTLAB_OK;
        case ErrorCode::BadSpec: return RTLAB_BAD_SPEC;
        case ErrorCode::NonPositiveDensity: return RTLAB_NON_POSITIVE_DENSITY;
        case ErrorCode::SingularForms: return RTLAB_SINGULAR_FORMS;
        case ErrorCode::NoConvergence: return RTLAB_NO_CONVERGENCE;
        case ErrorCode::DegenerateMode: return RTLAB_DEGENERATE_MODE;
        case ErrorCode::IncompatibleDivergence:
            return RTLAB_INCOMPATIBLE_DIVERGENCE;
        case ErrorCode::SolverFailure: return RTLAB_SOLVER_FAILURE;
        case ErrorCode::DensityUnderflow: return RTLAB_DENSITY_UNDERFLOW;
        case ErrorCode::NotContracting: return RTLAB_NOT_CONTRACTING;
        case ErrorCode::CflViolation: return RTLAB_CFL_VIOLATION;
        case ErrorCode::NeverEscapes: return RTLAB_NEVER_ESCAPES;
        case ErrorCode::RegimeViolation: return RTLAB_REGIME_VIOLATION;
        case ErrorCode::IoError: return RTLAB_IO_ERROR;
        case ErrorCode::Internal: return RTLAB_INTERNAL;
    }
    return RTLAB_INTERNAL;
}

template <typename Fn>
rtlab_status guarded(Fn&& fn) {
    try {
        fn();
        return RTLAB_OK;
    } catch (const rtlab::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RTLAB_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return RTLAB_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

struct rtlab_profile {
    rtlab::DensityProfile profile;
};

extern "C" {

const char* rtlab_version(void) { return "rtlab 1.0.0"; }

const char* rtlab_status_name(rtlab_status status) {
    switch (status) {
        case RTLAB_OK: return "Ok";
        case RTLAB_BAD_SPEC: return "BadSpec";
        case RTLAB_NON_POSITIVE_DENSITY: return "NonPositiveDensity";
        case RTLAB_SINGULAR_FORMS: return "SingularForms";
        case RTLAB_NO_CONVERGENCE: return "NoConvergence";
        case RTLAB_DEGENERATE_MODE: return "DegenerateMode";
        case RTLAB_INCOMPATIBLE_DIVERGENCE: return "IncompatibleDivergence";
        case RTLAB_SOLVER_FAILURE: return "SolverFailure";
        case RTLAB_DENSITY_UNDERFLOW: return "DensityUnderflow";
        case RTLAB_NOT_CONTRACTING: return "NotContracting";
        case RTLAB_CFL_VIOLATION: return "CflViolation";
        case RTLAB_NEVER_ESCAPES: return "NeverEscapes";
        case RTLAB_REGIME_VIOLATION: return "RegimeViolation";
        case RTLAB_IO_ERROR: return "IoError";
        case RTLAB_INTERNAL: return "Internal";
    }
    return "Unknown";
}

const char* rtlab_last_error(void) { return g_last_error.c_str(); }

rtlab_status rtlab_profile_create(const char* family, const double* params,
                                  int n_params, double height,
                                  rtlab_profile** out) {
    return guarded([&] {
        if (!family || !out || (n_params > 0 && !params))
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        std::vector<double> p(params, params + n_params);
        *out = new rtlab_profile{
            rtlab::DensityProfile::make(family, p, height)};
    });
}

rtlab_status rtlab_profile_create_tabulated(const double* x3,
                                            const double* rho, int n,
                                            rtlab_profile** out) {
    return guarded([&] {
        if (!x3 || !rho || !out)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        *out = new rtlab_profile{rtlab::DensityProfile::tabulated(
            std::vector<double>(x3, x3 + n), std::vector<double>(rho, rho + n))};
    });
}

rtlab_status rtlab_profile_create_from_csv(const char* path,
                                           rtlab_profile** out) {
    return guarded([&] {
        if (!path || !out)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        *out = new rtlab_profile{rtlab::load_profile_csv(path)};
    });
}

void rtlab_profile_destroy(rtlab_profile* profile) { delete profile; }

rtlab_status rtlab_profile_eval(const rtlab_profile* profile, double x3,
                                double* rho, double* drho, double* ddrho) {
    return guarded([&] {
        if (!profile) rtlab::fail(rtlab::ErrorCode::BadSpec, "null profile");
        if (rho) *rho = profile->profile.rho(x3);
        if (drho) *drho = profile->profile.drho(x3);
        if (ddrho) *ddrho = profile->profile.ddrho(x3);
    });
}

rtlab_status rtlab_profile_pressure(const rtlab_profile* profile, double x3,
                                    double g, double* pressure) {
    return guarded([&] {
        if (!profile || !pressure)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        *pressure = profile->profile.pressure(x3, g);
    });
}

rtlab_status rtlab_profile_check_rt(const rtlab_profile* profile,
                                    int* satisfied, double* witness) {
    return guarded([&] {
        if (!profile) rtlab::fail(rtlab::ErrorCode::BadSpec, "null profile");
        auto rt = profile->profile.check_rt_condition();
        if (satisfied) *satisfied = rt.satisfied ? 1 : 0;
        if (witness) *witness = rt.witness;
    });
}

rtlab_status rtlab_growth_rate(const rtlab_profile* profile, double k,
                               double mu, double g, double height, int n_modes,
                               double M3, double lambda,
                               rtlab_growth_result* out) {
    return guarded([&] {
        if (!profile || !out)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        rtlab::PhysicalParams params;
        params.mu = mu;
        params.g = g;
        params.lambda = lambda;
        params.M3 = M3;
        rtlab::LayerModeSolver solver(
            profile->profile, params,
            rtlab::Geometry::layer(1.0, height, n_modes));
        rtlab::ModeResult m = solver.solve_mhd(k, M3, lambda);
        out->lambda = m.lambda;
        out->alpha_at_0 = m.alpha_at_0;
        out->iterations = m.iterations;
        out->converged = m.converged ? 1 : 0;
    });
}

rtlab_status rtlab_box_growth_rate(const rtlab_profile* profile, double L,
                                   double height, int nx_modes, int nz_modes,
                                   double mu, double g,
                                   rtlab_growth_result* out) {
    return guarded([&] {
        if (!profile || !out)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        rtlab::PhysicalParams params;
        params.mu = mu;
        params.g = g;
        rtlab::BoxModeSolver solver(
            profile->profile, params,
            rtlab::Geometry::box(L, height, nx_modes, nz_modes));
        rtlab::ModeResult m = solver.solve();
        out->lambda = m.lambda;
        out->alpha_at_0 = m.alpha_at_0;
        out->iterations = m.iterations;
        out->converged = m.converged ? 1 : 0;
    });
}

rtlab_status rtlab_critical_field(const rtlab_profile* profile, double lambda,
                                  const double* ks, int nk, double mu,
                                  double g, double height, int n_modes,
                                  double* m_star, double* threshold_field) {
    return guarded([&] {
        if (!profile || !ks || nk < 1)
            rtlab::fail(rtlab::ErrorCode::BadSpec, "null argument");
        rtlab::PhysicalParams params;
        params.mu = mu;
        params.g = g;
        params.lambda = lambda;
        rtlab::LayerModeSolver solver(
            profile->profile, params,
            rtlab::Geometry::layer(1.0, height, n_modes));
        auto rep =
            solver.critical_field(lambda, std::vector<double>(ks, ks + nk));
        if (m_star) *m_star = rep.m_star;
        if (threshold_field) *threshold_field = rep.threshold_field;
    });
}

rtlab_status rtlab_run(const char* command, const char* config_json,
                       char** verdict_out) {
    return guarded([&] {
        if (!command) rtlab::fail(rtlab::ErrorCode::BadSpec, "null command");
        rtlab::ExperimentConfig cfg =
            config_json ? rtlab::ExperimentConfig::from_json_text(config_json)
                        : rtlab::ExperimentConfig{};
        const std::string verdict = rtlab::run_command(command, cfg);
        if (verdict_out) *verdict_out = dup_string(verdict);
    });
}

rtlab_status rtlab_default_config(char** config_out) {
    return guarded([&] {
        if (!config_out) rtlab::fail(rtlab::ErrorCode::BadSpec, "null output");
        *config_out = dup_string(rtlab::ExperimentConfig{}.to_json_text());
    });
}

void rtlab_string_free(char* text) { std::free(text); }

} // extern "C"
