#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/config.hpp"
#include "core/grid_modes.hpp"
#include "core/initial_data.hpp"
#include "core/sim.hpp"

namespace rtlab {

/// Least-squares line through (x, y) samples with an R^2 and a verdict
/// against |slope - target| <= tolerance.
struct ScalingFit {
    std::vector<std::pair<double, double>> samples;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    double target = 0.0, tolerance = 0.0;
    bool pass = false;
};

ScalingFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                    double target, double tolerance);

struct EscapeRow {
    double delta = 0.0;
    double t_rho = -1.0, t_uh = -1.0, t_u3 = -1.0; // first crossings of eps
    double t_escape = -1.0;                        // last of the three
    double t_predicted = 0.0;                      // ln(eps0/delta)/Lambda
    bool crossed = false;
};

struct EscapeResult {
    double lambda_grid = 0.0, lambda_spectral = 0.0;
    double m0 = 0.0, eps = 0.0, eps0 = 0.0;
    std::vector<EscapeRow> rows;
    ScalingFit fit; // t_escape vs ln(1/delta), target 1/Lambda within 5%
    bool monotone = false;
    bool pass = false;
    std::string to_json() const;
};

EscapeResult escape_time_experiment(const ExperimentConfig& cfg);

struct ErrorScalingResult {
    double lambda_grid = 0.0;
    std::vector<double> taus; // rescaled times Lambda t
    struct TauFit {
        double tau = 0.0;
        ScalingFit l1, l2; // log diff vs log delta, target 1.5 +- 0.1
    };
    std::vector<TauFit> fits;
    ScalingFit growth_in_t; // log diff vs t at fixed delta, target 1.5 Lambda
    std::vector<std::string> warnings; // regime violations (excluded samples)
    bool pass = false;
    std::string to_json() const;
};

ErrorScalingResult error_scaling_experiment(const ExperimentConfig& cfg);

struct GronwallResult {
    double lambda = 0.0;
    double c_fit = 0.0;
    double c_fit_half_dt = 0.0;
    double c_fit_small_delta = 0.0;
    bool finite = false;
    bool stable = false; // < 2x variation under refinement
    std::string to_json() const;
};

GronwallResult gronwall_property_check(const ExperimentConfig& cfg);

struct MhdThresholdResult {
    double spectral_threshold = 0.0;  // critical_field over the lattice
    double dynamical_threshold = 0.0; // bisection on stepper growth
    double gap_rel = 0.0;
    bool lambda_monotone = false;
    bool zero_field_matches_hydro = false;
    bool magnetic_norms_grow = false;
    struct Row {
        double M3 = 0.0;
        double lambda_grid = 0.0;
        double tail_slope = 0.0;
        bool growing = false;
    };
    std::vector<Row> rows;
    bool pass = false;
    std::string to_json() const;
};

MhdThresholdResult mhd_threshold_experiment(const ExperimentConfig& cfg);

struct Certificate {
    bool pass = false;
    std::string failed_stage; // empty when pass
    bool rt_condition = false;
    double rt_witness = 0.0;
    double lambda_spectral = 0.0, lambda_grid = 0.0;
    double delta = 0.0;
    double interior_residual = 0.0, boundary_residual = 0.0;
    double m0 = 0.0, eps = 0.0;
    double t_escape = -1.0, t_predicted = 0.0;
    bool crossings = false;
    std::string to_json() const;
};

Certificate certify_instability(const ExperimentConfig& cfg);

// CLI-facing drivers: run and write CSV/JSON outputs into cfg.out_dir,
// returning the verdict JSON.
std::string run_growth_command(const ExperimentConfig& cfg);
std::string run_critical_field_command(const ExperimentConfig& cfg);
std::string run_make_initial_data_command(const ExperimentConfig& cfg);
std::string run_simulate_command(const ExperimentConfig& cfg);
std::string run_escape_command(const ExperimentConfig& cfg);
std::string run_error_scaling_command(const ExperimentConfig& cfg);
std::string run_gronwall_command(const ExperimentConfig& cfg);
std::string run_mhd_threshold_command(const ExperimentConfig& cfg);
std::string run_certify_command(const ExperimentConfig& cfg);
std::string run_command(const std::string& name, const ExperimentConfig& cfg);

} // namespace rtlab
