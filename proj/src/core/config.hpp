#pragma once

#include <string>
#include <vector>

#include "core/normal_modes.hpp"
#include "core/profile.hpp"

namespace rtlab {

/// Run configuration shared by the CLI subcommands and the experiment
/// drivers; parsed from the JSON config file, every field has a usable
/// default. See README for the schema.
struct ExperimentConfig {
    // profile spec: family/params/height, or a two-column CSV for tabulated
    std::string profile_family = "affine";
    std::vector<double> profile_params = {1.0, 1.0};
    double height = 1.0;
    std::string profile_csv;

    // geometry
    std::string geometry_kind = "box-clamped"; // or "layer-periodic"
    double L = 2.0;             // box width, or layer period scale L1
    int n_modes_vertical = 128; // spectral basis sizes
    int n_modes_horizontal = 24;
    int nx = 64, nz = 32;       // simulation grid

    // physics
    double mu = 0.1, g = 9.8;
    double lambda = 0.0, M3 = 0.0;

    // experiment knobs
    std::vector<double> deltas = {1e-3, 3e-4, 1e-4, 3e-5};
    double eps0 = 0.05;
    std::vector<double> k_grid; // explicit wavenumbers; empty -> built-in grid
    double k_max = 20.0;
    int k_count = 40;
    double dt = 1e-3;
    double t_end = 0.0;
    int observe_every = 10;
    int snapshot_every = 0; // 0 = no field snapshots
    double tol = 1e-10;
    int max_iter = 60;
    unsigned seed = 20240810;
    int threads = 1;
    std::string out_dir = "out";
    std::string init = "eigenmode"; // simulate: "eigenmode" or bundle dir
    std::string sim_mode = "nonlinear"; // nonlinear | linear | linear-mhd
    double delta = 1e-3; // amplitude for single-run commands

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;

    void validate() const;
    DensityProfile make_profile() const;
    PhysicalParams make_params() const;
    Geometry make_spectral_geometry() const;
    bool layer() const { return geometry_kind == "layer-periodic"; }

    /// Wavenumber grid: the explicit list when given; otherwise the
    /// admissible lattice n/L1 on the layer, or a uniform sweep to k_max.
    std::vector<double> wavenumbers() const;
};

/// Two-column CSV (x3, rho) reader for tabulated profiles.
DensityProfile load_profile_csv(const std::string& path);

} // namespace rtlab
