#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <vector>

#include "core/face_index.hpp"
#include "core/mac_grid.hpp"
#include "core/poisson.hpp"
#include "core/profile.hpp"

namespace rtlab {

enum class SimMode { Nonlinear, Linear, LinearMhd };

/// Grid fields at one time instant. rho is the density perturbation at
/// centers; u lives on faces with no-slip walls; q is the mean-zero
/// projection pressure; N is the magnetic perturbation (MHD linear mode).
struct FieldState {
    double t = 0.0;
    Array2D rho;
    VectorField u;
    Array2D q;
    MagField n;
    double div_max = 0.0; // post-projection divergence of the last step
};

struct EnergyRow {
    double t = 0.0;
    double l1_rho = 0.0, l1_uh = 0.0, l1_u3 = 0.0;
    double l2_rho = 0.0, l2_u = 0.0, l2_rho_u = 0.0;
    double h1_u = 0.0, h2_u_proxy = 0.0;
    double kinetic = 0.0, dissipation = 0.0, buoyancy_flux = 0.0;
    double e_proxy = 0.0, d_proxy = 0.0;
    double l1_nh = 0.0, l1_n3 = 0.0;
    double mass = 0.0;
    double div_max = 0.0;
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
};

struct StateNorms {
    double l1_rho = 0.0, l1_uh = 0.0, l1_u3 = 0.0;
    double l2_rho = 0.0, l2_u = 0.0;
    double diff_l1 = 0.0, diff_l2 = 0.0; // against a reference state
};

StateNorms compute_norms(const MacGrid& g, const FieldState& s,
                         const FieldState* reference = nullptr);

/// Fixed-step time integration of the nonlinear perturbation system, its
/// linearization, and the linearized MHD variant: conservative MUSCL density
/// advection, semi-implicit viscous step (frozen-profile factorization plus
/// diagonal refinement), pressure projection with the variable-coefficient
/// Poisson solve.
class Simulator {
  public:
    struct Config {
        SimMode mode = SimMode::Nonlinear;
        double dt = 1e-3;
        double M3 = 0.0;     // vertical field (linear-MHD mode)
        double lambda = 0.0; // permeability factor
        double cfl_advective = 0.45;
        double cfl_viscous = 2.0; // semi-implicit treatment tolerates > 1
        double projection_refactor_drift = 0.08;
    };

    Simulator(const MacGrid& grid, const DensityProfile& profile,
              const PhysicalParams& params, Config config);

    FieldState zero_state() const;
    const MacGrid& grid() const { return grid_; }
    const Config& config() const { return config_; }
    const Array2D& rho_bar() const { return rho_bar_c_; }

    /// Largest admissible dt for the state under the configured safety
    /// factors: c_a dx/|u|max and c_v dx^2 min(rho)/mu (plus the Alfven
    /// limit in MHD mode).
    double cfl_limit(const FieldState& s) const;

    /// Advance one step of the configured mode. Raises CflViolation when dt
    /// exceeds the limit and DensityUnderflow when rho + rho_bar loses
    /// positivity (both carry the failure time).
    void step(FieldState& s);

    using Observer = std::function<void(const FieldState&, const EnergyRow&)>;

    /// Fixed-step run to t_end with report rows every observe_every steps
    /// (and at the final step). t_end = 0 returns the initial state and an
    /// empty report.
    std::pair<FieldState, EnergyReport> run(const FieldState& init,
                                            double t_end, int observe_every,
                                            const Observer& observer = nullptr);

    EnergyRow measure(const FieldState& s, const FieldState* prev,
                      double dt_prev) const;

  private:
    void step_density(FieldState& s) const;
    void viscous_solve(const Array2D& rho_f1, const Array2D& rho_f3,
                       const VectorField& rhs, VectorField& out) const;
    void project(FieldState& s, const Array2D& rho_f1, const Array2D& rho_f3);

    MacGrid grid_;
    DensityProfile profile_;
    PhysicalParams params_;
    Config config_;
    FaceIndexer faces_;
    Array2D rho_bar_c_;
    Array2D rho_bar_f1_, rho_bar_f3_;
    Array2D drho_bar_c_;
    double rho_bar_min_ = 0.0;

    Eigen::SparseMatrix<double> helm_matrix_; // (rho_bar/dt) I + mu (-lap)
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> helm_;
    std::unique_ptr<CenterPoisson> poisson_;
};

} // namespace rtlab
