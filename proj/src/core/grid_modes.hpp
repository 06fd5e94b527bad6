#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <utility>
#include <vector>

#include "core/face_index.hpp"
#include "core/mac_grid.hpp"
#include "core/normal_modes.hpp"
#include "core/profile.hpp"

namespace rtlab {

/// A normal mode resolved in the simulation grid's own discrete operators:
/// the eigenfunction triple of the linearized problem such that
///   Lambda^2 rho_f u + Lambda grad q - Lambda mu lap u - buoy(u) = 0
/// holds with the grid operators to solver precision. Velocities come from a
/// corner streamfunction, so the discrete divergence vanishes identically.
struct GridMode {
    double lambda = 0.0;
    Array2D psi;        // corner streamfunction
    VectorField u;      // rho-weighted L2 norm 1
    Array2D rho_tilde;  // -rho' (u3 at centers) / Lambda
    Array2D q_tilde;    // mean-zero, recovered by the discrete Poisson solve
    double momentum_residual = 0.0; // norm of the unrecovered div-free defect
    double div_max = 0.0;
    double alpha_gap = 0.0; // |Lambda^2 - alpha(Lambda)|
    int iterations = 0;
    std::vector<std::pair<double, double>> alpha_trace;
};

/// Constrained eigensolve over discretely divergence-free fields
/// parametrized by interior corner streamfunctions. The quadratic forms are
/// built from the same operator closures the time steppers use, so the mode
/// is an exact eigenpair of the semi-discrete linearized dynamics.
class GridModeSolver {
  public:
    struct Options {
        double lambda_m3_sq = 0.0; // lambda * M3^2 (magnetic tension weight)
        double s_tol = 1e-13;
        int max_bisection = 200;
        int max_power_iterations = 600;
    };

    GridModeSolver(const MacGrid& grid, const DensityProfile& profile,
                   const PhysicalParams& params);
    GridModeSolver(const MacGrid& grid, const DensityProfile& profile,
                   const PhysicalParams& params, Options opts);

    /// alpha(s) with an optional warm-start eigenvector (updated in place).
    double alpha(double s, Eigen::VectorXd* warm = nullptr) const;

    /// Root of s^2 = alpha(s), refined eigenvector, recovered pressure.
    GridMode solve(const Array2D* psi_seed = nullptr) const;

    const MacGrid& grid() const { return grid_; }
    const FaceIndexer& faces() const { return faces_; }
    const CornerIndexer& corners() const { return corners_; }

    /// Face-space momentum image (1/Lambda)(buoy - Lambda^2 mass - Lambda mu
    /// (-lap) - magnetic) applied to a face vector; the pressure recovery and
    /// the compatibility checks share it.
    Eigen::VectorXd momentum_flux(double lambda, const Eigen::VectorXd& u) const;

    const Eigen::VectorXd& rho_face() const { return rho_face_; }
    const Array2D& rho_center() const { return rho_center_; }
    const Array2D& drho_center() const { return drho_center_; }

  private:
    MacGrid grid_;
    DensityProfile profile_;
    PhysicalParams params_;
    Options opts_;
    FaceIndexer faces_;
    CornerIndexer corners_;

    Eigen::SparseMatrix<double> curl_;   // psi -> faces
    Eigen::SparseMatrix<double> buoy_;   // face form: g P^T diag(rho'_c) P
    Eigen::SparseMatrix<double> visc_;   // face form of -lap (ghost closure)
    Eigen::SparseMatrix<double> kz_face_; // magnetic tension form |d3 u|^2
    Eigen::SparseMatrix<double> a0_psi_; // C^T (buoy - lm3 kz) C
    Eigen::SparseMatrix<double> k_psi_;  // C^T visc C
    Eigen::SparseMatrix<double> m_psi_;  // C^T diag(rho_f) C
    Eigen::VectorXd rho_face_;
    Array2D rho_center_, drho_center_;
    double sigma_ = 0.0; // SPD shift, above the attainable alpha
};

/// Reconstruct a spectral mode as a corner streamfunction on the target grid
/// (layer ansatz psi = -phi(z) sin(k x)/k, box tensor psi), then refine it
/// into the grid's own eigenpair. The amplitude is normalized to unit
/// rho-weighted L2 velocity and the sign fixed deterministically.
GridMode eigenfunction_fields(const ModeResult& mode,
                              const LayerModeSolver* layer_solver,
                              const BoxModeSolver* box_solver,
                              const DensityProfile& profile,
                              const PhysicalParams& params, const MacGrid& grid,
                              GridModeSolver::Options opts = GridModeSolver::Options());

} // namespace rtlab
