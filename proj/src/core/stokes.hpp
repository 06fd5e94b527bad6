#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>

#include "core/mac_grid.hpp"

namespace rtlab {

struct StokesProblem {
    VectorField body_force;  // f on faces
    Array2D divergence_data; // g at centers (mean-compatible)
    double coefficient = 1.0; // momentum operator: grad q - c lap u = f
};

struct StokesSolution {
    VectorField velocity; // zero on walls
    Array2D pressure;     // mean-zero
    double momentum_residual = 0.0;
    double divergence_residual = 0.0;
};

/// Direct saddle-point solve of
///   c (-lap u) + grad q = f,   div u = g,   u|walls = 0,   mean(q) = 0
/// on the staggered grid, with the coupled system factorized once per
/// (grid, c) and reused across right-hand sides. Deterministic pivoting:
/// repeated solves of the same problem agree bit for bit.
class StokesSolver {
  public:
    StokesSolver(const MacGrid& grid, double coefficient);

    StokesSolution solve(const VectorField& body_force,
                         const Array2D& divergence_data) const;
    StokesSolution solve(const StokesProblem& problem) const;

    const MacGrid& grid() const { return grid_; }
    double coefficient() const { return coeff_; }

    /// Discrete ratio of solution-size to data-size proxies used by the
    /// delta^2-scaling checks: (||u|| + ||grad u|| + ||q||) over
    /// (||f|| + ||g|| + ||grad g||); zero data maps to ratio 0.
    static double estimate_ratio(const MacGrid& grid, const StokesSolution& sol,
                                 const VectorField& f, const Array2D& gdiv);

  private:
    int u1_index(int i, int j) const;
    int u3_index(int i, int j) const;

    MacGrid grid_;
    double coeff_;
    int n_u1_ = 0, n_u3_ = 0, n_p_ = 0, n_total_ = 0;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

} // namespace rtlab
