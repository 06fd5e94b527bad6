#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>

#include "core/mac_grid.hpp"

namespace rtlab {

/// Direct solver for -div(beta grad p) = rhs at cell centers with the
/// MAC-natural no-flux closure at walls (and periodic wrap in x when the
/// grid is periodic). beta lives on faces. The constant nullspace is removed
/// by pinning one cell during factorization; solutions are returned with
/// zero mean. When the coefficient drifts, solves run iterative refinement
/// against the frozen factorization and only refactor past a drift
/// threshold.
class CenterPoisson {
  public:
    CenterPoisson(const MacGrid& grid, const VectorField& beta);
    explicit CenterPoisson(const MacGrid& grid); // beta = 1

    /// Update the coefficient; refactors only if the relative drift from the
    /// factorized coefficient exceeds `refactor_threshold`.
    void set_beta(const VectorField& beta, double refactor_threshold = 0.1);

    /// Solve -div(beta grad p) = rhs (rhs mean is removed first; the
    /// discrete problem is solvable only for mean-free data). Refinement
    /// iterates until the residual drops below 1e-13 * scale.
    Array2D solve(const Array2D& rhs) const;

    int refinement_steps_last() const { return last_refinement_steps_; }
    const MacGrid& grid() const { return grid_; }

  private:
    void factorize();
    Eigen::VectorXd apply_current(const Eigen::VectorXd& p) const;

    MacGrid grid_;
    VectorField beta_current_;
    VectorField beta_factored_;
    Eigen::SparseMatrix<double> matrix_; // factored-coefficient operator
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    bool beta_matches_factored_ = true;
    mutable int last_refinement_steps_ = 0;
};

} // namespace rtlab
