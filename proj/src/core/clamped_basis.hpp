#pragma once

#include <Eigen/Dense>

namespace rtlab {

/// Polynomial basis on [0, h] whose members and their first derivatives
/// vanish at both endpoints. Member j is the Chebyshev combination
///   B_j = T_j - (2(j+2)/(j+3)) T_{j+2} + ((j+1)/(j+3)) T_{j+4}
/// mapped from [-1, 1]; the endpoint conditions hold identically, so clamped
/// boundary conditions are imposed by basis restriction alone.
class ClampedBasis {
  public:
    ClampedBasis(int size, double h);

    int size() const { return n_; }
    double h() const { return h_; }

    /// Values of all basis members and derivatives up to `max_deriv` (<= 3)
    /// at point x in [0, h]. out[d] is the length-n vector of d-th
    /// derivatives.
    void eval_point(double x, int max_deriv,
                    std::array<Eigen::VectorXd, 4>& out) const;

    /// Matrix of d-th derivative values at a set of points: (points x n).
    Eigen::MatrixXd eval_matrix(const Eigen::VectorXd& x, int deriv) const;

    /// Evaluate a function given by basis coefficients at x (derivative d).
    double eval(const Eigen::VectorXd& coeffs, double x, int deriv = 0) const;

  private:
    int n_;
    double h_;
};

} // namespace rtlab
