#include "core/clamped_basis.hpp"

#include <array>

#include "core/error.hpp"

namespace rtlab {

ClampedBasis::ClampedBasis(int size, double h) : n_(size), h_(h) {
    if (size < 1) fail(ErrorCode::BadSpec, "basis size must be >= 1");
    if (!(h > 0.0)) fail(ErrorCode::BadSpec, "basis interval must have h > 0");
}

void ClampedBasis::eval_point(double x, int max_deriv,
                              std::array<Eigen::VectorXd, 4>& out) const {
    const int nt = n_ + 4; // need T_0 .. T_{n+3}
    const double t = 2.0 * x / h_ - 1.0;
    // Chebyshev values and derivatives in the mapped variable via the
    // differentiated three-term recurrences.
    std::array<Eigen::VectorXd, 4> T;
    for (int d = 0; d <= max_deriv; ++d) T[d].setZero(nt + 1);
    T[0][0] = 1.0;
    if (nt >= 1) T[0][1] = t;
    if (max_deriv >= 1 && nt >= 1) T[1][1] = 1.0;
    for (int k = 1; k < nt; ++k) {
        T[0][k + 1] = 2.0 * t * T[0][k] - T[0][k - 1];
        if (max_deriv >= 1)
            T[1][k + 1] = 2.0 * T[0][k] + 2.0 * t * T[1][k] - T[1][k - 1];
        if (max_deriv >= 2)
            T[2][k + 1] = 4.0 * T[1][k] + 2.0 * t * T[2][k] - T[2][k - 1];
        if (max_deriv >= 3)
            T[3][k + 1] = 6.0 * T[2][k] + 2.0 * t * T[3][k] - T[3][k - 1];
    }
    const double scale = 2.0 / h_; // dt/dx
    for (int d = 0; d <= max_deriv; ++d) {
        out[d].resize(n_);
        double chain = 1.0;
        for (int m = 0; m < d; ++m) chain *= scale;
        for (int j = 0; j < n_; ++j) {
            const double a = 2.0 * (j + 2) / static_cast<double>(j + 3);
            const double b = (j + 1) / static_cast<double>(j + 3);
            out[d][j] = chain * (T[d][j] - a * T[d][j + 2] + b * T[d][j + 4]);
        }
    }
}

Eigen::MatrixXd ClampedBasis::eval_matrix(const Eigen::VectorXd& x,
                                          int deriv) const {
    Eigen::MatrixXd m(x.size(), n_);
    std::array<Eigen::VectorXd, 4> vals;
    for (int i = 0; i < x.size(); ++i) {
        eval_point(x[i], deriv, vals);
        m.row(i) = vals[deriv].transpose();
    }
    return m;
}

double ClampedBasis::eval(const Eigen::VectorXd& coeffs, double x,
                          int deriv) const {
    std::array<Eigen::VectorXd, 4> vals;
    eval_point(x, deriv, vals);
    return vals[deriv].dot(coeffs);
}

} // namespace rtlab
