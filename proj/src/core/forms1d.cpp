#include "core/forms1d.hpp"

#include "core/quadrature.hpp"

namespace rtlab {

namespace {

struct QuadPoints {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
};

QuadPoints quad_points(double a, double b, int panels, int points) {
    const GaussRule& rule = gauss_legendre(points);
    QuadPoints q;
    q.x.resize(panels * points);
    q.w.resize(panels * points);
    const double pw = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * pw;
        for (int i = 0; i < points; ++i) {
            q.x[p * points + i] = mid + 0.5 * pw * rule.nodes[i];
            q.w[p * points + i] = 0.5 * pw * rule.weights[i];
        }
    }
    return q;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& vals,
                              const Eigen::VectorXd& w) {
    return vals.transpose() * w.asDiagonal() * vals;
}

} // namespace

VerticalForms assemble_vertical_forms(const ClampedBasis& basis,
                                      const DensityProfile& profile) {
    const int panels = std::max(12, basis.size() / 2);
    const QuadPoints q = quad_points(0.0, basis.h(), panels, 24);
    const Eigen::MatrixXd b0 = basis.eval_matrix(q.x, 0);
    const Eigen::MatrixXd b1 = basis.eval_matrix(q.x, 1);
    const Eigen::MatrixXd b2 = basis.eval_matrix(q.x, 2);

    Eigen::VectorXd rho(q.x.size()), drho(q.x.size());
    for (int i = 0; i < q.x.size(); ++i) {
        rho[i] = profile.rho(q.x[i]);
        drho[i] = profile.drho(q.x[i]);
    }

    VerticalForms f;
    f.s0 = weighted_gram(b0, q.w);
    f.s1 = weighted_gram(b1, q.w);
    f.s2 = weighted_gram(b2, q.w);
    f.mass0 = weighted_gram(b0, (q.w.array() * rho.array()).matrix());
    f.mass1 = weighted_gram(b1, (q.w.array() * rho.array()).matrix());
    f.buoy = weighted_gram(b0, (q.w.array() * drho.array()).matrix());
    // Symmetrize away quadrature round-off.
    for (Eigen::MatrixXd* m : {&f.s0, &f.s1, &f.s2, &f.mass0, &f.mass1, &f.buoy})
        *m = 0.5 * (*m + m->transpose()).eval();
    return f;
}

IntervalForms assemble_interval_forms(const ClampedBasis& basis) {
    const int panels = std::max(12, basis.size() / 2);
    const QuadPoints q = quad_points(0.0, basis.h(), panels, 24);
    const Eigen::MatrixXd b0 = basis.eval_matrix(q.x, 0);
    const Eigen::MatrixXd b1 = basis.eval_matrix(q.x, 1);
    const Eigen::MatrixXd b2 = basis.eval_matrix(q.x, 2);
    IntervalForms f;
    f.s0 = weighted_gram(b0, q.w);
    f.s1 = weighted_gram(b1, q.w);
    f.s2 = weighted_gram(b2, q.w);
    for (Eigen::MatrixXd* m : {&f.s0, &f.s1, &f.s2})
        *m = 0.5 * (*m + m->transpose()).eval();
    return f;
}

} // namespace rtlab
