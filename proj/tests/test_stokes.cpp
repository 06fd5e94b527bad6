#include <doctest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/mac_ops.hpp"
#include "core/poisson.hpp"
#include "core/stokes.hpp"

using namespace rtlab;

namespace {

// Manufactured fields on [0,L]x[0,h]:
//   psi = (x(L-x) z(h-z))^2,  u = (dz psi, -dx psi),
//   q = cos(2 pi x / L) (z - h/2)  (mean-zero by symmetry),
//   f = grad q - mu lap u, all derivatives expanded by hand.
struct Manufactured {
    double L, h, mu;

    double P(double x) const { return x * (L - x); }
    double Pp(double x) const { return L - 2.0 * x; }
    double Q(double z) const { return z * (h - z); }
    double Qp(double z) const { return h - 2.0 * z; }

    // u1 = dz psi = 2 P^2 Q Q'
    double u1(double x, double z) const {
        return 2.0 * P(x) * P(x) * Q(z) * Qp(z);
    }
    // u3 = -dx psi = -2 P P' Q^2
    double u3(double x, double z) const {
        return -2.0 * P(x) * Pp(x) * Q(z) * Q(z);
    }
    double lap_u1(double x, double z) const {
        // dxx: 2 (QQ') (P^2)'' = 2 QQ' (2P'^2 + 2P P'') with P'' = -2
        const double dxx = 2.0 * Q(z) * Qp(z) * (2.0 * Pp(x) * Pp(x) - 4.0 * P(x));
        // dzz: 2 P^2 (QQ')'' = 2 P^2 (3 Q' Q'') = 2 P^2 * (-6 Q')
        const double dzz = 2.0 * P(x) * P(x) * (-6.0 * Qp(z));
        return dxx + dzz;
    }
    double lap_u3(double x, double z) const {
        // dxx: -2 (PP')'' Q^2 = -2 (3 P' P'') Q^2 = 12 P' Q^2
        const double dxx = 12.0 * Pp(x) * Q(z) * Q(z);
        // dzz: -2 P P' (Q^2)'' = -2 P P' (2Q'^2 + 2 Q Q'') = -2PP'(2Q'^2 - 4Q)
        const double dzz = -2.0 * P(x) * Pp(x) * (2.0 * Qp(z) * Qp(z) - 4.0 * Q(z));
        return dxx + dzz;
    }
    double q(double x, double z) const {
        return std::cos(2.0 * M_PI * x / L) * (z - 0.5 * h);
    }
    double dq_dx(double x, double z) const {
        return -2.0 * M_PI / L * std::sin(2.0 * M_PI * x / L) * (z - 0.5 * h);
    }
    double dq_dz(double x, double /*z*/) const {
        return std::cos(2.0 * M_PI * x / L);
    }
    double f1(double x, double z) const { return dq_dx(x, z) - mu * lap_u1(x, z); }
    double f3(double x, double z) const { return dq_dz(x, z) - mu * lap_u3(x, z); }
};

// L2 error of a Stokes solution against the manufactured fields.
double velocity_error(const MacGrid& g, const Manufactured& m,
                      const VectorField& u) {
    double s = 0.0;
    for (int j = 0; j < g.nz; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double d = u.u1(i, j) - m.u1(g.xu1(i), g.zc(j));
            s += d * d;
        }
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = u.u3(i, j) - m.u3(g.xc(i), g.zu3(j));
            s += d * d;
        }
    return std::sqrt(s * g.cell_volume());
}

} // namespace

TEST_CASE("stokes: zero data gives the zero solution") {
    MacGrid g(16, 16, 1.0, 1.0, false);
    StokesSolver solver(g, 1.0);
    auto sol = solver.solve(VectorField(g), g.center_array());
    CHECK(l2_norm(g, sol.velocity) < 1e-13);
    CHECK(l2_norm(g, sol.pressure) < 1e-13);
}

TEST_CASE("stokes: manufactured solution converges at second order") {
    const double L = 1.0, h = 1.0, mu = 0.7;
    Manufactured m{L, h, mu};
    std::vector<double> errors, sizes;
    for (int n : {16, 32, 64}) {
        MacGrid g(n, n, L, h, false);
        StokesSolver solver(g, mu);
        VectorField f(g);
        for (int j = 0; j < g.nz; ++j)
            for (int i = 1; i < g.nx; ++i)
                f.u1(i, j) = m.f1(g.xu1(i), g.zc(j));
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i)
                f.u3(i, j) = m.f3(g.xc(i), g.zu3(j));
        auto sol = solver.solve(f, g.center_array());
        errors.push_back(velocity_error(g, m, sol.velocity));
        sizes.push_back(1.0 / n);
    }
    // Fitted order over the three grids.
    const double p01 = std::log(errors[0] / errors[1]) / std::log(2.0);
    const double p12 = std::log(errors[1] / errors[2]) / std::log(2.0);
    CHECK(p01 > 1.7);
    CHECK(p12 > 1.8);
}

TEST_CASE("stokes: prescribed divergence is met to solver precision") {
    // g_div = div v for a smooth v with v.n = 0 on the walls.
    const double L = 1.0, h = 1.0;
    MacGrid g(48, 48, L, h, false);
    auto v1 = [&](double x, double z) {
        return std::sin(2.0 * M_PI * x / L) * z * z * (h - z) * (h - z);
    };
    auto v3 = [&](double x, double z) {
        return x * x * (L - x) * (L - x) * std::sin(2.0 * M_PI * z / h);
    };
    auto div_v = [&](double x, double z) {
        const double d1 = 2.0 * M_PI / L * std::cos(2.0 * M_PI * x / L) * z * z *
                          (h - z) * (h - z);
        const double d3 = x * x * (L - x) * (L - x) * 2.0 * M_PI / h *
                          std::cos(2.0 * M_PI * z / h);
        return d1 + d3;
    };
    (void)v1;
    (void)v3;
    Array2D gd = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) gd(i, j) = div_v(g.xc(i), g.zc(j));
    // The analytic integral vanishes; the midpoint sum is O(dx^2) away from
    // zero, which still passes the relative compatibility gate.
    StokesSolver solver(g, 1.0);
    auto sol = solver.solve(VectorField(g), gd);
    CHECK(sol.divergence_residual < 1e-8);
    CHECK(sol.momentum_residual < 1e-8);
}

TEST_CASE("stokes: incompatible divergence data is rejected") {
    MacGrid g(16, 16, 1.0, 1.0, false);
    StokesSolver solver(g, 1.0);
    Array2D gd = g.center_array();
    gd.fill(1.0); // integral = 1
    CHECK_THROWS_AS(solver.solve(VectorField(g), gd), Error);
}

TEST_CASE("stokes: linearity and bitwise determinism") {
    MacGrid g(20, 12, 1.0, 1.0, false);
    StokesSolver solver(g, 0.3);
    std::mt19937 rng(31415);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto random_force = [&]() {
        VectorField f(g);
        for (int j = 0; j < g.nz; ++j)
            for (int i = 1; i < g.nx; ++i) f.u1(i, j) = gauss(rng);
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) f.u3(i, j) = gauss(rng);
        return f;
    };
    VectorField f1 = random_force(), f2 = random_force();
    const double a = 0.37, b = -1.21;

    auto s1 = solver.solve(f1, g.center_array());
    auto s2 = solver.solve(f2, g.center_array());
    VectorField fc(g);
    axpy(a, f1, fc);
    axpy(b, f2, fc);
    auto sc = solver.solve(fc, g.center_array());

    VectorField expect(g);
    axpy(a, s1.velocity, expect);
    axpy(b, s2.velocity, expect);
    double worst = 0.0;
    for (size_t i = 0; i < expect.u1.v.size(); ++i)
        worst = std::max(worst, std::abs(expect.u1.v[i] - sc.velocity.u1.v[i]));
    for (size_t i = 0; i < expect.u3.v.size(); ++i)
        worst = std::max(worst, std::abs(expect.u3.v[i] - sc.velocity.u3.v[i]));
    CHECK(worst < 1e-10);

    // Re-solving the same problem reproduces the solution bit for bit.
    auto s1b = solver.solve(f1, g.center_array());
    CHECK(s1.velocity.u1.v == s1b.velocity.u1.v);
    CHECK(s1.velocity.u3.v == s1b.velocity.u3.v);
    CHECK(s1.pressure.v == s1b.pressure.v);
}

TEST_CASE("stokes: estimate ratio is scaling invariant and zero on zero data") {
    MacGrid g(16, 16, 1.0, 1.0, false);
    StokesSolver solver(g, 1.0);
    CHECK(StokesSolver::estimate_ratio(g, solver.solve(VectorField(g), g.center_array()),
                                       VectorField(g), g.center_array()) == 0.0);

    Manufactured m{1.0, 1.0, 1.0};
    VectorField f(g);
    for (int j = 0; j < g.nz; ++j)
        for (int i = 1; i < g.nx; ++i) f.u1(i, j) = m.f1(g.xu1(i), g.zc(j));
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) f.u3(i, j) = m.f3(g.xc(i), g.zu3(j));
    auto sol = solver.solve(f, g.center_array());
    const double r1 = StokesSolver::estimate_ratio(g, sol, f, g.center_array());

    VectorField f5(g);
    axpy(5.0, f, f5);
    auto sol5 = solver.solve(f5, g.center_array());
    const double r5 = StokesSolver::estimate_ratio(g, sol5, f5, g.center_array());
    CHECK(r1 == doctest::Approx(r5).epsilon(1e-10));
}

TEST_CASE("stokes: velocity operator is self-adjoint on small grids") {
    // Dense check of the symmetry of the viscous block through the operator.
    MacGrid g(8, 8, 1.0, 1.0, false);
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        VectorField a(g), b(g);
        for (int j = 0; j < g.nz; ++j)
            for (int i = 1; i < g.nx; ++i) {
                a.u1(i, j) = gauss(rng);
                b.u1(i, j) = gauss(rng);
            }
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                a.u3(i, j) = gauss(rng);
                b.u3(i, j) = gauss(rng);
            }
        VectorField la = laplacian(g, a), lb = laplacian(g, b);
        CHECK(dot(la, b) == doctest::Approx(dot(a, lb)).epsilon(1e-12));
        // and the form agrees with the gradient energy
        CHECK(-dot(la, a) * g.cell_volume() ==
              doctest::Approx(grad_sq(g, a)).epsilon(1e-12));
    }
}

TEST_CASE("poisson: projection removes divergence to 1e-10") {
    for (bool periodic : {false, true}) {
        MacGrid g(32, 24, 2.0, 1.0, periodic);
        std::mt19937 rng(99);
        std::normal_distribution<double> gauss(0.0, 1.0);
        VectorField u(g);
        const int i_lo = periodic ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) u.u1(i, j) = gauss(rng);
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) u.u3(i, j) = gauss(rng);

        CenterPoisson poisson(g);
        Array2D rhs = divergence(g, u);
        for (double& v : rhs.v) v = -v; // -div grad q = -div u
        Array2D q = poisson.solve(rhs);
        VectorField gq = gradient(g, q);
        axpy(-1.0, gq, u);
        CHECK(max_abs(divergence(g, u)) < 1e-10);
    }
}

TEST_CASE("poisson: variable coefficient with refinement stays accurate") {
    MacGrid g(24, 24, 1.0, 1.0, false);
    VectorField beta(g);
    beta.fill(1.0);
    CenterPoisson poisson(g, beta);

    // Drift the coefficient by ~5% and solve with refinement (no refactor).
    VectorField beta2(g);
    for (int j = 0; j < g.nz; ++j) {
        for (int i = 0; i <= g.nx; ++i)
            beta2.u1(i, j) = 1.0 + 0.05 * std::sin(2.0 * i + j);
        for (int i = 0; i < g.nx; ++i)
            beta2.u3(i, j) = 1.0 + 0.05 * std::cos(i - 3.0 * j);
        }
    for (int i = 0; i < g.nx; ++i) beta2.u3(i, g.nz) = 1.0;
    poisson.set_beta(beta2, 0.2);

    Array2D rhs = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            rhs(i, j) = std::sin(2.0 * M_PI * g.xc(i)) * std::cos(M_PI * g.zc(j));
    Array2D q = poisson.solve(rhs);
    CHECK(poisson.refinement_steps_last() >= 1);

    // Residual of the variable-coefficient equation.
    VectorField gq = gradient(g, q);
    for (size_t i = 0; i < gq.u1.v.size(); ++i) gq.u1.v[i] *= beta2.u1.v[i];
    for (size_t i = 0; i < gq.u3.v.size(); ++i) gq.u3.v[i] *= beta2.u3.v[i];
    Array2D res = divergence(g, gq);
    double mean = 0.0;
    for (double v : rhs.v) mean += v;
    mean /= rhs.size();
    for (int i = 0; i < (int)res.v.size(); ++i) res.v[i] = -res.v[i] - (rhs.v[i] - mean);
    CHECK(max_abs(res) < 1e-11);
}

TEST_CASE("mac ops: curl fields are discretely divergence free") {
    for (bool periodic : {false, true}) {
        MacGrid g(20, 16, 1.3, 1.0, periodic);
        Array2D psi = g.corner_array();
        std::mt19937 rng(5);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : psi.v) v = gauss(rng);
        // zero along walls so normal faces vanish
        for (int i = 0; i < g.ncorner_x(); ++i) {
            psi(i, 0) = 0.0;
            psi(i, g.nz) = 0.0;
        }
        if (!periodic)
            for (int j = 0; j <= g.nz; ++j) {
                psi(0, j) = 0.0;
                psi(g.nx, j) = 0.0;
            }
        VectorField u = curl(g, psi);
        CHECK(max_abs(divergence(g, u)) < 1e-12);
        for (int i = 0; i < g.nx; ++i) {
            CHECK(u.u3(i, 0) == 0.0);
            CHECK(u.u3(i, g.nz) == 0.0);
        }
    }
}

TEST_CASE("mac ops: gradient and divergence are negative adjoints") {
    MacGrid g(12, 10, 1.0, 0.7, false);
    std::mt19937 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Array2D p = g.center_array();
    for (double& v : p.v) v = gauss(rng);
    VectorField u(g);
    for (int j = 0; j < g.nz; ++j)
        for (int i = 1; i < g.nx; ++i) u.u1(i, j) = gauss(rng);
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) u.u3(i, j) = gauss(rng);
    const double lhs = dot(gradient(g, p), u);
    const double rhs = -dot(p, divergence(g, u));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
