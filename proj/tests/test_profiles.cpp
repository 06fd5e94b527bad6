#include <doctest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/profile.hpp"
#include "core/quadrature.hpp"

using namespace rtlab;

TEST_CASE("affine profile: rho = 1 + x3 on [0,1]") {
    auto p = DensityProfile::affine(1.0, 1.0, 1.0);
    CHECK(p.rho(0.0) == doctest::Approx(1.0));
    CHECK(p.rho(1.0) == doctest::Approx(2.0));
    CHECK(p.drho(0.3) == doctest::Approx(1.0)); // rho' == 1 everywhere
    CHECK(p.ddrho(0.7) == doctest::Approx(0.0));
    CHECK(p.min_density() > 0.0);
}

TEST_CASE("affine profile rejected when density goes nonpositive") {
    // rho = 1 - 2 x3 hits -1 at x3 = 1.
    CHECK_THROWS_WITH_AS(DensityProfile::affine(1.0, -2.0, 1.0),
                         doctest::Contains("not strictly positive"), Error);
    try {
        DensityProfile::affine(1.0, -2.0, 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveDensity);
    }
}

TEST_CASE("exponential profile derivative: rho = e^{2 x3}") {
    auto p = DensityProfile::exponential(1.0, 2.0, 1.0);
    CHECK(p.drho(0.5) == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
    CHECK(p.ddrho(0.5) == doctest::Approx(4.0 * std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("bad specs are rejected") {
    CHECK_THROWS_AS(DensityProfile::make("affine", {1.0}, 1.0), Error);
    CHECK_THROWS_AS(DensityProfile::make("affine", {1.0, 1.0}, -1.0), Error);
    CHECK_THROWS_AS(DensityProfile::make("nosuch", {1.0, 1.0}, 1.0), Error);
    CHECK_THROWS_AS(DensityProfile::make("tanh-step", {1.0, 0.3, 0.5, -0.1}, 1.0),
                    Error);
}

TEST_CASE("RT condition") {
    SUBCASE("increasing density satisfies it") {
        auto p = DensityProfile::affine(1.0, 1.0, 1.0);
        auto rt = p.check_rt_condition();
        CHECK(rt.satisfied);
        CHECK(rt.max_drho == doctest::Approx(1.0));
    }
    SUBCASE("decreasing density does not") {
        auto p = DensityProfile::affine(2.0, -1.0, 1.0);
        CHECK_FALSE(p.check_rt_condition().satisfied);
    }
    SUBCASE("tanh step witnesses the step center") {
        auto p = DensityProfile::tanh_step(2.0, 0.5, 0.5, 0.05, 1.0);
        auto rt = p.check_rt_condition();
        CHECK(rt.satisfied);
        CHECK(rt.witness == doctest::Approx(0.5).epsilon(1e-2));
    }
}

TEST_CASE("equilibrium pressure") {
    SUBCASE("constant density, unit gravity") {
        auto p = DensityProfile::affine(1.0, 0.0, 1.0);
        CHECK(p.pressure(0.4, 1.0) == doctest::Approx(-0.4).epsilon(1e-14));
    }
    SUBCASE("affine exact integral") {
        auto p = DensityProfile::affine(1.0, 1.0, 1.0);
        CHECK(p.pressure(1.0, 9.8) == doctest::Approx(-14.7).epsilon(1e-14));
    }
    SUBCASE("monotone decreasing in x3 for positive rho, g") {
        auto p = DensityProfile::tanh_step(2.0, 0.5, 0.5, 0.1, 1.0);
        double prev = p.pressure(0.0, 9.8);
        for (int i = 1; i <= 50; ++i) {
            double cur = p.pressure(i / 50.0, 9.8);
            CHECK(cur < prev);
            prev = cur;
        }
    }
    SUBCASE("tabulated pressure matches composite quadrature oracle") {
        std::vector<double> x, y;
        for (int i = 0; i <= 40; ++i) {
            double t = i / 40.0;
            x.push_back(t);
            y.push_back(1.0 + t * t + 0.2 * std::sin(3.0 * t));
        }
        auto p = DensityProfile::tabulated(x, y);
        const double g = 9.8;
        for (double x3 : {0.13, 0.5, 0.77, 1.0}) {
            // Independent oracle: high-order composite Gauss quadrature of the
            // profile evaluator itself.
            double oracle =
                -g * integrate([&](double s) { return p.rho(s); }, 0.0, x3, 64, 24);
            CHECK(p.pressure(x3, g) == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
}

TEST_CASE("tabulated profile interpolates data with C1 consistency") {
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        double t = i / 20.0;
        x.push_back(t);
        y.push_back(std::exp(t));
    }
    auto p = DensityProfile::tabulated(x, y);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(p.rho(x[i]) == doctest::Approx(y[i]).epsilon(1e-13));
    // Monotone data stays monotone (shape preservation).
    double prev = p.rho(0.0);
    for (int i = 1; i <= 200; ++i) {
        double cur = p.rho(i / 200.0);
        CHECK(cur >= prev - 1e-13);
        prev = cur;
    }
}

TEST_CASE("tabulated rejects malformed data") {
    CHECK_THROWS_AS(DensityProfile::tabulated({0.0, 0.5}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(DensityProfile::tabulated({0.0, 0.5, 0.4}, {1.0, 2.0, 3.0}),
                    Error);
    CHECK_THROWS_AS(
        DensityProfile::tabulated({0.1, 0.5, 1.0}, {1.0, 2.0, 3.0}), Error);
    CHECK_THROWS_AS(
        DensityProfile::tabulated({0.0, 0.5, 1.0}, {1.0, -2.0, 3.0}), Error);
}

TEST_CASE("derivative consistency: finite difference matches drho at O(e^2)") {
    // Property over the smooth analytic families with randomized parameters.
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> unif(0.2, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        DensityProfile p = [&] {
            switch (trial % 3) {
                case 0: return DensityProfile::affine(1.0 + unif(rng), 0.5 * unif(rng), 1.0);
                case 1: return DensityProfile::exponential(unif(rng), unif(rng), 1.0);
                default:
                    return DensityProfile::tanh_step(2.0 + unif(rng), 0.4, 0.5,
                                                     0.1 + 0.2 * unif(rng), 1.0);
            }
        }();
        // The normalized mismatch is the (bounded) third-derivative scale.
        CHECK(p.derivative_consistency_error() < 1e3);
        CHECK(p.min_density() > 0.0);
    }
}

TEST_CASE("physical params validation") {
    PhysicalParams ok;
    ok.validate();
    PhysicalParams bad = ok;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.M3 = 1.0;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.lambda = 1.0;
    bad.validate();
}
