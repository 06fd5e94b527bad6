#pragma once

#include <functional>
#include <vector>

namespace rtlab {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes/weights for an n-point Gauss-Legendre rule (cached per n).
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` equal
/// panels of an n-point rule each.
double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels = 16, int points = 24);

} // namespace rtlab
