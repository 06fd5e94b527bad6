#include "core/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace rtlab {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on Legendre polynomials, symmetric pairs.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels, int points) {
    const GaussRule& rule = gauss_legendre(points);
    const double panel_width = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * panel_width;
        const double half = 0.5 * panel_width;
        const double mid = lo + half;
        for (int q = 0; q < points; ++q)
            sum += rule.weights[q] * f(mid + half * rule.nodes[q]) * half;
    }
    return sum;
}

} // namespace rtlab
