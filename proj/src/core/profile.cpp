#include "core/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace rtlab {

namespace {

// log(cosh(t)) without overflow for large |t|.
double log_cosh(double t) {
    const double a = std::abs(t);
    return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

} // namespace

DensityProfile DensityProfile::affine(double a, double b, double h) {
    return make("affine", {a, b}, h);
}

DensityProfile DensityProfile::exponential(double a, double b, double h) {
    return make("exponential", {a, b}, h);
}

DensityProfile DensityProfile::tanh_step(double a, double b, double center,
                                         double width, double h) {
    return make("tanh-step", {a, b, center, width}, h);
}

DensityProfile DensityProfile::make(const std::string& family,
                                    const std::vector<double>& params,
                                    double h) {
    if (!(h > 0.0)) fail(ErrorCode::BadSpec, "profile height must be > 0");
    DensityProfile p;
    p.h_ = h;
    p.params_ = params;
    p.family_name_ = family;
    if (family == "affine") {
        if (params.size() != 2)
            fail(ErrorCode::BadSpec, "affine profile takes params [a, b]");
        p.family_ = ProfileFamily::Affine;
    } else if (family == "exponential") {
        if (params.size() != 2)
            fail(ErrorCode::BadSpec, "exponential profile takes params [a, b]");
        p.family_ = ProfileFamily::Exponential;
    } else if (family == "tanh-step") {
        if (params.size() != 4)
            fail(ErrorCode::BadSpec,
                 "tanh-step profile takes params [a, b, center, width]");
        if (!(params[3] > 0.0))
            fail(ErrorCode::BadSpec, "tanh-step width must be > 0");
        p.family_ = ProfileFamily::TanhStep;
    } else {
        fail(ErrorCode::BadSpec, "unknown profile family '" + family + "'");
    }
    p.validate_positivity();
    return p;
}

DensityProfile DensityProfile::tabulated(std::vector<double> x,
                                         std::vector<double> rho) {
    if (x.size() != rho.size() || x.size() < 3)
        fail(ErrorCode::BadSpec, "tabulated profile needs >= 3 (x3, rho) rows");
    for (size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            fail(ErrorCode::BadSpec, "tabulated x3 must be strictly increasing");
    if (std::abs(x.front()) > 1e-12 * std::max(1.0, x.back()))
        fail(ErrorCode::BadSpec, "tabulated data must start at x3 = 0");

    DensityProfile p;
    p.family_ = ProfileFamily::Tabulated;
    p.family_name_ = "tabulated";
    p.h_ = x.back();
    p.tab_x_ = std::move(x);
    p.tab_y_ = std::move(rho);

    // Fritsch-Carlson slopes give a C1, shape-preserving interpolant.
    const size_t n = p.tab_x_.size();
    std::vector<double> dx(n - 1), sec(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        dx[i] = p.tab_x_[i + 1] - p.tab_x_[i];
        sec[i] = (p.tab_y_[i + 1] - p.tab_y_[i]) / dx[i];
    }
    p.tab_m_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        if (sec[i - 1] * sec[i] <= 0.0) {
            p.tab_m_[i] = 0.0;
        } else {
            const double w1 = 2.0 * dx[i] + dx[i - 1];
            const double w2 = dx[i] + 2.0 * dx[i - 1];
            p.tab_m_[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
        }
    }
    // One-sided endpoint slopes with monotonicity clipping.
    auto endpoint = [](double d0, double d1, double s0, double s1) {
        double m = ((2.0 * d0 + d1) * s0 - d0 * s1) / (d0 + d1);
        if (m * s0 <= 0.0) m = 0.0;
        else if (s0 * s1 <= 0.0 && std::abs(m) > 3.0 * std::abs(s0))
            m = 3.0 * s0;
        return m;
    };
    p.tab_m_[0] = endpoint(dx[0], dx[1], sec[0], sec[1]);
    p.tab_m_[n - 1] = endpoint(dx[n - 2], dx[n - 3], sec[n - 2], sec[n - 3]);

    p.validate_positivity();
    return p;
}

int DensityProfile::tab_interval(double x3) const {
    const auto it =
        std::upper_bound(tab_x_.begin(), tab_x_.end(), x3) - tab_x_.begin();
    return std::clamp<int>(static_cast<int>(it) - 1, 0,
                           static_cast<int>(tab_x_.size()) - 2);
}

double DensityProfile::rho(double x3) const {
    switch (family_) {
        case ProfileFamily::Affine: return params_[0] + params_[1] * x3;
        case ProfileFamily::Exponential:
            return params_[0] * std::exp(params_[1] * x3);
        case ProfileFamily::TanhStep:
            return params_[0] + params_[1] * std::tanh((x3 - params_[2]) / params_[3]);
        case ProfileFamily::Tabulated: {
            const int i = tab_interval(x3);
            const double d = tab_x_[i + 1] - tab_x_[i];
            const double t = (x3 - tab_x_[i]) / d;
            const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
            const double h10 = t * (1 - t) * (1 - t);
            const double h01 = t * t * (3 - 2 * t);
            const double h11 = t * t * (t - 1);
            return h00 * tab_y_[i] + h10 * d * tab_m_[i] + h01 * tab_y_[i + 1] +
                   h11 * d * tab_m_[i + 1];
        }
    }
    return 0.0;
}

double DensityProfile::drho(double x3) const {
    switch (family_) {
        case ProfileFamily::Affine: return params_[1];
        case ProfileFamily::Exponential:
            return params_[0] * params_[1] * std::exp(params_[1] * x3);
        case ProfileFamily::TanhStep: {
            const double s = 1.0 / std::cosh((x3 - params_[2]) / params_[3]);
            return params_[1] / params_[3] * s * s;
        }
        case ProfileFamily::Tabulated: {
            const int i = tab_interval(x3);
            const double d = tab_x_[i + 1] - tab_x_[i];
            const double t = (x3 - tab_x_[i]) / d;
            const double dh00 = 6 * t * (t - 1);
            const double dh10 = (1 - t) * (1 - 3 * t);
            const double dh01 = -dh00;
            const double dh11 = t * (3 * t - 2);
            return (dh00 * tab_y_[i] + dh01 * tab_y_[i + 1]) / d +
                   dh10 * tab_m_[i] + dh11 * tab_m_[i + 1];
        }
    }
    return 0.0;
}

double DensityProfile::ddrho(double x3) const {
    switch (family_) {
        case ProfileFamily::Affine: return 0.0;
        case ProfileFamily::Exponential:
            return params_[0] * params_[1] * params_[1] * std::exp(params_[1] * x3);
        case ProfileFamily::TanhStep: {
            const double u = (x3 - params_[2]) / params_[3];
            const double s = 1.0 / std::cosh(u);
            return -2.0 * params_[1] / (params_[3] * params_[3]) * s * s * std::tanh(u);
        }
        case ProfileFamily::Tabulated: {
            const int i = tab_interval(x3);
            const double d = tab_x_[i + 1] - tab_x_[i];
            const double t = (x3 - tab_x_[i]) / d;
            const double ddh00 = 12 * t - 6;
            const double ddh10 = 6 * t - 4;
            const double ddh01 = -ddh00;
            const double ddh11 = 6 * t - 2;
            return (ddh00 * tab_y_[i] + ddh01 * tab_y_[i + 1]) / (d * d) +
                   (ddh10 * tab_m_[i] + ddh11 * tab_m_[i + 1]) / d;
        }
    }
    return 0.0;
}

double DensityProfile::pressure(double x3, double g) const {
    switch (family_) {
        case ProfileFamily::Affine:
            return -g * (params_[0] * x3 + 0.5 * params_[1] * x3 * x3);
        case ProfileFamily::Exponential: {
            if (params_[1] == 0.0) return -g * params_[0] * x3;
            return -g * params_[0] * std::expm1(params_[1] * x3) / params_[1];
        }
        case ProfileFamily::TanhStep: {
            const double w = params_[3], c = params_[2];
            return -g * (params_[0] * x3 +
                         params_[1] * w *
                             (log_cosh((x3 - c) / w) - log_cosh(-c / w)));
        }
        case ProfileFamily::Tabulated: {
            // Exact integral of the cubic Hermite pieces up to x3.
            double acc = 0.0;
            const int last = tab_interval(x3);
            for (int i = 0; i <= last; ++i) {
                const double d = tab_x_[i + 1] - tab_x_[i];
                const double t =
                    (i == last) ? (x3 - tab_x_[i]) / d : 1.0;
                // Antiderivatives of the Hermite basis at parameter t.
                const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
                const double H00 = t - t3 + 0.5 * t4;
                const double H10 = 0.5 * t2 - (2.0 / 3.0) * t3 + 0.25 * t4;
                const double H01 = t3 - 0.5 * t4;
                const double H11 = 0.25 * t4 - t3 / 3.0;
                acc += d * (H00 * tab_y_[i] + H01 * tab_y_[i + 1]) +
                       d * d * (H10 * tab_m_[i] + H11 * tab_m_[i + 1]);
            }
            return -g * acc;
        }
    }
    return 0.0;
}

double DensityProfile::min_density(int samples) const {
    double m = std::min(rho(0.0), rho(h_));
    // The analytic families are monotone, so endpoints are exact; the sweep
    // covers tabulated data and guards against parameter surprises.
    for (int i = 0; i <= samples; ++i)
        m = std::min(m, rho(h_ * i / samples));
    if (family_ == ProfileFamily::Tabulated)
        for (double y : tab_y_) m = std::min(m, y);
    return m;
}

void DensityProfile::validate_positivity() const {
    const double m = min_density();
    if (!(m > 0.0)) {
        std::ostringstream os;
        os << "density profile not strictly positive on [0, " << h_
           << "]: min sampled rho = " << m;
        fail(ErrorCode::NonPositiveDensity, os.str());
    }
}

DensityProfile::RtCheck DensityProfile::check_rt_condition(int samples) const {
    RtCheck out;
    out.max_drho = drho(0.0);
    out.witness = 0.0;
    for (int i = 1; i <= samples; ++i) {
        const double x = h_ * i / samples;
        const double d = drho(x);
        if (d > out.max_drho) {
            out.max_drho = d;
            out.witness = x;
        }
    }
    out.satisfied = out.max_drho > 0.0;
    return out;
}

double DensityProfile::max_drho_over_rho(int samples) const {
    double m = drho(0.0) / rho(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double x = h_ * i / samples;
        m = std::max(m, drho(x) / rho(x));
    }
    return m;
}

double DensityProfile::derivative_consistency_error(int samples) const {
    const double e = h_ / (8.0 * samples);
    double worst = 0.0;
    for (int i = 1; i < samples; ++i) {
        const double x = h_ * i / samples;
        if (x - e < 0.0 || x + e > h_) continue;
        const double fd = (rho(x + e) - rho(x - e)) / (2.0 * e);
        worst = std::max(worst, std::abs(fd - drho(x)));
    }
    return worst / (e * e);
}

void PhysicalParams::validate() const {
    if (!(mu > 0.0)) fail(ErrorCode::BadSpec, "mu must be > 0");
    if (!(g > 0.0)) fail(ErrorCode::BadSpec, "g must be > 0");
    if (lambda < 0.0) fail(ErrorCode::BadSpec, "lambda must be >= 0");
    if (M3 != 0.0 && !(lambda > 0.0))
        fail(ErrorCode::BadSpec, "lambda must be > 0 when M3 != 0");
}

} // namespace rtlab
