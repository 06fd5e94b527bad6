#include "core/normal_modes.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/quadrature.hpp"

namespace rtlab {

namespace {

constexpr double kRateTol = 1e-9;       // bisection width on s
constexpr double kResidualTol = 1e-9;   // |s^2 - alpha(s)| stop, relative
constexpr int kMaxBisection = 200;

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

// Deterministic sign convention: make the largest-magnitude entry positive.
void fix_sign(Eigen::VectorXd& v) {
    int idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0.0) v = -v;
}

} // namespace

void Geometry::validate() const {
    if (!(L > 0.0) || !(h > 0.0))
        fail(ErrorCode::BadSpec, "geometry lengths must be > 0");
    if (n_vertical < 8)
        fail(ErrorCode::BadSpec, "vertical resolution must be >= 8");
    if (kind == Kind::BoxClamped && n_horizontal < 8)
        fail(ErrorCode::BadSpec, "horizontal resolution must be >= 8");
}

Geometry Geometry::layer(double L1, double h, int n_vertical) {
    Geometry g;
    g.kind = Kind::LayerPeriodic;
    g.L = L1;
    g.h = h;
    g.n_vertical = n_vertical;
    g.validate();
    return g;
}

Geometry Geometry::box(double L, double h, int nx, int nz) {
    Geometry g;
    g.kind = Kind::BoxClamped;
    g.L = L;
    g.h = h;
    g.n_horizontal = nx;
    g.n_vertical = nz;
    g.validate();
    return g;
}

AlphaEval largest_eigenpair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::SingularForms,
             "mass form not positive definite in generalized eigensolve");
    const int last = static_cast<int>(a.rows()) - 1;
    AlphaEval out;
    out.value = solver.eigenvalues()[last];
    out.vec = solver.eigenvectors().col(last);
    fix_sign(out.vec);
    return out;
}

std::vector<double> wavenumber_lattice(double L1, int count) {
    std::vector<double> ks;
    ks.reserve(count);
    for (int n = 1; n <= count; ++n) ks.push_back(n / L1);
    return ks;
}

// ---------------------------------------------------------------------------
// LayerModeSolver
// ---------------------------------------------------------------------------

LayerModeSolver::LayerModeSolver(const DensityProfile& profile,
                                 const PhysicalParams& params,
                                 const Geometry& geom)
    : profile_(profile),
      params_(params),
      geom_(geom),
      basis_(geom.n_vertical, geom.h) {
    params_.validate();
    geom_.validate();
    if (std::abs(geom.h - profile.height()) > 1e-12 * profile.height())
        fail(ErrorCode::BadSpec, "geometry height must match profile height");
    forms_ = assemble_vertical_forms(basis_, profile_);
    max_drho_over_rho_ = profile_.max_drho_over_rho();
    s_hi_ = std::sqrt(std::max(params_.g * max_drho_over_rho_, 0.0)) + 1.0;
}

AlphaEval LayerModeSolver::alpha(double s, double k) const {
    return alpha_mhd(s, k, 0.0);
}

AlphaEval LayerModeSolver::alpha_mhd(double s, double k,
                                     double lambda_m3_sq) const {
    if (!(k > 0.0)) fail(ErrorCode::BadSpec, "wavenumber must be > 0");
    const double k2 = k * k;
    Eigen::MatrixXd a = params_.g * forms_.buoy;
    if (s != 0.0)
        a -= (s * params_.mu) *
             (forms_.s2 / k2 + 2.0 * forms_.s1 + k2 * forms_.s0);
    if (lambda_m3_sq != 0.0)
        a -= lambda_m3_sq * (forms_.s2 / k2 + forms_.s1);
    const Eigen::MatrixXd m = forms_.mass0 + forms_.mass1 / k2;
    return largest_eigenpair(a, m);
}

ModeResult LayerModeSolver::solve_impl(double k, double lambda_m3_sq) const {
    ModeResult mode;
    mode.k = k;
    mode.L = geom_.L;
    mode.h = geom_.h;

    AlphaEval a0 = alpha_mhd(0.0, k, lambda_m3_sq);
    mode.alpha_at_0 = a0.value;
    mode.alpha_trace.emplace_back(0.0, a0.value);
    if (a0.value <= 0.0) {
        mode.lambda = 0.0;
        mode.converged = true;
        mode.phi = a0.vec;
        return mode;
    }

    // F(s) = s^2 - alpha(s) is strictly increasing; bracket [0, s_hi] is
    // guaranteed since alpha(s) <= alpha(0) <= g * max(rho'/rho).
    double lo = 0.0, hi = s_hi_;
    AlphaEval best = a0;
    double mid = 0.0;
    int it = 0;
    for (; it < kMaxBisection; ++it) {
        mid = 0.5 * (lo + hi);
        AlphaEval am = alpha_mhd(mid, k, lambda_m3_sq);
        mode.alpha_trace.emplace_back(mid, am.value);
        const double f = mid * mid - am.value;
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
        best = am;
        const double resid_tol = kResidualTol * std::max(1.0, mid * mid);
        if (hi - lo < kRateTol && std::abs(f) < resid_tol) break;
    }
    if (it >= kMaxBisection)
        fail(ErrorCode::NoConvergence,
             "growth-rate bisection exceeded iteration cap");

    mode.lambda = mid;
    mode.iterations = it + 1;
    mode.phi = best.vec;
    mode.converged = true;
    return mode;
}

ModeResult LayerModeSolver::solve(double k) const { return solve_impl(k, 0.0); }

ModeResult LayerModeSolver::solve_mhd(double k, double M3, double lambda) const {
    const double lm = lambda * M3 * M3;
    if (lm == 0.0) return solve_impl(k, 0.0); // exact hydrodynamic path
    return solve_impl(k, lm);
}

SweepResult LayerModeSolver::sweep(const std::vector<double>& ks) const {
    return sweep_mhd(ks, 0.0, 0.0);
}

SweepResult LayerModeSolver::sweep_mhd(const std::vector<double>& ks, double M3,
                                       double lambda) const {
    if (ks.empty()) fail(ErrorCode::BadSpec, "wavenumber grid is empty");
    for (size_t i = 0; i < ks.size(); ++i) {
        if (!(ks[i] > 0.0))
            fail(ErrorCode::BadSpec, "wavenumbers must be positive");
        if (i > 0 && !(ks[i] > ks[i - 1]))
            fail(ErrorCode::BadSpec, "wavenumber grid must be sorted ascending");
    }
    SweepResult out;
    out.table.reserve(ks.size());
    for (double k : ks) {
        out.table.push_back(solve_mhd(k, M3, lambda));
        const ModeResult& m = out.table.back();
        if (m.lambda > out.lambda_star) {
            out.lambda_star = m.lambda;
            out.k_star = k;
        }
    }
    return out;
}

MhdStabilityReport LayerModeSolver::critical_field(
    double lambda, const std::vector<double>& ks) const {
    if (!(lambda > 0.0))
        fail(ErrorCode::BadSpec, "critical field requires lambda > 0");
    if (ks.empty()) fail(ErrorCode::BadSpec, "wavenumber grid is empty");
    MhdStabilityReport report;
    for (double k : ks) {
        const double k2 = k * k;
        const Eigen::MatrixXd num = params_.g * forms_.buoy;
        const Eigen::MatrixXd den = forms_.s2 / k2 + forms_.s1;
        AlphaEval e = largest_eigenpair(num, den);
        MhdStabilityReport::Row row;
        row.k = k;
        row.m_star_k = e.value;
        row.threshold_k = std::sqrt(std::max(e.value, 0.0) / lambda);
        row.lambda_hydro = solve(k).lambda;
        report.rows.push_back(row);
        if (e.value / lambda > report.m_star) {
            report.m_star = e.value / lambda;
            report.threshold_field = row.threshold_k;
        }
    }
    report.m_star = std::max(report.m_star, 0.0);
    return report;
}

Eigen::VectorXd LayerModeSolver::pressure_amplitude(
    const ModeResult& mode, const Eigen::VectorXd& z) const {
    // Vertical momentum balance: Lambda qhat' = g rho' phi
    //   - Lambda^2 rho phi + Lambda mu (phi'' - k^2 phi), integrated from 0.
    const double lam = mode.lambda;
    const double k2 = mode.k * mode.k;
    Eigen::VectorXd q(z.size());
    if (lam <= 0.0) {
        q.setZero();
        return q;
    }
    auto integrand = [&](double x) {
        const double phi = basis_.eval(mode.phi, x, 0);
        const double ddphi = basis_.eval(mode.phi, x, 2);
        return (params_.g * profile_.drho(x) * phi - lam * lam * profile_.rho(x) * phi +
                lam * params_.mu * (ddphi - k2 * phi)) /
               lam;
    };
    double acc = 0.0;
    double prev = 0.0;
    for (int i = 0; i < z.size(); ++i) {
        acc += integrate(integrand, prev, z[i], 4, 24);
        prev = z[i];
        q[i] = acc;
    }
    // The integration constant is pinned by the horizontal momentum balance
    // (the 2D pressure mean over whole periods vanishes for any constant, so
    // mean-zero carries no information here). Average the pin over a few
    // interior points to keep third-derivative round-off out of it.
    double pin = 0.0;
    int count = 0;
    for (double frac : {0.3, 0.4, 0.5, 0.6, 0.7}) {
        const double x = frac * geom_.h;
        const double dphi = basis_.eval(mode.phi, x, 1);
        const double dddphi = basis_.eval(mode.phi, x, 3);
        const double qh = -lam * profile_.rho(x) * dphi / k2 -
                          params_.mu * (dphi - dddphi / k2);
        const double qx = integrate(integrand, 0.0, x, 8, 24);
        pin += qh - qx;
        ++count;
    }
    q.array() += pin / count;
    return q;
}

double LayerModeSolver::momentum_residual(const ModeResult& mode,
                                          int samples) const {
    if (mode.lambda <= 0.0) return 0.0;
    const double lam = mode.lambda;
    const double k = mode.k;
    // Sample the interior only: near the endpoints the third derivative of a
    // degree-(N+3) Chebyshev combination amplifies coefficient round-off by
    // O(N^6), which would swamp the true residual.
    Eigen::VectorXd z(samples);
    for (int i = 0; i < samples; ++i)
        z[i] = geom_.h * (0.05 + 0.9 * (i + 0.5) / samples);
    const Eigen::VectorXd qhat = pressure_amplitude(mode, z);

    // The vertical balance defines qhat, so the content sits in the
    // horizontal balance: Lambda^2 rho (-phi'/k) - Lambda k qhat
    // - Lambda mu (k phi' - phi'''/k) = 0 pointwise for an exact mode.
    double sum = 0.0, scale = 1e-300;
    for (int i = 0; i < samples; ++i) {
        const double x = z[i];
        const double rho = profile_.rho(x);
        const double dphi = basis_.eval(mode.phi, x, 1);
        const double dddphi = basis_.eval(mode.phi, x, 3);
        const double rh = lam * lam * rho * (-dphi / k) - lam * k * qhat[i] -
                          lam * params_.mu * (k * dphi - dddphi / k);
        scale = std::max({scale, std::abs(lam * lam * rho * dphi / k),
                          std::abs(lam * k * qhat[i]),
                          std::abs(lam * params_.mu * dddphi / k)});
        sum += rh * rh;
    }
    return std::sqrt(sum / samples) / scale;
}

// ---------------------------------------------------------------------------
// BoxModeSolver
// ---------------------------------------------------------------------------

BoxModeSolver::BoxModeSolver(const DensityProfile& profile,
                             const PhysicalParams& params, const Geometry& geom)
    : profile_(profile),
      params_(params),
      geom_(geom),
      bx_(geom.n_horizontal, geom.L),
      bz_(geom.n_vertical, geom.h) {
    params_.validate();
    geom_.validate();
    if (geom.kind != Geometry::Kind::BoxClamped)
        fail(ErrorCode::BadSpec, "BoxModeSolver requires box-clamped geometry");

    const IntervalForms fx = assemble_interval_forms(bx_);
    const VerticalForms fz = assemble_vertical_forms(bz_, profile_);

    a0_ = params_.g * kron(fx.s1, fz.buoy);
    visc_ = kron(fx.s2, fz.s0) + 2.0 * kron(fx.s1, fz.s1) + kron(fx.s0, fz.s2);
    mass_ = kron(fx.s1, fz.mass0) + kron(fx.s0, fz.mass1);

    const double mdr = profile_.max_drho_over_rho();
    s_hi_ = std::sqrt(std::max(params_.g * mdr, 0.0)) + 1.0;
}

double BoxModeSolver::alpha(double s) const {
    return largest_eigenpair(a0_ - (s * params_.mu) * visc_, mass_).value;
}

ModeResult BoxModeSolver::solve() const {
    ModeResult mode;
    mode.k = 0.0;
    mode.nx = bx_.size();
    mode.nz = bz_.size();
    mode.L = geom_.L;
    mode.h = geom_.h;

    AlphaEval a0 = largest_eigenpair(a0_, mass_);
    mode.alpha_at_0 = a0.value;
    mode.alpha_trace.emplace_back(0.0, a0.value);
    if (a0.value <= 0.0) {
        mode.lambda = 0.0;
        mode.converged = true;
        mode.psi = a0.vec;
        return mode;
    }

    // Definiteness probes: F(s) > 0 iff s^2 M - A(s) is positive definite.
    double lo = 0.0, hi = s_hi_;
    int it = 0;
    for (; it < kMaxBisection && hi - lo > kRateTol; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eigen::MatrixXd b = (mid * mid) * mass_ - a0_ + (mid * params_.mu) * visc_;
        Eigen::LLT<Eigen::MatrixXd> llt(b);
        if (llt.info() == Eigen::Success)
            hi = mid; // alpha(mid) < mid^2
        else
            lo = mid;
    }
    if (it >= kMaxBisection)
        fail(ErrorCode::NoConvergence,
             "box growth-rate bisection exceeded iteration cap");

    const double lam = 0.5 * (lo + hi);
    AlphaEval fin = largest_eigenpair(a0_ - (lam * params_.mu) * visc_, mass_);
    mode.alpha_trace.emplace_back(lam, fin.value);
    mode.lambda = lam;
    mode.iterations = it;
    mode.psi = fin.vec;
    mode.converged =
        std::abs(lam * lam - fin.value) <= 1e-8 * std::max(1.0, lam * lam);
    return mode;
}

Eigen::MatrixXd BoxModeSolver::eval_psi(const ModeResult& mode,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& z, int dx,
                                        int dz) const {
    const Eigen::MatrixXd vx = bx_.eval_matrix(x, dx); // (npx, nx)
    const Eigen::MatrixXd vz = bz_.eval_matrix(z, dz); // (npz, nz)
    Eigen::MatrixXd coeff =
        Eigen::Map<const Eigen::MatrixXd>(mode.psi.data(), mode.nz, mode.nx);
    // psi(xi, zj) = sum_{m,n} c[n,m] Bx_m(xi) Bz_n(zj); coeff is (nz, nx).
    return vx * coeff.transpose() * vz.transpose(); // (npx, npz)
}

} // namespace rtlab
