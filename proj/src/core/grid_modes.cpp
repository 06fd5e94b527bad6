#include "core/grid_modes.hpp"

#include <cmath>

#include "core/mac_ops.hpp"
#include "core/poisson.hpp"

namespace rtlab {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> from_triplets(int rows, int cols, Triplets& t) {
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

} // namespace

GridModeSolver::GridModeSolver(const MacGrid& grid,
                               const DensityProfile& profile,
                               const PhysicalParams& params)
    : GridModeSolver(grid, profile, params, Options()) {}

GridModeSolver::GridModeSolver(const MacGrid& grid,
                               const DensityProfile& profile,
                               const PhysicalParams& params, Options opts)
    : grid_(grid),
      profile_(profile),
      params_(params),
      opts_(opts),
      faces_(grid),
      corners_(grid) {
    params_.validate();
    const MacGrid& g = grid_;
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    const double vol = g.cell_volume();

    rho_center_ = g.center_array();
    drho_center_ = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            rho_center_(i, j) = profile_.rho(g.zc(j));
            drho_center_(i, j) = profile_.drho(g.zc(j));
        }

    // Face densities: averages of the adjacent center samples (one value for
    // u1 faces, which sit at center height).
    rho_face_.resize(faces_.total());
    {
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i)
                rho_face_[faces_.u1(i, j)] = profile_.rho(g.zc(j));
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i)
                rho_face_[faces_.u3(i, j)] =
                    0.5 * (rho_center_(i, j - 1) + rho_center_(i, j));
    }

    // curl: u1 = dz psi, u3 = -dx psi (interior faces; boundary corners 0).
    {
        Triplets t;
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) {
                const int row = faces_.u1(i, j);
                const int top = corners_.at(i, j + 1);
                const int bot = corners_.at(i, j);
                if (top >= 0) t.emplace_back(row, top, idz);
                if (bot >= 0) t.emplace_back(row, bot, -idz);
            }
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int row = faces_.u3(i, j);
                const int ip = g.periodic_x ? g.wrap_x(i + 1) : i + 1;
                const int right = corners_.at(ip, j);
                const int left = corners_.at(i, j);
                if (right >= 0) t.emplace_back(row, right, -idx);
                if (left >= 0) t.emplace_back(row, left, idx);
            }
        curl_ = from_triplets(faces_.total(), corners_.count, t);
    }

    // Buoyancy form on u3 faces: for each center, g*rho'_c * (average of the
    // two adjacent u3 faces)^2 * vol. This is the same center-average
    // composition the steppers use for the g*rho term.
    {
        Triplets t;
        for (int j = 0; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double w = params_.g * drho_center_(i, j) * vol;
                const int fa = faces_.u3(i, j);
                const int fb = faces_.u3(i, j + 1);
                const int ids[2] = {fa, fb};
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        if (ids[a] >= 0 && ids[b] >= 0)
                            t.emplace_back(ids[a], ids[b], 0.25 * w);
            }
        buoy_ = from_triplets(faces_.total(), faces_.total(), t);
    }

    // Viscous form: vol * (-lap) with the mirror-ghost closure; symmetric.
    {
        Triplets t;
        const double ix2 = idx * idx, iz2 = idz * idz;
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) {
                const int row = faces_.u1(i, j);
                double diag = 2.0 * ix2 + 2.0 * iz2;
                for (int di : {-1, 1}) {
                    const int in = g.periodic_x ? g.wrap_x(i + di) : i + di;
                    const int c = faces_.u1(in, j);
                    if (c >= 0) t.emplace_back(row, c, -ix2 * vol);
                }
                for (int dj : {-1, 1}) {
                    const int jn = j + dj;
                    if (jn < 0 || jn >= g.nz)
                        diag += iz2;
                    else
                        t.emplace_back(row, faces_.u1(i, jn), -iz2 * vol);
                }
                t.emplace_back(row, row, diag * vol);
            }
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int row = faces_.u3(i, j);
                double diag = 2.0 * ix2 + 2.0 * iz2;
                for (int di : {-1, 1}) {
                    if (g.periodic_x) {
                        t.emplace_back(row, faces_.u3(g.wrap_x(i + di), j),
                                       -ix2 * vol);
                    } else {
                        const int in = i + di;
                        if (in < 0 || in >= g.nx)
                            diag += ix2;
                        else
                            t.emplace_back(row, faces_.u3(in, j), -ix2 * vol);
                    }
                }
                for (int dj : {-1, 1}) {
                    const int c = faces_.u3(i, j + dj);
                    if (c >= 0) t.emplace_back(row, c, -iz2 * vol);
                }
                t.emplace_back(row, row, diag * vol);
            }
        visc_ = from_triplets(faces_.total(), faces_.total(), t);
    }

    // Magnetic tension form: vertical edge differences with half-weight wall
    // edges (the same closure grad_sq and the induction/Lorentz pair use).
    // Edge differences see every representable mode, so no discrete mode
    // escapes the tension.
    {
        Triplets t;
        const double iz2 = idz * idz;
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j <= g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) {
                if (j == 0 || j == g.nz) {
                    const int f = faces_.u1(i, j == 0 ? 0 : g.nz - 1);
                    // (2u/dz)^2 * (1/2) = 2 u^2/dz^2
                    t.emplace_back(f, f, 2.0 * iz2 * vol);
                } else {
                    const int fa = faces_.u1(i, j - 1);
                    const int fb = faces_.u1(i, j);
                    t.emplace_back(fa, fa, iz2 * vol);
                    t.emplace_back(fb, fb, iz2 * vol);
                    t.emplace_back(fa, fb, -iz2 * vol);
                    t.emplace_back(fb, fa, -iz2 * vol);
                }
            }
        for (int j = 0; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int fa = faces_.u3(i, j);
                const int fb = faces_.u3(i, j + 1);
                const int ids[2] = {fa, fb};
                const double sg[2] = {-1.0, 1.0};
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        if (ids[a] >= 0 && ids[b] >= 0)
                            t.emplace_back(ids[a], ids[b],
                                           sg[a] * sg[b] * iz2 * vol);
            }
        kz_face_ = from_triplets(faces_.total(), faces_.total(), t);
    }

    Eigen::SparseMatrix<double> face_a0 = buoy_;
    if (opts_.lambda_m3_sq != 0.0)
        face_a0 = (face_a0 - opts_.lambda_m3_sq * kz_face_).pruned();
    a0_psi_ = (curl_.transpose() * face_a0 * curl_).pruned();
    k_psi_ = (curl_.transpose() * visc_ * curl_).pruned();
    {
        Eigen::SparseMatrix<double> mass(faces_.total(), faces_.total());
        Triplets t;
        for (int i = 0; i < faces_.total(); ++i)
            t.emplace_back(i, i, rho_face_[i] * vol);
        mass = from_triplets(faces_.total(), faces_.total(), t);
        m_psi_ = (curl_.transpose() * mass * curl_).pruned();
    }

    sigma_ = params_.g * profile_.max_drho_over_rho() + 1.0;
    if (sigma_ < 1.0) sigma_ = 1.0;
}

double GridModeSolver::alpha(double s, Eigen::VectorXd* warm) const {
    Eigen::SparseMatrix<double> a = a0_psi_ - (s * params_.mu) * k_psi_;
    Eigen::SparseMatrix<double> shifted = (sigma_ * m_psi_ - a).pruned();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success)
        fail(ErrorCode::SingularForms,
             "shifted pencil not positive definite in grid eigensolve");

    Eigen::VectorXd vec;
    if (warm && warm->size() == corners_.count) {
        vec = *warm;
    } else {
        vec.setOnes(corners_.count);
        for (int i = 0; i < vec.size(); ++i)
            vec[i] += 0.01 * ((i * 2654435761u) % 97) / 97.0;
    }
    vec /= std::sqrt(vec.dot(m_psi_ * vec));

    // Inverse iteration on (sigma M - A)^{-1} M converges to the largest
    // alpha; the Rayleigh quotient stagnates at machine precision.
    double theta = -1e300, theta_prev = -1e300;
    for (int it = 0; it < opts_.max_power_iterations; ++it) {
        Eigen::VectorXd y = ldlt.solve(m_psi_ * vec);
        const double norm = std::sqrt(y.dot(m_psi_ * y));
        if (!(norm > 0.0))
            fail(ErrorCode::SingularForms, "grid eigensolve mass degenerated");
        vec = y / norm;
        theta = vec.dot(a * vec) / vec.dot(m_psi_ * vec);
        if (it > 1 && std::abs(theta - theta_prev) <=
                          1e-15 * std::max(1.0, std::abs(theta)))
            break;
        theta_prev = theta;
    }
    if (warm) *warm = vec;
    return theta;
}

GridMode GridModeSolver::solve(const Array2D* psi_seed) const {
    GridMode out;
    Eigen::VectorXd warm;
    if (psi_seed) warm = corners_.gather(*psi_seed);

    const double a0 = alpha(0.0, &warm);
    out.alpha_trace.emplace_back(0.0, a0);
    if (a0 <= 0.0) {
        out.lambda = 0.0;
        out.psi = corners_.scatter(warm);
        return out;
    }

    double lo = 0.0, hi = std::sqrt(a0) + 1e-3;
    // F(hi) = hi^2 - alpha(hi) >= hi^2 - alpha(0) > 0.
    double mid = 0.0;
    int it = 0;
    for (; it < opts_.max_bisection; ++it) {
        mid = 0.5 * (lo + hi);
        const double am = alpha(mid, &warm);
        out.alpha_trace.emplace_back(mid, am);
        if (mid * mid - am < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= opts_.s_tol) break;
    }
    if (it >= opts_.max_bisection)
        fail(ErrorCode::NoConvergence,
             "grid growth-rate bisection exceeded iteration cap");
    out.iterations = it + 1;
    out.lambda = mid;

    // Final eigenvector extraction with a tight shift for machine precision.
    {
        const double am = alpha(mid, &warm);
        const double tight = std::max(am, mid * mid) + 1e-6 * std::max(1.0, mid * mid);
        Eigen::SparseMatrix<double> a = a0_psi_ - (mid * params_.mu) * k_psi_;
        Eigen::SparseMatrix<double> shifted = (tight * m_psi_ - a).pruned();
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
        if (ldlt.info() == Eigen::Success) {
            for (int sweep = 0; sweep < 6; ++sweep) {
                Eigen::VectorXd y = ldlt.solve(m_psi_ * warm);
                const double norm = std::sqrt(y.dot(m_psi_ * y));
                if (!(norm > 0.0)) break;
                warm = y / norm;
            }
        }
        const double num = warm.dot(a * warm);
        const double den = warm.dot(m_psi_ * warm);
        out.alpha_gap = std::abs(mid * mid - num / den);
    }

    // Deterministic sign, unit rho-weighted velocity norm.
    {
        Eigen::VectorXd uface = curl_ * warm;
        double m = 0.0;
        int idx = 0;
        for (int i = 0; i < uface.size(); ++i)
            if (std::abs(uface[i]) > m) {
                m = std::abs(uface[i]);
                idx = i;
            }
        if (uface[idx] < 0.0) warm = -warm;
        const double norm = std::sqrt(warm.dot(m_psi_ * warm));
        warm /= norm;
    }

    out.psi = corners_.scatter(warm);
    Eigen::VectorXd uvec = curl_ * warm;
    out.u = faces_.scatter(uvec);

    // rho_tilde at centers from the face-average of u3 (the same composition
    // the linear stepper integrates).
    out.rho_tilde = grid_.center_array();
    {
        Array2D u3c = u3_to_center(grid_, out.u.u3);
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                out.rho_tilde(i, j) =
                    -drho_center_(i, j) * u3c(i, j) / out.lambda;
    }

    // Pressure recovery: q with grad q = momentum flux; the remainder is the
    // divergence-free defect (eigensolver tolerance).
    Eigen::VectorXd fvec = momentum_flux(out.lambda, uvec);
    VectorField ffield = faces_.scatter(fvec);
    CenterPoisson poisson(grid_);
    Array2D divf = divergence(grid_, ffield);
    for (double& v : divf.v) v = -v;
    out.q_tilde = poisson.solve(divf);
    VectorField gq = gradient(grid_, out.q_tilde);
    Eigen::VectorXd rvec = fvec - faces_.gather(gq);
    out.momentum_residual = std::sqrt(rvec.squaredNorm() * grid_.cell_volume());

    Array2D div = divergence(grid_, out.u);
    out.div_max = max_abs(div);
    return out;
}

Eigen::VectorXd GridModeSolver::momentum_flux(double lambda,
                                              const Eigen::VectorXd& u) const {
    Eigen::VectorXd f = buoy_ * u / grid_.cell_volume();
    if (opts_.lambda_m3_sq != 0.0)
        f -= (opts_.lambda_m3_sq / grid_.cell_volume()) * (kz_face_ * u);
    f -= (lambda * lambda) * rho_face_.cwiseProduct(u);
    f -= (lambda * params_.mu / grid_.cell_volume()) * (visc_ * u);
    return f / lambda;
}

GridMode eigenfunction_fields(const ModeResult& mode,
                              const LayerModeSolver* layer_solver,
                              const BoxModeSolver* box_solver,
                              const DensityProfile& profile,
                              const PhysicalParams& params, const MacGrid& grid,
                              GridModeSolver::Options opts) {
    if (!(mode.lambda > 0.0))
        fail(ErrorCode::BadSpec,
             "eigenfunction_fields requires an unstable mode (Lambda > 0)");

    // Seed streamfunction at the grid corners from the spectral mode.
    Array2D psi = grid.corner_array();
    if (mode.is_box()) {
        if (!box_solver)
            fail(ErrorCode::BadSpec, "box mode requires the box solver");
        Eigen::VectorXd xs(grid.ncorner_x()), zs(grid.ncorner_z());
        for (int i = 0; i < grid.ncorner_x(); ++i) xs[i] = grid.xu1(i);
        for (int j = 0; j < grid.ncorner_z(); ++j) zs[j] = grid.zu3(j);
        Eigen::MatrixXd vals = box_solver->eval_psi(mode, xs, zs, 0, 0);
        for (int j = 0; j < grid.ncorner_z(); ++j)
            for (int i = 0; i < grid.ncorner_x(); ++i)
                psi(i, j) = vals(i, j);
    } else {
        if (!layer_solver)
            fail(ErrorCode::BadSpec, "layer mode requires the layer solver");
        const double k = mode.k;
        for (int j = 0; j < grid.ncorner_z(); ++j) {
            const double phi =
                layer_solver->basis().eval(mode.phi, grid.zu3(j), 0);
            for (int i = 0; i < grid.ncorner_x(); ++i)
                psi(i, j) = -phi * std::sin(k * grid.xu1(i)) / k;
        }
    }

    GridModeSolver solver(grid, profile, params, opts);
    GridMode gm = solver.solve(&psi);
    if (gm.lambda <= 0.0)
        fail(ErrorCode::DegenerateMode,
             "grid refinement lost the unstable mode");

    // Nondegeneracy of the components (the instability norms need them all).
    const double n3 = l1_norm_u3(grid, gm.u.u3);
    const double nh = l1_norm_u1(grid, gm.u.u1);
    const double nr = l1_norm(grid, gm.rho_tilde);
    if (n3 <= 1e-12 || nh <= 1e-12 || nr <= 1e-12)
        fail(ErrorCode::DegenerateMode,
             "degenerate eigenfunction: a component has zero mass");
    return gm;
}

} // namespace rtlab
