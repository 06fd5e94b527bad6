#include "core/stokes.hpp"

#include <cmath>

#include "core/mac_ops.hpp"

namespace rtlab {

StokesSolver::StokesSolver(const MacGrid& grid, double coefficient)
    : grid_(grid), coeff_(coefficient) {
    if (!(coefficient > 0.0))
        fail(ErrorCode::BadSpec, "Stokes coefficient must be > 0");
    const MacGrid& g = grid_;
    n_u1_ = g.periodic_x ? g.nx * g.nz : (g.nx - 1) * g.nz;
    n_u3_ = g.nx * (g.nz - 1);
    n_p_ = g.nx * g.nz;
    n_total_ = n_u1_ + n_u3_ + n_p_ + 1;

    const double vol = g.cell_volume();
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    auto pid = [&](int i, int j) { return n_u1_ + n_u3_ + j * g.nx + i; };
    const int mrow = n_total_ - 1;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n_total_) * 8);

    // u1 momentum rows.
    const int i_lo = g.periodic_x ? 0 : 1;
    for (int j = 0; j < g.nz; ++j) {
        for (int i = i_lo; i < g.nx; ++i) {
            const int row = u1_index(i, j);
            double diag = 2.0 * ix2 + 2.0 * iz2;
            // x-neighbors
            for (int di : {-1, 1}) {
                const int in = g.periodic_x ? g.wrap_x(i + di) : i + di;
                const int idx_n = u1_index(in, j);
                if (idx_n >= 0)
                    trip.emplace_back(row, idx_n, -coeff_ * ix2 * vol);
                // otherwise the neighbor is a constrained boundary face (0)
            }
            // z-neighbors with mirror ghosts at walls
            for (int dj : {-1, 1}) {
                const int jn = j + dj;
                if (jn < 0 || jn >= g.nz)
                    diag += iz2; // ghost = -self
                else
                    trip.emplace_back(row, u1_index(i, jn), -coeff_ * iz2 * vol);
            }
            trip.emplace_back(row, row, coeff_ * diag * vol);
            // pressure gradient: (q(i,j) - q(i-1,j))/dx
            const int il = g.periodic_x ? g.wrap_x(i - 1) : i - 1;
            trip.emplace_back(row, pid(i, j), idx * vol);
            trip.emplace_back(row, pid(il, j), -idx * vol);
        }
    }
    // u3 momentum rows.
    for (int j = 1; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int row = u3_index(i, j);
            double diag = 2.0 * ix2 + 2.0 * iz2;
            for (int di : {-1, 1}) {
                if (g.periodic_x) {
                    trip.emplace_back(row, u3_index(g.wrap_x(i + di), j),
                                      -coeff_ * ix2 * vol);
                } else {
                    const int in = i + di;
                    if (in < 0 || in >= g.nx)
                        diag += ix2; // mirror ghost
                    else
                        trip.emplace_back(row, u3_index(in, j),
                                          -coeff_ * ix2 * vol);
                }
            }
            for (int dj : {-1, 1}) {
                const int jn = j + dj;
                const int idx_n = u3_index(i, jn);
                if (idx_n >= 0)
                    trip.emplace_back(row, idx_n, -coeff_ * iz2 * vol);
            }
            trip.emplace_back(row, row, coeff_ * diag * vol);
            trip.emplace_back(row, pid(i, j), idz * vol);
            trip.emplace_back(row, pid(i, j - 1), -idz * vol);
        }
    }
    // Continuity rows (at pressure positions) + multiplier column.
    for (int j = 0; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int row = pid(i, j);
            const int right = g.periodic_x ? g.wrap_x(i + 1) : i + 1;
            const int iright = u1_index(right, j);
            const int ileft = u1_index(i, j);
            if (iright >= 0) trip.emplace_back(row, iright, idx * vol);
            if (ileft >= 0) trip.emplace_back(row, ileft, -idx * vol);
            const int itop = u3_index(i, j + 1);
            const int ibot = u3_index(i, j);
            if (itop >= 0) trip.emplace_back(row, itop, idz * vol);
            if (ibot >= 0) trip.emplace_back(row, ibot, -idz * vol);
            trip.emplace_back(row, mrow, vol);
            trip.emplace_back(mrow, row, vol);
        }
    }

    Eigen::SparseMatrix<double> a(n_total_, n_total_);
    a.setFromTriplets(trip.begin(), trip.end());
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(a);
    if (lu_->info() != Eigen::Success)
        fail(ErrorCode::SolverFailure, "Stokes factorization failed");
}

int StokesSolver::u1_index(int i, int j) const {
    const MacGrid& g = grid_;
    if (g.periodic_x) return j * g.nx + g.wrap_x(i);
    if (i <= 0 || i >= g.nx) return -1; // boundary face
    return j * (g.nx - 1) + (i - 1);
}

int StokesSolver::u3_index(int i, int j) const {
    const MacGrid& g = grid_;
    if (j <= 0 || j >= g.nz) return -1;
    return n_u1_ + (j - 1) * g.nx + i;
}

StokesSolution StokesSolver::solve(const StokesProblem& problem) const {
    if (problem.coefficient != coeff_)
        fail(ErrorCode::BadSpec,
             "Stokes problem coefficient does not match the factorized solver");
    return solve(problem.body_force, problem.divergence_data);
}

StokesSolution StokesSolver::solve(const VectorField& f,
                                   const Array2D& gdiv) const {
    const MacGrid& g = grid_;
    const double vol = g.cell_volume();

    // Compatibility: the divergence data must integrate to ~zero.
    double integral = 0.0, l1 = 0.0;
    for (double x : gdiv.v) {
        integral += x * vol;
        l1 += std::abs(x) * vol;
    }
    if (std::abs(integral) > 1e-10 * std::max(1.0, l1))
        fail(ErrorCode::IncompatibleDivergence,
             "divergence data integral " + std::to_string(integral) +
                 " exceeds the compatibility tolerance");
    const double mean = integral / (g.nx * g.nz * vol);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_total_);
    const int i_lo = g.periodic_x ? 0 : 1;
    for (int j = 0; j < g.nz; ++j)
        for (int i = i_lo; i < g.nx; ++i)
            rhs[u1_index(i, j)] = f.u1(i, j) * vol;
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            rhs[u3_index(i, j)] = f.u3(i, j) * vol;
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            rhs[n_u1_ + n_u3_ + j * g.nx + i] = (gdiv(i, j) - mean) * vol;

    Eigen::VectorXd x = lu_->solve(rhs);
    if (lu_->info() != Eigen::Success)
        fail(ErrorCode::SolverFailure, "Stokes solve failed");

    StokesSolution sol;
    sol.velocity = VectorField(g);
    sol.pressure = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = i_lo; i < g.nx; ++i)
            sol.velocity.u1(i, j) = x[u1_index(i, j)];
    if (g.periodic_x)
        for (int j = 0; j < g.nz; ++j) sol.velocity.u1(g.nx, j) = 0.0;
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            sol.velocity.u3(i, j) = x[u3_index(i, j)];
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            sol.pressure(i, j) = x[n_u1_ + n_u3_ + j * g.nx + i];
    // Mean-zero pressure (the multiplier enforces it; tidy up round-off).
    double pmean = 0.0;
    for (double q : sol.pressure.v) pmean += q;
    pmean /= sol.pressure.size();
    for (double& q : sol.pressure.v) q -= pmean;

    // Residuals recomputed through the shared operators.
    VectorField lap = laplacian(g, sol.velocity);
    VectorField gq = gradient(g, sol.pressure);
    double mom2 = 0.0, f2 = 0.0;
    for (int j = 0; j < g.nz; ++j)
        for (int i = i_lo; i < g.nx; ++i) {
            const double r = -coeff_ * lap.u1(i, j) + gq.u1(i, j) - f.u1(i, j);
            mom2 += r * r;
            f2 += f.u1(i, j) * f.u1(i, j);
        }
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double r = -coeff_ * lap.u3(i, j) + gq.u3(i, j) - f.u3(i, j);
            mom2 += r * r;
            f2 += f.u3(i, j) * f.u3(i, j);
        }
    sol.momentum_residual = std::sqrt(mom2 / (1.0 + f2));

    Array2D div = divergence(g, sol.velocity);
    double dv2 = 0.0, g2 = 0.0;
    for (size_t i = 0; i < div.v.size(); ++i) {
        const double r = div.v[i] - (gdiv.v[i] - mean);
        dv2 += r * r;
        g2 += gdiv.v[i] * gdiv.v[i];
    }
    sol.divergence_residual = std::sqrt(dv2 / (1.0 + g2));

    if (sol.momentum_residual > 1e-8 || sol.divergence_residual > 1e-8)
        fail(ErrorCode::SolverFailure,
             "Stokes residuals exceed tolerance: momentum " +
                 std::to_string(sol.momentum_residual) + ", divergence " +
                 std::to_string(sol.divergence_residual));
    return sol;
}

double StokesSolver::estimate_ratio(const MacGrid& grid,
                                    const StokesSolution& sol,
                                    const VectorField& f, const Array2D& gdiv) {
    const double sol_size = l2_norm(grid, sol.velocity) +
                            std::sqrt(grad_sq(grid, sol.velocity)) +
                            l2_norm(grid, sol.pressure);
    VectorField gg = gradient(grid, gdiv);
    const double data_size =
        l2_norm(grid, f) + l2_norm(grid, gdiv) + l2_norm(grid, gg);
    if (data_size == 0.0) return 0.0;
    return sol_size / data_size;
}

} // namespace rtlab
