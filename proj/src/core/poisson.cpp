#include "core/poisson.hpp"

#include <cmath>

#include "core/mac_ops.hpp"

namespace rtlab {

namespace {

VectorField unit_beta(const MacGrid& g) {
    VectorField b(g);
    b.fill(1.0);
    return b;
}

} // namespace

CenterPoisson::CenterPoisson(const MacGrid& grid, const VectorField& beta)
    : grid_(grid), beta_current_(beta), beta_factored_(beta) {
    factorize();
}

CenterPoisson::CenterPoisson(const MacGrid& grid)
    : CenterPoisson(grid, unit_beta(grid)) {}

void CenterPoisson::set_beta(const VectorField& beta,
                             double refactor_threshold) {
    beta_current_ = beta;
    double drift = 0.0;
    for (size_t i = 0; i < beta.u1.v.size(); ++i) {
        const double ref = std::abs(beta_factored_.u1.v[i]) + 1e-300;
        drift = std::max(drift,
                         std::abs(beta.u1.v[i] - beta_factored_.u1.v[i]) / ref);
    }
    for (size_t i = 0; i < beta.u3.v.size(); ++i) {
        const double ref = std::abs(beta_factored_.u3.v[i]) + 1e-300;
        drift = std::max(drift,
                         std::abs(beta.u3.v[i] - beta_factored_.u3.v[i]) / ref);
    }
    if (drift > refactor_threshold) {
        beta_factored_ = beta;
        factorize();
        beta_matches_factored_ = true;
    } else {
        beta_matches_factored_ = drift == 0.0;
    }
}

void CenterPoisson::factorize() {
    const MacGrid& g = grid_;
    const int n = g.nx * g.nz;
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());
    auto id = [&](int i, int j) { return j * g.nx + i; };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * 5);
    for (int j = 0; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int c = id(i, j);
            double diag = 0.0;
            // Left/right through u1 faces i and i+1 of the cell.
            const bool has_left = g.periodic_x || i > 0;
            const bool has_right = g.periodic_x || i + 1 < g.nx;
            if (has_left) {
                const double b = beta_factored_.u1(i, j) * ix2;
                diag += b;
                trip.emplace_back(c, id(g.periodic_x ? g.wrap_x(i - 1) : i - 1, j),
                                  -b);
            }
            if (has_right) {
                const int face = g.periodic_x ? g.wrap_x(i + 1) : i + 1;
                const double b = beta_factored_.u1(face, j) * ix2;
                diag += b;
                trip.emplace_back(c, id(g.periodic_x ? g.wrap_x(i + 1) : i + 1, j),
                                  -b);
            }
            if (j > 0) {
                const double b = beta_factored_.u3(i, j) * iz2;
                diag += b;
                trip.emplace_back(c, id(i, j - 1), -b);
            }
            if (j + 1 < g.nz) {
                const double b = beta_factored_.u3(i, j + 1) * iz2;
                diag += b;
                trip.emplace_back(c, id(i, j + 1), -b);
            }
            trip.emplace_back(c, c, diag);
        }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());

    // Pin cell 0 to remove the constant nullspace: overwrite its row/column
    // with the identity (the data is mean-corrected, so this is consistent).
    std::vector<Eigen::Triplet<double>> pinned;
    pinned.reserve(matrix_.nonZeros());
    for (int k = 0; k < matrix_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() == 0 || it.col() == 0) continue;
            pinned.emplace_back(it.row(), it.col(), it.value());
        }
    pinned.emplace_back(0, 0, 1.0);
    Eigen::SparseMatrix<double> pinned_matrix(n, n);
    pinned_matrix.setFromTriplets(pinned.begin(), pinned.end());

    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    ldlt_->compute(pinned_matrix);
    if (ldlt_->info() != Eigen::Success)
        fail(ErrorCode::SolverFailure, "Poisson factorization failed");
    beta_matches_factored_ = true;
}

Eigen::VectorXd CenterPoisson::apply_current(const Eigen::VectorXd& p) const {
    // -div(beta_current grad p) assembled matrix-free through the MAC ops.
    const MacGrid& g = grid_;
    Array2D pc = g.center_array();
    std::copy(p.data(), p.data() + p.size(), pc.v.begin());
    VectorField gp = gradient(g, pc);
    for (size_t i = 0; i < gp.u1.v.size(); ++i)
        gp.u1.v[i] *= beta_current_.u1.v[i];
    for (size_t i = 0; i < gp.u3.v.size(); ++i)
        gp.u3.v[i] *= beta_current_.u3.v[i];
    Array2D d = divergence(g, gp);
    Eigen::VectorXd out(p.size());
    for (int i = 0; i < out.size(); ++i) out[i] = -d.v[i];
    return out;
}

Array2D CenterPoisson::solve(const Array2D& rhs) const {
    const MacGrid& g = grid_;
    const int n = g.nx * g.nz;
    Eigen::VectorXd b(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += rhs.v[i];
    mean /= n;
    for (int i = 0; i < n; ++i) b[i] = rhs.v[i] - mean;

    const double scale = b.cwiseAbs().maxCoeff() + 1e-300;
    Eigen::VectorXd b0 = b;
    b0[0] = 0.0; // pinned row
    Eigen::VectorXd x = ldlt_->solve(b0);
    last_refinement_steps_ = 0;

    if (!beta_matches_factored_) {
        for (int it = 0; it < 60; ++it) {
            Eigen::VectorXd r = b - apply_current(x);
            const double rmean = r.mean();
            r.array() -= rmean;
            if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) break;
            r[0] = 0.0;
            x += ldlt_->solve(r);
            ++last_refinement_steps_;
        }
    }

    Array2D out = g.center_array();
    const double xmean = x.mean();
    for (int i = 0; i < n; ++i) out.v[i] = x[i] - xmean;
    return out;
}

} // namespace rtlab
