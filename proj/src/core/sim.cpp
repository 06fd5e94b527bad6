#include "core/sim.hpp"

#include <algorithm>
#include <cmath>

#include "core/mac_ops.hpp"

namespace rtlab {

namespace {

// H1/H2 proxies for center fields: one-sided differences stop at the walls
// (density carries no boundary condition).
double center_grad_sq(const MacGrid& g, const Array2D& c) {
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    double s = 0.0;
    for (int j = 0; j < g.nz; ++j) {
        const int imax = g.periodic_x ? g.nx : g.nx - 1;
        for (int i = 0; i < imax; ++i) {
            const double d = (c(g.wrap_x(i + 1) , j) - c(i, j)) * idx;
            s += d * d;
        }
    }
    for (int j = 0; j + 1 < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = (c(i, j + 1) - c(i, j)) * idz;
            s += d * d;
        }
    return s * g.cell_volume();
}

double center_second_diff_sq(const MacGrid& g, const Array2D& c) {
    const double ix2 = 1.0 / (g.dx() * g.dx()), iz2 = 1.0 / (g.dz() * g.dz());
    double s = 0.0;
    for (int j = 1; j + 1 < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double lap = (c(i, j - 1) - 2.0 * c(i, j) + c(i, j + 1)) * iz2;
            if (g.periodic_x) {
                lap += (c(g.wrap_x(i - 1), j) - 2.0 * c(i, j) +
                        c(g.wrap_x(i + 1), j)) * ix2;
            } else if (i > 0 && i + 1 < g.nx) {
                lap += (c(i - 1, j) - 2.0 * c(i, j) + c(i + 1, j)) * ix2;
            }
            s += lap * lap;
        }
    return s * g.cell_volume();
}

} // namespace

StateNorms compute_norms(const MacGrid& g, const FieldState& s,
                         const FieldState* reference) {
    StateNorms n;
    n.l1_rho = l1_norm(g, s.rho);
    n.l1_uh = l1_norm_u1(g, s.u.u1);
    n.l1_u3 = l1_norm_u3(g, s.u.u3);
    n.l2_rho = l2_norm(g, s.rho);
    n.l2_u = l2_norm(g, s.u);
    if (reference) {
        Array2D dr = s.rho;
        axpy(-1.0, reference->rho, dr);
        VectorField du = s.u;
        axpy(-1.0, reference->u, du);
        n.diff_l1 = l1_norm(g, dr) + l1_norm_u1(g, du.u1) + l1_norm_u3(g, du.u3);
        const double a = l2_norm(g, dr), b = l2_norm(g, du);
        n.diff_l2 = std::sqrt(a * a + b * b);
    }
    return n;
}

Simulator::Simulator(const MacGrid& grid, const DensityProfile& profile,
                     const PhysicalParams& params, Config config)
    : grid_(grid),
      profile_(profile),
      params_(params),
      config_(config),
      faces_(grid) {
    params_.validate();
    if (!(config_.dt > 0.0)) fail(ErrorCode::BadSpec, "dt must be > 0");
    if (config_.mode == SimMode::LinearMhd && config_.M3 != 0.0 &&
        !(config_.lambda > 0.0))
        fail(ErrorCode::BadSpec, "linear-MHD mode with M3 != 0 needs lambda > 0");

    rho_bar_c_ = grid_.center_array();
    drho_bar_c_ = grid_.center_array();
    for (int j = 0; j < grid_.nz; ++j)
        for (int i = 0; i < grid_.nx; ++i) {
            rho_bar_c_(i, j) = profile_.rho(grid_.zc(j));
            drho_bar_c_(i, j) = profile_.drho(grid_.zc(j));
        }
    rho_bar_f1_ = center_to_u1(grid_, rho_bar_c_);
    rho_bar_f3_ = center_to_u3(grid_, rho_bar_c_);
    rho_bar_min_ = profile_.min_density();

    // Helmholtz factorization at the frozen profile density:
    // (rho_bar/dt) I + mu (-lap) over the interior faces.
    {
        const MacGrid& g = grid_;
        const double ix2 = 1.0 / (g.dx() * g.dx());
        const double iz2 = 1.0 / (g.dz() * g.dz());
        std::vector<Eigen::Triplet<double>> t;
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) {
                const int row = faces_.u1(i, j);
                double diag = 2.0 * ix2 + 2.0 * iz2;
                for (int di : {-1, 1}) {
                    const int in = g.periodic_x ? g.wrap_x(i + di) : i + di;
                    const int c = faces_.u1(in, j);
                    if (c >= 0) t.emplace_back(row, c, -params_.mu * ix2);
                }
                for (int dj : {-1, 1}) {
                    const int jn = j + dj;
                    if (jn < 0 || jn >= g.nz)
                        diag += iz2;
                    else
                        t.emplace_back(row, faces_.u1(i, jn), -params_.mu * iz2);
                }
                t.emplace_back(row, row,
                               rho_bar_f1_(i, j) / config_.dt + params_.mu * diag);
            }
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int row = faces_.u3(i, j);
                double diag = 2.0 * ix2 + 2.0 * iz2;
                for (int di : {-1, 1}) {
                    if (g.periodic_x) {
                        t.emplace_back(row, faces_.u3(g.wrap_x(i + di), j),
                                       -params_.mu * ix2);
                    } else {
                        const int in = i + di;
                        if (in < 0 || in >= g.nx)
                            diag += ix2;
                        else
                            t.emplace_back(row, faces_.u3(in, j),
                                           -params_.mu * ix2);
                    }
                }
                for (int dj : {-1, 1}) {
                    const int c = faces_.u3(i, j + dj);
                    if (c >= 0) t.emplace_back(row, c, -params_.mu * iz2);
                }
                t.emplace_back(row, row,
                               rho_bar_f3_(i, j) / config_.dt + params_.mu * diag);
            }
        helm_matrix_.resize(faces_.total(), faces_.total());
        helm_matrix_.setFromTriplets(t.begin(), t.end());
        helm_ = std::make_unique<
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        helm_->compute(helm_matrix_);
        if (helm_->info() != Eigen::Success)
            fail(ErrorCode::SolverFailure, "viscous factorization failed");
    }

    // Projection solver at beta = dt/rho_bar (refined per step when the
    // nonlinear density drifts).
    {
        VectorField beta(grid_);
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nu1x(); ++i)
                beta.u1(i, j) = config_.dt / rho_bar_f1_(i, j);
        for (int j = 0; j <= grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                beta.u3(i, j) = config_.dt / rho_bar_f3_(i, j);
        poisson_ = std::make_unique<CenterPoisson>(grid_, beta);
    }

}

FieldState Simulator::zero_state() const {
    FieldState s;
    s.rho = grid_.center_array();
    s.u = VectorField(grid_);
    s.q = grid_.center_array();
    s.n = MagField(grid_);
    return s;
}

double Simulator::cfl_limit(const FieldState& s) const {
    const double d = std::min(grid_.dx(), grid_.dz());
    double rho_min = 1e300;
    if (config_.mode == SimMode::Nonlinear) {
        for (size_t i = 0; i < s.rho.v.size(); ++i)
            rho_min = std::min(rho_min, s.rho.v[i] + rho_bar_c_.v[i]);
    } else {
        rho_min = rho_bar_min_; // frozen coefficients
    }
    double lim = config_.cfl_viscous * d * d * rho_min / params_.mu;
    if (config_.mode == SimMode::Nonlinear) {
        // The advective limit applies only when the stepper advects.
        double umax = 0.0;
        for (double v : s.u.u1.v) umax = std::max(umax, std::abs(v));
        for (double v : s.u.u3.v) umax = std::max(umax, std::abs(v));
        if (umax > 0.0) lim = std::min(lim, config_.cfl_advective * d / umax);
    }
    if (config_.mode == SimMode::LinearMhd && config_.M3 != 0.0) {
        const double alfven =
            std::abs(config_.M3) * std::sqrt(config_.lambda / rho_min);
        if (alfven > 0.0)
            lim = std::min(lim, config_.cfl_advective * grid_.dz() / alfven);
    }
    return lim;
}

void Simulator::viscous_solve(const Array2D& rho_f1, const Array2D& rho_f3,
                              const VectorField& rhs, VectorField& out) const {
    Eigen::VectorXd b = faces_.gather(rhs);
    Eigen::VectorXd x = helm_->solve(b);
    if (config_.mode == SimMode::Nonlinear) {
        // Diagonal refinement against the current density coefficient.
        const double scale = b.cwiseAbs().maxCoeff() + 1e-300;
        for (int it = 0; it < 80; ++it) {
            VectorField xu = faces_.scatter(x);
            VectorField lap = laplacian(grid_, xu);
            VectorField ax(grid_);
            const int i_lo = grid_.periodic_x ? 0 : 1;
            for (int j = 0; j < grid_.nz; ++j)
                for (int i = i_lo; i < grid_.nx; ++i)
                    ax.u1(i, j) = rho_f1(i, j) / config_.dt * xu.u1(i, j) -
                                  params_.mu * lap.u1(i, j);
            for (int j = 1; j < grid_.nz; ++j)
                for (int i = 0; i < grid_.nx; ++i)
                    ax.u3(i, j) = rho_f3(i, j) / config_.dt * xu.u3(i, j) -
                                  params_.mu * lap.u3(i, j);
            Eigen::VectorXd r = b - faces_.gather(ax);
            if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) break;
            x += helm_->solve(r);
        }
    }
    out = faces_.scatter(x);
}

void Simulator::project(FieldState& s, const Array2D& rho_f1,
                        const Array2D& rho_f3) {
    if (config_.mode == SimMode::Nonlinear) {
        VectorField beta(grid_);
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nu1x(); ++i)
                beta.u1(i, j) = config_.dt / rho_f1(i, j);
        for (int j = 0; j <= grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                beta.u3(i, j) = config_.dt / rho_f3(i, j);
        poisson_->set_beta(beta, config_.projection_refactor_drift);
    }
    Array2D rhs = divergence(grid_, s.u);
    for (double& v : rhs.v) v = -v;
    Array2D qprime = poisson_->solve(rhs);

    VectorField gq = gradient(grid_, qprime);
    const int i_lo = grid_.periodic_x ? 0 : 1;
    for (int j = 0; j < grid_.nz; ++j)
        for (int i = i_lo; i < grid_.nx; ++i)
            s.u.u1(i, j) -= config_.dt / rho_f1(i, j) * gq.u1(i, j);
    for (int j = 1; j < grid_.nz; ++j)
        for (int i = 0; i < grid_.nx; ++i)
            s.u.u3(i, j) -= config_.dt / rho_f3(i, j) * gq.u3(i, j);

    s.q = qprime;
    scale(s.q, 1.0 / config_.dt);
    s.div_max = max_abs(divergence(grid_, s.u));
}

void Simulator::step(FieldState& s) {
    const double dt = config_.dt;
    const double lim = cfl_limit(s);
    if (dt > lim)
        fail(ErrorCode::CflViolation,
             "dt = " + std::to_string(dt) + " exceeds the CFL limit " +
                 std::to_string(lim) + " at t = " + std::to_string(s.t));

    if (config_.mode == SimMode::Nonlinear) {
        // Conservative advection of the total density.
        Array2D rho_tot = s.rho;
        for (size_t i = 0; i < rho_tot.v.size(); ++i)
            rho_tot.v[i] += rho_bar_c_.v[i];
        Array2D flux = advect_scalar_divflux(grid_, rho_tot, s.u);
        axpy(-dt, flux, rho_tot);
        double m = 1e300;
        for (double v : rho_tot.v) m = std::min(m, v);
        if (!(m > 0.0))
            fail(ErrorCode::DensityUnderflow,
                 "density lost positivity at t = " + std::to_string(s.t + dt));
        for (size_t i = 0; i < rho_tot.v.size(); ++i)
            s.rho.v[i] = rho_tot.v[i] - rho_bar_c_.v[i];

        Array2D rho_f1 = center_to_u1(grid_, rho_tot);
        Array2D rho_f3 = center_to_u3(grid_, rho_tot);

        VectorField adv = advect_velocity(grid_, s.u);
        Array2D rho0_f3 = center_to_u3(grid_, s.rho);
        VectorField rhs(grid_);
        const int i_lo = grid_.periodic_x ? 0 : 1;
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = i_lo; i < grid_.nx; ++i)
                rhs.u1(i, j) =
                    rho_f1(i, j) * (s.u.u1(i, j) / dt - adv.u1(i, j));
        for (int j = 1; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                rhs.u3(i, j) =
                    rho_f3(i, j) * (s.u.u3(i, j) / dt - adv.u3(i, j)) -
                    params_.g * rho0_f3(i, j);
        viscous_solve(rho_f1, rho_f3, rhs, s.u);
        project(s, rho_f1, rho_f3);
    } else {
        // Linearized density: rho_t = -rho_bar' u3.
        if (config_.mode == SimMode::LinearMhd && config_.M3 != 0.0) {
            MagField dzu = vertical_edge_diff(grid_, s.u);
            axpy(dt * config_.M3, dzu, s.n);
        }
        Array2D u3c = u3_to_center(grid_, s.u.u3);
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                s.rho(i, j) -= dt * drho_bar_c_(i, j) * u3c(i, j);

        Array2D rho0_f3 = center_to_u3(grid_, s.rho);
        VectorField rhs(grid_);
        const int i_lo = grid_.periodic_x ? 0 : 1;
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = i_lo; i < grid_.nx; ++i)
                rhs.u1(i, j) = rho_bar_f1_(i, j) * s.u.u1(i, j) / dt;
        for (int j = 1; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                rhs.u3(i, j) = rho_bar_f3_(i, j) * s.u.u3(i, j) / dt -
                               params_.g * rho0_f3(i, j);
        if (config_.mode == SimMode::LinearMhd && config_.M3 != 0.0) {
            // Lorentz tension: the negative weighted adjoint of the
            // induction derivative, so the semi-discrete magnetic energy
            // exchange is exact and the stability threshold matches the
            // constrained grid eigenproblem.
            VectorField lf = vertical_edge_diff_adjoint(grid_, s.n);
            axpy(-config_.lambda * config_.M3, lf, rhs);
        }
        viscous_solve(rho_bar_f1_, rho_bar_f3_, rhs, s.u);
        project(s, rho_bar_f1_, rho_bar_f3_);
    }
    s.t += dt;
}

EnergyRow Simulator::measure(const FieldState& s, const FieldState* prev,
                             double dt_prev) const {
    EnergyRow r;
    r.t = s.t;
    r.l1_rho = l1_norm(grid_, s.rho);
    r.l1_uh = l1_norm_u1(grid_, s.u.u1);
    r.l1_u3 = l1_norm_u3(grid_, s.u.u3);
    r.l2_rho = l2_norm(grid_, s.rho);
    r.l2_u = l2_norm(grid_, s.u);
    r.l2_rho_u = std::sqrt(r.l2_rho * r.l2_rho + r.l2_u * r.l2_u);
    const double gsq = grad_sq(grid_, s.u);
    r.h1_u = std::sqrt(gsq);
    {
        VectorField lap = laplacian(grid_, s.u);
        const double l = l2_norm(grid_, lap);
        r.h2_u_proxy = std::sqrt(r.l2_u * r.l2_u + gsq + l * l);
    }
    // Kinetic energy with the current total density at faces.
    {
        Array2D tot = s.rho;
        for (size_t i = 0; i < tot.v.size(); ++i) tot.v[i] += rho_bar_c_.v[i];
        Array2D t1 = center_to_u1(grid_, tot), t3 = center_to_u3(grid_, tot);
        double k = 0.0;
        for (size_t i = 0; i < s.u.u1.v.size(); ++i)
            k += t1.v[i] * s.u.u1.v[i] * s.u.u1.v[i];
        for (size_t i = 0; i < s.u.u3.v.size(); ++i)
            k += t3.v[i] * s.u.u3.v[i] * s.u.u3.v[i];
        r.kinetic = 0.5 * k * grid_.cell_volume();
    }
    r.dissipation = params_.mu * gsq;
    {
        Array2D rho_f3 = center_to_u3(grid_, s.rho);
        double b = 0.0;
        for (int j = 1; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i)
                b += rho_f3(i, j) * s.u.u3(i, j);
        r.buoyancy_flux = -params_.g * b * grid_.cell_volume();
    }
    // Truncated energy functionals: fields to second differences, one stored
    // time-derivative level.
    {
        const double rho2 = r.l2_rho * r.l2_rho + center_grad_sq(grid_, s.rho) +
                            center_second_diff_sq(grid_, s.rho);
        const double u2 = r.h2_u_proxy * r.h2_u_proxy;
        const double q2 = l2_norm(grid_, s.q) * l2_norm(grid_, s.q) +
                          center_grad_sq(grid_, s.q);
        double ut2 = 0.0, rhot2 = 0.0;
        if (prev && dt_prev > 0.0) {
            VectorField du = s.u;
            axpy(-1.0, prev->u, du);
            scale(du, 1.0 / dt_prev);
            const double a = l2_norm(grid_, du);
            ut2 = a * a + grad_sq(grid_, du);
            Array2D drho = s.rho;
            axpy(-1.0, prev->rho, drho);
            scale(drho, 1.0 / dt_prev);
            rhot2 = l2_norm(grid_, drho) * l2_norm(grid_, drho) +
                    center_grad_sq(grid_, drho);
        }
        r.e_proxy = rho2 + u2 + q2 + rhot2 + ut2;
        r.d_proxy = u2 + q2 + rho2 + ut2;
    }
    r.l1_nh = l1_norm_mag1(grid_, s.n.n1);
    r.l1_n3 = l1_norm(grid_, s.n.n3);
    {
        double m = 0.0;
        for (double v : s.rho.v) m += v;
        r.mass = m * grid_.cell_volume();
    }
    r.div_max = s.div_max;
    return r;
}

std::pair<FieldState, EnergyReport> Simulator::run(const FieldState& init,
                                                   double t_end,
                                                   int observe_every,
                                                   const Observer& observer) {
    FieldState s = init;
    EnergyReport report;
    if (!(t_end > 0.0)) return {s, report};
    if (observe_every < 1) observe_every = 1;

    const int steps = std::max(1, (int)std::llround(t_end / config_.dt));
    FieldState prev = s;
    report.rows.push_back(measure(s, nullptr, 0.0));
    if (observer) observer(s, report.rows.back());
    for (int n = 1; n <= steps; ++n) {
        prev = s;
        step(s);
        if (n % observe_every == 0 || n == steps) {
            report.rows.push_back(measure(s, &prev, config_.dt));
            if (observer) observer(s, report.rows.back());
        }
    }
    return {s, report};
}

} // namespace rtlab
