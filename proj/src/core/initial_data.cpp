#include "core/initial_data.hpp"

#include <cmath>

#include "core/mac_ops.hpp"

namespace rtlab {

namespace {

// Elementwise face quotient a/(a+b) applied to the face averages of two
// center fields, multiplied into a face field. Boundary faces inherit the
// (zero) face values of u.
VectorField weighted_faces(const MacGrid& g, const Array2D& num_c,
                           const Array2D& den_c, const VectorField& u) {
    VectorField out(g);
    Array2D n1 = center_to_u1(g, num_c), d1 = center_to_u1(g, den_c);
    Array2D n3 = center_to_u3(g, num_c), d3 = center_to_u3(g, den_c);
    for (size_t i = 0; i < out.u1.v.size(); ++i)
        out.u1.v[i] = u.u1.v[i] * n1.v[i] / d1.v[i];
    for (size_t i = 0; i < out.u3.v.size(); ++i)
        out.u3.v[i] = u.u3.v[i] * n3.v[i] / d3.v[i];
    return out;
}

} // namespace

InitialDataBuilder::InitialDataBuilder(const MacGrid& grid,
                                       const DensityProfile& profile,
                                       const PhysicalParams& params)
    : grid_(grid), profile_(profile), params_(params) {
    params_.validate();
    rho_center_ = grid_.center_array();
    for (int j = 0; j < grid_.nz; ++j)
        for (int i = 0; i < grid_.nx; ++i)
            rho_center_(i, j) = profile_.rho(grid_.zc(j));
    rho_min_ = profile_.min_density();
    stokes_unit_ = std::make_unique<StokesSolver>(grid_, 1.0);
    stokes_mu_ = std::make_unique<StokesSolver>(grid_, params_.mu);
}

StokesSolution InitialDataBuilder::solve_auxiliary_upsilon(
    const GridMode& mode, double delta) const {
    Array2D rho0 = mode.rho_tilde;
    scale(rho0, delta);
    {
        // Positivity precondition (2.54)-style before dividing.
        double m = 1e300;
        for (size_t i = 0; i < rho0.v.size(); ++i)
            m = std::min(m, rho0.v[i] + rho_center_.v[i]);
        if (!(m > 0.0))
            fail(ErrorCode::DensityUnderflow,
                 "rho0 + rho_bar not positive; delta too large");
    }
    Array2D total = rho0;
    for (size_t i = 0; i < total.v.size(); ++i) total.v[i] += rho_center_.v[i];

    VectorField w = weighted_faces(grid_, rho0, total, mode.u);
    Array2D gdiv = divergence(grid_, w);
    scale(gdiv, -delta * mode.lambda);
    return stokes_unit_->solve(VectorField(grid_), gdiv);
}

VectorField InitialDataBuilder::m2_source(const GridMode& mode,
                                          const VectorField& upsilon,
                                          const VectorField& w,
                                          double delta) const {
    // M2(Upsilon, w) = (rho0 + rho_bar)(Upsilon - U.grad U)/delta^2 with
    // U = delta u~ + delta^2 w.
    VectorField big_u(grid_);
    axpy(delta, mode.u, big_u);
    axpy(delta * delta, w, big_u);
    VectorField adv = advect_velocity(grid_, big_u);

    Array2D rho0 = mode.rho_tilde;
    scale(rho0, delta);
    Array2D total = rho0;
    for (size_t i = 0; i < total.v.size(); ++i) total.v[i] += rho_center_.v[i];
    Array2D t1 = center_to_u1(grid_, total);
    Array2D t3 = center_to_u3(grid_, total);

    VectorField out(grid_);
    const double inv_d2 = 1.0 / (delta * delta);
    for (size_t i = 0; i < out.u1.v.size(); ++i)
        out.u1.v[i] = t1.v[i] * (upsilon.u1.v[i] - adv.u1.v[i]) * inv_d2;
    for (size_t i = 0; i < out.u3.v.size(); ++i)
        out.u3.v[i] = t3.v[i] * (upsilon.u3.v[i] - adv.u3.v[i]) * inv_d2;
    return out;
}

InitialDataBuilder::CorrectorResult InitialDataBuilder::corrector_iteration(
    const GridMode& mode, const StokesSolution& upsilon, double delta,
    double tol, int max_iter) const {
    CorrectorResult res;
    res.u_r = VectorField(grid_);
    res.q_r = grid_.center_array();

    int growth_streak = 0;
    double prev_diff = -1.0;
    for (int n = 0; n < max_iter; ++n) {
        VectorField f = m2_source(mode, upsilon.velocity, res.u_r, delta);
        StokesSolution next = stokes_mu_->solve(f, grid_.center_array());

        VectorField du = next.velocity;
        axpy(-1.0, res.u_r, du);
        Array2D dq = next.pressure;
        axpy(-1.0, res.q_r, dq);
        const double diff = std::sqrt(l2_norm(grid_, du) * l2_norm(grid_, du) +
                                      l2_norm(grid_, dq) * l2_norm(grid_, dq));
        res.u_r = next.velocity;
        res.q_r = next.pressure;
        res.diff_history.push_back(diff);
        res.iterations = n + 1;

        if (prev_diff >= 0.0 && diff > prev_diff) {
            if (++growth_streak >= 3)
                fail(ErrorCode::NotContracting,
                     "corrector iteration diverging at delta = " +
                         std::to_string(delta) +
                         " (empirical contraction threshold exceeded)");
        } else {
            growth_streak = 0;
        }
        prev_diff = diff;
        if (diff <= tol) return res;
    }
    fail(ErrorCode::NoConvergence,
         "corrector iteration did not reach tol within the iteration cap");
}

InitialDataBundle InitialDataBuilder::build(const GridMode& mode, double delta,
                                            double tol, int max_iter) const {
    if (!(delta > 0.0)) fail(ErrorCode::BadSpec, "delta must be > 0");
    if (!(mode.lambda > 0.0))
        fail(ErrorCode::BadSpec, "initial data needs an unstable mode");

    InitialDataBundle b;
    b.delta = delta;
    b.mode = mode;

    b.rho0 = mode.rho_tilde;
    scale(b.rho0, delta);
    {
        double m = 1e300;
        for (size_t i = 0; i < b.rho0.v.size(); ++i)
            m = std::min(m, b.rho0.v[i] + rho_center_.v[i]);
        if (!(m >= 0.5 * rho_min_))
            fail(ErrorCode::DensityUnderflow,
                 "min(rho0 + rho_bar) fell below rho_min/2; delta too large");
    }

    StokesSolution ups = solve_auxiliary_upsilon(mode, delta);
    b.upsilon = ups.velocity;
    b.q_aux = ups.pressure;

    CorrectorResult corr = corrector_iteration(mode, ups, delta, tol, max_iter);
    b.u_r = corr.u_r;
    b.q_r = corr.q_r;
    b.iterations = corr.iterations;
    b.diff_history = std::move(corr.diff_history);
    b.corrected = true;

    b.u0 = VectorField(grid_);
    axpy(delta, mode.u, b.u0);
    axpy(delta * delta, b.u_r, b.u0);
    b.q0 = grid_.center_array();
    axpy(delta, mode.q_tilde, b.q0);
    axpy(delta * delta, b.q_r, b.q0);

    b.compatibility = check_compatibility(b);
    return b;
}

InitialDataBundle InitialDataBuilder::build_raw(const GridMode& mode,
                                                double delta) const {
    InitialDataBundle b;
    b.delta = delta;
    b.mode = mode;
    b.rho0 = mode.rho_tilde;
    scale(b.rho0, delta);
    b.upsilon = VectorField(grid_);
    b.q_aux = grid_.center_array();
    b.u_r = VectorField(grid_);
    b.q_r = grid_.center_array();
    b.u0 = VectorField(grid_);
    axpy(delta, mode.u, b.u0);
    b.q0 = grid_.center_array();
    axpy(delta, mode.q_tilde, b.q0);
    b.corrected = false;
    b.compatibility = check_compatibility(b);
    return b;
}

CompatibilityReport InitialDataBuilder::check_compatibility(
    const InitialDataBundle& b) const {
    const MacGrid& g = grid_;
    CompatibilityReport rep;
    const double d2 = b.delta * b.delta;

    Array2D total = b.rho0;
    for (size_t i = 0; i < total.v.size(); ++i) total.v[i] += rho_center_.v[i];
    Array2D t1 = center_to_u1(g, total);
    Array2D t3 = center_to_u3(g, total);

    // B := grad q0 - mu lap u0 + g rho0 e3 on interior faces.
    VectorField bfield = gradient(g, b.q0);
    VectorField lap = laplacian(g, b.u0);
    axpy(-params_.mu, lap, bfield);
    Array2D rho0_f3 = center_to_u3(g, b.rho0);
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            bfield.u3(i, j) += params_.g * rho0_f3(i, j);

    // Interior condition: div(u0.grad u0 + B/(rho0 + rho_bar)).
    VectorField adv = advect_velocity(g, b.u0);
    VectorField interior_field(g);
    const int i_lo = g.periodic_x ? 0 : 1;
    for (int j = 0; j < g.nz; ++j)
        for (int i = i_lo; i < g.nx; ++i)
            interior_field.u1(i, j) =
                adv.u1(i, j) + bfield.u1(i, j) / t1(i, j);
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            interior_field.u3(i, j) =
                adv.u3(i, j) + bfield.u3(i, j) / t3(i, j);
    rep.interior = l2_norm(g, divergence(g, interior_field));
    rep.interior_rel = rep.interior / d2;

    // Identity the construction satisfies:
    //   B = (rho0 + rho_bar)(Upsilon - u0.grad u0) - delta Lambda rho_f u~,
    // with Upsilon and the corrector zeroed in the raw path. The defect is
    // the compatibility failure; its wall-adjacent restriction is the
    // discrete trace of the boundary condition.
    VectorField defect(g);
    {
        Array2D rb1 = center_to_u1(g, rho_center_);
        Array2D rb3 = center_to_u3(g, rho_center_);
        const double dl = b.delta * b.mode.lambda;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) {
                const double rhs = t1(i, j) * (b.upsilon.u1(i, j) - adv.u1(i, j)) -
                                   dl * rb1(i, j) * b.mode.u.u1(i, j);
                defect.u1(i, j) = bfield.u1(i, j) - rhs;
            }
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double rhs = t3(i, j) * (b.upsilon.u3(i, j) - adv.u3(i, j)) -
                                   dl * rb3(i, j) * b.mode.u.u3(i, j);
                defect.u3(i, j) = bfield.u3(i, j) - rhs;
            }
    }
    double ring2 = 0.0, all2 = 0.0;
    for (int j = 0; j < g.nz; ++j)
        for (int i = i_lo; i < g.nx; ++i) {
            const double v = defect.u1(i, j);
            all2 += v * v;
            const bool ring = j == 0 || j == g.nz - 1 ||
                              (!g.periodic_x && (i == 1 || i == g.nx - 1));
            if (ring) ring2 += v * v;
        }
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double v = defect.u3(i, j);
            all2 += v * v;
            const bool ring = j == 1 || j == g.nz - 1 ||
                              (!g.periodic_x && (i == 0 || i == g.nx - 1));
            if (ring) ring2 += v * v;
        }
    rep.boundary = std::sqrt(ring2 * g.cell_volume());
    rep.boundary_rel = rep.boundary / d2;
    rep.momentum_identity = std::sqrt(all2 * g.cell_volume());
    return rep;
}

double InitialDataBuilder::fixed_point_defect(const InitialDataBundle& b) const {
    VectorField f = m2_source(b.mode, b.upsilon, b.u_r, b.delta);
    StokesSolution next = stokes_mu_->solve(f, grid_.center_array());
    VectorField du = next.velocity;
    axpy(-1.0, b.u_r, du);
    Array2D dq = next.pressure;
    axpy(-1.0, b.q_r, dq);
    const double un = l2_norm(grid_, du), qn = l2_norm(grid_, dq);
    return std::sqrt(un * un + qn * qn);
}

InitialDataBundle InitialDataBuilder::mhd_initial_data_stub(
    const GridMode& mhd_mode, double delta, double M3, double lambda) const {
    InitialDataBundle b = build_raw(mhd_mode, delta);
    b.has_magnetic = true;
    if (M3 != 0.0) {
        // N0 = delta M3 d3(eta~) with eta~ = u~/Lambda. The velocity comes
        // from the mode's streamfunction, so the staggered divergence of N0
        // vanishes identically.
        b.n0 = vertical_edge_diff(grid_, mhd_mode.u);
        scale(b.n0, delta * M3 / mhd_mode.lambda);
        b.divn_max = max_abs(mag_divergence(grid_, b.n0));
    } else {
        b.n0 = MagField(grid_);
        b.divn_max = 0.0;
    }
    (void)lambda;
    return b;
}

double InitialDataBuilder::pair_norm(const VectorField& u,
                                     const Array2D& q) const {
    const double u2 = l2_norm(grid_, u);
    const double g2 = grad_sq(grid_, u);
    const double q2 = l2_norm(grid_, q);
    return std::sqrt(u2 * u2 + g2 + q2 * q2);
}

} // namespace rtlab
