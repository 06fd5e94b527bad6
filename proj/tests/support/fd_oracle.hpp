#pragma once

#include "core/profile.hpp"

namespace rtlab::testing {

/// Independent oracle for the layer reduction: second-order finite
/// differences on a uniform vertical grid, clamped ends imposed through
/// mirror ghosts, trapezoid-style quadrature. Shares no code with the
/// spectral implementation.
double fd_alpha(const DensityProfile& profile, const PhysicalParams& params,
                double s, double k, double lambda_m3_sq, int n);

/// Growth rate by bisection on s^2 = alpha(s) over the finite-difference
/// discretization.
double fd_growth_rate(const DensityProfile& profile,
                      const PhysicalParams& params, double k, int n);

/// Largest eigenvalue of the magnetic quotient
/// g I(rho' phi^2) / I(phi''^2/k^2 + phi'^2) at wavenumber k.
double fd_mstar_k(const DensityProfile& profile, double g, double k, int n);

} // namespace rtlab::testing
