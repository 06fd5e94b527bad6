#pragma once

#include <Eigen/Dense>
#include <functional>

#include "core/clamped_basis.hpp"
#include "core/profile.hpp"

namespace rtlab {

/// Galerkin form matrices over the clamped basis on an interval, assembled
/// once per (profile, basis) and reused across all wavenumbers and trial
/// rates. Sij = integral of B_i^(d) B_j^(d) with the indicated weight.
struct VerticalForms {
    Eigen::MatrixXd s0;      // B B
    Eigen::MatrixXd s1;      // B' B'
    Eigen::MatrixXd s2;      // B'' B''
    Eigen::MatrixXd mass0;   // rho B B
    Eigen::MatrixXd mass1;   // rho B' B'
    Eigen::MatrixXd buoy;    // drho B B
};

/// Assemble the vertical forms with composite Gauss quadrature. `weighted`
/// forms use the density profile; panels scale with basis size so smooth
/// integrands are resolved to near machine precision.
VerticalForms assemble_vertical_forms(const ClampedBasis& basis,
                                      const DensityProfile& profile);

/// Unweighted forms on [0, L] (horizontal direction of the box backend).
struct IntervalForms {
    Eigen::MatrixXd s0, s1, s2;
};

IntervalForms assemble_interval_forms(const ClampedBasis& basis);

} // namespace rtlab
