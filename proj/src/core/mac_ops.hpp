#pragma once

#include "core/mac_grid.hpp"

namespace rtlab {

// Discrete operators on the staggered grid. One shared implementation is
// used by the Stokes solver, the grid eigensolver, the initial-data
// construction and the time steppers, so the compatibility identities close
// at solver precision. All operators assume no-slip walls: normal boundary
// faces hold the constrained value, tangential ghosts mirror (u_ghost =
// -u_inside), and x wraps in periodic mode.

/// div u at cell centers.
Array2D divergence(const MacGrid& g, const VectorField& u);

/// Gradient of a center field on interior faces; boundary faces zero.
VectorField gradient(const MacGrid& g, const Array2D& p);

/// Vector Laplacian at interior faces (no-slip ghosts); boundary faces zero.
VectorField laplacian(const MacGrid& g, const VectorField& u);

/// Center -> face averages (adjoint of face -> center up to the uniform
/// volume factor). Boundary faces in the wall-normal direction get the
/// one-sided cell value.
Array2D center_to_u1(const MacGrid& g, const Array2D& c);
Array2D center_to_u3(const MacGrid& g, const Array2D& c);

/// Face -> center averages.
Array2D u1_to_center(const MacGrid& g, const Array2D& u1);
Array2D u3_to_center(const MacGrid& g, const Array2D& u3);

/// u = curl(psi) = (dz psi, -dx psi) from a corner streamfunction; the
/// discrete divergence vanishes identically and wall-normal faces vanish
/// when psi is constant (zero) along the walls.
VectorField curl(const MacGrid& g, const Array2D& psi);

/// Convective term (U . grad)U at interior faces, centered differences,
/// no-slip ghosts; boundary faces zero.
VectorField advect_velocity(const MacGrid& g, const VectorField& u);

/// Conservative MUSCL (minmod) update for a cell-centered scalar:
/// returns div(flux) so that rho^{n+1} = rho^n - dt * result. Wall-normal
/// fluxes vanish; positivity is preserved under the advective CFL limit.
Array2D advect_scalar_divflux(const MacGrid& g, const Array2D& rho,
                              const VectorField& u);

/// d3 of a face field on the vertical-edge staggering (mirror ghosts at the
/// walls for the tangential component; the wall-normal component uses the
/// stored constrained faces).
MagField vertical_edge_diff(const MacGrid& g, const VectorField& u);

/// Weighted transpose of vertical_edge_diff (wall edges carry half weight),
/// mapping an edge field back to faces; the Lorentz tension is
/// -lambda M3 times this applied to N, which pairs exactly with the
/// induction update in the discrete energy.
VectorField vertical_edge_diff_adjoint(const MacGrid& g, const MagField& n);

/// Divergence of an edge-staggered field at interior u3-face positions
/// (wall rows zeroed); vanishes identically for fields built by
/// vertical_edge_diff of a divergence-free face field.
Array2D mag_divergence(const MacGrid& g, const MagField& n);

double l1_norm_mag1(const MacGrid& g, const Array2D& n1);

// Reductions (volume-weighted).
double l1_norm(const MacGrid& g, const Array2D& c);
double l2_norm(const MacGrid& g, const Array2D& c);
double l2_norm(const MacGrid& g, const VectorField& u);
double l1_norm_u1(const MacGrid& g, const Array2D& u1);
double l1_norm_u3(const MacGrid& g, const Array2D& u3);
double max_abs(const Array2D& c);
double dot(const Array2D& a, const Array2D& b);
double dot(const VectorField& a, const VectorField& b);

/// H1-seminorm squared of the velocity: integral of |grad u|^2 with the
/// no-slip ghost closure (matches the viscous dissipation form).
double grad_sq(const MacGrid& g, const VectorField& u);

// Elementwise helpers.
void axpy(double a, const Array2D& x, Array2D& y);       // y += a x
void axpy(double a, const VectorField& x, VectorField& y);
void axpy(double a, const MagField& x, MagField& y);
void scale(Array2D& x, double a);
void scale(VectorField& x, double a);
void scale(MagField& x, double a);

} // namespace rtlab
