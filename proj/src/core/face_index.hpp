#pragma once

#include <Eigen/Dense>

#include "core/mac_grid.hpp"

namespace rtlab {

/// Enumeration of the interior (unconstrained) faces: u1 first, then u3.
/// Boundary faces map to -1; they hold the constrained no-slip value.
struct FaceIndexer {
    MacGrid g;
    int n_u1 = 0, n_u3 = 0;

    explicit FaceIndexer(const MacGrid& grid) : g(grid) {
        n_u1 = g.periodic_x ? g.nx * g.nz : (g.nx - 1) * g.nz;
        n_u3 = g.nx * (g.nz - 1);
    }

    int total() const { return n_u1 + n_u3; }

    int u1(int i, int j) const {
        if (g.periodic_x) return j * g.nx + g.wrap_x(i);
        if (i <= 0 || i >= g.nx) return -1;
        return j * (g.nx - 1) + (i - 1);
    }
    int u3(int i, int j) const {
        if (j <= 0 || j >= g.nz) return -1;
        return n_u1 + (j - 1) * g.nx + i;
    }

    Eigen::VectorXd gather(const VectorField& u) const {
        Eigen::VectorXd x(total());
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) x[u1(i, j)] = u.u1(i, j);
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) x[u3(i, j)] = u.u3(i, j);
        return x;
    }

    VectorField scatter(const Eigen::VectorXd& x) const {
        VectorField u(g);
        const int i_lo = g.periodic_x ? 0 : 1;
        for (int j = 0; j < g.nz; ++j)
            for (int i = i_lo; i < g.nx; ++i) u.u1(i, j) = x[u1(i, j)];
        for (int j = 1; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i) u.u3(i, j) = x[u3(i, j)];
        return u;
    }
};

/// Enumeration of the interior corners carrying streamfunction unknowns
/// (boundary corners are pinned to zero; in periodic x all columns count).
struct CornerIndexer {
    MacGrid g;
    int count = 0;

    explicit CornerIndexer(const MacGrid& grid) : g(grid) {
        count = (g.periodic_x ? g.nx : g.nx - 1) * (g.nz - 1);
    }

    int at(int i, int j) const {
        if (j <= 0 || j >= g.nz) return -1;
        if (g.periodic_x) return (j - 1) * g.nx + g.wrap_x(i);
        if (i <= 0 || i >= g.nx) return -1;
        return (j - 1) * (g.nx - 1) + (i - 1);
    }

    Array2D scatter(const Eigen::VectorXd& x) const {
        Array2D psi = g.corner_array();
        for (int j = 1; j < g.nz; ++j) {
            if (g.periodic_x) {
                for (int i = 0; i < g.nx; ++i) psi(i, j) = x[at(i, j)];
            } else {
                for (int i = 1; i < g.nx; ++i) psi(i, j) = x[at(i, j)];
            }
        }
        return psi;
    }

    Eigen::VectorXd gather(const Array2D& psi) const {
        Eigen::VectorXd x(count);
        for (int j = 1; j < g.nz; ++j) {
            if (g.periodic_x) {
                for (int i = 0; i < g.nx; ++i) x[at(i, j)] = psi(i, j);
            } else {
                for (int i = 1; i < g.nx; ++i) x[at(i, j)] = psi(i, j);
            }
        }
        return x;
    }
};

} // namespace rtlab
