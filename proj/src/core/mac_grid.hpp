#pragma once

#include <vector>

#include "core/error.hpp"

namespace rtlab {

/// Dense 2D array, column index = x, row index = z, stored row-major in j.
struct Array2D {
    int n1 = 0, n2 = 0;
    std::vector<double> v;

    Array2D() = default;
    Array2D(int n1_, int n2_, double fill = 0.0)
        : n1(n1_), n2(n2_), v(static_cast<size_t>(n1_) * n2_, fill) {}

    double& operator()(int i, int j) { return v[static_cast<size_t>(j) * n1 + i]; }
    double operator()(int i, int j) const {
        return v[static_cast<size_t>(j) * n1 + i];
    }
    void fill(double x) { std::fill(v.begin(), v.end(), x); }
    size_t size() const { return v.size(); }
};

/// Staggered (MAC) grid on [0,Lx] x [0,Lz]: pressure/density at cell centers,
/// u1 on x-normal faces, u3 on z-normal faces, streamfunctions at corners.
/// The x direction is either wall-bounded (box) or periodic (layer); z is
/// always wall-bounded.
struct MacGrid {
    int nx = 0, nz = 0;
    double Lx = 0.0, Lz = 0.0;
    bool periodic_x = false;

    MacGrid() = default;
    MacGrid(int nx_, int nz_, double lx, double lz, bool periodic)
        : nx(nx_), nz(nz_), Lx(lx), Lz(lz), periodic_x(periodic) {
        if (nx < 4 || nz < 4) fail(ErrorCode::BadSpec, "grid must be >= 4x4");
        if (!(Lx > 0.0) || !(Lz > 0.0))
            fail(ErrorCode::BadSpec, "grid extents must be positive");
    }

    double dx() const { return Lx / nx; }
    double dz() const { return Lz / nz; }
    double cell_volume() const { return dx() * dz(); }

    // Array dimensions (boundary faces are stored; they carry the constrained
    // values, zero under no-slip).
    int nu1x() const { return periodic_x ? nx : nx + 1; }
    int nu1z() const { return nz; }
    int nu3x() const { return nx; }
    int nu3z() const { return nz + 1; }
    int ncorner_x() const { return periodic_x ? nx : nx + 1; }
    int ncorner_z() const { return nz + 1; }

    // Coordinates.
    double xc(int i) const { return (i + 0.5) * dx(); }
    double zc(int j) const { return (j + 0.5) * dz(); }
    double xu1(int i) const { return i * dx(); }
    double zu3(int j) const { return j * dz(); }

    // Wrap an x face/corner index in periodic mode.
    int wrap_x(int i) const {
        if (!periodic_x) return i;
        const int m = nx;
        return ((i % m) + m) % m;
    }

    Array2D center_array(double fill = 0.0) const { return {nx, nz, fill}; }
    Array2D u1_array(double fill = 0.0) const { return {nu1x(), nu1z(), fill}; }
    Array2D u3_array(double fill = 0.0) const { return {nu3x(), nu3z(), fill}; }
    Array2D corner_array(double fill = 0.0) const {
        return {ncorner_x(), ncorner_z(), fill};
    }

    bool same_shape(const MacGrid& o) const {
        return nx == o.nx && nz == o.nz && Lx == o.Lx && Lz == o.Lz &&
               periodic_x == o.periodic_x;
    }
};

/// Velocity-like field on the staggered faces.
struct VectorField {
    Array2D u1, u3;

    VectorField() = default;
    explicit VectorField(const MacGrid& g) : u1(g.u1_array()), u3(g.u3_array()) {}
    void fill(double x) {
        u1.fill(x);
        u3.fill(x);
    }
};

/// Vertical-edge staggering for fields obtained by d3 of a face field (the
/// magnetic perturbation of the linear MHD mode): the u1-derived component
/// sits on corner rows, the u3-derived component at cell centers. Edge
/// differences have no sawtooth nullspace, so magnetic tension acts on every
/// representable mode.
struct MagField {
    Array2D n1; // (nu1x, nz+1)
    Array2D n3; // (nx, nz)

    MagField() = default;
    explicit MagField(const MacGrid& g)
        : n1(g.nu1x(), g.nz + 1), n3(g.center_array()) {}
    void fill(double x) {
        n1.fill(x);
        n3.fill(x);
    }
};

} // namespace rtlab
