#include "core/mac_ops.hpp"

#include <algorithm>
#include <cmath>

namespace rtlab {

namespace {

inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

// Stored u1 face index to the right of cell i.
inline int right_u1(const MacGrid& g, int i) {
    return g.periodic_x ? g.wrap_x(i + 1) : i + 1;
}

} // namespace

Array2D divergence(const MacGrid& g, const VectorField& u) {
    Array2D d = g.center_array();
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            d(i, j) = (u.u1(right_u1(g, i), j) - u.u1(i, j)) * idx +
                      (u.u3(i, j + 1) - u.u3(i, j)) * idz;
    return d;
}

VectorField gradient(const MacGrid& g, const Array2D& p) {
    VectorField out(g);
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    if (g.periodic_x) {
        for (int j = 0; j < g.nz; ++j)
            for (int i = 0; i < g.nx; ++i)
                out.u1(i, j) = (p(i, j) - p(g.wrap_x(i - 1), j)) * idx;
    } else {
        for (int j = 0; j < g.nz; ++j)
            for (int i = 1; i < g.nx; ++i)
                out.u1(i, j) = (p(i, j) - p(i - 1, j)) * idx;
    }
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.u3(i, j) = (p(i, j) - p(i, j - 1)) * idz;
    return out;
}

VectorField laplacian(const MacGrid& g, const VectorField& u) {
    VectorField out(g);
    const double ix2 = 1.0 / (g.dx() * g.dx());
    const double iz2 = 1.0 / (g.dz() * g.dz());

    // u1 component: interior faces only.
    const int i_lo = g.periodic_x ? 0 : 1;
    const int i_hi = g.periodic_x ? g.nx : g.nx; // exclusive
    for (int j = 0; j < g.nz; ++j) {
        for (int i = i_lo; i < i_hi; ++i) {
            const double c = u.u1(i, j);
            const double xl = g.periodic_x ? u.u1(g.wrap_x(i - 1), j) : u.u1(i - 1, j);
            const double xr = g.periodic_x ? u.u1(g.wrap_x(i + 1), j) : u.u1(i + 1, j);
            const double zl = (j == 0) ? -c : u.u1(i, j - 1);
            const double zr = (j == g.nz - 1) ? -c : u.u1(i, j + 1);
            out.u1(i, j) = (xl - 2.0 * c + xr) * ix2 + (zl - 2.0 * c + zr) * iz2;
        }
    }
    // u3 component: interior faces only (j = 1..nz-1).
    for (int j = 1; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double c = u.u3(i, j);
            double xl, xr;
            if (g.periodic_x) {
                xl = u.u3(g.wrap_x(i - 1), j);
                xr = u.u3(g.wrap_x(i + 1), j);
            } else {
                xl = (i == 0) ? -c : u.u3(i - 1, j);
                xr = (i == g.nx - 1) ? -c : u.u3(i + 1, j);
            }
            const double zl = u.u3(i, j - 1);
            const double zr = u.u3(i, j + 1);
            out.u3(i, j) = (xl - 2.0 * c + xr) * ix2 + (zl - 2.0 * c + zr) * iz2;
        }
    }
    return out;
}

Array2D center_to_u1(const MacGrid& g, const Array2D& c) {
    Array2D out = g.u1_array();
    for (int j = 0; j < g.nz; ++j) {
        if (g.periodic_x) {
            for (int i = 0; i < g.nx; ++i)
                out(i, j) = 0.5 * (c(g.wrap_x(i - 1), j) + c(i, j));
        } else {
            out(0, j) = c(0, j);
            out(g.nx, j) = c(g.nx - 1, j);
            for (int i = 1; i < g.nx; ++i)
                out(i, j) = 0.5 * (c(i - 1, j) + c(i, j));
        }
    }
    return out;
}

Array2D center_to_u3(const MacGrid& g, const Array2D& c) {
    Array2D out = g.u3_array();
    for (int i = 0; i < g.nx; ++i) {
        out(i, 0) = c(i, 0);
        out(i, g.nz) = c(i, g.nz - 1);
    }
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = 0.5 * (c(i, j - 1) + c(i, j));
    return out;
}

Array2D u1_to_center(const MacGrid& g, const Array2D& u1) {
    Array2D out = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = 0.5 * (u1(i, j) + u1(right_u1(g, i), j));
    return out;
}

Array2D u3_to_center(const MacGrid& g, const Array2D& u3) {
    Array2D out = g.center_array();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = 0.5 * (u3(i, j) + u3(i, j + 1));
    return out;
}

VectorField curl(const MacGrid& g, const Array2D& psi) {
    VectorField out(g);
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nu1x(); ++i)
            out.u1(i, j) = (psi(i, j + 1) - psi(i, j)) * idz;
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int ip = g.periodic_x ? g.wrap_x(i + 1) : i + 1;
            out.u3(i, j) = -(psi(ip, j) - psi(i, j)) * idx;
        }
    return out;
}

VectorField advect_velocity(const MacGrid& g, const VectorField& u) {
    VectorField out(g);
    const double idx2 = 0.5 / g.dx(), idz2 = 0.5 / g.dz();

    const int i_lo = g.periodic_x ? 0 : 1;
    for (int j = 0; j < g.nz; ++j) {
        for (int i = i_lo; i < g.nx; ++i) {
            const double c = u.u1(i, j);
            const double xl = g.periodic_x ? u.u1(g.wrap_x(i - 1), j) : u.u1(i - 1, j);
            const double xr = g.periodic_x ? u.u1(g.wrap_x(i + 1), j) : u.u1(i + 1, j);
            const double zl = (j == 0) ? -c : u.u1(i, j - 1);
            const double zr = (j == g.nz - 1) ? -c : u.u1(i, j + 1);
            const int il = g.periodic_x ? g.wrap_x(i - 1) : i - 1;
            const double ubar3 = 0.25 * (u.u3(il, j) + u.u3(i, j) +
                                         u.u3(il, j + 1) + u.u3(i, j + 1));
            out.u1(i, j) = c * (xr - xl) * idx2 + ubar3 * (zr - zl) * idz2;
        }
    }
    for (int j = 1; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double c = u.u3(i, j);
            double xl, xr;
            if (g.periodic_x) {
                xl = u.u3(g.wrap_x(i - 1), j);
                xr = u.u3(g.wrap_x(i + 1), j);
            } else {
                xl = (i == 0) ? -c : u.u3(i - 1, j);
                xr = (i == g.nx - 1) ? -c : u.u3(i + 1, j);
            }
            const double zl = u.u3(i, j - 1);
            const double zr = u.u3(i, j + 1);
            const int ir = right_u1(g, i);
            const double ubar1 = 0.25 * (u.u1(i, j - 1) + u.u1(ir, j - 1) +
                                         u.u1(i, j) + u.u1(ir, j));
            out.u3(i, j) = ubar1 * (xr - xl) * idx2 + c * (zr - zl) * idz2;
        }
    }
    return out;
}

Array2D advect_scalar_divflux(const MacGrid& g, const Array2D& rho,
                              const VectorField& u) {
    const double dx = g.dx(), dz = g.dz();
    // Face fluxes with MUSCL-minmod reconstruction of the donor cell.
    Array2D f1 = g.u1_array();
    Array2D f3 = g.u3_array();

    auto cell = [&](int i, int j) -> double {
        if (g.periodic_x) i = g.wrap_x(i);
        return rho(i, j);
    };
    auto has_x = [&](int i) {
        return g.periodic_x || (i >= 0 && i < g.nx);
    };

    const int i_lo = g.periodic_x ? 0 : 1;
    for (int j = 0; j < g.nz; ++j) {
        for (int i = i_lo; i < g.nx; ++i) {
            const double vel = u.u1(i, j);
            const int donor = (vel > 0.0) ? i - 1 : i;
            const int di = g.periodic_x ? g.wrap_x(donor) : donor;
            double slope = 0.0;
            if (has_x(donor - 1) && has_x(donor + 1))
                slope = minmod((cell(donor, j) - cell(donor - 1, j)) / dx,
                               (cell(donor + 1, j) - cell(donor, j)) / dx);
            const double offset = (vel > 0.0) ? 0.5 * dx : -0.5 * dx;
            f1(i, j) = vel * (rho(di, j) + slope * offset);
        }
    }
    for (int j = 1; j < g.nz; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double vel = u.u3(i, j);
            const int donor = (vel > 0.0) ? j - 1 : j;
            double slope = 0.0;
            if (donor - 1 >= 0 && donor + 1 < g.nz)
                slope = minmod((rho(i, donor) - rho(i, donor - 1)) / dz,
                               (rho(i, donor + 1) - rho(i, donor)) / dz);
            const double offset = (vel > 0.0) ? 0.5 * dz : -0.5 * dz;
            f3(i, j) = vel * (rho(i, donor) + slope * offset);
        }
    }

    Array2D out = g.center_array();
    const double idx = 1.0 / dx, idz = 1.0 / dz;
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (f1(right_u1(g, i), j) - f1(i, j)) * idx +
                        (f3(i, j + 1) - f3(i, j)) * idz;
    return out;
}

MagField vertical_edge_diff(const MacGrid& g, const VectorField& u) {
    MagField out(g);
    const double idz = 1.0 / g.dz();
    for (int i = 0; i < g.nu1x(); ++i) {
        out.n1(i, 0) = 2.0 * u.u1(i, 0) * idz; // mirror ghost below the wall
        out.n1(i, g.nz) = -2.0 * u.u1(i, g.nz - 1) * idz;
        for (int j = 1; j < g.nz; ++j)
            out.n1(i, j) = (u.u1(i, j) - u.u1(i, j - 1)) * idz;
    }
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.n3(i, j) = (u.u3(i, j + 1) - u.u3(i, j)) * idz;
    return out;
}

VectorField vertical_edge_diff_adjoint(const MacGrid& g, const MagField& n) {
    // Half weights on the wall edges combine with the mirror factor 2 into
    // plain differences of the edge values.
    VectorField out(g);
    const double idz = 1.0 / g.dz();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nu1x(); ++i)
            out.u1(i, j) = (n.n1(i, j) - n.n1(i, j + 1)) * idz;
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.u3(i, j) = (n.n3(i, j - 1) - n.n3(i, j)) * idz;
    return out;
}

Array2D mag_divergence(const MacGrid& g, const MagField& n) {
    Array2D out(g.nx, g.nz + 1, 0.0);
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    for (int j = 1; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int ip = g.periodic_x ? g.wrap_x(i + 1) : i + 1;
            out(i, j) = (n.n1(ip, j) - n.n1(i, j)) * idx +
                        (n.n3(i, j) - n.n3(i, j - 1)) * idz;
        }
    return out;
}

double l1_norm_mag1(const MacGrid& g, const Array2D& n1) {
    double s = 0.0;
    for (int j = 0; j <= g.nz; ++j) {
        const double wj = (j == 0 || j == g.nz) ? 0.5 : 1.0;
        for (int i = 0; i < g.nu1x(); ++i) {
            double w = wj;
            if (!g.periodic_x && (i == 0 || i == g.nx)) w *= 0.5;
            s += w * std::abs(n1(i, j));
        }
    }
    return s * g.cell_volume();
}

double l1_norm(const MacGrid& g, const Array2D& c) {
    double s = 0.0;
    for (double x : c.v) s += std::abs(x);
    return s * g.cell_volume();
}

double l2_norm(const MacGrid& g, const Array2D& c) {
    double s = 0.0;
    for (double x : c.v) s += x * x;
    return std::sqrt(s * g.cell_volume());
}

namespace {

// Trapezoid-consistent face weights: boundary faces in the wall-normal
// direction carry half a cell volume.
double face_sum_u1(const MacGrid& g, const Array2D& u1, bool absolute) {
    double s = 0.0;
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nu1x(); ++i) {
            double w = 1.0;
            if (!g.periodic_x && (i == 0 || i == g.nx)) w = 0.5;
            const double x = u1(i, j);
            s += w * (absolute ? std::abs(x) : x * x);
        }
    return s * g.cell_volume();
}

double face_sum_u3(const MacGrid& g, const Array2D& u3, bool absolute) {
    double s = 0.0;
    for (int j = 0; j <= g.nz; ++j) {
        const double w = (j == 0 || j == g.nz) ? 0.5 : 1.0;
        for (int i = 0; i < g.nx; ++i) {
            const double x = u3(i, j);
            s += w * (absolute ? std::abs(x) : x * x);
        }
    }
    return s * g.cell_volume();
}

} // namespace

double l2_norm(const MacGrid& g, const VectorField& u) {
    return std::sqrt(face_sum_u1(g, u.u1, false) + face_sum_u3(g, u.u3, false));
}

double l1_norm_u1(const MacGrid& g, const Array2D& u1) {
    return face_sum_u1(g, u1, true);
}

double l1_norm_u3(const MacGrid& g, const Array2D& u3) {
    return face_sum_u3(g, u3, true);
}

double max_abs(const Array2D& c) {
    double m = 0.0;
    for (double x : c.v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const Array2D& a, const Array2D& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

double dot(const VectorField& a, const VectorField& b) {
    return dot(a.u1, b.u1) + dot(a.u3, b.u3);
}

double grad_sq(const MacGrid& g, const VectorField& u) {
    const double idx = 1.0 / g.dx(), idz = 1.0 / g.dz();
    double s = 0.0;
    // d1 u1 at centers.
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = (u.u1(right_u1(g, i), j) - u.u1(i, j)) * idx;
            s += d * d;
        }
    // d3 u1 at corner rows; wall rows carry half weight (mirror ghosts).
    for (int i = 0; i < g.nu1x(); ++i) {
        for (int j = 1; j < g.nz; ++j) {
            const double d = (u.u1(i, j) - u.u1(i, j - 1)) * idz;
            s += d * d;
        }
        const double dbot = 2.0 * u.u1(i, 0) * idz;
        const double dtop = 2.0 * u.u1(i, g.nz - 1) * idz;
        s += 0.5 * (dbot * dbot + dtop * dtop);
    }
    // d3 u3 at centers.
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = (u.u3(i, j + 1) - u.u3(i, j)) * idz;
            s += d * d;
        }
    // d1 u3 at corner columns; sidewall columns carry half weight in the box.
    for (int j = 0; j <= g.nz; ++j) {
        if (g.periodic_x) {
            for (int i = 0; i < g.nx; ++i) {
                const double d = (u.u3(g.wrap_x(i + 1), j) - u.u3(i, j)) * idx;
                s += d * d;
            }
        } else {
            for (int i = 1; i < g.nx; ++i) {
                const double d = (u.u3(i, j) - u.u3(i - 1, j)) * idx;
                s += d * d;
            }
            const double dl = 2.0 * u.u3(0, j) * idx;
            const double dr = 2.0 * u.u3(g.nx - 1, j) * idx;
            s += 0.5 * (dl * dl + dr * dr);
        }
    }
    return s * g.cell_volume();
}

void axpy(double a, const Array2D& x, Array2D& y) {
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

void axpy(double a, const VectorField& x, VectorField& y) {
    axpy(a, x.u1, y.u1);
    axpy(a, x.u3, y.u3);
}

void axpy(double a, const MagField& x, MagField& y) {
    axpy(a, x.n1, y.n1);
    axpy(a, x.n3, y.n3);
}

void scale(Array2D& x, double a) {
    for (double& v : x.v) v *= a;
}

void scale(VectorField& x, double a) {
    scale(x.u1, a);
    scale(x.u3, a);
}

void scale(MagField& x, double a) {
    scale(x.n1, a);
    scale(x.n3, a);
}

} // namespace rtlab
