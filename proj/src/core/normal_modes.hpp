#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "core/clamped_basis.hpp"
#include "core/forms1d.hpp"
#include "core/profile.hpp"

namespace rtlab {

struct Geometry {
    enum class Kind { LayerPeriodic, BoxClamped };
    Kind kind = Kind::LayerPeriodic;
    double L = 1.0;        // layer: period scale L1 (period = 2*pi*L1); box: width
    double h = 1.0;        // height
    int n_vertical = 128;  // vertical basis size
    int n_horizontal = 24; // box only: horizontal basis size

    void validate() const;
    static Geometry layer(double L1, double h, int n_vertical = 128);
    static Geometry box(double L, double h, int nx = 24, int nz = 24);
};

/// One normal mode: the largest growth rate and its eigenfunction.
/// For the layer the eigenfunction is the vertical velocity amplitude phi
/// (clamped-basis coefficients); for the box it is the streamfunction psi
/// (tensor clamped-basis coefficients). Coefficients are scaled so the
/// rho-weighted L2 norm of the reconstructed velocity equals 1.
struct ModeResult {
    double k = 0.0; // horizontal wavenumber; 0 for the box backend
    double lambda = 0.0;
    double alpha_at_0 = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::pair<double, double>> alpha_trace; // (s, alpha(s))

    Eigen::VectorXd phi;     // layer: vertical amplitude coefficients
    Eigen::VectorXd psi;     // box: streamfunction coefficients (nx*nz)
    int nx = 0, nz = 0;      // box tensor dimensions
    double L = 0.0, h = 0.0; // geometry echo

    bool is_box() const { return psi.size() > 0; }
};

struct AlphaEval {
    double value = 0.0;
    Eigen::VectorXd vec; // maximizer, mass-normalized
};

struct SweepResult {
    std::vector<ModeResult> table;
    double lambda_star = 0.0;
    double k_star = 0.0;
};

struct MhdStabilityReport {
    double m_star = 0.0;          // max_k of the magnetic quotient, divided by lambda
    double threshold_field = 0.0; // |M3| above which no wavenumber grows
    struct Row {
        double k = 0.0;
        double m_star_k = 0.0;    // largest eigenvalue of g*buoy vs (S2/k^2 + S1)
        double threshold_k = 0.0; // sqrt(max(m_star_k, 0)/lambda)
        double lambda_hydro = 0.0;
    };
    std::vector<Row> rows;
};

/// Per-wavenumber reduction of the variational problem on the horizontally
/// periodic layer. The divergence-free normal-mode ansatz
///   w = (-(1/k) phi'(x3) sin(k x1), phi(x3) cos(k x1))
/// turns the full-field Rayleigh quotient into the 1D quotient
///   alpha(s,k) = max_phi [ g I(rho' phi^2)
///                          - s mu I(phi''^2/k^2 + 2 phi'^2 + k^2 phi^2) ]
///                        / I(rho (phi^2 + phi'^2/k^2))
/// over clamped phi, and the growth rate is the root of s^2 = alpha(s,k).
class LayerModeSolver {
  public:
    LayerModeSolver(const DensityProfile& profile, const PhysicalParams& params,
                    const Geometry& geom);

    AlphaEval alpha(double s, double k) const;
    AlphaEval alpha_mhd(double s, double k, double lambda_m3_sq) const;

    ModeResult solve(double k) const;
    ModeResult solve_mhd(double k, double M3, double lambda) const;
    SweepResult sweep(const std::vector<double>& ks) const;
    SweepResult sweep_mhd(const std::vector<double>& ks, double M3,
                          double lambda) const;
    MhdStabilityReport critical_field(double lambda,
                                      const std::vector<double>& ks) const;

    /// Strong-form residual of the mode equations evaluated from the
    /// polynomial representation on a fine vertical grid: max over samples of
    /// both momentum components with the recovered pressure amplitude.
    double momentum_residual(const ModeResult& mode, int samples = 400) const;

    /// Pressure amplitude q_hat(z) (mean-zero) recovered by integrating the
    /// vertical momentum balance.
    Eigen::VectorXd pressure_amplitude(const ModeResult& mode,
                                       const Eigen::VectorXd& z) const;

    const ClampedBasis& basis() const { return basis_; }
    const VerticalForms& forms() const { return forms_; }
    const DensityProfile& profile() const { return profile_; }
    const PhysicalParams& params() const { return params_; }
    double rate_upper_bound() const { return s_hi_; }

  private:
    ModeResult solve_impl(double k, double lambda_m3_sq) const;

    DensityProfile profile_;
    PhysicalParams params_;
    Geometry geom_;
    ClampedBasis basis_;
    VerticalForms forms_;
    double max_drho_over_rho_ = 0.0;
    double s_hi_ = 1.0;
};

/// Unreduced 2D problem on the clamped box via the streamfunction
/// u = (d3 psi, -d1 psi), psi and its normal derivative zero on all walls;
/// tensor product of clamped bases in x and z.
class BoxModeSolver {
  public:
    BoxModeSolver(const DensityProfile& profile, const PhysicalParams& params,
                  const Geometry& geom);

    double alpha(double s) const;
    ModeResult solve() const;

    /// Evaluate the mode's streamfunction (or a derivative) at points.
    Eigen::MatrixXd eval_psi(const ModeResult& mode, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& z, int dx, int dz) const;

    const DensityProfile& profile() const { return profile_; }

  private:
    DensityProfile profile_;
    PhysicalParams params_;
    Geometry geom_;
    ClampedBasis bx_, bz_;
    Eigen::MatrixXd a0_, visc_, mass_; // dense tensor forms
    double s_hi_ = 1.0;
};

/// Largest generalized eigenpair of A v = value M v for symmetric A and
/// positive definite M; the eigenvector is M-normalized. Throws
/// SingularForms when M is not positive definite.
AlphaEval largest_eigenpair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m);

/// Wavenumber lattice k = n/L1, n = 1..count, admissible on a layer of
/// period 2*pi*L1.
std::vector<double> wavenumber_lattice(double L1, int count);

} // namespace rtlab
