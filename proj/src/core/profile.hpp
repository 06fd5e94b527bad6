#pragma once

#include <string>
#include <vector>

namespace rtlab {

enum class ProfileFamily { Affine, Exponential, TanhStep, Tabulated };

/// Equilibrium density profile rho_bar(x3) on [0, h], with first and second
/// derivatives. Immutable after construction; construction validates
/// positivity of the density over the interval.
///
/// Families and their parameters:
///   affine       [a, b]        rho = a + b*x3
///   exponential  [a, b]        rho = a * exp(b*x3)
///   tanh-step    [a, b, c, w]  rho = a + b * tanh((x3 - c)/w)
///   tabulated    monotone (Fritsch-Carlson) cubic through (x3, rho) samples
class DensityProfile {
  public:
    static DensityProfile affine(double a, double b, double h);
    static DensityProfile exponential(double a, double b, double h);
    static DensityProfile tanh_step(double a, double b, double center,
                                    double width, double h);
    static DensityProfile tabulated(std::vector<double> x,
                                    std::vector<double> rho);
    static DensityProfile make(const std::string& family,
                               const std::vector<double>& params, double h);

    ProfileFamily family() const { return family_; }
    const std::string& family_name() const { return family_name_; }
    const std::vector<double>& params() const { return params_; }
    double height() const { return h_; }

    double rho(double x3) const;
    double drho(double x3) const;
    double ddrho(double x3) const;

    /// -g * integral_0^x3 rho(s) ds, exact antiderivative per family
    /// (piecewise-polynomial integral for tabulated data).
    double pressure(double x3, double g) const;

    /// Minimum of rho over [0, h]: exact endpoint/analytic minimum for the
    /// monotone analytic families combined with a dense sample sweep.
    double min_density(int samples = 10000) const;

    /// Maximum of drho over a dense sample of [0, h] and its location.
    struct RtCheck {
        bool satisfied = false;
        double witness = 0.0;
        double max_drho = 0.0;
    };
    RtCheck check_rt_condition(int samples = 10000) const;

    /// max over [0,h] of drho/rho; the variational growth-rate bound is
    /// Lambda^2 <= g * max(drho/rho).
    double max_drho_over_rho(int samples = 10000) const;

    /// Worst mismatch between drho and a centered difference of rho over a
    /// sample sweep, normalized by the sample spacing squared. Finite for
    /// smooth families; used by the derivative-consistency property test.
    double derivative_consistency_error(int samples = 2000) const;

  private:
    DensityProfile() = default;
    void validate_positivity() const;

    ProfileFamily family_ = ProfileFamily::Affine;
    std::string family_name_;
    std::vector<double> params_;
    double h_ = 1.0;

    // Tabulated representation (monotone cubic Hermite).
    std::vector<double> tab_x_, tab_y_, tab_m_;
    int tab_interval(double x3) const;
};

/// Physical constants of the problem. lambda/M3 are the MHD extension knobs
/// and default to zero (pure hydrodynamics).
struct PhysicalParams {
    double mu = 0.1;     // shear viscosity, > 0
    double g = 9.8;      // gravity, > 0
    double lambda = 0.0; // vacuum permeability factor, >= 0
    double M3 = 0.0;     // vertical background magnetic field

    void validate() const;
};

} // namespace rtlab
