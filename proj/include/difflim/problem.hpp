#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "difflim/quadrature.hpp"
#include "difflim/scattering.hpp"

namespace difflim {

/// Uniform cells on (0, L).
class Grid1D {
public:
    Grid1D(double length, int n_cells);

    double length() const { return length_; }
    int n_cells() const { return n_cells_; }
    double h() const { return length_ / n_cells_; }
    double center(int i) const { return (i + 0.5) * h(); }
    double edge(int i) const { return i == n_cells_ ? length_ : i * h(); }
    Eigen::VectorXd centers() const;
    Eigen::VectorXd edges() const;

private:
    double length_;
    int n_cells_;
};

/**
 * Scalar field on the slab: constant, piecewise constant, a sine profile
 * base + amplitude sin(2 pi k x), or an arbitrary function (manufactured sources).
 * Piecewise fields are right-continuous at breakpoints.
 */
class CoefficientField {
public:
    enum class Kind { constant, piecewise, sine, function };

    static CoefficientField constant(double value);
    static CoefficientField piecewise(std::vector<double> breakpoints, std::vector<double> values);
    static CoefficientField sine(double base, double amplitude, double wavenumber);
    /// Bounds are recorded by sampling the function densely on [0, length].
    static CoefficientField function(std::function<double(double)> f, std::function<double(double)> df,
                                     double length, std::string name);

    double operator()(double x) const;
    double derivative(double x) const;

    /// (1/(b-a)) * integral_a^b of the field; exact except for Kind::function (3-point Gauss).
    double mean(double a, double b) const;

    /// Values at the cell centers of a grid.
    std::vector<double> sample(const Grid1D& grid) const;

    CoefficientField scaled(double factor) const;

    Kind kind() const { return kind_; }
    double lower_bound() const { return lo_; }
    double upper_bound() const { return hi_; }
    /// True unless the field has a jump.
    bool is_continuous() const;
    const std::string& description() const { return description_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }

private:
    CoefficientField() = default;
    void update_bounds();

    Kind kind_ = Kind::constant;
    double factor_ = 1.0;
    std::vector<double> breakpoints_;
    std::vector<double> values_;  // constant: {v}; sine: {base, amplitude, wavenumber}
    std::function<double(double)> fn_;
    std::function<double(double)> dfn_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::string description_;
};

/// Inflow data g per face: constant in mu on each face.
struct BoundaryData {
    double left = 0.0;   ///< at x = 0 for mu > 0
    double right = 0.0;  ///< at x = L for mu < 0
};

enum class Scaling { diffusive, unscaled };

struct ProblemSpec {
    Grid1D grid{1.0, 64};
    CoefficientField sigma = CoefficientField::constant(1.0);
    CoefficientField gamma = CoefficientField::constant(1.0);
    CoefficientField source = CoefficientField::constant(1.0);
    BoundaryData boundary;
    Kernel kernel = IsotropicKernel{};
    Scaling scaling = Scaling::diffusive;

    /// sigma and gamma strictly positive and bounded; throws ValidationError.
    void validate() const;
    ProblemSpec with_grid(const Grid1D& g) const;
};

/// gamma_eps = eps gamma, sigma_eps = sigma / eps, f_eps = eps f, g_eps = eps g.
struct ScaledCoefficients {
    double eps = 1.0;
    CoefficientField gamma = CoefficientField::constant(1.0);
    CoefficientField sigma = CoefficientField::constant(1.0);
    CoefficientField source = CoefficientField::constant(1.0);
    BoundaryData boundary;
};

ScaledCoefficients scale(const ProblemSpec& problem, double eps);

/// ||g||_{L2(Gamma_-;|mu|)} of constant face data on a slab quadrature.
double inflow_norm(const BoundaryData& g, const AngularQuadrature& quad);

/// Exact solution for verification, either angular u*(x, mu) or a velocity-independent u*(x).
struct ManufacturedCase {
    enum class Kind { transport, diffusion };

    std::string name;
    Kind kind = Kind::diffusion;
    std::function<double(double, double)> u;     ///< transport: u*(x, mu)
    std::function<double(double, double)> u_x;   ///< transport: du*/dx
    std::function<double(double)> ubar;          ///< diffusion: u*(x)
    std::function<double(double)> ubar_x;
    std::function<double(double)> ubar_xx;
};

/// u* = x (L - x) (1 + mu) / L^2; zero inflow on both faces.
ManufacturedCase transport_polynomial_case(double length = 1.0);
/// u* = sin(pi x / L)
ManufacturedCase sine_diffusion_case(double length = 1.0);
/// u* = 1 - cosh(kappa (x - L/2)) / cosh(kappa L / 2); with kappa = sqrt(3) it solves -(1/3)u'' + u = 1.
ManufacturedCase cosh_diffusion_case(double kappa, double length = 1.0);
/// Looks up "poly_transport", "sine", "cosh" (kappa = sqrt(3)); throws ValidationError otherwise.
ManufacturedCase manufactured_case(const std::string& name, double length);

/// f = mu du*/dx + gamma u* - sigma (K - I) u* at cell centers x ordinates.
Eigen::MatrixXd mms_transport_source(const ManufacturedCase& mcase, const CoefficientField& sigma,
                                     const CoefficientField& gamma, const ScatteringOperator& K,
                                     const Grid1D& grid, const AngularQuadrature& quad);

/// f = -(A u*')' + gamma u* with A(x) = unit_coefficient / sigma(x).
CoefficientField mms_diffusion_source(const ManufacturedCase& mcase, const CoefficientField& sigma,
                                      const CoefficientField& gamma, double unit_coefficient,
                                      double length);

}  // namespace difflim
