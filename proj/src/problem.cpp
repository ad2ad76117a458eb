#include "difflim/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "difflim/errors.hpp"

namespace difflim {

Grid1D::Grid1D(double length, int n_cells) : length_(length), n_cells_(n_cells)
{
    if (!(length > 0.0) || !std::isfinite(length)) throw ArgumentError("grid length must be positive");
    if (n_cells < 1) throw ArgumentError("grid needs at least one cell");
}

Eigen::VectorXd Grid1D::centers() const
{
    Eigen::VectorXd x(n_cells_);
    for (int i = 0; i < n_cells_; ++i) x[i] = center(i);
    return x;
}

Eigen::VectorXd Grid1D::edges() const
{
    Eigen::VectorXd x(n_cells_ + 1);
    for (int i = 0; i <= n_cells_; ++i) x[i] = edge(i);
    return x;
}

CoefficientField CoefficientField::constant(double value)
{
    if (!std::isfinite(value)) throw ArgumentError("constant field must be finite");
    CoefficientField f;
    f.kind_ = Kind::constant;
    f.values_ = {value};
    f.update_bounds();
    return f;
}

CoefficientField CoefficientField::piecewise(std::vector<double> breakpoints, std::vector<double> values)
{
    if (values.size() != breakpoints.size() + 1)
        throw ArgumentError("piecewise field needs exactly one more value than breakpoints");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
        std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
        throw ArgumentError("piecewise breakpoints must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw ArgumentError("piecewise values must be finite");
    CoefficientField f;
    f.kind_ = Kind::piecewise;
    f.breakpoints_ = std::move(breakpoints);
    f.values_ = std::move(values);
    f.update_bounds();
    return f;
}

CoefficientField CoefficientField::sine(double base, double amplitude, double wavenumber)
{
    if (!std::isfinite(base) || !std::isfinite(amplitude) || !std::isfinite(wavenumber))
        throw ArgumentError("sine field parameters must be finite");
    CoefficientField f;
    f.kind_ = Kind::sine;
    f.values_ = {base, amplitude, wavenumber};
    f.update_bounds();
    return f;
}

CoefficientField CoefficientField::function(std::function<double(double)> fn, std::function<double(double)> dfn,
                                            double length, std::string name)
{
    CoefficientField f;
    f.kind_ = Kind::function;
    f.fn_ = std::move(fn);
    f.dfn_ = std::move(dfn);
    f.description_ = std::move(name);
    f.lo_ = std::numeric_limits<double>::infinity();
    f.hi_ = -std::numeric_limits<double>::infinity();
    constexpr int samples = 2000;
    for (int k = 0; k <= samples; ++k) {
        const double v = f.fn_(length * k / samples);
        if (!std::isfinite(v)) throw ArgumentError("function field is not finite on the domain");
        f.lo_ = std::min(f.lo_, v);
        f.hi_ = std::max(f.hi_, v);
    }
    return f;
}

void CoefficientField::update_bounds()
{
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
    case Kind::constant:
        lo_ = hi_ = factor_ * values_[0];
        os << "constant " << lo_;
        break;
    case Kind::piecewise: {
        const auto [mn, mx] = std::minmax_element(values_.begin(), values_.end());
        lo_ = factor_ * *mn;
        hi_ = factor_ * *mx;
        os << "piecewise";
        break;
    }
    case Kind::sine:
        lo_ = factor_ * values_[0] - std::abs(factor_ * values_[1]);
        hi_ = factor_ * values_[0] + std::abs(factor_ * values_[1]);
        os << "sine base " << factor_ * values_[0] << " amplitude " << factor_ * values_[1];
        break;
    case Kind::function:
        return;  // bounds are sampled at construction and rescaled in scaled()
    }
    if (lo_ > hi_) std::swap(lo_, hi_);
    description_ = os.str();
}

double CoefficientField::operator()(double x) const
{
    switch (kind_) {
    case Kind::constant:
        return factor_ * values_[0];
    case Kind::piecewise: {
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
        return factor_ * values_[static_cast<std::size_t>(it - breakpoints_.begin())];
    }
    case Kind::sine:
        return factor_ * (values_[0] + values_[1] * std::sin(2.0 * std::numbers::pi * values_[2] * x));
    case Kind::function:
        return factor_ * fn_(x);
    }
    return 0.0;
}

double CoefficientField::derivative(double x) const
{
    switch (kind_) {
    case Kind::constant:
    case Kind::piecewise:
        return 0.0;
    case Kind::sine: {
        const double k = 2.0 * std::numbers::pi * values_[2];
        return factor_ * values_[1] * k * std::cos(k * x);
    }
    case Kind::function:
        return dfn_ ? factor_ * dfn_(x) : 0.0;
    }
    return 0.0;
}

double CoefficientField::mean(double a, double b) const
{
    if (!(b > a)) return (*this)(a);
    switch (kind_) {
    case Kind::constant:
        return factor_ * values_[0];
    case Kind::piecewise: {
        double acc = 0.0;
        double left = a;
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), a);
        std::size_t piece = static_cast<std::size_t>(it - breakpoints_.begin());
        while (left < b) {
            const double right = piece < breakpoints_.size() ? std::min(b, breakpoints_[piece]) : b;
            acc += values_[piece] * (right - left);
            left = right;
            ++piece;
        }
        return factor_ * acc / (b - a);
    }
    case Kind::sine: {
        const double k = 2.0 * std::numbers::pi * values_[2];
        if (k == 0.0) return factor_ * values_[0];
        const double integral = values_[1] * (std::cos(k * a) - std::cos(k * b)) / k;
        return factor_ * (values_[0] + integral / (b - a));
    }
    case Kind::function: {
        const double m = 0.5 * (a + b);
        const double r = 0.5 * (b - a) * std::sqrt(0.6);
        return factor_ * (5.0 * fn_(m - r) + 8.0 * fn_(m) + 5.0 * fn_(m + r)) / 18.0;
    }
    }
    return 0.0;
}

std::vector<double> CoefficientField::sample(const Grid1D& grid) const
{
    std::vector<double> v(static_cast<std::size_t>(grid.n_cells()));
    for (int i = 0; i < grid.n_cells(); ++i) v[static_cast<std::size_t>(i)] = (*this)(grid.center(i));
    return v;
}

CoefficientField CoefficientField::scaled(double factor) const
{
    if (!std::isfinite(factor)) throw ArgumentError("scale factor must be finite");
    CoefficientField f = *this;
    if (kind_ == Kind::function) {
        // bounds are already absolute; rescale them directly
        const double a = factor * lo_;
        const double b = factor * hi_;
        f.factor_ = factor_ * factor;
        f.lo_ = std::min(a, b);
        f.hi_ = std::max(a, b);
        return f;
    }
    f.factor_ = factor_ * factor;
    f.update_bounds();
    return f;
}

bool CoefficientField::is_continuous() const
{
    if (kind_ != Kind::piecewise) return true;
    return std::adjacent_find(values_.begin(), values_.end(), std::not_equal_to<>()) == values_.end();
}

void ProblemSpec::validate() const
{
    auto positive = [](const CoefficientField& f, const char* name) {
        if (!(f.lower_bound() > 0.0))
            throw ValidationError(std::string(name) + " must be bounded below by a positive constant (lower bound " +
                                  std::to_string(f.lower_bound()) + ")");
        if (!std::isfinite(f.upper_bound())) throw ValidationError(std::string(name) + " must be bounded");
    };
    positive(sigma, "sigma");
    positive(gamma, "gamma");
    if (!std::isfinite(source.lower_bound()) || !std::isfinite(source.upper_bound()))
        throw ValidationError("source must be bounded");
    if (!std::isfinite(boundary.left) || !std::isfinite(boundary.right))
        throw ValidationError("boundary data must be finite");
    for (const auto* f : {&sigma, &gamma, &source})
        for (double b : f->breakpoints())
            if (!(b > 0.0 && b < grid.length()))
                throw ValidationError("breakpoint " + std::to_string(b) + " lies outside the domain");
}

ProblemSpec ProblemSpec::with_grid(const Grid1D& g) const
{
    ProblemSpec p = *this;
    p.grid = g;
    return p;
}

ScaledCoefficients scale(const ProblemSpec& problem, double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("eps must be positive");
    ScaledCoefficients s;
    s.eps = eps;
    if (problem.scaling == Scaling::unscaled) {
        s.gamma = problem.gamma;
        s.sigma = problem.sigma;
        s.source = problem.source;
        s.boundary = problem.boundary;
        return s;
    }
    s.gamma = problem.gamma.scaled(eps);
    s.sigma = problem.sigma.scaled(1.0 / eps);
    s.source = problem.source.scaled(eps);
    s.boundary = {eps * problem.boundary.left, eps * problem.boundary.right};
    return s;
}

double inflow_norm(const BoundaryData& g, const AngularQuadrature& quad)
{
    double acc = 0.0;
    for (int j = 0; j < quad.size(); ++j) {
        const double mu = quad.node(j);
        const double value = mu > 0.0 ? g.left : g.right;
        acc += std::abs(mu) * quad.weight(j) * value * value;
    }
    return std::sqrt(acc);
}

ManufacturedCase transport_polynomial_case(double length)
{
    const double L2 = length * length;
    ManufacturedCase c;
    c.name = "poly_transport";
    c.kind = ManufacturedCase::Kind::transport;
    c.u = [=](double x, double mu) { return x * (length - x) * (1.0 + mu) / L2; };
    c.u_x = [=](double x, double mu) { return (length - 2.0 * x) * (1.0 + mu) / L2; };
    return c;
}

ManufacturedCase sine_diffusion_case(double length)
{
    const double k = std::numbers::pi / length;
    ManufacturedCase c;
    c.name = "sine";
    c.kind = ManufacturedCase::Kind::diffusion;
    c.ubar = [=](double x) { return std::sin(k * x); };
    c.ubar_x = [=](double x) { return k * std::cos(k * x); };
    c.ubar_xx = [=](double x) { return -k * k * std::sin(k * x); };
    return c;
}

ManufacturedCase cosh_diffusion_case(double kappa, double length)
{
    const double c0 = std::cosh(0.5 * kappa * length);
    const double mid = 0.5 * length;
    ManufacturedCase c;
    c.name = "cosh";
    c.kind = ManufacturedCase::Kind::diffusion;
    c.ubar = [=](double x) { return 1.0 - std::cosh(kappa * (x - mid)) / c0; };
    c.ubar_x = [=](double x) { return -kappa * std::sinh(kappa * (x - mid)) / c0; };
    c.ubar_xx = [=](double x) { return -kappa * kappa * std::cosh(kappa * (x - mid)) / c0; };
    return c;
}

ManufacturedCase manufactured_case(const std::string& name, double length)
{
    if (name == "poly_transport") return transport_polynomial_case(length);
    if (name == "sine") return sine_diffusion_case(length);
    if (name == "cosh") return cosh_diffusion_case(std::sqrt(3.0), length);
    throw ValidationError("unknown manufactured case '" + name + "' (expected poly_transport, sine or cosh)");
}

Eigen::MatrixXd mms_transport_source(const ManufacturedCase& mcase, const CoefficientField& sigma,
                                     const CoefficientField& gamma, const ScatteringOperator& K,
                                     const Grid1D& grid, const AngularQuadrature& quad)
{
    if (K.size() != quad.size()) throw ArgumentError("mms_transport_source: K and quadrature differ in size");
    const int n = grid.n_cells();
    const int m = quad.size();
    Eigen::MatrixXd f(n, m);
    Eigen::VectorXd u(m), ux(m);
    for (int i = 0; i < n; ++i) {
        const double x = grid.center(i);
        for (int j = 0; j < m; ++j) {
            const double mu = quad.node(j);
            if (mcase.kind == ManufacturedCase::Kind::transport) {
                u[j] = mcase.u(x, mu);
                ux[j] = mcase.u_x(x, mu);
            } else {
                u[j] = mcase.ubar(x);
                ux[j] = mcase.ubar_x(x);
            }
        }
        const Eigen::VectorXd Ku = K.matrix() * u;
        const double s = sigma(x);
        const double g = gamma(x);
        for (int j = 0; j < m; ++j) f(i, j) = quad.node(j) * ux[j] + g * u[j] - s * (Ku[j] - u[j]);
    }
    return f;
}

CoefficientField mms_diffusion_source(const ManufacturedCase& mcase, const CoefficientField& sigma,
                                      const CoefficientField& gamma, double unit_coefficient, double length)
{
    if (mcase.kind != ManufacturedCase::Kind::diffusion)
        throw ValidationError("manufactured case '" + mcase.name + "' has no velocity-independent solution");
    auto f = [=](double x) {
        const double s = sigma(x);
        const double a = unit_coefficient / s;
        const double a_x = -unit_coefficient * sigma.derivative(x) / (s * s);
        return -(a_x * mcase.ubar_x(x) + a * mcase.ubar_xx(x)) + gamma(x) * mcase.ubar(x);
    };
    return CoefficientField::function(f, {}, length, "manufactured source for " + mcase.name);
}

}  // namespace difflim
