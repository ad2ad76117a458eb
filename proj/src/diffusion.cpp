#include "difflim/diffusion.hpp"

#include <cmath>

#include "difflim/errors.hpp"
#include "difflim/tridiagonal.hpp"

namespace difflim {

namespace {

struct NodalData {
    Eigen::VectorXd gamma;
    Eigen::VectorXd source;
};

// Means over the dual control volumes [x_i - h/2, x_i + h/2]; exact for piecewise data.
NodalData nodal_data(const ProblemSpec& p)
{
    const Grid1D& g = p.grid;
    const int n = g.n_cells();
    const double h = g.h();
    NodalData d{Eigen::VectorXd::Zero(n + 1), Eigen::VectorXd::Zero(n + 1)};
    for (int i = 1; i < n; ++i) {
        const double x = g.edge(i);
        d.gamma[i] = p.gamma.mean(x - 0.5 * h, x + 0.5 * h);
        d.source[i] = p.source.mean(x - 0.5 * h, x + 0.5 * h);
    }
    return d;
}

}  // namespace

Eigen::VectorXd DiffusionSolution::at_cell_centers() const
{
    const int n = grid.n_cells();
    return 0.5 * (u0.head(n) + u0.tail(n));
}

Eigen::VectorXd cell_diffusion_coefficients(const ProblemSpec& problem, const DiffusionCoefficient& coefficient)
{
    const Grid1D& g = problem.grid;
    const int n = g.n_cells();
    Eigen::VectorXd a(n);
    if (const auto* t = std::get_if<DiffusionTensor>(&coefficient)) {
        if (static_cast<int>(t->cells.size()) != n)
            throw ArgumentError("diffusion tensor has " + std::to_string(t->cells.size()) + " cells, grid has " +
                                std::to_string(n));
        if (!(t->coercivity_lb > 0.0)) throw ValidationError("diffusion tensor is not coercive");
        for (int i = 0; i < n; ++i) a[i] = t->cells[static_cast<std::size_t>(i)](0, 0);
    } else {
        const double a11 = std::get<UnitTensorCoefficient>(coefficient).a11;
        if (!(a11 > 0.0)) throw ValidationError("diffusion coefficient must be positive");
        for (int i = 0; i < n; ++i) a[i] = a11 / problem.sigma.mean(g.edge(i), g.edge(i + 1));
    }
    if (!(a.array() > 0.0).all() || !a.allFinite())
        throw ValidationError("diffusion coefficient must be positive and finite in every cell");
    return a;
}

namespace {

struct Tridiagonal {
    Eigen::VectorXd lower, diag, upper, rhs;
};

// Interior-node system; row k belongs to node k + 1.
Tridiagonal assemble(const ProblemSpec& problem, const Eigen::VectorXd& a)
{
    const NodalData d = nodal_data(problem);
    const Eigen::Index n = problem.grid.n_cells();
    const double h = problem.grid.h();
    const Eigen::Index m = n - 1;
    Tridiagonal t{Eigen::VectorXd::Zero(m), Eigen::VectorXd(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd(m)};
    for (Eigen::Index i = 1; i < n; ++i) {
        t.diag[i - 1] = (a[i - 1] + a[i]) / h + h * d.gamma[i];
        if (i > 1) t.lower[i - 1] = -a[i - 1] / h;
        if (i < m) t.upper[i - 1] = -a[i] / h;
        t.rhs[i - 1] = h * d.source[i];
    }
    return t;
}

}  // namespace

Eigen::MatrixXd assemble_diffusion_matrix(const ProblemSpec& problem, const DiffusionCoefficient& coefficient)
{
    const Tridiagonal t = assemble(problem, cell_diffusion_coefficients(problem, coefficient));
    const Eigen::Index m = t.diag.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        A(k, k) = t.diag[k];
        if (k > 0) A(k, k - 1) = t.lower[k];
        if (k + 1 < m) A(k, k + 1) = t.upper[k];
    }
    return A;
}

DiffusionSolution solve_diffusion(const ProblemSpec& problem, const DiffusionCoefficient& coefficient)
{
    problem.validate();
    const Grid1D& g = problem.grid;
    const int n = g.n_cells();
    const double h = g.h();
    const Eigen::VectorXd a = cell_diffusion_coefficients(problem, coefficient);

    DiffusionSolution s;
    s.grid = g;
    s.x = g.edges();
    s.u0 = Eigen::VectorXd::Zero(n + 1);
    s.cell_coefficient = a;
    if (n > 1) {
        const Tridiagonal t = assemble(problem, a);
        s.u0.segment(1, n - 1) = solve_tridiagonal(t.lower, t.diag, t.upper, t.rhs);
    }
    s.gradient = (s.u0.tail(n) - s.u0.head(n)) / h;
    s.flux = -a.cwiseProduct(s.gradient);
    return s;
}

Eigen::VectorXd weak_residual(const Eigen::VectorXd& nodal, const ProblemSpec& problem,
                              const DiffusionCoefficient& coefficient)
{
    const Grid1D& g = problem.grid;
    const int n = g.n_cells();
    if (nodal.size() != n + 1) throw ArgumentError("weak_residual: expected one value per grid node");
    const double h = g.h();
    const Eigen::VectorXd a = cell_diffusion_coefficients(problem, coefficient);
    const NodalData d = nodal_data(problem);
    Eigen::VectorXd r(std::max(0, n - 1));
    for (int i = 1; i < n; ++i) {
        const double stiffness = (a[i - 1] * (nodal[i] - nodal[i - 1]) - a[i] * (nodal[i + 1] - nodal[i])) / h;
        r[i - 1] = stiffness + h * d.gamma[i] * nodal[i] - h * d.source[i];
    }
    return r;
}

}  // namespace difflim
