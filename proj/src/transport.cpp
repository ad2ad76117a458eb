#include "difflim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Sparse>

#include "difflim/errors.hpp"

namespace difflim {

std::string to_string(Scheme s)
{
    return s == Scheme::diamond_difference ? "diamond-difference" : "upwind";
}

std::string to_string(Acceleration a) { return a == Acceleration::dsa ? "dsa" : "none"; }

void SolverOptions::validate() const
{
    if (!(tolerance > 0.0)) throw ArgumentError("solver tolerance must be positive");
    if (max_iterations < 1) throw ArgumentError("max_iterations must be >= 1");
}

TransportSetup make_transport_setup(const ProblemSpec& problem, double eps, const AngularQuadrature& quad)
{
    problem.validate();
    const ScaledCoefficients c = scale(problem, eps);
    const Grid1D& grid = problem.grid;
    const int n = grid.n_cells();

    TransportSetup s;
    s.grid = grid;
    s.quad = quad;
    s.K = assemble_scattering(problem.kernel, quad);
    require_certified(s.K);
    s.diffusion_unit = axial_diffusion_coefficient(s.K);
    s.sigma_a.resize(n);
    s.sigma_s.resize(n);
    s.source.resize(n, quad.size());
    for (int i = 0; i < n; ++i) {
        const double a = grid.edge(i);
        const double b = grid.edge(i + 1);
        s.sigma_a[i] = c.gamma.mean(a, b);
        s.sigma_s[i] = c.sigma.mean(a, b);
        s.source.row(i).setConstant(c.source.mean(a, b));
    }
    s.inflow = c.boundary;
    return s;
}

void use_manufactured_source(TransportSetup& setup, const ProblemSpec& problem, const ManufacturedCase& mcase,
                             double eps)
{
    if (mcase.kind != ManufacturedCase::Kind::transport)
        throw ValidationError("manufactured case '" + mcase.name + "' has no angular solution");
    const ScaledCoefficients c = scale(problem, eps);
    setup.source = mms_transport_source(mcase, c.sigma, c.gamma, setup.K, setup.grid, setup.quad);
}

SweepResult sweep(const Grid1D& grid, const AngularQuadrature& quad, const Eigen::VectorXd& sigma_total,
                  const Eigen::MatrixXd& emission, const BoundaryData& inflow, Scheme scheme)
{
    const int n = grid.n_cells();
    const int m = quad.size();
    if (sigma_total.size() != n || emission.rows() != n || emission.cols() != m)
        throw ArgumentError("sweep: coefficient or emission shape does not match grid x quadrature");

    SweepResult r{Eigen::MatrixXd(n, m), Eigen::MatrixXd(n + 1, m)};
    const double h = grid.h();
    const double closure = scheme == Scheme::diamond_difference ? 2.0 : 1.0;
    for (int j = 0; j < m; ++j) {
        const double mu = quad.node(j);
        if (mu == 0.0) throw ValidationError("sweep: ordinate with mu = 0");
        const double a = closure * std::abs(mu) / h;
        if (mu > 0.0) {
            double in = inflow.left;
            r.edge(0, j) = in;
            for (int i = 0; i < n; ++i) {
                const double c = (emission(i, j) + a * in) / (sigma_total[i] + a);
                in = scheme == Scheme::diamond_difference ? 2.0 * c - in : c;
                r.cell(i, j) = c;
                r.edge(i + 1, j) = in;
            }
        } else {
            double in = inflow.right;
            r.edge(n, j) = in;
            for (int i = n - 1; i >= 0; --i) {
                const double c = (emission(i, j) + a * in) / (sigma_total[i] + a);
                in = scheme == Scheme::diamond_difference ? 2.0 * c - in : c;
                r.cell(i, j) = c;
                r.edge(i, j) = in;
            }
        }
    }
    return r;
}

namespace {

// Synthetic acceleration consistent with the spatial scheme. Edge fluxes and currents obey
// the zeroth and first angular moments of the discrete cell equations under a P1 closure
// psi = phi + 3 mu J, with Marshak (zero incoming partial current) conditions; the cell
// value is the mean of the edges for diamond differencing and the outgoing edge for the
// step scheme.
class Accelerator {
public:
    Accelerator(const TransportSetup& s, Scheme scheme)
        : n_(s.grid.n_cells()), h_(s.grid.h()), beta_(scheme == Scheme::upwind ? 1.0 : 0.0)
    {
        for (int j = 0; j < s.quad.size(); ++j)
            if (s.quad.node(j) > 0.0) alpha_ += s.quad.node(j) * s.quad.weight(j);

        const int N = 2 * (n_ + 1);
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(10 * n_ + 4));
        auto phi = [](int k) { return 2 * k; };
        auto cur = [](int k) { return 2 * k + 1; };
        t.emplace_back(0, cur(0), 1.0);
        t.emplace_back(0, phi(0), 2.0 * alpha_);
        for (int i = 0; i < n_; ++i) {
            const int L = i, R = i + 1;
            const double sa = h_ * s.sigma_a[i];
            const double st = h_ * (s.sigma_a[i] + s.sigma_s[i] / (3.0 * s.diffusion_unit));
            // J_R - J_L + h sigma_a phi_i = h r_i
            const int r0 = 2 * i + 1;
            t.emplace_back(r0, cur(R), 1.0 + 3.0 * beta_ * alpha_ * sa);
            t.emplace_back(r0, cur(L), -1.0 - 3.0 * beta_ * alpha_ * sa);
            t.emplace_back(r0, phi(R), 0.5 * sa);
            t.emplace_back(r0, phi(L), 0.5 * sa);
            // (phi_R - phi_L)/3 + h sigma_tr J_i = 0
            const int r1 = 2 * i + 2;
            t.emplace_back(r1, phi(R), 1.0 / 3.0 + beta_ * alpha_ * st);
            t.emplace_back(r1, phi(L), -1.0 / 3.0 - beta_ * alpha_ * st);
            t.emplace_back(r1, cur(R), 0.5 * st);
            t.emplace_back(r1, cur(L), 0.5 * st);
        }
        t.emplace_back(N - 1, cur(n_), 1.0);
        t.emplace_back(N - 1, phi(n_), -2.0 * alpha_);
        Eigen::SparseMatrix<double> A(N, N);
        A.setFromTriplets(t.begin(), t.end());
        lu_.compute(A);
        if (lu_.info() != Eigen::Success) throw ValidationError("acceleration system is singular");
    }

    /// Cell corrections of the velocity average for the scattering residual r.
    Eigen::VectorXd correction(const Eigen::VectorXd& r)
    {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * (n_ + 1));
        for (int i = 0; i < n_; ++i) rhs[2 * i + 1] = h_ * r[i];
        const Eigen::VectorXd x = lu_.solve(rhs);
        Eigen::VectorXd d(n_);
        for (int i = 0; i < n_; ++i)
            d[i] = 0.5 * (x[2 * i] + x[2 * i + 2]) + 3.0 * beta_ * alpha_ * (x[2 * i + 3] - x[2 * i + 1]);
        return d;
    }

private:
    int n_;
    double h_;
    double beta_;
    double alpha_ = 0.0;  // half-range current of a unit isotropic flux
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

ParticleBalance balance_of(const TransportSetup& s, const Eigen::MatrixXd& edges, const Eigen::VectorXd& ubar)
{
    ParticleBalance b;
    const int n = s.grid.n_cells();
    for (int j = 0; j < s.quad.size(); ++j) {
        const double mu = s.quad.node(j);
        const double wj = std::abs(mu) * s.quad.weight(j);
        b.outflow += wj * (mu > 0.0 ? edges(n, j) : edges(0, j));
        b.inflow += wj * (mu > 0.0 ? s.inflow.left : s.inflow.right);
    }
    const double h = s.grid.h();
    b.absorption = h * s.sigma_a.dot(ubar);
    b.source = h * (s.source * s.quad.weights()).sum();
    b.residual = b.outflow - b.inflow + b.absorption - b.source;
    const double scale = std::max({std::abs(b.outflow), std::abs(b.inflow), std::abs(b.absorption), std::abs(b.source)});
    b.relative = scale > 0.0 ? std::abs(b.residual) / scale : 0.0;
    return b;
}

}  // namespace

TransportSolution solve_transport(const TransportSetup& s, const SolverOptions& options)
{
    options.validate();
    const int n = s.grid.n_cells();
    const int m = s.quad.size();
    if (s.K.size() != m || s.sigma_a.size() != n || s.sigma_s.size() != n || s.source.rows() != n ||
        s.source.cols() != m)
        throw ArgumentError("solve_transport: setup shapes are inconsistent");

    const Eigen::VectorXd& w = s.quad.weights();
    const Eigen::VectorXd sigma_t = s.sigma_total();
    const Eigen::MatrixXd Kt = s.K.matrix().transpose();

    TransportSolution sol;
    sol.grid = s.grid;
    sol.quad = s.quad;
    sol.scheme = options.scheme;

    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd ubar_prev = Eigen::VectorXd::Zero(n);
    SweepResult last;
    std::unique_ptr<Accelerator> accel;
    if (options.acceleration == Acceleration::dsa) accel = std::make_unique<Accelerator>(s, options.scheme);
    bool converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Eigen::MatrixXd emission = s.sigma_s.asDiagonal() * (u * Kt) + s.source;
        last = sweep(s.grid, s.quad, sigma_t, emission, s.inflow, options.scheme);
        Eigen::VectorXd ubar = last.cell * w;
        // The balance defect of a sweep is h sum sigma_s (ubar_new - ubar_emitted); it vanishes only at the fixed point.
        const double balance = balance_of(s, last.edge, ubar).relative;
        u = last.cell;
        if (options.acceleration == Acceleration::dsa) {
            const Eigen::VectorXd r = s.sigma_s.cwiseProduct(ubar - ubar_prev);
            const Eigen::VectorXd delta = accel->correction(r);
            u.colwise() += delta;
            ubar += delta;
        }
        const double norm = ubar.norm();
        const double change = norm > 0.0 ? (ubar - ubar_prev).norm() / norm : (ubar - ubar_prev).norm();
        sol.log.residuals.push_back(change);
        sol.log.iterations = it;
        ubar_prev = ubar;
        if (change <= options.tolerance && balance <= options.tolerance) {
            converged = true;
            break;
        }
    }

    const auto& res = sol.log.residuals;
    if (res.size() >= 2) {
        // geometric mean of the last few contraction ratios
        const std::size_t k = std::min<std::size_t>(5, res.size() - 1);
        const double first = res[res.size() - 1 - k];
        const double lastr = res.back();
        sol.log.spectral_radius_estimate = (first > 0.0 && lastr > 0.0) ? std::pow(lastr / first, 1.0 / k) : 0.0;
    }
    if (!converged) {
        std::ostringstream os;
        os << "source iteration did not converge in " << options.max_iterations << " iterations (last change "
           << res.back() << ", tolerance " << options.tolerance << ", acceleration "
           << to_string(options.acceleration) << ")";
        throw ConvergenceError(os.str(), res);
    }

    sol.u = std::move(last.cell);
    sol.edges = std::move(last.edge);
    sol.ubar = sol.u * w;
    return sol;
}

TransportSolution solve_transport(const ProblemSpec& problem, double eps, const AngularQuadrature& quad,
                                  const SolverOptions& options)
{
    return solve_transport(make_transport_setup(problem, eps, quad), options);
}

Eigen::MatrixXd directional_derivative(const TransportSolution& sol)
{
    const int n = sol.grid.n_cells();
    Eigen::MatrixXd d(n, sol.quad.size());
    for (int i = 0; i < n; ++i)
        d.row(i) = ((sol.edges.row(i + 1) - sol.edges.row(i)).array() * sol.quad.nodes().transpose().array()) /
                   sol.grid.h();
    return d;
}

double BoundaryTrace::norm() const { return std::sqrt((weights.array() * values.array().square()).sum()); }

BoundaryTrace outflow_trace(const TransportSolution& sol)
{
    const int m = sol.quad.size();
    const int n = sol.grid.n_cells();
    BoundaryTrace t{Eigen::VectorXd(m), Eigen::VectorXd(m)};
    for (int j = 0; j < m; ++j) {
        const double mu = sol.quad.node(j);
        t.values[j] = mu > 0.0 ? sol.edges(n, j) : sol.edges(0, j);
        t.weights[j] = std::abs(mu) * sol.quad.weight(j);
    }
    return t;
}

ParticleBalance particle_balance(const TransportSetup& s, const TransportSolution& sol)
{
    return balance_of(s, sol.edges, sol.ubar);
}

double fixed_point_residual(const TransportSetup& s, const TransportSolution& sol)
{
    const Eigen::MatrixXd emission = s.sigma_s.asDiagonal() * (sol.u * s.K.matrix().transpose()) + s.source;
    const SweepResult r = sweep(s.grid, s.quad, s.sigma_total(), emission, s.inflow, sol.scheme);
    const Eigen::VectorXd ubar = r.cell * s.quad.weights();
    const double norm = ubar.norm();
    return norm > 0.0 ? (ubar - sol.ubar).norm() / norm : (ubar - sol.ubar).norm();
}

}  // namespace difflim
