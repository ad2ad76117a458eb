#include "difflim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>

#include "difflim/errors.hpp"

namespace difflim {

Eigen::VectorXd velocity_average(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights)
{
    if (field.cols() != weights.size())
        throw ArgumentError("velocity_average: field has " + std::to_string(field.cols()) +
                            " velocity columns, quadrature has " + std::to_string(weights.size()));
    return field * weights;
}

VelocitySplit split_velocity(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights)
{
    VelocitySplit s;
    s.mean = velocity_average(field, weights);
    s.fluctuation = field.colwise() - s.mean;
    return s;
}

double lp_norm(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights, double h, double p)
{
    if (field.cols() != weights.size()) throw ArgumentError("lp_norm: shape mismatch");
    if (!(p >= 1.0)) throw ArgumentError("lp_norm: p must be >= 1");
    if (std::isinf(p)) return field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
    const double s = h * (field.cwiseAbs().array().pow(p).matrix() * weights).sum();
    return std::pow(s, 1.0 / p);
}

double l2_norm(const Eigen::VectorXd& field, double h) { return std::sqrt(h * field.squaredNorm()); }

NormSet norms(const Eigen::MatrixXd& field, double eps, std::span<const double> sigma,
              std::span<const double> gamma, const ScatteringOperator& K, double h,
              std::span<const double> p_values, const BoundaryTrace* trace)
{
    const Eigen::Index n = field.rows();
    const Eigen::VectorXd& w = K.weights();
    if (field.cols() != K.size()) throw ArgumentError("norms: field and scattering operator sizes differ");
    if (static_cast<Eigen::Index>(sigma.size()) != n || static_cast<Eigen::Index>(gamma.size()) != n)
        throw ArgumentError("norms: coefficient arrays must have one value per cell");
    if (!(eps > 0.0)) throw ArgumentError("norms: eps must be positive");

    NormSet out;
    out.l2 = l2_norm(field, w, h);
    for (double p : p_values) out.lp[p] = lp_norm(field, w, h, p);
    if (trace) out.bdry_plus = trace->norm();

    // Coefficients of each row in the weighted-orthonormal eigenbasis of I - K.
    const Eigen::MatrixXd coeff = field * w.asDiagonal() * K.eigenvectors();
    const Eigen::VectorXd& lambda = K.eigenvalues();
    const VelocitySplit split = split_velocity(field, w);

    double ceps = 0.0;
    double ceps_inv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = eps * gamma[static_cast<std::size_t>(i)];
        const double s = sigma[static_cast<std::size_t>(i)] / eps;
        for (Eigen::Index k = 0; k < lambda.size(); ++k) {
            const double lk = std::max(0.0, lambda[k]);
            const double c2 = coeff(i, k) * coeff(i, k);
            ceps += (g + s * lk) * c2;
            ceps_inv += c2 / (g + s * lk);
        }
    }
    out.ceps = std::sqrt(h * ceps);
    out.ceps_inv = std::sqrt(h * ceps_inv);

    const double fl2 = std::pow(l2_norm(split.fluctuation, w, h), 2);
    const double mn2 = std::pow(l2_norm(split.mean, h), 2);
    out.equiv1_proxy = fl2 / eps + eps * mn2;
    out.equiv2_proxy = eps * fl2 + mn2 / eps;
    return out;
}

NormSet solution_norms(const ProblemSpec& problem, double eps, const TransportSolution& solution,
                       const ScatteringOperator& K, std::span<const double> p_values)
{
    const std::vector<double> sigma = problem.sigma.sample(solution.grid);
    const std::vector<double> gamma = problem.gamma.sample(solution.grid);
    const BoundaryTrace trace = outflow_trace(solution);
    return norms(solution.u, eps, sigma, gamma, K, solution.grid.h(), p_values, &trace);
}

Eigen::MatrixXd corrector_u1(const DiffusionSolution& diffusion, std::span<const double> sigma,
                             const ScatteringOperator& K)
{
    const Eigen::Index n = diffusion.gradient.size();
    if (static_cast<Eigen::Index>(sigma.size()) != n)
        throw ArgumentError("corrector_u1: sigma must have one value per cell");
    const Eigen::VectorXd mu = K.directions().col(0);
    const Eigen::VectorXd z = pinv_apply(K, mu);
    Eigen::MatrixXd u1(n, K.size());
    for (Eigen::Index i = 0; i < n; ++i)
        u1.row(i) = (-diffusion.gradient[i] / sigma[static_cast<std::size_t>(i)]) * z.transpose();
    return u1;
}

Eigen::MatrixXd remainder(const Eigen::MatrixXd& u_eps, const Eigen::VectorXd& u0, const Eigen::MatrixXd& u1,
                          double eps)
{
    if (u_eps.rows() != u0.size() || u1.rows() != u_eps.rows() || u1.cols() != u_eps.cols())
        throw ArgumentError("remainder: shape mismatch");
    return (u_eps.colwise() - u0) - eps * u1;
}

double weak_form_defect(const Eigen::VectorXd& ubar_cells, const ProblemSpec& problem,
                        const DiffusionCoefficient& coefficient)
{
    const Grid1D& g = problem.grid;
    const int n = g.n_cells();
    if (ubar_cells.size() != n) throw ArgumentError("weak_form_defect: one value per cell expected");
    Eigen::VectorXd nodal = Eigen::VectorXd::Zero(n + 1);
    for (int i = 1; i < n; ++i) nodal[i] = 0.5 * (ubar_cells[i - 1] + ubar_cells[i]);
    const Eigen::VectorXd r = weak_residual(nodal, problem, coefficient);
    double d = 0.0;
    for (int i = 1; i < n; ++i) d += r[i - 1] * std::sin(std::numbers::pi * g.edge(i) / g.length());
    return std::abs(d);
}

AprioriTable apriori_check(std::span<const AprioriInput> inputs)
{
    if (inputs.size() < 3) throw ArgumentError("apriori_check needs at least three values of eps");
    AprioriTable t;
    for (const AprioriInput& in : inputs) {
        if (!(in.eps > 0.0)) throw ArgumentError("apriori_check: eps must be positive");
        AprioriRow r;
        r.eps = in.eps;
        r.bdry_over_sqrt_eps = in.bdry / std::sqrt(in.eps);
        r.fluct_over_eps = in.fluct / in.eps;
        r.mean = in.mean;
        r.deriv = in.deriv;
        r.linf = in.linf;
        r.energy_lhs = in.bdry * in.bdry + in.fluct * in.fluct / in.eps + in.eps * in.mean * in.mean;
        r.energy_rhs = in.data_inflow * in.data_inflow + in.data_mean * in.data_mean / in.eps +
                       in.eps * in.data_fluct * in.data_fluct;
        r.energy_ratio = r.energy_rhs > 0.0 ? r.energy_lhs / r.energy_rhs : 0.0;
        t.rows.push_back(r);
    }

    const std::vector<std::pair<std::string, double AprioriRow::*>> quantities{
        {"bdry_over_sqrt_eps", &AprioriRow::bdry_over_sqrt_eps},
        {"fluct_over_eps", &AprioriRow::fluct_over_eps},
        {"mean", &AprioriRow::mean},
        {"deriv", &AprioriRow::deriv},
        {"linf", &AprioriRow::linf},
        {"energy_ratio", &AprioriRow::energy_ratio},
    };
    for (const auto& [name, member] : quantities) {
        double growth = 1.0;
        for (std::size_t k = 1; k < t.rows.size(); ++k)
            for (std::size_t j = 0; j < k; ++j) {
                const double a = t.rows[j].*member;
                const double b = t.rows[k].*member;
                if (a > 0.0) growth = std::max(growth, b / a);
                else if (b > 0.0) growth = std::max(growth, std::numeric_limits<double>::infinity());
            }
        t.growth[name] = growth;
        if (growth > 2.0) t.flags.push_back(name);
    }
    return t;
}

SlopeFit fit_log_log(std::span<const double> eps, std::span<const double> values)
{
    if (eps.size() != values.size()) throw ArgumentError("fit_log_log: length mismatch");
    if (eps.size() < 2) throw ArgumentError("fit_log_log: need at least two points");
    const std::size_t n = eps.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(eps[i] > 0.0) || !(values[i] > 0.0))
            throw ArgumentError("fit_log_log: eps and values must be positive");
        x[i] = std::log(eps[i]);
        y[i] = std::log(values[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ArgumentError("fit_log_log: eps values must not all coincide");
    SlopeFit f;
    f.points = static_cast<int>(n);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = y[i] - (f.intercept + f.slope * x[i]);
            ssr += e * e;
        }
        f.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

void StudyOptions::validate() const
{
    if (eps.size() < 4) throw ArgumentError("study needs at least four values of eps");
    for (double e : eps)
        if (!(e > 0.0 && e <= 1.0)) throw ArgumentError("study eps values must lie in (0, 1]");
    const double ratio = eps[1] / eps[0];
    for (std::size_t i = 1; i < eps.size(); ++i) {
        const double r = eps[i] / eps[i - 1];
        if (!(r < 1.0)) throw ArgumentError("study eps values must be strictly decreasing");
        if (std::abs(r - ratio) > 1e-9 * ratio) throw ArgumentError("study eps values must form a geometric sequence");
    }
    if (ratio > 0.5 + 1e-12) throw ArgumentError("study eps ratio must be at most 1/2");
    if (min_cells < 2) throw ArgumentError("study min_cells must be >= 2");
    if (!(cells_per_eps > 0.0)) throw ArgumentError("study cells_per_eps must be positive");
    if (jobs < 1) throw ArgumentError("jobs must be >= 1");
    solver.validate();
}

int StudyOptions::cells_for(double e, double length) const
{
    const double needed = std::ceil(cells_per_eps * length / e - 1e-9);
    return std::max(min_cells, static_cast<int>(needed));
}

double limit_unit_coefficient(const Kernel& kernel, const StudyOptions& options)
{
    if (std::holds_alternative<TabulatedKernel>(kernel)) {
        const ScatteringOperator K = assemble_scattering(kernel, build_angular_quadrature(options.ordinates));
        require_certified(K);
        return axial_diffusion_coefficient(K);
    }
    const ScatteringOperator K =
        assemble_scattering(kernel, build_sphere_quadrature(options.sphere_polar, options.sphere_azimuth));
    const double one = 1.0;
    return diffusion_tensor(K, std::span<const double>(&one, 1)).cells.front()(0, 0);
}

namespace {

struct EpsResult {
    StudyRow row;
    AprioriInput apriori;
};

EpsResult run_one(const ProblemSpec& base, double eps, const StudyOptions& options, double a11)
{
    const int n = options.cells_for(eps, base.grid.length());
    const ProblemSpec problem = base.with_grid(Grid1D(base.grid.length(), n));
    const AngularQuadrature quad = build_angular_quadrature(options.ordinates);
    const TransportSetup setup = make_transport_setup(problem, eps, quad);
    const TransportSolution sol = solve_transport(setup, options.solver);

    const UnitTensorCoefficient coefficient{a11};
    const DiffusionSolution limit = solve_diffusion(problem, coefficient);
    const Eigen::VectorXd u0 = limit.at_cell_centers();

    const double h = problem.grid.h();
    const Eigen::VectorXd& w = quad.weights();
    const Eigen::MatrixXd err = sol.u.colwise() - u0;
    const VelocitySplit split = split_velocity(sol.u, w);

    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = problem.sigma.mean(problem.grid.edge(i), problem.grid.edge(i + 1));
    const Eigen::MatrixXd u1 = corrector_u1(limit, sigma, setup.K);

    EpsResult r;
    StudyRow& row = r.row;
    row.eps = eps;
    row.n_cells = n;
    row.err_total = l2_norm(err, w, h);
    row.err_fluct = l2_norm(split.fluctuation, w, h);
    row.bdry = outflow_trace(sol).norm();
    row.deriv = l2_norm(directional_derivative(sol), w, h);
    row.remainder = l2_norm(remainder(sol.u, u0, u1, eps), w, h);
    if (options.lp) {
        row.err_l1 = lp_norm(err, w, h, 1.0);
        row.err_l4 = lp_norm(err, w, h, 4.0);
    }
    row.mean = l2_norm(split.mean, h);
    row.linf = sol.u.cwiseAbs().maxCoeff();
    row.corrector = l2_norm(u1, w, h);
    row.weak_defect = weak_form_defect(sol.ubar, problem, coefficient);
    row.iterations = sol.log.iterations;
    row.balance = particle_balance(setup, sol).relative;

    const VelocitySplit source = split_velocity(setup.source, w);
    r.apriori = AprioriInput{eps,
                             row.bdry,
                             row.err_fluct,
                             row.mean,
                             row.deriv,
                             row.linf,
                             inflow_norm(setup.inflow, quad),
                             l2_norm(source.mean, h),
                             l2_norm(source.fluctuation, w, h)};
    return r;
}

void finish(ConvergenceReport& report, const std::vector<AprioriInput>& apriori, bool lp)
{
    std::vector<double> eps;
    for (const StudyRow& r : report.rows) eps.push_back(r.eps);
    if (apriori.size() >= 3) report.apriori = apriori_check(apriori);
    if (report.rows.size() < 2) return;

    const std::vector<std::pair<std::string, double StudyRow::*>> quantities{
        {"err_total", &StudyRow::err_total}, {"err_fluct", &StudyRow::err_fluct},
        {"bdry", &StudyRow::bdry},           {"deriv", &StudyRow::deriv},
        {"remainder", &StudyRow::remainder}, {"err_l1", &StudyRow::err_l1},
        {"err_l4", &StudyRow::err_l4},       {"weak_defect", &StudyRow::weak_defect},
    };
    for (const auto& [name, member] : quantities) {
        if (!lp && (name == "err_l1" || name == "err_l4")) continue;
        std::vector<double> v;
        for (const StudyRow& r : report.rows) v.push_back(r.*member);
        if (std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); }))
            report.slopes[name] = fit_log_log(eps, v);
    }
}

}  // namespace

ConvergenceReport convergence_study(const ProblemSpec& problem, const StudyOptions& options)
{
    options.validate();
    problem.validate();

    ConvergenceReport report;
    report.a11_unit = limit_unit_coefficient(problem.kernel, options);
    report.predicted = {{"err_total", 1.0}, {"err_fluct", 1.0}, {"bdry", 0.5},   {"deriv", 0.0},
                        {"remainder", 1.0}, {"err_l1", 1.0},    {"weak_defect", 1.0}};
    if (options.lp) report.predicted["err_l4"] = 0.5;
    report.rate_asserted = problem.sigma.is_continuous();
    report.regime = report.rate_asserted
                        ? "smooth sigma: O(eps) rate asserted"
                        : "rate not asserted: discontinuous sigma, convergence without rate (low-regularity regime)";

    const std::size_t m = options.eps.size();
    std::vector<AprioriInput> apriori;
    const std::size_t batch = static_cast<std::size_t>(options.jobs);
    for (std::size_t start = 0; start < m; start += batch) {
        const std::size_t stop = std::min(m, start + batch);
        std::vector<std::future<EpsResult>> running;
        for (std::size_t k = start; k < stop; ++k)
            running.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, run_one,
                                         std::cref(problem), options.eps[k], std::cref(options), report.a11_unit));
        std::optional<ConvergenceError> failure;
        for (auto& f : running) {
            try {
                EpsResult r = f.get();
                if (!failure) {
                    report.rows.push_back(r.row);
                    apriori.push_back(r.apriori);
                }
            } catch (const ConvergenceError& e) {
                if (!failure) failure.emplace(e);
            }
        }
        if (failure) {
            finish(report, apriori, options.lp);
            throw StudyError(std::string("study aborted: ") + failure->what(), report, failure->residuals());
        }
    }
    finish(report, apriori, options.lp);
    return report;
}

namespace {

void fill_orders(std::vector<RefinementRow>& rows)
{
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const RefinementRow& a = rows[k - 1];
        RefinementRow& b = rows[k];
        const double ratio = a.h / b.h;
        if (a.error_l2 > 0.0 && b.error_l2 > 0.0) b.order_l2 = std::log(a.error_l2 / b.error_l2) / std::log(ratio);
        if (a.error_max > 0.0 && b.error_max > 0.0)
            b.order_max = std::log(a.error_max / b.error_max) / std::log(ratio);
    }
}

}  // namespace

std::vector<RefinementRow> transport_refinement(const ProblemSpec& problem, const ManufacturedCase& mcase, double eps,
                                                int ordinates, const SolverOptions& options, int levels)
{
    if (levels < 2) throw ArgumentError("refinement needs at least two levels");
    if (mcase.kind != ManufacturedCase::Kind::transport)
        throw ArgumentError("transport_refinement needs an angular manufactured solution");
    const AngularQuadrature quad = build_angular_quadrature(ordinates);
    // 3-point Gauss on [-1, 1]
    const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

    std::vector<RefinementRow> rows;
    int n = problem.grid.n_cells();
    for (int level = 0; level < levels; ++level, n *= 2) {
        const ProblemSpec p = problem.with_grid(Grid1D(problem.grid.length(), n));
        TransportSetup setup = make_transport_setup(p, eps, quad);
        use_manufactured_source(setup, p, mcase, eps);
        const TransportSolution sol = solve_transport(setup, options);
        const double h = p.grid.h();
        Eigen::MatrixXd err(n, quad.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < quad.size(); ++j) {
                double exact = 0.0;
                for (int q = 0; q < 3; ++q) exact += 0.5 * gw[q] * mcase.u(p.grid.center(i) + 0.5 * h * gx[q], quad.node(j));
                err(i, j) = sol.u(i, j) - exact;
            }
        RefinementRow r;
        r.n_cells = n;
        r.h = h;
        r.error_l2 = l2_norm(err, quad.weights(), h);
        r.error_max = err.cwiseAbs().maxCoeff();
        r.iterations = sol.log.iterations;
        r.balance = particle_balance(setup, sol).relative;
        rows.push_back(r);
    }
    fill_orders(rows);
    return rows;
}

std::vector<RefinementRow> diffusion_refinement(const ProblemSpec& problem, const ManufacturedCase& mcase,
                                                double unit_coefficient, int levels)
{
    if (levels < 2) throw ArgumentError("refinement needs at least two levels");
    if (mcase.kind != ManufacturedCase::Kind::diffusion)
        throw ArgumentError("diffusion_refinement needs a velocity-independent manufactured solution");
    std::vector<RefinementRow> rows;
    int n = problem.grid.n_cells();
    for (int level = 0; level < levels; ++level, n *= 2) {
        const ProblemSpec p = problem.with_grid(Grid1D(problem.grid.length(), n));
        const DiffusionSolution sol = solve_diffusion(p, UnitTensorCoefficient{unit_coefficient});
        Eigen::VectorXd err(n + 1);
        for (int i = 0; i <= n; ++i) err[i] = sol.u0[i] - mcase.ubar(sol.x[i]);
        RefinementRow r;
        r.n_cells = n;
        r.h = p.grid.h();
        r.error_l2 = std::sqrt(r.h * err.squaredNorm());
        r.error_max = err.cwiseAbs().maxCoeff();
        rows.push_back(r);
    }
    fill_orders(rows);
    return rows;
}

}  // namespace difflim
