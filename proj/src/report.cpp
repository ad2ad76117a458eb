#include "difflim/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "difflim/errors.hpp"

namespace difflim {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

namespace {

nlohmann::json finite_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json to_array(const Eigen::VectorXd& v)
{
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
    return a;
}

double StudyRow::* member_of(const std::string& q)
{
    if (q == "err_total") return &StudyRow::err_total;
    if (q == "err_fluct") return &StudyRow::err_fluct;
    if (q == "bdry") return &StudyRow::bdry;
    if (q == "deriv") return &StudyRow::deriv;
    if (q == "remainder") return &StudyRow::remainder;
    if (q == "err_l1") return &StudyRow::err_l1;
    if (q == "err_l4") return &StudyRow::err_l4;
    if (q == "weak_defect") return &StudyRow::weak_defect;
    throw ArgumentError("unknown report quantity '" + q + "'");
}

void row(std::ostringstream& os, std::initializer_list<double> values)
{
    bool first = true;
    for (double v : values) {
        if (!first) os << ',';
        os << format_double(v);
        first = false;
    }
    os << '\n';
}

}  // namespace

nlohmann::json to_json(const CertReport& r)
{
    nlohmann::json j;
    j["eigenvalues"] = to_array(r.eigenvalues);
    j["c_K"] = r.c_K ? nlohmann::json(*r.c_K) : nlohmann::json(nullptr);
    j["null_space_dim"] = r.null_space_dim;
    j["self_adjointness_defect"] = r.self_adjointness_defect;
    j["max_abs_row_sum"] = r.max_abs_row_sum;
    j["passed"] = r.passed();
    j["assumptions"] = {{"A4a_self_adjoint_positive", r.a4a_self_adjoint_positive},
                        {"A4b_contraction", r.a4b_contraction},
                        {"A4c_null_space", r.a4c_null_space},
                        {"A4d_solvability", r.a4d_solvability},
                        {"linf_contraction", r.linf_contraction}};
    j["diagnostics"] = r.diagnostics;
    return j;
}

nlohmann::json to_json(const IterationLog& log)
{
    return {{"residuals", log.residuals},
            {"spectral_radius_estimate", log.spectral_radius_estimate},
            {"iterations", log.iterations}};
}

nlohmann::json to_json(const NormSet& n)
{
    nlohmann::json j{{"l2", n.l2},     {"ceps", n.ceps},
                     {"ceps_inv", n.ceps_inv}, {"equiv1_proxy", n.equiv1_proxy},
                     {"equiv2_proxy", n.equiv2_proxy}};
    nlohmann::json lp = nlohmann::json::object();
    for (const auto& [p, v] : n.lp) lp[format_double(p)] = v;
    j["lp"] = lp;
    j["bdry_plus"] = n.bdry_plus ? nlohmann::json(*n.bdry_plus) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json slopes_json(const ConvergenceReport& report)
{
    nlohmann::json j;
    nlohmann::json slopes = nlohmann::json::object();
    for (const auto& [name, fit] : report.slopes) {
        nlohmann::json s{{"slope", fit.slope},
                         {"stderr", fit.stderr_slope},
                         {"intercept", fit.intercept},
                         {"points", fit.points}};
        const auto it = report.predicted.find(name);
        s["predicted"] = it == report.predicted.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
        slopes[name] = s;
    }
    j["slopes"] = slopes;
    j["rate_asserted"] = report.rate_asserted;
    j["regime"] = report.regime;
    j["a11_unit"] = report.a11_unit;
    nlohmann::json growth = nlohmann::json::object();
    for (const auto& [k, v] : report.apriori.growth) growth[k] = finite_or_null(v);
    j["apriori"] = {{"growth", growth}, {"flags", report.apriori.flags}, {"bounded", report.apriori.bounded()}};
    return j;
}

std::string tensor_csv(const DiffusionTensor& tensor, const Grid1D& grid)
{
    if (static_cast<int>(tensor.cells.size()) != grid.n_cells())
        throw ArgumentError("tensor_csv: tensor and grid sizes differ");
    std::ostringstream os;
    os << "x,a11,a12,a13,a21,a22,a23,a31,a32,a33,min_eigenvalue\n";
    for (int i = 0; i < grid.n_cells(); ++i) {
        const Eigen::Matrix3d& A = tensor.cells[static_cast<std::size_t>(i)];
        const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(A, Eigen::EigenvaluesOnly).eigenvalues()[0];
        row(os, {grid.center(i), A(0, 0), A(0, 1), A(0, 2), A(1, 0), A(1, 1), A(1, 2), A(2, 0), A(2, 1), A(2, 2),
                 lmin});
    }
    return os.str();
}

std::string transport_csv(const TransportSolution& s)
{
    std::ostringstream os;
    os << "x,mu,u\n";
    for (int i = 0; i < s.grid.n_cells(); ++i)
        for (int j = 0; j < s.quad.size(); ++j) row(os, {s.grid.center(i), s.quad.node(j), s.u(i, j)});
    return os.str();
}

std::string average_csv(const TransportSolution& s)
{
    std::ostringstream os;
    os << "x,u_bar\n";
    for (int i = 0; i < s.grid.n_cells(); ++i) row(os, {s.grid.center(i), s.ubar[i]});
    return os.str();
}

std::string diffusion_csv(const DiffusionSolution& s)
{
    const Eigen::VectorXd centers = s.at_cell_centers();
    std::ostringstream os;
    os << "x,u0,grad_u0,flux\n";
    for (int i = 0; i < s.grid.n_cells(); ++i) row(os, {s.grid.center(i), centers[i], s.gradient[i], s.flux[i]});
    return os.str();
}

std::string diffusion_nodes_csv(const DiffusionSolution& s)
{
    std::ostringstream os;
    os << "x,u0\n";
    for (Eigen::Index i = 0; i < s.x.size(); ++i) row(os, {s.x[i], s.u0[i]});
    return os.str();
}

std::string refinement_csv(const std::vector<RefinementRow>& rows)
{
    std::ostringstream os;
    os << "n_cells,h,error_l2,error_max,order_l2,order_max,iterations,balance\n";
    for (const RefinementRow& r : rows) {
        os << r.n_cells << ',';
        row(os, {r.h, r.error_l2, r.error_max, r.order_l2, r.order_max, static_cast<double>(r.iterations), r.balance});
    }
    return os.str();
}

const std::vector<std::string>& report_quantities()
{
    static const std::vector<std::string> q{"err_total", "err_fluct", "bdry",   "deriv",
                                            "remainder", "err_l1",    "err_l4", "weak_defect"};
    return q;
}

std::string report_csv(const ConvergenceReport& report)
{
    std::ostringstream os;
    os << "eps,err_total,err_fluct,bdry,deriv,remainder,err_l1,err_l4\n";
    for (const StudyRow& r : report.rows)
        row(os, {r.eps, r.err_total, r.err_fluct, r.bdry, r.deriv, r.remainder, r.err_l1, r.err_l4});
    return os.str();
}

std::string study_details_csv(const ConvergenceReport& report)
{
    std::ostringstream os;
    os << "eps,n_cells,iterations,balance,mean,linf,corrector,weak_defect\n";
    for (const StudyRow& r : report.rows) {
        os << format_double(r.eps) << ',' << r.n_cells << ',' << r.iterations << ',';
        row(os, {r.balance, r.mean, r.linf, r.corrector, r.weak_defect});
    }
    return os.str();
}

std::string apriori_csv(const AprioriTable& t)
{
    std::ostringstream os;
    os << "eps,bdry_over_sqrt_eps,fluct_over_eps,mean,deriv,linf,energy_lhs,energy_rhs,energy_ratio\n";
    for (const AprioriRow& r : t.rows)
        row(os, {r.eps, r.bdry_over_sqrt_eps, r.fluct_over_eps, r.mean, r.deriv, r.linf, r.energy_lhs, r.energy_rhs,
                 r.energy_ratio});
    return os.str();
}

std::string plot_data(const ConvergenceReport& report, const std::string& quantity)
{
    const auto m = member_of(quantity);
    std::ostringstream os;
    os << "# log(eps) log(" << quantity << ")\n";
    for (const StudyRow& r : report.rows) {
        const double v = r.*m;
        if (v > 0.0) os << format_double(std::log(r.eps)) << ' ' << format_double(std::log(v)) << '\n';
    }
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace difflim
