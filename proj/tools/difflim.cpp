// difflim: transport solves, diffusion limits and eps-sweep studies from one config file.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "difflim/analysis.hpp"
#include "difflim/config.hpp"
#include "difflim/diffusion.hpp"
#include "difflim/errors.hpp"
#include "difflim/report.hpp"
#include "difflim/scattering.hpp"
#include "difflim/transport.hpp"

#ifndef DIFFLIM_VERSION
#define DIFFLIM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace difflim;

namespace {

enum Exit { ok = 0, failure = 1, invalid = 2, diverged = 3, uncertified = 4 };

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<double> eps;
    std::string mode = "transport";
    int jobs = 1;
};

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 14695981039346656037ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Collects written files so the manifest lists every output, including partial ones.
class Run {
public:
    Run(std::string command, const Options& o, int argc, char** argv)
        : command_(std::move(command)), opts_(o), started_(utc_now())
    {
        for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
    }

    void write(const std::string& name, const std::string& content)
    {
        write_file(fs::path(opts_.out) / name, content);
        outputs_.push_back(name);
    }

    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    void manifest(int exit_code)
    {
        nlohmann::json m;
        m["command"] = command_;
        m["argv"] = argv_;
        m["config"] = opts_.config;
        m["config_hash"] = "fnv1a64:" + fnv1a_file(opts_.config);
        m["version"] = DIFFLIM_VERSION;
        m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION);
        m["started"] = started_;
        m["finished"] = utc_now();
        m["exit_code"] = exit_code;
        m["outputs"] = outputs_;
        write_file(fs::path(opts_.out) / "manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    Options opts_;
    std::string started_;
    std::vector<std::string> argv_;
    std::vector<std::string> outputs_;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_certify(const RunConfig& cfg, Run& run)
{
    const ScatteringOperator slab = assemble_scattering(cfg.problem.kernel, build_angular_quadrature(cfg.ordinates));
    const CertReport rs = certify_assumptions(slab);
    nlohmann::json j = to_json(rs);
    j["quadrature"] = {{"kind", "slab"}, {"ordinates", cfg.ordinates}};
    j["kernel"] = kernel_name(cfg.problem.kernel);
    j["warnings"] = slab.warnings();
    bool passed = rs.passed();

    std::cout << "kernel " << kernel_name(cfg.problem.kernel) << "\n";
    auto summary = [](const std::string& label, const CertReport& r) {
        std::cout << label << ": " << (r.passed() ? "PASS" : "FAIL") << "  null space dim " << r.null_space_dim
                  << "  c_K " << (r.c_K ? fmt(*r.c_K) : std::string("n/a")) << "  spectrum ["
                  << fmt(r.eigenvalues.minCoeff()) << ", " << fmt(r.eigenvalues.maxCoeff()) << "]\n";
        for (const auto& d : r.diagnostics) std::cout << "  " << d << "\n";
    };
    summary("slab (" + std::to_string(cfg.ordinates) + " ordinates)", rs);

    if (!std::holds_alternative<TabulatedKernel>(cfg.problem.kernel)) {
        const ScatteringOperator sphere =
            assemble_scattering(cfg.problem.kernel, build_sphere_quadrature(cfg.sphere_polar, cfg.sphere_azimuth));
        const CertReport rp = certify_assumptions(sphere);
        nlohmann::json sj = to_json(rp);
        sj["quadrature"] = {{"kind", "sphere"}, {"polar", cfg.sphere_polar}, {"azimuth", cfg.sphere_azimuth}};
        j["sphere"] = sj;
        passed = passed && rp.passed();
        summary("sphere (" + std::to_string(cfg.sphere_polar) + "x" + std::to_string(cfg.sphere_azimuth) + ")", rp);
    }
    j["passed"] = passed;
    run.write_json("certify.json", j);
    return passed ? ok : uncertified;
}

int cmd_tensor(const RunConfig& cfg, Run& run)
{
    if (std::holds_alternative<TabulatedKernel>(cfg.problem.kernel))
        throw ValidationError("tensor needs an analytic kernel; tabulated kernels live on the slab quadrature only");
    const ScatteringOperator K =
        assemble_scattering(cfg.problem.kernel, build_sphere_quadrature(cfg.sphere_polar, cfg.sphere_azimuth));
    const std::vector<double> sigma = cfg.problem.sigma.sample(cfg.problem.grid);
    const DiffusionTensor A = diffusion_tensor(K, sigma);
    run.write("tensor.csv", tensor_csv(A, cfg.problem.grid));
    const Eigen::Matrix3d& first = A.cells.front();
    std::cout << "cells " << A.cells.size() << "  coercivity lower bound " << fmt(A.coercivity_lb) << "\n"
              << "first cell diag (" << fmt(first(0, 0)) << ", " << fmt(first(1, 1)) << ", " << fmt(first(2, 2))
              << ")\n";
    return ok;
}

void print_norms(const NormSet& n)
{
    std::cout << "norms: l2 " << fmt(n.l2) << "  bdry+ " << (n.bdry_plus ? fmt(*n.bdry_plus) : "n/a") << "  C_eps "
              << fmt(n.ceps) << "  C_eps^-1 " << fmt(n.ceps_inv) << "  equiv1 " << fmt(n.equiv1_proxy) << "  equiv2 "
              << fmt(n.equiv2_proxy);
    for (const auto& [p, v] : n.lp) std::cout << "  l" << fmt(p) << " " << fmt(v);
    std::cout << "\n";
}

void print_refinement(const std::vector<RefinementRow>& rows)
{
    std::cout << "  cells        error_l2       error_max   order_l2  order_max\n";
    for (const RefinementRow& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %5d  %14.6e  %14.6e  %9.4f  %9.4f\n", r.n_cells, r.error_l2, r.error_max,
                      r.order_l2, r.order_max);
        std::cout << buf;
    }
}

int cmd_solve(const RunConfig& cfg, const Options& opts, Run& run)
{
    const double eps = opts.eps.value_or(cfg.eps);
    if (!(eps > 0.0)) throw ValidationError("--eps must be positive");
    const std::optional<ManufacturedCase> mcase = manufactured_case_of(cfg);

    if (opts.mode == "diffusion") {
        if (mcase && mcase->kind == ManufacturedCase::Kind::transport)
            throw ValidationError("manufactured case '" + mcase->name + "' is a transport solution");
        StudyOptions sizes;
        sizes.ordinates = cfg.ordinates;
        sizes.sphere_polar = cfg.sphere_polar;
        sizes.sphere_azimuth = cfg.sphere_azimuth;
        const double a11 = limit_unit_coefficient(cfg.problem.kernel, sizes);
        const DiffusionSolution sol = solve_diffusion(cfg.problem, UnitTensorCoefficient{a11});
        run.write("diffusion.csv", diffusion_csv(sol));
        run.write("diffusion_nodes.csv", diffusion_nodes_csv(sol));
        std::cout << "diffusion limit: " << cfg.problem.grid.n_cells() << " cells, A11 = " << fmt(a11)
                  << "/sigma, max u0 " << fmt(sol.u0.maxCoeff()) << "\n";
        if (mcase) {
            double max_err = 0.0;
            for (Eigen::Index i = 0; i < sol.x.size(); ++i)
                max_err = std::max(max_err, std::abs(sol.u0[i] - mcase->ubar(sol.x[i])));
            std::cout << "max nodal error vs " << mcase->name << ": " << fmt(max_err) << "\n";
            const auto rows = diffusion_refinement(cfg.problem, *mcase, a11, 4);
            run.write("mms_errors.csv", refinement_csv(rows));
            print_refinement(rows);
        }
        return ok;
    }
    if (opts.mode != "transport") throw ArgumentError("--mode must be transport or diffusion");

    const AngularQuadrature quad = build_angular_quadrature(cfg.ordinates);
    TransportSetup setup = make_transport_setup(cfg.problem, eps, quad);
    const bool angular_mms = mcase && mcase->kind == ManufacturedCase::Kind::transport;
    if (angular_mms) use_manufactured_source(setup, cfg.problem, *mcase, eps);
    TransportSolution sol;
    try {
        sol = solve_transport(setup, cfg.solver);
    } catch (const ConvergenceError& e) {
        IterationLog log;
        log.residuals = e.residuals();
        log.iterations = static_cast<int>(log.residuals.size());
        run.write_json("iteration_log.json", to_json(log));
        throw;
    }
    run.write("solution.csv", transport_csv(sol));
    run.write("average.csv", average_csv(sol));
    run.write_json("iteration_log.json", to_json(sol.log));
    const std::vector<double> p_values{1.0, 4.0};
    const NormSet n = solution_norms(cfg.problem, eps, sol, setup.K, p_values);
    run.write_json("norms.json", to_json(n));
    const ParticleBalance b = particle_balance(setup, sol);
    std::cout << "transport: eps " << fmt(eps) << ", " << cfg.problem.grid.n_cells() << " cells, " << quad.size()
              << " ordinates, " << to_string(cfg.solver.scheme) << ", " << to_string(cfg.solver.acceleration) << "\n"
              << "iterations " << sol.log.iterations << "  spectral radius estimate "
              << fmt(sol.log.spectral_radius_estimate) << "  balance residual " << fmt(b.relative) << "\n";
    print_norms(n);
    if (angular_mms) {
        const auto rows = transport_refinement(cfg.problem, *mcase, eps, cfg.ordinates, cfg.solver, 4);
        run.write("mms_errors.csv", refinement_csv(rows));
        std::cout << "error table vs " << mcase->name << ":\n";
        print_refinement(rows);
    }
    return ok;
}

void write_study(const ConvergenceReport& report, Run& run)
{
    run.write("report.csv", report_csv(report));
    run.write("study_details.csv", study_details_csv(report));
    run.write_json("slopes.json", slopes_json(report));
    if (!report.apriori.rows.empty()) run.write("apriori.csv", apriori_csv(report.apriori));
    for (const std::string& q : report_quantities())
        if (report.slopes.count(q)) run.write("plot_" + q + ".dat", plot_data(report, q));
}

void print_study(const ConvergenceReport& report)
{
    std::cout << "        eps  cells   err_total   err_fluct        bdry       deriv   remainder      err_l4  its\n";
    for (const StudyRow& r : report.rows) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "  %9.3e  %5d  %10.4e  %10.4e  %10.4e  %10.4e  %10.4e  %10.4e  %3d\n", r.eps,
                      r.n_cells, r.err_total, r.err_fluct, r.bdry, r.deriv, r.remainder, r.err_l4, r.iterations);
        std::cout << buf;
    }
    for (const auto& [name, fit] : report.slopes) {
        std::cout << "slope " << name << " = " << fmt(fit.slope) << " +- " << fmt(fit.stderr_slope);
        const auto it = report.predicted.find(name);
        if (it != report.predicted.end()) std::cout << "  (analysis: " << fmt(it->second) << ")";
        std::cout << "\n";
    }
    std::cout << report.regime << "\n";
    if (!report.apriori.bounded()) {
        std::cout << "a-priori ratios growing by more than 2x:";
        for (const auto& f : report.apriori.flags) std::cout << " " << f;
        std::cout << "\n";
    }
}

int cmd_study(const RunConfig& cfg, const Options& opts, Run& run)
{
    if (!cfg.study) throw ValidationError("config has no [study] section");
    StudyOptions o = *cfg.study;
    o.jobs = opts.jobs;
    try {
        o.validate();
    } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
    }
    try {
        const ConvergenceReport report = convergence_study(cfg.problem, o);
        write_study(report, run);
        print_study(report);
    } catch (const StudyError& e) {
        write_study(e.partial(), run);
        print_study(e.partial());
        throw;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Diffusion limits of slab transport: certification, solves and eps studies"};
    app.set_version_flag("--version", DIFFLIM_VERSION);
    app.require_subcommand(1);
    Options opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Configuration file")->required();
        sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    };
    CLI::App* certify = app.add_subcommand("certify", "Check the scattering assumptions on the configured kernel");
    add_common(certify);
    CLI::App* tensor = app.add_subcommand("tensor", "Per-cell diffusion tensor");
    add_common(tensor);
    CLI::App* solve = app.add_subcommand("solve", "Transport or diffusion-limit solve");
    add_common(solve);
    solve->add_option("--eps", opts.eps, "Scaling parameter (overrides the config)");
    solve->add_option("--mode", opts.mode, "transport or diffusion")
        ->check(CLI::IsMember({"transport", "diffusion"}))
        ->capture_default_str();
    CLI::App* study = app.add_subcommand("study", "Convergence study over the configured eps list");
    add_common(study);
    study->add_option("--jobs", opts.jobs, "Parallel solves")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return invalid;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    if (!fs::exists(opts.config)) {
        std::cerr << "error: config file '" << opts.config << "' not found\n\n" << sub->help();
        return invalid;
    }

    Run run(command, opts, argc, argv);
    int code = failure;
    try {
        const RunConfig cfg = load_config(opts.config);
        if (command == "certify") code = cmd_certify(cfg, run);
        else if (command == "tensor") code = cmd_tensor(cfg, run);
        else if (command == "solve") code = cmd_solve(cfg, opts, run);
        else code = cmd_study(cfg, opts, run);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = invalid;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        code = invalid;
    } catch (const StudyError& e) {
        std::cerr << "convergence failure: " << e.what() << " (" << e.partial().rows.size()
                  << " eps values completed)\n";
        code = diverged;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        code = diverged;
    } catch (const CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << "\n";
        code = uncertified;
    } catch (const SolvabilityError& e) {
        std::cerr << "solvability failure: " << e.what() << "\n";
        code = uncertified;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = failure;
    }
    try {
        run.manifest(code);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << "\n";
        if (code == ok) code = failure;
    }
    return code;
}
