#include <doctest.h>

#include <cmath>
#include <vector>

#include "difflim/analysis.hpp"
#include "difflim/scattering.hpp"
#include "support.hpp"

using namespace difflim;

namespace {

Eigen::VectorXd zero_mean(test::Gen& gen, const Eigen::VectorXd& w)
{
    Eigen::VectorXd f = gen.vector(w.size());
    return f.array() - w.dot(f);
}

}  // namespace

TEST_CASE("pseudoinverse: residual and c_K bound on random zero-mean data")
{
    test::Gen gen(11);
    for (double g : {0.0, 0.5, 0.9}) {
        const ScatteringOperator K = assemble_scattering(LinearKernel{g}, build_angular_quadrature(16));
        const CertReport r = certify_assumptions(K);
        REQUIRE(r.c_K.has_value());
        const Eigen::VectorXd& w = K.weights();
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd f = zero_mean(gen, w);
            const Eigen::VectorXd u = pinv_apply(K, f);
            CHECK(std::abs(w.dot(u)) < 1e-13);
            CHECK((u - apply_K(K, u) - f).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(test::wnorm(u, w) <= *r.c_K * test::wnorm(f, w) * (1 + 1e-12));
        }
    }
}

TEST_CASE("spectrum of I - K lies in [0, 1] for analytic kernels")
{
    test::Gen gen(12);
    for (int trial = 0; trial < 20; ++trial) {
        const double g = gen.uniform(0.0, 1.0);
        const int n = 2 * gen.integer(1, 12);
        const ScatteringOperator K = assemble_scattering(LinearKernel{g}, build_angular_quadrature(n));
        CHECK(K.eigenvalues().minCoeff() >= -1e-12);
        CHECK(K.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
        CHECK(K.self_adjointness_defect() < 1e-14);
    }
}

TEST_CASE("mean and fluctuation are orthogonal")
{
    test::Gen gen(13);
    const AngularQuadrature q = build_angular_quadrature(8);
    for (int trial = 0; trial < 50; ++trial) {
        const int cells = gen.integer(1, 20);
        const double h = gen.uniform(0.01, 0.5);
        const Eigen::MatrixXd u = gen.matrix(cells, 8, -5.0, 5.0);
        const VelocitySplit s = split_velocity(u, q.weights());
        const double total = std::pow(l2_norm(u, q.weights(), h), 2);
        const double parts = std::pow(l2_norm(s.mean, h), 2) + std::pow(l2_norm(s.fluctuation, q.weights(), h), 2);
        CHECK(std::abs(total - parts) <= 1e-12 * total);
        double cross = 0.0;
        for (int i = 0; i < cells; ++i) cross += h * s.mean[i] * q.weights().dot(s.fluctuation.row(i).transpose());
        CHECK(std::abs(cross) <= 1e-12 * total);
    }
}

TEST_CASE("C_eps norm equivalence windows")
{
    test::Gen gen(14);
    const AngularQuadrature q = build_angular_quadrature(8);
    const ScatteringOperator iso = assemble_scattering(IsotropicKernel{}, q);
    const ScatteringOperator lin = assemble_scattering(LinearKernel{0.5}, q);
    const double cK = *certify_assumptions(lin).c_K;
    for (int trial = 0; trial < 200; ++trial) {
        const int cells = gen.integer(1, 12);
        const double eps = std::exp(gen.uniform(std::log(1e-3), 0.0));
        const std::vector<double> sigma = gen.values(static_cast<std::size_t>(cells), 0.5, 2.0);
        const std::vector<double> gamma = gen.values(static_cast<std::size_t>(cells), 0.5, 2.0);
        const Eigen::MatrixXd u = gen.matrix(cells, 8);
        const NormSet a = norms(u, eps, sigma, gamma, iso, 0.1);
        const double r1 = a.ceps * a.ceps / a.equiv1_proxy;
        CHECK(r1 >= 0.5 * (1 - 1e-12));
        CHECK(r1 <= 4.0 * (1 + 1e-12));
        const double r2 = a.ceps_inv * a.ceps_inv / a.equiv2_proxy;
        CHECK(r2 >= 0.25 * (1 - 1e-12));
        CHECK(r2 <= 2.0 * (1 + 1e-12));

        const NormSet b = norms(u, eps, sigma, gamma, lin, 0.1);
        const double s2 = b.ceps_inv * b.ceps_inv / b.equiv2_proxy;
        CHECK(s2 >= 0.25 * (1 - 1e-12));
        CHECK(s2 <= 2.0 * cK * (1 + 1e-12));
    }
}

TEST_CASE("diffusion tensor eigenvalues lie in [1/(3 sigma), c_K/(3 sigma)]")
{
    test::Gen gen(15);
    const SphereQuadrature sq = build_sphere_quadrature(8, 16);
    for (double g : {0.0, 0.5, 0.9}) {
        const ScatteringOperator K = assemble_scattering(LinearKernel{g}, sq);
        const double cK = *certify_assumptions(K).c_K;
        const std::vector<double> sigma = gen.values(10, 0.5, 5.0);
        const DiffusionTensor t = diffusion_tensor(K, sigma);
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.cells[i]);
            CHECK(es.eigenvalues().minCoeff() >= (1 - 1e-10) / (3 * sigma[i]));
            CHECK(es.eigenvalues().maxCoeff() <= (1 + 1e-10) * cK / (3 * sigma[i]));
        }
    }
}

TEST_CASE("recorded coefficient bounds hold under dense sampling")
{
    test::Gen gen(16);
    for (int trial = 0; trial < 30; ++trial) {
        const double L = gen.uniform(0.5, 3.0);
        const CoefficientField f = trial % 2 ? gen.piecewise(L, 0.5, 4.0)
                                             : CoefficientField::sine(gen.uniform(1.0, 2.0), gen.uniform(0.0, 0.9), L);
        const Grid1D fine(L, 640);
        for (double v : f.sample(fine)) {
            CHECK(v >= f.lower_bound() - 1e-12);
            CHECK(v <= f.upper_bound() + 1e-12);
        }
    }
}

TEST_CASE("scaling is multiplicative in eps")
{
    test::Gen gen(17);
    ProblemSpec p = test::unit_problem(8);
    p.sigma = gen.piecewise(1.0, 0.5, 2.0);
    p.gamma = gen.piecewise(1.0, 0.5, 2.0);
    p.source = gen.piecewise(1.0, 0.0, 2.0);
    p.boundary = {0.3, 0.7};
    for (int trial = 0; trial < 20; ++trial) {
        const double eps = gen.uniform(1e-3, 1.0);
        const double x = gen.uniform(0.0, 1.0);
        const ScaledCoefficients c = scale(p, eps);
        CHECK(c.sigma(x) * eps == doctest::Approx(p.sigma(x)).epsilon(1e-14));
        CHECK(c.gamma(x) == doctest::Approx(eps * p.gamma(x)).epsilon(1e-14));
        CHECK(c.source(x) == doctest::Approx(eps * p.source(x)).epsilon(1e-14));
        CHECK(c.boundary.right == doctest::Approx(eps * 0.7).epsilon(1e-14));
    }
}

TEST_CASE("transport solutions superpose")
{
    test::Gen gen(18);
    const AngularQuadrature q = build_angular_quadrature(8);
    SolverOptions o;
    o.tolerance = 1e-13;
    for (int trial = 0; trial < 4; ++trial) {
        ProblemSpec p = test::unit_problem(24);
        p.sigma = gen.piecewise(1.0, 0.5, 2.0);
        const double eps = gen.uniform(0.05, 1.0);
        ProblemSpec a = p, b = p, ab = p;
        a.source = gen.piecewise(1.0, 0.0, 1.0);
        a.boundary = {gen.uniform(0, 1), gen.uniform(0, 1)};
        b.source = gen.piecewise(1.0, 0.0, 1.0);
        b.boundary = {gen.uniform(0, 1), gen.uniform(0, 1)};
        const double s = gen.uniform(-2.0, 2.0);
        TransportSetup sa = make_transport_setup(a, eps, q), sb = make_transport_setup(b, eps, q),
                       sab = make_transport_setup(ab, eps, q);
        sab.source = sa.source + s * sb.source;
        sab.inflow = {sa.inflow.left + s * sb.inflow.left, sa.inflow.right + s * sb.inflow.right};
        const Eigen::MatrixXd ua = solve_transport(sa, o).u, ub = solve_transport(sb, o).u;
        const Eigen::MatrixXd uab = solve_transport(sab, o).u;
        const double scale_ = std::max(ua.cwiseAbs().maxCoeff(), ub.cwiseAbs().maxCoeff());
        CHECK((uab - ua - s * ub).cwiseAbs().maxCoeff() < 1e-9 * scale_);
    }
}

TEST_CASE("transport: nonnegative data give nonnegative velocity averages")
{
    test::Gen gen(19);
    const AngularQuadrature q = build_angular_quadrature(8);
    for (int trial = 0; trial < 6; ++trial) {
        ProblemSpec p = test::unit_problem(64);
        p.sigma = gen.piecewise(1.0, 0.5, 2.0);
        p.source = gen.piecewise(1.0, 0.0, 2.0);
        p.boundary = {gen.uniform(0, 1), gen.uniform(0, 1)};
        const TransportSolution s = solve_transport(p, gen.uniform(0.05, 1.0), q, SolverOptions{});
        CHECK(s.ubar.minCoeff() >= -1e-12);
    }
}
