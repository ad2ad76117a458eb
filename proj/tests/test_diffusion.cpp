#include <doctest.h>

#include <cmath>
#include <numbers>

#include "difflim/analysis.hpp"
#include "difflim/diffusion.hpp"
#include "difflim/errors.hpp"
#include "support.hpp"

using namespace difflim;

namespace {

double cosh_max_error(int cells)
{
    const ProblemSpec p = test::unit_problem(cells);
    const DiffusionSolution s = solve_diffusion(p, UnitTensorCoefficient{});
    const ManufacturedCase c = cosh_diffusion_case(std::sqrt(3.0));
    double e = 0.0;
    for (int i = 0; i <= cells; ++i) e = std::max(e, std::abs(s.u0[i] - c.ubar(s.x[i])));
    return e;
}

}  // namespace

TEST_CASE("constant coefficients reproduce the cosh profile")
{
    // -(1/3) u'' + u = 1, u(0) = u(1) = 0
    const double e128 = cosh_max_error(128);
    const double e256 = cosh_max_error(256);
    CHECK(e256 < 1e-4);
    CHECK(test::order(e128, e256) >= 1.9);
}

TEST_CASE("zero data gives the zero solution")
{
    ProblemSpec p = test::unit_problem(32);
    p.source = CoefficientField::constant(0.0);
    const DiffusionSolution s = solve_diffusion(p, UnitTensorCoefficient{});
    CHECK(s.u0.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.flux.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sine manufactured solution converges at second order")
{
    ProblemSpec p = test::unit_problem(16);
    p.sigma = CoefficientField::sine(1.0, 0.5, 1.0);
    const ManufacturedCase c = sine_diffusion_case(1.0);
    p.source = mms_diffusion_source(c, p.sigma, p.gamma, 1.0 / 3.0, 1.0);
    const auto rows = diffusion_refinement(p, c, 1.0 / 3.0, 4);
    REQUIRE(rows.size() == 4);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].order_max >= 1.9);
}

TEST_CASE("weak residual")
{
    ProblemSpec p = test::unit_problem(40);
    p.sigma = CoefficientField::piecewise({0.5}, {1.0, 4.0});
    const DiffusionCoefficient a = UnitTensorCoefficient{};
    const DiffusionSolution s = solve_diffusion(p, a);
    CHECK(weak_residual(s.u0, p, a).cwiseAbs().maxCoeff() <= 1e-12);

    // affine in the nodal values: r(u + t d) = r(u) + t (r(d) + f-part)
    test::Gen gen(77);
    Eigen::VectorXd d = gen.vector(41);
    d[0] = d[40] = 0.0;
    const Eigen::VectorXd r0 = weak_residual(Eigen::VectorXd::Zero(41), p, a);
    const Eigen::VectorXd rd = weak_residual(d, p, a) - r0;
    for (double t : {0.5, -2.0, 3.0}) {
        const Eigen::VectorXd rt = weak_residual(s.u0 + t * d, p, a);
        CHECK((rt - t * rd).cwiseAbs().maxCoeff() < 1e-11);
    }

    // interpolant of the exact cosh solution: O(h^2) residual per unit test function
    double prev = 0.0;
    const ManufacturedCase c = cosh_diffusion_case(std::sqrt(3.0));
    for (int cells : {32, 64, 128}) {
        const ProblemSpec q = test::unit_problem(cells);
        Eigen::VectorXd u(cells + 1);
        for (int i = 0; i <= cells; ++i) u[i] = c.ubar(q.grid.edge(i));
        const double r = weak_residual(u, q, a).cwiseAbs().maxCoeff() / q.grid.h();
        if (prev > 0.0) CHECK(test::order(prev, r) > 1.9);
        prev = r;
    }
    CHECK_THROWS_AS(weak_residual(Eigen::VectorXd::Zero(5), p, a), ArgumentError);
}

TEST_CASE("flux is continuous across a material interface")
{
    ProblemSpec p = test::unit_problem(64);
    p.sigma = CoefficientField::piecewise({0.5}, {1.0, 10.0});
    p.gamma = CoefficientField::constant(0.5);
    const DiffusionSolution s = solve_diffusion(p, UnitTensorCoefficient{});
    const double h = p.grid.h();
    // node balance at every interior node, including the interface node x = 0.5
    for (int i = 1; i < 64; ++i) {
        const double x = p.grid.edge(i);
        const double balance = s.flux[i] - s.flux[i - 1] + h * p.gamma.mean(x - h / 2, x + h / 2) * s.u0[i] -
                               h * p.source.mean(x - h / 2, x + h / 2);
        CHECK(std::abs(balance) < 1e-12);
    }
    CHECK(s.cell_coefficient[0] == doctest::Approx(1.0 / 3.0));
    CHECK(s.cell_coefficient[63] == doctest::Approx(1.0 / 30.0));
}

TEST_CASE("harmonic cell coefficient on a straddling cell")
{
    ProblemSpec p = test::unit_problem(3);
    p.sigma = CoefficientField::piecewise({0.5}, {1.0, 3.0});
    const Eigen::VectorXd a = cell_diffusion_coefficients(p, UnitTensorCoefficient{});
    CHECK(a[1] == doctest::Approx((1.0 / 3.0) / 2.0));
    CHECK_THROWS_AS(cell_diffusion_coefficients(p, UnitTensorCoefficient{0.0}), ValidationError);
}

TEST_CASE("system matrix is symmetric positive definite")
{
    test::Gen gen(99);
    for (int trial = 0; trial < 5; ++trial) {
        ProblemSpec p = test::unit_problem(gen.integer(3, 30));
        p.sigma = gen.piecewise(1.0, 0.5, 5.0);
        p.gamma = gen.piecewise(1.0, 0.1, 2.0);
        const Eigen::MatrixXd A = assemble_diffusion_matrix(p, UnitTensorCoefficient{});
        CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("non-coercive tensors are rejected")
{
    const ProblemSpec p = test::unit_problem(4);
    DiffusionTensor t;
    t.cells.assign(4, Eigen::Matrix3d::Identity() / 3.0);
    t.coercivity_lb = 0.0;
    CHECK_THROWS_AS(solve_diffusion(p, t), ValidationError);
    t.coercivity_lb = 1.0 / 3.0;
    CHECK_NOTHROW(solve_diffusion(p, t));
    t.cells.pop_back();
    CHECK_THROWS_AS(solve_diffusion(p, t), ArgumentError);
}

TEST_CASE("maximum principle: nonnegative data give nonnegative solutions")
{
    test::Gen gen(2025);
    for (int trial = 0; trial < 20; ++trial) {
        ProblemSpec p = test::unit_problem(gen.integer(2, 80), gen.uniform(0.5, 3.0));
        p.sigma = gen.piecewise(p.grid.length(), 0.5, 5.0);
        p.gamma = gen.piecewise(p.grid.length(), 0.1, 2.0);
        p.source = gen.piecewise(p.grid.length(), 0.0, 3.0);
        const DiffusionSolution s = solve_diffusion(p, UnitTensorCoefficient{});
        CHECK(s.u0.minCoeff() >= 0.0);
        // comparison with the constant supersolution f_max / gamma_min
        CHECK(s.u0.maxCoeff() <= p.source.upper_bound() / p.gamma.lower_bound() + 1e-12);
    }
}
