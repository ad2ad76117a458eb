#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "difflim/problem.hpp"
#include "difflim/transport.hpp"

namespace difflim::test {

// Seeded generators for property tests; every caller passes its own seed.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

    Eigen::VectorXd vector(Eigen::Index n, double a = -1.0, double b = 1.0)
    {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(a, b);
        return v;
    }

    Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c, double a = -1.0, double b = 1.0)
    {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(a, b);
        return m;
    }

    std::vector<double> values(std::size_t n, double a, double b)
    {
        std::vector<double> v(n);
        for (double& x : v) x = uniform(a, b);
        return v;
    }

    /// Piecewise-constant field on (0, length) with 1..4 pieces valued in [lo, hi].
    CoefficientField piecewise(double length, double lo, double hi)
    {
        const int pieces = integer(1, 4);
        std::vector<double> bp;
        for (int k = 1; k < pieces; ++k) bp.push_back(length * k / pieces + uniform(-0.1, 0.1) * length / pieces);
        return CoefficientField::piecewise(bp, values(static_cast<std::size_t>(pieces), lo, hi));
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Weighted l2 norm over a velocity quadrature.
inline double wnorm(const Eigen::VectorXd& v, const Eigen::VectorXd& w)
{
    return std::sqrt((w.array() * v.array().square()).sum());
}

inline double order(double coarse, double fine, double ratio = 2.0) { return std::log(coarse / fine) / std::log(ratio); }

/// Problem with constant sigma = gamma = f = 1 unless overridden.
inline ProblemSpec unit_problem(int cells, double length = 1.0)
{
    ProblemSpec p;
    p.grid = Grid1D(length, cells);
    return p;
}

}  // namespace difflim::test
