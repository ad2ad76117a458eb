#include "difflim/tridiagonal.hpp"

#include "difflim/errors.hpp"

namespace difflim {

Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& lower, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& upper, const Eigen::VectorXd& rhs)
{
    const Eigen::Index n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw ArgumentError("solve_tridiagonal: size mismatch");
    if (n == 0) return {};
    Eigen::VectorXd c(n), d(n);
    double denom = diag[0];
    if (denom == 0.0) throw ArgumentError("solve_tridiagonal: zero pivot");
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * c[i - 1];
        if (denom == 0.0) throw ArgumentError("solve_tridiagonal: zero pivot");
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    Eigen::VectorXd x(n);
    x[n - 1] = d[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

}  // namespace difflim
