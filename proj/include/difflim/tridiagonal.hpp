#pragma once

#include <Eigen/Dense>

namespace difflim {

/// Thomas algorithm: lower(i) couples row i to i-1, upper(i) to i+1. No pivoting;
/// intended for the diagonally dominant M-matrices assembled here.
Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& lower, const Eigen::VectorXd& diag,
                                  const Eigen::VectorXd& upper, const Eigen::VectorXd& rhs);

}  // namespace difflim
