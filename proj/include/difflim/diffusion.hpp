#pragma once

#include <variant>

#include <Eigen/Dense>

#include "difflim/problem.hpp"
#include "difflim/scattering.hpp"

namespace difflim {

/// A11(x) = a11 / sigma(x); the closed form for isotropic scattering is a11 = 1/3.
struct UnitTensorCoefficient {
    double a11 = 1.0 / 3.0;
};

/// Either an explicit per-cell tensor or a unit tensor scaled by 1/sigma.
using DiffusionCoefficient = std::variant<DiffusionTensor, UnitTensorCoefficient>;

/**
 * Limit solution on the vertex grid x_i = i h (the edges of the transport cells).
 * Fluxes and gradients live on the cells, i.e. on the faces of the dual control
 * volumes, so each is single valued.
 */
struct DiffusionSolution {
    Grid1D grid{1.0, 1};
    Eigen::VectorXd x;                 ///< nodes, n_cells + 1
    Eigen::VectorXd u0;                ///< nodal values; zero at both ends
    Eigen::VectorXd cell_coefficient;  ///< effective A11 per cell
    Eigen::VectorXd gradient;          ///< du0/dx per cell
    Eigen::VectorXd flux;              ///< -A11 du0/dx per cell

    /// Linear interpolation of the nodal values to cell centers.
    Eigen::VectorXd at_cell_centers() const;
};

/// Effective A11 per cell. The unit form uses the harmonic mean of a11/sigma over the cell,
/// which is exact for sigma piecewise constant inside the cell.
Eigen::VectorXd cell_diffusion_coefficients(const ProblemSpec& problem, const DiffusionCoefficient& coefficient);

/// Conservative scheme for -(A11 u')' + gamma u = f, u = 0 at both ends.
DiffusionSolution solve_diffusion(const ProblemSpec& problem, const DiffusionCoefficient& coefficient);

/// (A u', phi_i') + (gamma u, phi_i) - (f, phi_i) for the interior hat functions phi_i, with the
/// quadrature of the scheme (cell coefficients, lumped reaction and source).
Eigen::VectorXd weak_residual(const Eigen::VectorXd& nodal, const ProblemSpec& problem,
                              const DiffusionCoefficient& coefficient);

/// Dense interior-node system matrix, for inspection on small grids.
Eigen::MatrixXd assemble_diffusion_matrix(const ProblemSpec& problem, const DiffusionCoefficient& coefficient);

}  // namespace difflim
