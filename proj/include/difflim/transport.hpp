#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "difflim/problem.hpp"
#include "difflim/quadrature.hpp"
#include "difflim/scattering.hpp"

namespace difflim {

enum class Scheme { diamond_difference, upwind };
enum class Acceleration { dsa, none };

std::string to_string(Scheme s);
std::string to_string(Acceleration a);

struct SolverOptions {
    Scheme scheme = Scheme::diamond_difference;
    double tolerance = 1e-10;  ///< bound on the relative l2 change of the velocity average and on the balance defect
    int max_iterations = 10000;
    Acceleration acceleration = Acceleration::dsa;

    void validate() const;
};

/// Everything one discrete-ordinates solve needs, already evaluated on the grid.
struct TransportSetup {
    Grid1D grid{1.0, 1};
    AngularQuadrature quad = AngularQuadrature::gauss(2);
    ScatteringOperator K = assemble_scattering(IsotropicKernel{}, AngularQuadrature::gauss(2));
    Eigen::VectorXd sigma_a;  ///< absorption per cell
    Eigen::VectorXd sigma_s;  ///< scattering per cell
    Eigen::MatrixXd source;   ///< cells x ordinates
    BoundaryData inflow;
    double diffusion_unit = 1.0 / 3.0;  ///< axial coefficient of K at unit sigma, used by DSA

    Eigen::VectorXd sigma_total() const { return sigma_a + sigma_s; }
};

/// Builds the eps-scaled setup with an isotropic source; certifies K on the slab quadrature.
TransportSetup make_transport_setup(const ProblemSpec& problem, double eps, const AngularQuadrature& quad);

/// Replaces the setup's source with the one manufacturing mcase under the eps-scaled coefficients.
void use_manufactured_source(TransportSetup& setup, const ProblemSpec& problem, const ManufacturedCase& mcase,
                             double eps);

struct SweepResult {
    Eigen::MatrixXd cell;  ///< cells x ordinates
    Eigen::MatrixXd edge;  ///< (cells + 1) x ordinates
};

/// Inverts mu d/dx + sigma_total per ordinate for a given emission density.
SweepResult sweep(const Grid1D& grid, const AngularQuadrature& quad, const Eigen::VectorXd& sigma_total,
                  const Eigen::MatrixXd& emission, const BoundaryData& inflow, Scheme scheme);

struct IterationLog {
    std::vector<double> residuals;
    double spectral_radius_estimate = 0.0;
    int iterations = 0;
};

struct TransportSolution {
    Grid1D grid{1.0, 1};
    AngularQuadrature quad = AngularQuadrature::gauss(2);
    Eigen::MatrixXd u;      ///< cell averages, cells x ordinates
    Eigen::MatrixXd edges;  ///< (cells + 1) x ordinates
    Eigen::VectorXd ubar;   ///< u * w
    IterationLog log;
    Scheme scheme = Scheme::diamond_difference;
};

/// Source iteration u <- sweep(sigma_s K u + f), optionally with diffusion synthetic acceleration.
/// Throws ConvergenceError with the residual history after max_iterations.
TransportSolution solve_transport(const TransportSetup& setup, const SolverOptions& options);
TransportSolution solve_transport(const ProblemSpec& problem, double eps, const AngularQuadrature& quad,
                                  const SolverOptions& options);

/// mu_j (u_right - u_left) / h per cell and ordinate.
Eigen::MatrixXd directional_derivative(const TransportSolution& solution);

struct BoundaryTrace {
    Eigen::VectorXd values;   ///< per ordinate: x = L for mu > 0, x = 0 for mu < 0
    Eigen::VectorXd weights;  ///< |mu_j| w_j
    double norm() const;      ///< L2(Gamma_+; |mu|)
};

BoundaryTrace outflow_trace(const TransportSolution& solution);

struct ParticleBalance {
    double outflow = 0.0;
    double inflow = 0.0;
    double absorption = 0.0;
    double source = 0.0;
    double residual = 0.0;  ///< outflow - inflow + absorption - source
    double relative = 0.0;  ///< |residual| over the largest term
};

ParticleBalance particle_balance(const TransportSetup& setup, const TransportSolution& solution);

/// Relative change of the velocity average under one further unaccelerated sweep.
double fixed_point_residual(const TransportSetup& setup, const TransportSolution& solution);

}  // namespace difflim
