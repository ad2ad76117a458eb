#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "difflim/diffusion.hpp"
#include "difflim/problem.hpp"
#include "difflim/scattering.hpp"
#include "difflim/transport.hpp"

namespace difflim {

// ---------------------------------------------------------------------------
// Velocity averages and norms. Fields are stored cells x velocities; the
// L2(D) norm is the midpoint rule in x tensored with the quadrature in v.

Eigen::VectorXd velocity_average(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights);

/// u = ubar + (u - ubar); the two parts are orthogonal in L2(D).
struct VelocitySplit {
    Eigen::VectorXd mean;
    Eigen::MatrixXd fluctuation;
};

VelocitySplit split_velocity(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights);

double lp_norm(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights, double h, double p);
inline double l2_norm(const Eigen::MatrixXd& field, const Eigen::VectorXd& weights, double h)
{
    return lp_norm(field, weights, h, 2.0);
}
/// Norm of a velocity-independent field (the velocity measure has unit mass).
double l2_norm(const Eigen::VectorXd& field, double h);

struct NormSet {
    double l2 = 0.0;
    std::map<double, double> lp;
    std::optional<double> bdry_plus;
    double ceps = 0.0;          ///< ||u||_{C_eps}
    double ceps_inv = 0.0;      ///< ||u||_{C_eps^{-1}}, exact through the spectral decomposition of K
    double equiv1_proxy = 0.0;  ///< (1/eps)||u - ubar||^2 + eps ||ubar||^2 (squared norm proxy)
    double equiv2_proxy = 0.0;  ///< eps ||u - ubar||^2 + (1/eps) ||ubar||^2
};

/// sigma and gamma are the unscaled per-cell values; C_eps = eps gamma + (sigma/eps)(I - K).
NormSet norms(const Eigen::MatrixXd& field, double eps, std::span<const double> sigma,
              std::span<const double> gamma, const ScatteringOperator& K, double h,
              std::span<const double> p_values = {}, const BoundaryTrace* trace = nullptr);

/// Norms of a transport solution, with sigma and gamma sampled at cell centers.
NormSet solution_norms(const ProblemSpec& problem, double eps, const TransportSolution& solution,
                       const ScatteringOperator& K, std::span<const double> p_values = {});

// ---------------------------------------------------------------------------
// Asymptotic expansion u_eps = u0 + eps u1 + psi_eps.

/// u1 = -(1/sigma) (I-K)^+ (mu du0/dx) per cell, with the recovered cell gradients.
Eigen::MatrixXd corrector_u1(const DiffusionSolution& diffusion, std::span<const double> sigma,
                             const ScatteringOperator& K);

/// psi = u_eps - u0 - eps u1 with u0 given at cell centers.
Eigen::MatrixXd remainder(const Eigen::MatrixXd& u_eps, const Eigen::VectorXd& u0, const Eigen::MatrixXd& u1,
                          double eps);

/// Weak-form defect of velocity averages: sum_i r_i psi(x_i) for the hat-interpolated test
/// function psi = sin(pi x / L), where r is weak_residual of the averages at the nodes.
double weak_form_defect(const Eigen::VectorXd& ubar_cells, const ProblemSpec& problem,
                        const DiffusionCoefficient& coefficient);

// ---------------------------------------------------------------------------
// A-priori bound ratios.

struct AprioriInput {
    double eps = 0.0;
    double bdry = 0.0;        ///< ||u||_{L2(Gamma_+;|mu|)}
    double fluct = 0.0;       ///< ||u - ubar||
    double mean = 0.0;        ///< ||ubar||
    double deriv = 0.0;       ///< ||mu du/dx||
    double linf = 0.0;        ///< max |u|
    double data_inflow = 0.0; ///< ||g_eps||_{L2(Gamma_-;|mu|)}
    double data_mean = 0.0;   ///< ||fbar_eps||
    double data_fluct = 0.0;  ///< ||f_eps - fbar_eps||
};

struct AprioriRow {
    double eps = 0.0;
    double bdry_over_sqrt_eps = 0.0;
    double fluct_over_eps = 0.0;
    double mean = 0.0;
    double deriv = 0.0;
    double linf = 0.0;
    double energy_lhs = 0.0;  ///< ||u||^2_{Gamma_+} + (1/eps)||u-ubar||^2 + eps||ubar||^2
    double energy_rhs = 0.0;  ///< ||g||^2 + (1/eps)||fbar||^2 + eps||f-fbar||^2
    double energy_ratio = 0.0;
};

struct AprioriTable {
    std::vector<AprioriRow> rows;
    std::map<std::string, double> growth;  ///< max over j<k of ratio_k / ratio_j per quantity
    std::vector<std::string> flags;        ///< quantities whose growth exceeds 2
    bool bounded() const { return flags.empty(); }
};

/// Needs at least three values of eps; rows keep the input order.
AprioriTable apriori_check(std::span<const AprioriInput> inputs);

// ---------------------------------------------------------------------------
// Rates.

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int points = 0;
};

/// Least squares for log(value) = intercept + slope log(eps); all values must be positive.
SlopeFit fit_log_log(std::span<const double> eps, std::span<const double> values);

struct StudyOptions {
    std::vector<double> eps;
    int ordinates = 8;
    int sphere_polar = 8;
    int sphere_azimuth = 16;
    SolverOptions solver;
    int min_cells = 64;
    double cells_per_eps = 4.0;  ///< h <= eps / cells_per_eps
    bool lp = true;
    int jobs = 1;

    /// eps strictly decreasing, geometric with ratio <= 1/2, at least four points.
    void validate() const;
    int cells_for(double eps, double length) const;
};

struct StudyRow {
    double eps = 0.0;
    int n_cells = 0;
    double err_total = 0.0;
    double err_fluct = 0.0;
    double bdry = 0.0;
    double deriv = 0.0;
    double remainder = 0.0;
    double err_l1 = 0.0;
    double err_l4 = 0.0;
    double mean = 0.0;
    double linf = 0.0;
    double corrector = 0.0;  ///< ||u1||
    double weak_defect = 0.0;
    int iterations = 0;
    double balance = 0.0;  ///< relative particle-balance residual
};

struct ConvergenceReport {
    std::vector<StudyRow> rows;
    std::map<std::string, SlopeFit> slopes;
    std::map<std::string, double> predicted;  ///< rates the asymptotic analysis gives as upper bounds
    AprioriTable apriori;
    double a11_unit = 1.0 / 3.0;
    bool rate_asserted = true;
    std::string regime;
};

/// Raised when a transport solve fails mid-study; carries the rows finished so far.
class StudyError : public std::runtime_error {
public:
    StudyError(const std::string& what, ConvergenceReport partial, std::vector<double> residuals)
        : std::runtime_error(what), partial_(std::move(partial)), residuals_(std::move(residuals))
    {
    }
    const ConvergenceReport& partial() const noexcept { return partial_; }
    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    ConvergenceReport partial_;
    std::vector<double> residuals_;
};

/// Unit-sigma A11 for the problem's kernel: from the sphere tensor for analytic kernels,
/// from the slab operator for tabulated ones.
double limit_unit_coefficient(const Kernel& kernel, const StudyOptions& options);

ConvergenceReport convergence_study(const ProblemSpec& problem, const StudyOptions& options);

// ---------------------------------------------------------------------------
// Mesh refinement against manufactured solutions.

struct RefinementRow {
    int n_cells = 0;
    double h = 0.0;
    double error_l2 = 0.0;
    double error_max = 0.0;
    double order_l2 = 0.0;  ///< log2 of the error ratio to the previous row; 0 on the first
    double order_max = 0.0;
    int iterations = 0;     ///< transport only
    double balance = 0.0;   ///< transport only, relative particle-balance residual
};

/// Cell averages of u_eps against cell averages of u*(x, mu_j), starting at the problem's grid
/// and halving h levels - 1 times.
std::vector<RefinementRow> transport_refinement(const ProblemSpec& problem, const ManufacturedCase& mcase, double eps,
                                                int ordinates, const SolverOptions& options, int levels);

/// Nodal values of u0 against u*(x_i). The problem's source must be the manufactured one.
std::vector<RefinementRow> diffusion_refinement(const ProblemSpec& problem, const ManufacturedCase& mcase,
                                                double unit_coefficient, int levels);

}  // namespace difflim
