#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "difflim/quadrature.hpp"

namespace difflim {

struct IsotropicKernel {};

/// k(v, v') = 1 + 3 g (v . v'); on the slab this is 1 + 3 g mu mu'.
struct LinearKernel {
    double g = 0.0;
};

/// Kernel values tabulated on the quadrature nodes: table(i, j) = k(v_i, v_j).
struct TabulatedKernel {
    Eigen::MatrixXd table;
};

using Kernel = std::variant<IsotropicKernel, LinearKernel, TabulatedKernel>;

std::string kernel_name(const Kernel& kernel);

/// Reads a whitespace-separated square table; throws ValidationError on ragged or non-numeric input.
TabulatedKernel read_kernel_table(const std::string& path);

enum class VelocityDomain { slab, sphere };

/**
 * Matrix of K acting on nodal values over a velocity quadrature.
 *
 * The spectral decomposition of I - K in the weighted inner product
 * (u, w)_w = sum_i w_i u_i w_i is computed once at assembly. Eigenvectors
 * are stored weighted-orthonormal: V^T W V = I.
 */
class ScatteringOperator {
public:
    ScatteringOperator(Eigen::MatrixXd matrix, Eigen::VectorXd weights, DirectionMatrix directions,
                       VelocityDomain domain, std::vector<std::string> warnings = {});

    int size() const { return static_cast<int>(weights_.size()); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const DirectionMatrix& directions() const { return directions_; }
    VelocityDomain domain() const { return domain_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Eigenvalues of I - K, ascending.
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

    /// max_ij |w_i K_ij - w_j K_ji|
    double self_adjointness_defect() const { return sa_defect_; }

private:
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd weights_;
    DirectionMatrix directions_;
    VelocityDomain domain_;
    std::vector<std::string> warnings_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    double sa_defect_ = 0.0;
};

/// K_ij = k(v_i, v_j) w_j with each row rescaled so that K 1 = 1.
ScatteringOperator assemble_scattering(const Kernel& kernel, const SphereQuadrature& quad);
ScatteringOperator assemble_scattering(const Kernel& kernel, const AngularQuadrature& quad);

inline constexpr double kSpectralTolerance = 1e-10;

struct CertReport {
    Eigen::VectorXd eigenvalues;  ///< spectrum of I - K, ascending
    int null_space_dim = 0;
    Eigen::VectorXd null_vector;  ///< weighted-normalized, empty unless null_space_dim == 1
    std::optional<double> c_K;    ///< absent when I - K has no nonzero eigenvalue
    double self_adjointness_defect = 0.0;
    double max_abs_row_sum = 0.0;  ///< max_i sum_j |K_ij|, the discrete L-infinity norm of K

    bool a4a_self_adjoint_positive = false;
    bool a4b_contraction = false;
    bool a4c_null_space = false;
    bool a4d_solvability = false;
    bool linf_contraction = false;  ///< informational, not part of passed()

    std::vector<std::string> diagnostics;

    bool passed() const
    {
        return a4a_self_adjoint_positive && a4b_contraction && a4c_null_space && a4d_solvability;
    }
};

CertReport certify_assumptions(const ScatteringOperator& K);

/// Throws CertificationError carrying the report diagnostics unless every assumption holds.
void require_certified(const ScatteringOperator& K);

/// Zero-mean solution of (I - K) u = rhs. rhs must have zero weighted mean.
Eigen::VectorXd pinv_apply(const ScatteringOperator& K, const Eigen::VectorXd& rhs);

/// K applied to one velocity vector.
Eigen::VectorXd apply_K(const ScatteringOperator& K, const Eigen::VectorXd& values);

/// K applied per spatial cell to a field stored as cells x velocities.
Eigen::MatrixXd apply_K(const ScatteringOperator& K, const Eigen::MatrixXd& field);

struct DiffusionTensor {
    std::vector<Eigen::Matrix3d> cells;
    double coercivity_lb = 0.0;  ///< smallest eigenvalue over all cells
};

/// Per-cell tensor (1/sigma) sum_i w_i v_i ((I-K)^+ v^T)(v_i). K must live on a sphere quadrature.
DiffusionTensor diffusion_tensor(const ScatteringOperator& K, std::span<const double> sigma);

/// sum_j w_j mu_j ((I-K)^+ mu)_j, the unit-sigma axial diffusion coefficient of a slab or sphere operator.
double axial_diffusion_coefficient(const ScatteringOperator& K);

}  // namespace difflim
