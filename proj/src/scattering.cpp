#include "difflim/scattering.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "difflim/errors.hpp"

namespace difflim {

namespace {

constexpr double kSelfAdjointTolerance = 1e-12;
constexpr double kNormalizationWarning = 1e-6;
constexpr double kConstantVectorTolerance = 1e-8;

double kernel_value(const Kernel& kernel, const Eigen::Vector3d& v, const Eigen::Vector3d& vp, int i,
                    int j)
{
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, IsotropicKernel>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, LinearKernel>) {
                return 1.0 + 3.0 * k.g * v.dot(vp);
            } else {
                return k.table(i, j);
            }
        },
        kernel);
}

ScatteringOperator assemble(const Kernel& kernel, const Eigen::VectorXd& w, const DirectionMatrix& dirs,
                            VelocityDomain domain)
{
    const int n = static_cast<int>(w.size());
    std::vector<std::string> warnings;

    if (const auto* lin = std::get_if<LinearKernel>(&kernel)) {
        if (!(std::abs(lin->g) <= 1.0))
            throw ArgumentError("linear kernel: g_factor must lie in [-1, 1]");
    }
    if (const auto* tab = std::get_if<TabulatedKernel>(&kernel)) {
        if (tab->table.rows() != n || tab->table.cols() != n)
            throw ValidationError("tabulated kernel is " + std::to_string(tab->table.rows()) + "x" +
                                  std::to_string(tab->table.cols()) + " but the quadrature has " +
                                  std::to_string(n) + " nodes");
        if (!tab->table.allFinite()) throw ValidationError("tabulated kernel has non-finite entries");
        if ((tab->table - tab->table.transpose()).cwiseAbs().maxCoeff() > 1e-12 * tab->table.cwiseAbs().maxCoeff())
            throw ValidationError("tabulated kernel is not symmetric");
    }

    Eigen::MatrixXd K(n, n);
    bool negative = false;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d vi = dirs.row(i).transpose();
        for (int j = 0; j < n; ++j) {
            const double k = kernel_value(kernel, vi, dirs.row(j).transpose(), i, j);
            if (k < 0.0) negative = true;
            K(i, j) = k * w[j];
        }
    }
    if (negative) {
        if (std::holds_alternative<TabulatedKernel>(kernel))
            throw ValidationError("tabulated kernel has negative values");
        warnings.emplace_back("kernel takes negative values on the quadrature");
    }

    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = K.row(i).sum();
        if (!(r > 0.0)) throw ValidationError("scattering row " + std::to_string(i) + " has nonpositive mass");
        worst = std::max(worst, std::abs(r - 1.0));
        K.row(i) /= r;
    }
    if (worst > kNormalizationWarning) {
        std::ostringstream os;
        os << "row normalization factors deviate from 1 by up to " << worst;
        warnings.push_back(os.str());
    }
    return ScatteringOperator(std::move(K), w, dirs, domain, std::move(warnings));
}

}  // namespace

std::string kernel_name(const Kernel& kernel)
{
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, IsotropicKernel>) return "isotropic";
            else if constexpr (std::is_same_v<T, LinearKernel>) return "linear";
            else return "table";
        },
        kernel);
}

TabulatedKernel read_kernel_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open kernel table '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError("kernel table '" + path + "': bad number '" + tok + "'");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    const auto n = rows.size();
    if (n == 0) throw ValidationError("kernel table '" + path + "' is empty");
    TabulatedKernel t{Eigen::MatrixXd(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw ValidationError("kernel table '" + path + "' is not square");
        for (std::size_t j = 0; j < n; ++j) t.table(i, j) = rows[i][j];
    }
    return t;
}

ScatteringOperator::ScatteringOperator(Eigen::MatrixXd matrix, Eigen::VectorXd weights,
                                       DirectionMatrix directions, VelocityDomain domain,
                                       std::vector<std::string> warnings)
    : matrix_(std::move(matrix)),
      weights_(std::move(weights)),
      directions_(std::move(directions)),
      domain_(domain),
      warnings_(std::move(warnings))
{
    const int n = size();
    if (matrix_.rows() != n || matrix_.cols() != n || directions_.rows() != n)
        throw ArgumentError("scattering operator: matrix, weights and directions disagree in size");
    if ((weights_.array() <= 0.0).any()) throw ArgumentError("scattering operator: weights must be positive");

    const Eigen::MatrixXd WK = weights_.asDiagonal() * matrix_;
    sa_defect_ = (WK - WK.transpose()).cwiseAbs().maxCoeff();

    // S = W^{1/2} (I - K) W^{-1/2} is symmetric exactly when K is self-adjoint in (.,.)_w
    const Eigen::VectorXd s = weights_.cwiseSqrt();
    Eigen::MatrixXd S = -(s.asDiagonal() * matrix_ * s.cwiseInverse().asDiagonal());
    S.diagonal().array() += 1.0;
    const Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ssym);
    if (es.info() != Eigen::Success) throw CertificationError("eigendecomposition of I-K failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = s.cwiseInverse().asDiagonal() * es.eigenvectors();
}

ScatteringOperator assemble_scattering(const Kernel& kernel, const SphereQuadrature& quad)
{
    return assemble(kernel, quad.weights(), quad.points(), VelocityDomain::sphere);
}

ScatteringOperator assemble_scattering(const Kernel& kernel, const AngularQuadrature& quad)
{
    return assemble(kernel, quad.weights(), quad.directions(), VelocityDomain::slab);
}

CertReport certify_assumptions(const ScatteringOperator& K)
{
    CertReport r;
    const int n = K.size();
    r.eigenvalues = K.eigenvalues();
    r.self_adjointness_defect = K.self_adjointness_defect();
    r.max_abs_row_sum = K.matrix().cwiseAbs().rowwise().sum().maxCoeff();
    r.linf_contraction = r.max_abs_row_sum <= 1.0 + kSpectralTolerance;

    const double lo = r.eigenvalues.minCoeff();
    const double hi = r.eigenvalues.maxCoeff();
    const bool self_adjoint = r.self_adjointness_defect <= kSelfAdjointTolerance;
    const bool in_unit_interval = lo >= -kSpectralTolerance && hi <= 1.0 + kSpectralTolerance;
    const double mass_defect = (K.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff();

    for (int k = 0; k < n; ++k)
        if (std::abs(r.eigenvalues[k]) <= kSpectralTolerance) ++r.null_space_dim;
    for (int k = 0; k < n; ++k) {
        if (r.eigenvalues[k] > kSpectralTolerance) {
            r.c_K = 1.0 / r.eigenvalues[k];
            break;
        }
    }

    bool constant_null = false;
    if (r.null_space_dim == 1) {
        int k0 = 0;
        while (std::abs(r.eigenvalues[k0]) > kSpectralTolerance) ++k0;
        r.null_vector = K.eigenvectors().col(k0);
        const double mean = K.weights().dot(r.null_vector);
        constant_null = std::abs(mean) > 0.0 &&
                        (r.null_vector.array() - mean).abs().maxCoeff() <= kConstantVectorTolerance * std::abs(mean);
        if (mean < 0.0) r.null_vector = -r.null_vector;
    }

    r.a4a_self_adjoint_positive = self_adjoint && hi <= 1.0 + kSpectralTolerance;
    r.a4b_contraction = in_unit_interval && mass_defect <= 1e-12;
    r.a4c_null_space = r.null_space_dim == 1 && constant_null;
    r.a4d_solvability = r.a4c_null_space && self_adjoint && r.c_K.has_value();

    std::ostringstream os;
    if (!self_adjoint) {
        os << "K is not self-adjoint in the weighted inner product (defect " << r.self_adjointness_defect << ")";
        r.diagnostics.push_back(os.str());
        os.str("");
    }
    if (!in_unit_interval) {
        os << "spectrum of I-K leaves [0,1]: min " << lo << ", max " << hi;
        r.diagnostics.push_back(os.str());
        os.str("");
    }
    if (mass_defect > 1e-12) {
        os << "K does not preserve constants (defect " << mass_defect << ")";
        r.diagnostics.push_back(os.str());
        os.str("");
    }
    if (r.null_space_dim != 1) {
        os << "null space of I-K has dimension " << r.null_space_dim << ", expected 1";
        r.diagnostics.push_back(os.str());
        os.str("");
    } else if (!constant_null) {
        r.diagnostics.emplace_back("null vector of I-K is not constant");
    }
    if (!r.linf_contraction) {
        os << "max_i sum_j |K_ij| = " << r.max_abs_row_sum << " exceeds 1 (L-infinity bound not certified)";
        r.diagnostics.push_back(os.str());
    }
    return r;
}

void require_certified(const ScatteringOperator& K)
{
    const CertReport r = certify_assumptions(K);
    if (r.passed()) return;
    std::string msg = "scattering operator failed certification";
    for (const auto& d : r.diagnostics) msg += "; " + d;
    throw CertificationError(msg);
}

Eigen::VectorXd pinv_apply(const ScatteringOperator& K, const Eigen::VectorXd& rhs)
{
    if (rhs.size() != K.size()) throw ArgumentError("pinv_apply: rhs size does not match the quadrature");
    const Eigen::VectorXd& w = K.weights();
    const double mean = w.dot(rhs);
    const double norm = std::sqrt(w.dot(rhs.cwiseAbs2()));
    if (std::abs(mean) > kSpectralTolerance * std::max(1.0, norm))
        throw SolvabilityError("(I-K)u = f is solvable only for f with zero velocity average; mean is " +
                               std::to_string(mean));

    const Eigen::VectorXd& lam = K.eigenvalues();
    int null_dim = 0;
    for (int k = 0; k < lam.size(); ++k)
        if (std::abs(lam[k]) <= kSpectralTolerance) ++null_dim;
    if (null_dim != 1)
        throw CertificationError("pinv_apply: null space of I-K has dimension " + std::to_string(null_dim));

    const Eigen::MatrixXd& V = K.eigenvectors();
    const Eigen::VectorXd coeff = V.transpose() * (w.asDiagonal() * rhs);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(rhs.size());
    for (int k = 0; k < lam.size(); ++k)
        if (std::abs(lam[k]) > kSpectralTolerance) u += (coeff[k] / lam[k]) * V.col(k);
    u.array() -= w.dot(u);
    return u;
}

Eigen::VectorXd apply_K(const ScatteringOperator& K, const Eigen::VectorXd& values)
{
    if (values.size() != K.size()) throw ArgumentError("apply_K: vector size does not match the quadrature");
    return K.matrix() * values;
}

Eigen::MatrixXd apply_K(const ScatteringOperator& K, const Eigen::MatrixXd& field)
{
    if (field.cols() != K.size()) throw ArgumentError("apply_K: field has the wrong number of velocities");
    return field * K.matrix().transpose();
}

DiffusionTensor diffusion_tensor(const ScatteringOperator& K, std::span<const double> sigma)
{
    if (K.domain() != VelocityDomain::sphere)
        throw ArgumentError("diffusion_tensor needs a scattering operator on a sphere quadrature");
    require_certified(K);

    Eigen::Matrix3d unit;
    const Eigen::VectorXd& w = K.weights();
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd z = pinv_apply(K, K.directions().col(k));
        for (int l = 0; l < 3; ++l) unit(l, k) = (w.array() * K.directions().col(l).array() * z.array()).sum();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (unit + unit.transpose()));
    const double unit_min = es.eigenvalues().minCoeff();
    if (unit_min < (1.0 - 1e-8) / 3.0)
        throw CertificationError("diffusion tensor is not coercive: smallest unit eigenvalue " +
                                 std::to_string(unit_min) + " < 1/3");

    DiffusionTensor t;
    t.cells.reserve(sigma.size());
    t.coercivity_lb = std::numeric_limits<double>::infinity();
    for (const double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ArgumentError("diffusion_tensor: sigma must be positive");
        t.cells.push_back(unit / s);
        t.coercivity_lb = std::min(t.coercivity_lb, unit_min / s);
    }
    return t;
}

double axial_diffusion_coefficient(const ScatteringOperator& K)
{
    require_certified(K);
    const Eigen::VectorXd mu = K.directions().col(0);
    const Eigen::VectorXd z = pinv_apply(K, mu);
    return (K.weights().array() * mu.array() * z.array()).sum();
}

}  // namespace difflim
