#pragma once

#include <Eigen/Dense>

namespace difflim {

using DirectionMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2), nodes ascending.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/**
 * Discrete ordinates for slab geometry: nodes are direction cosines
 * mu = v.e1 in (-1, 1) and the weights represent dmu/2, so they sum to one.
 * Nodes are stored in ascending order; the first half is negative.
 */
class AngularQuadrature {
public:
    /// Gauss rule with n nodes; n must be even and >= 2.
    static AngularQuadrature gauss(int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    const Eigen::VectorXd& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double node(int j) const { return nodes_[j]; }
    double weight(int j) const { return weights_[j]; }

    /// Directions embedded in R^3 as (mu, 0, 0).
    DirectionMatrix directions() const;

private:
    AngularQuadrature(Eigen::VectorXd nodes, Eigen::VectorXd weights);

    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
};

/**
 * Product rule on the unit sphere: Gauss in the cosine of the polar angle
 * (polar axis e1) times the uniform rule in azimuth. Weights sum to one.
 * Exact for spherical polynomials up to degree min(2 n_polar - 1, n_azimuth - 1).
 */
class SphereQuadrature {
public:
    static SphereQuadrature product(int n_polar, int n_azimuth);

    int size() const { return static_cast<int>(weights_.size()); }
    const DirectionMatrix& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    SphereQuadrature(DirectionMatrix points, Eigen::VectorXd weights);

    DirectionMatrix points_;
    Eigen::VectorXd weights_;
};

AngularQuadrature build_angular_quadrature(int n);
SphereQuadrature build_sphere_quadrature(int n_polar, int n_azimuth);

}  // namespace difflim
