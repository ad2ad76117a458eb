#include "difflim/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "difflim/errors.hpp"

namespace difflim {

namespace {

struct LegendreValue {
    double p;
    double dp;
};

// P_n(x) and P_n'(x) from the three-term recurrence; |x| < 1.
LegendreValue legendre(int n, double x)
{
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if (n == 0) return {1.0, 0.0};
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights)
{
    if (n < 1) throw ArgumentError("gauss_legendre: n must be >= 1");
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton from the Tricomi estimate of the i-th largest root
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(n, x).dp;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

AngularQuadrature::AngularQuadrature(Eigen::VectorXd nodes, Eigen::VectorXd weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights))
{
}

AngularQuadrature AngularQuadrature::gauss(int n)
{
    if (n < 2 || n % 2 != 0)
        throw ArgumentError("angular quadrature needs an even number of nodes >= 2, got " +
                            std::to_string(n));
    Eigen::VectorXd x, w;
    gauss_legendre(n, x, w);
    w *= 0.5;
    // symmetric rule: pair the weights so odd moments cancel to round-off
    for (int i = 0; i < n / 2; ++i) {
        const double avg = 0.5 * (w[i] + w[n - 1 - i]);
        w[i] = w[n - 1 - i] = avg;
        x[i] = -x[n - 1 - i];
    }
    w /= w.sum();
    return AngularQuadrature(std::move(x), std::move(w));
}

DirectionMatrix AngularQuadrature::directions() const
{
    DirectionMatrix d = DirectionMatrix::Zero(size(), 3);
    d.col(0) = nodes_;
    return d;
}

SphereQuadrature::SphereQuadrature(DirectionMatrix points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights))
{
}

SphereQuadrature SphereQuadrature::product(int n_polar, int n_azimuth)
{
    if (n_polar < 2) throw ArgumentError("sphere quadrature: n_polar must be >= 2");
    if (n_azimuth < 4) throw ArgumentError("sphere quadrature: n_azimuth must be >= 4");
    Eigen::VectorXd mu, wmu;
    gauss_legendre(n_polar, mu, wmu);
    const int n = n_polar * n_azimuth;
    DirectionMatrix pts(n, 3);
    Eigen::VectorXd w(n);
    int k = 0;
    for (int i = 0; i < n_polar; ++i) {
        const double s = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
        for (int a = 0; a < n_azimuth; ++a, ++k) {
            const double phi = 2.0 * std::numbers::pi * (a + 0.5) / n_azimuth;
            pts(k, 0) = mu[i];
            pts(k, 1) = s * std::cos(phi);
            pts(k, 2) = s * std::sin(phi);
            pts.row(k).normalize();
            w[k] = 0.5 * wmu[i] / n_azimuth;
        }
    }
    w /= w.sum();
    return SphereQuadrature(std::move(pts), std::move(w));
}

AngularQuadrature build_angular_quadrature(int n) { return AngularQuadrature::gauss(n); }

SphereQuadrature build_sphere_quadrature(int n_polar, int n_azimuth)
{
    return SphereQuadrature::product(n_polar, n_azimuth);
}

}  // namespace difflim
