#include "spdcq/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "spdcq/constants.hpp"
#include "spdcq/types.hpp"

namespace spdcq {

GaussLegendreRule gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));

    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

AngularQuadrature AngularQuadrature::cap(double theta_max, int theta_order, int phi_order) {
    if (!(theta_max > 0.0) || theta_max > constants::pi)
        throw std::invalid_argument("angular cap: theta_max outside (0, pi]");
    if (phi_order < 1) throw std::invalid_argument("angular cap: phi order must be >= 1");

    AngularQuadrature quad;
    quad.theta_max = theta_max;
    quad.theta_order = theta_order;
    quad.phi_order = phi_order;

    const GaussLegendreRule gl = gauss_legendre(theta_order);
    const double u_lo = std::cos(theta_max);
    const double u_hi = 1.0;
    const double u_half = 0.5 * (u_hi - u_lo);
    const double u_mid = 0.5 * (u_hi + u_lo);
    const double dphi = 2.0 * constants::pi / phi_order;

    quad.nodes.reserve(static_cast<std::size_t>(theta_order) * phi_order);
    for (int it = 0; it < theta_order; ++it) {
        const double u = u_mid + u_half * gl.nodes[static_cast<std::size_t>(it)];
        const double wu = u_half * gl.weights[static_cast<std::size_t>(it)];
        const double theta = std::acos(u);
        for (int ip = 0; ip < phi_order; ++ip)
            quad.nodes.push_back({theta, ip * dphi, wu * dphi});
    }
    return quad;
}

double AngularQuadrature::total_weight() const {
    double sum = 0.0;
    for (const AngularNode& n : nodes) sum += n.weight;
    return sum;
}

double AngularQuadrature::solid_angle() const {
    return 2.0 * constants::pi * (1.0 - std::cos(theta_max));
}

namespace {

double simpson_uniform(const double* y, std::size_t n, double h, bool* trapezoid_tail) {
    // n >= 2. Composite Simpson over pairs of intervals; a leftover interval
    // is closed with a trapezoid.
    double sum = 0.0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2)
        sum += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    if (i == n - 2) {
        sum += 0.5 * h * (y[i] + y[i + 1]);
        if (trapezoid_tail) *trapezoid_tail = true;
    }
    return sum;
}

}  // namespace

SimpsonResult simpson_integrate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("simpson: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("simpson: need at least 2 points");

    const std::size_t n = x.size();
    const double h = (x.back() - x.front()) / static_cast<double>(n - 1);
    if (!(h > 0.0)) throw DataError("simpson: grid must increase");
    for (std::size_t i = 1; i < n; ++i) {
        const double step = x[i] - x[i - 1];
        if (std::abs(step - h) > 1e-9 * std::abs(h))
            throw DataError("simpson: grid must be uniformly spaced");
    }

    SimpsonResult result;
    result.value = simpson_uniform(y.data(), n, h, &result.trapezoid_tail);

    // Richardson: compare against the stride-2 subgrid when it is itself a
    // valid Simpson grid.
    if (n >= 5 && (n - 1) % 4 == 0) {
        std::vector<double> yc;
        yc.reserve((n + 1) / 2);
        for (std::size_t i = 0; i < n; i += 2) yc.push_back(y[i]);
        const double coarse = simpson_uniform(yc.data(), yc.size(), 2.0 * h, nullptr);
        result.richardson_error = std::abs(result.value - coarse) / 15.0;
    }
    return result;
}

}  // namespace spdcq
