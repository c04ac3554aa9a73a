#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "spdcq/constants.hpp"
#include "spdcq/observables.hpp"

namespace spdcq {

namespace {

struct ErfModel {
    // Parameter order: (m, x0, amplitude, offset).
    static double eval(const Eigen::Vector4d& p, double x) {
        return p[3] + p[2] * std::erf((x - p[1]) / p[0]);
    }

    static Eigen::Vector4d gradient(const Eigen::Vector4d& p, double x) {
        const double u = (x - p[1]) / p[0];
        const double gauss = 2.0 / std::sqrt(constants::pi) * std::exp(-u * u);
        Eigen::Vector4d g;
        g[0] = -p[2] * u / p[0] * gauss;   // d/dm
        g[1] = -p[2] / p[0] * gauss;       // d/dx0
        g[2] = std::erf(u);                // d/damplitude
        g[3] = 1.0;                        // d/doffset
        return g;
    }
};

Eigen::Vector4d initial_guess(const std::vector<double>& x, const std::vector<double>& y) {
    const auto [y_min_it, y_max_it] = std::minmax_element(y.begin(), y.end());
    const double offset = 0.5 * (*y_min_it + *y_max_it);
    const double amplitude = 0.5 * (y.back() - y.front());
    // Center: the sample closest to the mid level.
    std::size_t i0 = 0;
    double best = std::abs(y[0] - offset);
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double d = std::abs(y[i] - offset);
        if (d < best) {
            best = d;
            i0 = i;
        }
    }
    const double span = x.back() - x.front();
    Eigen::Vector4d p;
    p << 0.25 * span, x[i0], amplitude == 0.0 ? *y_max_it - offset + 1e-30 : amplitude, offset;
    if (p[2] == 0.0) p[2] = 1e-30;
    return p;
}

double ssr(const Eigen::Vector4d& p, const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - ErfModel::eval(p, x[i]);
        s += r * r;
    }
    return s;
}

}  // namespace

ErfFit fit_erf(const std::vector<double>& positions, const std::vector<double>& rates) {
    const std::size_t n = positions.size();
    if (n != rates.size()) throw std::invalid_argument("fit_erf: size mismatch");
    if (n < 5) throw DataError("fit_erf: need at least 5 scan points");

    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    if (*lo == *hi) throw DataError("fit_erf: degenerate fit (no transition in the data)");

    Eigen::Vector4d p = initial_guess(positions, rates);
    double current = ssr(p, positions, rates);

    constexpr int max_iterations = 200;
    constexpr double step_tolerance = 1e-10;
    int iter = 0;
    bool converged = false;

    for (; iter < max_iterations; ++iter) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector4d g = ErfModel::gradient(p, positions[i]);
            const double r = rates[i] - ErfModel::eval(p, positions[i]);
            jtj += g * g.transpose();
            jtr += g * r;
        }

        const Eigen::Vector4d step = jtj.ldlt().solve(jtr);
        if (!step.allFinite()) throw NumericError("fit_erf: singular normal equations");

        // Damped update: halve the step until the residual does not grow.
        double lambda = 1.0;
        Eigen::Vector4d candidate = p + step;
        double next = ssr(candidate, positions, rates);
        int halvings = 0;
        while ((next > current || candidate[0] <= 0.0) && halvings < 60) {
            lambda *= 0.5;
            candidate = p + lambda * step;
            next = ssr(candidate, positions, rates);
            ++halvings;
        }
        if (candidate[0] <= 0.0) throw NumericError("fit_erf: slope collapsed to zero");

        const double rel_step = (lambda * step).norm() / std::max(p.norm(), 1e-300);
        p = candidate;
        current = next;
        if (rel_step < step_tolerance) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "fit_erf: no convergence after %d iterations (m=%g x0=%g amp=%g off=%g ssr=%g)",
                      max_iterations, p[0], p[1], p[2], p[3], current);
        throw NumericError(buf);
    }

    // Linearized covariance at the optimum: cov = (J^T J)^-1 * s^2.
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector4d g = ErfModel::gradient(p, positions[i]);
        jtj += g * g.transpose();
    }
    const double dof = static_cast<double>(n > 4 ? n - 4 : 1);
    const double s2 = current / dof;
    const Eigen::Matrix4d cov = jtj.inverse() * s2;

    ErfFit fit;
    fit.m = p[0];
    fit.x0 = p[1];
    fit.amplitude = p[2];
    fit.offset = p[3];
    for (int i = 0; i < 4; ++i) fit.ci95[static_cast<std::size_t>(i)] = 1.96 * std::sqrt(std::max(cov(i, i), 0.0));
    fit.residual_norm = std::sqrt(current / static_cast<double>(n));
    fit.iterations = iter;

    // Flat data: amplitude indistinguishable from zero at 95%.
    if (std::abs(fit.amplitude) <= fit.ci95[2])
        throw DataError("fit_erf: degenerate fit (amplitude indistinguishable from 0 at 95%)");
    return fit;
}

ErfFit fit_erf(const KnifeScan& scan) { return fit_erf(scan.positions, scan.rates); }

}  // namespace spdcq
