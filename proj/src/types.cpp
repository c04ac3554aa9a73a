#include "spdcq/types.hpp"

#include <algorithm>
#include <cmath>

#include "spdcq/constants.hpp"

namespace spdcq {

double q_factor(const ComplexFrequency& ef) {
    if (!(ef.gamma > 0.0)) throw std::domain_error("q_factor: non-positive leakage rate");
    return ef.omega / (2.0 * ef.gamma);
}

bool Chi2Tensor::first_two_symmetric(double tol) const {
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
            for (std::size_t g = 0; g < 3; ++g)
                if (std::abs((*this)(a, b, g) - (*this)(b, a, g)) > tol) return false;
    return true;
}

const QnmMode* Scenario::find_mode(const std::string& label) const {
    auto it = std::find_if(modes.begin(), modes.end(),
                           [&](const QnmMode& m) { return m.label == label; });
    return it == modes.end() ? nullptr : &*it;
}

namespace {

// Fractional bracket of x in a strictly increasing node list.
struct Bracket {
    std::size_t lo;
    std::size_t hi;
    double t;  // in [0, 1]
};

Bracket bracket_clamped(const std::vector<double>& nodes, double x) {
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    if (it == nodes.begin()) return {0, 0, 0.0};
    if (it == nodes.end()) return {nodes.size() - 1, nodes.size() - 1, 0.0};
    const std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    const std::size_t lo = hi - 1;
    return {lo, hi, (x - nodes[lo]) / (nodes[hi] - nodes[lo])};
}

}  // namespace

PolarizedAmplitude FarFieldAmplitude::sample(double theta, double phi) const {
    const double two_pi = 2.0 * constants::pi;
    const double theta_tol = 1e-12 * constants::pi;
    if (theta < theta_nodes.front() - theta_tol || theta > theta_nodes.back() + theta_tol)
        throw std::domain_error("far-field sample: theta outside the covered range");

    const Bracket bt = bracket_clamped(theta_nodes, theta);

    // phi is periodic: reduce into [phi0, phi0 + 2*pi) and allow the wrap
    // segment between the last node and the first node + 2*pi.
    const double phi0 = phi_nodes.front();
    double p = std::fmod(phi - phi0, two_pi);
    if (p < 0.0) p += two_pi;
    p += phi0;

    std::size_t plo, phi_hi;
    double tp;
    if (p >= phi_nodes.back()) {
        plo = phi_nodes.size() - 1;
        phi_hi = 0;
        tp = (p - phi_nodes.back()) / (phi0 + two_pi - phi_nodes.back());
    } else {
        const Bracket bp = bracket_clamped(phi_nodes, p);
        plo = bp.lo;
        phi_hi = bp.hi;
        tp = bp.t;
    }

    const auto lerp2 = [&](const std::vector<complexd>& a) {
        const complexd v00 = a[index(bt.lo, plo)];
        const complexd v01 = a[index(bt.lo, phi_hi)];
        const complexd v10 = a[index(bt.hi, plo)];
        const complexd v11 = a[index(bt.hi, phi_hi)];
        const complexd lo = v00 + (v01 - v00) * tp;
        const complexd hi = v10 + (v11 - v10) * tp;
        return lo + (hi - lo) * bt.t;
    };

    return {lerp2(amp_theta) * reference_radius, lerp2(amp_phi) * reference_radius};
}

double FiberMode::amplitude(const std::array<double, 2>& r) const {
    const double r2 = r[0] * r[0] + r[1] * r[1];
    return std::exp(-r2 / (sigma * sigma)) / (sigma * std::sqrt(constants::pi));
}

double DetectionConfig::theta_max() const { return std::asin(na); }

std::array<double, 2> direction_to_collimated_plane(double theta, double phi,
                                                    const DetectionConfig& det) {
    if (theta < 0.0 || theta > det.theta_max() + 1e-12)
        throw std::domain_error("direction outside the NA cone");
    const double rho = det.focal_length * det.magnification * std::sin(theta);
    return {rho * std::cos(phi), rho * std::sin(phi)};
}

std::array<double, 2> direction_to_fiber_plane(double theta, double phi,
                                               const DetectionConfig& det) {
    std::array<double, 2> r = direction_to_collimated_plane(theta, phi, det);
    if (det.fiber) {
        r[0] -= det.fiber->offset[0];
        r[1] -= det.fiber->offset[1];
    }
    return r;
}

void validate_detection(const DetectionConfig& det) {
    if (!(det.na > 0.0) || det.na > 1.0) throw DataError("detection: NA must lie in (0, 1]");
    if (!(det.focal_length > 0.0)) throw DataError("detection: focal length must be positive");
    if (!(det.magnification > 0.0)) throw DataError("detection: magnification must be positive");
    if (det.fiber && !(det.fiber->sigma > 0.0))
        throw DataError("detection: fiber mode radius must be positive");
    if (det.filter && !(det.filter->omega_min < det.filter->omega_max))
        throw DataError("detection: spectral window is empty");
    if (det.knife && det.knife->orientation == 0)
        throw DataError("detection: knife orientation must be +1 or -1");
    if (det.polarization) {
        for (const auto& d : {det.polarization->d_idler, det.polarization->d_signal}) {
            const double n2 = d[0] * d[0] + d[1] * d[1];
            if (!(n2 > 0.0)) throw DataError("detection: zero polarization vector");
        }
    }
}

}  // namespace spdcq
