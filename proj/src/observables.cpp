#include "spdcq/observables.hpp"

#include <algorithm>
#include <cmath>

#include "spdcq/constants.hpp"
#include "spdcq/validation.hpp"

namespace spdcq {

SpectrumCurve spectrum(const Scenario& scenario, const DetectionConfig& det,
                       const std::vector<double>& omega_grid, const OverlapTable& table,
                       const EngineOptions& options) {
    if (omega_grid.empty()) throw DataError("spectrum: empty omega grid");
    const SpectralEvaluator eval(scenario, det, table, options);

    SpectrumCurve curve;
    curve.omega_s = omega_grid;
    curve.wavelength.reserve(omega_grid.size());
    curve.density.reserve(omega_grid.size());
    for (double w : omega_grid) {
        curve.wavelength.push_back(constants::wavelength_from_omega(w));
        curve.density.push_back(eval.density(w));
    }
    curve.metadata.theta_order = options.theta_order;
    curve.metadata.phi_order = options.phi_order;
    curve.metadata.omega_points = omega_grid.size();
    if (eval.cone_blocked())
        curve.metadata.warnings.push_back("collection cone fully blocked; spectrum is 0");
    return curve;
}

FarFieldMap farfield_map(const Scenario& scenario, const DetectionConfig& det,
                         const std::vector<double>& omega_grid,
                         std::size_t n_theta, std::size_t n_phi,
                         const OverlapTable& table, const EngineOptions& options) {
    require_valid(scenario);
    validate_detection(det);
    if (n_theta < 2 || n_phi < 2) throw std::invalid_argument("farfield map: grid too small");
    if (omega_grid.size() < 2) throw DataError("farfield map: need at least 2 omega points");

    // Idler reduction over the cone happens once; the map then evaluates a
    // closed form per signal direction:
    //   R(dir_s) = int dw C(w) sum_{n,n'} K_{n,n'}(w) V_{n,n'}(dir_s)
    // with K = Xi^T Ai conj(Xi) and V the signal-side projector at dir_s
    // (fiber weight and knife mask included).
    const SpectralEvaluator idler_side(scenario, det, table, options);

    FarFieldMap map;
    const double theta_cap = det.theta_max();
    map.theta_nodes.resize(n_theta);
    map.phi_nodes.resize(n_phi);
    for (std::size_t i = 0; i < n_theta; ++i)
        map.theta_nodes[i] = theta_cap * static_cast<double>(i) / static_cast<double>(n_theta - 1);
    for (std::size_t i = 0; i < n_phi; ++i)
        map.phi_nodes[i] = 2.0 * constants::pi * static_cast<double>(i) / static_cast<double>(n_phi);
    map.density.assign(n_theta * n_phi, 0.0);
    map.metadata.theta_order = options.theta_order;
    map.metadata.phi_order = options.phi_order;
    map.metadata.omega_points = omega_grid.size();

    const std::size_t n_modes = scenario.modes.size();

    // Per omega: w-integrated pair kernel via Simpson weights.
    const double h = (omega_grid.back() - omega_grid.front()) /
                     static_cast<double>(omega_grid.size() - 1);
    std::vector<double> sw(omega_grid.size(), 0.0);
    {
        std::size_t i = 0;
        for (; i + 2 < omega_grid.size(); i += 2) {
            sw[i] += h / 3.0;
            sw[i + 1] += 4.0 * h / 3.0;
            sw[i + 2] += h / 3.0;
        }
        if (i == omega_grid.size() - 2) {
            sw[i] += 0.5 * h;
            sw[i + 1] += 0.5 * h;
        }
    }

    // K_int(n,n') = int dw C(w) sum_{m,m'} xi_{m,n} conj(xi_{m',n'}) Ai_{m,m'}
    const std::vector<complexd>& a_idler = idler_side.idler_matrix();
    std::vector<complexd> k_int(n_modes * n_modes, complexd{0.0, 0.0});
    for (std::size_t p = 0; p < omega_grid.size(); ++p) {
        const double omega_s = omega_grid[p];
        if (!det.filter_passes(scenario.pump_omega, omega_s)) continue;
        const double c = prefactor_c(scenario.pump_omega, omega_s, scenario.n_idler,
                                     scenario.n_signal);
        std::vector<complexd> xi(n_modes * n_modes);
        for (std::size_t m = 0; m < n_modes; ++m)
            for (std::size_t j = 0; j < n_modes; ++j) xi[m * n_modes + j] = table.xi(m, j, omega_s);
        for (std::size_t j = 0; j < n_modes; ++j)
            for (std::size_t jp = 0; jp < n_modes; ++jp) {
                complexd acc{0.0, 0.0};
                for (std::size_t m = 0; m < n_modes; ++m)
                    for (std::size_t mp = 0; mp < n_modes; ++mp)
                        acc += xi[m * n_modes + j] * std::conj(xi[mp * n_modes + jp]) *
                               a_idler[m * n_modes + mp];
                k_int[j * n_modes + jp] += sw[p] * c * acc;
            }
    }

    const std::array<double, 2>* pol_s =
        det.polarization ? &det.polarization->d_signal : nullptr;

    for (std::size_t it = 0; it < n_theta; ++it) {
        const double theta = map.theta_nodes[it];
        for (std::size_t ip = 0; ip < n_phi; ++ip) {
            const double phi = map.phi_nodes[ip];
            double weight = 1.0;
            if (det.knife) {
                const auto rc = direction_to_collimated_plane(theta, phi, det);
                if (!det.knife->passes(rc[0])) continue;
            }
            if (det.fiber)
                weight *= det.fiber->amplitude(direction_to_fiber_plane(theta, phi, det));

            std::vector<complexd> f(n_modes * 2);
            complexd value{0.0, 0.0};
            for (std::size_t j = 0; j < n_modes; ++j) {
                const PolarizedAmplitude a = scenario.modes[j].far_field.sample(theta, phi);
                f[j * 2] = a.e_theta;
                f[j * 2 + 1] = a.e_phi;
            }
            for (std::size_t j = 0; j < n_modes; ++j)
                for (std::size_t jp = 0; jp < n_modes; ++jp) {
                    complexd v;
                    if (pol_s) {
                        const complexd pj = f[j * 2] * (*pol_s)[0] + f[j * 2 + 1] * (*pol_s)[1];
                        const complexd pk = f[jp * 2] * (*pol_s)[0] + f[jp * 2 + 1] * (*pol_s)[1];
                        v = pj * std::conj(pk);
                    } else {
                        v = f[j * 2] * std::conj(f[jp * 2]) + f[j * 2 + 1] * std::conj(f[jp * 2 + 1]);
                    }
                    value += k_int[j * n_modes + jp] * v;
                }
            map.density[it * n_phi + ip] = weight * value.real();
        }
    }
    return map;
}

KnifeScan knife_scan(const Scenario& scenario, const DetectionConfig& det,
                     const std::vector<double>& positions,
                     const std::vector<double>& omega_grid, const OverlapTable& table,
                     const EngineOptions& options) {
    if (positions.empty()) throw DataError("knife scan: no positions");
    if (!std::is_sorted(positions.begin(), positions.end()))
        throw DataError("knife scan: positions must be sorted ascending");

    KnifeScan scan;
    scan.positions = positions;
    scan.rates.reserve(positions.size());

    DetectionConfig det_k = det;
    if (!det_k.knife) det_k.knife = KnifeState{};
    EngineOptions opt = options;
    opt.with_breakdown = false;
    for (double x : positions) {
        det_k.knife->position = x;
        scan.rates.push_back(detected_pair_rate(scenario, det_k, omega_grid, table, opt).rate);
    }
    return scan;
}

std::vector<SweepPoint> scaling_sweep(const std::vector<SweepMember>& members,
                                      const DetectionConfig& det,
                                      const std::vector<double>& omega_grid,
                                      const EngineOptions& options, bool full_sum) {
    std::vector<SweepPoint> points;
    points.reserve(members.size());
    EngineOptions opt = options;
    opt.with_breakdown = false;

    for (const SweepMember& member : members) {
        const Scenario& scenario = member.scenario;
        require_valid(scenario);
        const QnmMode* mode1 = scenario.find_mode("1");
        if (!mode1) throw DataError("scaling sweep: member lacks a mode labeled '1'");

        SweepPoint point;
        point.fs = member.fs;
        point.eigenfrequency_1 = mode1->eigenfrequency;
        point.detuning_hz = (mode1->eigenfrequency.omega - scenario.degenerate_omega()) /
                            (2.0 * constants::pi);
        point.volume = scenario.volume;

        const SpatialOverlap g11 =
            spatial_overlap(*mode1, *mode1, scenario.chi2, scenario.pump_field);
        point.g11_abs = std::abs(g11.value);

        if (full_sum) {
            const OverlapTable table = xi_table(scenario, omega_grid, 1);
            point.rate = detected_pair_rate(scenario, det, omega_grid, table, opt).rate;
        } else {
            // Restriction to the (1,1) pair: a single-mode copy of the member.
            Scenario restricted;
            restricted.pump_omega = scenario.pump_omega;
            restricted.pump_intensity = scenario.pump_intensity;
            restricted.pump_field = scenario.pump_field;
            restricted.modes = {*mode1};
            restricted.chi2 = scenario.chi2;
            restricted.n_idler = scenario.n_idler;
            restricted.n_signal = scenario.n_signal;
            restricted.volume = scenario.volume;
            const OverlapTable table = xi_table(restricted, omega_grid, 1);
            point.rate = detected_pair_rate(restricted, det, omega_grid, table, opt).rate;
        }
        point.normalized_rate = point.rate / point.volume;
        points.push_back(point);
    }
    return points;
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
    if (series.empty()) throw DataError("moving average: empty series");
    if (window < 1 || window > series.size())
        throw std::invalid_argument("moving average: window outside [1, length]");

    const std::size_t n = series.size();
    const std::size_t before = (window - 1) / 2;  // even windows lean on the trailing side
    const std::size_t after = window - 1 - before;

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= before ? i - before : 0;
        const std::size_t hi = std::min(n - 1, i + after);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += series[j];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace spdcq
