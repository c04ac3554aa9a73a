#include "spdcq/emission.hpp"

#include <cmath>

#include "spdcq/constants.hpp"
#include "spdcq/parallel.hpp"
#include "spdcq/validation.hpp"

namespace spdcq {

namespace {

namespace k = constants;

void require_omega_in_range(double omega_p, double omega_s) {
    if (!(omega_s > 0.0) || !(omega_s < omega_p))
        throw std::domain_error("signal frequency outside (0, omega_p)");
}

// xi matrix at one omega_s, dropped pairs already zeroed.
std::vector<complexd> xi_matrix(const OverlapTable& table, double omega_s) {
    const std::size_t n = table.mode_count();
    std::vector<complexd> xi(n * n);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) xi[m * n + j] = table.xi(m, j, omega_s);
    return xi;
}

}  // namespace

double prefactor_c(double omega_p, double omega_s, double n_i, double n_s) {
    require_omega_in_range(omega_p, omega_s);
    const double omega_i = omega_p - omega_s;
    const double c3 = k::speed_of_light * k::speed_of_light * k::speed_of_light;
    const double wi3 = omega_i * omega_i * omega_i;
    const double ws3 = omega_s * omega_s * omega_s;
    return 8.0 / (k::pi * k::vacuum_permeability * k::vacuum_permeability) * n_i * n_s *
           (wi3 / c3) * (ws3 / c3);
}

complexd two_photon_amplitude(const Scenario& scenario,
                              const std::array<double, 2>& dir_i, const std::array<double, 2>& pol_i,
                              const std::array<double, 2>& dir_s, const std::array<double, 2>& pol_s,
                              double omega_s, const OverlapTable& table) {
    require_omega_in_range(scenario.pump_omega, omega_s);
    const std::size_t n = table.mode_count();
    if (n != scenario.modes.size())
        throw DataError("two-photon amplitude: table does not match the scenario");

    std::vector<complexd> fi(n), fs(n);
    for (std::size_t m = 0; m < n; ++m) {
        fi[m] = scenario.modes[m].far_field.sample(dir_i[0], dir_i[1]).project(pol_i);
        fs[m] = scenario.modes[m].far_field.sample(dir_s[0], dir_s[1]).project(pol_s);
    }

    complexd amplitude{0.0, 0.0};
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) {
            const complexd xi = table.xi(m, j, omega_s);
            if (xi != complexd{0.0, 0.0}) amplitude += xi * fi[m] * fs[j];
        }
    return amplitude;
}

double differential_pair_rate(const Scenario& scenario,
                              const std::array<double, 2>& dir_i,
                              const std::array<double, 2>& dir_s,
                              double omega_s, const DetectionConfig& det,
                              const OverlapTable& table) {
    const double c = prefactor_c(scenario.pump_omega, omega_s, scenario.n_idler,
                                 scenario.n_signal);
    if (det.polarization) {
        const complexd t = two_photon_amplitude(scenario, dir_i, det.polarization->d_idler,
                                                dir_s, det.polarization->d_signal, omega_s, table);
        return c * std::norm(t);
    }
    double sum = 0.0;
    for (const auto& pi : {kThetaHat, kPhiHat})
        for (const auto& ps : {kThetaHat, kPhiHat})
            sum += std::norm(two_photon_amplitude(scenario, dir_i, pi, dir_s, ps, omega_s, table));
    return c * sum;
}

double detected_rate_integrand(const Scenario& scenario, const DetectionConfig& det,
                               const OverlapTable& table,
                               const std::array<double, 2>& dir_i,
                               const std::array<double, 2>& dir_s,
                               double omega_s) {
    if (!det.filter_passes(scenario.pump_omega, omega_s)) return 0.0;

    double weight = 1.0;
    for (const auto& dir : {dir_i, dir_s}) {
        if (det.knife) {
            const auto rc = direction_to_collimated_plane(dir[0], dir[1], det);
            if (!det.knife->passes(rc[0])) return 0.0;
        }
        if (det.fiber) weight *= det.fiber->amplitude(direction_to_fiber_plane(dir[0], dir[1], det));
    }
    return weight * differential_pair_rate(scenario, dir_i, dir_s, omega_s, det, table);
}

// ---------------------------------------------------------------------------
// Quadrature path. The angular integrals factorize per photon:
//   rho(w) = C(w) sum_{m,m',n,n'} xi_{m,n} conj(xi_{m',n'}) Ai_{m,m'} As_{n,n'}
// with A_{m,m'} = int_NA dOmega w_fiber(r) mask(r) sum_pol F_m F_m'* — a
// frequency-independent Hermitian positive semidefinite matrix per photon.
// ---------------------------------------------------------------------------

struct SpectralEvaluator::Impl {
    const Scenario* scenario;
    DetectionConfig det;
    const OverlapTable* table;
    EngineOptions options;
    std::size_t n_modes = 0;
    std::vector<complexd> a_idler;   // n x n
    std::vector<complexd> a_signal;
    bool blocked = false;            // every quadrature node masked away

    std::vector<complexd> angular_matrix(const AngularQuadrature& quad,
                                         const std::array<double, 2>* fixed_pol,
                                         bool* any_open) const {
        const std::size_t n = n_modes;
        const std::size_t n_nodes = quad.nodes.size();

        struct Tile {
            std::vector<complexd> a;
            bool open = false;
        };
        Tile init;
        init.a.assign(n * n, complexd{0.0, 0.0});

        Tile total = parallel_tiles<Tile>(
            n_nodes, 512, options.threads, init,
            [&](std::size_t begin, std::size_t end, Tile& tile) {
                std::vector<complexd> f(n);
                std::vector<PolarizedAmplitude> amp(n);
                for (std::size_t q = begin; q < end; ++q) {
                    const AngularNode& node = quad.nodes[q];
                    double w = node.weight;
                    if (det.knife) {
                        const auto rc =
                            direction_to_collimated_plane(node.theta, node.phi, det);
                        if (!det.knife->passes(rc[0])) continue;
                    }
                    if (det.fiber)
                        w *= det.fiber->amplitude(
                            direction_to_fiber_plane(node.theta, node.phi, det));
                    tile.open = true;
                    for (std::size_t m = 0; m < n; ++m)
                        amp[m] = scenario->modes[m].far_field.sample(node.theta, node.phi);
                    if (fixed_pol) {
                        for (std::size_t m = 0; m < n; ++m) f[m] = amp[m].project(*fixed_pol);
                        for (std::size_t m = 0; m < n; ++m)
                            for (std::size_t j = 0; j < n; ++j)
                                tile.a[m * n + j] += w * f[m] * std::conj(f[j]);
                    } else {
                        for (std::size_t m = 0; m < n; ++m)
                            for (std::size_t j = 0; j < n; ++j)
                                tile.a[m * n + j] +=
                                    w * (amp[m].e_theta * std::conj(amp[j].e_theta) +
                                         amp[m].e_phi * std::conj(amp[j].e_phi));
                    }
                }
            },
            [&](Tile& acc, const Tile& part) {
                for (std::size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += part.a[i];
                acc.open = acc.open || part.open;
            });

        if (any_open) *any_open = total.open;
        return total.a;
    }
};

SpectralEvaluator::SpectralEvaluator(const Scenario& scenario, const DetectionConfig& det,
                                     const OverlapTable& table, const EngineOptions& options)
    : impl_(new Impl) {
    require_valid(scenario);
    validate_detection(det);
    if (table.mode_count() != scenario.modes.size())
        throw DataError("spectral evaluator: table does not match the scenario");

    impl_->scenario = &scenario;
    impl_->det = det;
    impl_->table = &table;
    impl_->options = options;
    impl_->n_modes = scenario.modes.size();

    const AngularQuadrature quad =
        AngularQuadrature::cap(det.theta_max(), options.theta_order, options.phi_order);

    bool open_i = false, open_s = false;
    if (det.polarization) {
        impl_->a_idler = impl_->angular_matrix(quad, &det.polarization->d_idler, &open_i);
        impl_->a_signal = impl_->angular_matrix(quad, &det.polarization->d_signal, &open_s);
    } else {
        // Both photons share path, weights and the polarization sum; one
        // angular reduction serves idler and signal alike.
        impl_->a_idler = impl_->angular_matrix(quad, nullptr, &open_i);
        impl_->a_signal = impl_->a_idler;
        open_s = open_i;
    }
    impl_->blocked = !(open_i && open_s);
}

SpectralEvaluator::~SpectralEvaluator() { delete impl_; }

SpectralEvaluator::SpectralEvaluator(SpectralEvaluator&& other) noexcept : impl_(other.impl_) {
    other.impl_ = nullptr;
}

bool SpectralEvaluator::cone_blocked() const { return impl_->blocked; }

const std::vector<complexd>& SpectralEvaluator::idler_matrix() const { return impl_->a_idler; }
const std::vector<complexd>& SpectralEvaluator::signal_matrix() const { return impl_->a_signal; }

double SpectralEvaluator::density(double omega_s) const {
    const Impl& im = *impl_;
    if (im.blocked) return 0.0;
    if (!im.det.filter_passes(im.scenario->pump_omega, omega_s)) return 0.0;

    const std::size_t n = im.n_modes;
    const std::vector<complexd> xi = xi_matrix(*im.table, omega_s);

    // sum_{m,m'} Ai_{m,m'} * sum_{n,n'} xi_{m,n} conj(xi_{m',n'}) As_{n,n'}
    complexd acc{0.0, 0.0};
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t mp = 0; mp < n; ++mp) {
            complexd inner{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t jp = 0; jp < n; ++jp)
                    inner += xi[m * n + j] * std::conj(xi[mp * n + jp]) * im.a_signal[j * n + jp];
            acc += im.a_idler[m * n + mp] * inner;
        }

    const double c = prefactor_c(im.scenario->pump_omega, omega_s, im.scenario->n_idler,
                                 im.scenario->n_signal);
    return c * acc.real();
}

std::vector<complexd> SpectralEvaluator::density_breakdown(double omega_s) const {
    const Impl& im = *impl_;
    const std::size_t n = im.n_modes;
    std::vector<complexd> out(n * n, complexd{0.0, 0.0});
    if (im.blocked || !im.det.filter_passes(im.scenario->pump_omega, omega_s)) return out;

    const std::vector<complexd> xi = xi_matrix(*im.table, omega_s);
    const double c = prefactor_c(im.scenario->pump_omega, omega_s, im.scenario->n_idler,
                                 im.scenario->n_signal);

    // contribution(m,n) = c * xi_{m,n} * sum_{m',n'} conj(xi_{m',n'}) Ai_{m,m'} As_{n,n'}
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) {
            complexd partner{0.0, 0.0};
            for (std::size_t mp = 0; mp < n; ++mp)
                for (std::size_t jp = 0; jp < n; ++jp)
                    partner += std::conj(xi[mp * n + jp]) * im.a_idler[m * n + mp] *
                               im.a_signal[j * n + jp];
            out[m * n + j] = c * xi[m * n + j] * partner;
        }
    return out;
}

RateResult detected_pair_rate(const Scenario& scenario, const DetectionConfig& det,
                              const std::vector<double>& omega_grid, const OverlapTable& table,
                              const EngineOptions& options) {
    if (omega_grid.size() < 2) throw DataError("detected rate: need at least 2 omega points");
    for (double w : omega_grid) {
        require_omega_in_range(scenario.pump_omega, w);
        if (det.filter && !det.filter->contains(w))
            throw std::domain_error("detected rate: omega grid extends outside the filter window");
    }

    const SpectralEvaluator eval(scenario, det, table, options);

    RateResult result;
    result.metadata.theta_order = options.theta_order;
    result.metadata.phi_order = options.phi_order;
    result.metadata.omega_points = omega_grid.size();

    if (eval.cone_blocked()) {
        result.metadata.warnings.push_back("collection cone fully blocked; rate is 0");
        result.metadata.richardson_error = 0.0;
        return result;
    }

    std::vector<double> density(omega_grid.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i) density[i] = eval.density(omega_grid[i]);

    const SimpsonResult sim = simpson_integrate(omega_grid, density);
    result.rate = sim.value;
    result.metadata.richardson_error = sim.richardson_error;
    if (sim.trapezoid_tail)
        result.metadata.warnings.push_back("even omega point count; trapezoid tail interval");
    if (sim.richardson_error < 0.0) {
        result.metadata.warnings.push_back("omega grid too coarse for a Richardson estimate");
    } else if (std::abs(result.rate) > 0.0 &&
               sim.richardson_error > options.omega_tolerance * std::abs(result.rate)) {
        result.metadata.converged = false;
        result.metadata.warnings.push_back("frequency integral above the requested tolerance");
    }

    if (options.with_breakdown) {
        const std::size_t n = table.mode_count();
        std::vector<complexd> sums(n * n, complexd{0.0, 0.0});
        // Simpson weights per grid point, matching simpson_integrate.
        const double h = (omega_grid.back() - omega_grid.front()) /
                         static_cast<double>(omega_grid.size() - 1);
        std::vector<double> sw(omega_grid.size(), 0.0);
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
        for (std::size_t p = 0; p < omega_grid.size(); ++p) {
            if (sw[p] == 0.0) continue;
            const std::vector<complexd> bd = eval.density_breakdown(omega_grid[p]);
            for (std::size_t q = 0; q < sums.size(); ++q) sums[q] += sw[p] * bd[q];
        }
        result.breakdown.reserve(n * n);
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < n; ++j)
                result.breakdown.push_back(
                    {table.labels()[m], table.labels()[j], sums[m * n + j]});
    }
    return result;
}

}  // namespace spdcq
