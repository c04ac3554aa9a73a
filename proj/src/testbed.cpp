#include "spdcq/testbed.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "spdcq/constants.hpp"
#include "spdcq/parallel.hpp"
#include "spdcq/validation.hpp"

namespace spdcq {

namespace {

namespace k = constants;
using json = nlohmann::json;

std::array<double, 3> normalized(std::array<double, 3> v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (!(n > 0.0)) throw DataError("synthetic scenario: zero direction vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

NearFieldGrid gaussian_field(const GridSpec& grid, const std::array<double, 3>& widths,
                             const std::array<double, 3>& center,
                             const std::array<double, 3>& polarization, complexd scale) {
    NearFieldGrid field;
    field.origin = grid.origin;
    field.spacing = grid.spacing;
    field.shape = grid.shape;
    field.values.resize(field.node_count() * 3);

    const std::array<double, 3> pol = normalized(polarization);
    for (std::size_t i = 0; i < grid.shape[0]; ++i)
        for (std::size_t j = 0; j < grid.shape[1]; ++j)
            for (std::size_t l = 0; l < grid.shape[2]; ++l) {
                const std::array<double, 3> r = field.node_position(i, j, l);
                double arg = 0.0;
                for (std::size_t a = 0; a < 3; ++a) {
                    const double u = (r[a] - center[a]) / widths[a];
                    arg += u * u;
                }
                const complexd v = scale * std::exp(-arg);
                for (std::size_t a = 0; a < 3; ++a)
                    field.values[field.value_index(i, j, l, a)] = v * pol[a];
            }
    return field;
}

FarFieldAmplitude dipole_far_field(const SyntheticModeSpec& spec) {
    FarFieldAmplitude ff;
    const std::size_t nt = spec.far_n_theta;
    const std::size_t np = spec.far_n_phi;
    ff.theta_nodes.resize(nt);
    ff.phi_nodes.resize(np);
    for (std::size_t i = 0; i < nt; ++i)
        ff.theta_nodes[i] = k::pi * static_cast<double>(i) / static_cast<double>(nt - 1);
    for (std::size_t i = 0; i < np; ++i)
        ff.phi_nodes[i] = 2.0 * k::pi * static_cast<double>(i) / static_cast<double>(np);
    ff.amp_theta.resize(nt * np);
    ff.amp_phi.resize(nt * np);

    const std::array<double, 3> d = normalized(spec.dipole_orientation);
    for (std::size_t it = 0; it < nt; ++it) {
        const double theta = ff.theta_nodes[it];
        const double st = std::sin(theta), ct = std::cos(theta);
        double envelope = 1.0;
        if (spec.theta_envelope_width) {
            const double u = (theta - spec.theta_envelope_center) / *spec.theta_envelope_width;
            envelope = std::exp(-u * u);
        }
        for (std::size_t ip = 0; ip < np; ++ip) {
            const double phi = ff.phi_nodes[ip];
            const double cp = std::cos(phi), sp = std::sin(phi);
            // (r_hat x d_hat) x r_hat = d_hat - (d_hat . r_hat) r_hat,
            // projected as F_theta = d . theta_hat, F_phi = d . phi_hat.
            const double d_theta = d[0] * ct * cp + d[1] * ct * sp - d[2] * st;
            const double d_phi = -d[0] * sp + d[1] * cp;
            const complexd s = spec.far_scale * envelope;
            ff.amp_theta[ff.index(it, ip)] = s * d_theta;
            ff.amp_phi[ff.index(it, ip)] = s * d_phi;
        }
    }
    return ff;
}

}  // namespace

Scenario make_synthetic_scenario(const GridSpec& grid, const std::vector<SyntheticModeSpec>& specs,
                                 const SyntheticPumpSpec& pump, const SyntheticChi2Spec& chi2,
                                 double n_idler, double n_signal, double volume) {
    if (specs.empty()) throw DataError("synthetic scenario: no modes");

    Scenario scenario;
    scenario.pump_omega = pump.omega;
    scenario.pump_intensity = pump.intensity;
    scenario.pump_field =
        gaussian_field(grid, pump.widths, pump.center, pump.polarization, pump.amplitude);
    scenario.n_idler = n_idler;
    scenario.n_signal = n_signal;
    scenario.volume = volume;

    for (const SyntheticModeSpec& spec : specs) {
        QnmMode mode;
        mode.label = spec.label;
        mode.eigenfrequency = spec.eigenfrequency;
        mode.near_field = gaussian_field(grid, spec.near_widths, spec.near_center,
                                         spec.near_polarization, spec.near_scale);
        mode.far_field = dipole_far_field(spec);
        scenario.modes.push_back(std::move(mode));
    }

    Chi2Map& map = scenario.chi2;
    map.shape = grid.shape;
    map.regions = {chi2.tensor};
    map.region_mask.assign(map.node_count(), 1);
    if (chi2.box_lo && chi2.box_hi) {
        for (std::size_t i = 0; i < grid.shape[0]; ++i)
            for (std::size_t j = 0; j < grid.shape[1]; ++j)
                for (std::size_t l = 0; l < grid.shape[2]; ++l) {
                    const bool inside = i >= (*chi2.box_lo)[0] && i < (*chi2.box_hi)[0] &&
                                        j >= (*chi2.box_lo)[1] && j < (*chi2.box_hi)[1] &&
                                        l >= (*chi2.box_lo)[2] && l < (*chi2.box_hi)[2];
                    if (!inside)
                        map.region_mask[(i * grid.shape[1] + j) * grid.shape[2] + l] = 0;
                }
    }

    require_valid(scenario);
    return scenario;
}

std::vector<ComplexFrequency> slab_eigenfrequencies(double n, double thickness,
                                                    std::size_t count) {
    if (!(n > 1.0)) throw std::domain_error("slab eigenfrequencies: need n > 1 for confinement");
    if (!(thickness > 0.0)) throw std::domain_error("slab eigenfrequencies: thickness must be positive");

    const double r = (n - 1.0) / (n + 1.0);
    const double scale = k::speed_of_light / (n * thickness);
    std::vector<ComplexFrequency> modes;
    modes.reserve(count);
    for (std::size_t q = 1; q <= count; ++q)
        modes.push_back({scale * static_cast<double>(q) * k::pi, -scale * std::log(r)});
    return modes;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct WelfordState {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t count = 0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    // Chan et al. pairwise combination; exact zeros stay exact for constant
    // integrands.
    void merge(const WelfordState& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(other.count);
        const double delta = other.mean - mean;
        const double n = na + nb;
        mean += delta * nb / n;
        m2 += other.m2 + delta * delta * na * nb / n;
        count += other.count;
    }
};

MonteCarloEstimate run_monte_carlo(const DetectionConfig& det, double omega_lo, double omega_hi,
                                   std::uint64_t seed, std::size_t samples, int threads,
                                   const IntegrandOverride& integrand) {
    validate_detection(det);
    if (samples < 10000) throw std::invalid_argument("monte carlo: need at least 1e4 samples");
    if (!(omega_hi > omega_lo)) throw DataError("monte carlo: zero-measure frequency domain");

    const double u_lo = std::cos(det.theta_max());
    if (!(u_lo < 1.0)) throw DataError("monte carlo: zero-measure collection cone");
    const double cone_solid_angle = 2.0 * k::pi * (1.0 - u_lo);
    const double measure = (omega_hi - omega_lo) * cone_solid_angle * cone_solid_angle;

    // Fixed substream layout: the estimate depends on the seed only, never on
    // the worker count.
    constexpr std::size_t n_streams = 64;
    const std::size_t base = samples / n_streams;
    const std::size_t extra = samples % n_streams;

    WelfordState total = parallel_tiles<WelfordState>(
        n_streams, 1, threads, WelfordState{},
        [&](std::size_t begin, std::size_t end, WelfordState& state) {
            for (std::size_t stream = begin; stream < end; ++stream) {
                std::mt19937_64 rng(splitmix64(seed ^ (0x5851f42d4c957f2dULL * (stream + 1))));
                std::uniform_real_distribution<double> unit(0.0, 1.0);
                const std::size_t n_here = base + (stream < extra ? 1 : 0);
                for (std::size_t s = 0; s < n_here; ++s) {
                    const double omega_s = omega_lo + (omega_hi - omega_lo) * unit(rng);
                    std::array<double, 2> dir_i, dir_s;
                    for (auto* dir : {&dir_i, &dir_s}) {
                        const double u = u_lo + (1.0 - u_lo) * unit(rng);
                        (*dir)[0] = std::acos(u);
                        (*dir)[1] = 2.0 * k::pi * unit(rng);
                    }
                    state.add(integrand(dir_i, dir_s, omega_s));
                }
            }
        },
        [](WelfordState& acc, const WelfordState& part) { acc.merge(part); });

    MonteCarloEstimate estimate;
    estimate.samples = samples;
    estimate.seed = seed;
    estimate.rate = measure * total.mean;
    const double n = static_cast<double>(total.count);
    const double variance = total.count > 1 ? total.m2 / (n - 1.0) : 0.0;
    estimate.standard_error = measure * std::sqrt(variance / n);
    return estimate;
}

}  // namespace

MonteCarloEstimate monte_carlo_rate(const Scenario& scenario, const DetectionConfig& det,
                                    const OverlapTable& table, double omega_lo, double omega_hi,
                                    std::uint64_t seed, std::size_t samples, int threads) {
    require_valid(scenario);
    return run_monte_carlo(det, omega_lo, omega_hi, seed, samples, threads,
                           [&](const std::array<double, 2>& dir_i,
                               const std::array<double, 2>& dir_s, double omega_s) {
                               return detected_rate_integrand(scenario, det, table, dir_i, dir_s,
                                                              omega_s);
                           });
}

MonteCarloEstimate monte_carlo_rate_with_integrand(const DetectionConfig& det,
                                                   double omega_lo, double omega_hi,
                                                   std::uint64_t seed, std::size_t samples,
                                                   const IntegrandOverride& integrand,
                                                   int threads) {
    return run_monte_carlo(det, omega_lo, omega_hi, seed, samples, threads, integrand);
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

constexpr double kPumpWavelength = 725e-9;
constexpr double kPumpIntensity = 1e9;      // W/m^2
constexpr double kPumpAmplitude = 5.85e5;   // V/m, plane wave at kPumpIntensity in LN
constexpr double kChiZzz = 5.4e-11;         // m/V
constexpr double kVolume = 1.75e-18;        // m^3

GridSpec default_grid() {
    GridSpec grid;
    grid.shape = {20, 20, 8};
    const std::array<double, 3> box{1.6e-6, 1.6e-6, 0.56e-6};
    for (std::size_t a = 0; a < 3; ++a) {
        grid.spacing[a] = box[a] / static_cast<double>(grid.shape[a]);
        grid.origin[a] = -0.5 * box[a];
    }
    return grid;
}

SyntheticPumpSpec default_pump() {
    SyntheticPumpSpec pump;
    pump.omega = k::omega_from_wavelength(kPumpWavelength);
    pump.intensity = kPumpIntensity;
    pump.widths = {2.5e-6, 2.5e-6, 0.4e-6};
    pump.center = {0.0, 0.0, 0.0};
    pump.polarization = {0.0, 0.0, 1.0};
    pump.amplitude = kPumpAmplitude;
    return pump;
}

SyntheticChi2Spec default_chi2() {
    SyntheticChi2Spec chi2;
    chi2.tensor(2, 2, 2) = kChiZzz;
    return chi2;
}

SyntheticModeSpec directional_mode(const std::string& label, double omega, double q,
                                   double lobe_width) {
    SyntheticModeSpec mode;
    mode.label = label;
    mode.eigenfrequency = {omega, omega / (2.0 * q)};
    mode.near_widths = {0.35e-6, 0.35e-6, 0.18e-6};
    mode.near_polarization = {0.0, 0.0, 1.0};
    mode.dipole_orientation = {1.0, 0.0, 0.0};  // lobe along the collection axis
    mode.theta_envelope_width = lobe_width;
    return mode;
}

Scenario single_dipole_scenario() {
    const double omega_deg = 0.5 * k::omega_from_wavelength(kPumpWavelength);
    return make_synthetic_scenario(default_grid(), {directional_mode("1", omega_deg, 25.0, 0.30)},
                                   default_pump(), default_chi2());
}

Scenario two_mode_scenario() {
    const double omega_deg = 0.5 * k::omega_from_wavelength(kPumpWavelength);
    SyntheticModeSpec mode2 = directional_mode("2", omega_deg * 1.045, 18.0, 0.45);
    mode2.near_widths = {0.42e-6, 0.30e-6, 0.18e-6};
    mode2.near_scale = complexd{0.8, 0.3};
    return make_synthetic_scenario(default_grid(),
                                   {directional_mode("1", omega_deg, 25.0, 0.30), mode2},
                                   default_pump(), default_chi2());
}

Scenario three_mode_random_scenario(std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed + 17));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto random_dir = [&]() {
        // uniform on the sphere
        const double u = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, 2.0 * k::pi);
        const double s = std::sqrt(1.0 - u * u);
        return std::array<double, 3>{s * std::cos(phi), s * std::sin(phi), u};
    };

    const double omega_deg = 0.5 * k::omega_from_wavelength(kPumpWavelength);
    GridSpec grid = default_grid();
    grid.shape = {12, 12, 6};
    for (std::size_t a = 0; a < 3; ++a)
        grid.spacing[a] = (a < 2 ? 1.6e-6 : 0.56e-6) / static_cast<double>(grid.shape[a]);

    std::vector<SyntheticModeSpec> specs;
    for (int i = 0; i < 3; ++i) {
        SyntheticModeSpec mode;
        mode.label = std::to_string(i + 1);
        const double omega = omega_deg * uniform(0.92, 1.08);
        mode.eigenfrequency = {omega, omega / (2.0 * uniform(15.0, 60.0))};
        mode.near_widths = {uniform(0.2e-6, 0.5e-6), uniform(0.2e-6, 0.5e-6),
                            uniform(0.1e-6, 0.25e-6)};
        mode.near_center = {uniform(-0.2e-6, 0.2e-6), uniform(-0.2e-6, 0.2e-6), 0.0};
        mode.near_polarization = random_dir();
        mode.near_scale = complexd{uniform(0.5, 1.5), uniform(-0.5, 0.5)};
        mode.dipole_orientation = random_dir();
        mode.far_scale = complexd{uniform(0.5, 1.5), uniform(-0.5, 0.5)};
        mode.theta_envelope_width = uniform(0.3, 0.8);
        mode.far_n_theta = 61;
        mode.far_n_phi = 120;
        specs.push_back(mode);
    }

    // chi2 symmetric in its first two indices: G is then pair-exchange
    // symmetric and the two-photon amplitude obeys the i<->s identity.
    SyntheticChi2Spec chi2;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a; b < 3; ++b)
            for (std::size_t g = 0; g < 3; ++g) {
                const double v = uniform(-1.0, 1.0) * kChiZzz;
                chi2.tensor(a, b, g) = v;
                chi2.tensor(b, a, g) = v;
            }

    SyntheticPumpSpec pump = default_pump();
    pump.polarization = random_dir();
    pump.amplitude = complexd{uniform(0.5, 1.5) * kPumpAmplitude, uniform(-0.3, 0.3) * kPumpAmplitude};
    return make_synthetic_scenario(grid, specs, pump, chi2);
}

Scenario sweep_member_scenario(double fs) {
    // Lateral scaling shifts the eigenfrequency (larger resonator, lower
    // frequency), stretches the mode envelope and grows the volume.
    const double omega_deg = 0.5 * k::omega_from_wavelength(kPumpWavelength);
    const double lateral = 1.0 + fs;

    SyntheticModeSpec mode = directional_mode("1", omega_deg * (1.0 - 0.12 * fs), 25.0, 0.30);
    mode.near_widths[0] *= lateral;
    mode.near_widths[1] *= lateral;

    GridSpec grid = default_grid();
    SyntheticPumpSpec pump = default_pump();
    SyntheticChi2Spec chi2 = default_chi2();
    return make_synthetic_scenario(grid, {mode}, pump, chi2, 1.45, 1.45,
                                   kVolume * lateral * lateral);
}

}  // namespace

Scenario make_preset_scenario(const std::string& options_json) {
    json options;
    try {
        options = json::parse(options_json);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("preset options: invalid JSON: ") + e.what());
    }
    if (!options.contains("preset") || !options["preset"].is_string())
        throw std::invalid_argument("preset options: missing 'preset' string");

    const std::string preset = options["preset"].get<std::string>();
    const std::uint64_t seed = options.value("seed", 0ULL);

    if (preset == "single-dipole") return single_dipole_scenario();
    if (preset == "two-mode") return two_mode_scenario();
    if (preset == "three-mode-random") return three_mode_random_scenario(seed);
    if (preset == "sweep-member") {
        if (!options.contains("fs") || !options["fs"].is_number())
            throw std::invalid_argument("preset options: sweep-member needs a numeric 'fs'");
        return sweep_member_scenario(options["fs"].get<double>());
    }
    throw std::invalid_argument("unknown preset '" + preset + "'");
}

std::vector<std::pair<double, Scenario>> make_sweep_family(std::uint64_t /*seed*/) {
    std::vector<std::pair<double, Scenario>> family;
    for (double fs : {-0.15, -0.10, -0.05, 0.0, 0.05, 0.10, 0.15})
        family.emplace_back(fs, sweep_member_scenario(fs));
    return family;
}

}  // namespace spdcq
