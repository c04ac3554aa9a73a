#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spdcq/constants.hpp"
#include "spdcq/observables.hpp"
#include "spdcq/quadrature.hpp"
#include "test_helpers.hpp"

using namespace spdcq;
namespace tt = spdcq::testing;
namespace k = spdcq::constants;

namespace {

std::vector<double> default_grid(const Scenario& s, std::size_t count = 81) {
    const double omega_deg = s.degenerate_omega();
    const double gamma = s.modes[0].eigenfrequency.gamma;
    return tt::linspace(omega_deg - 5.0 * gamma, omega_deg + 5.0 * gamma, count);
}

DetectionConfig bare_detection(double na = 0.7) {
    DetectionConfig det;
    det.na = na;
    return det;
}

// Micro-optics detection: the mapped pattern spans tens of microns, so
// micron-scale fiber structure matters (spectral broadening test).
DetectionConfig micro_detection() {
    DetectionConfig det;
    det.na = 0.7;
    det.focal_length = 50e-6;
    det.magnification = 1.0;
    det.fiber = FiberMode{8e-6, {0.0, 0.0}};
    return det;
}

}  // namespace

TEST_CASE("spectrum: single-mode shape follows C |xi|^2 times a fixed angular factor") {
    const Scenario s = make_preset_scenario(R"({"preset":"single-dipole"})");
    const auto grid = default_grid(s, 101);
    const OverlapTable table = xi_table(s, grid, 1);
    const SpectrumCurve curve = spectrum(s, bare_detection(), grid, table);
    REQUIRE(curve.density.size() == grid.size());

    const ComplexFrequency ef = s.modes[0].eigenfrequency;
    const complexd wt = ef.value();
    const complexd g = table.g(0, 0);
    const auto closed_form = [&](double w) {
        const complexd s_mn = (s.pump_omega - w - wt) * wt * (w - wt) * wt;
        const double wi = s.pump_omega - w;
        const double c = 8.0 / (k::pi * k::vacuum_permeability * k::vacuum_permeability) *
                         s.n_idler * s.n_signal * wi * wi * wi * w * w * w /
                         std::pow(k::speed_of_light, 6.0);
        return c * std::norm(g / s_mn);
    };

    // calibrate the angular factor at the peak, then match the shape everywhere
    const std::size_t mid = grid.size() / 2;
    const double factor = curve.density[mid] / closed_form(grid[mid]);
    CHECK(factor > 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expected = factor * closed_form(grid[i]);
        CHECK(std::abs(curve.density[i] - expected) <= 1e-9 * expected);
    }
    SUBCASE("wavelength axis is 2 pi c / omega") {
        for (std::size_t i = 0; i < grid.size(); i += 20)
            CHECK(curve.wavelength[i] ==
                  doctest::Approx(2.0 * k::pi * k::speed_of_light / grid[i]).epsilon(1e-15));
    }
    SUBCASE("density is non-negative") {
        for (double d : curve.density) CHECK(d >= 0.0);
    }
}

TEST_CASE("spectrum: integral reproduces the detected rate") {
    const Scenario s = make_preset_scenario(R"({"preset":"two-mode"})");
    const auto grid = default_grid(s, 81);
    const OverlapTable table = xi_table(s, grid, 1);
    const SpectrumCurve curve = spectrum(s, bare_detection(), grid, table);
    const RateResult rate = detected_pair_rate(s, bare_detection(), grid, table);
    const SimpsonResult integral = simpson_integrate(curve.omega_s, curve.density);
    CHECK(std::abs(integral.value - rate.rate) <= 1e-12 * rate.rate);
}

TEST_CASE("spectrum: both-photon filter support") {
    const Scenario s = make_preset_scenario(R"({"preset":"single-dipole"})");
    const double omega_deg = s.degenerate_omega();
    // window asymmetric about the degenerate frequency: signal frequencies in
    // the upper part put the idler below the window -> zero density
    DetectionConfig det = bare_detection();
    det.filter = SpectralWindow{omega_deg * 0.98, omega_deg * 1.06};
    const auto grid = tt::linspace(omega_deg * 0.98, omega_deg * 1.06, 81);
    const OverlapTable table = xi_table(s, grid, 1);
    const SpectrumCurve curve = spectrum(s, det, grid, table);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double omega_i = s.pump_omega - grid[i];
        if (omega_i < det.filter->omega_min || omega_i > det.filter->omega_max) {
            CHECK(curve.density[i] == 0.0);
        } else {
            CHECK(curve.density[i] > 0.0);
        }
    }
}

TEST_CASE("spectrum: fiber offset reduces the peak-to-background ratio") {
    const Scenario s = make_preset_scenario(R"({"preset":"two-mode"})");
    const double omega_deg = s.degenerate_omega();
    const double omega_2 = s.modes[1].eigenfrequency.omega;
    const auto grid = tt::linspace(omega_deg * 0.97, omega_2 * 1.01, 161);
    const OverlapTable table = xi_table(s, grid, 1);

    const auto ratio_with_offset = [&](double offset) {
        DetectionConfig det = micro_detection();
        det.fiber->offset = {offset, 0.0};
        const SpectrumCurve curve = spectrum(s, det, grid, table);
        // peak at the degenerate mode vs background at the detuned mode
        std::size_t i_peak = 0, i_bg = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::abs(grid[i] - omega_deg) < std::abs(grid[i_peak] - omega_deg)) i_peak = i;
            if (std::abs(grid[i] - omega_2) < std::abs(grid[i_bg] - omega_2)) i_bg = i;
        }
        REQUIRE(curve.density[i_bg] > 0.0);
        return curve.density[i_peak] / curve.density[i_bg];
    };

    const double centered = ratio_with_offset(0.0);
    const double shifted = ratio_with_offset(2e-6);
    CHECK(shifted < centered);
}

TEST_CASE("far-field map: dipole pattern within the cone") {
    // z-oriented dipole: polarization-summed power goes as sin^2(theta)
    GridSpec grid_spec;
    grid_spec.shape = {8, 8, 4};
    for (std::size_t a = 0; a < 3; ++a) {
        grid_spec.spacing[a] = 1.0e-6 / static_cast<double>(grid_spec.shape[a]);
        grid_spec.origin[a] = -0.5e-6;
    }
    SyntheticModeSpec mode;
    mode.label = "1";
    const double omega_deg = 0.5 * k::omega_from_wavelength(725e-9);
    mode.eigenfrequency = {omega_deg, omega_deg / 50.0};
    mode.near_widths = {0.3e-6, 0.3e-6, 0.2e-6};
    mode.dipole_orientation = {0.0, 0.0, 1.0};
    mode.far_n_theta = 721;
    mode.far_n_phi = 16;
    SyntheticPumpSpec pump;
    pump.omega = k::omega_from_wavelength(725e-9);
    pump.widths = {2e-6, 2e-6, 0.4e-6};
    pump.polarization = {0.0, 0.0, 1.0};
    pump.amplitude = 1.0e5;
    SyntheticChi2Spec chi2;
    chi2.tensor(2, 2, 2) = 5.4e-11;
    const Scenario s = make_synthetic_scenario(grid_spec, {mode}, pump, chi2);

    const auto grid = default_grid(s, 41);
    const OverlapTable table = xi_table(s, grid, 1);
    const FarFieldMap map = farfield_map(s, bare_detection(), grid, 61, 24, table);
    REQUIRE(map.density.size() == 61 * 24);

    SUBCASE("shape matches sin^2 theta") {
        const double ref_theta = map.theta_nodes.back();
        const double ref = map.density[(61 - 1) * 24];
        REQUIRE(ref > 0.0);
        for (std::size_t it = 1; it < 61; ++it) {
            const double expected = ref * std::pow(std::sin(map.theta_nodes[it]), 2.0) /
                                    std::pow(std::sin(ref_theta), 2.0);
            CHECK(std::abs(map.density[it * 24] - expected) <= 1e-4 * std::abs(ref));
        }
    }
    SUBCASE("azimuthal symmetry is inherited") {
        for (std::size_t it = 0; it < 61; ++it)
            for (std::size_t ip = 1; ip < 24; ++ip) {
                const double a = map.density[it * 24];
                const double b = map.density[it * 24 + ip];
                CHECK(std::abs(a - b) <= 1e-8 * std::max(std::abs(a), 1e-300));
            }
    }
    SUBCASE("map integral is consistent with the detected rate") {
        // midpoint-ish integral over the map: sum density * sin(theta) dtheta dphi
        const double dt = map.theta_nodes[1] - map.theta_nodes[0];
        const double dp = map.phi_nodes[1] - map.phi_nodes[0];
        double integral = 0.0;
        for (std::size_t it = 0; it < 61; ++it) {
            const double w = (it == 0 || it == 60) ? 0.5 : 1.0;  // trapezoid in theta
            for (std::size_t ip = 0; ip < 24; ++ip)
                integral += w * map.density[it * 24 + ip] * std::sin(map.theta_nodes[it]) * dt * dp;
        }
        const double rate = detected_pair_rate(s, bare_detection(), grid, table).rate;
        CHECK(integral == doctest::Approx(rate).epsilon(1e-3));
    }
}

TEST_CASE("far-field map: tiny NA restricts support to the axis") {
    const Scenario s = make_preset_scenario(R"({"preset":"single-dipole"})");
    const auto grid = default_grid(s, 21);
    const OverlapTable table = xi_table(s, grid, 1);
    const FarFieldMap map = farfield_map(s, bare_detection(0.05), grid, 11, 8, table);
    CHECK(map.theta_nodes.back() <= std::asin(0.05) + 1e-12);
    CHECK(map.density[0] > 0.0);  // x-dipole peaks on axis
}

TEST_CASE("knife scan: limits and monotonicity") {
    const Scenario s = make_preset_scenario(R"({"preset":"single-dipole"})");
    const auto grid = default_grid(s, 41);
    const OverlapTable table = xi_table(s, grid, 1);
    DetectionConfig det = bare_detection();
    det.fiber = FiberMode{1.0e-3, {0.0, 0.0}};

    const double span = det.focal_length * det.na;
    const auto positions = tt::linspace(-2.0 * span, 2.0 * span, 21);
    const KnifeScan scan = knife_scan(s, det, positions, grid, table);
    REQUIRE(scan.rates.size() == positions.size());

    DetectionConfig unmasked = det;
    const double full = detected_pair_rate(s, unmasked, grid, table).rate;

    // orientation +1 blocks x > position: fully retracted (right) edge passes
    // everything, fully inserted blocks everything
    CHECK(scan.rates.back() == doctest::Approx(full).epsilon(1e-12));
    CHECK(scan.rates.front() == 0.0);
    for (std::size_t i = 1; i < scan.rates.size(); ++i)
        CHECK(scan.rates[i] >= scan.rates[i - 1] * (1.0 - 1e-12));

    SUBCASE("positions must be sorted") {
        CHECK_THROWS_AS(knife_scan(s, det, {1.0, 0.0}, grid, table), DataError);
    }
}

TEST_CASE("knife scan: erf model fits a Gaussian-like single-mode lobe") {
    const Scenario s = make_preset_scenario(R"({"preset":"single-dipole"})");
    const auto grid = default_grid(s, 41);
    const OverlapTable table = xi_table(s, grid, 1);
    DetectionConfig det = bare_detection();
    det.fiber = FiberMode{1.0e-3, {0.0, 0.0}};

    const double span = det.focal_length * det.na;
    const auto positions = tt::linspace(-1.5 * span, 1.5 * span, 41);
    const KnifeScan scan = knife_scan(s, det, positions, grid, table);
    const ErfFit fit = fit_erf(scan);
    CHECK(fit.m > 0.0);
    CHECK(fit.residual_norm < 0.01 * std::abs(fit.amplitude));
}

TEST_CASE("fit_erf: noiseless recovery to 1e-6") {
    const auto x = tt::linspace(-3.0, 3.0, 41);
    std::vector<double> y;
    for (double v : x) y.push_back(0.5 + 0.5 * std::erf((v - 0.1) / 0.7));
    const ErfFit fit = fit_erf(x, y);
    CHECK(std::abs(fit.m - 0.7) <= 1e-6 * 0.7);
    CHECK(std::abs(fit.x0 - 0.1) <= 1e-6 * 0.7);
    CHECK(std::abs(fit.amplitude - 0.5) <= 1e-6);
    CHECK(std::abs(fit.offset - 0.5) <= 1e-6);
    CHECK(fit.residual_norm <= 1e-10);
}

TEST_CASE("fit_erf: 95% confidence coverage under 1% noise") {
    const auto x = tt::linspace(-3.0, 3.0, 41);
    std::mt19937_64 rng(123);
    std::normal_distribution<double> noise(0.0, 0.005);  // 1% of the amplitude

    int covered_m = 0, covered_x0 = 0;
    for (int run = 0; run < 100; ++run) {
        std::vector<double> y;
        for (double v : x) y.push_back(0.5 + 0.5 * std::erf((v - 0.1) / 0.7) + noise(rng));
        const ErfFit fit = fit_erf(x, y);
        if (std::abs(fit.m - 0.7) <= fit.ci95[0]) ++covered_m;
        if (std::abs(fit.x0 - 0.1) <= fit.ci95[1]) ++covered_x0;
    }
    CHECK(covered_m >= 90);
    CHECK(covered_x0 >= 90);
}

TEST_CASE("fit_erf: degenerate and misuse cases") {
    const auto x = tt::linspace(-1.0, 1.0, 21);
    CHECK_THROWS_AS(fit_erf(x, std::vector<double>(21, 3.0)), DataError);
    CHECK_THROWS_AS(fit_erf({0.0, 1.0}, {0.0, 1.0}), DataError);  // too few points
}

TEST_CASE("scaling sweep") {
    // constant |G| family: same fields everywhere, eigenfrequency swept
    const double omega_deg = 0.5 * k::omega_from_wavelength(725e-9);
    std::vector<SweepMember> members;
    for (double fs : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
        Scenario member = make_preset_scenario(R"({"preset":"single-dipole"})");
        member.modes[0].eigenfrequency.omega = omega_deg * (1.0 + 0.05 * fs);
        members.push_back({fs, std::move(member)});
    }
    const double gamma = members[2].scenario.modes[0].eigenfrequency.gamma;
    const auto grid = tt::linspace(omega_deg - 3.0 * gamma, omega_deg + 3.0 * gamma, 61);

    const auto points = scaling_sweep(members, bare_detection(), grid);
    REQUIRE(points.size() == 5);

    SUBCASE("rate peaks at zero detuning") {
        for (const SweepPoint& p : points) {
            CHECK(p.normalized_rate == doctest::Approx(p.rate / p.volume).epsilon(1e-15));
            if (p.fs != 0.0) CHECK(p.normalized_rate < points[2].normalized_rate);
        }
        CHECK(points[2].detuning_hz == 0.0);
    }
    SUBCASE("|G| doubling quadruples the normalized rate") {
        std::vector<SweepMember> pair;
        pair.push_back({0.0, members[1].scenario});
        Scenario doubled = members[1].scenario;
        for (auto& v : doubled.pump_field.values) v *= 2.0;
        pair.push_back({1.0, std::move(doubled)});
        const auto pts = scaling_sweep(pair, bare_detection(), grid);
        CHECK(pts[1].g11_abs == doctest::Approx(2.0 * pts[0].g11_abs).epsilon(1e-15));
        CHECK(pts[1].normalized_rate == doctest::Approx(4.0 * pts[0].normalized_rate).epsilon(1e-12));
    }
    SUBCASE("missing mode label is an error") {
        std::vector<SweepMember> bad;
        bad.push_back({0.0, members[0].scenario});
        bad[0].scenario.modes[0].label = "fundamental";
        CHECK_THROWS_AS(scaling_sweep(bad, bare_detection(), grid), DataError);
    }
    SUBCASE("full-sum agrees with the pair restriction for one mode") {
        std::vector<SweepMember> one;
        one.push_back({0.0, members[2].scenario});
        const auto restricted = scaling_sweep(one, bare_detection(), grid, {}, false);
        const auto full = scaling_sweep(one, bare_detection(), grid, {}, true);
        CHECK(restricted[0].rate == doctest::Approx(full[0].rate).epsilon(1e-12));
    }
}

TEST_CASE("moving average") {
    SUBCASE("window 1 is the identity") {
        const std::vector<double> series{3.0, 1.0, 4.0, 1.0, 5.0};
        CHECK(moving_average(series, 1) == series);
    }
    SUBCASE("constant series stays constant") {
        const std::vector<double> series(10, 2.5);
        for (std::size_t w : {3, 5, 9})
            CHECK(moving_average(series, w) == series);
    }
    SUBCASE("centered mean preserves a linear ramp in the interior") {
        std::vector<double> ramp;
        for (int i = 0; i < 10; ++i) ramp.push_back(static_cast<double>(i));
        const auto smoothed = moving_average(ramp, 3);
        for (std::size_t i = 1; i + 1 < ramp.size(); ++i)
            CHECK(smoothed[i] == doctest::Approx(ramp[i]).epsilon(1e-15));
        // truncated edges
        CHECK(smoothed.front() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(smoothed.back() == doctest::Approx(8.5).epsilon(1e-15));
    }
    SUBCASE("even windows lean on the trailing side") {
        std::vector<double> ramp;
        for (int i = 0; i < 20; ++i) ramp.push_back(static_cast<double>(i));
        const auto smoothed = moving_average(ramp, 14);
        CHECK(smoothed.size() == ramp.size());
        // interior index 10: window [10-6, 10+7] = mean of 4..17 = 10.5
        CHECK(smoothed[10] == doctest::Approx(10.5).epsilon(1e-15));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(moving_average({}, 1), DataError);
        CHECK_THROWS_AS(moving_average({1.0, 2.0}, 3), std::invalid_argument);
        CHECK_THROWS_AS(moving_average({1.0, 2.0}, 0), std::invalid_argument);
    }
}
