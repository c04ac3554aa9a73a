#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spdcq/overlap.hpp"
#include "spdcq/validation.hpp"
#include "test_helpers.hpp"

using namespace spdcq;
namespace tt = spdcq::testing;

namespace {

QnmMode toy_mode(const NearFieldGrid& field, const std::string& label = "m") {
    QnmMode mode;
    mode.label = label;
    mode.eigenfrequency = {1.0e15, 2.0e13};
    mode.near_field = field;
    mode.far_field = tt::isotropic_far_field(1.0, 0.0);
    return mode;
}

}  // namespace

TEST_CASE("spatial overlap: constant integrand over the unit cube") {
    const NearFieldGrid z_unit = tt::constant_field(tt::unit_cube_grid(4), {0, 0, 1.0});
    const Chi2Map chi2 = tt::chi_zzz_everywhere({4, 4, 4}, 1.0);
    const QnmMode m = toy_mode(z_unit);
    const SpatialOverlap g = spatial_overlap(m, m, chi2, z_unit);
    CHECK_FALSE(g.empty_mask);
    CHECK(g.value.real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.value.imag() == 0.0);
}

TEST_CASE("spatial overlap: tensor contraction vanishes for x-polarized pump") {
    const NearFieldGrid z_unit = tt::constant_field(tt::unit_cube_grid(4), {0, 0, 1.0});
    const NearFieldGrid x_pump = tt::constant_field(tt::unit_cube_grid(4), {1.0, 0, 0});
    const Chi2Map chi2 = tt::chi_zzz_everywhere({4, 4, 4}, 1.0);
    const QnmMode m = toy_mode(z_unit);
    CHECK(spatial_overlap(m, m, chi2, x_pump).value == complexd{0.0, 0.0});
}

TEST_CASE("spatial overlap: midpoint rule is exact for a linear integrand") {
    const NearFieldGrid z_unit = tt::constant_field(tt::unit_cube_grid(4), {0, 0, 1.0});
    const NearFieldGrid z_linear = tt::linear_z_field(tt::unit_cube_grid(4));
    const Chi2Map chi2 = tt::chi_zzz_everywhere({4, 4, 4}, 1.0);
    const SpatialOverlap g = spatial_overlap(toy_mode(z_linear), toy_mode(z_unit), chi2, z_unit);
    CHECK(g.value.real() == 0.5);  // int_0^1 z dz, exact at cell centers
    CHECK(g.value.imag() == 0.0);
}

TEST_CASE("spatial overlap: grid mismatch and empty mask") {
    const NearFieldGrid a = tt::constant_field(tt::unit_cube_grid(4), {0, 0, 1.0});
    const NearFieldGrid b = tt::constant_field(tt::unit_cube_grid(5), {0, 0, 1.0});
    const Chi2Map chi2 = tt::chi_zzz_everywhere({4, 4, 4}, 1.0);
    CHECK_THROWS_AS(spatial_overlap(toy_mode(a), toy_mode(b), chi2, a), DataError);

    Chi2Map masked = chi2;
    std::fill(masked.region_mask.begin(), masked.region_mask.end(), 0);
    const SpatialOverlap g = spatial_overlap(toy_mode(a), toy_mode(a), masked, a);
    CHECK(g.empty_mask);
    CHECK(g.value == complexd{0.0, 0.0});
}

TEST_CASE("spectral factor: direct substitutions") {
    SUBCASE("degenerate eigenfrequencies") {
        const complexd s = spectral_factor({1.0, 0.1}, {1.0, 0.1}, 2.0, 1.0);
        CHECK(s.real() == doctest::Approx(-0.0099).epsilon(1e-12));
        CHECK(s.imag() == doctest::Approx(0.002).epsilon(1e-12));
    }
    SUBCASE("distinct eigenfrequencies") {
        const complexd s = spectral_factor({1.2, 0.05}, {0.8, 0.02}, 2.0, 0.8);
        CHECK(s.real() == doctest::Approx(-0.000959).epsilon(1e-9));
        CHECK(s.imag() == doctest::Approx(0.000064).epsilon(1e-9));
    }
}

TEST_CASE("spectral factor: exchange identity S_nm(w_p - w_s) = S_mn(w_s)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < 10000; ++i) {
        const ComplexFrequency m{u(rng), 0.1 * u(rng)};
        const ComplexFrequency n{u(rng), 0.1 * u(rng)};
        const double omega_p = u(rng) + 1.0;
        const double omega_s = u(rng);
        const complexd lhs = spectral_factor(n, m, omega_p, omega_p - omega_s);
        const complexd rhs = spectral_factor(m, n, omega_p, omega_s);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
}

TEST_CASE("modal overlap coefficient") {
    CHECK(modal_overlap_coefficient({1.0, 0.0}, {2.0, 0.0}) == complexd{0.5, 0.0});
    CHECK(modal_overlap_coefficient({0.0, 0.0}, {0.3, -0.7}) == complexd{0.0, 0.0});
    const complexd xi = modal_overlap_coefficient({1.0, 1.0}, {0.0, 1.0});
    CHECK(xi.real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(xi.imag() == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(modal_overlap_coefficient({1.0, 0.0}, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("xi table: single mode reports |G| / |S|") {
    const Scenario s = tt::toy_scenario();
    const auto grid = tt::linspace(0.8e15, 1.2e15, 101);
    const OverlapTable table = xi_table(s, grid, 1);
    REQUIRE(table.curves().size() == 1);
    const XiCurve& curve = table.curves().front();
    CHECK(curve.label_m == "1");
    CHECK(curve.label_n == "1");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const complexd expected =
            table.g(0, 0) / spectral_factor(s.modes[0].eigenfrequency,
                                            s.modes[0].eigenfrequency, s.pump_omega, grid[i]);
        CHECK(std::abs(curve.values[i] - expected) <= 1e-14 * std::abs(expected));
    }
}

TEST_CASE("xi table: zero-overlap pairs rank below coupled pairs") {
    // Mode 2 polarized along x couples to nothing through chi_zzz.
    Scenario s = tt::toy_scenario();
    QnmMode mode2 = s.modes[0];
    mode2.label = "2";
    mode2.near_field = tt::constant_field(tt::unit_cube_grid(4), {1.0, 0, 0});
    s.modes.push_back(mode2);

    const auto grid = tt::linspace(0.8e15, 1.2e15, 51);
    const OverlapTable table = xi_table(s, grid, 3);
    REQUIRE(table.curves().size() == 3);
    CHECK(table.curves()[0].label_m == "1");
    CHECK(table.curves()[0].label_n == "1");
    CHECK(table.curves()[0].peak_abs > 0.0);
    CHECK(table.curves()[1].peak_abs == 0.0);
    CHECK(table.curves()[2].peak_abs == 0.0);
    // dropped from the amplitude sum as well
    CHECK(table.pair_kept(0, 0));
    CHECK_FALSE(table.pair_kept(0, 1));
    CHECK_FALSE(table.pair_kept(1, 1));
}

TEST_CASE("xi table: ranking matches brute force on a random 3-mode set") {
    const Scenario s = make_preset_scenario(R"({"preset":"three-mode-random","seed":11})");
    const double omega_deg = s.degenerate_omega();
    const auto grid = tt::linspace(0.85 * omega_deg, 1.15 * omega_deg, 201);
    const OverlapTable table = xi_table(s, grid, 6);
    REQUIRE(table.curves().size() == 6);

    // Brute force: peak |G/S| per unordered pair, ranked by the best ordering.
    struct Entry {
        std::size_t m, n;
        double peak;
    };
    std::vector<Entry> brute;
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t n = m; n < 3; ++n) {
            double peak = 0.0;
            for (double w : grid)
                for (const auto& [a, b] : {std::pair{m, n}, std::pair{n, m}}) {
                    const complexd s_ab = spectral_factor(s.modes[a].eigenfrequency,
                                                          s.modes[b].eigenfrequency,
                                                          s.pump_omega, w);
                    peak = std::max(peak, std::abs(table.g(a, b) / s_ab));
                }
            brute.push_back({m, n, peak});
        }
    std::stable_sort(brute.begin(), brute.end(),
                     [](const Entry& a, const Entry& b) { return a.peak > b.peak; });

    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(table.curves()[i].label_m == s.modes[brute[i].m].label);
        CHECK(table.curves()[i].label_n == s.modes[brute[i].n].label);
        CHECK(table.curves()[i].peak_abs == doctest::Approx(brute[i].peak).epsilon(1e-12));
    }
}

TEST_CASE("xi table: errors") {
    const Scenario s = tt::toy_scenario();
    CHECK_THROWS_AS(xi_table(s, {}, 1), DataError);
    CHECK_THROWS_AS(xi_table(s, tt::linspace(0.8e15, 1.2e15, 11), 0), std::invalid_argument);
}

TEST_CASE("G linearity in the pump field") {
    const Scenario base = make_preset_scenario(R"({"preset":"three-mode-random","seed":3})");
    const auto grid = tt::linspace(0.9e15, 1.4e15, 21);
    const OverlapTable t0 = xi_table(base, grid, 1);

    SUBCASE("power-of-two scaling is exact") {
        Scenario doubled = base;
        for (auto& v : doubled.pump_field.values) v *= 2.0;
        const OverlapTable t2 = xi_table(doubled, grid, 1);
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t n = 0; n < 3; ++n) CHECK(t2.g(m, n) == 2.0 * t0.g(m, n));
    }
    SUBCASE("complex scaling to rounding") {
        const complexd lambda{1.3, -0.4};
        Scenario scaled = base;
        for (auto& v : scaled.pump_field.values) v *= lambda;
        const OverlapTable t1 = xi_table(scaled, grid, 1);
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t n = 0; n < 3; ++n)
                CHECK(std::abs(t1.g(m, n) - lambda * t0.g(m, n)) <=
                      1e-13 * std::abs(lambda * t0.g(m, n)));
    }
}

TEST_CASE("mask locality: fields outside the chi2 support do not matter") {
    Scenario s = tt::toy_scenario(6);
    // restrict nonlinearity to an inner box
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t l = 0; l < 6; ++l) {
                const bool inside = i >= 2 && i < 4 && j >= 2 && j < 4 && l >= 2 && l < 4;
                s.chi2.region_mask[(i * 6 + j) * 6 + l] = inside ? 1 : 0;
            }
    const auto grid = tt::linspace(0.8e15, 1.2e15, 11);
    const complexd g_before = xi_table(s, grid, 1).g(0, 0);

    // garbage outside the box must not change G at all
    Scenario mutated = s;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t l = 0; l < 6; ++l) {
                if (i >= 2 && i < 4 && j >= 2 && j < 4 && l >= 2 && l < 4) continue;
                for (std::size_t a = 0; a < 3; ++a) {
                    mutated.modes[0].near_field.values[mutated.pump_field.value_index(i, j, l, a)] =
                        complexd{123.4, -56.7};
                    mutated.pump_field.values[mutated.pump_field.value_index(i, j, l, a)] =
                        complexd{-9.0, 3.3};
                }
            }
    CHECK(xi_table(mutated, grid, 1).g(0, 0) == g_before);
}

TEST_CASE("midpoint rule converges at second order on a smooth integrand") {
    // All three fields share a Gaussian envelope, so the integrand is
    // exp(-3 sum((r_a - c_a)^2 / w_a^2)) with an erf closed form per axis.
    const std::array<double, 3> width{0.31e-6, 0.27e-6, 0.12e-6};
    const std::array<double, 3> center{0.05e-6, -0.04e-6, 0.02e-6};
    const std::array<double, 3> box{1.2e-6, 1.2e-6, 0.5e-6};

    const auto g_at = [&](std::size_t n) {
        GridSpec grid;
        grid.shape = {n, n, n};
        for (std::size_t a = 0; a < 3; ++a) {
            grid.spacing[a] = box[a] / static_cast<double>(n);
            grid.origin[a] = -0.5 * box[a];
        }
        SyntheticModeSpec mode;
        mode.label = "1";
        mode.eigenfrequency = {1.0e15, 2.0e13};
        mode.near_widths = width;
        mode.near_center = center;
        mode.near_polarization = {0.0, 0.0, 1.0};
        mode.far_n_theta = 5;
        mode.far_n_phi = 8;
        SyntheticPumpSpec pump;
        pump.omega = 2.0e15;
        pump.widths = width;
        pump.center = center;
        pump.polarization = {0.0, 0.0, 1.0};
        pump.amplitude = 1.0;
        SyntheticChi2Spec chi2;
        chi2.tensor(2, 2, 2) = 1.0;
        const Scenario s = make_synthetic_scenario(grid, {mode}, pump, chi2);
        return spatial_overlap(s.modes[0], s.modes[0], s.chi2, s.pump_field).value.real();
    };

    double exact = 1.0;
    for (std::size_t a = 0; a < 3; ++a) {
        const double k = std::sqrt(3.0) / width[a];
        const double lo = -0.5 * box[a] - center[a];
        const double hi = 0.5 * box[a] - center[a];
        exact *= 0.5 * std::sqrt(constants::pi) / k * (std::erf(k * hi) - std::erf(k * lo));
    }

    const double err_coarse = std::abs(g_at(12) - exact);
    const double err_fine = std::abs(g_at(24) - exact);
    CHECK(err_fine > 0.0);
    CHECK(err_coarse / err_fine > 3.5);  // ~4x for second order
    CHECK(err_coarse / err_fine < 4.5);
}
