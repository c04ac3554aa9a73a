#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdcq/emission.hpp"
#include "spdcq/types.hpp"

namespace spdcq {

struct GridSpec {
    std::array<double, 3> origin{};
    std::array<double, 3> spacing{};
    std::array<std::size_t, 3> shape{};
};

/// Analytic stand-in for one solver-exported QNM: separable Gaussian near
/// field times a polarization vector, and a dipole far field
/// F = scale * ((r_hat x d_hat) x r_hat) projected on (theta_hat, phi_hat),
/// optionally shaped by a Gaussian envelope in theta (crude substrate
/// asymmetry). Transversality F . r_hat = 0 holds by construction.
struct SyntheticModeSpec {
    std::string label;
    ComplexFrequency eigenfrequency;
    std::array<double, 3> near_widths{};          // Gaussian 1/e radii, m
    std::array<double, 3> near_center{};          // m
    std::array<double, 3> near_polarization{0.0, 0.0, 1.0};
    complexd near_scale{1.0, 0.0};
    std::array<double, 3> dipole_orientation{0.0, 0.0, 1.0};
    complexd far_scale{1.0, 0.0};
    std::optional<double> theta_envelope_width;   // rad; absent = bare dipole
    double theta_envelope_center = 0.0;           // rad
    std::size_t far_n_theta = 181;
    std::size_t far_n_phi = 360;
};

struct SyntheticPumpSpec {
    double omega = 0.0;                            // rad/s
    double intensity = 0.0;                        // W/m^2, metadata
    std::array<double, 3> widths{};                // Gaussian 1/e radii, m
    std::array<double, 3> center{};
    std::array<double, 3> polarization{0.0, 0.0, 1.0};
    complexd amplitude{1.0, 0.0};                  // V/m
};

struct SyntheticChi2Spec {
    Chi2Tensor tensor;                             // single material region
    // Optional sub-box restriction (grid-node index bounds, inclusive lo,
    // exclusive hi). Empty = nonlinear everywhere.
    std::optional<std::array<std::size_t, 3>> box_lo;
    std::optional<std::array<std::size_t, 3>> box_hi;
};

/// Builds a fully valid Scenario from analytic parts. Throws DataError when
/// the specs are inconsistent (empty mode list, non-finite inputs).
Scenario make_synthetic_scenario(const GridSpec& grid, const std::vector<SyntheticModeSpec>& specs,
                                 const SyntheticPumpSpec& pump, const SyntheticChi2Spec& chi2,
                                 double n_idler = 1.45, double n_signal = 1.45,
                                 double volume = 1.75e-18);

/// Closed-form eigenfrequencies of the symmetric 1D dielectric slab,
///   w~_q = c * (q*pi + i*ln r) / (n*L),  r = (n-1)/(n+1),
/// the textbook analytic QNM family used as an oracle. Throws
/// std::domain_error for n <= 1 (no confinement).
std::vector<ComplexFrequency> slab_eigenfrequencies(double n, double thickness, std::size_t count);

struct MonteCarloEstimate {
    double rate = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Brute-force check of the detected rate: uniform sampling over
/// omega_s x cone x cone evaluating detected_rate_integrand point by point.
/// Shares only the integrand definition with the quadrature path. Sampling
/// runs over fixed independent substreams, so the estimate depends only on
/// the seed, not the thread count.
MonteCarloEstimate monte_carlo_rate(const Scenario& scenario, const DetectionConfig& det,
                                    const OverlapTable& table, double omega_lo, double omega_hi,
                                    std::uint64_t seed, std::size_t samples, int threads = 0);

/// Testing hook: same sampler with the physical integrand replaced.
using IntegrandOverride = std::function<double(const std::array<double, 2>& dir_i,
                                               const std::array<double, 2>& dir_s,
                                               double omega_s)>;
MonteCarloEstimate monte_carlo_rate_with_integrand(const DetectionConfig& det,
                                                   double omega_lo, double omega_hi,
                                                   std::uint64_t seed, std::size_t samples,
                                                   const IntegrandOverride& integrand,
                                                   int threads = 0);

/// Named testbed presets backing the CLI generator. Options JSON keys:
/// "preset" (required), "seed", plus per-preset overrides documented in
/// docs/formats.md.
Scenario make_preset_scenario(const std::string& options_json);

/// Members (fs, scenario) of the lateral-scaling demonstration family.
std::vector<std::pair<double, Scenario>> make_sweep_family(std::uint64_t seed);

}  // namespace spdcq
