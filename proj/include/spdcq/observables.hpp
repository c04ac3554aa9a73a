#pragma once

#include <optional>
#include <vector>

#include "spdcq/emission.hpp"
#include "spdcq/overlap.hpp"
#include "spdcq/types.hpp"

namespace spdcq {

/// omega_s-resolved detected rate density; integrating `density` over the
/// grid with the same Simpson rule reproduces detected_pair_rate.
struct SpectrumCurve {
    std::vector<double> omega_s;     // rad/s, ascending
    std::vector<double> wavelength;  // m, 2*pi*c/omega_s
    std::vector<double> density;     // pairs/s/(rad/s)
    RateMetadata metadata;
};

SpectrumCurve spectrum(const Scenario& scenario, const DetectionConfig& det,
                       const std::vector<double>& omega_grid, const OverlapTable& table,
                       const EngineOptions& options = {});

/// Coincidence rate density versus signal direction, idler and omega_s
/// integrated out. Density is stored row-major with phi fastest.
struct FarFieldMap {
    std::vector<double> theta_nodes;  // rad, within the collection cone
    std::vector<double> phi_nodes;    // rad
    std::vector<double> density;      // pairs/s/sr
    RateMetadata metadata;
};

FarFieldMap farfield_map(const Scenario& scenario, const DetectionConfig& det,
                         const std::vector<double>& omega_grid,
                         std::size_t n_theta, std::size_t n_phi,
                         const OverlapTable& table, const EngineOptions& options = {});

/// Least-squares parameters of offset + amplitude*erf((x - x0)/m) with 95%
/// confidence half-widths from the linearized covariance at the optimum.
/// residual_norm is the root-mean-square residual.
struct ErfFit {
    double m = 0.0;          // slope parameter (same units as x)
    double x0 = 0.0;         // transition center
    double amplitude = 0.0;
    double offset = 0.0;
    std::array<double, 4> ci95{};  // half-widths for (m, x0, amplitude, offset)
    double residual_norm = 0.0;
    int iterations = 0;
};

struct KnifeScan {
    std::vector<double> positions;  // m, ascending
    std::vector<double> rates;      // pairs/s
    std::optional<ErfFit> fit;
};

/// Detected rate versus knife position; the knife masks both photons.
/// Positions must be sorted ascending.
KnifeScan knife_scan(const Scenario& scenario, const DetectionConfig& det,
                     const std::vector<double>& positions,
                     const std::vector<double>& omega_grid, const OverlapTable& table,
                     const EngineOptions& options = {});

/// Damped Gauss-Newton fit of the erf knife-edge model. Converges when the
/// relative step drops below 1e-10 (at most 200 iterations, NumericError
/// beyond that). Flat data, where the amplitude is indistinguishable from
/// zero at 95%, raises DataError ("degenerate fit").
ErfFit fit_erf(const std::vector<double>& positions, const std::vector<double>& rates);
ErfFit fit_erf(const KnifeScan& scan);

/// One member of a lateral-scaling sweep.
struct SweepMember {
    double fs = 0.0;  // lateral scaling parameter
    Scenario scenario;
};

struct SweepPoint {
    double fs = 0.0;
    ComplexFrequency eigenfrequency_1;
    double detuning_hz = 0.0;     // (omega_1 - omega_deg) / (2*pi)
    double g11_abs = 0.0;         // |G_{1,1}|
    double volume = 0.0;          // m^3
    double rate = 0.0;            // pairs/s
    double normalized_rate = 0.0; // rate / volume
};

/// Per member: the rate restricted to the QNM pair m = n = 1 (mode labeled
/// "1"), normalized by the resonator volume. `full_sum` switches to the
/// all-pair rate for comparison.
std::vector<SweepPoint> scaling_sweep(const std::vector<SweepMember>& members,
                                      const DetectionConfig& det,
                                      const std::vector<double>& omega_grid,
                                      const EngineOptions& options = {},
                                      bool full_sum = false);

/// Centered moving mean with edge truncation (shorter windows near the
/// boundaries; even windows take the extra neighbor on the trailing side).
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

}  // namespace spdcq
