#pragma once

#include <string>
#include <vector>

#include "spdcq/overlap.hpp"
#include "spdcq/quadrature.hpp"
#include "spdcq/types.hpp"

namespace spdcq {

/// Resolution and scheduling knobs for the rate integrals.
struct EngineOptions {
    int theta_order = 32;
    int phi_order = 64;
    int threads = 0;                 // 0 = hardware concurrency
    double omega_tolerance = 1e-6;   // relative Richardson tolerance
    bool with_breakdown = true;
};

struct PairContribution {
    std::string idler_label;
    std::string signal_label;
    complexd value;  // coherent contribution; all entries sum to the total rate
};

struct RateMetadata {
    int theta_order = 0;
    int phi_order = 0;
    std::size_t omega_points = 0;
    double richardson_error = -1.0;  // absolute; < 0 when no estimate was possible
    bool converged = true;
    std::vector<std::string> warnings;
};

struct RateResult {
    double rate = 0.0;  // pairs/s up to the global field-normalization scale
    std::vector<PairContribution> breakdown;
    RateMetadata metadata;
};

/// Prefactor of the differential pair rate,
///   C = (8 / (pi*mu0^2)) * n_i * n_s * (omega_p - omega_s)^3 * omega_s^3 / c^6,
/// with |r_i|^2 |r_s|^2 absorbed into the radius-removed far fields.
/// Throws std::domain_error unless 0 < omega_s < omega_p.
double prefactor_c(double omega_p, double omega_s, double n_i, double n_s);

/// Two-photon amplitude
///   T~ = sum_{m,n} xi_{m,n}(omega_s) * F_{m,d_i}(dir_i) * F_{n,d_s}(dir_s)
/// with the idler at omega_p - omega_s coupled to mode m and the signal at
/// omega_s to mode n. Directions are (theta, phi) pairs; polarizations are
/// projection vectors in the (theta_hat, phi_hat) basis.
complexd two_photon_amplitude(const Scenario& scenario,
                              const std::array<double, 2>& dir_i, const std::array<double, 2>& pol_i,
                              const std::array<double, 2>& dir_s, const std::array<double, 2>& pol_s,
                              double omega_s, const OverlapTable& table);

/// Differential rate C * sum_pol |T~|^2 (or C * |T~|^2 for a fixed
/// polarization pair), per unit solid angles and signal frequency. Detection
/// weights (fiber, knife, filter) do not enter here.
double differential_pair_rate(const Scenario& scenario,
                              const std::array<double, 2>& dir_i,
                              const std::array<double, 2>& dir_s,
                              double omega_s, const DetectionConfig& det,
                              const OverlapTable& table);

/// Pointwise integrand of the detected rate: differential rate times fiber
/// amplitude weights, knife masks (both photons, common path) and the
/// both-photon spectral window. This is the definition the Monte Carlo oracle
/// integrates; the quadrature path reduces the same expression analytically
/// over mode pairs.
double detected_rate_integrand(const Scenario& scenario, const DetectionConfig& det,
                               const OverlapTable& table,
                               const std::array<double, 2>& dir_i,
                               const std::array<double, 2>& dir_s,
                               double omega_s);

/// Detected pair rate
///   dN/dt = int domega_s int_NA dOmega_i int_NA dOmega_s phi(r_i) phi(r_s) C |T~|^2
/// over the NA cone and the supplied omega_s grid (composite Simpson with a
/// Richardson error estimate). An entirely blocked cone yields rate 0 with a
/// warning; a Richardson estimate above tolerance flags the result as not
/// converged.
RateResult detected_pair_rate(const Scenario& scenario, const DetectionConfig& det,
                              const std::vector<double>& omega_grid, const OverlapTable& table,
                              const EngineOptions& options = {});

/// Spectral density of the detected rate at a single omega_s (the integrand
/// of the omega integral above, both angular integrals already applied).
/// The angular reduction over the cone happens once at construction; each
/// density evaluation is then a closed-form sum over mode pairs.
class SpectralEvaluator {
public:
    SpectralEvaluator(const Scenario& scenario, const DetectionConfig& det,
                      const OverlapTable& table, const EngineOptions& options);
    ~SpectralEvaluator();
    SpectralEvaluator(SpectralEvaluator&&) noexcept;
    SpectralEvaluator& operator=(SpectralEvaluator&&) = delete;
    SpectralEvaluator(const SpectralEvaluator&) = delete;

    double density(double omega_s) const;
    /// Per ordered pair coherent contributions at one omega_s (sums to density).
    std::vector<complexd> density_breakdown(double omega_s) const;
    bool cone_blocked() const;

    /// Frequency-independent per-photon angular reduction matrices
    /// (mode_count^2, row-major, Hermitian PSD). Map-style observables use
    /// them to keep one photon unintegrated.
    const std::vector<complexd>& idler_matrix() const;
    const std::vector<complexd>& signal_matrix() const;

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace spdcq
