#pragma once

#include <string>
#include <vector>

#include "spdcq/types.hpp"

namespace spdcq {

struct SpatialOverlap {
    complexd value{0.0, 0.0};
    bool empty_mask = false;  // no node carried any nonlinearity
};

/// Nonlinear spatial overlap
///   G_{m,n} = sum_{abg} int chi_{abg}(r0) E_{m,a}(r0) E_{n,b}(r0) E_{p,g}(r0) dr0
/// by the midpoint rule over masked nodes. Fields enter unconjugated (QNM
/// bilinear pairing). Throws DataError on grid mismatch.
SpatialOverlap spatial_overlap(const QnmMode& mode_m, const QnmMode& mode_n,
                               const Chi2Map& chi2, const NearFieldGrid& pump);

/// Spectral detuning factor
///   S_{m,n}(omega_s) = (omega_p - omega_s - w~_m) * w~_m * (omega_s - w~_n) * w~_n.
/// Preconditions (gamma > 0) keep it away from zero for real omega_s.
complexd spectral_factor(const ComplexFrequency& ef_m, const ComplexFrequency& ef_n,
                         double omega_p, double omega_s);

/// xi = G / S. Throws std::domain_error when s == 0 (only reachable with
/// invalid gamma = 0 inputs).
complexd modal_overlap_coefficient(complexd g, complexd s);

/// One reported |xi| curve for an unordered mode pair.
struct XiCurve {
    std::string label_m;
    std::string label_n;
    std::vector<complexd> values;  // xi_{m,n}(omega_s) over the table grid
    double peak_abs = 0.0;         // max |xi| over the grid, the ranking metric
};

/// Pairwise overlap data for one scenario: the full G matrix, the subset of
/// ordered pairs kept in the amplitude sum, and the ranked xi curves.
class OverlapTable {
public:
    OverlapTable() = default;

    std::size_t mode_count() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<ComplexFrequency>& eigenfrequencies() const { return eigenfrequencies_; }
    double pump_omega() const { return pump_omega_; }

    complexd g(std::size_t m, std::size_t n) const { return g_[m * labels_.size() + n]; }
    bool pair_kept(std::size_t m, std::size_t n) const { return kept_[m * labels_.size() + n] != 0; }

    /// xi_{m,n}(omega_s) for one kept ordered pair (0 for dropped pairs).
    complexd xi(std::size_t m, std::size_t n, double omega_s) const;

    const std::vector<double>& omega_grid() const { return omega_grid_; }
    const std::vector<XiCurve>& curves() const { return curves_; }
    bool empty_mask_warning() const { return empty_mask_warning_; }

private:
    friend OverlapTable xi_table(const Scenario&, const std::vector<double>&, std::size_t, double);

    std::vector<std::string> labels_;
    std::vector<ComplexFrequency> eigenfrequencies_;
    double pump_omega_ = 0.0;
    std::vector<complexd> g_;        // mode_count^2, row-major (m, n)
    std::vector<std::uint8_t> kept_; // amplitude-sum membership per ordered pair
    std::vector<double> omega_grid_;
    std::vector<XiCurve> curves_;
    bool empty_mask_warning_ = false;
};

/// Computes G for every ordered mode pair, evaluates xi over `omega_s_grid`,
/// ranks unordered pairs by peak |xi| and reports the strongest `top_k`
/// curves. Ordered pairs whose peak |xi| falls below `drop_threshold` times
/// the leading peak are dropped from the amplitude sum (both orderings of a
/// symmetric pair stay in the sum; only one curve is reported per unordered
/// pair).
OverlapTable xi_table(const Scenario& scenario, const std::vector<double>& omega_s_grid,
                      std::size_t top_k, double drop_threshold = 1e-6);

}  // namespace spdcq
