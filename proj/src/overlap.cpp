#include "spdcq/overlap.hpp"

#include <algorithm>
#include <cmath>

#include "spdcq/validation.hpp"

namespace spdcq {

namespace {

void require_congruent(const NearFieldGrid& a, const NearFieldGrid& b, const char* what) {
    if (!a.same_geometry(b)) throw DataError(std::string("grid mismatch: ") + what);
}

// Pump-contracted nonlinearity P_{ab}(node) = sum_g chi_{abg} * E_{p,g}:
// shared by every mode pair of one scenario.
std::vector<complexd> contract_pump(const Chi2Map& chi2, const NearFieldGrid& pump,
                                    bool* any_masked) {
    const std::size_t n_nodes = pump.node_count();
    std::vector<complexd> p(n_nodes * 9, complexd{0.0, 0.0});
    bool any = false;
    for (std::size_t node = 0; node < n_nodes; ++node) {
        const std::uint32_t region = chi2.region_mask[node];
        if (region == 0) continue;
        any = true;
        const Chi2Tensor& t = chi2.regions[region - 1];
        const complexd* ep = &pump.values[node * 3];
        complexd* out = &p[node * 9];
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) {
                complexd acc{0.0, 0.0};
                for (std::size_t g = 0; g < 3; ++g) acc += t(a, b, g) * ep[g];
                out[a * 3 + b] = acc;
            }
    }
    if (any_masked) *any_masked = any;
    return p;
}

complexd pair_overlap(const std::vector<complexd>& p, const Chi2Map& chi2,
                      const NearFieldGrid& em, const NearFieldGrid& en, double cell_volume) {
    complexd sum{0.0, 0.0};
    const std::size_t n_nodes = em.node_count();
    for (std::size_t node = 0; node < n_nodes; ++node) {
        if (chi2.region_mask[node] == 0) continue;
        const complexd* fm = &em.values[node * 3];
        const complexd* fn = &en.values[node * 3];
        const complexd* pn = &p[node * 9];
        complexd acc{0.0, 0.0};
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) acc += pn[a * 3 + b] * fm[a] * fn[b];
        sum += acc;
    }
    return sum * cell_volume;
}

}  // namespace

SpatialOverlap spatial_overlap(const QnmMode& mode_m, const QnmMode& mode_n,
                               const Chi2Map& chi2, const NearFieldGrid& pump) {
    require_congruent(mode_m.near_field, pump, "mode vs pump");
    require_congruent(mode_n.near_field, pump, "mode vs pump");
    if (chi2.shape != pump.shape) throw DataError("grid mismatch: chi2 vs pump");
    if (chi2.region_mask.size() != chi2.node_count())
        throw DataError("chi2 mask size does not match grid");

    SpatialOverlap result;
    bool any_masked = false;
    const std::vector<complexd> p = contract_pump(chi2, pump, &any_masked);
    if (!any_masked) {
        result.empty_mask = true;
        return result;  // exactly zero
    }
    result.value = pair_overlap(p, chi2, mode_m.near_field, mode_n.near_field,
                                pump.cell_volume());
    return result;
}

complexd spectral_factor(const ComplexFrequency& ef_m, const ComplexFrequency& ef_n,
                         double omega_p, double omega_s) {
    const complexd wm = ef_m.value();
    const complexd wn = ef_n.value();
    return (omega_p - omega_s - wm) * wm * (omega_s - wn) * wn;
}

complexd modal_overlap_coefficient(complexd g, complexd s) {
    if (s == complexd{0.0, 0.0})
        throw std::domain_error("modal overlap coefficient: singular spectral factor");
    return g / s;
}

complexd OverlapTable::xi(std::size_t m, std::size_t n, double omega_s) const {
    const std::size_t idx = m * labels_.size() + n;
    if (!kept_[idx]) return {0.0, 0.0};
    return g_[idx] / spectral_factor(eigenfrequencies_[m], eigenfrequencies_[n],
                                     pump_omega_, omega_s);
}

OverlapTable xi_table(const Scenario& scenario, const std::vector<double>& omega_s_grid,
                      std::size_t top_k, double drop_threshold) {
    require_valid(scenario);
    if (omega_s_grid.empty()) throw DataError("xi table: empty frequency grid");
    if (top_k < 1) throw std::invalid_argument("xi table: top_k must be >= 1");

    const std::size_t n_modes = scenario.modes.size();
    OverlapTable table;
    table.pump_omega_ = scenario.pump_omega;
    table.omega_grid_ = omega_s_grid;
    table.labels_.reserve(n_modes);
    table.eigenfrequencies_.reserve(n_modes);
    for (const QnmMode& mode : scenario.modes) {
        table.labels_.push_back(mode.label);
        table.eigenfrequencies_.push_back(mode.eigenfrequency);
    }

    bool any_masked = false;
    const std::vector<complexd> p =
        contract_pump(scenario.chi2, scenario.pump_field, &any_masked);
    table.empty_mask_warning_ = !any_masked;

    table.g_.assign(n_modes * n_modes, complexd{0.0, 0.0});
    if (any_masked) {
        const double cell = scenario.pump_field.cell_volume();
        for (std::size_t m = 0; m < n_modes; ++m)
            for (std::size_t n = 0; n < n_modes; ++n)
                table.g_[m * n_modes + n] =
                    pair_overlap(p, scenario.chi2, scenario.modes[m].near_field,
                                 scenario.modes[n].near_field, cell);
    }

    // Peak |xi| over the grid per ordered pair: the ranking metric and the
    // truncation criterion for the amplitude sum.
    std::vector<double> peak(n_modes * n_modes, 0.0);
    std::vector<std::vector<complexd>> curves(n_modes * n_modes);
    double leading = 0.0;
    for (std::size_t m = 0; m < n_modes; ++m)
        for (std::size_t n = 0; n < n_modes; ++n) {
            auto& curve = curves[m * n_modes + n];
            curve.reserve(omega_s_grid.size());
            double p_abs = 0.0;
            for (double omega_s : omega_s_grid) {
                const complexd s = spectral_factor(table.eigenfrequencies_[m],
                                                   table.eigenfrequencies_[n],
                                                   table.pump_omega_, omega_s);
                const complexd value = modal_overlap_coefficient(table.g_[m * n_modes + n], s);
                curve.push_back(value);
                p_abs = std::max(p_abs, std::abs(value));
            }
            peak[m * n_modes + n] = p_abs;
            leading = std::max(leading, p_abs);
        }

    table.kept_.assign(n_modes * n_modes, 1);
    if (leading > 0.0 && drop_threshold > 0.0)
        for (std::size_t idx = 0; idx < peak.size(); ++idx)
            if (peak[idx] < drop_threshold * leading) table.kept_[idx] = 0;

    // Rank unordered pairs by their best ordered peak; report one curve per
    // unordered pair, the (m <= n) ordering as representative.
    struct Ranked {
        std::size_t m, n;
        double peak;
    };
    std::vector<Ranked> ranked;
    for (std::size_t m = 0; m < n_modes; ++m)
        for (std::size_t n = m; n < n_modes; ++n)
            ranked.push_back({m, n, std::max(peak[m * n_modes + n], peak[n * n_modes + m])});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.peak > b.peak; });

    const std::size_t n_report = std::min(top_k, ranked.size());
    table.curves_.reserve(n_report);
    for (std::size_t i = 0; i < n_report; ++i) {
        const Ranked& r = ranked[i];
        XiCurve curve;
        curve.label_m = table.labels_[r.m];
        curve.label_n = table.labels_[r.n];
        curve.values = curves[r.m * n_modes + r.n];
        curve.peak_abs = r.peak;
        table.curves_.push_back(std::move(curve));
    }
    return table;
}

}  // namespace spdcq
