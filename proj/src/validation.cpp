#include "spdcq/validation.hpp"

#include <cmath>
#include <sstream>

#include "spdcq/constants.hpp"

namespace spdcq {

namespace {

bool all_finite(const std::vector<complexd>& v) {
    for (const complexd& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

void check_grid(const NearFieldGrid& grid, const std::string& who,
                std::vector<ValidationIssue>& issues) {
    for (double s : grid.spacing)
        if (!(s > 0.0)) {
            issues.push_back({"grid-spacing", who + ": non-positive grid spacing"});
            break;
        }
    for (std::size_t n : grid.shape)
        if (n == 0) {
            issues.push_back({"grid-shape", who + ": zero grid extent"});
            break;
        }
    if (grid.values.size() != grid.node_count() * 3)
        issues.push_back({"grid-values", who + ": value count does not match shape"});
    else if (!all_finite(grid.values))
        issues.push_back({"non-finite", who + ": non-finite near-field value"});
}

void check_far_field(const FarFieldAmplitude& ff, const std::string& who,
                     std::vector<ValidationIssue>& issues) {
    if (ff.n_theta() < 2 || ff.n_phi() < 2) {
        issues.push_back({"farfield-grid", who + ": angular grid needs at least 2x2 nodes"});
        return;
    }
    if (!strictly_increasing(ff.theta_nodes) || !strictly_increasing(ff.phi_nodes))
        issues.push_back({"farfield-grid", who + ": angular nodes must increase strictly"});
    if (ff.theta_nodes.front() < 0.0 || ff.theta_nodes.back() > constants::pi + 1e-12)
        issues.push_back({"farfield-grid", who + ": theta outside [0, pi]"});
    if (ff.phi_nodes.front() < 0.0 || ff.phi_nodes.back() >= 2.0 * constants::pi)
        issues.push_back({"farfield-grid", who + ": phi outside [0, 2*pi)"});
    const std::size_t n = ff.n_theta() * ff.n_phi();
    if (ff.amp_theta.size() != n || ff.amp_phi.size() != n)
        issues.push_back({"farfield-grid", who + ": amplitude array size does not match grid"});
    else if (!all_finite(ff.amp_theta) || !all_finite(ff.amp_phi))
        issues.push_back({"non-finite", who + ": non-finite far-field amplitude"});
    if (!(ff.reference_radius > 0.0) || !std::isfinite(ff.reference_radius))
        issues.push_back({"farfield-grid", who + ": reference radius must be positive"});
}

}  // namespace

std::string ValidationReport::summary() const {
    if (clean()) return "clean";
    std::ostringstream os;
    os << issues.size() << " violation(s):";
    for (const auto& issue : issues) os << "\n  [" << issue.code << "] " << issue.message;
    return os.str();
}

ValidationReport validate_scenario(const Scenario& scenario) {
    ValidationReport report;
    auto& issues = report.issues;

    if (!(scenario.pump_omega > 0.0) || !std::isfinite(scenario.pump_omega))
        issues.push_back({"pump-omega", "pump frequency must be positive and finite"});
    if (scenario.n_idler < 1.0 || scenario.n_signal < 1.0)
        issues.push_back({"refractive-index", "refractive indices must be >= 1"});
    if (!(scenario.volume > 0.0))
        issues.push_back({"volume", "resonator volume must be positive"});

    check_grid(scenario.pump_field, "pump", issues);

    if (scenario.modes.empty()) issues.push_back({"empty-modes", "scenario holds no modes"});

    for (const QnmMode& mode : scenario.modes) {
        const std::string who = "mode '" + mode.label + "'";
        if (!(mode.eigenfrequency.gamma > 0.0))
            issues.push_back({"non-positive-gamma", who + ": non-positive leakage rate"});
        if (!(mode.eigenfrequency.omega > 0.0))
            issues.push_back({"non-positive-omega", who + ": non-positive resonance frequency"});
        check_grid(mode.near_field, who, issues);
        if (!mode.near_field.same_geometry(scenario.pump_field))
            issues.push_back({"grid-mismatch", who + ": grid mismatch against the pump grid"});
        check_far_field(mode.far_field, who, issues);
    }

    for (std::size_t i = 0; i < scenario.modes.size(); ++i)
        for (std::size_t j = i + 1; j < scenario.modes.size(); ++j)
            if (scenario.modes[i].label == scenario.modes[j].label)
                issues.push_back({"duplicate-label",
                                  "duplicate mode label '" + scenario.modes[i].label + "'"});

    const Chi2Map& chi2 = scenario.chi2;
    if (chi2.shape != scenario.pump_field.shape)
        issues.push_back({"grid-mismatch", "chi2 map: grid mismatch against the pump grid"});
    if (chi2.region_mask.size() != chi2.node_count())
        issues.push_back({"chi2-mask", "chi2 map: mask size does not match shape"});
    for (std::uint32_t r : chi2.region_mask)
        if (r > chi2.regions.size()) {
            issues.push_back({"chi2-mask", "chi2 map: mask references a missing region"});
            break;
        }
    for (const Chi2Tensor& t : chi2.regions)
        for (double c : t.c)
            if (!std::isfinite(c)) {
                issues.push_back({"non-finite", "chi2 map: non-finite tensor component"});
                break;
            }

    return report;
}

void require_valid(const Scenario& scenario) {
    const ValidationReport report = validate_scenario(scenario);
    if (!report.clean()) throw DataError("invalid scenario: " + report.summary());
}

}  // namespace spdcq
