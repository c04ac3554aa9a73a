#include "spdcq/spdcq.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdcq/constants.hpp"
#include "spdcq/dataset_io.hpp"
#include "spdcq/observables.hpp"
#include "spdcq/testbed.hpp"
#include "spdcq/validation.hpp"

using json = nlohmann::json;
namespace k = spdcq::constants;

namespace {

thread_local std::string g_last_error = "";

constexpr const char* kVersion = "0.1.0";

}  // namespace

struct spdcq_scenario {
    spdcq::Scenario scenario;
};

struct spdcq_table {
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    std::string meta;
};

namespace {

template <typename Fn>
spdcq_status run_guarded(Fn&& fn) {
    try {
        fn();
        return SPDCQ_OK;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return SPDCQ_ERROR_USAGE;
    } catch (const spdcq::NumericError& e) {
        g_last_error = e.what();
        return SPDCQ_ERROR_NUMERIC;
    } catch (const spdcq::DataError& e) {
        g_last_error = e.what();
        return SPDCQ_ERROR_DATA;
    } catch (const std::domain_error& e) {
        g_last_error = e.what();
        return SPDCQ_ERROR_DATA;
    } catch (const std::exception& e) {
        g_last_error = std::string("internal error: ") + e.what();
        return SPDCQ_ERROR_DATA;
    }
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

json parse_request(const char* request_json) {
    if (!request_json) throw std::invalid_argument("request JSON is null");
    try {
        return json::parse(request_json);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("invalid request JSON: ") + e.what());
    }
}

// Frequencies appear either as rad/s numbers or as wavelength strings with an
// explicit nm suffix ("1450nm"); the canonical internal unit is rad/s.
double parse_frequency(const json& value, const char* what) {
    if (value.is_number()) {
        const double omega = value.get<double>();
        if (!(omega > 0.0)) throw std::invalid_argument(std::string(what) + ": frequency must be positive");
        return omega;
    }
    if (value.is_string()) {
        const std::string s = value.get<std::string>();
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(what) + ": cannot parse '" + s + "'");
        }
        if (s.substr(pos) != "nm")
            throw std::invalid_argument(std::string(what) + ": wavelengths need an explicit nm suffix");
        if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + ": wavelength must be positive");
        return k::omega_from_wavelength(v * 1e-9);
    }
    throw std::invalid_argument(std::string(what) + ": expected a rad/s number or 'NNNnm' string");
}

spdcq::DetectionConfig parse_detection(const json& request, bool spectrum_defaults) {
    spdcq::DetectionConfig det;
    // Paper-style defaults: NA 0.7, f = 3.1 mm, SMF present; spectra magnify
    // the far-field pattern by 2.
    det.magnification = spectrum_defaults ? 2.0 : 1.0;
    det.fiber = spdcq::FiberMode{1.0e-3, {0.0, 0.0}};

    if (request.contains("detection")) {
        const json& d = request["detection"];
        det.na = d.value("na", det.na);
        det.focal_length = d.value("focal_length_m", det.focal_length);
        det.magnification = d.value("magnification", det.magnification);
        if (d.contains("fiber")) {
            if (d["fiber"].is_null()) {
                det.fiber.reset();
            } else {
                spdcq::FiberMode fiber;
                fiber.sigma = d["fiber"].value("sigma_m", 1.0e-3);
                if (d["fiber"].contains("offset_m"))
                    fiber.offset = d["fiber"]["offset_m"].get<std::array<double, 2>>();
                det.fiber = fiber;
            }
        }
        if (d.contains("filter") && !d["filter"].is_null()) {
            const double a = parse_frequency(d["filter"].at("min"), "filter.min");
            const double b = parse_frequency(d["filter"].at("max"), "filter.max");
            det.filter = spdcq::SpectralWindow{std::min(a, b), std::max(a, b)};
        }
        if (d.contains("knife") && !d["knife"].is_null()) {
            spdcq::KnifeState knife;
            knife.position = d["knife"].value("position_m", 0.0);
            knife.orientation = d["knife"].value("orientation", 1);
            det.knife = knife;
        }
        if (d.contains("polarization") && !d["polarization"].is_null()) {
            spdcq::PolarizationPair pol;
            pol.d_idler = d["polarization"].at("idler").get<std::array<double, 2>>();
            pol.d_signal = d["polarization"].at("signal").get<std::array<double, 2>>();
            det.polarization = pol;
        }
    }
    spdcq::validate_detection(det);
    return det;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count < 2) throw std::invalid_argument("omega grid: need at least 2 points");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return grid;
}

std::vector<double> parse_omega_grid(const json& request, const spdcq::Scenario& scenario,
                                     const spdcq::DetectionConfig& det) {
    std::size_t count = 201;
    double lo = 0.0, hi = 0.0;
    if (request.contains("omega_grid")) {
        const json& g = request["omega_grid"];
        count = g.value("count", count);
        const double a = parse_frequency(g.at("min"), "omega_grid.min");
        const double b = parse_frequency(g.at("max"), "omega_grid.max");
        lo = std::min(a, b);
        hi = std::max(a, b);
    } else if (det.filter) {
        lo = det.filter->omega_min;
        hi = det.filter->omega_max;
    } else {
        // Paper-style broadband collection window, 1340-1580 nm.
        lo = k::omega_from_wavelength(1580e-9);
        hi = k::omega_from_wavelength(1340e-9);
    }
    if (!(lo > 0.0) || !(hi < scenario.pump_omega))
        throw spdcq::DataError("omega grid extends outside (0, pump omega)");
    return linspace(lo, hi, count);
}

spdcq::EngineOptions parse_options(const json& request) {
    spdcq::EngineOptions options;
    if (request.contains("quadrature")) {
        options.theta_order = request["quadrature"].value("theta_order", options.theta_order);
        options.phi_order = request["quadrature"].value("phi_order", options.phi_order);
    }
    options.threads = request.value("threads", options.threads);
    options.omega_tolerance = request.value("omega_tolerance", options.omega_tolerance);
    return options;
}

json metadata_json(const spdcq::RateMetadata& meta) {
    return json{{"theta_order", meta.theta_order},
                {"phi_order", meta.phi_order},
                {"omega_points", meta.omega_points},
                {"richardson_error", meta.richardson_error},
                {"converged", meta.converged},
                {"warnings", meta.warnings}};
}

spdcq_table* table_xi(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, false);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const std::size_t top_k = request.value("top_k", 9);
    const double drop = request.value("drop_threshold", 1e-6);
    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, top_k, drop);

    auto out = std::make_unique<spdcq_table>();
    std::vector<double> wavelength;
    wavelength.reserve(grid.size());
    for (double w : grid) wavelength.push_back(k::wavelength_from_omega(w) * 1e9);
    out->columns.emplace_back("omega_s", grid);
    out->columns.emplace_back("wavelength_nm", std::move(wavelength));

    json curve_meta = json::array();
    for (const spdcq::XiCurve& curve : table.curves()) {
        std::vector<double> abs_values;
        abs_values.reserve(curve.values.size());
        for (const spdcq::complexd& z : curve.values) abs_values.push_back(std::abs(z));
        out->columns.emplace_back("abs_xi[" + curve.label_m + "," + curve.label_n + "]",
                                  std::move(abs_values));
        curve_meta.push_back(json{{"idler_mode", curve.label_m},
                                  {"signal_mode", curve.label_n},
                                  {"peak_abs", curve.peak_abs}});
    }

    json g_meta = json::array();
    const std::size_t n = table.mode_count();
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j)
            g_meta.push_back(json{{"idler_mode", table.labels()[m]},
                                  {"signal_mode", table.labels()[j]},
                                  {"re", table.g(m, j).real()},
                                  {"im", table.g(m, j).imag()},
                                  {"kept", table.pair_kept(m, j)}});

    out->meta = json{{"op", "xi"},
                     {"curves", curve_meta},
                     {"g", g_meta},
                     {"empty_mask_warning", table.empty_mask_warning()}}
                    .dump();
    return out.release();
}

spdcq_table* table_rate(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, false);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const spdcq::EngineOptions options = parse_options(request);
    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, 1);
    const spdcq::RateResult result = spdcq::detected_pair_rate(scenario, det, grid, table, options);

    auto out = std::make_unique<spdcq_table>();
    std::vector<double> mi, mj, re, im;
    json labels = json::array();
    for (std::size_t p = 0; p < result.breakdown.size(); ++p) {
        const spdcq::PairContribution& pc = result.breakdown[p];
        labels.push_back(json::array({pc.idler_label, pc.signal_label}));
        mi.push_back(static_cast<double>(p / table.mode_count()));
        mj.push_back(static_cast<double>(p % table.mode_count()));
        re.push_back(pc.value.real());
        im.push_back(pc.value.imag());
    }
    out->columns.emplace_back("idler_index", std::move(mi));
    out->columns.emplace_back("signal_index", std::move(mj));
    out->columns.emplace_back("contribution_re", std::move(re));
    out->columns.emplace_back("contribution_im", std::move(im));
    out->meta = json{{"op", "rate"},
                     {"rate", result.rate},
                     {"pair_labels", labels},
                     {"metadata", metadata_json(result.metadata)}}
                    .dump();
    return out.release();
}

spdcq_table* table_spectrum(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, true);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const spdcq::EngineOptions options = parse_options(request);
    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, 1);
    const spdcq::SpectrumCurve curve = spdcq::spectrum(scenario, det, grid, table, options);

    auto out = std::make_unique<spdcq_table>();
    std::vector<double> wavelength_nm;
    wavelength_nm.reserve(curve.wavelength.size());
    for (double w : curve.wavelength) wavelength_nm.push_back(w * 1e9);
    out->columns.emplace_back("omega_s", curve.omega_s);
    out->columns.emplace_back("wavelength_nm", std::move(wavelength_nm));
    out->columns.emplace_back("density", curve.density);
    out->meta = json{{"op", "spectrum"}, {"metadata", metadata_json(curve.metadata)}}.dump();
    return out.release();
}

spdcq_table* table_farfield(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, false);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const spdcq::EngineOptions options = parse_options(request);
    std::size_t n_theta = 181, n_phi = 360;
    if (request.contains("resolution")) {
        n_theta = request["resolution"].value("n_theta", n_theta);
        n_phi = request["resolution"].value("n_phi", n_phi);
    }
    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, 1);
    const spdcq::FarFieldMap map =
        spdcq::farfield_map(scenario, det, grid, n_theta, n_phi, table, options);

    auto out = std::make_unique<spdcq_table>();
    std::vector<double> theta, phi, density;
    theta.reserve(map.density.size());
    phi.reserve(map.density.size());
    for (std::size_t it = 0; it < map.theta_nodes.size(); ++it)
        for (std::size_t ip = 0; ip < map.phi_nodes.size(); ++ip) {
            theta.push_back(map.theta_nodes[it]);
            phi.push_back(map.phi_nodes[ip]);
        }
    out->columns.emplace_back("theta", std::move(theta));
    out->columns.emplace_back("phi", std::move(phi));
    out->columns.emplace_back("density", map.density);
    out->meta = json{{"op", "farfield"},
                     {"n_theta", map.theta_nodes.size()},
                     {"n_phi", map.phi_nodes.size()},
                     {"metadata", metadata_json(map.metadata)}}
                    .dump();
    return out.release();
}

spdcq_table* table_knife(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, false);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const spdcq::EngineOptions options = parse_options(request);

    std::vector<double> positions;
    if (request.contains("positions_m") && request["positions_m"].is_array()) {
        positions = request["positions_m"].get<std::vector<double>>();
    } else if (request.contains("positions_m")) {
        const json& p = request["positions_m"];
        positions = linspace(p.at("min").get<double>(), p.at("max").get<double>(),
                             p.value("count", 41));
    } else {
        const double span = det.focal_length * det.magnification * det.na;
        positions = linspace(-1.5 * span, 1.5 * span, 41);
    }

    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, 1);
    const spdcq::KnifeScan scan = spdcq::knife_scan(scenario, det, positions, grid, table, options);

    auto out = std::make_unique<spdcq_table>();
    out->columns.emplace_back("position_m", scan.positions);
    out->columns.emplace_back("rate", scan.rates);
    out->meta = json{{"op", "knife"}}.dump();
    return out.release();
}

spdcq_table* table_mc_check(const spdcq::Scenario& scenario, const json& request) {
    const spdcq::DetectionConfig det = parse_detection(request, false);
    const std::vector<double> grid = parse_omega_grid(request, scenario, det);
    const spdcq::EngineOptions options = parse_options(request);
    const std::size_t samples = request.value("samples", 1000000);
    const std::uint64_t seed = request.value("seed", 1ULL);

    const spdcq::OverlapTable table = spdcq::xi_table(scenario, grid, 1);
    const spdcq::RateResult quad = spdcq::detected_pair_rate(scenario, det, grid, table, options);
    const spdcq::MonteCarloEstimate mc = spdcq::monte_carlo_rate(
        scenario, det, table, grid.front(), grid.back(), seed, samples, options.threads);

    const double z = mc.standard_error > 0.0
                         ? std::abs(quad.rate - mc.rate) / mc.standard_error
                         : (quad.rate == mc.rate ? 0.0 : HUGE_VAL);
    const bool pass = z < 3.0;

    auto out = std::make_unique<spdcq_table>();
    out->columns.emplace_back("quadrature_rate", std::vector<double>{quad.rate});
    out->columns.emplace_back("mc_rate", std::vector<double>{mc.rate});
    out->columns.emplace_back("mc_stderr", std::vector<double>{mc.standard_error});
    out->columns.emplace_back("z_score", std::vector<double>{z});
    out->columns.emplace_back("pass", std::vector<double>{pass ? 1.0 : 0.0});
    out->meta = json{{"op", "mc-check"},
                     {"samples", samples},
                     {"seed", seed},
                     {"pass", pass},
                     {"metadata", metadata_json(quad.metadata)}}
                    .dump();
    return out.release();
}

}  // namespace

extern "C" {

const char* spdcq_version(void) { return kVersion; }

const char* spdcq_last_error(void) { return g_last_error.c_str(); }

spdcq_status spdcq_scenario_open(const char* path, spdcq_scenario** out) {
    return run_guarded([&] {
        if (!path || !out) throw std::invalid_argument("scenario_open: null argument");
        auto handle = std::make_unique<spdcq_scenario>();
        handle->scenario = spdcq::read_scenario(path);
        *out = handle.release();
    });
}

spdcq_status spdcq_scenario_generate(const char* options_json, spdcq_scenario** out) {
    return run_guarded([&] {
        if (!options_json || !out) throw std::invalid_argument("scenario_generate: null argument");
        auto handle = std::make_unique<spdcq_scenario>();
        handle->scenario = spdcq::make_preset_scenario(options_json);
        *out = handle.release();
    });
}

spdcq_status spdcq_scenario_save(const spdcq_scenario* scenario, const char* path) {
    return run_guarded([&] {
        if (!scenario || !path) throw std::invalid_argument("scenario_save: null argument");
        spdcq::write_scenario(scenario->scenario, path);
    });
}

spdcq_status spdcq_scenario_info(const spdcq_scenario* scenario, char** json_out) {
    return run_guarded([&] {
        if (!scenario || !json_out) throw std::invalid_argument("scenario_info: null argument");
        *json_out = copy_string(spdcq::scenario_info_json(scenario->scenario));
    });
}

void spdcq_scenario_free(spdcq_scenario* scenario) { delete scenario; }

spdcq_status spdcq_compute(const spdcq_scenario* scenario, const char* request_json,
                           spdcq_table** out) {
    return run_guarded([&] {
        if (!scenario || !out) throw std::invalid_argument("compute: null argument");
        const json request = parse_request(request_json);
        const std::string op = request.value("op", "");
        if (op == "xi")
            *out = table_xi(scenario->scenario, request);
        else if (op == "rate")
            *out = table_rate(scenario->scenario, request);
        else if (op == "spectrum")
            *out = table_spectrum(scenario->scenario, request);
        else if (op == "farfield")
            *out = table_farfield(scenario->scenario, request);
        else if (op == "knife")
            *out = table_knife(scenario->scenario, request);
        else if (op == "mc-check")
            *out = table_mc_check(scenario->scenario, request);
        else
            throw std::invalid_argument("unknown op '" + op + "'");
    });
}

spdcq_status spdcq_sweep(const char* request_json, spdcq_table** out) {
    return run_guarded([&] {
        if (!out) throw std::invalid_argument("sweep: null argument");
        const json request = parse_request(request_json);
        if (!request.contains("members") || !request["members"].is_array() ||
            request["members"].empty())
            throw std::invalid_argument("sweep: request needs a non-empty members array");

        std::vector<spdcq::SweepMember> members;
        for (const json& m : request["members"]) {
            spdcq::SweepMember member;
            member.fs = m.at("fs").get<double>();
            member.scenario = spdcq::read_scenario(m.at("path").get<std::string>());
            members.push_back(std::move(member));
        }

        const spdcq::DetectionConfig det = parse_detection(request, false);
        const std::vector<double> grid = parse_omega_grid(request, members.front().scenario, det);
        const spdcq::EngineOptions options = parse_options(request);
        const bool full_sum = request.value("full_sum", false);

        const std::vector<spdcq::SweepPoint> points =
            spdcq::scaling_sweep(members, det, grid, options, full_sum);

        auto table = std::make_unique<spdcq_table>();
        std::vector<double> fs, omega1, gamma1, detuning, g11, volume, rate, normalized;
        for (const spdcq::SweepPoint& p : points) {
            fs.push_back(p.fs);
            omega1.push_back(p.eigenfrequency_1.omega);
            gamma1.push_back(p.eigenfrequency_1.gamma);
            detuning.push_back(p.detuning_hz);
            g11.push_back(p.g11_abs);
            volume.push_back(p.volume);
            rate.push_back(p.rate);
            normalized.push_back(p.normalized_rate);
        }
        table->columns.emplace_back("fs", std::move(fs));
        table->columns.emplace_back("omega_1", std::move(omega1));
        table->columns.emplace_back("gamma_1", std::move(gamma1));
        table->columns.emplace_back("detuning_hz", std::move(detuning));
        table->columns.emplace_back("g11_abs", std::move(g11));
        table->columns.emplace_back("volume_m3", std::move(volume));
        table->columns.emplace_back("rate", std::move(rate));
        table->columns.emplace_back("normalized_rate", std::move(normalized));
        table->meta = json{{"op", "sweep"}, {"full_sum", full_sum}}.dump();
        *out = table.release();
    });
}

spdcq_status spdcq_fit_erf(const double* positions, const double* rates, size_t count,
                           char** json_out) {
    return run_guarded([&] {
        if (!positions || !rates || !json_out)
            throw std::invalid_argument("fit_erf: null argument");
        const std::vector<double> x(positions, positions + count);
        const std::vector<double> y(rates, rates + count);
        const spdcq::ErfFit fit = spdcq::fit_erf(x, y);
        const json result{{"m", fit.m},
                          {"x0", fit.x0},
                          {"amplitude", fit.amplitude},
                          {"offset", fit.offset},
                          {"ci95", json{{"m", fit.ci95[0]},
                                        {"x0", fit.ci95[1]},
                                        {"amplitude", fit.ci95[2]},
                                        {"offset", fit.ci95[3]}}},
                          {"residual_norm", fit.residual_norm},
                          {"iterations", fit.iterations}};
        *json_out = copy_string(result.dump());
    });
}

size_t spdcq_table_column_count(const spdcq_table* table) {
    return table ? table->columns.size() : 0;
}

size_t spdcq_table_row_count(const spdcq_table* table) {
    if (!table || table->columns.empty()) return 0;
    return table->columns.front().second.size();
}

const char* spdcq_table_column_name(const spdcq_table* table, size_t column) {
    if (!table || column >= table->columns.size()) return nullptr;
    return table->columns[column].first.c_str();
}

const double* spdcq_table_column_data(const spdcq_table* table, size_t column) {
    if (!table || column >= table->columns.size()) return nullptr;
    return table->columns[column].second.data();
}

const char* spdcq_table_meta_json(const spdcq_table* table) {
    return table ? table->meta.c_str() : nullptr;
}

void spdcq_table_free(spdcq_table* table) { delete table; }

void spdcq_string_free(char* s) { delete[] s; }

}  // extern "C"
