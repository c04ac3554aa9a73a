#include "spdcq/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spdcq/constants.hpp"
#include "spdcq/validation.hpp"

namespace spdcq {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kFormatVersion = 1;

json units_block() {
    return json{{"omega", "rad/s"},
                {"length", "m"},
                {"chi2", "m/V"},
                {"pump_field", "V/m"},
                {"mode_field", "normalized QNM units"},
                {"far_field", "radius-removed angular amplitude"}};
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

// ---- writing ---------------------------------------------------------------

json write_array(const std::vector<complexd>& values, const std::vector<std::size_t>& shape,
                 const std::string& blob_name, const fs::path& dir, std::size_t inline_threshold,
                 const std::string& context) {
    if (values.size() != shape_product(shape))
        throw ParseError(context + ": value count does not match declared shape");

    json node;
    node["shape"] = shape;
    if (values.size() <= inline_threshold) {
        json data = json::array();
        for (const complexd& z : values) data.push_back(json::array({z.real(), z.imag()}));
        node["data"] = json{{"inline", std::move(data)}};
    } else {
        std::ofstream out(dir / blob_name, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError(context + ": cannot open blob '" + blob_name + "' for writing");
        // complex float64, little endian, re/im interleaved, row-major with
        // the last index fastest; matches the in-memory layout on this
        // platform family.
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(complexd)));
        if (!out) throw ParseError(context + ": short write to blob '" + blob_name + "'");
        node["data"] = json{{"blob", json{{"path", blob_name}, {"byte_order", "little"}}}};
    }
    return node;
}

// ---- reading ---------------------------------------------------------------

struct Context {
    fs::path manifest_path;
    fs::path dir;

    [[noreturn]] void fail(const std::string& where, const std::string& what) const {
        throw ParseError(manifest_path.string() + ": " + where + ": " + what);
    }
};

std::vector<complexd> read_array(const json& node, const std::vector<std::size_t>& expected_shape,
                                 const Context& ctx, const std::string& where) {
    if (!node.is_object() || !node.contains("shape") || !node.contains("data"))
        ctx.fail(where, "array needs 'shape' and 'data'");

    std::vector<std::size_t> shape;
    try {
        shape = node["shape"].get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
        ctx.fail(where, "malformed shape");
    }
    if (!expected_shape.empty() && shape != expected_shape) {
        std::string want, got;
        for (std::size_t s : expected_shape) want += std::to_string(s) + " ";
        for (std::size_t s : shape) got += std::to_string(s) + " ";
        ctx.fail(where, "shape mismatch: declared [ " + got + "], expected [ " + want + "]");
    }
    const std::size_t count = shape_product(shape);

    std::vector<complexd> values;
    const json& data = node["data"];
    if (data.contains("inline")) {
        const json& inline_data = data["inline"];
        if (!inline_data.is_array() || inline_data.size() != count)
            ctx.fail(where, "inline array length does not match shape");
        values.reserve(count);
        for (const json& pair : inline_data) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
                ctx.fail(where, "inline values must be [re, im] number pairs");
            values.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
    } else if (data.contains("blob")) {
        const json& blob = data["blob"];
        if (!blob.contains("path") || !blob["path"].is_string())
            ctx.fail(where, "blob reference lacks a path");
        const std::string byte_order = blob.value("byte_order", "little");
        if (byte_order != "little")
            ctx.fail(where, "unsupported byte order '" + byte_order + "'");
        const fs::path path = ctx.dir / blob["path"].get<std::string>();
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in)
            ctx.fail(where, "missing blob '" + path.string() + "'");
        const std::size_t expected_bytes = count * sizeof(complexd);
        const auto actual_bytes = static_cast<std::size_t>(in.tellg());
        if (actual_bytes != expected_bytes)
            ctx.fail(where, "blob '" + path.string() + "' holds " + std::to_string(actual_bytes) +
                                " bytes, expected " + std::to_string(expected_bytes));
        in.seekg(0);
        values.resize(count);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(expected_bytes));
        if (!in) ctx.fail(where, "short read from blob '" + path.string() + "'");
    } else {
        ctx.fail(where, "array data must be 'inline' or 'blob'");
    }

    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i].real()) || !std::isfinite(values[i].imag()))
            ctx.fail(where, "non-finite value at flat index " + std::to_string(i));
    return values;
}

double require_number(const json& node, const char* key, const Context& ctx,
                      const std::string& where) {
    if (!node.contains(key) || !node[key].is_number())
        ctx.fail(where, std::string("missing numeric '") + key + "'");
    return node[key].get<double>();
}

}  // namespace

void write_scenario(const Scenario& scenario, const std::string& path,
                    const WriteOptions& options) {
    require_valid(scenario);

    const fs::path manifest_path(path);
    const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const std::string stem = manifest_path.stem().string();

    const NearFieldGrid& grid = scenario.pump_field;
    const std::vector<std::size_t> near_shape{grid.shape[0], grid.shape[1], grid.shape[2], 3};

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["kind"] = "spdcq-scenario";
    manifest["units"] = units_block();
    manifest["grid"] = json{{"origin_m", grid.origin}, {"spacing_m", grid.spacing},
                            {"shape", grid.shape}};
    manifest["medium"] = json{{"n_idler", scenario.n_idler}, {"n_signal", scenario.n_signal}};
    manifest["volume_m3"] = scenario.volume;
    manifest["pump"] = json{
        {"omega_rad_s", scenario.pump_omega},
        {"intensity_w_m2", scenario.pump_intensity},
        {"field", write_array(grid.values, near_shape, stem + "__pump.bin", dir,
                              options.inline_threshold, "pump field")}};

    json modes = json::array();
    for (std::size_t i = 0; i < scenario.modes.size(); ++i) {
        const QnmMode& mode = scenario.modes[i];
        const std::string tag = stem + "__mode" + std::to_string(i);
        const std::vector<std::size_t> amp_shape{mode.far_field.n_theta(), mode.far_field.n_phi()};
        json m;
        m["label"] = mode.label;
        m["eigenfrequency_rad_s"] = json{{"omega", mode.eigenfrequency.omega},
                                         {"gamma", mode.eigenfrequency.gamma}};
        m["near_field"] = write_array(mode.near_field.values, near_shape, tag + "_near.bin", dir,
                                      options.inline_threshold, "mode near field");
        m["far_field"] = json{
            {"theta_rad", mode.far_field.theta_nodes},
            {"phi_rad", mode.far_field.phi_nodes},
            {"reference_radius_m", mode.far_field.reference_radius},
            {"amp_theta", write_array(mode.far_field.amp_theta, amp_shape, tag + "_amp_theta.bin",
                                      dir, options.inline_threshold, "far-field amplitude")},
            {"amp_phi", write_array(mode.far_field.amp_phi, amp_shape, tag + "_amp_phi.bin", dir,
                                    options.inline_threshold, "far-field amplitude")}};
        modes.push_back(std::move(m));
    }
    manifest["modes"] = std::move(modes);

    json regions = json::array();
    for (const Chi2Tensor& t : scenario.chi2.regions)
        regions.push_back(json{{"tensor_m_per_v", t.c}});
    manifest["chi2"] = json{{"region_mask", scenario.chi2.region_mask}, {"regions", regions}};

    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << manifest.dump(2) << "\n";
    if (!out) throw ParseError("short write to '" + path + "'");
}

Scenario read_scenario(const std::string& path) {
    Context ctx;
    ctx.manifest_path = path;
    ctx.dir = ctx.manifest_path.has_parent_path() ? ctx.manifest_path.parent_path() : fs::path(".");

    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest '" + path + "'");
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }

    if (!manifest.contains("format_version") || !manifest["format_version"].is_number_integer())
        ctx.fail("manifest", "missing integer format_version");
    const int version = manifest["format_version"].get<int>();
    if (version != kFormatVersion)
        ctx.fail("manifest", "unknown format_version " + std::to_string(version) + ", expected " +
                                 std::to_string(kFormatVersion));
    if (!manifest.contains("units") || !manifest["units"].is_object() ||
        manifest["units"].value("omega", "") != "rad/s")
        ctx.fail("manifest", "missing or non-canonical units declaration");

    Scenario scenario;
    try {

    const json& grid_node = manifest.at("grid");
    NearFieldGrid geometry;
    try {
        const auto origin = grid_node.at("origin_m").get<std::array<double, 3>>();
        const auto spacing = grid_node.at("spacing_m").get<std::array<double, 3>>();
        const auto shape = grid_node.at("shape").get<std::array<std::size_t, 3>>();
        geometry.origin = origin;
        geometry.spacing = spacing;
        geometry.shape = shape;
    } catch (const json::exception& e) {
        ctx.fail("grid", e.what());
    }
    const std::vector<std::size_t> near_shape{geometry.shape[0], geometry.shape[1],
                                              geometry.shape[2], 3};

    const json& pump = manifest.at("pump");
    scenario.pump_omega = require_number(pump, "omega_rad_s", ctx, "pump");
    scenario.pump_intensity = pump.value("intensity_w_m2", 0.0);
    scenario.pump_field = geometry;
    scenario.pump_field.values = read_array(pump.at("field"), near_shape, ctx, "pump.field");

    const json& medium = manifest.at("medium");
    scenario.n_idler = require_number(medium, "n_idler", ctx, "medium");
    scenario.n_signal = require_number(medium, "n_signal", ctx, "medium");
    scenario.volume = require_number(manifest, "volume_m3", ctx, "manifest");

    if (!manifest.contains("modes") || !manifest["modes"].is_array())
        ctx.fail("manifest", "missing modes array");
    std::size_t mode_index = 0;
    for (const json& m : manifest["modes"]) {
        const std::string where = "modes[" + std::to_string(mode_index++) + "]";
        QnmMode mode;
        if (!m.contains("label") || !m["label"].is_string()) ctx.fail(where, "missing label");
        mode.label = m["label"].get<std::string>();
        const json& ef = m.at("eigenfrequency_rad_s");
        mode.eigenfrequency.omega = require_number(ef, "omega", ctx, where);
        mode.eigenfrequency.gamma = require_number(ef, "gamma", ctx, where);

        mode.near_field = geometry;
        mode.near_field.values = read_array(m.at("near_field"), near_shape, ctx, where + ".near_field");

        const json& ff = m.at("far_field");
        try {
            mode.far_field.theta_nodes = ff.at("theta_rad").get<std::vector<double>>();
            mode.far_field.phi_nodes = ff.at("phi_rad").get<std::vector<double>>();
        } catch (const json::exception& e) {
            ctx.fail(where + ".far_field", e.what());
        }
        mode.far_field.reference_radius = ff.value("reference_radius_m", 1.0);
        const std::vector<std::size_t> amp_shape{mode.far_field.theta_nodes.size(),
                                                 mode.far_field.phi_nodes.size()};
        mode.far_field.amp_theta =
            read_array(ff.at("amp_theta"), amp_shape, ctx, where + ".far_field.amp_theta");
        mode.far_field.amp_phi =
            read_array(ff.at("amp_phi"), amp_shape, ctx, where + ".far_field.amp_phi");
        scenario.modes.push_back(std::move(mode));
    }

    const json& chi2 = manifest.at("chi2");
    scenario.chi2.shape = geometry.shape;
    try {
        scenario.chi2.region_mask = chi2.at("region_mask").get<std::vector<std::uint32_t>>();
    } catch (const json::exception& e) {
        ctx.fail("chi2.region_mask", e.what());
    }
    if (!chi2.contains("regions") || !chi2["regions"].is_array())
        ctx.fail("chi2", "missing regions array");
    for (const json& r : chi2["regions"]) {
        Chi2Tensor t;
        try {
            t.c = r.at("tensor_m_per_v").get<std::array<double, 27>>();
        } catch (const json::exception& e) {
            ctx.fail("chi2.regions", e.what());
        }
        scenario.chi2.regions.push_back(t);
    }

    } catch (const json::exception& e) {
        throw ParseError(path + ": malformed manifest: " + std::string(e.what()));
    }

    const ValidationReport report = validate_scenario(scenario);
    if (!report.clean()) throw ParseError(path + ": invalid scenario: " + report.summary());
    return scenario;
}

std::string scenario_info_json(const Scenario& scenario) {
    json info;
    info["pump"] = json{{"omega_rad_s", scenario.pump_omega},
                        {"wavelength_nm", constants::wavelength_from_omega(scenario.pump_omega) * 1e9},
                        {"intensity_w_m2", scenario.pump_intensity}};
    info["degenerate"] = json{
        {"omega_rad_s", scenario.degenerate_omega()},
        {"wavelength_nm", constants::wavelength_from_omega(scenario.degenerate_omega()) * 1e9}};
    info["medium"] = json{{"n_idler", scenario.n_idler}, {"n_signal", scenario.n_signal}};
    info["volume_m3"] = scenario.volume;
    info["grid"] = json{{"origin_m", scenario.pump_field.origin},
                        {"spacing_m", scenario.pump_field.spacing},
                        {"shape", scenario.pump_field.shape}};

    json modes = json::array();
    for (const QnmMode& mode : scenario.modes) {
        modes.push_back(json{
            {"label", mode.label},
            {"omega_rad_s", mode.eigenfrequency.omega},
            {"gamma_rad_s", mode.eigenfrequency.gamma},
            {"q_factor", q_factor(mode.eigenfrequency)},
            {"wavelength_nm", constants::wavelength_from_omega(mode.eigenfrequency.omega) * 1e9},
            {"far_field_grid", json::array({mode.far_field.n_theta(), mode.far_field.n_phi()})}});
    }
    info["modes"] = std::move(modes);
    info["validation"] = validate_scenario(scenario).clean() ? "clean" : "dirty";
    return info.dump(2);
}

}  // namespace spdcq
