// Command-line front end of the spdcq shared library. Everything numerical
// happens behind the C API in spdcq/spdcq.h; this file only assembles request
// JSON from flags, formats result tables as CSV/JSON and writes run records.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spdcq/spdcq.h"

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[16384];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

[[noreturn]] void usage_error(const std::string& message) {
    throw CLI::ValidationError(message);
}

// Frequency endpoint: plain number = rad/s, nm suffix = wavelength.
json frequency_token(const std::string& token) {
    if (token.size() > 2 && token.substr(token.size() - 2) == "nm") return token;
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos == token.size()) return v;
    } catch (const std::exception&) {
    }
    usage_error("cannot parse frequency '" + token + "' (rad/s number or NNNnm)");
}

// ---------------------------------------------------------------------------
// shared flag block -> request JSON
// ---------------------------------------------------------------------------

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::string quadrature;
    int threads = -1;
    std::int64_t seed = -1;

    std::string omega_grid;   // min:max:count
    std::string filter;       // A:Bnm
    double na = -1.0;
    double focal_length = -1.0;
    double magnification = -1.0;
    double sigma = -1.0;
    std::string fiber_offset;  // x,y in m
    bool no_fiber = false;
    std::optional<double> knife_position;
    int knife_orientation = 0;

    void attach(CLI::App* cmd, bool with_detection = true) {
        cmd->add_option("--config", config_path, "request JSON file merged under the flags");
        cmd->add_option("--out", out_path, "output path (default: stdout)");
        cmd->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--quadrature", quadrature, "angular orders, e.g. 32x64");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_option("--seed", seed, "random seed");
        if (with_detection) {
            cmd->add_option("--omega-grid", omega_grid,
                            "signal grid min:max:count (endpoints rad/s or NNNnm)");
            cmd->add_option("--filter", filter, "bandpass window, e.g. 1425:1475nm");
            cmd->add_option("--na", na, "numerical aperture");
            cmd->add_option("--focal-length", focal_length, "collection focal length (m)");
            cmd->add_option("--magnification", magnification, "far-field magnification");
            cmd->add_option("--sigma", sigma, "fiber mode radius in the mapped plane (m)");
            cmd->add_option("--fiber-offset", fiber_offset, "fiber offset x,y (m)");
            cmd->add_flag("--no-fiber", no_fiber, "disable the fiber weight");
            cmd->add_option("--knife-position", knife_position, "knife edge position (m)");
            cmd->add_option("--knife-orientation", knife_orientation, "+1 blocks x>pos, -1 x<pos");
        }
    }

    json request(const std::string& op) const {
        json req;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) usage_error("cannot open config '" + config_path + "'");
            try {
                req = json::parse(in);
            } catch (const json::exception& e) {
                usage_error("config '" + config_path + "': " + e.what());
            }
        }
        req["op"] = op;
        if (threads >= 0) req["threads"] = threads;
        if (seed >= 0) req["seed"] = seed;
        if (!quadrature.empty()) {
            const auto parts = split(quadrature, 'x');
            if (parts.size() != 2) usage_error("--quadrature expects THETAxPHI, e.g. 32x64");
            req["quadrature"] = {{"theta_order", std::stoi(parts[0])},
                                 {"phi_order", std::stoi(parts[1])}};
        }
        if (!omega_grid.empty()) {
            const auto parts = split(omega_grid, ':');
            if (parts.size() != 3) usage_error("--omega-grid expects min:max:count");
            req["omega_grid"] = {{"min", frequency_token(parts[0])},
                                 {"max", frequency_token(parts[1])},
                                 {"count", std::stoul(parts[2])}};
        }

        json det = req.value("detection", json::object());
        if (na >= 0.0) det["na"] = na;
        if (focal_length >= 0.0) det["focal_length_m"] = focal_length;
        if (magnification >= 0.0) det["magnification"] = magnification;
        if (!filter.empty()) {
            auto parts = split(filter, ':');
            if (parts.size() != 2) usage_error("--filter expects A:B or A:Bnm");
            // a trailing nm on the second endpoint applies to both
            const std::string& b = parts[1];
            if (b.size() > 2 && b.substr(b.size() - 2) == "nm" &&
                !(parts[0].size() > 2 && parts[0].substr(parts[0].size() - 2) == "nm"))
                parts[0] += "nm";
            det["filter"] = {{"min", frequency_token(parts[0])},
                             {"max", frequency_token(parts[1])}};
        }
        if (no_fiber) {
            det["fiber"] = nullptr;
        } else if (sigma >= 0.0 || !fiber_offset.empty()) {
            json fiber = det.value("fiber", json::object());
            if (fiber.is_null()) fiber = json::object();
            if (sigma >= 0.0) fiber["sigma_m"] = sigma;
            if (!fiber_offset.empty()) {
                const auto parts = split(fiber_offset, ',');
                if (parts.size() != 2) usage_error("--fiber-offset expects x,y in meters");
                fiber["offset_m"] = {std::stod(parts[0]), std::stod(parts[1])};
            }
            det["fiber"] = fiber;
        }
        if (knife_position) {
            json knife = det.value("knife", json::object());
            knife["position_m"] = *knife_position;
            if (knife_orientation != 0) knife["orientation"] = knife_orientation;
            det["knife"] = knife;
        }
        if (!det.empty()) req["detection"] = det;
        return req;
    }
};

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

class Fail {
public:
    explicit Fail(int code) : code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

void check(spdcq_status status) {
    if (status == SPDCQ_OK) return;
    std::cerr << "error: " << spdcq_last_error() << "\n";
    throw Fail(static_cast<int>(status));
}

std::string table_to_csv(const spdcq_table* table) {
    const size_t n_cols = spdcq_table_column_count(table);
    const size_t n_rows = spdcq_table_row_count(table);
    std::string out;
    for (size_t c = 0; c < n_cols; ++c) {
        if (c) out += ',';
        out += spdcq_table_column_name(table, c);
    }
    out += '\n';
    for (size_t r = 0; r < n_rows; ++r) {
        for (size_t c = 0; c < n_cols; ++c) {
            if (c) out += ',';
            out += format_double(spdcq_table_column_data(table, c)[r]);
        }
        out += '\n';
    }
    return out;
}

std::string table_to_json(const spdcq_table* table) {
    json out;
    out["meta"] = json::parse(spdcq_table_meta_json(table));
    const size_t n_cols = spdcq_table_column_count(table);
    const size_t n_rows = spdcq_table_row_count(table);
    json columns = json::object();
    for (size_t c = 0; c < n_cols; ++c) {
        const double* data = spdcq_table_column_data(table, c);
        columns[spdcq_table_column_name(table, c)] = std::vector<double>(data, data + n_rows);
    }
    out["columns"] = columns;
    return out.dump(2) + "\n";
}

void write_output(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
        std::cerr << "error: cannot open '" << out_path << "' for writing\n";
        throw Fail(2);
    }
    out << content;
    if (!out) {
        std::cerr << "error: short write to '" << out_path << "'\n";
        throw Fail(2);
    }
}

// Machine-readable provenance next to file outputs.
void write_run_record(const std::string& out_path, const std::string& command,
                      const std::vector<std::string>& inputs, const json& request) {
    if (out_path.empty()) return;
    json record;
    record["command"] = command;
    record["request"] = request;
    record["library_version"] = spdcq_version();
    json in = json::array();
    for (const std::string& path : inputs) {
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016" PRIx64, fnv1a64_file(path));
        in.push_back({{"path", path}, {"fnv1a64", hash}});
    }
    record["inputs"] = in;
    std::ofstream out(out_path + ".run.json", std::ios::trunc);
    if (out) out << record.dump(2) << "\n";
}

struct ScenarioHandle {
    spdcq_scenario* ptr = nullptr;
    ~ScenarioHandle() { spdcq_scenario_free(ptr); }
};

struct TableHandle {
    spdcq_table* ptr = nullptr;
    ~TableHandle() { spdcq_table_free(ptr); }
};

int emit_table(const spdcq_table* table, const CommonFlags& flags, const std::string& command,
               const std::vector<std::string>& inputs, const json& request) {
    write_output(flags.format == "json" ? table_to_json(table) : table_to_csv(table),
                 flags.out_path);
    write_run_record(flags.out_path, command, inputs, request);

    const json meta = json::parse(spdcq_table_meta_json(table));
    if (meta.contains("metadata") && meta["metadata"].is_object() &&
        meta["metadata"].value("converged", true) == false) {
        std::cerr << "warning: frequency integral did not reach the requested tolerance\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// subcommand handlers
// ---------------------------------------------------------------------------

int run_inspect(const std::string& dataset, const CommonFlags& flags) {
    ScenarioHandle scenario;
    check(spdcq_scenario_open(dataset.c_str(), &scenario.ptr));
    char* info_cstr = nullptr;
    check(spdcq_scenario_info(scenario.ptr, &info_cstr));
    std::string info(info_cstr);
    spdcq_string_free(info_cstr);

    if (flags.format == "json") {
        write_output(info + "\n", flags.out_path);
    } else {
        const json parsed = json::parse(info);
        std::string csv = "label,omega_rad_s,gamma_rad_s,q_factor,wavelength_nm\n";
        for (const json& mode : parsed["modes"]) {
            csv += mode["label"].get<std::string>() + ',' +
                   format_double(mode["omega_rad_s"].get<double>()) + ',' +
                   format_double(mode["gamma_rad_s"].get<double>()) + ',' +
                   format_double(mode["q_factor"].get<double>()) + ',' +
                   format_double(mode["wavelength_nm"].get<double>()) + '\n';
        }
        write_output(csv, flags.out_path);
    }
    write_run_record(flags.out_path, "inspect", {dataset}, json{{"op", "inspect"}});
    return 0;
}

int run_compute(const std::string& op, const std::string& dataset, const CommonFlags& flags,
                json request) {
    ScenarioHandle scenario;
    check(spdcq_scenario_open(dataset.c_str(), &scenario.ptr));
    TableHandle table;
    check(spdcq_compute(scenario.ptr, request.dump().c_str(), &table.ptr));

    if (op == "rate") {
        const json meta = json::parse(spdcq_table_meta_json(table.ptr));
        const json& md = meta["metadata"];
        std::cerr << "rate = " << format_double(meta["rate"].get<double>())
                  << " pairs/s  (quadrature " << md["theta_order"] << "x" << md["phi_order"]
                  << ", omega points " << md["omega_points"] << ", richardson "
                  << format_double(md["richardson_error"].get<double>())
                  << (md["converged"].get<bool>() ? ", converged" : ", NOT converged") << ")\n";
    }
    if (op == "mc-check") {
        const size_t cols = spdcq_table_column_count(table.ptr);
        std::string line;
        for (size_t c = 0; c + 1 < cols; ++c) {
            line += std::string(spdcq_table_column_name(table.ptr, c)) + "=" +
                    format_double(spdcq_table_column_data(table.ptr, c)[0]) + "  ";
        }
        const bool pass = spdcq_table_column_data(table.ptr, cols - 1)[0] > 0.5;
        std::cerr << line << (pass ? "PASS" : "FAIL") << "\n";
        const int code = emit_table(table.ptr, flags, op, {dataset}, request);
        return pass ? code : 3;
    }
    return emit_table(table.ptr, flags, op, {dataset}, request);
}

int run_fit_erf(const std::string& scan_csv, const CommonFlags& flags) {
    std::ifstream in(scan_csv);
    if (!in) {
        std::cerr << "error: cannot open scan '" << scan_csv << "'\n";
        return 2;
    }
    std::string header;
    std::getline(in, header);
    const auto names = split(header, ',');
    std::size_t xcol = 0, ycol = 1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "position_m") xcol = i;
        if (names[i] == "rate") ycol = i;
    }
    std::vector<double> x, y;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() <= std::max(xcol, ycol)) {
            std::cerr << "error: malformed scan row '" << line << "'\n";
            return 2;
        }
        x.push_back(std::stod(cells[xcol]));
        y.push_back(std::stod(cells[ycol]));
    }

    char* result_cstr = nullptr;
    check(spdcq_fit_erf(x.data(), y.data(), x.size(), &result_cstr));
    std::string result(result_cstr);
    spdcq_string_free(result_cstr);

    if (flags.format == "json") {
        write_output(result + "\n", flags.out_path);
    } else {
        const json fit = json::parse(result);
        std::string csv =
            "m,x0,amplitude,offset,ci95_m,ci95_x0,ci95_amplitude,ci95_offset,residual_norm\n";
        csv += format_double(fit["m"].get<double>()) + ',' +
               format_double(fit["x0"].get<double>()) + ',' +
               format_double(fit["amplitude"].get<double>()) + ',' +
               format_double(fit["offset"].get<double>()) + ',' +
               format_double(fit["ci95"]["m"].get<double>()) + ',' +
               format_double(fit["ci95"]["x0"].get<double>()) + ',' +
               format_double(fit["ci95"]["amplitude"].get<double>()) + ',' +
               format_double(fit["ci95"]["offset"].get<double>()) + ',' +
               format_double(fit["residual_norm"].get<double>()) + '\n';
        write_output(csv, flags.out_path);
    }
    write_run_record(flags.out_path, "fit-erf", {scan_csv}, json{{"op", "fit-erf"}});
    return 0;
}

int run_sweep(const std::string& family_path, bool full_sum, const CommonFlags& flags) {
    std::ifstream in(family_path);
    if (!in) {
        std::cerr << "error: cannot open family '" << family_path << "'\n";
        return 2;
    }
    json family;
    try {
        family = json::parse(in);
    } catch (const json::exception& e) {
        std::cerr << "error: family '" << family_path << "': " << e.what() << "\n";
        return 2;
    }

    json request = flags.request("sweep");
    request["full_sum"] = full_sum;
    // member paths resolve relative to the family file
    const auto dir = family_path.find_last_of('/') == std::string::npos
                         ? std::string()
                         : family_path.substr(0, family_path.find_last_of('/') + 1);
    json members = json::array();
    std::vector<std::string> inputs{family_path};
    for (const json& m : family.at("members")) {
        std::string path = m.at("path").get<std::string>();
        if (!path.empty() && path.front() != '/') path = dir + path;
        members.push_back({{"fs", m.at("fs")}, {"path", path}});
        inputs.push_back(path);
    }
    request["members"] = members;

    TableHandle table;
    check(spdcq_sweep(request.dump().c_str(), &table.ptr));
    return emit_table(table.ptr, flags, "sweep", inputs, request);
}

int run_gen_testbed(const std::string& preset, double fs, const CommonFlags& flags) {
    if (flags.out_path.empty()) usage_error("gen-testbed requires --out");

    json options{{"preset", preset}};
    if (flags.seed >= 0) options["seed"] = flags.seed;

    if (preset == "sweep-family") {
        // one dataset per member plus a family index consumable by `sweep`
        const std::string stem = flags.out_path.size() > 5 &&
                                         flags.out_path.substr(flags.out_path.size() - 5) == ".json"
                                     ? flags.out_path.substr(0, flags.out_path.size() - 5)
                                     : flags.out_path;
        json members = json::array();
        int index = 0;
        for (double member_fs : {-0.15, -0.10, -0.05, 0.0, 0.05, 0.10, 0.15}) {
            json member_options{{"preset", "sweep-member"}, {"fs", member_fs}};
            ScenarioHandle scenario;
            check(spdcq_scenario_generate(member_options.dump().c_str(), &scenario.ptr));
            const std::string member_path = stem + "_m" + std::to_string(index++) + ".json";
            check(spdcq_scenario_save(scenario.ptr, member_path.c_str()));
            // the family index references members by file name
            const auto slash = member_path.find_last_of('/');
            members.push_back({{"fs", member_fs},
                               {"path", slash == std::string::npos
                                            ? member_path
                                            : member_path.substr(slash + 1)}});
        }
        std::ofstream out(flags.out_path, std::ios::trunc);
        if (!out) {
            std::cerr << "error: cannot write '" << flags.out_path << "'\n";
            return 2;
        }
        out << json{{"members", members}}.dump(2) << "\n";
        std::cerr << "wrote sweep family with " << members.size() << " members to "
                  << flags.out_path << "\n";
        return 0;
    }

    if (fs != 0.0 || preset == "sweep-member") options["fs"] = fs;
    ScenarioHandle scenario;
    check(spdcq_scenario_generate(options.dump().c_str(), &scenario.ptr));
    check(spdcq_scenario_save(scenario.ptr, flags.out_path.c_str()));
    std::cerr << "wrote testbed '" << preset << "' to " << flags.out_path << "\n";
    write_run_record(flags.out_path, "gen-testbed", {}, options);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SPDC photon-pair emission simulator on a quasi-normal-mode expansion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(spdcq_version()));

    struct Sub {
        CLI::App* cmd = nullptr;
        std::string dataset;
        CommonFlags flags;
    };

    auto make_sub = [&](const std::string& name, const std::string& desc, bool dataset_arg,
                        bool detection) {
        auto sub = std::make_shared<Sub>();
        sub->cmd = app.add_subcommand(name, desc);
        if (dataset_arg)
            sub->cmd->add_option("dataset", sub->dataset, "scenario manifest (JSON)")->required();
        sub->flags.attach(sub->cmd, detection);
        return sub;
    };

    auto inspect = make_sub("inspect", "dataset summary: modes and Q factors", true, false);
    auto xi = make_sub("xi", "modal-overlap coefficient curves", true, true);
    std::size_t top_k = 9;
    xi->cmd->add_option("--top-k", top_k, "number of reported pair curves");
    auto rate = make_sub("rate", "detected photon-pair rate", true, true);
    auto spectrum = make_sub("spectrum", "photon-pair spectrum vs signal frequency", true, true);
    auto farfield = make_sub("farfield", "far-field coincidence map", true, true);
    std::string resolution;
    farfield->cmd->add_option("--resolution", resolution, "map grid, e.g. 181x360");
    auto knife = make_sub("knife", "knife-edge scan of the detected rate", true, true);
    std::string positions;
    knife->cmd->add_option("--positions", positions, "scan positions min:max:count (m)");
    auto fit = make_sub("fit-erf", "erf fit of a knife scan CSV", false, false);
    std::string scan_csv;
    fit->cmd->add_option("scan", scan_csv, "knife scan CSV (position_m,rate)")->required();
    auto sweep = make_sub("sweep", "lateral-scaling sweep over a dataset family", false, true);
    std::string family_path;
    bool full_sum = false;
    sweep->cmd->add_option("family", family_path, "family index JSON")->required();
    sweep->cmd->add_flag("--full-sum", full_sum, "sum all QNM pairs instead of (1,1) only");
    auto gen = make_sub("gen-testbed", "generate an analytic testbed dataset", false, false);
    std::string preset = "single-dipole";
    double gen_fs = 0.0;
    gen->cmd->add_option("--preset", preset,
                         "single-dipole|two-mode|three-mode-random|sweep-member|sweep-family");
    gen->cmd->add_option("--fs", gen_fs, "lateral scaling parameter (sweep-member)");
    auto mc = make_sub("mc-check", "Monte Carlo oracle vs quadrature", true, true);
    std::size_t samples = 1000000;
    mc->cmd->add_option("--samples", samples, "Monte Carlo samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (inspect->cmd->parsed()) return run_inspect(inspect->dataset, inspect->flags);
        if (xi->cmd->parsed()) {
            json request = xi->flags.request("xi");
            request["top_k"] = top_k;
            return run_compute("xi", xi->dataset, xi->flags, request);
        }
        if (rate->cmd->parsed())
            return run_compute("rate", rate->dataset, rate->flags, rate->flags.request("rate"));
        if (spectrum->cmd->parsed())
            return run_compute("spectrum", spectrum->dataset, spectrum->flags,
                               spectrum->flags.request("spectrum"));
        if (farfield->cmd->parsed()) {
            json request = farfield->flags.request("farfield");
            if (!resolution.empty()) {
                const auto parts = split(resolution, 'x');
                if (parts.size() != 2) usage_error("--resolution expects TxP, e.g. 181x360");
                request["resolution"] = {{"n_theta", std::stoul(parts[0])},
                                         {"n_phi", std::stoul(parts[1])}};
            }
            return run_compute("farfield", farfield->dataset, farfield->flags, request);
        }
        if (knife->cmd->parsed()) {
            json request = knife->flags.request("knife");
            if (!positions.empty()) {
                const auto parts = split(positions, ':');
                if (parts.size() != 3) usage_error("--positions expects min:max:count");
                request["positions_m"] = {{"min", std::stod(parts[0])},
                                          {"max", std::stod(parts[1])},
                                          {"count", std::stoul(parts[2])}};
            }
            return run_compute("knife", knife->dataset, knife->flags, request);
        }
        if (fit->cmd->parsed()) return run_fit_erf(scan_csv, fit->flags);
        if (sweep->cmd->parsed()) return run_sweep(family_path, full_sum, sweep->flags);
        if (gen->cmd->parsed()) return run_gen_testbed(preset, gen_fs, gen->flags);
        if (mc->cmd->parsed()) {
            json request = mc->flags.request("mc-check");
            request["samples"] = samples;
            return run_compute("mc-check", mc->dataset, mc->flags, request);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Fail& f) {
        return f.code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
