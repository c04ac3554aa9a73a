// Exercises the extern-C surface exactly as an external client would: only
// spdcq/spdcq.h, opaque handles and status codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdcq/spdcq.h"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("spdcq_capi_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Scenario {
    spdcq_scenario* ptr = nullptr;
    ~Scenario() { spdcq_scenario_free(ptr); }
};

struct Table {
    spdcq_table* ptr = nullptr;
    ~Table() { spdcq_table_free(ptr); }
};

const double* column(const spdcq_table* table, const char* name) {
    for (size_t c = 0; c < spdcq_table_column_count(table); ++c)
        if (std::strcmp(spdcq_table_column_name(table, c), name) == 0)
            return spdcq_table_column_data(table, c);
    return nullptr;
}

}  // namespace

TEST_CASE("version and error state") {
    CHECK(spdcq_version() != nullptr);
    CHECK(spdcq_last_error() != nullptr);
}

TEST_CASE("null arguments are usage errors with messages") {
    CHECK(spdcq_scenario_open(nullptr, nullptr) == SPDCQ_ERROR_USAGE);
    CHECK(std::strlen(spdcq_last_error()) > 0);
    spdcq_scenario* out = nullptr;
    CHECK(spdcq_compute(nullptr, "{}", nullptr) == SPDCQ_ERROR_USAGE);
    CHECK(spdcq_scenario_generate("{\"preset\":\"does-not-exist\"}", &out) == SPDCQ_ERROR_USAGE);
}

TEST_CASE("missing dataset is a data error") {
    spdcq_scenario* out = nullptr;
    CHECK(spdcq_scenario_open("/nonexistent/path.json", &out) == SPDCQ_ERROR_DATA);
    CHECK(std::string(spdcq_last_error()).find("nonexistent") != std::string::npos);
}

TEST_CASE("generate, save, open, inspect") {
    TempDir dir;
    Scenario generated;
    REQUIRE(spdcq_scenario_generate(R"({"preset":"two-mode"})", &generated.ptr) == SPDCQ_OK);
    REQUIRE(spdcq_scenario_save(generated.ptr, dir.file("t.json").c_str()) == SPDCQ_OK);

    Scenario loaded;
    REQUIRE(spdcq_scenario_open(dir.file("t.json").c_str(), &loaded.ptr) == SPDCQ_OK);

    char* info_cstr = nullptr;
    REQUIRE(spdcq_scenario_info(loaded.ptr, &info_cstr) == SPDCQ_OK);
    const json info = json::parse(info_cstr);
    spdcq_string_free(info_cstr);
    CHECK(info["modes"].size() == 2);
    CHECK(info["validation"] == "clean");
}

TEST_CASE("compute: rate table and metadata") {
    Scenario scenario;
    REQUIRE(spdcq_scenario_generate(R"({"preset":"single-dipole"})", &scenario.ptr) == SPDCQ_OK);

    Table table;
    const char* request = R"({"op":"rate","detection":{"fiber":null},
                              "omega_grid":{"min":"1400nm","max":"1500nm","count":81}})";
    REQUIRE(spdcq_compute(scenario.ptr, request, &table.ptr) == SPDCQ_OK);

    const json meta = json::parse(spdcq_table_meta_json(table.ptr));
    CHECK(meta["rate"].get<double>() >= 0.0);
    CHECK(meta["metadata"]["theta_order"] == 32);
    CHECK(spdcq_table_row_count(table.ptr) == 1);  // one mode, one pair
    CHECK(column(table.ptr, "contribution_re") != nullptr);
    // coherent breakdown reproduces the total
    CHECK(column(table.ptr, "contribution_re")[0] ==
          doctest::Approx(meta["rate"].get<double>()).epsilon(1e-12));
}

TEST_CASE("compute: spectrum columns") {
    Scenario scenario;
    REQUIRE(spdcq_scenario_generate(R"({"preset":"single-dipole"})", &scenario.ptr) == SPDCQ_OK);
    Table table;
    const char* request = R"({"op":"spectrum","omega_grid":{"min":"1400nm","max":"1500nm","count":51}})";
    REQUIRE(spdcq_compute(scenario.ptr, request, &table.ptr) == SPDCQ_OK);
    REQUIRE(spdcq_table_column_count(table.ptr) == 3);
    CHECK(std::string(spdcq_table_column_name(table.ptr, 0)) == "omega_s");
    CHECK(std::string(spdcq_table_column_name(table.ptr, 1)) == "wavelength_nm");
    CHECK(std::string(spdcq_table_column_name(table.ptr, 2)) == "density");
    REQUIRE(spdcq_table_row_count(table.ptr) == 51);
    const double* omega = column(table.ptr, "omega_s");
    for (size_t i = 1; i < 51; ++i) CHECK(omega[i] > omega[i - 1]);
    const double* density = column(table.ptr, "density");
    for (size_t i = 0; i < 51; ++i) CHECK(density[i] >= 0.0);
}

TEST_CASE("compute: xi curves and mc-check") {
    Scenario scenario;
    REQUIRE(spdcq_scenario_generate(R"({"preset":"two-mode"})", &scenario.ptr) == SPDCQ_OK);

    Table xi;
    REQUIRE(spdcq_compute(scenario.ptr, R"({"op":"xi","top_k":3})", &xi.ptr) == SPDCQ_OK);
    const json xi_meta = json::parse(spdcq_table_meta_json(xi.ptr));
    CHECK(xi_meta["curves"].size() == 3);
    CHECK(spdcq_table_column_count(xi.ptr) == 2 + 3);

    Table mc;
    const char* request = R"({"op":"mc-check","samples":50000,"seed":5,
                              "detection":{"fiber":null},
                              "omega_grid":{"min":"1400nm","max":"1500nm","count":41}})";
    REQUIRE(spdcq_compute(scenario.ptr, request, &mc.ptr) == SPDCQ_OK);
    CHECK(column(mc.ptr, "pass")[0] == 1.0);
    CHECK(column(mc.ptr, "mc_stderr")[0] > 0.0);
}

TEST_CASE("compute: unknown op is a usage error") {
    Scenario scenario;
    REQUIRE(spdcq_scenario_generate(R"({"preset":"single-dipole"})", &scenario.ptr) == SPDCQ_OK);
    Table table;
    CHECK(spdcq_compute(scenario.ptr, R"({"op":"warp"})", &table.ptr) == SPDCQ_ERROR_USAGE);
    CHECK(spdcq_compute(scenario.ptr, "{{{", &table.ptr) == SPDCQ_ERROR_USAGE);
}

TEST_CASE("sweep over saved members") {
    TempDir dir;
    json members = json::array();
    for (double fs : {-0.1, 0.0, 0.1}) {
        Scenario member;
        const json options{{"preset", "sweep-member"}, {"fs", fs}};
        REQUIRE(spdcq_scenario_generate(options.dump().c_str(), &member.ptr) == SPDCQ_OK);
        const std::string path = dir.file("m" + std::to_string(members.size()) + ".json");
        REQUIRE(spdcq_scenario_save(member.ptr, path.c_str()) == SPDCQ_OK);
        members.push_back({{"fs", fs}, {"path", path}});
    }

    const json request{{"members", members},
                       {"detection", {{"fiber", nullptr}}},
                       {"omega_grid", {{"min", "1400nm"}, {"max", "1500nm"}, {"count", 41}}}};
    Table table;
    REQUIRE(spdcq_sweep(request.dump().c_str(), &table.ptr) == SPDCQ_OK);
    REQUIRE(spdcq_table_row_count(table.ptr) == 3);
    const double* fs = column(table.ptr, "fs");
    const double* normalized = column(table.ptr, "normalized_rate");
    CHECK(fs[1] == 0.0);
    CHECK(normalized[1] > normalized[0]);
    CHECK(normalized[1] > normalized[2]);
}

TEST_CASE("fit_erf through the C boundary") {
    std::vector<double> x, y;
    for (int i = 0; i < 41; ++i) {
        const double v = -3.0 + 6.0 * i / 40.0;
        x.push_back(v);
        y.push_back(1.0 + 0.4 * std::erf((v - 0.2) / 0.9));
    }
    char* out = nullptr;
    REQUIRE(spdcq_fit_erf(x.data(), y.data(), x.size(), &out) == SPDCQ_OK);
    const json fit = json::parse(out);
    spdcq_string_free(out);
    CHECK(fit["m"].get<double>() == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(fit["x0"].get<double>() == doctest::Approx(0.2).epsilon(1e-5));

    // degenerate data surfaces as a data error
    std::vector<double> flat(x.size(), 1.0);
    CHECK(spdcq_fit_erf(x.data(), flat.data(), x.size(), &out) == SPDCQ_ERROR_DATA);
}
