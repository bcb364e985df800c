#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdilab/harness.hpp"
#include "test_util.hpp"

using namespace fdilab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

harness::ScenarioConfig small_scenario(std::uint64_t seed) {
    harness::ScenarioConfig sc;
    sc.case_name = "case14";
    sc.n_samples = 24;
    sc.seed = seed;
    return sc;
}

}  // namespace

TEST_CASE("generation validates the noise level") {
    auto sc = small_scenario(1);
    sc.noise_percent = 0.0;
    CHECK_THROWS_WITH_AS(harness::generate_timeseries(sc), doctest::Contains("noise"),
                         std::invalid_argument);
    sc.noise_percent = 1e-9;  // the documented way to run noise-free studies
    auto data = harness::generate_timeseries(sc);
    CHECK(data.Z.rows == 24);
}

TEST_CASE("generation is seed deterministic") {
    auto d1 = harness::generate_timeseries(small_scenario(7));
    auto d2 = harness::generate_timeseries(small_scenario(7));
    CHECK(d1.Z.a == d2.Z.a);
    CHECK(d1.Ztrue.a == d2.Ztrue.a);
    CHECK(d1.noise.sigma == d2.noise.sigma);

    auto d3 = harness::generate_timeseries(small_scenario(8));
    CHECK(d1.Z.a != d3.Z.a);
}

TEST_CASE("sigma floors at 0.1 pu and scales with the noise percent") {
    auto data = harness::generate_timeseries(small_scenario(3));
    const double pct = data.config.noise_percent / 100.0;
    for (std::size_t j = 0; j < data.m(); ++j) {
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < data.Ztrue.rows; ++i)
            mean_abs += std::abs(data.Ztrue(i, j));
        mean_abs /= static_cast<double>(data.Ztrue.rows);
        CHECK(data.noise.sigma[j] ==
              doctest::Approx(pct * std::max(mean_abs, 0.1)).epsilon(1e-12));
    }
}

TEST_CASE("dataset csv round trips") {
    auto data = harness::generate_timeseries(small_scenario(5));
    const std::string path = "test_dataset_rt.csv";
    harness::write_dataset_csv(path, data);
    auto loaded = harness::load_dataset_csv(path);
    CHECK(loaded.Z.rows == data.Z.rows);
    CHECK(loaded.Z.a == data.Z.a);
    CHECK(loaded.Ztrue.a == data.Ztrue.a);
    CHECK(loaded.noise.sigma == data.noise.sigma);
    CHECK(loaded.states.size() == data.states.size());
    CHECK(grid::same_network(loaded.net, data.net, 1e-12));

    // header first cell is t and ids match the schema
    std::string text = slurp(path);
    CHECK(text.substr(0, 2) == "t,");

    // writing twice produces identical bytes
    harness::write_dataset_csv("test_dataset_rt2.csv", data);
    CHECK(slurp(path) == slurp("test_dataset_rt2.csv"));
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
    std::remove("test_dataset_rt2.csv");
    std::remove("test_dataset_rt2.csv.json");
}

TEST_CASE("attacked csv carries a provenance column") {
    auto data = harness::generate_timeseries(small_scenario(6));
    Matrix Za = data.Z;
    for (double& v : Za.a) v += 0.01;
    const std::string path = "test_attacked_rt.csv";
    harness::write_attacked_csv(path, data, Za, "{\"gamma\":1.0}");
    std::string text = slurp(path);
    CHECK(text.find(",provenance") != std::string::npos);
    CHECK(text.find(",attacked") != std::string::npos);
    Matrix loaded = harness::load_attacked_csv(path);
    CHECK(loaded.a == Za.a);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("schema selection by name") {
    auto net = grid::load_bundled_case("case14");
    CHECK(harness::schema_by_name(net, "default").size() == 82);
    CHECK(harness::schema_by_name(net, "pinj").size() == 14);
    CHECK_THROWS(harness::schema_by_name(net, "everything"));
}

TEST_CASE("report emission is deterministic and rejects empty tables") {
    harness::SweepTable table;
    CHECK_THROWS(harness::emit_report(table, "test_report"));

    table.metadata["kind"] = "gamma";
    for (double g : {0.1, 0.5, 1.0}) {
        harness::SweepRow row{"gamma", g, 1, {}};
        row.metrics["succ_bdd"] = 0.95 - 0.01 * g;
        row.metrics["succ_learn"] = 0.97 - 0.01 * g;
        table.rows.push_back(row);
    }
    harness::emit_report(table, "test_report");
    const std::string csv1 = slurp("test_report.csv");
    harness::emit_report(table, "test_report");
    CHECK(csv1 == slurp("test_report.csv"));
    CHECK(csv1.find("kind,value,seed,succ_bdd,succ_learn") == 0);

    // gamma sweeps also get the two-row pivot table
    const std::string pivot = slurp("test_report_table.csv");
    CHECK(pivot.find("metric,0.1,0.5,1") == 0);
    CHECK(pivot.find("succ_bdd,") != std::string::npos);
    CHECK(pivot.find("succ_learn,") != std::string::npos);

    // round trip through the json table loader
    auto reloaded = harness::load_sweep_table("test_report.json");
    REQUIRE(reloaded.rows.size() == 3);
    CHECK(reloaded.rows[1].metrics.at("succ_bdd") ==
          doctest::Approx(table.rows[1].metrics.at("succ_bdd")));

    for (const char* f : {"test_report.csv", "test_report.json", "test_report_table.csv",
                          "test_report_succ_bdd.dat", "test_report_succ_learn.dat"})
        std::remove(f);
}

TEST_CASE("dataset head returns the chronological prefix") {
    auto data = harness::generate_timeseries(small_scenario(9));
    Matrix head = data.head(10);
    CHECK(head.rows == 10);
    for (std::size_t j = 0; j < data.m(); ++j) CHECK(head(3, j) == data.Z(3, j));
    CHECK_THROWS(data.head(1000));
}
