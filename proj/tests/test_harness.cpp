#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sba/config.hpp"
#include "sba/harness.hpp"

using namespace sba;
using nlohmann::json;

namespace {

json small_quadratic_doc() {
    return json{
        {"streams", json::array({json{{"family", "exponential"},
                                      {"theta", json::array({2.0})},
                                      {"partition", 0},
                                      {"given", true}},
                                 json{{"family", "exponential"},
                                      {"theta", json::array({1.0})},
                                      {"partition", 1},
                                      {"given", true}}})},
        {"partitions", json::array({5.0, 5.0})},
        {"simulation", json{{"budget", 6.0}, {"cost", 1.0}}},
        {"model", json{{"kind", "quadratic"}, {"offsets", json::array({0, 1, 2})}}},
        {"procedure", "sba"},
        {"T", 20},
        {"n0", 10},
        {"m0", 10},
        {"reps", 8},
        {"seed", 5},
    };
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("empirical pcs basics") {
    CHECK(empirical_pcs({{0, 0}, {0, 0}}, 0).pcs == std::vector<double>({1.0, 1.0}));

    const PcsCurve half = empirical_pcs({{0, 1}, {1, 0}}, 0);
    CHECK(half.pcs[0] == doctest::Approx(0.5));
    CHECK(half.pcs[1] == doctest::Approx(0.5));
    CHECK(half.ci_lo[0] <= 0.5);
    CHECK(half.ci_hi[0] >= 0.5);

    std::vector<std::vector<int>> sel(500, std::vector<int>{0});
    for (int r = 0; r < 25; ++r) sel[r][0] = 1;
    const PcsCurve big = empirical_pcs(sel, 0);
    CHECK(big.pcs[0] == doctest::Approx(0.95));
    CHECK(big.ci_lo[0] > 0.9);
    CHECK(big.ci_hi[0] < 1.0);

    CHECK_THROWS_AS(empirical_pcs({}, 0), std::invalid_argument);
    CHECK_THROWS_AS(empirical_pcs({{0, 1}, {0}}, 0), std::invalid_argument);
}

TEST_CASE("config round trip and diagnostics") {
    const json doc = small_quadratic_doc();
    const ExperimentConfig cfg = parse_config(doc);
    CHECK(config_to_json(cfg) == doc);
    CHECK(parse_config(config_to_json(cfg)).raw == doc);
    CHECK(cfg.T == 20);
    CHECK(cfg.layout.stream_count() == 2);
    CHECK(cfg.model->design_count() == 3);

    json broken = doc;
    broken.erase("T");
    try {
        parse_config(broken);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("`T`") != std::string::npos);
    }

    json bad_theta = doc;
    bad_theta["streams"][0]["theta"] = json::array({-1.0});
    CHECK_THROWS_AS(parse_config(bad_theta), config_error);
}

TEST_CASE("quadratic ground truth is the analytic argmax") {
    const ExperimentConfig cfg = parse_config(small_quadratic_doc());
    CHECK(true_best_design(cfg) == 0);  // offset 0 sits at x* = sum theta
}

TEST_CASE("single-rep zero-horizon run") {
    json doc = small_quadratic_doc();
    doc["T"] = 0;
    doc["reps"] = 1;
    ExperimentConfig cfg = parse_config(doc);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.curve.pcs.size() == 1);
    CHECK((res.curve.pcs[0] == 0.0 || res.curve.pcs[0] == 1.0));
}

TEST_CASE("results files: shape, determinism, and parallel equivalence") {
    ExperimentConfig cfg = parse_config(small_quadratic_doc());

    TempDir a("sba_test_out_a"), b("sba_test_out_b"), c("sba_test_out_c");
    write_results(run_experiment(cfg), cfg, a.path);
    write_results(run_experiment(cfg), cfg, b.path);
    cfg.workers = 8;
    write_results(run_experiment(cfg), cfg, c.path);

    const std::string csv_a = slurp(a.path / "results.csv");
    CHECK(csv_a == slurp(b.path / "results.csv"));
    CHECK(csv_a == slurp(c.path / "results.csv"));

    // header + T + 1 stage rows
    const long rows = std::count(csv_a.begin(), csv_a.end(), '\n');
    CHECK(rows == cfg.T + 2);
    CHECK(csv_a.rfind("stage,pcs,ci_lo,ci_hi\n", 0) == 0);
    CHECK(std::filesystem::exists(a.path / "manifest.json"));
    const json manifest = json::parse(slurp(a.path / "manifest.json"));
    CHECK(manifest.at("config") == cfg.raw);
    CHECK(manifest.at("true_best") == 0);
}

TEST_CASE("subset pcs stays inside its own interval") {
    json doc = small_quadratic_doc();
    doc["T"] = 10;
    doc["reps"] = 200;
    const ExperimentConfig cfg = parse_config(doc);
    const ExperimentResult res = run_experiment(cfg);

    std::vector<std::vector<int>> subset;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> row{res.histories[rep].initial_selection};
        for (const auto& st : res.histories[rep].stages) row.push_back(st.selected);
        subset.push_back(std::move(row));
    }
    const PcsCurve sub = empirical_pcs(subset, res.true_best);
    for (std::size_t t = 0; t < sub.pcs.size(); ++t) {
        CHECK(res.curve.pcs[t] >= sub.ci_lo[t]);
        CHECK(res.curve.pcs[t] <= sub.ci_hi[t]);
    }
}

TEST_CASE("stage dumps capture bank snapshots") {
    json doc = small_quadratic_doc();
    doc["reps"] = 1;
    doc["dump_stage_state"] = 10;
    ExperimentConfig cfg = parse_config(doc);
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.stage_dumps.is_array());
    CHECK(res.stage_dumps.size() == 2);  // stages 10 and 20
    const json& snap = res.stage_dumps.front();
    CHECK(snap.at("stage") == 10);
    CHECK(snap.at("streams").size() == 2);
    CHECK(snap.at("designs").size() == 3);
    CHECK(snap.at("designs")[0].contains("mu_hat"));
}

TEST_CASE("inventory ground truth comes from the cache") {
    const json doc{
        {"streams", json::array({json{{"family", "poisson"},
                                      {"theta", json::array({2.0})},
                                      {"partition", 0}}})},
        {"partitions", json::array({4.0})},
        {"simulation", json{{"budget", 4.0}}},
        {"model", json{{"kind", "inventory"},
                       {"periods", 2},
                       {"holding_cost", 0.5},
                       {"backlog_cost", 1.0},
                       {"levels", json::array({2, 4, 6, 12})}}},
        {"T", 5},
        {"n0", 10},
        {"m0", 10},
        {"seed", 9},
        {"oracle_samples", 20000},
        {"oracle_cache", (std::filesystem::temp_directory_path() / "sba_test_cache.json").string()},
    };
    ExperimentConfig cfg = parse_config(doc);
    std::filesystem::remove(cfg.oracle_cache);
    CHECK_THROWS_AS(true_best_design(cfg), runtime_error_exit);

    const int best = build_oracle_cache(cfg, cfg.oracle_samples, cfg.seed);
    CHECK(true_best_design(cfg) == best);
    // Poisson(2) demand per period: the oversized level 12 pays pure holding
    // cost and cannot win.
    CHECK(best != 3);
    std::filesystem::remove(cfg.oracle_cache);
}
