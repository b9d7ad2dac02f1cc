#pragma once
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "sba/engine.hpp"

namespace sba {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fully-resolved experiment: model + layout + procedure + replication plan.
struct ExperimentConfig {
    std::shared_ptr<SimulationModel> model;
    StreamLayout layout;
    Procedure procedure = Procedure::Sba;
    int T = 0;
    int n0 = 2;
    int m0 = 2;
    int reps = 1;
    std::uint64_t seed = 0;
    bool oracle_mode = false;
    int workers = 1;
    int jba_total_stages = 0;
    double solver_tol = 1e-8;
    int solver_max_iter = 10000;
    int dump_stage_state = 0;  // emit bank snapshots every k stages (rep 0)
    std::string model_kind;
    std::string oracle_cache;  // inventory ground-truth cache path
    long oracle_samples = 1000000;
    std::string out_dir = "results";

    nlohmann::json raw;  // config document as loaded, echoed into the manifest

    EngineConfig engine_config(std::uint64_t replication, const OracleSpec* oracle) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& doc);

// Inverse of parse_config for the fields it owns; load(write(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace sba
