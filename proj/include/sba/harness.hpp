#pragma once
#include <filesystem>
#include <vector>

#include "sba/config.hpp"
#include "sba/engine.hpp"

namespace sba {

struct runtime_error_exit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Empirical PCS per stage with Wilson 95% intervals.
struct PcsCurve {
    std::vector<double> pcs;    // length T + 1, index 0 = post-initialization
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
};

struct ExperimentResult {
    PcsCurve curve;
    std::vector<StageHistory> histories;  // one per replication, in order
    int true_best = 0;
    double wall_seconds = 0.0;
    nlohmann::json stage_dumps;  // replication 0 snapshots when dump_stage_state > 0
};

// selections[rep][stage] (stage 0 = post-initialization selection).
PcsCurve empirical_pcs(const std::vector<std::vector<int>>& selections, int true_best);

// Ground truth: analytic argmax for the quadratic model, cached Monte Carlo
// oracle for the inventory model (run `oracle` first, or call
// build_oracle_cache).
int true_best_design(const ExperimentConfig& cfg);

// Build/refresh the inventory ground-truth cache entry for this config.
// Returns the best design. The cache is keyed by model parameters, theta,
// sample count and seed.
int build_oracle_cache(const ExperimentConfig& cfg, long n_oracle, std::uint64_t seed);

// True problem quantities for oracle-mode runs (quadratic model only).
OracleSpec build_oracle_spec(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// results.csv (stage,pcs,ci_lo,ci_hi) + manifest.json under out_dir.
void write_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                   const std::filesystem::path& out_dir);

// Debug snapshot of every estimate in the bank.
nlohmann::json bank_snapshot(const EstimatorBank& bank);

}  // namespace sba
