#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sba/estimators.hpp"
#include "sba/layout.hpp"
#include "sba/models.hpp"
#include "sba/rate_opt.hpp"

namespace sba {

enum class Procedure { Sba, Equal, Jba };
Procedure procedure_from_name(std::string_view name);
std::string procedure_name(Procedure p);

// True problem quantities injected when running in oracle mode, isolating the
// allocation dynamics from estimation noise.
struct OracleSpec {
    Vec mu;               // per design
    Vec sigma2;           // per design
    std::vector<Vec> g;   // [design][stream]
    Vec n_star;           // per stream
};

struct EngineConfig {
    const SimulationModel* model = nullptr;
    StreamLayout layout;
    int T = 0;
    int n0 = 2;
    int m0 = 2;
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;
    bool oracle_mode = false;
    const OracleSpec* oracle = nullptr;
    double solver_tol = 1e-8;
    int solver_max_iter = 10000;
    int jba_total_stages = 0;  // defaults to T when 0

    // Debugging hook: called with the bank every hook_every stages.
    std::function<void(long, const EstimatorBank&)> stage_hook;
    int hook_every = 0;

    void validate() const;
};

struct StageRecord {
    int selected = 0;
    std::vector<long> input_counts;  // N_{s,t}
    std::vector<long> sim_counts;    // M_{i,t}
};

struct StageHistory {
    int initial_selection = 0;
    std::vector<StageRecord> stages;  // length T
};

// --- Stage-level building blocks (exposed for direct testing) ---

// Greedy integer rounding of the input allocation: within each partition,
// increment the stream with the largest deficit t*n_hat_s - N_s (ties to
// lowest index) while sum_{s in S_j} c_s (N_s - n0) < t * U_j.
std::vector<long> allocate_input_stage(long t, const Vec& n_hat, const StreamLayout& layout,
                                       std::vector<long>& input_counts, long n0);

// Equal-allocation variant: increment the stream with the smallest cost spend.
std::vector<long> allocate_input_stage_equal(long t, const StreamLayout& layout,
                                             std::vector<long>& input_counts, long n0);

// One sequential-balancing choice: the incumbent best if the global-balance
// inequality holds, otherwise the suboptimal design minimizing the rate
// function; ties to lowest index. iu_term[i] = 2 sum_s g(i,s) / N_s.
int simulate_one_choice(int best, const std::vector<long>& sim_counts, const Vec& mu,
                        const Vec& sigma2, const Vec& d, const Vec& iu_term);

// Repeats simulate_one_choice (counts updated virtually) while
// sum_i d_i (M_i - m0) < t * M; returns the per-design increments.
std::vector<long> allocate_simulation_stage(long t, const StreamLayout& layout,
                                            std::vector<long>& sim_counts, long m0, int best,
                                            const Vec& mu, const Vec& sigma2,
                                            const Vec& iu_term);

// Equal variant: increment the design with the smallest cost spend.
std::vector<long> allocate_simulation_stage_equal(long t, const StreamLayout& layout,
                                                  std::vector<long>& sim_counts, long m0);

// --- Full procedures (one replication each) ---
StageHistory run_sba(const EngineConfig& cfg);
StageHistory run_equal(const EngineConfig& cfg);
StageHistory run_jba(const EngineConfig& cfg);
StageHistory run_procedure(Procedure p, const EngineConfig& cfg);

}  // namespace sba
