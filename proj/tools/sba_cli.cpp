#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "sba/config.hpp"
#include "sba/harness.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

int cmd_run(sba::ExperimentConfig cfg) {
    const sba::ExperimentResult result = sba::run_experiment(cfg);
    sba::write_results(result, cfg, cfg.out_dir);
    std::printf("procedure=%s reps=%d true_best=%d final_pcs=%.4f out=%s\n",
                sba::procedure_name(cfg.procedure).c_str(), cfg.reps, result.true_best,
                result.curve.pcs.back(), cfg.out_dir.c_str());
    return 0;
}

int cmd_solve_input(const sba::ExperimentConfig& cfg) {
    // One-shot solve of the input-budget rate problem at the true parameters.
    const sba::OracleSpec spec = sba::build_oracle_spec(cfg);
    sba::PaeProblem prob;
    for (int s = 0; s < cfg.layout.stream_count(); ++s) {
        prob.partition.push_back(cfg.layout.streams[s].partition);
        prob.cost.push_back(cfg.layout.streams[s].cost);
    }
    prob.budget = cfg.layout.partition_budget;
    const int best = static_cast<int>(std::max_element(spec.mu.begin(), spec.mu.end()) -
                                      spec.mu.begin());
    for (int i = 0; i < cfg.model->design_count(); ++i) {
        if (i == best) continue;
        const double gap = spec.mu[best] - spec.mu[i];
        prob.delta2.push_back(gap * gap);
        prob.w.push_back(spec.g[i]);
    }
    const sba::PaeSolution sol =
        sba::solve_input_allocation(prob, cfg.solver_tol, cfg.solver_max_iter);
    for (int s = 0; s < cfg.layout.stream_count(); ++s)
        std::printf("n_hat[%d] = %.9f\n", s, sol.n_bar[s]);
    std::printf("rate = %.9g\nkkt_residual = %.3e\niterations = %d\n", sol.rate,
                sol.kkt_residual, sol.iterations);
    return 0;
}

int cmd_oracle(const sba::ExperimentConfig& cfg, long n) {
    const int best = sba::build_oracle_cache(cfg, n, cfg.seed);
    std::printf("oracle cache updated; best design = %d (n = %ld)\n", best, n);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-budget ranking & selection with streaming input data"};
    app.require_subcommand(1);

    std::string config_path, procedure, out_dir;
    std::uint64_t seed = 0;
    int reps = 0, workers = 0, dump_every = 0;
    bool oracle_mode = false;
    long oracle_n = 1000000;

    auto* run = app.add_subcommand("run", "Run an experiment and write PCS results");
    run->add_option("--config", config_path, "Experiment configuration file")->required();
    run->add_option("--procedure", procedure, "Override procedure: sba|equal|jba");
    run->add_option("--seed", seed, "Override master seed");
    run->add_option("--reps", reps, "Override replication count");
    run->add_option("--workers", workers, "Worker threads");
    run->add_flag("--oracle-mode", oracle_mode, "Inject true parameters, bypassing estimation");
    run->add_option("--dump-stage-state", dump_every, "Emit bank snapshots every K stages");
    run->add_option("--out", out_dir, "Output directory");

    auto* solve = app.add_subcommand("solve-input", "One-shot input-budget allocation solve");
    solve->add_option("--config", config_path, "Experiment configuration file")->required();

    auto* oracle = app.add_subcommand("oracle", "Build/refresh the ground-truth cache");
    oracle->add_option("--config", config_path, "Experiment configuration file")->required();
    oracle->add_option("--n", oracle_n, "Monte Carlo sample count");

    CLI11_PARSE(app, argc, argv);

    sba::ExperimentConfig cfg;
    try {
        cfg = sba::load_config(config_path);
        if (run->parsed()) {
            if (!procedure.empty()) cfg.procedure = sba::procedure_from_name(procedure);
            if (run->count("--seed")) cfg.seed = seed;
            if (reps > 0) cfg.reps = reps;
            if (workers > 0) cfg.workers = workers;
            if (oracle_mode) cfg.oracle_mode = true;
            if (dump_every > 0) cfg.dump_stage_state = dump_every;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(std::move(cfg));
        if (solve->parsed()) return cmd_solve_input(cfg);
        if (oracle->parsed()) return cmd_oracle(cfg, oracle_n);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntimeError;
    }
    return 0;
}
