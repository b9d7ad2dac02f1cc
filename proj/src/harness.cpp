#include "sba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <thread>

namespace sba {

namespace {

using nlohmann::json;

void wilson_interval(double p_hat, long n, double& lo, double& hi) {
    constexpr double z = 1.959963984540054;  // 95%
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p_hat + z2 / (2.0 * n)) / denom;
    const double half = (z / denom) * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n));
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

json oracle_cache_key(const ExperimentConfig& cfg, long n_oracle, std::uint64_t seed) {
    json key;
    key["model"] = cfg.raw.at("model");
    json theta = json::array();
    for (const auto& s : cfg.layout.streams) theta.push_back(s.theta_true);
    key["theta"] = theta;
    key["n"] = n_oracle;
    key["seed"] = seed;
    return key;
}

std::string oracle_cache_path(const ExperimentConfig& cfg) {
    return cfg.oracle_cache.empty() ? "oracle_cache.json" : cfg.oracle_cache;
}

std::string git_describe() {
    FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
    ::pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

}  // namespace

PcsCurve empirical_pcs(const std::vector<std::vector<int>>& selections, int true_best) {
    if (selections.empty() || selections.front().empty())
        throw std::invalid_argument("empty selection matrix");
    const std::size_t stages = selections.front().size();
    for (const auto& row : selections)
        if (row.size() != stages) throw std::invalid_argument("ragged selection matrix");

    PcsCurve curve;
    curve.pcs.resize(stages);
    curve.ci_lo.resize(stages);
    curve.ci_hi.resize(stages);
    const long n = static_cast<long>(selections.size());
    for (std::size_t t = 0; t < stages; ++t) {
        long correct = 0;
        for (const auto& row : selections) correct += (row[t] == true_best);
        curve.pcs[t] = static_cast<double>(correct) / n;
        wilson_interval(curve.pcs[t], n, curve.ci_lo[t], curve.ci_hi[t]);
    }
    return curve;
}

int true_best_design(const ExperimentConfig& cfg) {
    if (cfg.model_kind == "quadratic") {
        Vec theta;
        for (const auto& s : cfg.layout.streams) theta.push_back(s.theta_true[0]);
        int best = 0;
        double best_mu = *cfg.model->true_mean(0, theta);
        for (int i = 1; i < cfg.model->design_count(); ++i) {
            const double mu = *cfg.model->true_mean(i, theta);
            if (mu > best_mu) {
                best = i;
                best_mu = mu;
            }
        }
        return best;
    }
    // Inventory: cached high-replication oracle.
    const std::string path = oracle_cache_path(cfg);
    std::ifstream in(path);
    if (!in)
        throw runtime_error_exit("oracle cache not found at " + path +
                                 "; run the `oracle` command first");
    json cache = json::parse(in);
    const std::string key = oracle_cache_key(cfg, cfg.oracle_samples, cfg.seed).dump();
    if (!cache.contains("entries") || !cache.at("entries").contains(key))
        throw runtime_error_exit("oracle cache has no entry for this configuration; rerun `oracle`");
    return cache.at("entries").at(key).at("best").get<int>();
}

int build_oracle_cache(const ExperimentConfig& cfg, long n_oracle, std::uint64_t seed) {
    std::vector<ParametricFamily> families;
    std::vector<Vec> theta;
    for (const auto& s : cfg.layout.streams) {
        families.push_back(s.family);
        theta.push_back(s.theta_true);
    }
    json means = json::array(), errs = json::array();
    int best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.model->design_count(); ++i) {
        const OracleEstimate est = monte_carlo_mean(*cfg.model, i, families, theta, n_oracle, seed);
        means.push_back(est.mean);
        errs.push_back(est.std_error);
        if (est.mean > best_mean) {
            best_mean = est.mean;
            best = i;
        }
    }

    const std::string path = oracle_cache_path(cfg);
    json cache;
    {
        std::ifstream in(path);
        if (in) {
            try {
                cache = json::parse(in);
            } catch (const json::parse_error&) {
                cache = json::object();
            }
        }
    }
    const std::string key = oracle_cache_key(cfg, n_oracle, seed).dump();
    cache["entries"][key] = {{"best", best}, {"means", means}, {"std_errors", errs},
                             {"n", n_oracle}, {"seed", seed}};
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw runtime_error_exit("cannot write oracle cache: " + path);
    out << cache.dump(2) << '\n';
    return best;
}

OracleSpec build_oracle_spec(const ExperimentConfig& cfg) {
    const auto* quad = dynamic_cast<const QuadraticModel*>(cfg.model.get());
    if (quad == nullptr)
        throw runtime_error_exit("oracle mode requires a model with closed-form parameters");
    const int K = quad->design_count();
    const int S = cfg.layout.stream_count();
    Vec theta;
    for (const auto& s : cfg.layout.streams) theta.push_back(s.theta_true[0]);

    OracleSpec spec;
    spec.mu.resize(K);
    spec.sigma2.resize(K);
    for (int i = 0; i < K; ++i) {
        spec.mu[i] = *quad->true_mean(i, theta);
        spec.sigma2[i] = quad->true_variance(i, theta);
    }
    const int b = static_cast<int>(std::max_element(spec.mu.begin(), spec.mu.end()) -
                                   spec.mu.begin());
    spec.g.assign(K, Vec(S, 0.0));
    for (int i = 0; i < K; ++i) {
        if (i == b) continue;
        const Vec gb = quad->true_mean_gradient(b, theta);
        const Vec gi = quad->true_mean_gradient(i, theta);
        for (int s = 0; s < S; ++s) {
            const double diff = gb[s] - gi[s];
            double cov = 0.0;  // Cov of the moment map at theta_s
            switch (cfg.layout.streams[s].family.kind()) {
                case FamilyKind::Exponential: cov = theta[s] * theta[s]; break;
                case FamilyKind::Poisson: cov = theta[s]; break;
                default:
                    throw runtime_error_exit("oracle mode supports scalar-moment families only");
            }
            spec.g[i][s] = diff * cov * diff;
        }
    }

    PaeProblem prob;
    for (int s = 0; s < S; ++s) {
        prob.partition.push_back(cfg.layout.streams[s].partition);
        prob.cost.push_back(cfg.layout.streams[s].cost);
    }
    prob.budget = cfg.layout.partition_budget;
    for (int i = 0; i < K; ++i) {
        if (i == b) continue;
        const double gap = spec.mu[b] - spec.mu[i];
        prob.delta2.push_back(gap * gap);
        prob.w.push_back(spec.g[i]);
    }
    spec.n_star = solve_input_allocation(prob).n_bar;
    return spec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();

    ExperimentResult result;
    result.true_best = true_best_design(cfg);

    OracleSpec oracle;
    if (cfg.oracle_mode) oracle = build_oracle_spec(cfg);
    const OracleSpec* oracle_ptr = cfg.oracle_mode ? &oracle : nullptr;

    result.histories.resize(cfg.reps);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.reps) return;
            EngineConfig ec = cfg.engine_config(static_cast<std::uint64_t>(rep), oracle_ptr);
            if (rep == 0 && cfg.dump_stage_state > 0) {
                ec.hook_every = cfg.dump_stage_state;
                ec.stage_hook = [&result](long t, const EstimatorBank& bank) {
                    json entry = bank_snapshot(bank);
                    entry["stage"] = t;
                    result.stage_dumps.push_back(entry);
                };
            }
            result.histories[rep] = run_procedure(cfg.procedure, ec);
        }
    };
    const int threads = std::min(cfg.workers, cfg.reps);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::vector<int>> selections(cfg.reps);
    for (int rep = 0; rep < cfg.reps; ++rep) {
        auto& row = selections[rep];
        row.reserve(cfg.T + 1);
        row.push_back(result.histories[rep].initial_selection);
        for (const auto& stage : result.histories[rep].stages) row.push_back(stage.selected);
    }
    result.curve = empirical_pcs(selections, result.true_best);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                   const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::ofstream csv(out_dir / "results.csv");
    if (!csv) throw runtime_error_exit("cannot write results to " + out_dir.string());
    csv << "stage,pcs,ci_lo,ci_hi\n";
    char line[128];
    for (std::size_t t = 0; t < result.curve.pcs.size(); ++t) {
        std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f\n", t, result.curve.pcs[t],
                      result.curve.ci_lo[t], result.curve.ci_hi[t]);
        csv << line;
    }

    json manifest;
    manifest["config"] = cfg.raw;
    manifest["procedure"] = procedure_name(cfg.procedure);
    manifest["seed"] = cfg.seed;
    manifest["reps"] = cfg.reps;
    manifest["true_best"] = result.true_best;
    manifest["tie_break"] = "lowest-index";
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["git_describe"] = git_describe();
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';

    if (!result.stage_dumps.is_null()) {
        std::ofstream dump(out_dir / "stage_state.json");
        dump << result.stage_dumps.dump(2) << '\n';
    }
}

nlohmann::json bank_snapshot(const EstimatorBank& bank) {
    const auto& layout = bank.layout();
    json snap;
    for (int s = 0; s < layout.stream_count(); ++s) {
        json stream;
        stream["n"] = bank.input_count(s);
        stream["theta_hat"] = bank.theta_hat(s);
        const SmallMat cov = bank.sigma_d(s);
        stream["sigma_d"] = cov.a;
        snap["streams"].push_back(stream);
    }
    const int best = bank.best_design();
    snap["best"] = best;
    for (int i = 0; i < layout.design_count(); ++i) {
        json design;
        design["m"] = bank.output_count(i);
        design["mu_hat"] = bank.mu_hat(i);
        design["sigma2_hat"] = bank.sigma2_hat(i);
        design["grad_mu"] = bank.grad_mu(i);
        if (i != best) {
            Vec g(layout.stream_count());
            for (int s = 0; s < layout.stream_count(); ++s) g[s] = bank.g_hat(i, s);
            design["g_hat"] = g;
        }
        snap["designs"].push_back(design);
    }
    return snap;
}

}  // namespace sba
