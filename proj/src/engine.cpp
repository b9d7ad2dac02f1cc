#include "sba/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sba/rng.hpp"

namespace sba {

Procedure procedure_from_name(std::string_view name) {
    if (name == "sba") return Procedure::Sba;
    if (name == "equal") return Procedure::Equal;
    if (name == "jba") return Procedure::Jba;
    throw std::invalid_argument("unknown procedure: " + std::string(name));
}

std::string procedure_name(Procedure p) {
    switch (p) {
        case Procedure::Sba: return "sba";
        case Procedure::Equal: return "equal";
        case Procedure::Jba: return "jba";
    }
    return "?";
}

void StreamLayout::validate() const {
    if (streams.empty()) throw std::invalid_argument("no input streams");
    if (sim_cost.empty()) throw std::invalid_argument("no designs");
    if (!(sim_budget > 0.0)) throw std::invalid_argument("simulation budget must be positive");
    for (const auto& s : streams) {
        if (!(s.cost > 0.0)) throw std::invalid_argument("stream cost must be positive");
        if (s.partition < 0 || s.partition >= partition_count())
            throw std::invalid_argument("stream references unknown partition");
        s.family.require_valid(s.theta_true);
    }
    for (double u : partition_budget)
        if (!(u > 0.0)) throw std::invalid_argument("partition budget must be positive");
    for (double d : sim_cost)
        if (!(d > 0.0)) throw std::invalid_argument("simulation cost must be positive");
    for (int j = 0; j < partition_count(); ++j)
        if (partition_members(j).empty())
            throw std::invalid_argument("partition has no streams");
}

void EngineConfig::validate() const {
    if (model == nullptr) throw std::invalid_argument("no simulation model");
    layout.validate();
    if (model->stream_count() != layout.stream_count())
        throw std::invalid_argument("model and layout disagree on stream count");
    if (model->design_count() != layout.design_count())
        throw std::invalid_argument("model and layout disagree on design count");
    if (T < 0) throw std::invalid_argument("T must be nonnegative");
    if (n0 < 2 || m0 < 2) throw std::invalid_argument("n0 and m0 must be at least 2");
    if (oracle_mode) {
        if (oracle == nullptr) throw std::invalid_argument("oracle mode needs injected parameters");
        if (static_cast<int>(oracle->mu.size()) != layout.design_count() ||
            static_cast<int>(oracle->n_star.size()) != layout.stream_count())
            throw std::invalid_argument("oracle parameters have wrong shape");
    }
}

std::vector<long> allocate_input_stage(long t, const Vec& n_hat, const StreamLayout& layout,
                                       std::vector<long>& input_counts, long n0) {
    std::vector<long> inc(layout.stream_count(), 0);
    for (int j = 0; j < layout.partition_count(); ++j) {
        const auto members = layout.partition_members(j);
        auto spent = [&] {
            double c = 0.0;
            for (int s : members) c += layout.streams[s].cost * (input_counts[s] - n0);
            return c;
        };
        while (spent() < t * layout.partition_budget[j]) {
            int pick = members[0];
            double best = -std::numeric_limits<double>::infinity();
            for (int s : members) {
                const double deficit = t * n_hat[s] - input_counts[s];
                if (deficit > best) {
                    best = deficit;
                    pick = s;
                }
            }
            ++input_counts[pick];
            ++inc[pick];
        }
    }
    return inc;
}

std::vector<long> allocate_input_stage_equal(long t, const StreamLayout& layout,
                                             std::vector<long>& input_counts, long n0) {
    std::vector<long> inc(layout.stream_count(), 0);
    for (int j = 0; j < layout.partition_count(); ++j) {
        const auto members = layout.partition_members(j);
        auto spent = [&] {
            double c = 0.0;
            for (int s : members) c += layout.streams[s].cost * (input_counts[s] - n0);
            return c;
        };
        while (spent() < t * layout.partition_budget[j]) {
            int pick = members[0];
            double best = std::numeric_limits<double>::infinity();
            for (int s : members) {
                const double cost_spend = layout.streams[s].cost * input_counts[s];
                if (cost_spend < best) {
                    best = cost_spend;
                    pick = s;
                }
            }
            ++input_counts[pick];
            ++inc[pick];
        }
    }
    return inc;
}

int simulate_one_choice(int best, const std::vector<long>& sim_counts, const Vec& mu,
                        const Vec& sigma2, const Vec& d, const Vec& iu_term) {
    const int K = static_cast<int>(sim_counts.size());
    const double mb = static_cast<double>(sim_counts[best]);
    double rhs = 0.0;
    for (int i = 0; i < K; ++i) {
        if (i == best) continue;
        const double mi = static_cast<double>(sim_counts[i]);
        rhs += d[i] * mi * mi / sigma2[i];
    }
    if (mb * mb - (sigma2[best] / d[best]) * rhs < 0.0) return best;

    int pick = -1;
    double pick_rate = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
        if (i == best) continue;
        const double gap = mu[best] - mu[i];
        const double denom = iu_term[i] + sigma2[i] / sim_counts[i] + sigma2[best] / sim_counts[best];
        const double rate = gap * gap / denom;
        if (rate < pick_rate) {
            pick_rate = rate;
            pick = i;
        }
    }
    return pick;
}

std::vector<long> allocate_simulation_stage(long t, const StreamLayout& layout,
                                            std::vector<long>& sim_counts, long m0, int best,
                                            const Vec& mu, const Vec& sigma2,
                                            const Vec& iu_term) {
    const int K = layout.design_count();
    std::vector<long> inc(K, 0);
    auto spent = [&] {
        double c = 0.0;
        for (int i = 0; i < K; ++i) c += layout.sim_cost[i] * (sim_counts[i] - m0);
        return c;
    };
    while (spent() < t * layout.sim_budget) {
        const int pick = simulate_one_choice(best, sim_counts, mu, sigma2, layout.sim_cost, iu_term);
        ++sim_counts[pick];
        ++inc[pick];
    }
    return inc;
}

std::vector<long> allocate_simulation_stage_equal(long t, const StreamLayout& layout,
                                                  std::vector<long>& sim_counts, long m0) {
    const int K = layout.design_count();
    std::vector<long> inc(K, 0);
    auto spent = [&] {
        double c = 0.0;
        for (int i = 0; i < K; ++i) c += layout.sim_cost[i] * (sim_counts[i] - m0);
        return c;
    };
    while (spent() < t * layout.sim_budget) {
        int pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < K; ++i) {
            const double cost_spend = layout.sim_cost[i] * sim_counts[i];
            if (cost_spend < best) {
                best = cost_spend;
                pick = i;
            }
        }
        ++sim_counts[pick];
        ++inc[pick];
    }
    return inc;
}

namespace {

// Plug-in (or injected) estimates driving one stage's allocation decisions.
struct StageEstimates {
    int best = 0;
    Vec mu;
    Vec sigma2;
    std::vector<Vec> g;            // [design][stream], zero row at best
    std::vector<Vec> theta;        // per-stream snapshot the stage simulates under
};

// One replication's mutable state and data generation.
class Replication {
  public:
    explicit Replication(const EngineConfig& cfg)
        : cfg_(cfg),
          bank_(cfg.layout, cfg.layout.design_count()),
          input_counts_(cfg.layout.stream_count(), cfg.n0),
          sim_counts_(cfg.layout.design_count(), cfg.m0) {}

    std::vector<long>& input_counts() { return input_counts_; }
    std::vector<long>& sim_counts() { return sim_counts_; }
    EstimatorBank& bank() { return bank_; }

    void initialize() {
        if (cfg_.oracle_mode) return;
        const auto& layout = cfg_.layout;
        for (int s = 0; s < layout.stream_count(); ++s) {
            auto rng = make_stream(cfg_.master_seed,
                                   {cfg_.replication, rng_tag::kInputInit,
                                    static_cast<std::uint64_t>(s)});
            std::vector<double> draws(cfg_.n0);
            for (auto& x : draws) x = layout.streams[s].family.sample(layout.streams[s].theta_true, rng);
            bank_.update_input(s, draws);
        }
        std::vector<Vec> theta(layout.stream_count());
        for (int s = 0; s < layout.stream_count(); ++s) theta[s] = bank_.theta_hat(s);
        for (int i = 0; i < layout.design_count(); ++i) {
            auto rng = make_stream(cfg_.master_seed,
                                   {cfg_.replication, rng_tag::kSimInit,
                                    static_cast<std::uint64_t>(i)});
            simulate_into_bank(i, cfg_.m0, theta, rng);
        }
    }

    StageEstimates estimates() const {
        const auto& layout = cfg_.layout;
        StageEstimates est;
        const int K = layout.design_count();
        est.mu.resize(K);
        est.sigma2.resize(K);
        est.g.assign(K, Vec(layout.stream_count(), 0.0));
        if (cfg_.oracle_mode) {
            est.mu = cfg_.oracle->mu;
            est.sigma2 = cfg_.oracle->sigma2;
            est.g = cfg_.oracle->g;
            est.best = static_cast<int>(std::max_element(est.mu.begin(), est.mu.end()) -
                                        est.mu.begin());
            return est;
        }
        est.best = bank_.best_design();
        for (int i = 0; i < K; ++i) {
            est.mu[i] = bank_.mu_hat(i);
            est.sigma2[i] = bank_.sigma2_hat(i);
            if (i != est.best)
                for (int s = 0; s < layout.stream_count(); ++s) est.g[i][s] = bank_.g_hat(i, s);
        }
        est.theta.resize(layout.stream_count());
        for (int s = 0; s < layout.stream_count(); ++s) est.theta[s] = bank_.theta_hat(s);
        return est;
    }

    int current_selection() const {
        if (cfg_.oracle_mode) {
            const auto& mu = cfg_.oracle->mu;
            return static_cast<int>(std::max_element(mu.begin(), mu.end()) - mu.begin());
        }
        return bank_.best_design();
    }

    // Collect stage t's data: simulations run under the stage-start estimate
    // (the theta snapshot), input draws join the bank afterwards.
    void collect(long t, const std::vector<long>& n_inc, const std::vector<long>& m_inc,
                 const std::vector<Vec>& theta_snapshot) {
        if (cfg_.oracle_mode) return;
        const auto& layout = cfg_.layout;
        for (int i = 0; i < layout.design_count(); ++i) {
            if (m_inc[i] == 0) continue;
            auto rng = make_stream(cfg_.master_seed,
                                   {cfg_.replication, rng_tag::kSimStage,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i)});
            simulate_into_bank(i, m_inc[i], theta_snapshot, rng);
        }
        for (int s = 0; s < layout.stream_count(); ++s) {
            if (n_inc[s] == 0) continue;
            auto rng = make_stream(cfg_.master_seed,
                                   {cfg_.replication, rng_tag::kInputStage,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(s)});
            std::vector<double> draws(n_inc[s]);
            for (auto& x : draws)
                x = layout.streams[s].family.sample(layout.streams[s].theta_true, rng);
            bank_.update_input(s, draws);
        }
    }

    Vec iu_terms(const StageEstimates& est, bool ignore_given) const {
        const auto& layout = cfg_.layout;
        Vec iu(layout.design_count(), 0.0);
        for (int i = 0; i < layout.design_count(); ++i) {
            if (i == est.best) continue;
            for (int s = 0; s < layout.stream_count(); ++s) {
                if (ignore_given && layout.streams[s].given) continue;
                iu[i] += 2.0 * est.g[i][s] / static_cast<double>(input_counts_[s]);
            }
        }
        return iu;
    }

  private:
    void simulate_into_bank(int design, long count, const std::vector<Vec>& theta,
                            std::mt19937_64& rng) {
        const auto& layout = cfg_.layout;
        const int S = layout.stream_count();
        const int V = cfg_.model->draws_per_stream();
        Scenario scenario;
        scenario.draws.assign(S, std::vector<double>(V, 0.0));
        std::vector<double> outputs;
        std::vector<Vec> scores;
        outputs.reserve(count);
        scores.reserve(count);
        for (long r = 0; r < count; ++r) {
            Vec score;
            score.reserve(layout.theta_dim());
            for (int s = 0; s < S; ++s) {
                for (int v = 0; v < V; ++v)
                    scenario.draws[s][v] = layout.streams[s].family.sample(theta[s], rng);
                const Vec sc = layout.streams[s].family.score(theta[s], scenario.draws[s]);
                score.insert(score.end(), sc.begin(), sc.end());
            }
            outputs.push_back(cfg_.model->evaluate(design, scenario, rng));
            scores.push_back(std::move(score));
        }
        bank_.update_output(design, outputs, scores);
    }

    const EngineConfig& cfg_;
    EstimatorBank bank_;
    std::vector<long> input_counts_;
    std::vector<long> sim_counts_;
};

PaeProblem pae_problem_from(const StageEstimates& est, const StreamLayout& layout,
                            bool active_only) {
    PaeProblem prob;
    std::vector<int> stream_ids;
    for (int s = 0; s < layout.stream_count(); ++s)
        if (!active_only || !layout.streams[s].given) stream_ids.push_back(s);
    std::vector<int> part_map(layout.partition_count(), -1);
    for (int s : stream_ids) {
        const int j = layout.streams[s].partition;
        if (part_map[j] < 0) {
            part_map[j] = static_cast<int>(prob.budget.size());
            prob.budget.push_back(layout.partition_budget[j]);
        }
        prob.partition.push_back(part_map[j]);
        prob.cost.push_back(layout.streams[s].cost);
    }
    for (int i = 0; i < static_cast<int>(est.mu.size()); ++i) {
        if (i == est.best) continue;
        const double gap = est.mu[est.best] - est.mu[i];
        prob.delta2.push_back(gap * gap);
        Vec w;
        w.reserve(stream_ids.size());
        for (int s : stream_ids) w.push_back(est.g[i][s]);
        prob.w.push_back(std::move(w));
    }
    return prob;
}

// Scatter a solution over a stream subset back to full stream indexing.
Vec expand_n_hat(const Vec& sub, const StreamLayout& layout, bool active_only) {
    Vec full(layout.stream_count(), 0.0);
    std::size_t k = 0;
    for (int s = 0; s < layout.stream_count(); ++s)
        if (!active_only || !layout.streams[s].given) full[s] = sub[k++];
    return full;
}

}  // namespace

StageHistory run_sba(const EngineConfig& cfg) {
    cfg.validate();
    Replication rep(cfg);
    rep.initialize();

    StageHistory history;
    history.initial_selection = rep.current_selection();
    history.stages.reserve(cfg.T);

    for (long t = 1; t <= cfg.T; ++t) {
        const StageEstimates est = rep.estimates();
        Vec n_hat;
        if (cfg.oracle_mode) {
            n_hat = cfg.oracle->n_star;
        } else {
            const PaeProblem prob = pae_problem_from(est, cfg.layout, false);
            n_hat = solve_input_allocation(prob, cfg.solver_tol, cfg.solver_max_iter).n_bar;
        }
        const auto n_inc = allocate_input_stage(t, n_hat, cfg.layout, rep.input_counts(), cfg.n0);
        const Vec iu = rep.iu_terms(est, false);
        const auto m_inc = allocate_simulation_stage(t, cfg.layout, rep.sim_counts(), cfg.m0,
                                                     est.best, est.mu, est.sigma2, iu);
        rep.collect(t, n_inc, m_inc, est.theta);
        history.stages.push_back({rep.current_selection(), rep.input_counts(), rep.sim_counts()});
        if (cfg.hook_every > 0 && cfg.stage_hook && !cfg.oracle_mode && t % cfg.hook_every == 0)
            cfg.stage_hook(t, rep.bank());
    }
    return history;
}

StageHistory run_equal(const EngineConfig& cfg) {
    cfg.validate();
    Replication rep(cfg);
    rep.initialize();

    StageHistory history;
    history.initial_selection = rep.current_selection();
    history.stages.reserve(cfg.T);

    for (long t = 1; t <= cfg.T; ++t) {
        const StageEstimates est = rep.estimates();
        const auto n_inc = allocate_input_stage_equal(t, cfg.layout, rep.input_counts(), cfg.n0);
        const auto m_inc = allocate_simulation_stage_equal(t, cfg.layout, rep.sim_counts(), cfg.m0);
        rep.collect(t, n_inc, m_inc, est.theta);
        history.stages.push_back({rep.current_selection(), rep.input_counts(), rep.sim_counts()});
        if (cfg.hook_every > 0 && cfg.stage_hook && !cfg.oracle_mode && t % cfg.hook_every == 0)
            cfg.stage_hook(t, rep.bank());
    }
    return history;
}

StageHistory run_jba(const EngineConfig& cfg) {
    cfg.validate();
    const long total_stages = cfg.jba_total_stages > 0 ? cfg.jba_total_stages : cfg.T;
    const auto& layout = cfg.layout;

    Replication rep(cfg);
    rep.initialize();

    StageHistory history;
    history.initial_selection = rep.current_selection();
    history.stages.reserve(cfg.T);
    if (cfg.T == 0) return history;

    bool any_active = false;
    for (const auto& s : layout.streams) any_active |= !s.given;

    // One-shot input allocation proportions from the pilot estimates, given
    // streams ignored.
    const StageEstimates pilot = rep.estimates();
    Vec n_hat(layout.stream_count(), 0.0);
    long input_stages = 0;
    if (any_active) {
        const PaeProblem prob = pae_problem_from(pilot, layout, true);
        n_hat = expand_n_hat(solve_input_allocation(prob, cfg.solver_tol, cfg.solver_max_iter).n_bar,
                             layout, true);

        // Split the joint budget: pick the number of data-collection stages
        // maximizing the pilot-estimate rate at the horizon, with the
        // remaining stages simulated equally for the purpose of this choice.
        double total_sim_cost = 0.0;
        for (double d : layout.sim_cost) total_sim_cost += d;
        double best_rate = -1.0;
        for (long t1 = 1; t1 < total_stages; ++t1) {
            const double m_equal = (total_stages - t1) * layout.sim_budget / total_sim_cost;
            double rate = std::numeric_limits<double>::infinity();
            for (int i = 0; i < layout.design_count(); ++i) {
                if (i == pilot.best) continue;
                const double gap = pilot.mu[pilot.best] - pilot.mu[i];
                double denom = pilot.sigma2[i] / m_equal + pilot.sigma2[pilot.best] / m_equal;
                for (int s = 0; s < layout.stream_count(); ++s) {
                    if (layout.streams[s].given) continue;
                    denom += 2.0 * pilot.g[i][s] / (cfg.n0 + t1 * n_hat[s]);
                }
                rate = std::min(rate, gap * gap / denom);
            }
            if (rate > best_rate) {
                best_rate = rate;
                input_stages = t1;
            }
        }
    }

    for (long t = 1; t <= cfg.T; ++t) {
        const StageEstimates est = rep.estimates();
        std::vector<long> n_inc(layout.stream_count(), 0);
        std::vector<long> m_inc(layout.design_count(), 0);

        // Given streams deliver their batches every stage in both phases.
        // Active collection happens only during the data-collection phase; the
        // per-stage active budget equals the joint stage budget after the
        // cost rescaling that makes the two commensurate, which leaves the
        // original per-partition budgets in force.
        for (int j = 0; j < layout.partition_count(); ++j) {
            const auto members = layout.partition_members(j);
            const bool given = layout.streams[members[0]].given;
            if (!given && t > input_stages) continue;
            auto spent = [&] {
                double c = 0.0;
                for (int s : members)
                    c += layout.streams[s].cost * (rep.input_counts()[s] - cfg.n0);
                return c;
            };
            // Frozen phase-wide targets: active streams track t * n_hat.
            while (spent() < t * layout.partition_budget[j]) {
                int pick = members[0];
                double best = -std::numeric_limits<double>::infinity();
                for (int s : members) {
                    const double deficit = t * n_hat[s] - rep.input_counts()[s];
                    if (deficit > best) {
                        best = deficit;
                        pick = s;
                    }
                }
                ++rep.input_counts()[pick];
                ++n_inc[pick];
            }
        }

        if (t > input_stages) {
            const Vec iu = rep.iu_terms(est, true);
            m_inc = allocate_simulation_stage(t - input_stages, layout, rep.sim_counts(), cfg.m0,
                                              est.best, est.mu, est.sigma2, iu);
        }
        rep.collect(t, n_inc, m_inc, est.theta);
        history.stages.push_back({rep.current_selection(), rep.input_counts(), rep.sim_counts()});
        if (cfg.hook_every > 0 && cfg.stage_hook && !cfg.oracle_mode && t % cfg.hook_every == 0)
            cfg.stage_hook(t, rep.bank());
    }
    return history;
}

StageHistory run_procedure(Procedure p, const EngineConfig& cfg) {
    switch (p) {
        case Procedure::Sba: return run_sba(cfg);
        case Procedure::Equal: return run_equal(cfg);
        case Procedure::Jba: return run_jba(cfg);
    }
    throw std::logic_error("unreachable");
}

}  // namespace sba
