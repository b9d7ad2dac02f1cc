#include "sba/config.hpp"

#include <fstream>
#include <numeric>

namespace sba {

namespace {

using nlohmann::json;

template <typename T>
T require(const json& doc, const std::string& field) {
    if (!doc.contains(field)) throw config_error("missing required field `" + field + "`");
    try {
        return doc.at(field).get<T>();
    } catch (const json::exception& e) {
        throw config_error("field `" + field + "`: " + e.what());
    }
}

template <typename T>
T optional(const json& doc, const std::string& field, T fallback) {
    if (!doc.contains(field)) return fallback;
    try {
        return doc.at(field).get<T>();
    } catch (const json::exception& e) {
        throw config_error("field `" + field + "`: " + e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    cfg.raw = doc;

    // Streams and partitions.
    const json streams = require<json>(doc, "streams");
    if (!streams.is_array() || streams.empty()) throw config_error("field `streams`: nonempty array expected");
    for (const auto& s : streams) {
        StreamLayout::Stream st{family_from_name(require<std::string>(s, "family")),
                                require<Vec>(s, "theta"),
                                optional<double>(s, "cost", 1.0),
                                require<int>(s, "partition"),
                                optional<bool>(s, "given", false)};
        if (!st.family.valid(st.theta_true))
            throw config_error("field `streams`: invalid theta for family " +
                               family_name(st.family.kind()));
        cfg.layout.streams.push_back(std::move(st));
    }
    cfg.layout.partition_budget = require<Vec>(doc, "partitions");

    const json sim = require<json>(doc, "simulation");
    cfg.layout.sim_budget = require<double>(sim, "budget");

    // Model.
    const json model = require<json>(doc, "model");
    cfg.model_kind = require<std::string>(model, "kind");
    const int S = cfg.layout.stream_count();
    if (cfg.model_kind == "quadratic") {
        const auto offsets = require<std::vector<int>>(model, "offsets");
        double x_star = 0.0;
        for (const auto& s : cfg.layout.streams) x_star += s.theta_true[0];
        cfg.model = std::make_shared<QuadraticModel>(S, offsets, x_star,
                                                     optional<double>(model, "noise_sd", 1.0));
    } else if (cfg.model_kind == "inventory") {
        cfg.model = std::make_shared<InventoryModel>(
            require<int>(model, "periods"), S, require<double>(model, "holding_cost"),
            require<double>(model, "backlog_cost"), require<std::vector<int>>(model, "levels"),
            optional<double>(model, "max_production", InventoryModel::kUnboundedProduction));
    } else {
        throw config_error("field `model.kind`: unknown model " + cfg.model_kind);
    }

    // Per-design simulation cost: scalar or array.
    if (sim.contains("cost") && sim.at("cost").is_array())
        cfg.layout.sim_cost = sim.at("cost").get<Vec>();
    else
        cfg.layout.sim_cost.assign(cfg.model->design_count(), optional<double>(sim, "cost", 1.0));

    cfg.procedure = procedure_from_name(optional<std::string>(doc, "procedure", "sba"));
    cfg.T = require<int>(doc, "T");
    cfg.n0 = require<int>(doc, "n0");
    cfg.m0 = require<int>(doc, "m0");
    cfg.reps = optional<int>(doc, "reps", 1);
    cfg.seed = optional<std::uint64_t>(doc, "seed", 0);
    cfg.oracle_mode = optional<bool>(doc, "oracle_mode", false);
    cfg.workers = optional<int>(doc, "workers", 1);
    cfg.jba_total_stages = optional<int>(doc, "jba_total_stages", 0);
    cfg.dump_stage_state = optional<int>(doc, "dump_stage_state", 0);
    cfg.oracle_cache = optional<std::string>(doc, "oracle_cache", "");
    cfg.oracle_samples = optional<long>(doc, "oracle_samples", 1000000L);
    cfg.out_dir = optional<std::string>(doc, "out", "results");
    if (doc.contains("solver")) {
        cfg.solver_tol = optional<double>(doc.at("solver"), "tol", cfg.solver_tol);
        cfg.solver_max_iter = optional<int>(doc.at("solver"), "max_iter", cfg.solver_max_iter);
    }

    if (cfg.reps < 1) throw config_error("field `reps`: must be >= 1");
    if (cfg.workers < 1) throw config_error("field `workers`: must be >= 1");
    try {
        cfg.layout.validate();
        EngineConfig ec = cfg.engine_config(0, nullptr);
        ec.oracle_mode = false;  // oracle spec is attached later by the runner
        ec.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    return cfg.raw;
}

EngineConfig ExperimentConfig::engine_config(std::uint64_t replication,
                                             const OracleSpec* oracle) const {
    EngineConfig ec;
    ec.model = model.get();
    ec.layout = layout;
    ec.T = T;
    ec.n0 = n0;
    ec.m0 = m0;
    ec.master_seed = seed;
    ec.replication = replication;
    ec.oracle_mode = oracle_mode;
    ec.oracle = oracle;
    ec.solver_tol = solver_tol;
    ec.solver_max_iter = solver_max_iter;
    ec.jba_total_stages = jba_total_stages;
    return ec;
}

}  // namespace sba
