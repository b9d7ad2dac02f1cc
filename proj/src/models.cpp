#include "sba/models.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sba/families.hpp"
#include "sba/rng.hpp"

namespace sba {

void SimulationModel::require_design(int design) const {
    if (design < 0 || design >= design_count())
        throw std::out_of_range("design index out of range");
}

QuadraticModel::QuadraticModel(int streams, std::vector<int> offsets, double x_star,
                               double noise_sd)
    : streams_(streams), offsets_(std::move(offsets)), x_star_(x_star), noise_sd_(noise_sd) {
    if (streams_ <= 0 || offsets_.empty()) throw std::invalid_argument("empty quadratic model");
}

double QuadraticModel::evaluate(int design, const Scenario& scenario,
                                std::mt19937_64& rng) const {
    require_design(design);
    double sum = 0.0;
    for (int s = 0; s < streams_; ++s) sum += scenario.draws[s][0];
    const double x = design_x(design);
    std::normal_distribution<double> noise(0.0, noise_sd_);
    return -(x - sum) * (x - sum) + noise(rng);
}

std::optional<double> QuadraticModel::true_mean(int design, const Vec& theta) const {
    require_design(design);
    for (double th : theta)
        if (th <= 0.0) throw invalid_parameter("exponential mean must be positive");
    const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
    double var = 0.0;
    for (double th : theta) var += th * th;  // Var(zeta_s) = theta_s^2
    const double x = design_x(design);
    return -((x - total) * (x - total) + var);
}

Vec QuadraticModel::true_mean_gradient(int design, const Vec& theta) const {
    require_design(design);
    const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
    const double x = design_x(design);
    Vec g(theta.size());
    for (std::size_t s = 0; s < theta.size(); ++s) g[s] = 2.0 * (x - total) - 2.0 * theta[s];
    return g;
}

double QuadraticModel::true_variance(int design, const Vec& theta) const {
    require_design(design);
    // Central moments of Y = sum of independent exponentials:
    // mu2 = sum th^2, mu3 = sum 2 th^3, mu4 = sum 9 th^4 + 3 sum_{s!=s'} th_s^2 th_s'^2.
    double mu2 = 0.0, mu3 = 0.0, mu4_own = 0.0;
    for (double th : theta) {
        mu2 += th * th;
        mu3 += 2.0 * th * th * th;
        mu4_own += 9.0 * th * th * th * th;
    }
    double cross = 0.0;
    for (std::size_t s = 0; s < theta.size(); ++s)
        for (std::size_t r = 0; r < theta.size(); ++r)
            if (r != s) cross += theta[s] * theta[s] * theta[r] * theta[r];
    const double mu4 = mu4_own + 3.0 * cross;
    const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
    const double b = design_x(design) - total;  // (Y - x) = (Y - EY) - b
    const double e2 = mu2 + b * b;
    const double e4 = mu4 - 4.0 * b * mu3 + 6.0 * b * b * mu2 + b * b * b * b;
    return e4 - e2 * e2 + noise_sd_ * noise_sd_;
}

InventoryModel::InventoryModel(int periods, int channels, double holding_cost,
                               double backlog_cost, std::vector<int> order_up_to_levels,
                               double max_production)
    : periods_(periods),
      channels_(channels),
      holding_cost_(holding_cost),
      backlog_cost_(backlog_cost),
      levels_(std::move(order_up_to_levels)),
      max_production_(max_production) {
    if (periods_ <= 0 || channels_ <= 0 || levels_.empty())
        throw std::invalid_argument("empty inventory model");
}

double InventoryModel::evaluate(int design, const Scenario& scenario,
                                std::mt19937_64& /*rng*/) const {
    require_design(design);
    const double level = levels_[design];
    double inventory = level;  // I_0 = i
    double production = 0.0;   // R_0 = 0
    double total_cost = 0.0;
    for (int v = 0; v < periods_; ++v) {
        double demand = 0.0;
        for (int s = 0; s < channels_; ++s) demand += scenario.draws[s][v];
        const double next = inventory + production - demand;
        const double holding = std::max(next, 0.0);
        const double backlog = std::max(-next, 0.0);
        total_cost += holding_cost_ * (production + holding) + backlog_cost_ * backlog;
        inventory = next;
        production = std::min(max_production_, std::max(level - inventory, 0.0));
    }
    return -total_cost;
}

OracleEstimate monte_carlo_mean(const SimulationModel& model, int design,
                                const std::vector<ParametricFamily>& families,
                                const std::vector<Vec>& theta_by_stream, long n_oracle,
                                std::uint64_t seed) {
    model.require_design(design);
    for (std::size_t s = 0; s < families.size(); ++s) families[s].require_valid(theta_by_stream[s]);
    auto rng = make_stream(seed, {rng_tag::kOracle, static_cast<std::uint64_t>(design)});
    Scenario scenario;
    scenario.draws.assign(model.stream_count(),
                          std::vector<double>(model.draws_per_stream(), 0.0));
    double sum = 0.0, sum_sq = 0.0;
    for (long r = 0; r < n_oracle; ++r) {
        for (int s = 0; s < model.stream_count(); ++s)
            for (int v = 0; v < model.draws_per_stream(); ++v)
                scenario.draws[s][v] = families[s].sample(theta_by_stream[s], rng);
        const double x = model.evaluate(design, scenario, rng);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n_oracle;
    const double var = std::max(0.0, (sum_sq - n_oracle * mean * mean) / (n_oracle - 1.0));
    return {mean, std::sqrt(var / n_oracle)};
}

}  // namespace sba
