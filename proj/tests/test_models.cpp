#include <doctest.h>

#include <cmath>
#include <random>

#include "sba/families.hpp"
#include "sba/models.hpp"
#include "sba/rng.hpp"

using namespace sba;

namespace {

Scenario scen(std::vector<std::vector<double>> draws) { return Scenario{std::move(draws)}; }

// Independent re-derivation of the order-up-to recursion, used to cross-check
// InventoryModel::evaluate on random demand paths.
double inventory_cost_oracle(int level, double holding, double backlog, double cap,
                             const std::vector<std::vector<double>>& demand_by_channel,
                             int periods) {
    double inv = level, prod_prev = 0.0, total = 0.0;
    for (int v = 0; v < periods; ++v) {
        double demand = 0.0;
        for (const auto& ch : demand_by_channel) demand += ch[v];
        inv = inv + prod_prev - demand;
        const double prod = std::min(cap, std::max(0.0, level - inv));
        total += holding * (prod_prev + std::max(0.0, inv)) + backlog * std::max(0.0, -inv);
        prod_prev = prod;
    }
    return -total;
}

}  // namespace

TEST_CASE("quadratic evaluate hand traces") {
    QuadraticModel model(2, {0, 2}, 3.0, /*noise_sd=*/0.0);
    auto rng = make_stream(1, {});
    CHECK(model.design_x(0) == 3.0);
    CHECK(model.design_x(1) == 5.0);
    CHECK(model.evaluate(0, scen({{2.0}, {1.0}}), rng) == doctest::Approx(0.0));
    CHECK(model.evaluate(1, scen({{2.0}, {1.0}}), rng) == doctest::Approx(-4.0));
}

TEST_CASE("quadratic offset zero is the true best") {
    const Vec theta{1, 2, 3, 3, 2, 1};
    std::vector<int> offsets;
    for (int i = -10; i <= 10; ++i) offsets.push_back(i);
    QuadraticModel model(6, offsets, 12.0);
    int best = 0;
    for (int i = 1; i < model.design_count(); ++i)
        if (*model.true_mean(i, theta) > *model.true_mean(best, theta)) best = i;
    CHECK(model.design_x(best) == 12.0);
    CHECK(offsets[best] == 0);
}

TEST_CASE("quadratic true mean hand values") {
    QuadraticModel model(2, {0, 1}, 3.0);
    const Vec theta{2.0, 1.0};
    CHECK(*model.true_mean(0, theta) == doctest::Approx(-5.0));
    CHECK(*model.true_mean(1, theta) == doctest::Approx(-6.0));
}

TEST_CASE("quadratic true mean and variance match Monte Carlo") {
    std::mt19937_64 meta(2024);
    std::uniform_real_distribution<double> unif(0.3, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Vec theta{unif(meta), unif(meta)};
        const int design = trial % 3;
        QuadraticModel model(2, {-1, 0, 2}, theta[0] + theta[1]);
        std::vector<ParametricFamily> fams(2, ParametricFamily(FamilyKind::Exponential));
        const auto est = monte_carlo_mean(model, design, fams, {{theta[0]}, {theta[1]}},
                                          1000000, 1000 + trial);
        CHECK(std::abs(est.mean - *model.true_mean(design, theta)) < 4.0 * est.std_error);

        // Variance oracle: brute-force second moment on an independent stream.
        auto rng = make_stream(55, {static_cast<std::uint64_t>(trial)});
        const long n = 200000;
        double sum = 0.0, sum_sq = 0.0;
        for (long r = 0; r < n; ++r) {
            Scenario sc{{{fams[0].sample({theta[0]}, rng)}, {fams[1].sample({theta[1]}, rng)}}};
            const double x = model.evaluate(design, sc, rng);
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / n;
        const double var = (sum_sq - n * mean * mean) / (n - 1.0);
        CHECK(model.true_variance(design, theta) == doctest::Approx(var).epsilon(0.05));
    }
}

TEST_CASE("quadratic analytic gradient matches finite differences") {
    QuadraticModel model(2, {0, 3}, 3.0);
    const Vec theta{2.0, 1.0};
    for (int design = 0; design < 2; ++design) {
        const Vec g = model.true_mean_gradient(design, theta);
        for (int s = 0; s < 2; ++s) {
            const double h = 1e-6;
            Vec hi = theta, lo = theta;
            hi[s] += h;
            lo[s] -= h;
            const double fd = (*model.true_mean(design, hi) - *model.true_mean(design, lo)) /
                              (2.0 * h);
            CHECK(g[s] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("quadratic argmax tracks the closest design") {
    std::mt19937_64 meta(7);
    std::uniform_real_distribution<double> unif(0.2, 4.0);
    std::vector<int> offsets;
    for (int i = -5; i <= 5; ++i) offsets.push_back(i);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec theta{unif(meta), unif(meta)};
        const double total = theta[0] + theta[1];
        QuadraticModel model(2, offsets, 8.0);
        int best = 0, closest = 0;
        for (int i = 1; i < model.design_count(); ++i) {
            if (*model.true_mean(i, theta) > *model.true_mean(best, theta)) best = i;
            if (std::abs(model.design_x(i) - total) < std::abs(model.design_x(closest) - total))
                closest = i;
        }
        CHECK(best == closest);
    }
}

TEST_CASE("inventory evaluate hand traces") {
    InventoryModel m55(1, 1, 0.5, 1.0, {5});
    auto rng = make_stream(1, {});
    CHECK(m55.evaluate(0, scen({{0.0}}), rng) == doctest::Approx(-2.5));
    CHECK(m55.evaluate(0, scen({{3.0}}), rng) == doctest::Approx(-1.0));

    InventoryModel m2(1, 1, 0.5, 1.0, {2});
    CHECK(m2.evaluate(0, scen({{5.0}}), rng) == doctest::Approx(-3.0));
}

TEST_CASE("inventory recursion matches an independent trace oracle") {
    auto rng = make_stream(31, {});
    std::poisson_distribution<long> demand(3.0);
    for (double cap : {InventoryModel::kUnboundedProduction, 4.0}) {
        InventoryModel model(6, 2, 0.5, 1.0, {3, 7}, cap);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::vector<double>> draws(2, std::vector<double>(6));
            for (auto& ch : draws)
                for (auto& d : ch) d = static_cast<double>(demand(rng));
            for (int design = 0; design < 2; ++design) {
                const double expect =
                    inventory_cost_oracle(model.level(design), 0.5, 1.0, cap, draws, 6);
                CHECK(model.evaluate(design, scen(draws), rng) == doctest::Approx(expect));
            }
        }
    }
}

TEST_CASE("inventory oracle mean near zero demand matches the hand trace") {
    InventoryModel model(1, 1, 0.5, 1.0, {5});
    std::vector<ParametricFamily> fams{ParametricFamily(FamilyKind::Poisson)};
    const auto est = monte_carlo_mean(model, 0, fams, {{0.0001}}, 100000, 77);
    CHECK(std::abs(est.mean - (-2.5)) < 3.0 * std::max(est.std_error, 1e-4));
    CHECK_THROWS_AS(monte_carlo_mean(model, 0, fams, {{0.0}}, 10, 1), invalid_parameter);
}
