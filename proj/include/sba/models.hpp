#pragma once
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "sba/linalg.hpp"

namespace sba {

// One simulation replication's worth of input realizations: draws[s] holds the
// ordered raw realizations consumed from stream s (1 for the quadratic model,
// V for the inventory model).
struct Scenario {
    std::vector<std::vector<double>> draws;
};

// Scenario in, scalar performance out. Input randomness enters only through
// the scenario so the harness can attach likelihood-ratio scores; any
// idiosyncratic noise comes from the rng argument. All models return "larger
// is better".
class SimulationModel {
  public:
    virtual ~SimulationModel() = default;

    virtual int design_count() const = 0;
    virtual int stream_count() const = 0;
    virtual int draws_per_stream() const = 0;
    virtual double evaluate(int design, const Scenario& scenario, std::mt19937_64& rng) const = 0;

    // Closed-form expected performance, where available.
    virtual std::optional<double> true_mean(int design, const Vec& theta_by_stream) const {
        (void)design;
        (void)theta_by_stream;
        return std::nullopt;
    }

    void require_design(int design) const;
};

// max_x -E[(x - sum_s zeta_s)^2] + eps with exponential zeta_s and known
// N(0,1) noise eps. Designs are x_i = x_star + offset_i; offset 0 is the true
// optimum at x_star = sum of the true stream means.
class QuadraticModel : public SimulationModel {
  public:
    QuadraticModel(int streams, std::vector<int> offsets, double x_star, double noise_sd = 1.0);

    int design_count() const override { return static_cast<int>(offsets_.size()); }
    int stream_count() const override { return streams_; }
    int draws_per_stream() const override { return 1; }
    double evaluate(int design, const Scenario& scenario, std::mt19937_64& rng) const override;

    // -[(x_i - sum theta)^2 + sum theta^2] under independent exponentials.
    std::optional<double> true_mean(int design, const Vec& theta_by_stream) const override;

    // d/d_theta_s of true_mean: 2 (x_i - sum theta) - 2 theta_s.
    Vec true_mean_gradient(int design, const Vec& theta_by_stream) const;

    // Var of one output at theta, from the central moments of the
    // exponential sum plus the unit noise.
    double true_variance(int design, const Vec& theta_by_stream) const;

    double design_x(int design) const { return x_star_ + offsets_[design]; }

  private:
    int streams_;
    std::vector<int> offsets_;
    double x_star_;
    double noise_sd_;
};

// Order-up-to inventory system with multi-channel Poisson demand over V
// periods. Returns the negated total holding/backlog cost so selection of the
// largest performance matches cost minimization.
class InventoryModel : public SimulationModel {
  public:
    InventoryModel(int periods, int channels, double holding_cost, double backlog_cost,
                   std::vector<int> order_up_to_levels,
                   double max_production = kUnboundedProduction);

    int design_count() const override { return static_cast<int>(levels_.size()); }
    int stream_count() const override { return channels_; }
    int draws_per_stream() const override { return periods_; }
    double evaluate(int design, const Scenario& scenario, std::mt19937_64& rng) const override;

    int level(int design) const { return levels_[design]; }
    int periods() const { return periods_; }

    static constexpr double kUnboundedProduction = 1e18;

  private:
    int periods_;
    int channels_;
    double holding_cost_;
    double backlog_cost_;
    std::vector<int> levels_;
    double max_production_;
};

// Seeded Monte Carlo estimate of the expected performance, with standard
// error. Used as ground-truth oracle for models without a closed form.
struct OracleEstimate {
    double mean;
    double std_error;
};
OracleEstimate monte_carlo_mean(const SimulationModel& model, int design,
                                const std::vector<class ParametricFamily>& families,
                                const std::vector<Vec>& theta_by_stream, long n_oracle,
                                std::uint64_t seed);

}  // namespace sba
