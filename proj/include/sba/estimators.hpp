#pragma once
#include <span>
#include <vector>

#include "sba/layout.hpp"
#include "sba/linalg.hpp"

namespace sba {

// Streaming accumulators for all plug-in quantities: per stream the moment
// sums behind theta_hat and Sigma_D_hat, per design the grand-mean performance
// estimator over all stages (each stage generated under its own theta_hat),
// its variance, and the likelihood-ratio gradient estimator. Scores are
// computed by the caller at simulation time, under the theta_hat in force when
// the output was generated.
class EstimatorBank {
  public:
    EstimatorBank(const StreamLayout& layout, int design_count);

    void update_input(int s, std::span<const double> draws);
    void update_output(int i, std::span<const double> outputs, std::span<const Vec> scores);

    long input_count(int s) const { return streams_[s].n; }
    long output_count(int i) const { return designs_[i].m; }

    // Moment estimate, projected into the family's valid set.
    Vec theta_hat(int s) const;
    // Concatenated over streams.
    Vec theta_hat_all() const;

    // Sample covariance of D_s, with a small ridge when degenerate.
    SmallMat sigma_d(int s) const;

    double mu_hat(int i) const;
    double sigma2_hat(int i) const;  // floored at kVarianceFloor
    // Full-dimension gradient estimate; per-stream block via theta_offset.
    Vec grad_mu(int i) const;

    // (grad_s mu_b - grad_s mu_i)^T Sigma_D_s (grad_s mu_b - grad_s mu_i)
    double g_hat(int i, int s) const;

    // argmax mu_hat, ties to lowest index.
    int best_design() const;

    const StreamLayout& layout() const { return *layout_; }

    static constexpr double kVarianceFloor = 1e-8;
    static constexpr double kCovRidge = 1e-12;

  private:
    struct StreamAcc {
        long n = 0;
        Vec sum;        // sum D(zeta)
        SmallMat outer; // sum D D^T
    };
    struct DesignAcc {
        long m = 0;
        double sum_x = 0.0;
        double sum_x2 = 0.0;
        Vec sum_score_x;  // sum over outputs of score * X, full theta dim
    };

    const StreamLayout* layout_;
    std::vector<StreamAcc> streams_;
    std::vector<DesignAcc> designs_;
};

}  // namespace sba
