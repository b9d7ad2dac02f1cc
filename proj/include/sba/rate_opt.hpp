#pragma once
#include <vector>

#include "sba/linalg.hpp"

namespace sba {

// Input-budget rate maximization: choose per-stream data rates n_bar on the
// cost-weighted simplices {sum_{s in S_j} c_s n_s = U_j} to maximize
// min_i delta2[i] / sum_s w[i][s] / n_s.
struct PaeProblem {
    std::vector<double> delta2;          // squared gap, one per suboptimal design
    std::vector<Vec> w;                  // [design][stream] quadratic-form weights, >= 0
    std::vector<int> partition;          // per stream
    Vec cost;                            // c_s > 0
    Vec budget;                          // U_j > 0

    int stream_count() const { return static_cast<int>(cost.size()); }
    int partition_count() const { return static_cast<int>(budget.size()); }
};

struct PaeSolution {
    Vec n_bar;
    double rate = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool degenerate_fallback = false;  // some stream had no sensitive design
};

// min over designs of delta2 / sum_s w_s / n_s; designs insensitive to every
// stream contribute +inf and drop out of the min.
double pae_rate(const Vec& n_bar, const PaeProblem& prob);

// Dual multiplicative-weights ascent over the design simplex with the
// closed-form per-partition inner minimizer; kkt_residual reports the exact
// relative duality gap at the returned rates. Singleton partitions exhaust
// their budget exactly.
PaeSolution solve_input_allocation(const PaeProblem& prob, double tol = 1e-8,
                                   int max_iter = 10000);

// Rate parameters of the simulation-allocation problem, in true or plug-in
// form. Entries at the best design are ignored where not meaningful.
struct PcsRateParams {
    int best = 0;
    Vec delta2;              // (mu_b - mu_i)^2
    std::vector<Vec> g;      // [design][stream] input-uncertainty quadratic forms
    Vec sigma2;              // output variances, all designs
    Vec d;                   // simulation costs, all designs

    int design_count() const { return static_cast<int>(sigma2.size()); }
};

// Large-deviation rate of suboptimal design i at allocation (m_bar, n_bar).
double pcs_rate(int i, const Vec& m_bar, const Vec& n_bar, const PcsRateParams& p,
                bool drop_best_term = false);

struct BalanceResiduals {
    double rate_gap = 0.0;           // max pairwise gap of the exact rate functions
    double global_defect = 0.0;      // |m_b^2 - (sigma_b^2/d_b) sum d_i m_i^2 / sigma_i^2|
    double rate_gap_modified = 0.0;  // gap with the sigma_b^2/m_b term dropped
};

BalanceResiduals pcs_balance_residuals(const Vec& m_bar, const Vec& n_bar,
                                       const PcsRateParams& p);

}  // namespace sba
