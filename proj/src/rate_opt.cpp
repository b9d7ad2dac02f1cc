#include "sba/rate_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double design_rate(const PaeProblem& prob, int i, const Vec& n_bar) {
    double denom = 0.0;
    for (int s = 0; s < prob.stream_count(); ++s) denom += prob.w[i][s] / n_bar[s];
    if (denom == 0.0) return kInf;
    return prob.delta2[i] / denom;
}

}  // namespace

double pae_rate(const Vec& n_bar, const PaeProblem& prob) {
    for (double n : n_bar)
        if (!(n > 0.0)) throw std::invalid_argument("rates must be positive");
    double best = kInf;
    for (std::size_t i = 0; i < prob.delta2.size(); ++i)
        best = std::min(best, design_rate(prob, static_cast<int>(i), n_bar));
    return best;
}

PaeSolution solve_input_allocation(const PaeProblem& prob, double tol, int max_iter) {
    const int S = prob.stream_count();
    const int D = prob.partition_count();
    const int I = static_cast<int>(prob.delta2.size());

    PaeSolution sol;
    sol.n_bar.assign(S, 0.0);

    // A zero estimated gap makes the objective identically zero, so such
    // designs carry no allocation signal; drop them from the optimization.
    std::vector<int> act;
    for (int i = 0; i < I; ++i)
        if (prob.delta2[i] > 0.0) act.push_back(i);

    // Partition bookkeeping; singleton partitions exhaust their budget.
    std::vector<std::vector<int>> members(D);
    for (int s = 0; s < S; ++s) members[prob.partition[s]].push_back(s);
    std::vector<bool> optimized(D, false);
    for (int j = 0; j < D; ++j) {
        if (members[j].empty()) throw std::invalid_argument("empty partition");
        if (members[j].size() == 1) {
            const int s = members[j][0];
            sol.n_bar[s] = prob.budget[j] / prob.cost[s];
            continue;
        }
        // A stream no design is sensitive to makes the optimum degenerate;
        // fall back to an equal cost-weighted split for that partition.
        bool degenerate = false;
        for (int s : members[j]) {
            double wmax = 0.0;
            for (int i : act) wmax = std::max(wmax, prob.w[i][s]);
            if (wmax == 0.0) degenerate = true;
        }
        if (degenerate) {
            sol.degenerate_fallback = true;
            for (int s : members[j])
                sol.n_bar[s] = prob.budget[j] / (prob.cost[s] * members[j].size());
            continue;
        }
        optimized[j] = true;
        for (int s : members[j])
            sol.n_bar[s] = prob.budget[j] / (prob.cost[s] * members[j].size());
    }

    bool any_optimized = false;
    for (int j = 0; j < D; ++j) any_optimized |= optimized[j];
    if (!any_optimized || I == 0) {
        sol.rate = I == 0 ? 0.0 : pae_rate(sol.n_bar, prob);
        return sol;
    }

    // Equivalent convex form: minimize max_i A_i(n) with A_i = sum_s
    // wt_is / n_s, wt_is = w_is / delta2_i, over the cost-weighted simplices.
    // By minimax duality this equals max_alpha G(alpha) over the design
    // simplex, where G(alpha) = min_n sum_i alpha_i A_i(n) has a closed-form
    // inner minimizer per partition: n_s ~ sqrt(v_s / c_s) with
    // v_s = sum_i alpha_i wt_is. Multiplicative-weights ascent on alpha with a
    // backtracking step keeps G monotone; the reported residual is the exact
    // relative duality gap (max_i A_i - G) / max_i A_i, a certificate of
    // optimality for the returned rates.
    const int nact = static_cast<int>(act.size());
    std::vector<Vec> wt(nact, Vec(S, 0.0));
    for (int a = 0; a < nact; ++a)
        for (int s = 0; s < S; ++s) wt[a][s] = prob.w[act[a]][s] / prob.delta2[act[a]];

    // Streams in non-optimized partitions keep their fixed rates.
    const Vec n_fixed = sol.n_bar;

    Vec v(S);
    auto inner_solve = [&](const Vec& alpha, Vec& n, Vec& A) {
        std::fill(v.begin(), v.end(), 0.0);
        for (int a = 0; a < nact; ++a)
            for (int s = 0; s < S; ++s) v[s] += alpha[a] * wt[a][s];
        n = n_fixed;
        for (int j = 0; j < D; ++j) {
            if (!optimized[j]) continue;
            double vmax = 0.0;
            for (int s : members[j]) vmax = std::max(vmax, v[s]);
            double denom = 0.0;
            for (int s : members[j]) {
                v[s] = std::max(v[s], 1e-12 * vmax);  // keep rates positive
                denom += std::sqrt(v[s] * prob.cost[s]);
            }
            for (int s : members[j])
                n[s] = prob.budget[j] * std::sqrt(v[s] / prob.cost[s]) / denom;
        }
        double g = 0.0;
        for (int a = 0; a < nact; ++a) {
            double acc = 0.0;
            for (int s = 0; s < S; ++s) acc += wt[a][s] / n[s];
            A[a] = acc;
            g += alpha[a] * acc;
        }
        return g;
    };

    Vec alpha(nact, 1.0 / nact), A(nact), alpha_try(nact), A_try(nact);
    Vec n_try(S);
    double eta = 1.0;
    double g_val = inner_solve(alpha, sol.n_bar, A);

    for (int iter = 1; iter <= max_iter; ++iter) {
        sol.iterations = iter;
        const double a_max = *std::max_element(A.begin(), A.end());
        if (!(a_max > 0.0)) {  // no design is sensitive anywhere
            sol.kkt_residual = 0.0;
            break;
        }
        sol.kkt_residual = (a_max - g_val) / a_max;
        if (sol.kkt_residual <= tol) break;

        bool accepted = false;
        while (eta >= 1e-14) {
            double sum = 0.0;
            for (int a = 0; a < nact; ++a) {
                alpha_try[a] = std::max(alpha[a], 1e-15) *
                               std::exp(eta * (A[a] - a_max) / a_max);
                sum += alpha_try[a];
            }
            for (int a = 0; a < nact; ++a) alpha_try[a] /= sum;
            const double g_try = inner_solve(alpha_try, n_try, A_try);
            if (g_try >= g_val) {
                alpha = alpha_try;
                A = A_try;
                sol.n_bar = n_try;
                g_val = g_try;
                eta = std::min(eta * 1.5, 64.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;  // numerically converged
    }

    sol.rate = pae_rate(sol.n_bar, prob);
    return sol;
}

double pcs_rate(int i, const Vec& m_bar, const Vec& n_bar, const PcsRateParams& p,
                bool drop_best_term) {
    if (i == p.best) throw std::invalid_argument("rate is defined for suboptimal designs");
    double denom = 0.0;
    for (std::size_t s = 0; s < n_bar.size(); ++s) denom += 2.0 * p.g[i][s] / n_bar[s];
    denom += p.sigma2[i] / m_bar[i];
    if (!drop_best_term) denom += p.sigma2[p.best] / m_bar[p.best];
    return p.delta2[i] / denom;
}

BalanceResiduals pcs_balance_residuals(const Vec& m_bar, const Vec& n_bar,
                                       const PcsRateParams& p) {
    for (double m : m_bar)
        if (!(m > 0.0)) throw std::invalid_argument("rates must be positive");
    for (double n : n_bar)
        if (!(n > 0.0)) throw std::invalid_argument("rates must be positive");

    BalanceResiduals out;
    const int K = p.design_count();
    double lo = kInf, hi = -kInf, lo_mod = kInf, hi_mod = -kInf;
    for (int i = 0; i < K; ++i) {
        if (i == p.best) continue;
        const double r = pcs_rate(i, m_bar, n_bar, p, false);
        const double rm = pcs_rate(i, m_bar, n_bar, p, true);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        lo_mod = std::min(lo_mod, rm);
        hi_mod = std::max(hi_mod, rm);
    }
    out.rate_gap = (K > 1) ? hi - lo : 0.0;
    out.rate_gap_modified = (K > 1) ? hi_mod - lo_mod : 0.0;

    double rhs = 0.0;
    for (int i = 0; i < K; ++i) {
        if (i == p.best) continue;
        rhs += p.d[i] * m_bar[i] * m_bar[i] / p.sigma2[i];
    }
    const int b = p.best;
    out.global_defect = std::abs(m_bar[b] * m_bar[b] - (p.sigma2[b] / p.d[b]) * rhs);
    return out;
}

}  // namespace sba
