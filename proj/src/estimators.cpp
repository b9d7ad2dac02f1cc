#include "sba/estimators.hpp"

#include <algorithm>
#include <stdexcept>

namespace sba {

EstimatorBank::EstimatorBank(const StreamLayout& layout, int design_count)
    : layout_(&layout) {
    streams_.resize(layout.stream_count());
    for (int s = 0; s < layout.stream_count(); ++s) {
        const int d = layout.streams[s].family.param_dim();
        streams_[s].sum.assign(d, 0.0);
        streams_[s].outer = SmallMat(d);
    }
    designs_.resize(design_count);
    for (auto& acc : designs_) acc.sum_score_x.assign(layout.theta_dim(), 0.0);
}

void EstimatorBank::update_input(int s, std::span<const double> draws) {
    if (s < 0 || s >= layout_->stream_count()) throw std::out_of_range("unknown stream");
    auto& acc = streams_[s];
    const auto& family = layout_->streams[s].family;
    // Accumulate in a canonical order so permuting a batch cannot change the
    // floating-point sums.
    std::vector<double> ordered(draws.begin(), draws.end());
    std::sort(ordered.begin(), ordered.end());
    for (double x : ordered) {
        const Vec d = family.moment_map(x);
        for (std::size_t r = 0; r < d.size(); ++r) {
            acc.sum[r] += d[r];
            for (std::size_t c = 0; c < d.size(); ++c)
                acc.outer(static_cast<int>(r), static_cast<int>(c)) += d[r] * d[c];
        }
        ++acc.n;
    }
}

void EstimatorBank::update_output(int i, std::span<const double> outputs,
                                  std::span<const Vec> scores) {
    if (i < 0 || i >= static_cast<int>(designs_.size()))
        throw std::out_of_range("unknown design");
    if (outputs.size() != scores.size())
        throw std::invalid_argument("outputs and scores must align one-to-one");
    auto& acc = designs_[i];
    // Canonical order (see update_input): sort by output, then score.
    std::vector<std::size_t> order(outputs.size());
    for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (outputs[a] != outputs[b]) return outputs[a] < outputs[b];
        return scores[a] < scores[b];
    });
    for (std::size_t r : order) {
        acc.sum_x += outputs[r];
        acc.sum_x2 += outputs[r] * outputs[r];
        for (std::size_t k = 0; k < acc.sum_score_x.size(); ++k)
            acc.sum_score_x[k] += scores[r][k] * outputs[r];
        ++acc.m;
    }
}

Vec EstimatorBank::theta_hat(int s) const {
    const auto& acc = streams_[s];
    if (acc.n == 0) throw std::logic_error("no input data for stream");
    Vec th(acc.sum.size());
    for (std::size_t k = 0; k < th.size(); ++k) th[k] = acc.sum[k] / acc.n;
    return layout_->streams[s].family.project(std::move(th));
}

Vec EstimatorBank::theta_hat_all() const {
    Vec out;
    out.reserve(layout_->theta_dim());
    for (int s = 0; s < layout_->stream_count(); ++s) {
        const Vec th = theta_hat(s);
        out.insert(out.end(), th.begin(), th.end());
    }
    return out;
}

SmallMat EstimatorBank::sigma_d(int s) const {
    const auto& acc = streams_[s];
    const int d = static_cast<int>(acc.sum.size());
    SmallMat cov(d);
    if (acc.n > 1) {
        // (sum DD^T - n mean mean^T) / (n - 1)
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                const double mr = acc.sum[r] / acc.n;
                const double mc = acc.sum[c] / acc.n;
                cov(r, c) = (acc.outer(r, c) - acc.n * mr * mc) / (acc.n - 1.0);
            }
    }
    bool degenerate = acc.n <= 1;
    for (int r = 0; r < d && !degenerate; ++r) degenerate = cov(r, r) <= 0.0;
    if (degenerate) cov.add_ridge(kCovRidge);
    return cov;
}

double EstimatorBank::mu_hat(int i) const {
    const auto& acc = designs_[i];
    if (acc.m == 0) throw std::logic_error("no simulation output for design");
    return acc.sum_x / acc.m;
}

double EstimatorBank::sigma2_hat(int i) const {
    const auto& acc = designs_[i];
    if (acc.m <= 1) return kVarianceFloor;
    const double mu = acc.sum_x / acc.m;
    const double raw = (acc.sum_x2 - acc.m * mu * mu) / (acc.m - 1.0);
    return std::max(raw, kVarianceFloor);
}

Vec EstimatorBank::grad_mu(int i) const {
    const auto& acc = designs_[i];
    if (acc.m == 0) throw std::logic_error("no simulation output for design");
    Vec g(acc.sum_score_x.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = acc.sum_score_x[k] / acc.m;
    return g;
}

double EstimatorBank::g_hat(int i, int s) const {
    const int b = best_design();
    if (i == b) throw std::invalid_argument("g_hat is defined for suboptimal designs only");
    const Vec gb = grad_mu(b);
    const Vec gi = grad_mu(i);
    const int off = layout_->theta_offset(s);
    const int dim = layout_->streams[s].family.param_dim();
    Vec diff(dim);
    for (int k = 0; k < dim; ++k) diff[k] = gb[off + k] - gi[off + k];
    return std::max(0.0, quad_form(diff, sigma_d(s)));
}

int EstimatorBank::best_design() const {
    int best = 0;
    double best_mu = mu_hat(0);
    for (int i = 1; i < static_cast<int>(designs_.size()); ++i) {
        const double mu = mu_hat(i);
        if (mu > best_mu) {
            best = i;
            best_mu = mu;
        }
    }
    return best;
}

}  // namespace sba
