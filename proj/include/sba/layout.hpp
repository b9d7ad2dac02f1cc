#pragma once
#include <stdexcept>
#include <vector>

#include "sba/families.hpp"

namespace sba {

// Partitioned input streams plus the per-stage budgets. Streams in the same
// partition share one data-collection budget U_j; a singleton partition models
// given streaming data whose batch size per stage is U_j / c_s.
struct StreamLayout {
    struct Stream {
        ParametricFamily family;
        Vec theta_true;   // generating parameter (unknown to the procedures)
        double cost = 1.0;
        int partition = 0;
        bool given = false;  // batched streaming data, not actively collected
    };

    std::vector<Stream> streams;
    std::vector<double> partition_budget;  // U_j
    std::vector<double> sim_cost;          // d_i, one per design
    double sim_budget = 0.0;               // M

    int stream_count() const { return static_cast<int>(streams.size()); }
    int partition_count() const { return static_cast<int>(partition_budget.size()); }
    int design_count() const { return static_cast<int>(sim_cost.size()); }

    bool singleton_partition(int j) const {
        int n = 0;
        for (const auto& s : streams) n += (s.partition == j);
        return n == 1;
    }

    std::vector<int> partition_members(int j) const {
        std::vector<int> out;
        for (int s = 0; s < stream_count(); ++s)
            if (streams[s].partition == j) out.push_back(s);
        return out;
    }

    // Offset of stream s's parameter block in the concatenated theta vector.
    int theta_offset(int s) const {
        int off = 0;
        for (int k = 0; k < s; ++k) off += streams[k].family.param_dim();
        return off;
    }
    int theta_dim() const { return theta_offset(stream_count()); }

    void validate() const;
};

}  // namespace sba
