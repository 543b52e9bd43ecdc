#ifndef stratamix_strata_plan_hpp_
#define stratamix_strata_plan_hpp_

#include <vector>

#include <Eigen/Dense>

#include "stratamix/mix_ratio.hpp"

namespace stratamix {

// Per-layer optimization result: how many constant-mixture strata the layer
// uses, which base mixture each stratum is printed with, in which order,
// and how much material each stratum deposits.
struct StrataPlan {
    int strata_count = 0;                // S, 1 <= S <= K
    std::vector<MixRatio> base_mixtures; // L^1..L^S
    std::vector<int> order;              // print order, 0-based indices into base_mixtures
    Eigen::VectorXd per_stratum_volume;  // mm^3, aligned with base_mixtures

    // True when the optimizer fell back to one pure filament per stratum.
    bool unit_vector_fallback = false;
};

} // namespace stratamix

#endif
