#ifndef stratamix_ordering_hpp_
#define stratamix_ordering_hpp_

#include <cstdint>
#include <vector>

#include "stratamix/mix_ratio.hpp"
#include "stratamix/strata_plan.hpp"
#include "stratamix/toolpath.hpp"

namespace stratamix {

// Imaginary stack of ordered base mixtures where deposited volume is used
// as height; distances in it drive the ordering objective.
struct StratumStack {
    struct Entry {
        MixRatio mixture;
        double height = 0.0; // normalized volume
    };
    std::vector<Entry> entries;
    std::vector<double> boundaries; // boundaries[i] = bottom of entry i, boundaries[n] = stack top

    static StratumStack build(std::vector<Entry> entries);
};

// Heights strictly between entries a and b (bottom of b minus top of a);
// zero when adjacent. Requires a < b.
double stack_distance(const StratumStack &stack, int a, int b);

// Strata of one layer in print order.
struct OrderedStrata {
    std::vector<MixRatio> mixtures;
    std::vector<double> volumes; // mm^3
};

OrderedStrata ordered_strata(const StrataPlan &plan);

// Interference score of printing `above` on top of `below`: the stack is
// both layers' strata in sequence, heights normalized by the combined
// volume, and every cross-layer pair contributes
// |L_below - L_above| / (1 + stack distance). Higher is better.
double ordering_score(const OrderedStrata &below, const OrderedStrata &above);

// Bottom-up sweep: the first layer gets a seeded random order, every next
// layer the score-maximizing permutation given the previous layer's order
// (ties resolved to the lexicographically smallest permutation).
void order_layers(PrintJob &job, std::uint32_t seed);

} // namespace stratamix

#endif
