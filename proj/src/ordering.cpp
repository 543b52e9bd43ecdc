#include "stratamix/ordering.hpp"

#include <algorithm>
#include <random>

#include "stratamix/errors.hpp"

namespace stratamix {

StratumStack StratumStack::build(std::vector<Entry> entries)
{
    StratumStack stack;
    stack.entries = std::move(entries);
    stack.boundaries.resize(stack.entries.size() + 1);
    stack.boundaries[0] = 0.0;
    for (std::size_t i = 0; i < stack.entries.size(); ++i) {
        if (stack.entries[i].height < 0.0)
            throw Error("stack: negative entry height");
        stack.boundaries[i + 1] = stack.boundaries[i] + stack.entries[i].height;
    }
    return stack;
}

double stack_distance(const StratumStack &stack, int a, int b)
{
    if (a < 0 || b <= a || b >= static_cast<int>(stack.entries.size()))
        throw Error("stack_distance: entry b must come after entry a");
    const double top_a = stack.boundaries[a + 1];
    const double bottom_b = stack.boundaries[b];
    return bottom_b - top_a;
}

OrderedStrata ordered_strata(const StrataPlan &plan)
{
    if (plan.per_stratum_volume.size() != plan.strata_count)
        throw Error("ordered_strata: plan is missing per-stratum volumes");
    OrderedStrata out;
    for (int idx : plan.order) {
        out.mixtures.push_back(plan.base_mixtures[idx]);
        out.volumes.push_back(plan.per_stratum_volume[idx]);
    }
    return out;
}

double ordering_score(const OrderedStrata &below, const OrderedStrata &above)
{
    double total = 0.0;
    for (double v : below.volumes)
        total += v;
    for (double v : above.volumes)
        total += v;

    std::vector<StratumStack::Entry> entries;
    for (std::size_t i = 0; i < below.mixtures.size(); ++i)
        entries.push_back({below.mixtures[i], total > 0.0 ? below.volumes[i] / total : 0.0});
    for (std::size_t i = 0; i < above.mixtures.size(); ++i)
        entries.push_back({above.mixtures[i], total > 0.0 ? above.volumes[i] / total : 0.0});
    const StratumStack stack = StratumStack::build(std::move(entries));

    const int nb = static_cast<int>(below.mixtures.size());
    const int na = static_cast<int>(above.mixtures.size());
    double score = 0.0;
    for (int j = 0; j < nb; ++j)
        for (int i = 0; i < na; ++i) {
            const double mix_dist = (below.mixtures[j].weights - above.mixtures[i].weights).norm();
            score += mix_dist / (1.0 + stack_distance(stack, j, nb + i));
        }
    return score;
}

void order_layers(PrintJob &job, std::uint32_t seed)
{
    for (const Layer &layer : job.layers)
        if (!layer.plan)
            throw Error("order_layers: layer " + std::to_string(layer.index) + " has no strata plan");
    if (job.layers.empty())
        return;

    // Hand-rolled Fisher-Yates so the result is identical across standard
    // library implementations.
    std::mt19937 rng(seed);
    StrataPlan &first = *job.layers.front().plan;
    std::vector<int> order(first.strata_count);
    for (int i = 0; i < first.strata_count; ++i)
        order[i] = i;
    for (int i = first.strata_count - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint32_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    first.order = std::move(order);

    for (std::size_t l = 1; l < job.layers.size(); ++l) {
        const OrderedStrata below = ordered_strata(*job.layers[l - 1].plan);
        StrataPlan &plan = *job.layers[l].plan;

        std::vector<int> candidate(plan.strata_count);
        for (int i = 0; i < plan.strata_count; ++i)
            candidate[i] = i;

        std::vector<int> best_order;
        double best_score = 0.0;
        do {
            StrataPlan trial = plan;
            trial.order = candidate;
            const double score = ordering_score(below, ordered_strata(trial));
            // Strict improvement keeps the lexicographically smallest
            // permutation on ties (candidates come in lexicographic order).
            if (best_order.empty() || score > best_score) {
                best_score = score;
                best_order = candidate;
            }
        } while (std::next_permutation(candidate.begin(), candidate.end()));
        plan.order = std::move(best_order);
    }
}

} // namespace stratamix
