#ifndef stratamix_mix_ratio_hpp_
#define stratamix_mix_ratio_hpp_

#include <Eigen/Dense>

#include "stratamix/errors.hpp"

namespace stratamix {

// Barycentric vector of K filament fractions: non-negative weights summing
// to one. An empty weight vector means "not sampled yet".
struct MixRatio {
    Eigen::VectorXd weights;

    MixRatio() = default;
    explicit MixRatio(Eigen::VectorXd w) : weights(std::move(w)) {}

    int filament_count() const { return static_cast<int>(weights.size()); }
    bool empty() const { return weights.size() == 0; }

    bool is_valid(double tol = 1e-9) const
    {
        if (weights.size() < 2)
            return false;
        if (weights.minCoeff() < -tol)
            return false;
        return std::abs(weights.sum() - 1.0) <= tol;
    }

    // Clamps negatives to zero and rescales to unit sum.
    void renormalize()
    {
        weights = weights.cwiseMax(0.0);
        const double s = weights.sum();
        if (s <= 0.0)
            throw Error("MixRatio::renormalize: weight sum is not positive");
        weights /= s;
    }
};

inline MixRatio lerp(const MixRatio &a, const MixRatio &b, double t)
{
    return MixRatio((1.0 - t) * a.weights + t * b.weights);
}

// Pure filament i out of k.
inline MixRatio unit_mix(int i, int k)
{
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    w[i] = 1.0;
    return MixRatio(std::move(w));
}

} // namespace stratamix

#endif
