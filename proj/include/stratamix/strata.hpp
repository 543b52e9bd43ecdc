#ifndef stratamix_strata_hpp_
#define stratamix_strata_hpp_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/hull.hpp"
#include "stratamix/mix_ratio.hpp"
#include "stratamix/strata_plan.hpp"
#include "stratamix/toolpath.hpp"

namespace stratamix {

struct OptimizerConfig {
    double epsilon = 1e-4;      // PCA variance threshold
    double lambda = 1e-2;       // barycentric feasibility tolerance
    double singular_tol = 1e-8; // |det| threshold for hyperplane intersections (unit normals)
    // Maximum hyperplane combinations examined per dimension; 0 means
    // unlimited. When the cap is hit the search moves to the next dimension.
    std::uint64_t enumeration_cap = 0;

    void validate() const; // throws InputError
};

// Mixing ratios embedded into N = K-1 dimensions by dropping the last
// coordinate: the K-th filament maps to the origin, the others to unit
// vectors.
Eigen::VectorXd embed(const MixRatio &c);

// Inverse of embed. The result may violate positivity; feasibility is
// checked separately against lambda.
MixRatio unembed(const Eigen::VectorXd &p);

struct EmbeddedPointSet {
    std::vector<Eigen::VectorXd> points; // N-dimensional
    std::size_t source_count = 0;        // vertices the points came from
};

// Gathers every vertex mix of the layer. Throws when the layer was not
// resampled (some vertex has no mix).
EmbeddedPointSet embed_layer(const Layer &layer);

// Principal axes of an embedded point set, kept in full; intrinsic_dim
// marks how many carry variance above epsilon.
struct PcaBasis {
    Eigen::VectorXd mean;      // N
    Eigen::MatrixXd axes;      // N x N, orthonormal columns, descending variance
    Eigen::VectorXd variances; // N, descending
    int intrinsic_dim = 0;     // D
    double epsilon = 0.0;

    // Coordinates along the first `dim` axes.
    Eigen::VectorXd project(const Eigen::VectorXd &embedded, int dim) const;
};

PcaBasis pca_reduce(const EmbeddedPointSet &points, const OptimizerConfig &cfg);

// Affine map from reduced coordinates back to embedded space and on to a
// mixture candidate.
struct MixtureLift {
    Eigen::VectorXd mean; // N
    Eigen::MatrixXd axes; // N x dim

    Eigen::VectorXd to_embedded(const Eigen::VectorXd &reduced) const { return mean + axes * reduced; }
    MixRatio to_mixture_candidate(const Eigen::VectorXd &reduced) const { return unembed(to_embedded(reduced)); }

    static MixtureLift identity(int dim);
    static MixtureLift from_pca(const PcaBasis &basis, int dim);
};

struct Simplex {
    std::vector<Eigen::VectorXd> vertices; // D+1 points, lexicographically sorted
    double volume = 0.0;
};

// Barycentric coordinates of p with respect to a non-degenerate simplex;
// the coefficients sum to one exactly.
Eigen::VectorXd barycentric_coords(const Eigen::VectorXd &p, const Simplex &simplex);

// Approximate minimal-volume enclosing simplex: enumerates all (D+1)-subsets
// of the hull facet hyperplanes, rejects near-singular or unbounded
// combinations and candidates whose vertices map to infeasible mixtures
// (beyond lambda), and returns the smallest surviving simplex. Absence of a
// solution is a value, not an error. Ties are broken by the
// lexicographically smallest sorted vertex list.
std::optional<Simplex> min_enclosing_simplex(const std::vector<Eigen::VectorXd> &points,
                                             const MixtureLift &lift, const OptimizerConfig &cfg);

// Full per-layer pipeline: embed, PCA, enclosing-simplex search with
// dimension increase on failure, unit-vector fallback. Writes the thickness
// coefficients into the layer's vertices and returns the plan (print order
// initialized to identity; see the ordering module).
StrataPlan optimize_layer(Layer &layer, const OptimizerConfig &cfg);

// The trivial plan: one stratum per pure filament, alphas = vertex mixes.
// Used as the optimizer fallback and as the optimization-off baseline.
StrataPlan unit_vector_plan(Layer &layer, int filament_count);

// Writes per-layer plans as a "strata-plans/1" JSON report.
void save_plans(const PrintJob &job, const std::string &path);

} // namespace stratamix

#endif
