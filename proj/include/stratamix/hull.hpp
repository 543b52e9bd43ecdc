#ifndef stratamix_hull_hpp_
#define stratamix_hull_hpp_

#include <vector>

#include <Eigen/Dense>

namespace stratamix {

// Oriented hull hyperplane: normal is unit length and points outward, so
// every hull point satisfies normal . x <= offset (within tolerance).
struct Hyperplane {
    Eigen::VectorXd normal;
    double offset = 0.0;

    double signed_distance(const Eigen::VectorXd &p) const { return normal.dot(p) - offset; }
};

struct HullFacets {
    // Distinct geometric hyperplanes (coplanar simplicial facets merged),
    // sorted canonically for deterministic enumeration downstream.
    std::vector<Hyperplane> planes;
    // Indices of the input points that are hull vertices.
    std::vector<int> vertex_indices;
};

// Convex hull facet hyperplanes in dimension 1..4. Dimension 1 returns the
// two interval endpoints as degenerate facets. Points must span the space;
// a degenerate span raises an internal error.
HullFacets hull_facets(const std::vector<Eigen::VectorXd> &points);

// 2D convex hull polygon, counter-clockwise, strictly convex corners only.
std::vector<Eigen::Vector2d> convex_hull_polygon(const std::vector<Eigen::Vector2d> &points);

} // namespace stratamix

#endif
