#include "stratamix/hull.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

struct Facet {
    std::vector<int> verts; // d point indices
    Eigen::VectorXd normal; // unit, outward
    double offset = 0.0;
    bool alive = true;
};

// Unit normal of the hyperplane through d points, oriented away from
// `interior`. Returns false when the points are affinely dependent.
bool facet_plane(const std::vector<Eigen::VectorXd> &points, const std::vector<int> &verts,
                 const Eigen::VectorXd &interior, Eigen::VectorXd &normal, double &offset)
{
    const int d = static_cast<int>(points[verts[0]].size());
    Eigen::MatrixXd edges(d - 1, d);
    for (int i = 1; i < d; ++i)
        edges.row(i - 1) = (points[verts[i]] - points[verts[0]]).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(edges);
    lu.setThreshold(1e-10);
    if (lu.dimensionOfKernel() != 1)
        return false;
    normal = lu.kernel().col(0);
    normal.normalize();
    offset = normal.dot(points[verts[0]]);
    if (normal.dot(interior) > offset) {
        normal = -normal;
        offset = -offset;
    }
    return true;
}

std::vector<int> initial_simplex(const std::vector<Eigen::VectorXd> &points, double scale)
{
    const int d = static_cast<int>(points[0].size());
    const int n = static_cast<int>(points.size());

    // Deterministic seed: lexicographically smallest point.
    int first = 0;
    for (int i = 1; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            if (points[i][a] < points[first][a]) {
                first = i;
                break;
            }
            if (points[i][a] > points[first][a])
                break;
        }
    }

    std::vector<int> chosen{first};
    Eigen::MatrixXd dirs(d, 0);
    for (int k = 0; k < d; ++k) {
        // Orthonormal basis of the directions chosen so far.
        Eigen::MatrixXd q;
        if (k > 0) {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
            q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
        }
        int best = -1;
        double best_res = scale * 1e-9;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd delta = points[i] - points[first];
            if (k > 0)
                delta -= q * (q.transpose() * delta);
            const double res = delta.norm();
            if (res > best_res) {
                best_res = res;
                best = i;
            }
        }
        if (best < 0)
            throw Error("hull: input points do not span the requested dimension");
        chosen.push_back(best);
        dirs.conservativeResize(d, k + 1);
        dirs.col(k) = points[best] - points[first];
    }
    return chosen;
}

} // namespace

HullFacets hull_facets(const std::vector<Eigen::VectorXd> &points)
{
    if (points.empty())
        throw Error("hull: no points");
    const int d = static_cast<int>(points[0].size());
    const int n = static_cast<int>(points.size());
    if (d < 1 || d > 4)
        throw Error("hull: dimension must be in [1,4]");

    HullFacets out;

    if (d == 1) {
        int lo = 0, hi = 0;
        for (int i = 1; i < n; ++i) {
            if (points[i][0] < points[lo][0])
                lo = i;
            if (points[i][0] > points[hi][0])
                hi = i;
        }
        Hyperplane below, above;
        below.normal = Eigen::VectorXd::Constant(1, -1.0);
        below.offset = -points[lo][0];
        above.normal = Eigen::VectorXd::Constant(1, 1.0);
        above.offset = points[hi][0];
        out.planes = {below, above};
        out.vertex_indices = {lo, hi};
        if (lo != hi)
            std::sort(out.vertex_indices.begin(), out.vertex_indices.end());
        else
            out.vertex_indices = {lo};
        return out;
    }

    double scale = 1.0;
    for (const Eigen::VectorXd &p : points)
        scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double eps_visible = 1e-12 * scale;

    const std::vector<int> seed = initial_simplex(points, scale);
    Eigen::VectorXd interior = Eigen::VectorXd::Zero(d);
    for (int idx : seed)
        interior += points[idx];
    interior /= static_cast<double>(seed.size());

    std::vector<Facet> facets;
    for (int omit = 0; omit <= d; ++omit) {
        Facet f;
        for (int i = 0; i <= d; ++i)
            if (i != omit)
                f.verts.push_back(seed[i]);
        if (!facet_plane(points, f.verts, interior, f.normal, f.offset))
            throw Error("hull: degenerate initial simplex");
        facets.push_back(std::move(f));
    }

    std::set<int> in_seed(seed.begin(), seed.end());
    for (int p = 0; p < n; ++p) {
        if (in_seed.count(p))
            continue;
        std::vector<int> visible;
        for (int f = 0; f < static_cast<int>(facets.size()); ++f)
            if (facets[f].alive && facets[f].normal.dot(points[p]) - facets[f].offset > eps_visible)
                visible.push_back(f);
        if (visible.empty())
            continue;

        // Horizon ridges: ridges of exactly one visible facet.
        std::map<std::vector<int>, int> ridge_count;
        for (int f : visible) {
            const std::vector<int> &verts = facets[f].verts;
            for (int omit = 0; omit < d; ++omit) {
                std::vector<int> ridge;
                for (int i = 0; i < d; ++i)
                    if (i != omit)
                        ridge.push_back(verts[i]);
                std::sort(ridge.begin(), ridge.end());
                ridge_count[ridge] += 1;
            }
        }
        for (int f : visible)
            facets[f].alive = false;
        for (const auto &[ridge, count] : ridge_count) {
            if (count != 1)
                continue;
            Facet f;
            f.verts = ridge;
            f.verts.push_back(p);
            if (!facet_plane(points, f.verts, interior, f.normal, f.offset))
                throw Error("hull: degenerate facet during insertion");
            facets.push_back(std::move(f));
        }
    }

    // Gather alive facets; merge coplanar ones into single hyperplanes.
    std::set<int> vertex_set;
    std::vector<Hyperplane> planes;
    for (const Facet &f : facets) {
        if (!f.alive)
            continue;
        vertex_set.insert(f.verts.begin(), f.verts.end());
        bool merged = false;
        for (const Hyperplane &h : planes) {
            if (h.normal.dot(f.normal) > 1.0 - 1e-9 && std::abs(h.offset - f.offset) <= 1e-9 * scale) {
                merged = true;
                break;
            }
        }
        if (!merged)
            planes.push_back(Hyperplane{f.normal, f.offset});
    }
    std::sort(planes.begin(), planes.end(), [](const Hyperplane &a, const Hyperplane &b) {
        for (Eigen::Index i = 0; i < a.normal.size(); ++i) {
            if (a.normal[i] != b.normal[i])
                return a.normal[i] < b.normal[i];
        }
        return a.offset < b.offset;
    });
    out.planes = std::move(planes);
    out.vertex_indices.assign(vertex_set.begin(), vertex_set.end());
    return out;
}

std::vector<Eigen::Vector2d> convex_hull_polygon(const std::vector<Eigen::Vector2d> &points)
{
    std::vector<Eigen::Vector2d> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d &a, const Eigen::Vector2d &b) {
        return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d &a, const Eigen::Vector2d &b) {
                              return (a - b).norm() < 1e-12;
                          }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n < 3)
        return pts;

    auto cross = [](const Eigen::Vector2d &o, const Eigen::Vector2d &a, const Eigen::Vector2d &b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };

    std::vector<Eigen::Vector2d> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) { // lower chain
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
            --k;
        hull[k++] = pts[i];
    }
    for (int i = n - 2, lower = k + 1; i >= 0; --i) { // upper chain
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace stratamix
