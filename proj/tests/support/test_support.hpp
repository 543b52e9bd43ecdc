#ifndef stratamix_test_support_hpp_
#define stratamix_test_support_hpp_

// Test-only oracles and data generators. Everything here is implemented
// independently of the library code it cross-checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/mix_ratio.hpp"
#include "stratamix/strata_plan.hpp"
#include "stratamix/toolpath.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

inline double uniform(std::mt19937 &rng, double lo, double hi)
{
    return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
}

inline stratamix::MixRatio random_mix(std::mt19937 &rng, int k)
{
    Eigen::VectorXd w(k);
    for (int i = 0; i < k; ++i)
        w[i] = -std::log(std::max(1e-12, uniform(rng, 0.0, 1.0)));
    w /= w.sum();
    return stratamix::MixRatio(std::move(w));
}

// A straight resampled path whose vertex mixes follow a smooth blend of
// `bases` random base mixtures along the path, plus a small jitter. The
// intrinsic dimension of the mixes is at most bases-1 (plus jitter).
inline stratamix::Layer random_smooth_layer(std::mt19937 &rng, int k, int vertex_count, int bases,
                                            double jitter)
{
    std::vector<stratamix::MixRatio> base_mixes;
    for (int b = 0; b < bases; ++b)
        base_mixes.push_back(random_mix(rng, k));
    std::vector<double> freq(bases), phase(bases);
    for (int b = 0; b < bases; ++b) {
        freq[b] = uniform(rng, 1.5, 4.0);
        phase[b] = uniform(rng, 0.0, 6.28);
    }

    stratamix::Layer layer;
    layer.index = 0;
    layer.thickness = 0.3;
    layer.z_top = 0.3;
    stratamix::Toolpath tp;
    tp.track_width = 0.4;
    tp.closed = false;
    for (int i = 0; i < vertex_count; ++i) {
        const double t = vertex_count > 1 ? static_cast<double>(i) / (vertex_count - 1) : 0.0;
        stratamix::PathVertex v;
        v.position = Eigen::Vector3d(100.0 * t, 0.0, layer.z_top);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
        double wsum = 0.0;
        for (int b = 0; b < bases; ++b) {
            const double s = std::sin(freq[b] * t + phase[b]);
            const double w = 0.15 + s * s;
            c += w * base_mixes[b].weights;
            wsum += w;
        }
        c /= wsum;
        if (jitter > 0.0) {
            for (int a = 0; a < k; ++a)
                c[a] = std::max(0.0, c[a] + uniform(rng, -jitter, jitter));
            c /= c.sum();
        }
        v.mix = stratamix::MixRatio(std::move(c));
        tp.vertices.push_back(std::move(v));
    }
    layer.toolpaths.push_back(std::move(tp));
    return layer;
}

// Largest per-component deviation of sum_i alpha_i L^i from the vertex mix.
inline double max_conservation_dev(const stratamix::Layer &layer, const stratamix::StrataPlan &plan)
{
    double worst = 0.0;
    for (const stratamix::Toolpath &tp : layer.toolpaths)
        for (const stratamix::PathVertex &v : tp.vertices) {
            Eigen::VectorXd rebuilt = Eigen::VectorXd::Zero(v.mix.weights.size());
            for (int i = 0; i < plan.strata_count; ++i)
                rebuilt += v.alphas[i] * plan.base_mixtures[i].weights;
            worst = std::max(worst, (rebuilt - v.mix.weights).cwiseAbs().maxCoeff());
        }
    return worst;
}

// ---------------------------------------------------------------------------
// Independent eigenvalues of a symmetric 2x2 matrix [[a, b], [b, c]]
// ---------------------------------------------------------------------------

inline std::pair<double, double> eigenvalues_2x2(double a, double b, double c)
{
    const double mean = 0.5 * (a + c);
    const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return {mean + r, mean - r};
}

// ---------------------------------------------------------------------------
// Gift-wrapping convex hull (2D oracle)
// ---------------------------------------------------------------------------

// Hull vertex indices, counter-clockwise, collinear points skipped.
inline std::vector<int> gift_wrap_hull(const std::vector<Eigen::Vector2d> &pts)
{
    const int n = static_cast<int>(pts.size());
    if (n < 3)
        throw std::runtime_error("gift_wrap_hull: need at least 3 points");
    int start = 0;
    for (int i = 1; i < n; ++i)
        if (pts[i].x() < pts[start].x() ||
            (pts[i].x() == pts[start].x() && pts[i].y() < pts[start].y()))
            start = i;

    std::vector<int> hull;
    int current = start;
    do {
        hull.push_back(current);
        int candidate = (current + 1) % n;
        for (int i = 0; i < n; ++i) {
            if (i == current)
                continue;
            const Eigen::Vector2d a = pts[candidate] - pts[current];
            const Eigen::Vector2d b = pts[i] - pts[current];
            const double cross = a.x() * b.y() - a.y() * b.x();
            // Pick the most clockwise point; on ties keep the farthest.
            if (cross < -1e-12 || (std::abs(cross) <= 1e-12 && b.squaredNorm() > a.squaredNorm()))
                candidate = i;
        }
        current = candidate;
        if (static_cast<int>(hull.size()) > n)
            throw std::runtime_error("gift_wrap_hull: did not terminate");
    } while (current != start);
    return hull;
}

// ---------------------------------------------------------------------------
// Brute-force minimal enclosing simplex (test oracle, D <= 2, <= 60 points)
// ---------------------------------------------------------------------------

struct OracleSimplex {
    std::vector<Eigen::VectorXd> vertices; // sorted lexicographically
    double volume = 0.0;
};

using VertexFeasible = std::function<bool(const Eigen::VectorXd &)>;

inline std::optional<OracleSimplex>
brute_force_min_simplex(const std::vector<Eigen::VectorXd> &points, const VertexFeasible &feasible)
{
    if (points.empty())
        throw std::runtime_error("oracle: no points");
    const int d = static_cast<int>(points[0].size());
    if (d > 2 || points.size() > 60)
        throw std::runtime_error("oracle: refuses inputs beyond D=2 or 60 points");

    auto lex_less = [](const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (a[i] != b[i])
                return a[i] < b[i];
        return false;
    };

    if (d == 1) {
        double lo = points[0][0], hi = points[0][0];
        for (const Eigen::VectorXd &p : points) {
            lo = std::min(lo, p[0]);
            hi = std::max(hi, p[0]);
        }
        OracleSimplex s;
        s.vertices = {Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
        s.volume = hi - lo;
        if (feasible && (!feasible(s.vertices[0]) || !feasible(s.vertices[1])))
            return std::nullopt;
        return s;
    }

    // Edge lines of the hull polygon, outward orientation.
    std::vector<Eigen::Vector2d> pts2;
    for (const Eigen::VectorXd &p : points)
        pts2.emplace_back(p[0], p[1]);
    const std::vector<int> hull = gift_wrap_hull(pts2);
    const int h = static_cast<int>(hull.size());
    std::vector<Eigen::Vector2d> normals;
    std::vector<double> offsets;
    for (int i = 0; i < h; ++i) {
        const Eigen::Vector2d a = pts2[hull[i]];
        const Eigen::Vector2d b = pts2[hull[(i + 1) % h]];
        const Eigen::Vector2d dir = (b - a).normalized();
        Eigen::Vector2d nrm(dir.y(), -dir.x()); // outward for a CCW polygon
        normals.push_back(nrm);
        offsets.push_back(nrm.dot(a));
    }

    std::optional<OracleSimplex> best;
    for (int i = 0; i < h; ++i)
        for (int j = i + 1; j < h; ++j)
            for (int k = j + 1; k < h; ++k) {
                const int tri[3] = {i, j, k};
                std::vector<Eigen::VectorXd> verts;
                bool ok = true;
                for (int leave = 0; leave < 3 && ok; ++leave) {
                    const int e0 = tri[(leave + 1) % 3];
                    const int e1 = tri[(leave + 2) % 3];
                    const double det =
                        normals[e0].x() * normals[e1].y() - normals[e0].y() * normals[e1].x();
                    if (std::abs(det) < 1e-10) {
                        ok = false;
                        break;
                    }
                    Eigen::VectorXd v(2);
                    v[0] = (offsets[e0] * normals[e1].y() - offsets[e1] * normals[e0].y()) / det;
                    v[1] = (normals[e0].x() * offsets[e1] - normals[e1].x() * offsets[e0]) / det;
                    verts.push_back(v);
                }
                if (!ok)
                    continue;

                // Containment of every input point via sign tests against the
                // triangle's own edges.
                const double area2 = (verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1]) -
                                     (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]);
                if (std::abs(area2) < 1e-14)
                    continue;
                const double orient = area2 > 0.0 ? 1.0 : -1.0;
                const double span = std::sqrt(std::abs(area2));
                for (const Eigen::Vector2d &p : pts2) {
                    for (int e = 0; e < 3 && ok; ++e) {
                        const Eigen::VectorXd &a = verts[e];
                        const Eigen::VectorXd &b = verts[(e + 1) % 3];
                        const double side = ((b[0] - a[0]) * (p.y() - a[1]) -
                                             (b[1] - a[1]) * (p.x() - a[0])) *
                                            orient;
                        if (side < -1e-7 * std::max(1.0, span))
                            ok = false;
                    }
                    if (!ok)
                        break;
                }
                if (!ok)
                    continue;

                if (feasible)
                    for (const Eigen::VectorXd &v : verts)
                        if (!feasible(v)) {
                            ok = false;
                            break;
                        }
                if (!ok)
                    continue;

                OracleSimplex cand;
                cand.vertices = verts;
                std::sort(cand.vertices.begin(), cand.vertices.end(), lex_less);
                cand.volume = 0.5 * std::abs(area2);
                if (!best || cand.volume < best->volume - 1e-12)
                    best = std::move(cand);
            }
    return best;
}

// Feasibility of the mixture a 2D embedded point maps back to, written out
// directly (independent of the library's unembed).
inline VertexFeasible embedded_k3_feasible(double lambda)
{
    return [lambda](const Eigen::VectorXd &v) {
        const double third = 1.0 - v[0] - v[1];
        return v[0] >= -lambda && v[1] >= -lambda && third >= -lambda;
    };
}

// ---------------------------------------------------------------------------
// Independent ordering score
// ---------------------------------------------------------------------------

// Direct transcription of the objective: heights are volumes normalized by
// the combined total, the stack is below-then-above, and each cross pair
// contributes |Lb - La| / (1 + gap between the strata in the stack).
inline double oracle_ordering_score(const std::vector<Eigen::VectorXd> &below_mixes,
                                    const std::vector<double> &below_vols,
                                    const std::vector<Eigen::VectorXd> &above_mixes,
                                    const std::vector<double> &above_vols)
{
    double total = 0.0;
    for (double v : below_vols)
        total += v;
    for (double v : above_vols)
        total += v;

    std::vector<double> heights;
    for (double v : below_vols)
        heights.push_back(total > 0.0 ? v / total : 0.0);
    for (double v : above_vols)
        heights.push_back(total > 0.0 ? v / total : 0.0);
    std::vector<double> bottom(heights.size() + 1, 0.0);
    for (std::size_t i = 0; i < heights.size(); ++i)
        bottom[i + 1] = bottom[i] + heights[i];

    const std::size_t nb = below_mixes.size();
    double score = 0.0;
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t i = 0; i < above_mixes.size(); ++i) {
            const double gap = bottom[nb + i] - (bottom[j] + heights[j]);
            score += (below_mixes[j] - above_mixes[i]).norm() / (1.0 + gap);
        }
    return score;
}

} // namespace testsupport

#endif
