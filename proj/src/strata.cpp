#include "stratamix/strata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"

namespace stratamix {

using nlohmann::json;

void OptimizerConfig::validate() const
{
    if (epsilon <= 0.0 || lambda <= 0.0 || singular_tol <= 0.0)
        throw InputError("optimizer: epsilon, lambda and singular_tol must be positive");
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

Eigen::VectorXd embed(const MixRatio &c)
{
    return c.weights.head(c.weights.size() - 1);
}

MixRatio unembed(const Eigen::VectorXd &p)
{
    Eigen::VectorXd w(p.size() + 1);
    w.head(p.size()) = p;
    w[p.size()] = 1.0 - p.sum();
    return MixRatio(std::move(w));
}

EmbeddedPointSet embed_layer(const Layer &layer)
{
    EmbeddedPointSet set;
    for (const Toolpath &tp : layer.toolpaths) {
        for (const PathVertex &v : tp.vertices) {
            if (v.mix.empty())
                throw Error("layer " + std::to_string(layer.index) + " is not resampled: vertex without mix");
            set.points.push_back(embed(v.mix));
        }
    }
    set.source_count = set.points.size();
    if (set.points.empty())
        throw Error("layer " + std::to_string(layer.index) + " has no vertices");
    return set;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

Eigen::VectorXd PcaBasis::project(const Eigen::VectorXd &embedded, int dim) const
{
    return axes.leftCols(dim).transpose() * (embedded - mean);
}

PcaBasis pca_reduce(const EmbeddedPointSet &set, const OptimizerConfig &cfg)
{
    cfg.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(set.points.size());
    const Eigen::Index dim = set.points[0].size();

    PcaBasis basis;
    basis.epsilon = cfg.epsilon;
    basis.mean = Eigen::VectorXd::Zero(dim);
    for (const Eigen::VectorXd &p : set.points)
        basis.mean += p;
    basis.mean /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const Eigen::VectorXd &p : set.points) {
        const Eigen::VectorXd d = p - basis.mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    basis.axes.resize(dim, dim);
    basis.variances.resize(dim);
    // Eigen reports ascending eigenvalues; store them descending.
    for (Eigen::Index i = 0; i < dim; ++i) {
        basis.variances[i] = std::max(0.0, eig.eigenvalues()[dim - 1 - i]);
        basis.axes.col(i) = eig.eigenvectors().col(dim - 1 - i);
        // Canonical sign: largest-magnitude component positive.
        Eigen::Index imax;
        basis.axes.col(i).cwiseAbs().maxCoeff(&imax);
        if (basis.axes(imax, i) < 0.0)
            basis.axes.col(i) = -basis.axes.col(i);
    }
    basis.intrinsic_dim = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
        if (basis.variances[i] > cfg.epsilon)
            ++basis.intrinsic_dim;
    return basis;
}

MixtureLift MixtureLift::identity(int dim)
{
    MixtureLift lift;
    lift.mean = Eigen::VectorXd::Zero(dim);
    lift.axes = Eigen::MatrixXd::Identity(dim, dim);
    return lift;
}

MixtureLift MixtureLift::from_pca(const PcaBasis &basis, int dim)
{
    MixtureLift lift;
    lift.mean = basis.mean;
    lift.axes = basis.axes.leftCols(dim);
    return lift;
}

// ---------------------------------------------------------------------------
// Barycentric coordinates
// ---------------------------------------------------------------------------

Eigen::VectorXd barycentric_coords(const Eigen::VectorXd &p, const Simplex &simplex)
{
    const int s = static_cast<int>(simplex.vertices.size());
    const int d = s - 1;
    Eigen::MatrixXd basis(d, d);
    for (int i = 0; i < d; ++i)
        basis.col(i) = simplex.vertices[i] - simplex.vertices[d];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (!lu.isInvertible())
        throw Error("barycentric_coords: degenerate simplex");
    Eigen::VectorXd head = lu.solve(p - simplex.vertices[d]);
    Eigen::VectorXd alpha(s);
    alpha.head(d) = head;
    alpha[d] = 1.0 - head.sum(); // sum constraint holds exactly
    return alpha;
}

// ---------------------------------------------------------------------------
// Minimal-volume enclosing simplex
// ---------------------------------------------------------------------------

namespace {

double simplex_volume(const std::vector<Eigen::VectorXd> &vertices)
{
    const int d = static_cast<int>(vertices.size()) - 1;
    Eigen::MatrixXd edges(d, d);
    for (int i = 0; i < d; ++i)
        edges.col(i) = vertices[i + 1] - vertices[0];
    double factorial = 1.0;
    for (int i = 2; i <= d; ++i)
        factorial *= i;
    return std::abs(edges.determinant()) / factorial;
}

bool lex_less(const Eigen::VectorXd &a, const Eigen::VectorXd &b)
{
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != b[i])
            return a[i] < b[i];
    }
    return false;
}

bool lex_less_vertex_list(const std::vector<Eigen::VectorXd> &a, const std::vector<Eigen::VectorXd> &b)
{
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (lex_less(a[i], b[i]))
            return true;
        if (lex_less(b[i], a[i]))
            return false;
    }
    return false;
}

bool mixture_feasible(const MixRatio &m, double lambda)
{
    return m.weights.minCoeff() >= -lambda && std::abs(m.weights.sum() - 1.0) <= lambda;
}

} // namespace

std::optional<Simplex> min_enclosing_simplex(const std::vector<Eigen::VectorXd> &points,
                                             const MixtureLift &lift, const OptimizerConfig &cfg)
{
    cfg.validate();
    const int d = static_cast<int>(points[0].size());
    const HullFacets hull = hull_facets(points);
    const int m = static_cast<int>(hull.planes.size());
    if (m < d + 1)
        return std::nullopt;

    double scale = 1.0;
    for (const Eigen::VectorXd &p : points)
        scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double bounded_tol = 1e-9 * scale;
    const double enclose_tol = 1e-7;

    std::vector<Eigen::VectorXd> hull_points;
    hull_points.reserve(hull.vertex_indices.size());
    for (int idx : hull.vertex_indices)
        hull_points.push_back(points[idx]);

    std::optional<Simplex> best;
    std::uint64_t examined = 0;

    // Odometer over all (d+1)-subsets of hyperplanes, lexicographic.
    std::vector<int> subset(d + 1);
    for (int i = 0; i <= d; ++i)
        subset[i] = i;

    Eigen::MatrixXd system(d, d);
    Eigen::VectorXd rhs(d);
    std::vector<Eigen::VectorXd> vertices(d + 1);

    while (true) {
        ++examined;
        if (cfg.enumeration_cap != 0 && examined > cfg.enumeration_cap)
            return std::nullopt;

        bool ok = true;
        // Vertex k is the intersection of all subset planes but plane k.
        for (int k = 0; k <= d && ok; ++k) {
            int r = 0;
            for (int j = 0; j <= d; ++j) {
                if (j == k)
                    continue;
                system.row(r) = hull.planes[subset[j]].normal.transpose();
                rhs[r] = hull.planes[subset[j]].offset;
                ++r;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
            if (std::abs(lu.determinant()) < cfg.singular_tol) {
                ok = false;
                break;
            }
            vertices[k] = lu.solve(rhs);
            // The vertex must stay on the hull side of the left-out plane,
            // otherwise the combination does not bound a finite volume.
            if (hull.planes[subset[k]].signed_distance(vertices[k]) > bounded_tol)
                ok = false;
        }

        if (ok) {
            Simplex candidate;
            candidate.vertices = vertices;
            std::sort(candidate.vertices.begin(), candidate.vertices.end(), lex_less);
            candidate.volume = simplex_volume(candidate.vertices);
            if (!std::isfinite(candidate.volume) || candidate.volume <= 0.0)
                ok = false;

            // All hull vertices must be enclosed.
            if (ok) {
                Eigen::MatrixXd basis(d, d);
                for (int i = 0; i < d; ++i)
                    basis.col(i) = candidate.vertices[i] - candidate.vertices[d];
                Eigen::PartialPivLU<Eigen::MatrixXd> blu(basis);
                for (const Eigen::VectorXd &hp : hull_points) {
                    Eigen::VectorXd head = blu.solve(hp - candidate.vertices[d]);
                    if (head.minCoeff() < -enclose_tol || head.sum() > 1.0 + enclose_tol) {
                        ok = false;
                        break;
                    }
                }
            }

            // Vertices must map back to feasible mixtures.
            if (ok) {
                for (const Eigen::VectorXd &v : candidate.vertices) {
                    if (!mixture_feasible(lift.to_mixture_candidate(v), cfg.lambda)) {
                        ok = false;
                        break;
                    }
                }
            }

            if (ok) {
                if (!best) {
                    best = std::move(candidate);
                } else {
                    const double tie = 1e-12 * std::max(1.0, best->volume);
                    if (candidate.volume < best->volume - tie ||
                        (std::abs(candidate.volume - best->volume) <= tie &&
                         lex_less_vertex_list(candidate.vertices, best->vertices)))
                        best = std::move(candidate);
                }
            }
        }

        // Advance the combination.
        int pos = d;
        while (pos >= 0 && subset[pos] == m - (d + 1) + pos)
            --pos;
        if (pos < 0)
            break;
        ++subset[pos];
        for (int j = pos + 1; j <= d; ++j)
            subset[j] = subset[j - 1] + 1;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Per-layer optimization
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd plan_volumes(const Layer &layer, int strata_count)
{
    Eigen::VectorXd volumes = Eigen::VectorXd::Zero(strata_count);
    for (const Toolpath &tp : layer.toolpaths)
        for (int s = 0; s < tp.segment_count(); ++s) {
            const auto [i, j] = tp.segment(s);
            for (int k = 0; k < strata_count; ++k)
                volumes[k] += segment_volume(tp.vertices[i], tp.vertices[j], k, tp.track_width, layer.thickness);
        }
    return volumes;
}

std::vector<int> identity_order(int strata_count)
{
    std::vector<int> order(strata_count);
    for (int i = 0; i < strata_count; ++i)
        order[i] = i;
    return order;
}

// Least-squares thickness coefficients against the (possibly clamped) base
// mixtures, with the unit-sum constraint eliminated so it holds exactly.
struct AlphaSolver {
    Eigen::MatrixXd basis; // N x (S-1): embedded mixtures minus the last one
    Eigen::VectorXd last;  // embedded last mixture
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    int strata_count;

    explicit AlphaSolver(const std::vector<MixRatio> &mixtures)
        : strata_count(static_cast<int>(mixtures.size()))
    {
        last = embed(mixtures.back());
        basis.resize(last.size(), strata_count - 1);
        for (int i = 0; i + 1 < strata_count; ++i)
            basis.col(i) = embed(mixtures[i]) - last;
        qr.compute(basis);
    }

    Eigen::VectorXd solve(const MixRatio &c) const
    {
        Eigen::VectorXd alpha(strata_count);
        alpha.head(strata_count - 1) = qr.solve(embed(c) - last);
        alpha[strata_count - 1] = 1.0 - alpha.head(strata_count - 1).sum();
        // Clamp to [0,1] and renormalize.
        alpha = alpha.cwiseMax(0.0).cwiseMin(1.0);
        alpha /= alpha.sum();
        return alpha;
    }
};

void assign_alphas(Layer &layer, const AlphaSolver &solver)
{
    for (Toolpath &tp : layer.toolpaths)
        for (PathVertex &v : tp.vertices)
            v.alphas = solver.solve(v.mix);
}

} // namespace

StrataPlan unit_vector_plan(Layer &layer, int filament_count)
{
    StrataPlan plan;
    plan.strata_count = filament_count;
    plan.unit_vector_fallback = true;
    for (int i = 0; i < filament_count; ++i)
        plan.base_mixtures.push_back(unit_mix(i, filament_count));
    for (Toolpath &tp : layer.toolpaths)
        for (PathVertex &v : tp.vertices) {
            if (v.mix.empty())
                throw Error("layer " + std::to_string(layer.index) + " is not resampled: vertex without mix");
            v.alphas = v.mix.weights;
        }
    plan.order = identity_order(filament_count);
    plan.per_stratum_volume = plan_volumes(layer, filament_count);
    return plan;
}

StrataPlan optimize_layer(Layer &layer, const OptimizerConfig &cfg)
{
    cfg.validate();
    const EmbeddedPointSet set = embed_layer(layer);
    const int filament_count = static_cast<int>(set.points[0].size()) + 1;
    const int full_dim = filament_count - 1;
    const PcaBasis basis = pca_reduce(set, cfg);

    if (basis.intrinsic_dim == 0) {
        // Constant-mixture layer: a single stratum mixed in the nozzle.
        StrataPlan plan;
        plan.strata_count = 1;
        MixRatio mean_mix = unembed(basis.mean);
        mean_mix.renormalize();
        plan.base_mixtures.push_back(std::move(mean_mix));
        for (Toolpath &tp : layer.toolpaths)
            for (PathVertex &v : tp.vertices)
                v.alphas = Eigen::VectorXd::Ones(1);
        plan.order = identity_order(1);
        plan.per_stratum_volume = plan_volumes(layer, 1);
        return plan;
    }

    for (int dim = basis.intrinsic_dim; dim <= full_dim; ++dim) {
        std::vector<Eigen::VectorXd> reduced;
        reduced.reserve(set.points.size());
        for (const Eigen::VectorXd &p : set.points)
            reduced.push_back(basis.project(p, dim));
        const MixtureLift lift = MixtureLift::from_pca(basis, dim);

        const std::optional<Simplex> simplex = min_enclosing_simplex(reduced, lift, cfg);
        if (!simplex)
            continue;

        StrataPlan plan;
        plan.strata_count = dim + 1;
        for (const Eigen::VectorXd &v : simplex->vertices) {
            MixRatio mix = lift.to_mixture_candidate(v);
            mix.renormalize(); // clamp the lambda-tolerated violations away
            plan.base_mixtures.push_back(std::move(mix));
        }
        const AlphaSolver solver(plan.base_mixtures);
        assign_alphas(layer, solver);
        plan.order = identity_order(plan.strata_count);
        plan.per_stratum_volume = plan_volumes(layer, plan.strata_count);
        return plan;
    }

    return unit_vector_plan(layer, filament_count);
}

// ---------------------------------------------------------------------------
// Plan report
// ---------------------------------------------------------------------------

void save_plans(const PrintJob &job, const std::string &path)
{
    json j;
    j["format"] = "strata-plans/1";
    json layers = json::array();
    for (const Layer &layer : job.layers) {
        if (!layer.plan)
            throw Error("save_plans: layer " + std::to_string(layer.index) + " has no plan");
        const StrataPlan &plan = *layer.plan;
        json jl;
        jl["index"] = layer.index;
        jl["strata"] = plan.strata_count;
        json order = json::array();
        for (int o : plan.order)
            order.push_back(o + 1); // 1-based in the report
        jl["order"] = std::move(order);
        json mixes = json::array();
        for (const MixRatio &m : plan.base_mixtures) {
            json w = json::array();
            for (Eigen::Index i = 0; i < m.weights.size(); ++i)
                w.push_back(m.weights[i]);
            mixes.push_back(std::move(w));
        }
        jl["base_mixtures"] = std::move(mixes);
        json volumes = json::array();
        for (Eigen::Index i = 0; i < plan.per_stratum_volume.size(); ++i)
            volumes.push_back(plan.per_stratum_volume[i]);
        jl["per_stratum_volume"] = std::move(volumes);
        jl["unit_vector_fallback"] = plan.unit_vector_fallback;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);

    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path);
    out << j.dump(1, '\t') << '\n';
}

} // namespace stratamix
