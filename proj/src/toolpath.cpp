#include "stratamix/toolpath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"

namespace stratamix {

using nlohmann::json;

static const char *kToolpathFormat = "strata-toolpaths/1";
static constexpr double kCoincidentTol = 1e-6; // mm

static double xy_distance(const Eigen::Vector3d &a, const Eigen::Vector3d &b)
{
    return (a.head<2>() - b.head<2>()).norm();
}

double Toolpath::length() const
{
    double total = 0.0;
    for (int s = 0; s < segment_count(); ++s) {
        const auto [i, j] = segment(s);
        total += xy_distance(vertices[i].position, vertices[j].position);
    }
    return total;
}

double layer_path_length(const Layer &layer)
{
    double total = 0.0;
    for (const Toolpath &tp : layer.toolpaths)
        total += tp.length();
    return total;
}

double segment_volume(const PathVertex &v0, const PathVertex &v1, int stratum, double track_width,
                      double layer_thickness)
{
    const double len = xy_distance(v0.position, v1.position);
    const double avg_alpha = 0.5 * (v0.alphas[stratum] + v1.alphas[stratum]);
    return track_width * layer_thickness * len * avg_alpha;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_job(const PrintJob &job)
{
    job.machine.validate();
    double prev_top = 0.0;
    bool first = true;
    for (const Layer &layer : job.layers) {
        const std::string where = "layer " + std::to_string(layer.index);
        if (layer.thickness <= 0.0)
            throw InputError(where + ": thickness must be positive");
        if (layer.z_top <= 0.0)
            throw InputError(where + ": z_top must be positive");
        if (!first) {
            if (layer.z_top <= prev_top)
                throw InputError(where + ": layer z_top values must increase");
            if (std::abs(layer.z_top - (prev_top + layer.thickness)) > 1e-6)
                throw InputError(where + ": z_top does not stack uniformly on the previous layer");
        }
        prev_top = layer.z_top;
        first = false;

        for (std::size_t p = 0; p < layer.toolpaths.size(); ++p) {
            const Toolpath &tp = layer.toolpaths[p];
            const std::string pwhere = where + ", path " + std::to_string(p);
            if (tp.vertices.size() < 2)
                throw InputError(pwhere + ": needs at least 2 vertices");
            if (tp.track_width <= 0.0)
                throw InputError(pwhere + ": track_width must be positive");
            for (int s = 0; s < tp.segment_count(); ++s) {
                const auto [i, j] = tp.segment(s);
                if (xy_distance(tp.vertices[i].position, tp.vertices[j].position) <= kCoincidentTol)
                    throw InputError(pwhere + ": coincident consecutive vertices at segment " + std::to_string(s));
                if (std::abs(tp.vertices[i].position.z() - layer.z_top) > 1e-9)
                    throw InputError(pwhere + ": vertex z differs from layer z_top");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Toolpath file I/O
// ---------------------------------------------------------------------------

static PathRole role_from_string(const std::string &s, const std::string &where)
{
    if (s == "perimeter")
        return PathRole::perimeter;
    if (s == "infill")
        return PathRole::infill;
    if (s == "shield")
        return PathRole::shield;
    throw InputError(where + ": unknown path role \"" + s + "\"");
}

static const char *role_to_string(PathRole role)
{
    switch (role) {
    case PathRole::perimeter: return "perimeter";
    case PathRole::infill: return "infill";
    case PathRole::shield: return "shield";
    }
    return "perimeter";
}

PrintJob load_toolpaths(const std::string &path, const MachineConfig &machine)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw InputError(path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kToolpathFormat)
        throw InputError(path + ": missing or unsupported format header (expected \"" + kToolpathFormat + "\")");

    PrintJob job;
    job.machine = machine;
    try {
        for (const auto &jl : j.at("layers")) {
            Layer layer;
            layer.index = jl.at("index").get<int>();
            layer.z_top = jl.at("z_top").get<double>();
            layer.thickness = jl.at("thickness").get<double>();
            const std::string where = path + ": layer " + std::to_string(layer.index);
            for (const auto &jp : jl.at("paths")) {
                Toolpath tp;
                tp.closed = jp.at("closed").get<bool>();
                tp.track_width = jp.at("track_width").get<double>();
                tp.role = role_from_string(jp.value("role", "perimeter"), where);
                for (const auto &jv : jp.at("vertices")) {
                    PathVertex v;
                    v.position = Eigen::Vector3d(jv.at(0).get<double>(), jv.at(1).get<double>(), layer.z_top);
                    // Drop degenerate zero-length segments at load.
                    if (!tp.vertices.empty() &&
                        xy_distance(tp.vertices.back().position, v.position) <= kCoincidentTol)
                        continue;
                    tp.vertices.push_back(std::move(v));
                }
                // A closed path may repeat its first vertex in the file.
                if (tp.closed && tp.vertices.size() > 2 &&
                    xy_distance(tp.vertices.front().position, tp.vertices.back().position) <= kCoincidentTol)
                    tp.vertices.pop_back();
                if (tp.vertices.size() < 2)
                    throw InputError(where + ": path has fewer than 2 distinct vertices");
                layer.toolpaths.push_back(std::move(tp));
            }
            job.layers.push_back(std::move(layer));
        }
    } catch (const json::exception &e) {
        throw InputError(path + ": " + e.what());
    }
    validate_job(job);
    return job;
}

void save_toolpaths(const PrintJob &job, const std::string &path)
{
    json j;
    j["format"] = kToolpathFormat;
    json layers = json::array();
    for (const Layer &layer : job.layers) {
        json jl;
        jl["index"] = layer.index;
        jl["z_top"] = layer.z_top;
        jl["thickness"] = layer.thickness;
        json paths = json::array();
        for (const Toolpath &tp : layer.toolpaths) {
            json jp;
            jp["closed"] = tp.closed;
            jp["track_width"] = tp.track_width;
            jp["role"] = role_to_string(tp.role);
            json verts = json::array();
            for (const PathVertex &v : tp.vertices)
                verts.push_back({v.position.x(), v.position.y()});
            jp["vertices"] = std::move(verts);
            paths.push_back(std::move(jp));
        }
        jl["paths"] = std::move(paths);
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);

    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path);
    out << j.dump(1, '\t') << '\n';
}

// ---------------------------------------------------------------------------
// Test shapes
// ---------------------------------------------------------------------------

static Toolpath circle_path(const Eigen::Vector2d &center, double radius, double z, double track_width)
{
    // Chords of ~0.5 mm keep the sagitta well below the track width.
    const int n = std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / 0.5)));
    Toolpath tp;
    tp.closed = true;
    tp.track_width = track_width;
    tp.vertices.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * i / n;
        PathVertex v;
        v.position = Eigen::Vector3d(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a), z);
        tp.vertices.push_back(std::move(v));
    }
    return tp;
}

PrintJob generate_test_shape(TestShape shape, const TestShapeParams &params, double layer_thickness,
                             const MachineConfig &machine)
{
    machine.validate();
    if (layer_thickness <= 0.0 || layer_thickness > machine.nozzle_diameter)
        throw InputError("test shape: layer_thickness must be in (0, nozzle_diameter]");
    if (params.height <= 0.0)
        throw InputError("test shape: height must be positive");
    const double width = machine.nozzle_diameter;

    PrintJob job;
    job.machine = machine;
    job.machine.layer_thickness = layer_thickness;
    const int layer_count = std::max(1, static_cast<int>(std::llround(params.height / layer_thickness)));

    for (int i = 0; i < layer_count; ++i) {
        Layer layer;
        layer.index = i;
        layer.thickness = layer_thickness;
        layer.z_top = (i + 1) * layer_thickness;

        switch (shape) {
        case TestShape::extruded_rectangle: {
            if (params.size_x <= 0.0 || params.size_y <= 0.0)
                throw InputError("test shape: rectangle dimensions must be positive");
            Toolpath tp;
            tp.closed = true;
            tp.track_width = width;
            const double xs[4] = {0.0, params.size_x, params.size_x, 0.0};
            const double ys[4] = {0.0, 0.0, params.size_y, params.size_y};
            for (int c = 0; c < 4; ++c) {
                PathVertex v;
                v.position = Eigen::Vector3d(xs[c], ys[c], layer.z_top);
                tp.vertices.push_back(std::move(v));
            }
            layer.toolpaths.push_back(std::move(tp));
            break;
        }
        case TestShape::cylinder: {
            if (params.radius <= 0.0)
                throw InputError("test shape: cylinder radius must be positive");
            layer.toolpaths.push_back(circle_path(Eigen::Vector2d::Zero(), params.radius, layer.z_top, width));
            break;
        }
        case TestShape::disc: {
            if (params.radius <= width)
                throw InputError("test shape: disc radius must exceed the track width");
            // Concentric rings cover the area, spaced one track apart.
            for (double r = params.radius - 0.5 * width; r >= width; r -= width)
                layer.toolpaths.push_back(circle_path(Eigen::Vector2d::Zero(), r, layer.z_top, width));
            break;
        }
        }
        job.layers.push_back(std::move(layer));
    }
    validate_job(job);
    return job;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

Layer resample(const Layer &layer, const FieldSpec &field, double step)
{
    if (step <= 0.0)
        throw InputError("resample: step must be positive");
    Layer out = layer;
    const double z_mid = layer.z_top - 0.5 * layer.thickness;

    for (Toolpath &tp : out.toolpaths) {
        const std::vector<PathVertex> &src = tp.vertices;
        std::vector<PathVertex> dst;
        const int n = static_cast<int>(src.size());
        const int segments = tp.segment_count();
        for (int s = 0; s < segments; ++s) {
            const auto [i, j] = tp.segment(s);
            dst.push_back(src[i]);
            const Eigen::Vector3d a = src[i].position;
            const Eigen::Vector3d b = src[j].position;
            const double len = xy_distance(a, b);
            const int pieces = static_cast<int>(std::ceil(len / step - 1e-12));
            for (int k = 1; k < pieces; ++k) {
                PathVertex v;
                v.position = a + (b - a) * (static_cast<double>(k) / pieces);
                dst.push_back(std::move(v));
            }
        }
        if (!tp.closed)
            dst.push_back(src[n - 1]);
        for (PathVertex &v : dst)
            v.mix = sample_field(field, Eigen::Vector3d(v.position.x(), v.position.y(), z_mid));
        tp.vertices = std::move(dst);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simplification
// ---------------------------------------------------------------------------

namespace {

struct SimplifyContext {
    const Toolpath *path;
    double xy_tol;
    double alpha_tol;
    std::vector<char> keep;

    const PathVertex &vertex(int i) const
    {
        const int n = static_cast<int>(path->vertices.size());
        return path->vertices[i % n];
    }

    // Deviation of vertex i from the chord (a, b), normalized by the
    // tolerances so xy and alpha criteria can be compared on one scale.
    double deviation_ratio(int a, int i, int b) const
    {
        const Eigen::Vector2d pa = vertex(a).position.head<2>();
        const Eigen::Vector2d pb = vertex(b).position.head<2>();
        const Eigen::Vector2d pi = vertex(i).position.head<2>();
        const Eigen::Vector2d ab = pb - pa;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 1e-24 ? std::clamp((pi - pa).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double xy_dev = (pi - (pa + t * ab)).norm();

        const Eigen::VectorXd expect = (1.0 - t) * vertex(a).alphas + t * vertex(b).alphas;
        const double alpha_dev = (vertex(i).alphas - expect).cwiseAbs().maxCoeff();

        auto ratio = [](double dev, double tol) {
            if (tol > 0.0)
                return dev / tol;
            return dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        };
        return std::max(ratio(xy_dev, xy_tol), ratio(alpha_dev, alpha_tol));
    }

    void split(int a, int b)
    {
        int best = -1;
        double best_ratio = 1.0;
        for (int i = a + 1; i < b; ++i) {
            const double r = deviation_ratio(a, i, b);
            if (r > best_ratio) {
                best_ratio = r;
                best = i;
            }
        }
        if (best < 0)
            return;
        keep[best % path->vertices.size()] = 1;
        split(a, best);
        split(best, b);
    }
};

} // namespace

Toolpath simplify(const Toolpath &toolpath, double xy_tol, double alpha_tol)
{
    const int n = static_cast<int>(toolpath.vertices.size());
    for (const PathVertex &v : toolpath.vertices)
        if (v.alphas.size() == 0)
            throw Error("simplify: alphas are not populated");
    if (n <= 2)
        return toolpath;

    SimplifyContext ctx{&toolpath, xy_tol, alpha_tol, std::vector<char>(n, 0)};
    ctx.keep[0] = 1;
    if (toolpath.closed) {
        // Anchor the ring at vertex 0 and treat index n as the same vertex.
        ctx.split(0, n);
    } else {
        ctx.keep[n - 1] = 1;
        ctx.split(0, n - 1);
    }

    Toolpath out;
    out.track_width = toolpath.track_width;
    out.closed = toolpath.closed;
    out.role = toolpath.role;
    for (int i = 0; i < n; ++i)
        if (ctx.keep[i])
            out.vertices.push_back(toolpath.vertices[i]);
    if (out.vertices.size() < 2)
        return toolpath;
    return out;
}

} // namespace stratamix
