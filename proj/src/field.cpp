#include "stratamix/field.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>

#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"

namespace stratamix {

using nlohmann::json;

// ---------------------------------------------------------------------------
// VolumeTexture
// ---------------------------------------------------------------------------

void VolumeTexture::validate() const
{
    if (dims.minCoeff() < 1)
        throw InputError("texture: dims must be >= 1 per axis");
    if ((bbox_max - bbox_min).minCoeff() <= 0.0)
        throw InputError("texture: bbox must have positive extent");
    if (filament_count < 2)
        throw InputError("texture: filament count must be >= 2");
    const std::size_t expected = static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
    if (voxels.size() != expected)
        throw InputError("texture: voxel count " + std::to_string(voxels.size()) + " does not match dims product " + std::to_string(expected));
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const MixRatio &v = voxels[i];
        if (v.filament_count() != filament_count || !v.is_valid(1e-6))
            throw InputError("texture: invalid mixing ratio at voxel " + std::to_string(i));
    }
}

static MixRatio sample_texture(const VolumeTexture &tex, const Eigen::Vector3d &p)
{
    const Eigen::Vector3d extent = tex.bbox_max - tex.bbox_min;
    Eigen::Vector3d cell;
    for (int a = 0; a < 3; ++a)
        cell[a] = extent[a] / tex.dims[a];

    if (tex.filtering == TextureFiltering::nearest) {
        Eigen::Vector3i idx;
        for (int a = 0; a < 3; ++a) {
            const int i = static_cast<int>(std::floor((p[a] - tex.bbox_min[a]) / cell[a]));
            idx[a] = std::clamp(i, 0, tex.dims[a] - 1); // clamp to edge
        }
        return tex.voxel(idx.x(), idx.y(), idx.z());
    }

    // Trilinear over texel centers, clamped at the borders.
    int i0[3], i1[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] - tex.bbox_min[a]) / cell[a] - 0.5;
        const double fl = std::floor(u);
        i0[a] = std::clamp(static_cast<int>(fl), 0, tex.dims[a] - 1);
        i1[a] = std::clamp(static_cast<int>(fl) + 1, 0, tex.dims[a] - 1);
        f[a] = std::clamp(u - fl, 0.0, 1.0);
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(tex.filament_count);
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
                if (w == 0.0)
                    continue;
                acc += w * tex.voxel(dx ? i1[0] : i0[0], dy ? i1[1] : i0[1], dz ? i1[2] : i0[2]).weights;
            }
    MixRatio out(std::move(acc));
    out.renormalize(); // interpolation preserves the sum; this guards rounding
    return out;
}

// ---------------------------------------------------------------------------
// FieldSpec factories
// ---------------------------------------------------------------------------

static void require_valid_mix(const MixRatio &m, const char *what)
{
    if (!m.is_valid(1e-9))
        throw InputError(std::string("field: ") + what + " is not a valid mixing ratio");
}

FieldSpec FieldSpec::constant(MixRatio mix)
{
    require_valid_mix(mix, "constant mix");
    FieldSpec f;
    f.kind = Kind::constant;
    f.filament_count = mix.filament_count();
    f.mix_a = std::move(mix);
    return f;
}

FieldSpec FieldSpec::axis_gradient(const Eigen::Vector3d &from, MixRatio mix_from,
                                   const Eigen::Vector3d &to, MixRatio mix_to)
{
    require_valid_mix(mix_from, "gradient start mix");
    require_valid_mix(mix_to, "gradient end mix");
    if (mix_from.filament_count() != mix_to.filament_count())
        throw InputError("field: gradient endpoint mixes disagree on filament count");
    if ((to - from).norm() <= 1e-9)
        throw InputError("field: gradient axis endpoints coincide");
    FieldSpec f;
    f.kind = Kind::axis_gradient;
    f.filament_count = mix_from.filament_count();
    f.point_a = from;
    f.point_b = to;
    f.mix_a = std::move(mix_from);
    f.mix_b = std::move(mix_to);
    return f;
}

FieldSpec FieldSpec::sine_around_axis(const Eigen::Vector2d &center, MixRatio mix_a, MixRatio mix_b,
                                      double z_min, double z_max, double cycles_start, double cycles_end,
                                      double phase)
{
    require_valid_mix(mix_a, "sine mix_a");
    require_valid_mix(mix_b, "sine mix_b");
    if (mix_a.filament_count() != mix_b.filament_count())
        throw InputError("field: sine mixes disagree on filament count");
    if (z_max <= z_min)
        throw InputError("field: sine z range is empty");
    if (cycles_start < 0.0 || cycles_end < 0.0)
        throw InputError("field: sine cycle counts must be non-negative");
    FieldSpec f;
    f.kind = Kind::sine_around_axis;
    f.filament_count = mix_a.filament_count();
    f.axis_center = center;
    f.mix_a = std::move(mix_a);
    f.mix_b = std::move(mix_b);
    f.z_min = z_min;
    f.z_max = z_max;
    f.cycles_start = cycles_start;
    f.cycles_end = cycles_end;
    f.phase = phase;
    return f;
}

FieldSpec FieldSpec::radial_disc(const Eigen::Vector2d &center, double radius, int wheel_count,
                                 MixRatio center_mix)
{
    if (radius <= 0.0)
        throw InputError("field: disc radius must be positive");
    if (wheel_count < 2)
        throw InputError("field: disc wheel needs at least two filaments");
    FieldSpec f;
    f.kind = Kind::radial_disc;
    f.filament_count = wheel_count;
    if (!center_mix.empty()) {
        if (center_mix.filament_count() <= wheel_count)
            throw InputError("field: center mix must add a filament beyond the wheel");
        require_valid_mix(center_mix, "disc center mix");
        f.filament_count = center_mix.filament_count();
    }
    f.disc_center = center;
    f.disc_radius = radius;
    f.wheel_count = wheel_count;
    f.center_mix = std::move(center_mix);
    return f;
}

FieldSpec FieldSpec::volume_texture(std::shared_ptr<const VolumeTexture> texture)
{
    if (!texture)
        throw InputError("field: null texture");
    texture->validate();
    FieldSpec f;
    f.kind = Kind::volume_texture;
    f.filament_count = texture->filament_count;
    f.texture = std::move(texture);
    return f;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

double sine_cycles_at(const FieldSpec &field, double z)
{
    const double t = std::clamp((z - field.z_min) / (field.z_max - field.z_min), 0.0, 1.0);
    return std::round(field.cycles_start + t * (field.cycles_end - field.cycles_start));
}

MixRatio sample_field(const FieldSpec &field, const Eigen::Vector3d &p)
{
    switch (field.kind) {
    case FieldSpec::Kind::constant:
        return field.mix_a;
    case FieldSpec::Kind::axis_gradient: {
        const Eigen::Vector3d axis = field.point_b - field.point_a;
        const double t = std::clamp((p - field.point_a).dot(axis) / axis.squaredNorm(), 0.0, 1.0);
        return lerp(field.mix_a, field.mix_b, t);
    }
    case FieldSpec::Kind::sine_around_axis: {
        const double theta = std::atan2(p.y() - field.axis_center.y(), p.x() - field.axis_center.x());
        const double n = sine_cycles_at(field, p.z());
        const double s = 0.5 + 0.5 * std::sin(n * theta + field.phase);
        return lerp(field.mix_a, field.mix_b, s);
    }
    case FieldSpec::Kind::radial_disc: {
        const Eigen::Vector2d d(p.x() - field.disc_center.x(), p.y() - field.disc_center.y());
        double theta = std::atan2(d.y(), d.x());
        if (theta < 0.0)
            theta += 2.0 * std::numbers::pi;
        const int m = field.wheel_count;
        const double sector = theta / (2.0 * std::numbers::pi) * m;
        const int s0 = std::min(static_cast<int>(sector), m - 1);
        const double frac = sector - s0;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(field.filament_count);
        w[s0] = 1.0 - frac;
        w[(s0 + 1) % m] += frac;
        if (!field.center_mix.empty()) {
            const double t = std::clamp(d.norm() / field.disc_radius, 0.0, 1.0);
            w = t * w + (1.0 - t) * field.center_mix.weights;
        }
        return MixRatio(std::move(w));
    }
    case FieldSpec::Kind::volume_texture:
        return sample_texture(*field.texture, p);
    }
    throw Error("field: unknown kind");
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

static const char *kTextureFormat = "strata-volume-texture/1";
static const char *kFieldFormat = "strata-field/1";

static json open_json(const std::string &path, const char *expected_format)
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
    if (!j.is_object() || j.value("format", "") != expected_format)
        throw InputError(path + ": missing or unsupported format header (expected \"" + expected_format + "\")");
    return j;
}

static void write_json(const json &j, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path);
    out << j.dump(1, '\t') << '\n';
}

static Eigen::VectorXd vector_from_json(const json &j)
{
    if (!j.is_array())
        throw InputError("field/texture: expected an array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

static json vector_to_json(const Eigen::VectorXd &v)
{
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v[i]);
    return j;
}

VolumeTexture load_volume_texture(const std::string &path)
{
    const json j = open_json(path, kTextureFormat);
    VolumeTexture tex;
    try {
        const auto &dims = j.at("dims");
        tex.dims = Eigen::Vector3i(dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>());
        const auto &bbox = j.at("bbox");
        for (int a = 0; a < 3; ++a) {
            tex.bbox_min[a] = bbox.at("min").at(a).get<double>();
            tex.bbox_max[a] = bbox.at("max").at(a).get<double>();
        }
        tex.filament_count = j.at("filaments").get<int>();
        const std::string filt = j.value("filtering", "trilinear");
        if (filt == "nearest")
            tex.filtering = TextureFiltering::nearest;
        else if (filt == "trilinear")
            tex.filtering = TextureFiltering::trilinear;
        else
            throw InputError(path + ": unknown filtering \"" + filt + "\"");
        const auto &voxels = j.at("voxels");
        tex.voxels.reserve(voxels.size());
        for (std::size_t i = 0; i < voxels.size(); ++i) {
            MixRatio m(vector_from_json(voxels[i]));
            if (m.filament_count() != tex.filament_count)
                throw InputError(path + ": voxel " + std::to_string(i) + " has wrong component count");
            if (!m.is_valid(1e-6))
                throw InputError(path + ": voxel " + std::to_string(i) + " violates mixing-ratio constraints");
            m.renormalize();
            tex.voxels.push_back(std::move(m));
        }
    } catch (const json::exception &e) {
        throw InputError(path + ": " + e.what());
    }
    tex.validate();
    return tex;
}

void save_volume_texture(const VolumeTexture &texture, const std::string &path)
{
    texture.validate();
    json j;
    j["format"] = kTextureFormat;
    j["dims"] = {texture.dims.x(), texture.dims.y(), texture.dims.z()};
    j["bbox"] = {{"min", {texture.bbox_min.x(), texture.bbox_min.y(), texture.bbox_min.z()}},
                 {"max", {texture.bbox_max.x(), texture.bbox_max.y(), texture.bbox_max.z()}}};
    j["filaments"] = texture.filament_count;
    j["filtering"] = texture.filtering == TextureFiltering::nearest ? "nearest" : "trilinear";
    json voxels = json::array();
    for (const MixRatio &v : texture.voxels)
        voxels.push_back(vector_to_json(v.weights));
    j["voxels"] = std::move(voxels);
    write_json(j, path);
}

static Eigen::Vector3d point3_from_json(const json &j)
{
    return Eigen::Vector3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

FieldSpec load_field(const std::string &path)
{
    const json j = open_json(path, kFieldFormat);
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "constant")
            return FieldSpec::constant(MixRatio(vector_from_json(j.at("mix"))));
        if (kind == "axis_gradient")
            return FieldSpec::axis_gradient(point3_from_json(j.at("from").at("point")),
                                            MixRatio(vector_from_json(j.at("from").at("mix"))),
                                            point3_from_json(j.at("to").at("point")),
                                            MixRatio(vector_from_json(j.at("to").at("mix"))));
        if (kind == "sine_around_axis")
            return FieldSpec::sine_around_axis(
                Eigen::Vector2d(j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()),
                MixRatio(vector_from_json(j.at("mix_a"))), MixRatio(vector_from_json(j.at("mix_b"))),
                j.at("z_range").at(0).get<double>(), j.at("z_range").at(1).get<double>(),
                j.at("cycles").at(0).get<double>(), j.at("cycles").at(1).get<double>(),
                j.value("phase", 0.0));
        if (kind == "radial_disc") {
            MixRatio center_mix;
            if (j.contains("center_mix"))
                center_mix = MixRatio(vector_from_json(j.at("center_mix")));
            return FieldSpec::radial_disc(
                Eigen::Vector2d(j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()),
                j.at("radius").get<double>(), j.at("wheel").get<int>(), std::move(center_mix));
        }
        if (kind == "volume_texture") {
            if (j.at("texture").is_string()) {
                auto tex = std::make_shared<VolumeTexture>(load_volume_texture(j.at("texture").get<std::string>()));
                return FieldSpec::volume_texture(std::move(tex));
            }
            throw InputError(path + ": texture must be a file path");
        }
        throw InputError(path + ": unknown field kind \"" + kind + "\"");
    } catch (const json::exception &e) {
        throw InputError(path + ": " + e.what());
    }
}

void save_field(const FieldSpec &field, const std::string &path)
{
    json j;
    j["format"] = kFieldFormat;
    switch (field.kind) {
    case FieldSpec::Kind::constant:
        j["kind"] = "constant";
        j["mix"] = vector_to_json(field.mix_a.weights);
        break;
    case FieldSpec::Kind::axis_gradient:
        j["kind"] = "axis_gradient";
        j["from"] = {{"point", {field.point_a.x(), field.point_a.y(), field.point_a.z()}},
                     {"mix", vector_to_json(field.mix_a.weights)}};
        j["to"] = {{"point", {field.point_b.x(), field.point_b.y(), field.point_b.z()}},
                   {"mix", vector_to_json(field.mix_b.weights)}};
        break;
    case FieldSpec::Kind::sine_around_axis:
        j["kind"] = "sine_around_axis";
        j["center"] = {field.axis_center.x(), field.axis_center.y()};
        j["mix_a"] = vector_to_json(field.mix_a.weights);
        j["mix_b"] = vector_to_json(field.mix_b.weights);
        j["z_range"] = {field.z_min, field.z_max};
        j["cycles"] = {field.cycles_start, field.cycles_end};
        j["phase"] = field.phase;
        break;
    case FieldSpec::Kind::radial_disc:
        j["kind"] = "radial_disc";
        j["center"] = {field.disc_center.x(), field.disc_center.y()};
        j["radius"] = field.disc_radius;
        j["wheel"] = field.wheel_count;
        if (!field.center_mix.empty())
            j["center_mix"] = vector_to_json(field.center_mix.weights);
        break;
    case FieldSpec::Kind::volume_texture:
        throw InputError("save_field: volume_texture fields are saved via their texture file");
    }
    write_json(j, path);
}

} // namespace stratamix
