#ifndef stratamix_field_hpp_
#define stratamix_field_hpp_

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/mix_ratio.hpp"

namespace stratamix {

enum class TextureFiltering { nearest, trilinear };

// Dense 3D grid of mixing ratios enclosing the object. Row-major voxel
// storage, x fastest, then y, then z. Sampling outside the bounding box
// clamps to the edge.
struct VolumeTexture {
    Eigen::Vector3i dims = Eigen::Vector3i::Ones();
    Eigen::Vector3d bbox_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d bbox_max = Eigen::Vector3d::Ones();
    int filament_count = 2;
    TextureFiltering filtering = TextureFiltering::trilinear;
    std::vector<MixRatio> voxels;

    std::size_t voxel_index(int ix, int iy, int iz) const
    {
        return (static_cast<std::size_t>(iz) * dims.y() + iy) * dims.x() + ix;
    }
    const MixRatio &voxel(int ix, int iy, int iz) const { return voxels[voxel_index(ix, iy, iz)]; }

    void validate() const; // throws InputError
};

// Volumetric mixing-ratio field c(x,y,z). Procedural kinds cover the
// built-in demonstrations; volume_texture samples a painted grid.
struct FieldSpec {
    enum class Kind { constant, axis_gradient, sine_around_axis, radial_disc, volume_texture };

    Kind kind = Kind::constant;
    int filament_count = 2;

    // constant / gradient endpoints / sine blend endpoints
    MixRatio mix_a;
    MixRatio mix_b;

    // axis_gradient: blend from mix_a at point_a to mix_b at point_b,
    // clamped beyond the endpoints.
    Eigen::Vector3d point_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d point_b = Eigen::Vector3d::UnitX();

    // sine_around_axis: vertical axis through axis_center; blend parameter
    // 0.5 + 0.5*sin(n(z)*theta + phase), with the per-height cycle count
    // n(z) ramped from cycles_start at z_min to cycles_end at z_max and
    // rounded to an integer so the field stays seamless around the axis.
    Eigen::Vector2d axis_center = Eigen::Vector2d::Zero();
    double z_min = 0.0;
    double z_max = 1.0;
    double cycles_start = 1.0;
    double cycles_end = 1.0;
    double phase = 0.0;

    // radial_disc: hue wheel of the first wheel_count pure filaments around
    // disc_center; when center_mix is set, blend toward it as r -> 0.
    Eigen::Vector2d disc_center = Eigen::Vector2d::Zero();
    double disc_radius = 1.0;
    int wheel_count = 3;
    MixRatio center_mix; // empty = no radial blend

    std::shared_ptr<const VolumeTexture> texture;

    static FieldSpec constant(MixRatio mix);
    static FieldSpec axis_gradient(const Eigen::Vector3d &from, MixRatio mix_from,
                                   const Eigen::Vector3d &to, MixRatio mix_to);
    static FieldSpec sine_around_axis(const Eigen::Vector2d &center, MixRatio mix_a, MixRatio mix_b,
                                      double z_min, double z_max, double cycles_start, double cycles_end,
                                      double phase = 0.0);
    static FieldSpec radial_disc(const Eigen::Vector2d &center, double radius, int wheel_count,
                                 MixRatio center_mix = MixRatio());
    static FieldSpec volume_texture(std::shared_ptr<const VolumeTexture> texture);
};

// Samples the field at p; always returns a valid MixRatio.
MixRatio sample_field(const FieldSpec &field, const Eigen::Vector3d &p);

// Per-height cycle count of a sine_around_axis field (exposed for the
// stripe-width analysis and tests).
double sine_cycles_at(const FieldSpec &field, double z);

// JSON (de)serialization. Texture files carry format "strata-volume-texture/1",
// field files "strata-field/1"; see README for the schemas.
VolumeTexture load_volume_texture(const std::string &path);
void save_volume_texture(const VolumeTexture &texture, const std::string &path);
FieldSpec load_field(const std::string &path);
void save_field(const FieldSpec &field, const std::string &path);

} // namespace stratamix

#endif
