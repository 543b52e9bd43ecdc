#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "stratamix/errors.hpp"
#include "stratamix/field.hpp"
#include "test_support.hpp"

using namespace stratamix;

namespace {

MixRatio mix3(double a, double b, double c)
{
    Eigen::Vector3d w(a, b, c);
    return MixRatio(w);
}

MixRatio mix2(double a, double b)
{
    Eigen::Vector2d w(a, b);
    return MixRatio(w);
}

std::string temp_path(const char *name)
{
    return std::string("stratamix_test_") + name;
}

} // namespace

TEST_CASE("constant field returns its mix everywhere")
{
    const FieldSpec f = FieldSpec::constant(mix3(0.2, 0.3, 0.5));
    for (const auto &p : {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(-5, 3, 100)}) {
        const MixRatio m = sample_field(f, p);
        CHECK(m.weights.isApprox(Eigen::Vector3d(0.2, 0.3, 0.5), 1e-12));
    }
}

TEST_CASE("axis gradient blends linearly and clamps beyond the endpoints")
{
    const FieldSpec f = FieldSpec::axis_gradient({0, 0, 0}, mix3(1, 0, 0), {10, 0, 0}, mix3(0, 1, 0));
    CHECK(sample_field(f, {5, 0, 0}).weights.isApprox(Eigen::Vector3d(0.5, 0.5, 0), 1e-12));
    CHECK(sample_field(f, {2.5, 7, -3}).weights.isApprox(Eigen::Vector3d(0.75, 0.25, 0), 1e-12));
    CHECK(sample_field(f, {-4, 0, 0}).weights.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
    CHECK(sample_field(f, {40, 0, 0}).weights.isApprox(Eigen::Vector3d(0, 1, 0), 1e-12));
}

TEST_CASE("nearest texture lookup picks the closest voxel")
{
    VolumeTexture tex;
    tex.dims = Eigen::Vector3i(2, 1, 1);
    tex.bbox_min = Eigen::Vector3d(0, 0, 0);
    tex.bbox_max = Eigen::Vector3d(2, 1, 1);
    tex.filament_count = 2;
    tex.filtering = TextureFiltering::nearest;
    tex.voxels = {mix2(1, 0), mix2(0, 1)};
    const FieldSpec f = FieldSpec::volume_texture(std::make_shared<VolumeTexture>(tex));

    CHECK(sample_field(f, {1.5, 0.5, 0.5}).weights.isApprox(Eigen::Vector2d(0, 1), 1e-12));
    CHECK(sample_field(f, {0.3, 0.5, 0.5}).weights.isApprox(Eigen::Vector2d(1, 0), 1e-12));
    // Clamp-to-edge outside the bbox.
    CHECK(sample_field(f, {99, 99, 99}).weights.isApprox(Eigen::Vector2d(0, 1), 1e-12));
    CHECK(sample_field(f, {-99, 0, 0}).weights.isApprox(Eigen::Vector2d(1, 0), 1e-12));
}

TEST_CASE("trilinear texture interpolates between texel centers")
{
    VolumeTexture tex;
    tex.dims = Eigen::Vector3i(2, 1, 1);
    tex.bbox_min = Eigen::Vector3d(0, 0, 0);
    tex.bbox_max = Eigen::Vector3d(2, 1, 1);
    tex.filament_count = 2;
    tex.voxels = {mix2(1, 0), mix2(0, 1)};
    const FieldSpec f = FieldSpec::volume_texture(std::make_shared<VolumeTexture>(tex));

    // Texel centers at x=0.5 and x=1.5; x=0.75 is a quarter of the way.
    CHECK(sample_field(f, {0.75, 0.5, 0.5}).weights.isApprox(Eigen::Vector2d(0.75, 0.25), 1e-12));
    CHECK(sample_field(f, {1.0, 0.5, 0.5}).weights.isApprox(Eigen::Vector2d(0.5, 0.5), 1e-12));
}

TEST_CASE("texture file round trip and validation errors")
{
    VolumeTexture tex;
    tex.dims = Eigen::Vector3i(1, 1, 1);
    tex.bbox_min = Eigen::Vector3d(0, 0, 0);
    tex.bbox_max = Eigen::Vector3d(1, 1, 1);
    tex.filament_count = 3;
    tex.voxels = {mix3(1, 0, 0)};
    const std::string path = temp_path("texture.json");
    save_volume_texture(tex, path);

    VolumeTexture loaded = load_volume_texture(path);
    CHECK(loaded.dims == Eigen::Vector3i(1, 1, 1));
    CHECK(loaded.voxels.size() == 1);
    CHECK(loaded.voxels[0].weights.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
    // A single-voxel texture behaves as a constant field.
    const FieldSpec f = FieldSpec::volume_texture(std::make_shared<VolumeTexture>(std::move(loaded)));
    CHECK(sample_field(f, {0.1, 0.9, 0.4}).weights.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));

    SUBCASE("voxel summing to 1.5 is rejected naming the voxel")
    {
        std::FILE *out = std::fopen(path.c_str(), "w");
        std::fputs("{\"format\":\"strata-volume-texture/1\",\"dims\":[2,1,1],"
                   "\"bbox\":{\"min\":[0,0,0],\"max\":[1,1,1]},\"filaments\":3,"
                   "\"voxels\":[[1,0,0],[0.5,0.5,0.5]]}",
                   out);
        std::fclose(out);
        CHECK_THROWS_WITH_AS(load_volume_texture(path), doctest::Contains("voxel 1"), InputError);
    }
    SUBCASE("voxel summing to 1+1e-8 is renormalized and accepted")
    {
        std::FILE *out = std::fopen(path.c_str(), "w");
        std::fputs("{\"format\":\"strata-volume-texture/1\",\"dims\":[1,1,1],"
                   "\"bbox\":{\"min\":[0,0,0],\"max\":[1,1,1]},\"filaments\":3,"
                   "\"voxels\":[[0.50000001,0.5,0]]}",
                   out);
        std::fclose(out);
        const VolumeTexture t = load_volume_texture(path);
        CHECK(t.voxels[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch is rejected")
    {
        std::FILE *out = std::fopen(path.c_str(), "w");
        std::fputs("{\"format\":\"strata-volume-texture/1\",\"dims\":[2,1,1],"
                   "\"bbox\":{\"min\":[0,0,0],\"max\":[1,1,1]},\"filaments\":3,"
                   "\"voxels\":[[1,0,0]]}",
                   out);
        std::fclose(out);
        CHECK_THROWS_AS(load_volume_texture(path), InputError);
    }
    std::remove(path.c_str());
}

TEST_CASE("field file round trip")
{
    const std::string path = temp_path("field.json");
    const FieldSpec f = FieldSpec::axis_gradient({0, 0, 0}, mix3(1, 0, 0), {170, 0, 0}, mix3(0, 1, 0));
    save_field(f, path);
    const FieldSpec g = load_field(path);
    CHECK(g.kind == FieldSpec::Kind::axis_gradient);
    CHECK(sample_field(g, {85, 0, 0}).weights.isApprox(Eigen::Vector3d(0.5, 0.5, 0), 1e-12));
    std::remove(path.c_str());
}

TEST_CASE("every field kind returns valid ratios at random points")
{
    std::mt19937 rng(7);
    std::vector<FieldSpec> fields;
    fields.push_back(FieldSpec::constant(mix3(0.2, 0.3, 0.5)));
    fields.push_back(FieldSpec::axis_gradient({0, 0, 0}, mix3(1, 0, 0), {10, 5, 2}, mix3(0, 0.4, 0.6)));
    fields.push_back(FieldSpec::sine_around_axis({2, 3}, mix3(0.7, 0.2, 0.1), mix3(0.1, 0.2, 0.7), 0, 20, 2, 40));
    fields.push_back(FieldSpec::radial_disc({0, 0}, 25.0, 3));
    {
        Eigen::Vector4d center(0, 0, 0, 1);
        fields.push_back(FieldSpec::radial_disc({5, 5}, 25.0, 3, MixRatio(center)));
    }
    {
        VolumeTexture tex;
        tex.dims = Eigen::Vector3i(3, 2, 2);
        tex.bbox_min = Eigen::Vector3d(-5, -5, 0);
        tex.bbox_max = Eigen::Vector3d(5, 5, 10);
        tex.filament_count = 3;
        for (int i = 0; i < 12; ++i)
            tex.voxels.push_back(testsupport::random_mix(rng, 3));
        fields.push_back(FieldSpec::volume_texture(std::make_shared<VolumeTexture>(std::move(tex))));
    }

    for (const FieldSpec &f : fields) {
        for (int i = 0; i < 500; ++i) {
            const Eigen::Vector3d p(testsupport::uniform(rng, -30, 30), testsupport::uniform(rng, -30, 30),
                                    testsupport::uniform(rng, -5, 25));
            const MixRatio m = sample_field(f, p);
            CHECK(m.filament_count() == f.filament_count);
            CHECK(m.is_valid(1e-9));
        }
    }
}

TEST_CASE("radial disc wheel reaches every pure filament")
{
    const FieldSpec f = FieldSpec::radial_disc({0, 0}, 10.0, 5);
    for (int i = 0; i < 5; ++i) {
        const double a = 2.0 * 3.14159265358979 * i / 5;
        const MixRatio m = sample_field(f, {8.0 * std::cos(a), 8.0 * std::sin(a), 0.0});
        CHECK(m.weights[i] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("fig-14-style sine profile reaches 0.6 mm stripes near the top")
{
    // Stripes (half periods) on a radius-20 cylinder have arc width pi*r/n.
    const double radius = 20.0;
    const double height = 40.0;
    const FieldSpec f = FieldSpec::sine_around_axis({0, 0}, mix3(1, 0, 0), mix3(0, 1, 0), 0.0, height,
                                                    4.0, 3.14159265358979 * radius / 0.6);

    // Measure gaps between adjacent 0.5-crossings of the blend along the top
    // circumference.
    const double z = height - 1e-6;
    double min_stripe = 1e9;
    double prev_cross = -1;
    double prev_val = 0;
    const int n_scan = 400000;
    for (int i = 0; i <= n_scan; ++i) {
        const double theta = 2.0 * 3.14159265358979 * i / n_scan;
        const Eigen::Vector3d p(radius * std::cos(theta), radius * std::sin(theta), z);
        const double v = sample_field(f, p).weights[0] - 0.5;
        if (i > 0 && ((prev_val < 0 && v >= 0) || (prev_val > 0 && v <= 0))) {
            const double arc = radius * theta;
            if (prev_cross >= 0)
                min_stripe = std::min(min_stripe, arc - prev_cross);
            prev_cross = arc;
        }
        prev_val = v;
    }
    CHECK(min_stripe == doctest::Approx(0.6).epsilon(0.05));
}
