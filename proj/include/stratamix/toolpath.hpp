#ifndef stratamix_toolpath_hpp_
#define stratamix_toolpath_hpp_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/field.hpp"
#include "stratamix/machine.hpp"
#include "stratamix/mix_ratio.hpp"
#include "stratamix/strata_plan.hpp"

namespace stratamix {

enum class PathRole { perimeter, infill, shield };

struct PathVertex {
    // Millimeters; z is the layer top height, before strata offsets.
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    // Sampled field value c; empty until the layer is resampled.
    MixRatio mix;
    // Per-stratum thickness coefficients; empty until the layer is optimized.
    Eigen::VectorXd alphas;
};

struct Toolpath {
    std::vector<PathVertex> vertices;
    double track_width = 0.4;
    bool closed = false;
    PathRole role = PathRole::perimeter;

    int segment_count() const
    {
        const int n = static_cast<int>(vertices.size());
        if (n < 2)
            return 0;
        return closed ? n : n - 1;
    }
    // Vertex indices of segment s (the closing segment wraps to 0).
    std::pair<int, int> segment(int s) const
    {
        return {s, (s + 1) % static_cast<int>(vertices.size())};
    }
    double length() const;
};

struct Layer {
    int index = 0;
    double z_top = 0.0;     // mm
    double thickness = 0.0; // mm, the layer thickness T
    std::vector<Toolpath> toolpaths;
    std::optional<StrataPlan> plan;
};

struct PrintJob {
    std::vector<Layer> layers;
    MachineConfig machine;
};

enum class TestShape { extruded_rectangle, cylinder, disc };

struct TestShapeParams {
    double size_x = 20.0; // rectangle extent, mm
    double size_y = 20.0;
    double radius = 10.0; // cylinder / disc, mm
    double height = 3.0;  // extruded height, mm
};

// Reads a "strata-toolpaths/1" file. Vertices carry xy only; z comes from
// the layer's z_top. Degenerate zero-length segments are dropped.
PrintJob load_toolpaths(const std::string &path, const MachineConfig &machine);
void save_toolpaths(const PrintJob &job, const std::string &path);

// Built-in test shapes (closed perimeters; the disc adds concentric rings so
// its area is covered).
PrintJob generate_test_shape(TestShape shape, const TestShapeParams &params, double layer_thickness,
                             const MachineConfig &machine);

// Subdivides segments so none exceeds `step`, keeping the original vertices
// and geometry, and samples the field into every vertex mix. The field is
// evaluated at the layer's mid-height.
Layer resample(const Layer &layer, const FieldSpec &field, double step);

// Split-based polyline simplification once alphas are populated: a vertex
// survives when its xy deviation from the chord exceeds xy_tol or any alpha
// deviates from linear interpolation along the chord by more than alpha_tol.
Toolpath simplify(const Toolpath &toolpath, double xy_tol, double alpha_tol);

// Deposited volume of one segment of one stratum (trapezoid rule over the
// endpoint thickness coefficients).
double segment_volume(const PathVertex &v0, const PathVertex &v1, int stratum, double track_width,
                      double layer_thickness);

// Total deposition length of a layer (sum of toolpath lengths).
double layer_path_length(const Layer &layer);

// Validates structural invariants (vertex counts, coincident vertices,
// layer stacking); throws InputError on violation.
void validate_job(const PrintJob &job);

} // namespace stratamix

#endif
