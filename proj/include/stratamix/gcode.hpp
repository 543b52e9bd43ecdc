#ifndef stratamix_gcode_hpp_
#define stratamix_gcode_hpp_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/machine.hpp"
#include "stratamix/toolpath.hpp"

namespace stratamix {

// Segments whose average deposited thickness falls below this are replaced
// by travel moves (deposition is interrupted and resumed past them).
inline constexpr double kMinStratumThickness = 0.02; // mm

// Firmware interpolates E uniformly within one move, so a move must not
// span a large thickness ramp; segments are subdivided to keep the alpha
// span per move below this.
inline constexpr double kMaxAlphaSpanPerMove = 0.015;

// Filament feedrate used for retract/unretract lines.
inline constexpr double kRetractFeedrate = 35.0; // mm/s

enum class GcodeKind { extrude, travel, retract, config, comment };

// One program record. Text rendering is lossy (fixed-point words); the
// records keep exact values for analysis.
struct GcodeLine {
    GcodeKind kind = GcodeKind::comment;
    Eigen::Vector3d target = Eigen::Vector3d::Zero(); // extrude: x,y,z; travel: x,y
    double e = 0.0;        // absolute filament position after the move
    double e_delta = 0.0;  // extrude: deposited filament length (>= 0)
    double feedrate = 0.0; // mm/s
    Eigen::VectorXd ratios; // extrude only; already quantized to the emitted words
    bool shield = false;    // deposited on the ooze shield
    std::string text;       // comment / config payload
};

struct GcodeProgram {
    std::vector<GcodeLine> lines;
    Eigen::VectorXd totals;      // per-filament extruded volume, mm^3, shield included
    Eigen::VectorXd part_totals; // per-filament extruded volume, mm^3, shield excluded
    double estimated_time = 0.0; // seconds
};

// Feedrate keeping the volumetric extrusion rate constant for a track of
// the given width and deposited thickness, clamped to the machine maximum.
double compute_feedrate(double track_width, double thickness, const MachineConfig &machine);

// Time estimate: motion distance (or filament travel for retractions)
// divided by feedrate, acceleration ignored.
double estimate_print_time(const GcodeProgram &program);

struct ShieldPlan {
    Toolpath path;              // closed loop on the offset convex hull
    double purge_track_length;  // mm of shield track per mixture transition
};

// Closed loop offset outward from the layer's convex hull (rounded
// corners). Returns nothing for an empty layer.
std::optional<ShieldPlan> build_ooze_shield(const Layer &layer, const MachineConfig &machine);

// Compiles an optimized and ordered job into mixing G-code: strata emitted
// in plan order with cumulative per-vertex heights, flow-matched feedrates,
// a shield purge before each stratum and retraction on every deposition
// interruption.
GcodeProgram emit_strata(const PrintJob &job, const MachineConfig &machine);

// Serializes the program in the emitted dialect (see README); deterministic
// and locale-independent.
std::string render_gcode(const GcodeProgram &program, const MachineConfig &machine);
void save_gcode(const GcodeProgram &program, const MachineConfig &machine, const std::string &path);

// Fixed-point formatting used for every emitted number.
std::string format_fixed(double value, int decimals);

// Rounds a mixing ratio to 4-decimal words that sum to exactly 1.0 (largest
// remainder rounding).
Eigen::VectorXd quantize_ratios(const Eigen::VectorXd &weights);

} // namespace stratamix

#endif
