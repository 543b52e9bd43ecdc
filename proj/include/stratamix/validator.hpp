#ifndef stratamix_validator_hpp_
#define stratamix_validator_hpp_

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "stratamix/field.hpp"
#include "stratamix/machine.hpp"
#include "stratamix/toolpath.hpp"

namespace stratamix {

struct ParsedMove {
    enum class Kind { extrude, travel, retract, config };
    Kind kind = Kind::config;
    Eigen::Vector3d target = Eigen::Vector3d::Zero(); // absolute position after the move
    double e_abs = 0.0;
    double e_delta = 0.0;        // deposited filament length (extrudes)
    double feedrate = 0.0;       // mm/s
    Eigen::VectorXd ratios;      // extrudes only, in ratio-letter order
    int line_number = 0;
    bool shield = false;         // from ;TYPE: sections
    int layer_marker = -1;       // from ;LAYER: comments
    int stratum_pos = 0;         // from ;STRATUM:k/S comments (1-based)
    int stratum_count = 0;
};

struct ParsedGcode {
    std::vector<ParsedMove> moves;
    std::string ratio_letters; // discovered from the first extruding line
};

// Parses the emitted dialect; rejects unknown words, ratio sums outside
// 1 +- 1e-4, negative ratios and non-monotone E on extruding moves, always
// reporting the offending line number.
ParsedGcode parse_gcode(const std::string &text);

struct CellKey {
    int ix = 0;
    int iy = 0;
    int layer = 0;
    bool operator==(const CellKey &) const = default;
};

struct CellKeyHash {
    std::size_t operator()(const CellKey &k) const
    {
        std::size_t h = std::hash<int>()(k.ix);
        h = h * 1000003u ^ std::hash<int>()(k.iy);
        h = h * 1000003u ^ std::hash<int>()(k.layer);
        return h;
    }
};

struct CellDeposit {
    Eigen::VectorXd volumes; // per-filament mm^3
    bool shield = false;
};

struct DepositGrid {
    double cell_size = 0.2;
    std::unordered_map<CellKey, CellDeposit, CellKeyHash> cells;

    double total_volume() const;
    Eigen::VectorXd per_filament_volume() const;
};

// Rasterizes every extruding move into the layer it belongs to (identified
// from z); throws when a deposit's height matches no layer.
DepositGrid simulate_deposition(const ParsedGcode &parsed, const MachineConfig &machine,
                                const PrintJob &job, double cell_size);

struct LayerFidelity {
    int layer = 0;
    double max_dev = 0.0;
    double p95_dev = 0.0;
    std::size_t cells = 0;
};

struct FidelityReport {
    double max_dev = 0.0;
    double p95_dev = 0.0;
    double mean_dev = 0.0;
    std::size_t cells = 0;
    std::size_t excluded_cells = 0;
    std::vector<LayerFidelity> per_layer;

    std::string to_text() const;
};

// Compares per-cell effective ratios (volume-weighted over all strata,
// shield cells excluded) against the field sampled at the cell center at
// mid-layer height. `exclude` may mask cells, e.g. near field
// discontinuities; it may be empty.
FidelityReport compare_to_field(const DepositGrid &grid, const FieldSpec &field, const PrintJob &job,
                                const std::function<bool(const Eigen::Vector3d &)> &exclude = {});

} // namespace stratamix

#endif
