#ifndef stratamix_pipeline_hpp_
#define stratamix_pipeline_hpp_

#include <cstdint>
#include <string>

#include "stratamix/field.hpp"
#include "stratamix/gcode.hpp"
#include "stratamix/machine.hpp"
#include "stratamix/strata.hpp"
#include "stratamix/toolpath.hpp"

namespace stratamix {

struct PipelineConfig {
    MachineConfig machine;
    OptimizerConfig optimizer;
    double resample_step = 0.0; // 0 = nozzle diameter / 2
    bool simplify_enabled = true;
    double simplify_xy_tol = 0.01;      // mm
    double simplify_alpha_tol = 0.005;  // unitless
    std::uint32_t ordering_seed = 0;
    bool optimize = true; // off = one stratum per pure filament, fixed order

    double effective_resample_step() const
    {
        return resample_step > 0.0 ? resample_step : 0.5 * machine.nozzle_diameter;
    }
};

struct LayerStats {
    int index = 0;
    int strata = 0;
    double optimize_ms = 0.0;
    bool unit_vector_fallback = false;
};

struct StatsReport {
    std::vector<LayerStats> per_layer;
    int layer_count = 0;
    int total_strata = 0;
    double optimize_ms_total = 0.0;
    double ordering_ms = 0.0;
    double estimated_time_s = 0.0;
    Eigen::VectorXd filament_used_mm3;

    std::string to_text() const;
};

struct PipelineResult {
    PrintJob job; // resampled, optimized, ordered, simplified
    GcodeProgram program;
    StatsReport stats;
};

// Full compile: resample, per-layer strata optimization (or the unit-vector
// baseline when cfg.optimize is off), bottom-up ordering, simplification,
// G-code emission. Stage failures carry the stage name and layer index.
PipelineResult run_pipeline(const PrintJob &input, const FieldSpec &field, const PipelineConfig &cfg);

// Strata counts, usage and time estimate of a finished pipeline run (wall
// times are filled by run_pipeline).
StatsReport stats_report(const PrintJob &job, const GcodeProgram &program);

// Side-by-side table of an optimized and an unoptimized run.
std::string comparison_table(const std::string &name, const StatsReport &optimized,
                             const StatsReport &baseline);

// "strata-config/1" JSON; missing keys keep their defaults.
PipelineConfig load_pipeline_config(const std::string &path);
void save_pipeline_config(const PipelineConfig &cfg, const std::string &path);

} // namespace stratamix

#endif
