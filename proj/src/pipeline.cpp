#include "stratamix/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"
#include "stratamix/ordering.hpp"

namespace stratamix {

using nlohmann::json;

namespace {

double ms_since(const std::chrono::steady_clock::time_point &t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

[[noreturn]] void rethrow_with_stage(const std::string &stage, int layer_index)
{
    const std::string where = "stage " + stage +
                              (layer_index >= 0 ? ", layer " + std::to_string(layer_index) : std::string());
    try {
        throw;
    } catch (const InputError &e) {
        throw InputError(where + ": " + e.what());
    } catch (const Error &e) {
        throw Error(where + ": " + e.what());
    }
}

std::string format_hms(double seconds)
{
    const long total = std::lround(seconds);
    const long h = total / 3600;
    const long m = (total % 3600) / 60;
    const long s = total % 60;
    std::string out;
    if (h > 0)
        out += std::to_string(h) + "h";
    if (h > 0 || m > 0)
        out += std::to_string(m) + "m";
    out += std::to_string(s) + "s";
    return out;
}

} // namespace

PipelineResult run_pipeline(const PrintJob &input, const FieldSpec &field, const PipelineConfig &cfg)
{
    cfg.machine.validate();
    cfg.optimizer.validate();
    if (field.filament_count != cfg.machine.filament_count)
        throw InputError("pipeline: field filament count (" + std::to_string(field.filament_count) +
                         ") does not match the machine (" + std::to_string(cfg.machine.filament_count) + ")");

    PipelineResult result;
    result.job = input;
    result.job.machine = cfg.machine;
    const double step = cfg.effective_resample_step();

    for (Layer &layer : result.job.layers) {
        try {
            layer = resample(layer, field, step);
        } catch (...) {
            rethrow_with_stage("resample", layer.index);
        }
    }

    for (Layer &layer : result.job.layers) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            layer.plan = cfg.optimize ? optimize_layer(layer, cfg.optimizer)
                                      : unit_vector_plan(layer, cfg.machine.filament_count);
        } catch (...) {
            rethrow_with_stage("optimize", layer.index);
        }
        LayerStats ls;
        ls.index = layer.index;
        ls.strata = layer.plan->strata_count;
        ls.optimize_ms = ms_since(t0);
        ls.unit_vector_fallback = layer.plan->unit_vector_fallback;
        result.stats.per_layer.push_back(ls);
    }

    {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            order_layers(result.job, cfg.ordering_seed);
        } catch (...) {
            rethrow_with_stage("order", -1);
        }
        result.stats.ordering_ms = ms_since(t0);
    }

    if (cfg.simplify_enabled) {
        for (Layer &layer : result.job.layers) {
            try {
                for (Toolpath &tp : layer.toolpaths)
                    tp = simplify(tp, cfg.simplify_xy_tol, cfg.simplify_alpha_tol);
            } catch (...) {
                rethrow_with_stage("simplify", layer.index);
            }
        }
    }

    try {
        result.program = emit_strata(result.job, cfg.machine);
    } catch (...) {
        rethrow_with_stage("emit", -1);
    }

    StatsReport counts = stats_report(result.job, result.program);
    counts.per_layer = result.stats.per_layer;
    counts.ordering_ms = result.stats.ordering_ms;
    for (const LayerStats &ls : counts.per_layer)
        counts.optimize_ms_total += ls.optimize_ms;
    result.stats = std::move(counts);
    return result;
}

StatsReport stats_report(const PrintJob &job, const GcodeProgram &program)
{
    StatsReport report;
    report.layer_count = static_cast<int>(job.layers.size());
    for (const Layer &layer : job.layers) {
        if (!layer.plan)
            throw Error("stats: layer " + std::to_string(layer.index) + " has no plan");
        LayerStats ls;
        ls.index = layer.index;
        ls.strata = layer.plan->strata_count;
        ls.unit_vector_fallback = layer.plan->unit_vector_fallback;
        report.per_layer.push_back(ls);
        report.total_strata += layer.plan->strata_count;
    }
    report.estimated_time_s = program.estimated_time;
    report.filament_used_mm3 = program.totals;
    return report;
}

std::string StatsReport::to_text() const
{
    std::string out;
    out += "layers: " + std::to_string(layer_count) + "\n";
    out += "total_strata: " + std::to_string(total_strata) + "\n";
    out += "mixture_optimization_ms: " + format_fixed(optimize_ms_total, 1) + "\n";
    out += "ordering_ms: " + format_fixed(ordering_ms, 2) + "\n";
    out += "estimated_print_time: " + format_hms(estimated_time_s) + " (" +
           format_fixed(estimated_time_s, 1) + " s)\n";
    if (filament_used_mm3.size() > 0) {
        out += "filament_used_mm3:";
        for (Eigen::Index i = 0; i < filament_used_mm3.size(); ++i)
            out += " " + format_fixed(filament_used_mm3[i], 2);
        out += "\n";
    }
    out += "per_layer (index strata optimize_ms fallback):\n";
    for (const LayerStats &ls : per_layer)
        out += "  " + std::to_string(ls.index) + " " + std::to_string(ls.strata) + " " +
               format_fixed(ls.optimize_ms, 2) + (ls.unit_vector_fallback ? " fallback" : "") + "\n";
    return out;
}

std::string comparison_table(const std::string &name, const StatsReport &optimized,
                             const StatsReport &baseline)
{
    std::string out;
    out += "model | mixtures | ordering | est. print time w/ (w/o) opt. | layers | strata w/ (w/o) opt.\n";
    out += name + " | " + format_fixed(optimized.optimize_ms_total, 1) + " ms | " +
           format_fixed(optimized.ordering_ms, 1) + " ms | " + format_hms(optimized.estimated_time_s) +
           " (" + format_hms(baseline.estimated_time_s) + ") | " + std::to_string(optimized.layer_count) +
           " | " + std::to_string(optimized.total_strata) + " (" + std::to_string(baseline.total_strata) +
           ")\n";
    return out;
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

static const char *kConfigFormat = "strata-config/1";

PipelineConfig load_pipeline_config(const std::string &path)
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
    if (!j.is_object() || j.value("format", "") != kConfigFormat)
        throw InputError(path + ": missing or unsupported format header (expected \"" + kConfigFormat + "\")");

    PipelineConfig cfg;
    try {
        if (j.contains("machine")) {
            const json &m = j["machine"];
            if (m.contains("filaments"))
                cfg.machine = default_machine(m["filaments"].get<int>());
            cfg.machine.nozzle_diameter = m.value("nozzle_diameter", cfg.machine.nozzle_diameter);
            cfg.machine.filament_diameter = m.value("filament_diameter", cfg.machine.filament_diameter);
            cfg.machine.layer_thickness = m.value("layer_thickness", cfg.machine.layer_thickness);
            cfg.machine.volumetric_rate = m.value("volumetric_rate", cfg.machine.volumetric_rate);
            cfg.machine.max_feedrate = m.value("max_feedrate", cfg.machine.max_feedrate);
            cfg.machine.travel_feedrate = m.value("travel_feedrate", cfg.machine.travel_feedrate);
            cfg.machine.retraction = m.value("retraction", cfg.machine.retraction);
            cfg.machine.purge_volume = m.value("purge_volume", cfg.machine.purge_volume);
            cfg.machine.shield_offset = m.value("shield_offset", cfg.machine.shield_offset);
            cfg.machine.linear_advance_factor = m.value("linear_advance_factor", cfg.machine.linear_advance_factor);
            cfg.machine.ratio_letters = m.value("ratio_letters", cfg.machine.ratio_letters);
        }
        if (j.contains("optimizer")) {
            const json &o = j["optimizer"];
            cfg.optimizer.epsilon = o.value("epsilon", cfg.optimizer.epsilon);
            cfg.optimizer.lambda = o.value("lambda", cfg.optimizer.lambda);
            cfg.optimizer.singular_tol = o.value("singular_tol", cfg.optimizer.singular_tol);
            cfg.optimizer.enumeration_cap = o.value("enumeration_cap", cfg.optimizer.enumeration_cap);
        }
        cfg.resample_step = j.value("resample_step", cfg.resample_step);
        if (j.contains("simplify")) {
            const json &s = j["simplify"];
            cfg.simplify_enabled = s.value("enabled", cfg.simplify_enabled);
            cfg.simplify_xy_tol = s.value("xy_tol", cfg.simplify_xy_tol);
            cfg.simplify_alpha_tol = s.value("alpha_tol", cfg.simplify_alpha_tol);
        }
        cfg.ordering_seed = j.value("ordering_seed", cfg.ordering_seed);
        cfg.optimize = j.value("optimize", cfg.optimize);
    } catch (const json::exception &e) {
        throw InputError(path + ": " + e.what());
    }
    cfg.machine.validate();
    cfg.optimizer.validate();
    return cfg;
}

void save_pipeline_config(const PipelineConfig &cfg, const std::string &path)
{
    json j;
    j["format"] = kConfigFormat;
    j["machine"] = {{"filaments", cfg.machine.filament_count},
                    {"nozzle_diameter", cfg.machine.nozzle_diameter},
                    {"filament_diameter", cfg.machine.filament_diameter},
                    {"layer_thickness", cfg.machine.layer_thickness},
                    {"volumetric_rate", cfg.machine.volumetric_rate},
                    {"max_feedrate", cfg.machine.max_feedrate},
                    {"travel_feedrate", cfg.machine.travel_feedrate},
                    {"retraction", cfg.machine.retraction},
                    {"purge_volume", cfg.machine.purge_volume},
                    {"shield_offset", cfg.machine.shield_offset},
                    {"linear_advance_factor", cfg.machine.linear_advance_factor},
                    {"ratio_letters", cfg.machine.ratio_letters}};
    j["optimizer"] = {{"epsilon", cfg.optimizer.epsilon},
                      {"lambda", cfg.optimizer.lambda},
                      {"singular_tol", cfg.optimizer.singular_tol},
                      {"enumeration_cap", cfg.optimizer.enumeration_cap}};
    j["resample_step"] = cfg.resample_step;
    j["simplify"] = {{"enabled", cfg.simplify_enabled},
                     {"xy_tol", cfg.simplify_xy_tol},
                     {"alpha_tol", cfg.simplify_alpha_tol}};
    j["ordering_seed"] = cfg.ordering_seed;
    j["optimize"] = cfg.optimize;

    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path);
    out << j.dump(1, '\t') << '\n';
}

} // namespace stratamix
