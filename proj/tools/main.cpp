#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stratamix/errors.hpp"
#include "stratamix/pipeline.hpp"
#include "stratamix/validator.hpp"

using namespace stratamix;

namespace {

// Flag values mirroring the config-file keys; only flags the user passed
// override the file.
struct Overrides {
    std::optional<int> filaments;
    std::optional<double> nozzle_diameter;
    std::optional<double> filament_diameter;
    std::optional<double> layer_thickness;
    std::optional<double> volumetric_rate;
    std::optional<double> max_feedrate;
    std::optional<double> travel_feedrate;
    std::optional<double> retraction;
    std::optional<double> purge_volume;
    std::optional<double> shield_offset;
    std::optional<double> linear_advance_factor;
    std::optional<std::string> ratio_letters;
    std::optional<double> epsilon;
    std::optional<double> lambda;
    std::optional<double> singular_tol;
    std::optional<std::uint64_t> enumeration_cap;
    std::optional<double> resample_step;
    std::optional<double> simplify_xy_tol;
    std::optional<double> simplify_alpha_tol;
    bool no_simplify = false;
    std::optional<std::uint32_t> ordering_seed;
    bool no_optimize = false;
};

void add_config_flags(CLI::App *cmd, std::string &config_path, Overrides &o)
{
    cmd->add_option("--config", config_path, "pipeline config file (strata-config/1)");
    cmd->add_option("--filaments", o.filaments, "filament count K (2..5)");
    cmd->add_option("--nozzle-diameter", o.nozzle_diameter, "nozzle diameter, mm");
    cmd->add_option("--filament-diameter", o.filament_diameter, "filament diameter, mm");
    cmd->add_option("--layer-thickness", o.layer_thickness, "layer thickness, mm");
    cmd->add_option("--volumetric-rate", o.volumetric_rate, "extrusion rate, mm^3/s");
    cmd->add_option("--max-feedrate", o.max_feedrate, "maximum print feedrate, mm/s");
    cmd->add_option("--travel-feedrate", o.travel_feedrate, "travel feedrate, mm/s");
    cmd->add_option("--retraction", o.retraction, "retraction length, mm");
    cmd->add_option("--purge-volume", o.purge_volume, "shield purge volume per transition, mm^3");
    cmd->add_option("--shield-offset", o.shield_offset, "ooze shield offset from the part, mm");
    cmd->add_option("--linear-advance", o.linear_advance_factor, "firmware linear-advance K factor");
    cmd->add_option("--ratio-letters", o.ratio_letters, "ratio word letters, e.g. ABC");
    cmd->add_option("--epsilon", o.epsilon, "PCA variance threshold");
    cmd->add_option("--lambda", o.lambda, "barycentric feasibility tolerance");
    cmd->add_option("--singular-tol", o.singular_tol, "hyperplane intersection conditioning threshold");
    cmd->add_option("--enumeration-cap", o.enumeration_cap, "max hyperplane combinations (0=unlimited)");
    cmd->add_option("--resample-step", o.resample_step, "resampling step, mm (0 = nozzle/2)");
    cmd->add_option("--xy-tol", o.simplify_xy_tol, "simplification xy tolerance, mm");
    cmd->add_option("--alpha-tol", o.simplify_alpha_tol, "simplification alpha tolerance");
    cmd->add_flag("--no-simplify", o.no_simplify, "skip path simplification");
    cmd->add_option("--seed", o.ordering_seed, "first-layer ordering seed");
    cmd->add_flag("--no-optimize", o.no_optimize, "one stratum per pure filament (baseline)");
}

PipelineConfig resolve_config(const std::string &config_path, const Overrides &o)
{
    PipelineConfig cfg;
    if (!config_path.empty())
        cfg = load_pipeline_config(config_path);
    if (o.filaments)
        cfg.machine = default_machine(*o.filaments);
    if (o.nozzle_diameter)
        cfg.machine.nozzle_diameter = *o.nozzle_diameter;
    if (o.filament_diameter)
        cfg.machine.filament_diameter = *o.filament_diameter;
    if (o.layer_thickness)
        cfg.machine.layer_thickness = *o.layer_thickness;
    if (o.volumetric_rate)
        cfg.machine.volumetric_rate = *o.volumetric_rate;
    if (o.max_feedrate)
        cfg.machine.max_feedrate = *o.max_feedrate;
    if (o.travel_feedrate)
        cfg.machine.travel_feedrate = *o.travel_feedrate;
    if (o.retraction)
        cfg.machine.retraction = *o.retraction;
    if (o.purge_volume)
        cfg.machine.purge_volume = *o.purge_volume;
    if (o.shield_offset)
        cfg.machine.shield_offset = *o.shield_offset;
    if (o.linear_advance_factor)
        cfg.machine.linear_advance_factor = *o.linear_advance_factor;
    if (o.ratio_letters)
        cfg.machine.ratio_letters = *o.ratio_letters;
    if (o.epsilon)
        cfg.optimizer.epsilon = *o.epsilon;
    if (o.lambda)
        cfg.optimizer.lambda = *o.lambda;
    if (o.singular_tol)
        cfg.optimizer.singular_tol = *o.singular_tol;
    if (o.enumeration_cap)
        cfg.optimizer.enumeration_cap = *o.enumeration_cap;
    if (o.resample_step)
        cfg.resample_step = *o.resample_step;
    if (o.simplify_xy_tol)
        cfg.simplify_xy_tol = *o.simplify_xy_tol;
    if (o.simplify_alpha_tol)
        cfg.simplify_alpha_tol = *o.simplify_alpha_tol;
    if (o.no_simplify)
        cfg.simplify_enabled = false;
    if (o.ordering_seed)
        cfg.ordering_seed = *o.ordering_seed;
    if (o.no_optimize)
        cfg.optimize = false;
    cfg.machine.validate();
    cfg.optimizer.validate();
    return cfg;
}

void write_text(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path);
    out << text;
}

std::string read_text(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"stratamix: color-mixing toolpath compiler for multi-filament printers"};
    app.require_subcommand(1);

    // ---- plan ----
    auto *plan = app.add_subcommand("plan", "full compile: toolpaths + field -> mixing G-code");
    std::string plan_input, plan_field, plan_output, plan_report, plan_plans, plan_config;
    Overrides plan_o;
    plan->add_option("-i,--input", plan_input, "toolpath file (strata-toolpaths/1)")->required();
    plan->add_option("--field", plan_field, "field file (strata-field/1)")->required();
    plan->add_option("-o,--output", plan_output, "output G-code path")->required();
    plan->add_option("--report", plan_report, "write a stats report here");
    plan->add_option("--plans", plan_plans, "write the per-layer strata plans here");
    add_config_flags(plan, plan_config, plan_o);

    // ---- optimize ----
    auto *opt = app.add_subcommand("optimize", "per-layer strata plans only");
    std::string opt_input, opt_field, opt_output, opt_config;
    Overrides opt_o;
    opt->add_option("-i,--input", opt_input, "toolpath file")->required();
    opt->add_option("--field", opt_field, "field file")->required();
    opt->add_option("-o,--output", opt_output, "strata plan report path")->required();
    add_config_flags(opt, opt_config, opt_o);

    // ---- validate ----
    auto *val = app.add_subcommand("validate", "virtual-printer check of emitted G-code");
    std::string val_gcode, val_toolpaths, val_field, val_config, val_report;
    Overrides val_o;
    double val_cell = 0.2, val_p95_budget = 0.02, val_max_budget = 0.0;
    val->add_option("-i,--input", val_gcode, "G-code file to validate")->required();
    val->add_option("--toolpaths", val_toolpaths, "toolpath file (layer table)")->required();
    val->add_option("--field", val_field, "field file")->required();
    val->add_option("--cell-size", val_cell, "grid cell size, mm");
    val->add_option("--p95-budget", val_p95_budget, "fail when p95 deviation exceeds this");
    val->add_option("--max-budget", val_max_budget, "fail when max deviation exceeds this (0 = off)");
    val->add_option("--report", val_report, "write the fidelity report here");
    add_config_flags(val, val_config, val_o);

    // ---- stats ----
    auto *stats = app.add_subcommand("stats", "optimized vs unoptimized comparison report");
    std::string stats_input, stats_field, stats_config, stats_name = "job", stats_report_path;
    Overrides stats_o;
    stats->add_option("-i,--input", stats_input, "toolpath file")->required();
    stats->add_option("--field", stats_field, "field file")->required();
    stats->add_option("--name", stats_name, "row label");
    stats->add_option("--report", stats_report_path, "write the report here (default stdout)");
    add_config_flags(stats, stats_config, stats_o);

    // ---- gen-test-shape ----
    auto *gen = app.add_subcommand("gen-test-shape", "write a built-in test shape as a toolpath file");
    std::string gen_output, gen_config;
    Overrides gen_o;
    TestShape gen_shape = TestShape::extruded_rectangle;
    TestShapeParams gen_params;
    std::map<std::string, TestShape> shape_names{{"rectangle", TestShape::extruded_rectangle},
                                                 {"cylinder", TestShape::cylinder},
                                                 {"disc", TestShape::disc}};
    gen->add_option("--shape", gen_shape, "shape kind")
        ->transform(CLI::CheckedTransformer(shape_names, CLI::ignore_case))
        ->required();
    gen->add_option("--size-x", gen_params.size_x, "rectangle x extent, mm");
    gen->add_option("--size-y", gen_params.size_y, "rectangle y extent, mm");
    gen->add_option("--radius", gen_params.radius, "cylinder/disc radius, mm");
    gen->add_option("--height", gen_params.height, "extruded height, mm");
    gen->add_option("-o,--output", gen_output, "toolpath file path")->required();
    add_config_flags(gen, gen_config, gen_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        if (*plan) {
            const PipelineConfig cfg = resolve_config(plan_config, plan_o);
            const PrintJob job = load_toolpaths(plan_input, cfg.machine);
            const FieldSpec field = load_field(plan_field);
            const PipelineResult result = run_pipeline(job, field, cfg);
            write_text(plan_output, render_gcode(result.program, cfg.machine));
            if (!plan_report.empty())
                write_text(plan_report, result.stats.to_text());
            if (!plan_plans.empty())
                save_plans(result.job, plan_plans);
            std::cout << "wrote " << plan_output << " (" << result.stats.total_strata << " strata, est. "
                      << format_fixed(result.stats.estimated_time_s, 1) << " s)\n";
        } else if (*opt) {
            const PipelineConfig cfg = resolve_config(opt_config, opt_o);
            const PrintJob job = load_toolpaths(opt_input, cfg.machine);
            const FieldSpec field = load_field(opt_field);
            PipelineResult result = run_pipeline(job, field, cfg);
            save_plans(result.job, opt_output);
            std::cout << "wrote " << opt_output << " (" << result.stats.total_strata << " strata)\n";
        } else if (*val) {
            const PipelineConfig cfg = resolve_config(val_config, val_o);
            const PrintJob job = load_toolpaths(val_toolpaths, cfg.machine);
            const FieldSpec field = load_field(val_field);
            const ParsedGcode parsed = parse_gcode(read_text(val_gcode));
            const DepositGrid grid = simulate_deposition(parsed, cfg.machine, job, val_cell);
            const FidelityReport report = compare_to_field(grid, field, job);
            const std::string text = report.to_text();
            if (!val_report.empty())
                write_text(val_report, text);
            std::cout << text;
            if (report.p95_dev > val_p95_budget)
                throw ValidationError("p95 deviation " + format_fixed(report.p95_dev, 5) +
                                      " exceeds budget " + format_fixed(val_p95_budget, 5));
            if (val_max_budget > 0.0 && report.max_dev > val_max_budget)
                throw ValidationError("max deviation " + format_fixed(report.max_dev, 5) +
                                      " exceeds budget " + format_fixed(val_max_budget, 5));
            std::cout << "validation passed\n";
        } else if (*stats) {
            PipelineConfig cfg = resolve_config(stats_config, stats_o);
            const PrintJob job = load_toolpaths(stats_input, cfg.machine);
            const FieldSpec field = load_field(stats_field);
            cfg.optimize = true;
            const PipelineResult optimized = run_pipeline(job, field, cfg);
            cfg.optimize = false;
            const PipelineResult baseline = run_pipeline(job, field, cfg);
            std::string text = comparison_table(stats_name, optimized.stats, baseline.stats);
            text += "\noptimized:\n" + optimized.stats.to_text();
            text += "\nunoptimized:\n" + baseline.stats.to_text();
            if (!stats_report_path.empty())
                write_text(stats_report_path, text);
            else
                std::cout << text;
        } else if (*gen) {
            const PipelineConfig cfg = resolve_config(gen_config, gen_o);
            const PrintJob job =
                generate_test_shape(gen_shape, gen_params, cfg.machine.layer_thickness, cfg.machine);
            save_toolpaths(job, gen_output);
            std::cout << "wrote " << gen_output << " (" << job.layers.size() << " layers)\n";
        }
    } catch (const ValidationError &e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 2;
    } catch (const InputError &e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
