#include "stratamix/gcode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "stratamix/errors.hpp"
#include "stratamix/hull.hpp"

namespace stratamix {

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

std::string format_fixed(double value, int decimals)
{
    if (std::abs(value) < 0.5 * std::pow(10.0, -decimals))
        value = 0.0; // avoid "-0.000"
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

Eigen::VectorXd quantize_ratios(const Eigen::VectorXd &weights)
{
    const Eigen::Index k = weights.size();
    std::vector<long> units(k);
    std::vector<double> remainders(k);
    long total = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double scaled = weights[i] * 10000.0;
        units[i] = static_cast<long>(std::floor(scaled));
        remainders[i] = scaled - units[i];
        total += units[i];
    }
    long deficit = 10000 - total;
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (long d = 0; d < deficit; ++d)
        units[order[static_cast<std::size_t>(d % k)]] += 1;
    Eigen::VectorXd out(k);
    for (Eigen::Index i = 0; i < k; ++i)
        out[i] = units[i] / 10000.0;
    return out;
}

// ---------------------------------------------------------------------------
// Feedrate and timing
// ---------------------------------------------------------------------------

double compute_feedrate(double track_width, double thickness, const MachineConfig &machine)
{
    const double feed = machine.volumetric_rate / (track_width * thickness);
    return std::min(feed, machine.max_feedrate);
}

double estimate_print_time(const GcodeProgram &program)
{
    double seconds = 0.0;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    bool have_pos = false;
    double e = 0.0;
    for (const GcodeLine &line : program.lines) {
        switch (line.kind) {
        case GcodeKind::extrude: {
            if (have_pos && line.feedrate > 0.0)
                seconds += (line.target - pos).norm() / line.feedrate;
            pos = line.target;
            have_pos = true;
            e = line.e;
            break;
        }
        case GcodeKind::travel: {
            Eigen::Vector3d target(line.target.x(), line.target.y(), have_pos ? pos.z() : 0.0);
            if (have_pos && line.feedrate > 0.0)
                seconds += (target - pos).norm() / line.feedrate;
            pos = target;
            have_pos = true;
            break;
        }
        case GcodeKind::retract:
            if (line.feedrate > 0.0)
                seconds += std::abs(line.e - e) / line.feedrate;
            e = line.e;
            break;
        case GcodeKind::config:
        case GcodeKind::comment:
            break;
        }
    }
    return seconds;
}

// ---------------------------------------------------------------------------
// Ooze shield
// ---------------------------------------------------------------------------

std::optional<ShieldPlan> build_ooze_shield(const Layer &layer, const MachineConfig &machine)
{
    std::vector<Eigen::Vector2d> xy;
    for (const Toolpath &tp : layer.toolpaths)
        for (const PathVertex &v : tp.vertices)
            xy.push_back(v.position.head<2>());
    if (xy.empty())
        return std::nullopt;

    const std::vector<Eigen::Vector2d> hull = convex_hull_polygon(xy);
    const double r = machine.shield_offset;

    Toolpath shield;
    shield.closed = true;
    shield.role = PathRole::shield;
    shield.track_width = machine.nozzle_diameter;

    auto push = [&](const Eigen::Vector2d &p) {
        const Eigen::Vector3d v3(p.x(), p.y(), layer.z_top);
        if (!shield.vertices.empty() && (shield.vertices.back().position - v3).norm() <= 1e-6)
            return;
        PathVertex v;
        v.position = v3;
        shield.vertices.push_back(std::move(v));
    };

    const int n = static_cast<int>(hull.size());
    if (n == 1) {
        // Degenerate: ring around a point.
        for (int i = 0; i < 24; ++i) {
            const double a = 2.0 * std::numbers::pi * i / 24;
            push(hull[0] + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
        }
    } else {
        // Rounded offset: straight segments between per-vertex corner arcs.
        auto outward = [](const Eigen::Vector2d &dir) { return Eigen::Vector2d(dir.y(), -dir.x()); };
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d prev = hull[(i + n - 1) % n];
            const Eigen::Vector2d cur = hull[i];
            const Eigen::Vector2d next = hull[(i + 1) % n];
            const Eigen::Vector2d n_in = outward((cur - prev).normalized());
            const Eigen::Vector2d n_out = outward((next - cur).normalized());
            const double a0 = std::atan2(n_in.y(), n_in.x());
            double sweep = std::atan2(n_out.y(), n_out.x()) - a0;
            // The hull is counter-clockwise, so the exterior turn is clockwise
            // in this normal convention; normalize the sweep into [0, 2pi).
            while (sweep < 0.0)
                sweep += 2.0 * std::numbers::pi;
            const int steps = std::max(1, static_cast<int>(std::ceil(sweep / (std::numbers::pi / 12))));
            for (int s = 0; s <= steps; ++s) {
                const double a = a0 + sweep * s / steps;
                push(cur + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
            }
        }
    }
    // Drop a duplicated closing vertex.
    if (shield.vertices.size() > 2 &&
        (shield.vertices.front().position - shield.vertices.back().position).norm() <= 1e-6)
        shield.vertices.pop_back();
    if (shield.vertices.size() < 2)
        return std::nullopt;

    ShieldPlan plan;
    plan.path = std::move(shield);
    plan.purge_track_length = machine.purge_volume / (machine.nozzle_diameter * layer.thickness);
    return plan;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace {

struct Emitter {
    const MachineConfig &machine;
    GcodeProgram program;
    double cross_section;

    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    bool have_pos = false;
    double e = 0.0;
    bool retracted = true; // the nozzle starts unprimed; the first unretract primes it

    explicit Emitter(const MachineConfig &m) : machine(m), cross_section(m.filament_cross_section())
    {
        program.totals = Eigen::VectorXd::Zero(m.filament_count);
        program.part_totals = Eigen::VectorXd::Zero(m.filament_count);
    }

    void comment(const std::string &text)
    {
        GcodeLine line;
        line.kind = GcodeKind::comment;
        line.text = text;
        program.lines.push_back(std::move(line));
    }

    void config(const std::string &text)
    {
        GcodeLine line;
        line.kind = GcodeKind::config;
        line.text = text;
        program.lines.push_back(std::move(line));
    }

    void retract()
    {
        if (retracted)
            return;
        e -= machine.retraction;
        GcodeLine line;
        line.kind = GcodeKind::retract;
        line.e = e;
        line.feedrate = kRetractFeedrate;
        program.lines.push_back(std::move(line));
        retracted = true;
    }

    void unretract()
    {
        if (!retracted)
            return;
        e += machine.retraction;
        GcodeLine line;
        line.kind = GcodeKind::retract;
        line.e = e;
        line.feedrate = kRetractFeedrate;
        program.lines.push_back(std::move(line));
        retracted = false;
    }

    void travel(const Eigen::Vector2d &xy)
    {
        if (have_pos && (pos.head<2>() - xy).norm() <= 1e-9)
            return;
        retract();
        GcodeLine line;
        line.kind = GcodeKind::travel;
        line.target = Eigen::Vector3d(xy.x(), xy.y(), pos.z());
        line.feedrate = machine.travel_feedrate;
        program.lines.push_back(std::move(line));
        pos.head<2>() = xy;
        have_pos = true;
    }

    // Extruding-format move; a zero volume positions the nozzle (sets z at a
    // path start) without depositing.
    void extrude(const Eigen::Vector3d &target, double volume, double feedrate,
                 const Eigen::VectorXd &ratios, bool shield)
    {
        unretract();
        const double delta = volume / cross_section;
        e += delta;
        GcodeLine line;
        line.kind = GcodeKind::extrude;
        line.target = target;
        line.e = e;
        line.e_delta = delta;
        line.feedrate = feedrate;
        line.ratios = ratios;
        line.shield = shield;
        program.lines.push_back(std::move(line));
        program.totals += volume * ratios;
        if (!shield)
            program.part_totals += volume * ratios;
        pos = target;
        have_pos = true;
    }
};

// Cumulative nozzle height at a vertex after printing the first
// `order_pos + 1` strata; the final stratum aligns exactly with the layer
// top boundary.
double stratum_z(const Layer &layer, const std::vector<int> &order, int order_pos, const PathVertex &v)
{
    if (order_pos + 1 == static_cast<int>(order.size()))
        return layer.z_top;
    double cumulative = 0.0;
    for (int m = 0; m <= order_pos; ++m)
        cumulative += v.alphas[order[m]];
    const double base = layer.z_top - layer.thickness;
    return std::min(base + cumulative * layer.thickness, layer.z_top);
}

// Purge state that persists across the strata of one layer: deposition
// continues around the loop instead of re-covering the same arc.
struct ShieldCursor {
    double arc = 0.0;
};

void emit_purge(Emitter &em, const Layer &layer, const ShieldPlan &shield, ShieldCursor &cursor,
                const Eigen::VectorXd &ratios)
{
    const Toolpath &loop = shield.path;
    const double loop_len = loop.length();
    const int segments = loop.segment_count();
    const double feed = compute_feedrate(loop.track_width, layer.thickness, em.machine);

    // Locate the cursor segment.
    double remaining_skip = std::fmod(cursor.arc, loop_len);
    int seg = 0;
    while (remaining_skip > 0.0) {
        const auto [i, j] = loop.segment(seg);
        const double len = (loop.vertices[j].position - loop.vertices[i].position).head<2>().norm();
        if (remaining_skip < len)
            break;
        remaining_skip -= len;
        seg = (seg + 1) % segments;
    }

    auto point_at = [&](int s, double t) {
        const auto [i, j] = loop.segment(s);
        return (loop.vertices[i].position + t * (loop.vertices[j].position - loop.vertices[i].position)).eval();
    };

    double to_purge = shield.purge_track_length;
    const auto [ci, cj] = loop.segment(seg);
    double seg_len = (loop.vertices[cj].position - loop.vertices[ci].position).head<2>().norm();
    double seg_t = seg_len > 0.0 ? remaining_skip / seg_len : 0.0;

    Eigen::Vector3d start = point_at(seg, seg_t);
    em.travel(start.head<2>());
    em.extrude(start, 0.0, feed, ratios, true); // set z on the shield

    while (to_purge > 1e-9) {
        const auto [i, j] = loop.segment(seg);
        seg_len = (loop.vertices[j].position - loop.vertices[i].position).head<2>().norm();
        const double avail = seg_len * (1.0 - seg_t);
        const double step = std::min(avail, to_purge);
        const double t_next = seg_t + step / seg_len;
        const Eigen::Vector3d target = point_at(seg, t_next);
        em.extrude(target, loop.track_width * layer.thickness * step, feed, ratios, true);
        to_purge -= step;
        if (t_next >= 1.0 - 1e-12) {
            seg = (seg + 1) % segments;
            seg_t = 0.0;
        } else {
            seg_t = t_next;
        }
    }
    cursor.arc = std::fmod(cursor.arc + shield.purge_track_length, loop_len);
    em.retract();
}

PathVertex lerp_vertex(const PathVertex &a, const PathVertex &b, double t)
{
    PathVertex v;
    v.position = a.position + t * (b.position - a.position);
    v.alphas = a.alphas + t * (b.alphas - a.alphas);
    return v;
}

void emit_stratum_paths(Emitter &em, const Layer &layer, const std::vector<int> &order, int order_pos,
                        const Eigen::VectorXd &ratios)
{
    const int stratum = order[order_pos];
    for (const Toolpath &tp : layer.toolpaths) {
        const double width = tp.track_width;
        bool positioned = false;
        for (int s = 0; s < tp.segment_count(); ++s) {
            const auto [i, j] = tp.segment(s);
            const PathVertex &sv0 = tp.vertices[i];
            const PathVertex &sv1 = tp.vertices[j];
            // Keep the thickness ramp per move small; simplification may
            // have collapsed a long linear ramp into one segment.
            const double span = std::abs(sv1.alphas[stratum] - sv0.alphas[stratum]);
            const int pieces = std::max(1, static_cast<int>(std::ceil(span / kMaxAlphaSpanPerMove)));
            for (int p = 0; p < pieces; ++p) {
                const PathVertex v0 = lerp_vertex(sv0, sv1, static_cast<double>(p) / pieces);
                const PathVertex v1 = lerp_vertex(sv0, sv1, static_cast<double>(p + 1) / pieces);
                const double thickness =
                    0.5 * (v0.alphas[stratum] + v1.alphas[stratum]) * layer.thickness;
                if (thickness < kMinStratumThickness) {
                    // Vanishing height: interrupt deposition and move on.
                    em.retract();
                    positioned = false;
                    continue;
                }
                const double feed = compute_feedrate(width, thickness, em.machine);
                if (!positioned) {
                    em.travel(v0.position.head<2>());
                    const Eigen::Vector3d start(v0.position.x(), v0.position.y(),
                                                stratum_z(layer, order, order_pos, v0));
                    em.extrude(start, 0.0, feed, ratios, false);
                    positioned = true;
                }
                const double len = (v1.position - v0.position).head<2>().norm();
                const Eigen::Vector3d target(v1.position.x(), v1.position.y(),
                                             stratum_z(layer, order, order_pos, v1));
                em.extrude(target, width * thickness * len, feed, ratios, false);
            }
        }
        em.retract(); // end-of-path interruption
    }
}

std::string describe_mixtures(const StrataPlan &plan)
{
    std::string out = "[";
    for (std::size_t i = 0; i < plan.base_mixtures.size(); ++i) {
        if (i)
            out += ",";
        out += "[";
        const Eigen::VectorXd q = quantize_ratios(plan.base_mixtures[i].weights);
        for (Eigen::Index c = 0; c < q.size(); ++c) {
            if (c)
                out += ",";
            out += format_fixed(q[c], 4);
        }
        out += "]";
    }
    out += "]";
    return out;
}

} // namespace

GcodeProgram emit_strata(const PrintJob &job, const MachineConfig &machine)
{
    machine.validate();
    for (const Layer &layer : job.layers) {
        if (!layer.plan)
            throw Error("emit_strata: layer " + std::to_string(layer.index) + " has no strata plan");
        const StrataPlan &plan = *layer.plan;
        if (static_cast<int>(plan.order.size()) != plan.strata_count)
            throw Error("emit_strata: layer " + std::to_string(layer.index) + " has no print order");
        if (layer.thickness > machine.nozzle_diameter + 1e-12)
            throw InputError("emit_strata: layer thickness exceeds the nozzle diameter");
        for (const Toolpath &tp : layer.toolpaths)
            for (const PathVertex &v : tp.vertices)
                if (v.alphas.size() != plan.strata_count)
                    throw Error("emit_strata: vertex alphas do not match the strata plan");
    }

    Emitter em(machine);
    em.comment("stratamix mixing G-code");
    em.comment("machine: filaments=" + std::to_string(machine.filament_count) +
               " nozzle=" + format_fixed(machine.nozzle_diameter, 3) +
               " filament_diameter=" + format_fixed(machine.filament_diameter, 3) +
               " layer_thickness=" + format_fixed(machine.layer_thickness, 3) +
               " volumetric_rate=" + format_fixed(machine.volumetric_rate, 3) +
               " ratio_letters=" + machine.ratio_letters);
    for (const Layer &layer : job.layers) {
        const StrataPlan &plan = *layer.plan;
        std::string order_str = "[";
        for (std::size_t i = 0; i < plan.order.size(); ++i) {
            if (i)
                order_str += ",";
            order_str += std::to_string(plan.order[i] + 1);
        }
        order_str += "]";
        em.comment("plan: layer=" + std::to_string(layer.index) + " z_top=" + format_fixed(layer.z_top, 3) +
                   " strata=" + std::to_string(plan.strata_count) + " order=" + order_str +
                   " mixtures=" + describe_mixtures(plan));
    }
    em.config("M900 K" + format_fixed(machine.linear_advance_factor, 3));

    for (const Layer &layer : job.layers) {
        em.comment("LAYER:" + std::to_string(layer.index));
        const StrataPlan &plan = *layer.plan;
        const std::optional<ShieldPlan> shield = build_ooze_shield(layer, machine);
        if (!shield)
            continue;
        ShieldCursor cursor;
        for (int k = 0; k < plan.strata_count; ++k) {
            em.comment("STRATUM:" + std::to_string(k + 1) + "/" + std::to_string(plan.strata_count));
            const Eigen::VectorXd ratios = quantize_ratios(plan.base_mixtures[plan.order[k]].weights);
            em.comment("TYPE:shield");
            emit_purge(em, layer, *shield, cursor, ratios);
            em.comment("TYPE:part");
            emit_stratum_paths(em, layer, plan.order, k, ratios);
        }
    }
    em.retract();

    std::string totals = "filament_used_mm3:";
    for (int i = 0; i < machine.filament_count; ++i)
        totals += std::string(" ") + machine.ratio_letters[i] + "=" + format_fixed(em.program.totals[i], 3);
    em.comment(totals);
    em.program.estimated_time = estimate_print_time(em.program);
    em.comment("estimated_time_s: " + format_fixed(em.program.estimated_time, 1));
    return std::move(em.program);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_gcode(const GcodeProgram &program, const MachineConfig &machine)
{
    std::string out;
    out.reserve(program.lines.size() * 48);
    for (const GcodeLine &line : program.lines) {
        switch (line.kind) {
        case GcodeKind::comment:
            out += ";";
            out += line.text;
            break;
        case GcodeKind::config:
            out += line.text;
            break;
        case GcodeKind::travel:
            out += "G1 X" + format_fixed(line.target.x(), 3) + " Y" + format_fixed(line.target.y(), 3) +
                   " F" + format_fixed(line.feedrate * 60.0, 0);
            break;
        case GcodeKind::retract:
            out += "G1 E" + format_fixed(line.e, 5) + " F" + format_fixed(line.feedrate * 60.0, 0);
            break;
        case GcodeKind::extrude: {
            out += "G1 X" + format_fixed(line.target.x(), 3) + " Y" + format_fixed(line.target.y(), 3) +
                   " Z" + format_fixed(line.target.z(), 3) + " E" + format_fixed(line.e, 5) + " F" +
                   format_fixed(line.feedrate * 60.0, 0);
            for (Eigen::Index i = 0; i < line.ratios.size(); ++i) {
                out += ' ';
                out += machine.ratio_letters[static_cast<std::size_t>(i)];
                out += format_fixed(line.ratios[i], 4);
            }
            break;
        }
        }
        out += '\n';
    }
    return out;
}

void save_gcode(const GcodeProgram &program, const MachineConfig &machine, const std::string &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path);
    out << render_gcode(program, machine);
}

} // namespace stratamix
