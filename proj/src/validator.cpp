#include "stratamix/validator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "stratamix/errors.hpp"
#include "stratamix/gcode.hpp"

namespace stratamix {

namespace {

const std::string kRatioAlphabet = "ABCDH";

[[noreturn]] void parse_fail(int line_no, const std::string &msg)
{
    throw InputError("gcode line " + std::to_string(line_no) + ": " + msg);
}

double parse_number(const char *begin, const char *end, int line_no)
{
    double value = 0.0;
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        parse_fail(line_no, "malformed number \"" + std::string(begin, end) + "\"");
    return value;
}

struct Word {
    char letter;
    double value;
};

std::vector<Word> split_words(const std::string &line, int line_no)
{
    std::vector<Word> words;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ') {
            ++i;
            continue;
        }
        const char letter = line[i];
        if (!std::isalpha(static_cast<unsigned char>(letter)))
            parse_fail(line_no, std::string("unexpected character '") + letter + "'");
        std::size_t j = i + 1;
        while (j < line.size() && line[j] != ' ')
            ++j;
        words.push_back({letter, parse_number(line.data() + i + 1, line.data() + j, line_no)});
        i = j;
    }
    return words;
}

} // namespace

ParsedGcode parse_gcode(const std::string &text)
{
    ParsedGcode out;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    double e = 0.0;
    double feed = 0.0;
    bool shield = false;
    int layer_marker = -1;
    int stratum_pos = 0;
    int stratum_count = 0;

    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
        start = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        // Inline comment / full-line comment.
        if (const std::size_t sc = line.find(';'); sc != std::string::npos) {
            const std::string comment = line.substr(sc + 1);
            line = line.substr(0, sc);
            if (comment.rfind("TYPE:", 0) == 0)
                shield = comment.substr(5) == "shield";
            else if (comment.rfind("LAYER:", 0) == 0)
                layer_marker = std::atoi(comment.c_str() + 6);
            else if (comment.rfind("STRATUM:", 0) == 0) {
                const std::string spec = comment.substr(8);
                const std::size_t slash = spec.find('/');
                if (slash != std::string::npos) {
                    stratum_pos = std::atoi(spec.substr(0, slash).c_str());
                    stratum_count = std::atoi(spec.c_str() + slash + 1);
                }
            }
        }
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        if (line.empty())
            continue;

        const std::vector<Word> words = split_words(line, line_no);
        if (words.empty())
            continue;
        ParsedMove move;
        move.line_number = line_no;
        move.shield = shield;
        move.layer_marker = layer_marker;
        move.stratum_pos = stratum_pos;
        move.stratum_count = stratum_count;

        if (words[0].letter == 'M') {
            move.kind = ParsedMove::Kind::config;
            out.moves.push_back(std::move(move));
            continue;
        }
        if (words[0].letter != 'G' || words[0].value != 1.0)
            parse_fail(line_no, "unsupported command \"" + line + "\"");

        bool has_x = false, has_y = false, has_e = false;
        double x = pos.x(), y = pos.y(), z = pos.z(), e_target = e;
        std::vector<std::pair<char, double>> ratio_words;
        for (std::size_t w = 1; w < words.size(); ++w) {
            switch (words[w].letter) {
            case 'X': x = words[w].value; has_x = true; break;
            case 'Y': y = words[w].value; has_y = true; break;
            case 'Z': z = words[w].value; break;
            case 'E': e_target = words[w].value; has_e = true; break;
            case 'F': feed = words[w].value / 60.0; break;
            default:
                if (kRatioAlphabet.find(words[w].letter) == std::string::npos)
                    parse_fail(line_no, std::string("unknown word '") + words[w].letter + "'");
                ratio_words.emplace_back(words[w].letter, words[w].value);
            }
        }

        move.feedrate = feed;
        if (has_x || has_y) {
            if (has_e) {
                move.kind = ParsedMove::Kind::extrude;
                if (e_target < e - 1e-12)
                    parse_fail(line_no, "non-monotone E on extruding move");
                if (ratio_words.empty())
                    parse_fail(line_no, "extruding move without ratio words");
                std::string letters;
                Eigen::VectorXd ratios(ratio_words.size());
                double sum = 0.0;
                for (std::size_t r = 0; r < ratio_words.size(); ++r) {
                    letters += ratio_words[r].first;
                    ratios[static_cast<Eigen::Index>(r)] = ratio_words[r].second;
                    if (ratio_words[r].second < 0.0)
                        parse_fail(line_no, "negative ratio word");
                    sum += ratio_words[r].second;
                }
                if (std::abs(sum - 1.0) > 1e-4)
                    parse_fail(line_no, "ratio words sum to " + format_fixed(sum, 4) + ", expected 1");
                if (out.ratio_letters.empty())
                    out.ratio_letters = letters;
                else if (out.ratio_letters != letters)
                    parse_fail(line_no, "inconsistent ratio words (expected " + out.ratio_letters + ")");
                move.ratios = std::move(ratios);
                move.e_delta = e_target - e;
                move.target = Eigen::Vector3d(x, y, z);
                pos = move.target;
                e = e_target;
            } else {
                move.kind = ParsedMove::Kind::travel;
                if (!ratio_words.empty())
                    parse_fail(line_no, "travel move with ratio words");
                move.target = Eigen::Vector3d(x, y, pos.z()); // z unchanged on travels
                pos.head<2>() = Eigen::Vector2d(x, y);
            }
        } else if (has_e) {
            move.kind = ParsedMove::Kind::retract;
            move.e_delta = e_target - e;
            move.target = pos;
            e = e_target;
        } else {
            parse_fail(line_no, "move without axes");
        }
        move.e_abs = e;
        out.moves.push_back(std::move(move));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deposition simulation
// ---------------------------------------------------------------------------

double DepositGrid::total_volume() const
{
    double total = 0.0;
    for (const auto &[key, cell] : cells)
        total += cell.volumes.sum();
    return total;
}

Eigen::VectorXd DepositGrid::per_filament_volume() const
{
    Eigen::VectorXd total;
    for (const auto &[key, cell] : cells) {
        if (total.size() == 0)
            total = Eigen::VectorXd::Zero(cell.volumes.size());
        total += cell.volumes;
    }
    return total;
}

namespace {

int layer_from_z(const PrintJob &job, double z, int line_no)
{
    for (std::size_t i = 0; i < job.layers.size(); ++i) {
        const Layer &layer = job.layers[i];
        if (z > layer.z_top - layer.thickness - 1e-6 && z <= layer.z_top + 1e-6)
            return static_cast<int>(i);
    }
    throw InputError("gcode line " + std::to_string(line_no) + ": deposit height " + format_fixed(z, 4) +
                     " is not attributable to any layer");
}

} // namespace

DepositGrid simulate_deposition(const ParsedGcode &parsed, const MachineConfig &machine,
                                const PrintJob &job, double cell_size)
{
    if (cell_size <= 0.0)
        throw InputError("simulate: cell_size must be positive");
    if (!parsed.ratio_letters.empty() && parsed.ratio_letters != machine.ratio_letters)
        throw InputError("simulate: gcode ratio letters \"" + parsed.ratio_letters +
                         "\" do not match the machine (\"" + machine.ratio_letters + "\")");

    DepositGrid grid;
    grid.cell_size = cell_size;
    const double cross_section = machine.filament_cross_section();

    Eigen::Vector3d prev = Eigen::Vector3d::Zero();
    bool have_prev = false;
    for (const ParsedMove &move : parsed.moves) {
        if (move.kind == ParsedMove::Kind::travel || move.kind == ParsedMove::Kind::extrude) {
            if (move.kind == ParsedMove::Kind::extrude && move.e_delta > 0.0 && have_prev) {
                const double volume = move.e_delta * cross_section;
                const Eigen::Vector3d a = prev;
                const Eigen::Vector3d b = move.target;
                const int layer = layer_from_z(job, 0.5 * (a.z() + b.z()), move.line_number);
                const double len = (b - a).head<2>().norm();
                const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * cell_size))));
                const double step_volume = volume / steps;
                for (int s = 0; s < steps; ++s) {
                    const double t = (s + 0.5) / steps;
                    const Eigen::Vector3d p = a + t * (b - a);
                    CellKey key{static_cast<int>(std::floor(p.x() / cell_size)),
                                static_cast<int>(std::floor(p.y() / cell_size)), layer};
                    CellDeposit &cell = grid.cells[key];
                    if (cell.volumes.size() == 0)
                        cell.volumes = Eigen::VectorXd::Zero(machine.filament_count);
                    cell.volumes += step_volume * move.ratios;
                    cell.shield = cell.shield || move.shield;
                }
            }
            prev = move.target;
            have_prev = true;
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Field comparison
// ---------------------------------------------------------------------------

static double percentile95(std::vector<double> &devs)
{
    if (devs.empty())
        return 0.0;
    const std::size_t rank = (devs.size() * 95 + 99) / 100; // nearest-rank, 1-based
    const std::size_t idx = rank == 0 ? 0 : rank - 1;
    std::nth_element(devs.begin(), devs.begin() + static_cast<std::ptrdiff_t>(idx), devs.end());
    return devs[idx];
}

FidelityReport compare_to_field(const DepositGrid &grid, const FieldSpec &field, const PrintJob &job,
                                const std::function<bool(const Eigen::Vector3d &)> &exclude)
{
    FidelityReport report;
    std::vector<double> devs;
    std::unordered_map<int, std::vector<double>> per_layer;

    for (const auto &[key, cell] : grid.cells) {
        if (cell.shield)
            continue;
        const double sum = cell.volumes.sum();
        if (sum <= 0.0)
            continue;
        const Layer &layer = job.layers[static_cast<std::size_t>(key.layer)];
        const Eigen::Vector3d center((key.ix + 0.5) * grid.cell_size, (key.iy + 0.5) * grid.cell_size,
                                     layer.z_top - 0.5 * layer.thickness);
        if (exclude && exclude(center)) {
            ++report.excluded_cells;
            continue;
        }
        const Eigen::VectorXd effective = cell.volumes / sum;
        const MixRatio expected = sample_field(field, center);
        const double dev = (effective - expected.weights).cwiseAbs().maxCoeff();
        devs.push_back(dev);
        per_layer[key.layer].push_back(dev);
        report.mean_dev += dev;
        report.max_dev = std::max(report.max_dev, dev);
    }

    report.cells = devs.size();
    if (!devs.empty())
        report.mean_dev /= static_cast<double>(devs.size());
    report.p95_dev = percentile95(devs);

    for (auto &[layer, layer_devs] : per_layer) {
        LayerFidelity lf;
        lf.layer = job.layers[static_cast<std::size_t>(layer)].index;
        lf.cells = layer_devs.size();
        lf.max_dev = *std::max_element(layer_devs.begin(), layer_devs.end());
        lf.p95_dev = percentile95(layer_devs);
        report.per_layer.push_back(lf);
    }
    std::sort(report.per_layer.begin(), report.per_layer.end(),
              [](const LayerFidelity &a, const LayerFidelity &b) { return a.layer < b.layer; });
    return report;
}

std::string FidelityReport::to_text() const
{
    std::string out;
    out += "cells: " + std::to_string(cells) + " (excluded: " + std::to_string(excluded_cells) + ")\n";
    out += "max_dev: " + format_fixed(max_dev, 5) + "\n";
    out += "p95_dev: " + format_fixed(p95_dev, 5) + "\n";
    out += "mean_dev: " + format_fixed(mean_dev, 5) + "\n";
    for (const LayerFidelity &lf : per_layer)
        out += "layer " + std::to_string(lf.layer) + ": cells=" + std::to_string(lf.cells) +
               " max_dev=" + format_fixed(lf.max_dev, 5) + " p95_dev=" + format_fixed(lf.p95_dev, 5) + "\n";
    return out;
}

} // namespace stratamix
