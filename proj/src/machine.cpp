#include "stratamix/machine.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stratamix/errors.hpp"

namespace stratamix {

static const std::string kRatioAlphabet = "ABCDH";

double MachineConfig::filament_cross_section() const
{
    const double r = filament_diameter * 0.5;
    return std::numbers::pi * r * r;
}

void MachineConfig::validate() const
{
    if (filament_count < 2 || filament_count > 5)
        throw InputError("machine: filament_count must be in [2,5], got " + std::to_string(filament_count));
    if (nozzle_diameter <= 0.0 || filament_diameter <= 0.0 || layer_thickness <= 0.0)
        throw InputError("machine: nozzle_diameter, filament_diameter and layer_thickness must be positive");
    if (layer_thickness > nozzle_diameter)
        throw InputError("machine: layer_thickness exceeds nozzle_diameter");
    if (volumetric_rate <= 0.0 || max_feedrate <= 0.0 || travel_feedrate <= 0.0)
        throw InputError("machine: rates and feedrates must be positive");
    if (retraction <= 0.0 || purge_volume <= 0.0 || shield_offset <= 0.0)
        throw InputError("machine: retraction, purge_volume and shield_offset must be positive");
    if (static_cast<int>(ratio_letters.size()) != filament_count)
        throw InputError("machine: ratio_letters must hold exactly one letter per filament");
    for (char c : ratio_letters)
        if (kRatioAlphabet.find(c) == std::string::npos)
            throw InputError(std::string("machine: ratio letter '") + c + "' is not one of " + kRatioAlphabet);
}

MachineConfig default_machine(int filament_count)
{
    MachineConfig m;
    m.filament_count = filament_count;
    m.layer_thickness = filament_count >= 4 ? 0.4 : 0.3;
    m.ratio_letters = kRatioAlphabet.substr(0, static_cast<std::size_t>(filament_count));
    m.validate();
    return m;
}

} // namespace stratamix
