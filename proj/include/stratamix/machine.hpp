#ifndef stratamix_machine_hpp_
#define stratamix_machine_hpp_

#include <string>

namespace stratamix {

// Printer parameters for a multi-in-one-out mixing nozzle.
struct MachineConfig {
    int    filament_count     = 3;     // K, 2..5
    double nozzle_diameter    = 0.4;   // mm
    double filament_diameter  = 1.75;  // mm
    double layer_thickness    = 0.3;   // mm; 0.4 recommended for K >= 4
    double volumetric_rate    = 6.0;   // mm^3/s held constant while depositing
    double max_feedrate       = 150.0; // mm/s
    double travel_feedrate    = 120.0; // mm/s
    double retraction         = 1.0;   // mm of filament
    double purge_volume       = 7.0;   // mm^3 purged on the shield per mixture transition
    double shield_offset      = 3.0;   // mm from the part's convex hull
    double linear_advance_factor = 0.1; // firmware K-factor, emitted as configuration only

    // One letter per filament for the G-code ratio words. E, F, G are taken
    // by standard words, hence A,B,C,D,H.
    std::string ratio_letters = "ABC";

    double filament_cross_section() const;

    // Throws InputError when a parameter is out of range.
    void validate() const;
};

// Defaults for a K-filament printer (layer thickness 0.4 when K >= 4).
MachineConfig default_machine(int filament_count);

} // namespace stratamix

#endif
