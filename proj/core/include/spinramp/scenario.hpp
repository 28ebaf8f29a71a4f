#pragma once

// Scenario files: YAML documents describing one experiment (cycle, ramp,
// ensemble, requested outputs, analysis windows). See docs/scenario-format.md.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spinramp/bloch_sim.hpp"
#include "spinramp/cycle.hpp"

namespace spinramp {

enum class ScenarioKind {
    Train,        ///< single ramp: echo train, theory overlay, comparison
    Rto,          ///< round-trip sweep over peak offsets
    GradientEcho, ///< CP visibility profile and out-of-phase revivals
    Modes,        ///< eigenmode / adiabaticity scan only
};

std::string to_string(ScenarioKind k);

struct Units {
    double omega1 = 0.0; // rad/s
    double t180 = 0.0;   // s, = pi / omega1
};

struct AnalysisSpec {
    Window window{0.0, 1.45};     // comparison window in normalized offset
    double grid_lo = 0.0;         // eigenmode scan range
    double grid_hi = 0.0;         // 0: derived from the ramp
    double grid_step = 5e-4;
    double region_threshold = 1.0;
    double watch_threshold = 3.0;
    double a_cpmg = 1.0;
    bool first_order = true;
    bool convolve = true;
    double fit_margin = 0.05;     // clearance around regions for a_CPMG fits
};

struct RtoSpec {
    double rate = 1e-3;
    std::vector<double> deltas;
    double plateau_tol = 0.05;
};

struct GradEchoSpec {
    std::optional<double> omega0_start; // default: end of first region
    double min_visibility = 0.5;        // maxima reported above this
    double min_revival = 0.3;           // |S_out| peak level counted as a revival
    double transient = 0.1;             // ignore revivals closer than this to the start
    int envelope_window = 25;           // echoes
};

struct Scenario {
    std::string name;
    std::string description;
    ScenarioKind kind = ScenarioKind::Train;
    Units units;
    double echo_spacing_over_t180 = 0.0;
    CycleSpec cycle;
    FieldRamp ramp = FieldRamp::constant(0.0);
    double ramp_rate = 0.0; // nominal |dw/dtau| for theory and A
    int n_echoes = 0;
    EnsembleSpec ensemble;
    Excitation excitation = Excitation::Ideal;
    int substeps = kDefaultSubsteps;
    std::set<std::string> outputs;
    AnalysisSpec analysis;
    RtoSpec rto;
    GradEchoSpec gradecho;

    bool wants(std::string_view output) const { return outputs.contains(std::string(output)); }
};

/// Parses and validates a scenario document. Throws ValidationError listing
/// every offending key or value.
Scenario parse_scenario(std::string_view yaml_text);
Scenario load_scenario(const std::string& path);

/// Embedded presets (from presets/*.yaml).
std::vector<std::string> preset_names();
std::string preset_text(std::string_view name); // throws ValidationError if unknown
Scenario load_preset(std::string_view name);

} // namespace spinramp
