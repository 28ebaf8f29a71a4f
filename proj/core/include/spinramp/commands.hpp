#pragma once

// Scenario pipelines and the command dispatcher behind the CLI. Each
// analyze_* function is pure computation; run_command adds file output and
// maps failures to exit codes.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/report.hpp"
#include "spinramp/scenario.hpp"
#include "spinramp/steps.hpp"
#include "spinramp/theory.hpp"

namespace spinramp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitConvergence = 3;

struct Overrides {
    std::optional<int> nodes;
    std::optional<double> grid_step;
    int threads = 0;
};

void apply_overrides(Scenario& s, const Overrides& o);

struct ModesAnalysis {
    AdiabaticityProfile profile;
    std::vector<NonAdiabaticRegion> regions;
    std::vector<NonAdiabaticRegion> watch;
};

/// Eigenmode scan over the scenario's analysis grid. A is filled when `rate`
/// is positive. The auto grid reaches past the largest offset any ensemble
/// node sees.
ModesAnalysis analyze_modes(const Scenario& s, std::optional<double> rate);

struct TrainAnalysis {
    EchoTrain train;
    ModesAnalysis modes;
    AdiabaticPrediction theory; // convolved when analysis.convolve is set
    ComparisonReport report;
};

TrainAnalysis analyze_train(const Scenario& s, const SimOptions& options);

struct RtoAnalysis {
    std::vector<RtoPoint> points;
    StepDetection steps;
    ModesAnalysis modes;
};

RtoAnalysis analyze_rto(const Scenario& s, const SimOptions& options);

struct Revival {
    double omega0 = 0.0;
    double amplitude = 0.0;
    double nearest_max = 0.0; // visibility maximum closest to the revival
    double distance = 0.0;
};

struct GradEchoAnalysis {
    EchoTrain train;
    ModesAnalysis modes;
    CPPhaseProfile cp;
    std::vector<double> envelope; // running max of |S_out|
    std::vector<double> visibility_maxima;
    std::vector<Revival> revivals;
};

GradEchoAnalysis analyze_gradecho(const Scenario& s, const SimOptions& options);

/// Echo indices whose |S_out| is the largest within +-half_window echoes,
/// at least `min_value` and at offsets >= `from`.
std::vector<std::size_t> revival_peaks(const EchoTrain& train, int half_window, double min_value,
                                       double from);

struct CommandRequest {
    std::string command; // modes, adiab, simulate, rto, gradecho, compare, plot, run, presets
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::string out_dir = "out";
    Overrides overrides;
    // plot only
    std::vector<std::string> inputs;
    std::string x_column;
    std::vector<std::string> y_columns;
};

/// Runs one command. Progress and summaries go to `log`, errors to `err`.
int run_command(const CommandRequest& request, std::ostream& log, std::ostream& err);

/// Loads the file, runs the pipeline its `kind` selects and writes every
/// requested output under out_dir.
int run_scenario(const std::string& config_path, const std::string& out_dir,
                 const Overrides& overrides, std::ostream& log, std::ostream& err);

} // namespace spinramp
