#pragma once

// Simulation-versus-theory comparison metrics.

#include <vector>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/steps.hpp"
#include "spinramp/theory.hpp"

namespace spinramp {

struct SegmentFit {
    Window window;
    CpmgFit fit;
};

struct ComparisonReport {
    Window window;
    std::size_t n_samples = 0;
    double rms_in = 0.0;
    double rms_out = 0.0;     // |S_out| against the first-order magnitude
    double max_abs_dev = 0.0; // over both channels
    std::vector<SegmentFit> segments;
    std::vector<Plateau> plateaus; // RTO sweeps only
    std::vector<Step> steps;
};

/// Prediction interpolated onto the echoes whose offset lies in `window`.
/// Throws InvalidArgument if the window holds no echo, ExtrapolationError if
/// the prediction grid does not cover it.
ComparisonReport compare(const EchoTrain& train, const AdiabaticPrediction& prediction,
                         Window window);

/// Adiabatic stretches of [lo, hi] between regions, each shrunk by `margin`
/// on the sides that face a region. Stretches narrower than `margin` are dropped.
std::vector<Window> adiabatic_segments(std::span<const NonAdiabaticRegion> regions, double lo,
                                       double hi, double margin);

/// a_CPMG fitted on every adiabatic segment that holds echoes.
std::vector<SegmentFit> fit_segments(const EchoTrain& train, const TabulatedCurve& n_perp,
                                     std::span<const NonAdiabaticRegion> regions, double lo,
                                     double hi, double margin);

} // namespace spinramp
