#pragma once

// Plateau segmentation of a step-like sweep such as S_RTO(delta).

#include <cstddef>
#include <span>
#include <vector>

namespace spinramp {

struct Plateau {
    std::size_t first = 0; // sample indices, inclusive
    std::size_t last = 0;
    double lo = 0.0; // x of first and last sample
    double hi = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;

    double spread() const { return max - min; }
};

struct Step {
    // The jump happens somewhere between the last sample of one plateau and
    // the first sample of the next.
    double before = 0.0;
    double after = 0.0;
    double from_value = 0.0;
    double to_value = 0.0;

    double location() const { return 0.5 * (before + after); }
};

struct StepDetection {
    std::vector<Plateau> plateaus;
    std::vector<Step> steps;
};

inline constexpr double kDefaultPlateauTol = 0.05;

/// Greedy segmentation: a new plateau opens when two consecutive samples
/// deviate from the running plateau mean by more than `tol`. A lone outlier
/// stays in the current plateau. x must be sorted.
StepDetection detect_steps(std::span<const double> x, std::span<const double> y,
                           double tol = kDefaultPlateauTol);

} // namespace spinramp
