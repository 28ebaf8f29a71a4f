#pragma once

// Critical velocity and adiabaticity parameter of a refocusing cycle.
//
//   nu_crit(w) = gap(w) / |d theta / d w|      w = w0 / w1 (normalized offset)
//   A(w)       = nu_crit(w) / |d w / d tau|    tau = t / t_E
//
// gap = min(alpha, 2pi - alpha) is the eigenvalue distance between the CPMG
// mode and the CP pair; it vanishes where the modes become degenerate.

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "spinramp/cycle.hpp"

namespace spinramp {

enum class ModeSource { Numeric, ClosedForm };

struct AdiabaticityProfile {
    std::vector<double> grid;          // normalized offsets, strictly increasing
    std::vector<double> theta;         // unwrapped tilt of n from +z, rad
    std::vector<double> n_perp;
    std::vector<double> alpha;         // continuous branch, rad
    std::vector<double> dtheta_domega; // filled by critical_velocity
    std::vector<double> nu_crit;       // filled by critical_velocity; +inf where theta is stationary
    std::vector<double> A;             // filled by adiabaticity_map
    std::optional<double> ramp_rate;

    std::size_t size() const { return grid.size(); }
};

struct NonAdiabaticRegion {
    double center = 0.0; // argmin of nu_crit inside the interval
    double lower = 0.0;  // interval edges, midway to the first point outside
    double upper = 0.0;
    double min_A = 0.0;

    double width() const { return upper - lower; }
    bool contains(double w) const { return w >= lower && w <= upper; }
};

inline constexpr double kDefaultRegionThreshold = 1.0;
inline constexpr double kDefaultWatchThreshold = 3.0;

/// Uniform grid lo, lo + step, ..., up to hi (inclusive within step/2).
std::vector<double> uniform_grid(double lo, double hi, double step);

/// In-place 2pi unwrapping; returns the largest remaining neighbour jump.
double unwrap_phase(std::span<double> values);

/// Eigenmode scan on `grid` (normalized offsets). theta and alpha are kept on
/// one continuous branch. Throws RefinementRequired if a neighbour jump in
/// theta exceeds pi/2 after unwrapping.
AdiabaticityProfile theta_profile(const CycleSpec& cycle, std::span<const double> grid,
                                  ModeSource source = ModeSource::Numeric);

/// Central-difference d theta / d w and nu_crit.
AdiabaticityProfile critical_velocity(AdiabaticityProfile profile);

/// A = nu_crit / |ramp_rate|. Throws InvalidArgument for a zero rate.
AdiabaticityProfile adiabaticity_map(AdiabaticityProfile profile, double ramp_rate);

/// Maximal intervals with A < threshold, sorted by center.
std::vector<NonAdiabaticRegion> find_nonadiabatic_regions(
    const AdiabaticityProfile& profile, double threshold = kDefaultRegionThreshold);

/// Intervals with A < watch whose minimum stays at or above `threshold`:
/// near-misses that may still shift the signal.
std::vector<NonAdiabaticRegion> find_watch_regions(const AdiabaticityProfile& profile,
                                                   double threshold = kDefaultRegionThreshold,
                                                   double watch = kDefaultWatchThreshold);

/// Convenience: full profile for a cycle on [lo, hi] with optional ramp rate.
AdiabaticityProfile scan(const CycleSpec& cycle, double lo, double hi, double step,
                         std::optional<double> ramp_rate = std::nullopt,
                         ModeSource source = ModeSource::Numeric);

} // namespace spinramp
