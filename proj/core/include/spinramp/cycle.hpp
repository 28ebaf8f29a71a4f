#pragma once

// One refocusing cycle of a CPMG-like train, its propagator under a
// (possibly time-dependent) offset, and the eigenmode structure of the
// static-offset propagator.
//
// Conventions, fixed once for the whole library:
//  - RF phase phi puts the pulse axis at (cos phi, sin phi, 0). Refocusing
//    pulses default to phi = pi/2 (about ŷ).
//  - The in-phase signal is the magnetization component along the in-phase
//    axis (ŷ for the default cycle), the out-of-phase signal is M_x.
//  - During RF the spin rotates right-handedly about (w1 cos phi, w1 sin phi,
//    w0) at rate sqrt(w0^2 + w1^2). Free evolution rotates about +ẑ.
//  - Rotating-wave approximation: `amplitude` is the nutation frequency w1.

#include <optional>
#include <span>
#include <vector>

#include "spinramp/rotor.hpp"

namespace spinramp {

struct PulseSegment {
    double duration = 0.0;  // s
    double amplitude = 0.0; // rad/s; 0 means free evolution
    double phase = 0.0;     // rad

    bool is_free() const { return amplitude == 0.0; }
};

struct SinglePulseGeometry {
    double pulse_duration = 0.0;
    double omega1 = 0.0;
    double phase = 0.0;
};

struct CycleSpec {
    double echo_spacing = 0.0; // t_E, s
    std::vector<PulseSegment> segments;
    double nominal_omega1 = 0.0; // rad/s, reference for normalization

    /// Symmetric cycle: free (t_E - t_p)/2, pulse t_p, free (t_E - t_p)/2.
    static CycleSpec single_pulse(double echo_spacing, double pulse_duration, double omega1,
                                  double phase = std::numbers::pi / 2);

    /// Single-pulse cycle from normalized parameters: t_E / t180 and the
    /// nominal flip angle (radians) at amplitude omega1. The pulse duration is
    /// flip / omega1, so shorter flips keep the amplitude.
    static CycleSpec from_flip(double echo_spacing_over_t180, double flip_angle, double omega1,
                               double phase = std::numbers::pi / 2);

    /// Throws InvalidArgument if durations/amplitudes are negative, the
    /// durations do not sum to t_E within 1e-12 t_E, or omega1 <= 0.
    void validate() const;

    double t180() const { return std::numbers::pi / nominal_omega1; }

    /// Present when the cycle is a symmetric single rectangular pulse.
    std::optional<SinglePulseGeometry> single_pulse_geometry() const;

    /// Axis the in-phase signal is measured along: the pulse axis of a single
    /// pulse cycle, ŷ otherwise.
    Vec3 inphase_axis() const;
};

/// Piecewise-linear offset w0(t) in rad/s, held constant outside the
/// breakpoint range. Integrals are exact.
class OffsetTrajectory {
public:
    OffsetTrajectory() : OffsetTrajectory(0.0) {}
    explicit OffsetTrajectory(double constant_offset);
    /// Breakpoints (t, w0); t strictly increasing.
    OffsetTrajectory(std::vector<double> times, std::vector<double> values);

    double value(double t) const;
    /// Exact integral of w0 over [t0, t1].
    double integral(double t0, double t1) const;

    OffsetTrajectory scaled(double factor) const;
    OffsetTrajectory shifted(double delta) const;

    std::span<const double> times() const { return times_; }
    std::span<const double> values() const { return values_; }

private:
    double primitive(double t) const; // integral from times_.front()
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

inline constexpr int kDefaultSubsteps = 8;

/// Propagator of one cycle starting at t_start. Free segments rotate about ẑ
/// by the exact offset integral; RF segments are split into
/// `substeps_per_segment` steps with w0 frozen at each step midpoint.
Rotation cycle_propagator(const CycleSpec& cycle, const OffsetTrajectory& offset, double t_start,
                          int substeps_per_segment = kDefaultSubsteps);

/// Propagator at a static offset (each segment exact).
Rotation static_propagator(const CycleSpec& cycle, double omega0);

struct EigenmodeResult {
    double n_perp = 0.0; // signed, along the in-phase axis
    double n_z = 0.0;
    double alpha = 0.0;  // [0, 2pi]
    double theta = 0.0;  // atan2(n_perp, n_z)
    Vec3 axis;           // full eigenvector of the unity eigenvalue
    // Closed-form intermediates; NaN when the cycle has no closed form.
    double Omega = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double Delta = 0.0; // = sin(alpha / 2) >= 0

    /// The gap between the unity eigenvalue and e^{±i alpha}: min(alpha, 2pi - alpha).
    double gap_angle() const;
};

/// Closed-form eigenmodes of a symmetric single rectangular-pulse cycle.
/// Throws UnsupportedCycle for any other cycle.
EigenmodeResult closed_form_modes(const CycleSpec& cycle, double omega0);

/// Eigenmodes read off the static propagator quaternion
/// q = (cos(alpha/2), sin(alpha/2) n). Matches closed_form_modes where both apply.
EigenmodeResult numeric_modes(const CycleSpec& cycle, double omega0);

/// Chooses between (n, alpha) and the equivalent (-n, 2pi - alpha) the
/// representation closest to `previous`. Used to keep sweeps on one branch.
EigenmodeResult resolve_branch(const EigenmodeResult& previous, EigenmodeResult current);

/// Largest component-wise change of the propagator over a ramp cycle when the
/// RF sub-step count is doubled from `substeps`.
double substep_convergence(const CycleSpec& cycle, const OffsetTrajectory& offset, double t_start,
                           int substeps);

} // namespace spinramp
