#pragma once

// Time-domain CPMG simulation under a time-dependent offset field.
//
// Everything is expressed against a cycle (CycleSpec) and a normalized ramp
// w(tau) = w0 / w1 with tau = t / t_E. The magnetization starts along +z,
// the excitation puts it on the in-phase axis, and each refocusing cycle is
// propagated with cycle_propagator. Echo k is sampled at t = k t_E, the
// midpoint of the free-evolution interval between pulses.
//
// No relaxation or diffusion is modelled: M_aux == 1 and S = M.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/curve.hpp"
#include "spinramp/cycle.hpp"

namespace spinramp {

/// Piecewise-linear normalized offset w(tau), held at the last value beyond
/// the final breakpoint.
class FieldRamp {
public:
    /// Breakpoints (tau, w); tau must start at 0 and strictly increase.
    explicit FieldRamp(std::vector<std::pair<double, double>> breakpoints);

    static FieldRamp constant(double w);
    /// 0 -> max_offset at `rate` per cycle.
    static FieldRamp linear(double rate, double max_offset);
    /// 0 -> peak -> 0, both legs at |rate|.
    static FieldRamp bilinear(double rate, double peak);

    double value(double tau) const;
    /// Slope dw/dtau of the segment starting at or before tau (0 past the end).
    double rate_at(double tau) const;
    double max_offset() const;
    double duration() const { return breakpoints_.back().first; }
    /// Number of whole cycles that covers the breakpoints.
    int natural_echo_count() const;

    const std::vector<std::pair<double, double>>& breakpoints() const { return breakpoints_; }

    /// Offset in rad/s versus time in s for a given echo spacing and w1.
    OffsetTrajectory to_offset(double echo_spacing, double omega1) const;

private:
    std::vector<std::pair<double, double>> breakpoints_;
};

enum class QuadratureScheme {
    GaussHermite, ///< Gauss-Hermite nodes on the standard normal
    UniformGrid,  ///< midpoint grid on [-h, h] with Gaussian weights
};

enum class InhomogeneityModel {
    Multiplicative, ///< w_i(t) = (1 + sigma x_i) w(t)
    Additive,       ///< w_i(t) = w(t) + sigma x_i
};

struct QuadratureNode {
    double x = 0.0; // standard-normal abscissa
    double weight = 0.0;
};

/// Gauss-Hermite nodes and weights for the standard normal density; weights
/// sum to 1 and the nodes are symmetric about 0.
std::vector<QuadratureNode> gauss_hermite_nodes(int n);

/// Midpoint nodes on [-half_width, half_width] with weights proportional to
/// exp(-x^2 / 2), normalized to 1. Resolves phases that oscillate faster in x
/// than Gauss-Hermite can at the same node count.
std::vector<QuadratureNode> uniform_gaussian_nodes(int n, double half_width);

struct EnsembleSpec {
    double relative_sigma = 6.7e-3;
    int n_nodes = 64;
    QuadratureScheme scheme = QuadratureScheme::GaussHermite;
    InhomogeneityModel model = InhomogeneityModel::Multiplicative;
    double uniform_half_width = 6.0;

    void validate() const;
    /// Nodes of the scheme; a single node at x = 0 when relative_sigma == 0.
    std::vector<QuadratureNode> nodes() const;
    /// max |x_i| * relative_sigma over the nodes.
    double max_deviation() const;
};

std::string to_string(QuadratureScheme s);
std::string to_string(InhomogeneityModel m);

enum class Excitation {
    Ideal,       ///< instantaneous rotation taking +z onto the in-phase axis
    FinitePulse, ///< rectangular 90 degree pulse at w1, ending at tau = 0
};

struct EchoSample {
    int k = 0;
    double t = 0.0;           // s
    double omega0_norm = 0.0; // nominal w(tau = k)
    double s_in = 0.0;
    double s_out = 0.0;
    double m_z = 0.0;
};

struct EchoTrain {
    std::vector<EchoSample> samples;
    // Ensemble metadata; a single isochromat reports one node and sigma 0.
    int n_nodes = 1;
    double relative_sigma = 0.0;
    std::string scheme = "single";
    double m_aux = 1.0;

    std::size_t size() const { return samples.size(); }
    std::vector<double> omega0_norm() const;
    std::vector<double> s_in() const;
    std::vector<double> s_out() const;
};

struct SimOptions {
    int substeps = kDefaultSubsteps;
    int threads = 0; // 0: hardware concurrency
};

/// One isochromat: offset scale * w(tau) * w1 + shift * w1.
EchoTrain run_train(const CycleSpec& cycle, const FieldRamp& ramp, int n_echoes,
                    double scale = 1.0, Excitation excitation = Excitation::Ideal,
                    const SimOptions& options = {}, double shift = 0.0);

/// Magnetization vectors of one isochromat at echoes 1..n (helper for
/// invariants; run_train projects these onto the signal axes).
std::vector<Vec3> run_isochromat(const CycleSpec& cycle, const OffsetTrajectory& offset,
                                 int n_echoes, Excitation excitation, int substeps);

/// Weighted ensemble average. Per-node trains are reduced in node order, so
/// the result is bitwise independent of the thread count.
EchoTrain run_ensemble(const CycleSpec& cycle, const FieldRamp& ramp, int n_echoes,
                       const EnsembleSpec& ensemble, Excitation excitation = Excitation::Ideal,
                       const SimOptions& options = {});

struct RtoPoint {
    double delta = 0.0; // peak normalized offset of the bilinear ramp
    double s_rto = 0.0; // in-phase signal at the final echo
    double s_out = 0.0;
    int n_echoes = 0;
};

/// Round-trip sweep: for each peak offset, a bilinear ramp at `rate`, ensemble
/// simulation, and the in-phase signal at the last echo (offset back at 0).
std::vector<RtoPoint> rto_sweep(const CycleSpec& cycle, double rate,
                                std::span<const double> deltas, const EnsembleSpec& ensemble,
                                Excitation excitation = Excitation::Ideal,
                                const SimOptions& options = {});

struct Window {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double w) const { return w >= lo && w <= hi; }
};

struct CpmgFit {
    double a_cpmg = 0.0;
    double residual_rms = 0.0;
    std::size_t n_samples = 0;
};

/// Least-squares a in S_in ~ a n_perp(w) over echoes whose offset lies in the
/// window. Throws InvalidWindow if the window overlaps any of `regions`, holds
/// no samples, or n_perp vanishes on it.
CpmgFit fit_cpmg_amplitude(const EchoTrain& train, const TabulatedCurve& n_perp, Window window,
                           std::span<const NonAdiabaticRegion> regions = {});

} // namespace spinramp
