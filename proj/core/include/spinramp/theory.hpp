#pragma once

// Analytic predictions for the adiabatic regime and for the CP-mode phase
// spread in an inhomogeneous offset field.

#include <span>
#include <vector>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/curve.hpp"

namespace spinramp {

/// t_E^2 / 8 * d w0 / dt. Phase slip of the on-resonance CPMG mode per cycle.
double delta_epsilon(double echo_spacing, double domega0_dt);

/// Same quantity from normalized inputs: rate = d w / d tau and t_E / t180.
double delta_epsilon_normalized(double echo_spacing_over_t180, double rate);

struct AdiabaticPrediction {
    std::vector<double> grid;
    std::vector<double> n_perp;
    std::vector<double> s_in0;      // a n_perp
    std::vector<double> s_in1;      // first order in 1/A
    std::vector<double> s_out1_abs; // |out-of-phase|, first order
    std::vector<double> A;          // empty for zeroth order
    double a_cpmg = 1.0;
    double delta_eps = 0.0;

    bool has_first_order() const { return !s_in1.empty(); }
    TabulatedCurve in_phase() const; // s_in1 when present, else s_in0
    TabulatedCurve out_phase_abs() const;
};

/// Spin-locked CPMG mode: S_in = a n_perp, S_out = 0.
AdiabaticPrediction adiabatic_signal(const AdiabaticityProfile& profile, double a_cpmg);

/// First-order correction in 1/A. Requires A filled and positive;
/// A = +inf contributes 1/A = 0.
AdiabaticPrediction first_order_signal(const AdiabaticityProfile& profile, double delta_eps,
                                       double a_cpmg);

/// Averages every curve of the prediction over the ensemble nodes,
/// curve(s w) for the multiplicative model and curve(w + sigma x) for the
/// additive one. Throws ExtrapolationError if a node falls off the grid;
/// nodes with weight below 1e-300 are skipped.
AdiabaticPrediction convolve_inhomogeneity(const AdiabaticPrediction& curve,
                                           const EnsembleSpec& ensemble);

/// As above, but only grid points inside `eval` are evaluated and kept, so a
/// wide input grid can supply the coverage the nodes need.
AdiabaticPrediction convolve_inhomogeneity(const AdiabaticPrediction& curve,
                                           const EnsembleSpec& ensemble, Window eval);

struct CPPhaseProfile {
    std::vector<double> grid;
    std::vector<double> phi_cp;          // rad
    std::vector<double> spread_integral; // integral of w dalpha/dw (or dalpha/dw, additive)
    std::vector<double> sigma_phi_sq;    // rad^2
    std::vector<double> visibility;      // exp(-sigma^2 / 2)
    double omega0_start = 0.0;
};

/// phi_CP(w) = (1 / rate) * integral_{w_start}^{w} alpha, trapezoidal.
/// `grid` must start at omega0_start.
CPPhaseProfile cp_dynamic_phase(std::span<const double> grid, std::span<const double> alpha,
                                 double ramp_rate, double omega0_start);

/// Phase spread from the first-order sensitivity of phi_CP to the local field:
///   sigma^2 = sigma_rel^2 / rate^2 * [ integral w' dalpha/dw' dw' ]^2
/// (multiplicative model), or with dalpha/dw' alone for the additive model
/// where sigma is in units of w1. Fills phi_cp as well.
CPPhaseProfile cp_phase_spread(std::span<const double> grid, std::span<const double> alpha,
                               double ramp_rate, double relative_sigma, double omega0_start,
                               InhomogeneityModel model = InhomogeneityModel::Multiplicative);

/// Indices of local maxima of y that reach at least `min_value`. Plateaus
/// report their first index.
std::vector<std::size_t> local_maxima(std::span<const double> y, double min_value);

} // namespace spinramp
