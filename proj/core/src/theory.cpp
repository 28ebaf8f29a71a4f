#include "spinramp/theory.hpp"

#include <cmath>
#include <string>

#include "spinramp/errors.hpp"

namespace spinramp {

double delta_epsilon(double echo_spacing, double domega0_dt) {
    return echo_spacing * echo_spacing / 8.0 * domega0_dt;
}

double delta_epsilon_normalized(double echo_spacing_over_t180, double rate) {
    // t_E = r t180 = r pi / w1 and dw0/dt = rate w1 / t_E.
    return std::numbers::pi * echo_spacing_over_t180 * rate / 8.0;
}

TabulatedCurve AdiabaticPrediction::in_phase() const {
    return TabulatedCurve(grid, has_first_order() ? s_in1 : s_in0);
}

TabulatedCurve AdiabaticPrediction::out_phase_abs() const {
    return TabulatedCurve(grid, has_first_order() ? s_out1_abs : std::vector<double>(grid.size()));
}

AdiabaticPrediction adiabatic_signal(const AdiabaticityProfile& profile, double a_cpmg) {
    AdiabaticPrediction p;
    p.grid = profile.grid;
    p.n_perp = profile.n_perp;
    p.a_cpmg = a_cpmg;
    p.s_in0.resize(p.grid.size());
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
        p.s_in0[i] = a_cpmg * p.n_perp[i];
    }
    return p;
}

AdiabaticPrediction first_order_signal(const AdiabaticityProfile& profile, double delta_eps,
                                       double a_cpmg) {
    if (profile.A.size() != profile.size()) {
        throw InvalidArgument("first_order_signal: profile needs A (call adiabaticity_map)");
    }
    AdiabaticPrediction p = adiabatic_signal(profile, a_cpmg);
    p.delta_eps = delta_eps;
    p.A = profile.A;
    const std::size_t n = p.grid.size();
    p.s_in1.resize(n);
    p.s_out1_abs.resize(n);
    const double c = std::cos(delta_eps);
    const double s = std::sin(delta_eps);
    for (std::size_t i = 0; i < n; ++i) {
        const double A = p.A[i];
        if (!(A > 0.0)) {
            throw InvalidArgument("first_order_signal: A must be positive");
        }
        const double inv = std::isinf(A) ? 0.0 : 1.0 / A;
        const double pre = a_cpmg / std::sqrt(1.0 + inv * inv);
        p.s_in1[i] = pre * (c * p.n_perp[i] - inv * s);
        p.s_out1_abs[i] = std::abs(pre * (s * p.n_perp[i] + inv * c));
    }
    return p;
}

AdiabaticPrediction convolve_inhomogeneity(const AdiabaticPrediction& curve,
                                           const EnsembleSpec& ensemble) {
    if (curve.grid.empty()) {
        return curve;
    }
    return convolve_inhomogeneity(curve, ensemble, {curve.grid.front(), curve.grid.back()});
}

AdiabaticPrediction convolve_inhomogeneity(const AdiabaticPrediction& curve,
                                           const EnsembleSpec& ensemble, Window eval) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        if (eval.contains(curve.grid[i])) {
            keep.push_back(i);
        }
    }
    auto pick = [&](const std::vector<double>& y) {
        std::vector<double> out;
        if (!y.empty()) {
            for (const std::size_t i : keep) {
                out.push_back(y[i]);
            }
        }
        return out;
    };
    AdiabaticPrediction p = curve;
    p.grid = pick(curve.grid);
    p.A = pick(curve.A);
    const auto nodes = ensemble.nodes();
    if (nodes.size() == 1 && nodes.front().x == 0.0) {
        p.n_perp = pick(curve.n_perp);
        p.s_in0 = pick(curve.s_in0);
        p.s_in1 = pick(curve.s_in1);
        p.s_out1_abs = pick(curve.s_out1_abs);
        return p;
    }
    auto smooth = [&](const std::vector<double>& y) {
        std::vector<double> out;
        if (y.empty()) {
            return out;
        }
        const TabulatedCurve tab(curve.grid, y);
        out.reserve(keep.size());
        for (const std::size_t i : keep) {
            const double w = curve.grid[i];
            double sum = 0.0;
            for (const auto& node : nodes) {
                if (node.weight < 1e-300) {
                    continue;
                }
                const double dev = ensemble.relative_sigma * node.x;
                const double at = ensemble.model == InhomogeneityModel::Multiplicative
                                      ? w * (1.0 + dev)
                                      : w + dev;
                sum += node.weight * tab.at(at);
            }
            out.push_back(sum);
        }
        return out;
    };
    p.n_perp = smooth(curve.n_perp);
    p.s_in0 = smooth(curve.s_in0);
    p.s_in1 = smooth(curve.s_in1);
    p.s_out1_abs = smooth(curve.s_out1_abs);
    return p;
}

namespace {

void check_phase_args(std::span<const double> grid, std::span<const double> alpha,
                      double ramp_rate, double omega0_start) {
    if (grid.empty() || grid.size() != alpha.size()) {
        throw InvalidArgument("CP phase: grid and alpha must be non-empty and equal length");
    }
    if (!(ramp_rate > 0.0)) {
        throw InvalidArgument("CP phase: ramp rate must be positive");
    }
    if (std::abs(grid.front() - omega0_start) > 1e-9 * std::max(1.0, std::abs(omega0_start))) {
        throw InvalidArgument("CP phase: grid must start at omega0_start = " +
                              std::to_string(omega0_start));
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidArgument("CP phase: grid must be strictly increasing");
        }
    }
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    return out;
}

} // namespace

CPPhaseProfile cp_dynamic_phase(std::span<const double> grid, std::span<const double> alpha,
                                 double ramp_rate, double omega0_start) {
    check_phase_args(grid, alpha, ramp_rate, omega0_start);
    CPPhaseProfile p;
    p.grid.assign(grid.begin(), grid.end());
    p.omega0_start = omega0_start;
    p.phi_cp = cumulative_trapezoid(grid, alpha);
    for (auto& v : p.phi_cp) {
        v /= ramp_rate;
    }
    return p;
}

CPPhaseProfile cp_phase_spread(std::span<const double> grid, std::span<const double> alpha,
                               double ramp_rate, double relative_sigma, double omega0_start,
                               InhomogeneityModel model) {
    CPPhaseProfile p = cp_dynamic_phase(grid, alpha, ramp_rate, omega0_start);
    const std::size_t n = grid.size();
    std::vector<double> integrand(n, 0.0);
    for (std::size_t i = 0; n > 1 && i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == n ? n - 1 : i + 1;
        const double dalpha = (alpha[b] - alpha[a]) / (grid[b] - grid[a]);
        integrand[i] = model == InhomogeneityModel::Multiplicative ? grid[i] * dalpha : dalpha;
    }
    p.spread_integral = cumulative_trapezoid(grid, integrand);
    p.sigma_phi_sq.resize(n);
    p.visibility.resize(n);
    const double k = relative_sigma / ramp_rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = k * p.spread_integral[i];
        p.sigma_phi_sq[i] = s * s;
        p.visibility[i] = std::exp(-0.5 * p.sigma_phi_sq[i]);
    }
    return p;
}

std::vector<std::size_t> local_maxima(std::span<const double> y, double min_value) {
    std::vector<std::size_t> out;
    const std::size_t n = y.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (y[i] > y[i - 1] && y[i] >= min_value) {
            std::size_t j = i;
            while (j + 1 < n && y[j + 1] == y[i]) {
                ++j;
            }
            if (j + 1 < n && y[j + 1] < y[i]) {
                out.push_back(i);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

} // namespace spinramp
