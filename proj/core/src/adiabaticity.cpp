#include "spinramp/adiabaticity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinramp/errors.hpp"

namespace spinramp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStationary = 1e-12;

} // namespace

std::vector<double> uniform_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) {
        throw InvalidArgument("uniform_grid: need step > 0 and hi >= lo");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = lo + static_cast<double>(i) * step;
    }
    return g;
}

double unwrap_phase(std::span<double> values) {
    double max_jump = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        values[i] -= kTwoPi * std::round(d / kTwoPi);
        max_jump = std::max(max_jump, std::abs(values[i] - values[i - 1]));
    }
    return max_jump;
}

AdiabaticityProfile theta_profile(const CycleSpec& cycle, std::span<const double> grid,
                                  ModeSource source) {
    cycle.validate();
    if (grid.empty()) {
        throw InvalidArgument("theta_profile: empty grid");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidArgument("theta_profile: grid must be strictly increasing");
        }
    }
    AdiabaticityProfile p;
    p.grid.assign(grid.begin(), grid.end());
    p.theta.resize(grid.size());
    p.n_perp.resize(grid.size());
    p.alpha.resize(grid.size());

    const double w1 = cycle.nominal_omega1;
    EigenmodeResult prev;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EigenmodeResult m = source == ModeSource::ClosedForm
                                ? closed_form_modes(cycle, grid[i] * w1)
                                : numeric_modes(cycle, grid[i] * w1);
        if (i > 0) {
            m = resolve_branch(prev, m);
        }
        p.theta[i] = m.theta;
        p.n_perp[i] = m.n_perp;
        p.alpha[i] = m.alpha;
        prev = m;
    }
    const double jump = unwrap_phase(p.theta);
    if (jump > std::numbers::pi / 2) {
        throw RefinementRequired("theta_profile: neighbour jump of " + std::to_string(jump) +
                                 " rad exceeds pi/2; refine the grid");
    }
    return p;
}

AdiabaticityProfile critical_velocity(AdiabaticityProfile p) {
    const std::size_t n = p.size();
    if (p.theta.size() != n || p.alpha.size() != n) {
        throw InvalidArgument("critical_velocity: theta and alpha must be filled");
    }
    p.dtheta_domega.assign(n, 0.0);
    p.nu_crit.assign(n, std::numeric_limits<double>::infinity());
    if (n < 2) {
        return p;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == n ? n - 1 : i + 1;
        p.dtheta_domega[i] = (p.theta[b] - p.theta[a]) / (p.grid[b] - p.grid[a]);
        const double slope = std::abs(p.dtheta_domega[i]);
        if (slope >= kStationary) {
            const double gap = std::min(p.alpha[i], kTwoPi - p.alpha[i]);
            p.nu_crit[i] = std::abs(gap) / slope;
        }
    }
    return p;
}

AdiabaticityProfile adiabaticity_map(AdiabaticityProfile p, double ramp_rate) {
    if (ramp_rate == 0.0 || !std::isfinite(ramp_rate)) {
        throw InvalidArgument("adiabaticity_map: ramp rate must be finite and non-zero");
    }
    if (p.nu_crit.size() != p.size()) {
        throw InvalidArgument("adiabaticity_map: nu_crit must be filled");
    }
    p.A.resize(p.size());
    const double r = std::abs(ramp_rate);
    std::transform(p.nu_crit.begin(), p.nu_crit.end(), p.A.begin(),
                   [r](double nu) { return nu / r; });
    p.ramp_rate = ramp_rate;
    return p;
}

namespace {

std::vector<NonAdiabaticRegion> intervals_below(const AdiabaticityProfile& p, double level) {
    if (p.A.size() != p.size()) {
        throw InvalidArgument("region search: A must be filled (call adiabaticity_map)");
    }
    std::vector<NonAdiabaticRegion> out;
    const std::size_t n = p.size();
    std::size_t i = 0;
    while (i < n) {
        if (!(p.A[i] < level)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && p.A[j + 1] < level) {
            ++j;
        }
        NonAdiabaticRegion r;
        r.lower = i == 0 ? p.grid[0] : 0.5 * (p.grid[i - 1] + p.grid[i]);
        r.upper = j + 1 == n ? p.grid[n - 1] : 0.5 * (p.grid[j] + p.grid[j + 1]);
        if (!(r.upper > r.lower)) {
            // Single-point grid: give the interval a nominal width.
            r.upper = r.lower + 1e-12;
        }
        std::size_t best = i;
        for (std::size_t k = i; k <= j; ++k) {
            if (p.nu_crit[k] < p.nu_crit[best]) {
                best = k;
            }
        }
        r.center = p.grid[best];
        r.min_A = *std::min_element(p.A.begin() + static_cast<std::ptrdiff_t>(i),
                                    p.A.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        out.push_back(r);
        i = j + 1;
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.center < b.center; });
    return out;
}

} // namespace

std::vector<NonAdiabaticRegion> find_nonadiabatic_regions(const AdiabaticityProfile& p,
                                                          double threshold) {
    return intervals_below(p, threshold);
}

std::vector<NonAdiabaticRegion> find_watch_regions(const AdiabaticityProfile& p, double threshold,
                                                   double watch) {
    auto all = intervals_below(p, watch);
    std::erase_if(all, [threshold](const auto& r) { return r.min_A < threshold; });
    return all;
}

AdiabaticityProfile scan(const CycleSpec& cycle, double lo, double hi, double step,
                         std::optional<double> ramp_rate, ModeSource source) {
    const auto grid = uniform_grid(lo, hi, step);
    auto p = critical_velocity(theta_profile(cycle, grid, source));
    if (ramp_rate) {
        p = adiabaticity_map(std::move(p), *ramp_rate);
    }
    return p;
}

} // namespace spinramp
