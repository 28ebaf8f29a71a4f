#include "spinramp/report.hpp"

#include <algorithm>
#include <cmath>

#include "spinramp/errors.hpp"

namespace spinramp {

ComparisonReport compare(const EchoTrain& train, const AdiabaticPrediction& prediction,
                         Window window) {
    const TabulatedCurve in = prediction.in_phase();
    const TabulatedCurve out = prediction.out_phase_abs();
    ComparisonReport r;
    r.window = window;
    double sum_in = 0.0;
    double sum_out = 0.0;
    for (const auto& s : train.samples) {
        if (!window.contains(s.omega0_norm)) {
            continue;
        }
        const double d_in = s.s_in - in.at(s.omega0_norm);
        const double d_out = std::abs(s.s_out) - out.at(s.omega0_norm);
        sum_in += d_in * d_in;
        sum_out += d_out * d_out;
        r.max_abs_dev = std::max({r.max_abs_dev, std::abs(d_in), std::abs(d_out)});
        ++r.n_samples;
    }
    if (r.n_samples == 0) {
        throw InvalidArgument("compare: no echoes inside the window");
    }
    r.rms_in = std::sqrt(sum_in / static_cast<double>(r.n_samples));
    r.rms_out = std::sqrt(sum_out / static_cast<double>(r.n_samples));
    return r;
}

std::vector<Window> adiabatic_segments(std::span<const NonAdiabaticRegion> regions, double lo,
                                       double hi, double margin) {
    std::vector<Window> out;
    double start = lo;
    auto push = [&](double a, double b) {
        if (b - a > margin) {
            out.push_back({a, b});
        }
    };
    for (const auto& r : regions) {
        if (r.upper < lo || r.lower > hi) {
            continue;
        }
        push(start, r.lower - margin);
        start = r.upper + margin;
    }
    push(start, hi);
    return out;
}

std::vector<SegmentFit> fit_segments(const EchoTrain& train, const TabulatedCurve& n_perp,
                                     std::span<const NonAdiabaticRegion> regions, double lo,
                                     double hi, double margin) {
    std::vector<SegmentFit> out;
    for (const Window w : adiabatic_segments(regions, lo, hi, margin)) {
        try {
            out.push_back({w, fit_cpmg_amplitude(train, n_perp, w, regions)});
        } catch (const InvalidWindow&) {
            // No echoes in a thin segment; nothing to report there.
        }
    }
    return out;
}

} // namespace spinramp
