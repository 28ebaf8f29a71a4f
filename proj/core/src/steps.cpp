#include "spinramp/steps.hpp"

#include <algorithm>
#include <cmath>

#include "spinramp/errors.hpp"

namespace spinramp {

StepDetection detect_steps(std::span<const double> x, std::span<const double> y, double tol) {
    if (x.size() != y.size()) {
        throw InvalidArgument("detect_steps: x and y differ in length");
    }
    if (!(tol > 0.0)) {
        throw InvalidArgument("detect_steps: tolerance must be positive");
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] < x[i - 1]) {
            throw InvalidArgument("detect_steps: sweep must be sorted");
        }
    }
    StepDetection out;
    if (x.empty()) {
        return out;
    }
    // Lone outliers count toward the reported mean and range but not toward
    // the reference a new point is tested against.
    double ref = 0.0;
    double ref_n = 0.0;
    double sum = 0.0;
    auto open = [&](std::size_t i) {
        Plateau p;
        p.first = p.last = i;
        p.lo = p.hi = x[i];
        p.mean = p.min = p.max = y[i];
        out.plateaus.push_back(p);
        ref = sum = y[i];
        ref_n = 1.0;
    };
    auto extend = [&](Plateau& p, std::size_t i, bool inlier) {
        sum += y[i];
        p.last = i;
        p.mean = sum / static_cast<double>(p.last - p.first + 1);
        p.hi = x[i];
        p.min = std::min(p.min, y[i]);
        p.max = std::max(p.max, y[i]);
        if (inlier) {
            ref = (ref * ref_n + y[i]) / (ref_n + 1.0);
            ref_n += 1.0;
        }
    };
    open(0);
    for (std::size_t i = 1; i < x.size(); ++i) {
        Plateau& cur = out.plateaus.back();
        const bool off = std::abs(y[i] - ref) > tol;
        const bool next_off = i + 1 < x.size() && std::abs(y[i + 1] - ref) > tol;
        if (off && next_off) {
            const double before = cur.hi;
            open(i);
            out.steps.push_back({before, x[i], 0.0, 0.0});
        } else {
            extend(cur, i, !off);
        }
    }
    // Final plateau means are only known now.
    for (std::size_t s = 0; s < out.steps.size(); ++s) {
        out.steps[s].from_value = out.plateaus[s].mean;
        out.steps[s].to_value = out.plateaus[s + 1].mean;
    }
    return out;
}

} // namespace spinramp
