#include "spinramp/curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinramp/errors.hpp"

namespace spinramp {

TabulatedCurve::TabulatedCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.empty() || x_.size() != y_.size()) {
        throw InvalidArgument("tabulated curve: need matching, non-empty x and y");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw InvalidArgument("tabulated curve: x must be strictly increasing");
        }
    }
}

bool TabulatedCurve::covers(double x) const {
    if (x_.empty()) {
        return false;
    }
    // Tolerate rounding at the edges.
    const double slack = 1e-12 * std::max(1.0, std::abs(x_.back()));
    return x >= x_.front() - slack && x <= x_.back() + slack;
}

double TabulatedCurve::at(double x) const {
    if (!covers(x)) {
        throw ExtrapolationError("tabulated curve: x = " + std::to_string(x) + " outside [" +
                                 std::to_string(x_.empty() ? 0.0 : x_.front()) + ", " +
                                 std::to_string(x_.empty() ? 0.0 : x_.back()) + "]");
    }
    if (x_.size() == 1 || x <= x_.front()) {
        return y_.front();
    }
    if (x >= x_.back()) {
        return y_.back();
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto i = static_cast<std::size_t>(it - x_.begin());
    const double f = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return y_[i - 1] + f * (y_[i] - y_[i - 1]);
}

double total_variation(std::span<const double> y) {
    double tv = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        tv += std::abs(y[i] - y[i - 1]);
    }
    return tv;
}

} // namespace spinramp
