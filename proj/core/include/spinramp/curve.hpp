#pragma once

#include <span>
#include <vector>

namespace spinramp {

/// y(x) sampled on a strictly increasing x grid, linearly interpolated.
class TabulatedCurve {
public:
    TabulatedCurve() = default;
    TabulatedCurve(std::vector<double> x, std::vector<double> y);

    /// Throws ExtrapolationError outside [x.front(), x.back()].
    double at(double x) const;
    bool covers(double x) const;

    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }
    std::size_t size() const { return x_.size(); }
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Total variation sum |y[i+1] - y[i]|.
double total_variation(std::span<const double> y);

} // namespace spinramp
