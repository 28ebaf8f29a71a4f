#include "spinramp/rotor.hpp"

#include <algorithm>
#include <string>

#include "spinramp/errors.hpp"

namespace spinramp {

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
        throw InvalidArgument("rotation axis must be a unit vector (|axis| = " + std::to_string(n) +
                              ")");
    }
    if (!std::isfinite(angle)) {
        throw InvalidArgument("rotation angle must be finite");
    }
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    // Absorb the residual norm error so the result is unit to rounding.
    const Vec3 a = axis / n;
    return Rotation(std::cos(h), a.x * s, a.y * s, a.z * s);
}

Rotation Rotation::from_components(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvalidArgument("quaternion components must be finite and non-zero");
    }
    return Rotation(w / n, x / n, y / n, z / n);
}

Rotation compose(const Rotation& a, const Rotation& b) {
    // Hamilton product b * a: a acts first.
    const double w = b.w_ * a.w_ - b.x_ * a.x_ - b.y_ * a.y_ - b.z_ * a.z_;
    const double x = b.w_ * a.x_ + b.x_ * a.w_ + b.y_ * a.z_ - b.z_ * a.y_;
    const double y = b.w_ * a.y_ - b.x_ * a.z_ + b.y_ * a.w_ + b.z_ * a.x_;
    const double z = b.w_ * a.z_ + b.x_ * a.y_ - b.y_ * a.x_ + b.z_ * a.w_;
    const double inv = 1.0 / std::sqrt(w * w + x * x + y * y + z * z);
    return Rotation(w * inv, x * inv, y * inv, z * inv);
}

AxisAngle Rotation::to_axis_angle() const {
    double w = w_;
    Vec3 v{x_, y_, z_};
    if (w < 0.0) {
        w = -w;
        v = -v;
    }
    const double s = v.norm();
    const double angle = 2.0 * std::atan2(s, w);
    if (s < 1e-300 || angle < 1e-15) {
        return {kZAxis, 0.0};
    }
    return {v / s, angle};
}

double Rotation::distance(const Rotation& o) const {
    auto d = [&](double sign) {
        const double dw = w_ - sign * o.w_;
        const double dx = x_ - sign * o.x_;
        const double dy = y_ - sign * o.y_;
        const double dz = z_ - sign * o.z_;
        return std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
    };
    return std::min(d(1.0), d(-1.0));
}

} // namespace spinramp
