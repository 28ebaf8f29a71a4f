#pragma once

// Unit-quaternion rotations for rotating-frame spin propagation.
//
// Every propagator in the library is a Rotation. Composition convention:
//
//     compose(first, second)  ==  "apply first, then second"
//
// so that apply(compose(a, b), v) == apply(b, apply(a, v)). Rotations follow
// the right-hand rule about their axis.
//
// The quaternion sign is tracked through composition, never canonicalized.
// Callers that need the full angle range [0, 2pi] (eigenmode extraction) read
// scalar() and vector_part() directly; to_axis_angle() folds into [0, pi].

#include <cmath>
#include <numbers>

namespace spinramp {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr Vec3 kXAxis{1.0, 0.0, 0.0};
inline constexpr Vec3 kYAxis{0.0, 1.0, 0.0};
inline constexpr Vec3 kZAxis{0.0, 0.0, 1.0};

struct AxisAngle {
    Vec3 axis;
    double angle = 0.0; // radians, [0, pi]
};

class Rotation {
public:
    /// Identity.
    constexpr Rotation() = default;

    /// Rotation by `angle` about the unit vector `axis`. Throws InvalidArgument
    /// if |axis| deviates from 1 by more than 1e-9 or the angle is not finite.
    static Rotation from_axis_angle(const Vec3& axis, double angle);

    /// Rotation by `angle` about ẑ. No validation; used in hot loops.
    static Rotation about_z(double angle) {
        const double h = 0.5 * angle;
        return Rotation(std::cos(h), 0.0, 0.0, std::sin(h));
    }

    /// Builds from raw quaternion components and renormalizes. Throws
    /// InvalidArgument on a zero or non-finite input.
    static Rotation from_components(double w, double x, double y, double z);

    /// `second` applied after `first`. Result is renormalized.
    friend Rotation compose(const Rotation& first, const Rotation& second);

    Vec3 apply(const Vec3& v) const {
        // v' = v + 2w (u x v) + 2 u x (u x v)
        const Vec3 u{x_, y_, z_};
        const Vec3 t = u.cross(v) * 2.0;
        return v + t * w_ + u.cross(t);
    }

    /// Axis and angle with angle in [0, pi]. The sign of the angle is folded
    /// into the axis. For angle ~ 0 the axis is undefined and ẑ is returned.
    AxisAngle to_axis_angle() const;

    Rotation inverse() const { return Rotation(w_, -x_, -y_, -z_); }

    /// Negated quaternion: same rotation, opposite double-cover sheet.
    Rotation negated() const { return Rotation(-w_, -x_, -y_, -z_); }

    double scalar() const { return w_; }
    Vec3 vector_part() const { return {x_, y_, z_}; }
    double norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

    /// Component-wise distance, minimized over the global sign.
    double distance(const Rotation& o) const;

private:
    constexpr Rotation(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

Rotation compose(const Rotation& first, const Rotation& second);

} // namespace spinramp
