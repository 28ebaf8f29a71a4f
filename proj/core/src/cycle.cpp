#include "spinramp/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spinramp/errors.hpp"

namespace spinramp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 rf_axis(double phase) { return {std::cos(phase), std::sin(phase), 0.0}; }

Rotation rf_rotation(double omega1, double phase, double omega0, double duration) {
    const double Omega = std::hypot(omega0, omega1);
    if (Omega == 0.0) {
        return Rotation{};
    }
    const Vec3 axis{omega1 * std::cos(phase) / Omega, omega1 * std::sin(phase) / Omega,
                    omega0 / Omega};
    return Rotation::from_axis_angle(axis, Omega * duration);
}

} // namespace

CycleSpec CycleSpec::single_pulse(double echo_spacing, double pulse_duration, double omega1,
                                  double phase) {
    const double free = 0.5 * (echo_spacing - pulse_duration);
    CycleSpec c;
    c.echo_spacing = echo_spacing;
    c.nominal_omega1 = omega1;
    c.segments = {{free, 0.0, 0.0}, {pulse_duration, omega1, phase}, {free, 0.0, 0.0}};
    c.validate();
    return c;
}

CycleSpec CycleSpec::from_flip(double echo_spacing_over_t180, double flip_angle, double omega1,
                               double phase) {
    if (!(omega1 > 0.0)) {
        throw InvalidArgument("omega1 must be positive");
    }
    const double t180 = std::numbers::pi / omega1;
    return single_pulse(echo_spacing_over_t180 * t180, flip_angle / omega1, omega1, phase);
}

void CycleSpec::validate() const {
    if (!(nominal_omega1 > 0.0) || !std::isfinite(nominal_omega1)) {
        throw InvalidArgument("cycle: nominal_omega1 must be positive");
    }
    if (!(echo_spacing > 0.0) || !std::isfinite(echo_spacing)) {
        throw InvalidArgument("cycle: echo spacing must be positive");
    }
    if (segments.empty()) {
        throw InvalidArgument("cycle: at least one segment required");
    }
    double total = 0.0;
    for (const auto& s : segments) {
        if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) {
            throw InvalidArgument("cycle: segment duration must be >= 0");
        }
        if (!(s.amplitude >= 0.0) || !std::isfinite(s.amplitude)) {
            throw InvalidArgument("cycle: segment amplitude must be >= 0");
        }
        if (!std::isfinite(s.phase)) {
            throw InvalidArgument("cycle: segment phase must be finite");
        }
        total += s.duration;
    }
    if (std::abs(total - echo_spacing) > 1e-12 * echo_spacing) {
        throw InvalidArgument("cycle: segment durations sum to " + std::to_string(total) +
                              " s, expected t_E = " + std::to_string(echo_spacing) + " s");
    }
}

std::optional<SinglePulseGeometry> CycleSpec::single_pulse_geometry() const {
    std::vector<PulseSegment> nz;
    for (const auto& s : segments) {
        if (s.duration > 0.0) {
            nz.push_back(s);
        }
    }
    const double tol = 1e-12 * echo_spacing;
    if (nz.size() == 1 && !nz[0].is_free()) {
        return SinglePulseGeometry{nz[0].duration, nz[0].amplitude, nz[0].phase};
    }
    if (nz.size() == 3 && nz[0].is_free() && !nz[1].is_free() && nz[2].is_free() &&
        std::abs(nz[0].duration - nz[2].duration) <= tol) {
        return SinglePulseGeometry{nz[1].duration, nz[1].amplitude, nz[1].phase};
    }
    return std::nullopt;
}

Vec3 CycleSpec::inphase_axis() const {
    if (auto g = single_pulse_geometry()) {
        return rf_axis(g->phase);
    }
    return kYAxis;
}

// ---------------------------------------------------------------------------

OffsetTrajectory::OffsetTrajectory(double constant_offset)
    : OffsetTrajectory(std::vector<double>{0.0}, std::vector<double>{constant_offset}) {}

OffsetTrajectory::OffsetTrajectory(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size()) {
        throw InvalidArgument("offset trajectory: need matching, non-empty breakpoint lists");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw InvalidArgument("offset trajectory: breakpoint times must strictly increase");
        }
    }
    cumulative_.resize(times_.size(), 0.0);
    for (std::size_t i = 1; i < times_.size(); ++i) {
        cumulative_[i] =
            cumulative_[i - 1] + 0.5 * (values_[i] + values_[i - 1]) * (times_[i] - times_[i - 1]);
    }
}

double OffsetTrajectory::value(double t) const {
    if (t <= times_.front()) {
        return values_.front();
    }
    if (t >= times_.back()) {
        return values_.back();
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin());
    const double f = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return values_[i - 1] + f * (values_[i] - values_[i - 1]);
}

double OffsetTrajectory::primitive(double t) const {
    if (t <= times_.front()) {
        return values_.front() * (t - times_.front());
    }
    if (t >= times_.back()) {
        return cumulative_.back() + values_.back() * (t - times_.back());
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin());
    return cumulative_[i - 1] + 0.5 * (values_[i - 1] + value(t)) * (t - times_[i - 1]);
}

double OffsetTrajectory::integral(double t0, double t1) const {
    // Single-segment fast path: trapezoid is exact on a linear piece.
    if (times_.size() == 1 || t1 <= times_.front() || t0 >= times_.back()) {
        return 0.5 * (value(t0) + value(t1)) * (t1 - t0);
    }
    const auto a = std::upper_bound(times_.begin(), times_.end(), t0);
    const auto b = std::upper_bound(times_.begin(), times_.end(), t1);
    if (a == b) {
        return 0.5 * (value(t0) + value(t1)) * (t1 - t0);
    }
    return primitive(t1) - primitive(t0);
}

OffsetTrajectory OffsetTrajectory::scaled(double factor) const {
    std::vector<double> v = values_;
    for (auto& x : v) {
        x *= factor;
    }
    return OffsetTrajectory(times_, std::move(v));
}

OffsetTrajectory OffsetTrajectory::shifted(double delta) const {
    std::vector<double> v = values_;
    for (auto& x : v) {
        x += delta;
    }
    return OffsetTrajectory(times_, std::move(v));
}

// ---------------------------------------------------------------------------

Rotation cycle_propagator(const CycleSpec& cycle, const OffsetTrajectory& offset, double t_start,
                          int substeps_per_segment) {
    if (substeps_per_segment < 1) {
        throw InvalidArgument("substeps_per_segment must be >= 1");
    }
    Rotation total;
    double t = t_start;
    for (const auto& seg : cycle.segments) {
        if (seg.duration <= 0.0) {
            continue;
        }
        if (seg.is_free()) {
            total = compose(total, Rotation::about_z(offset.integral(t, t + seg.duration)));
        } else {
            const double dt = seg.duration / substeps_per_segment;
            for (int j = 0; j < substeps_per_segment; ++j) {
                const double w0 = offset.value(t + (j + 0.5) * dt);
                total = compose(total, rf_rotation(seg.amplitude, seg.phase, w0, dt));
            }
        }
        t += seg.duration;
    }
    return total;
}

Rotation static_propagator(const CycleSpec& cycle, double omega0) {
    Rotation total;
    for (const auto& seg : cycle.segments) {
        if (seg.duration <= 0.0) {
            continue;
        }
        total = compose(total, seg.is_free()
                                   ? Rotation::about_z(omega0 * seg.duration)
                                   : rf_rotation(seg.amplitude, seg.phase, omega0, seg.duration));
    }
    return total;
}

double EigenmodeResult::gap_angle() const { return std::min(alpha, kTwoPi - alpha); }

EigenmodeResult closed_form_modes(const CycleSpec& cycle, double omega0) {
    const auto geom = cycle.single_pulse_geometry();
    if (!geom) {
        throw UnsupportedCycle("closed-form modes need a symmetric single rectangular pulse; "
                               "use numeric_modes for composite cycles");
    }
    const double w1 = geom->omega1;
    const double tp = geom->pulse_duration;
    EigenmodeResult r;
    r.Omega = std::hypot(omega0, w1);
    r.beta1 = omega0 * (cycle.echo_spacing - tp) / 2.0;
    r.beta2 = r.Omega * tp / 2.0;
    const double s1 = std::sin(r.beta1);
    const double c1 = std::cos(r.beta1);
    const double s2 = std::sin(r.beta2);
    const double c2 = std::cos(r.beta2);
    const double perp = (w1 / r.Omega) * s2;
    const double z = s1 * c2 + (omega0 / r.Omega) * c1 * s2;
    const double cos_half = c1 * c2 - (omega0 / r.Omega) * s1 * s2;
    r.Delta = std::hypot(perp, z);
    // Delta = sin(alpha/2) and cos_half = cos(alpha/2); atan2 avoids the
    // ill-conditioning of arccos near alpha = 0 and 2pi.
    r.alpha = 2.0 * std::atan2(r.Delta, std::clamp(cos_half, -1.0, 1.0));
    if (r.Delta > 0.0) {
        r.n_perp = perp / r.Delta;
        r.n_z = z / r.Delta;
    } else {
        r.n_perp = 0.0;
        r.n_z = 1.0;
    }
    r.axis = rf_axis(geom->phase) * r.n_perp + kZAxis * r.n_z;
    r.theta = std::atan2(r.n_perp, r.n_z);
    return r;
}

EigenmodeResult numeric_modes(const CycleSpec& cycle, double omega0) {
    const Rotation p = static_propagator(cycle, omega0);
    const Vec3 v = p.vector_part();
    const double s = v.norm();
    EigenmodeResult r;
    r.alpha = 2.0 * std::atan2(s, p.scalar()); // s >= 0, so alpha in [0, 2pi]
    r.Delta = s;
    r.axis = s > 0.0 ? v / s : kZAxis;
    r.n_perp = r.axis.dot(cycle.inphase_axis());
    r.n_z = r.axis.z;
    r.theta = std::atan2(r.n_perp, r.n_z);
    if (const auto geom = cycle.single_pulse_geometry()) {
        r.Omega = std::hypot(omega0, geom->omega1);
        r.beta1 = omega0 * (cycle.echo_spacing - geom->pulse_duration) / 2.0;
        r.beta2 = r.Omega * geom->pulse_duration / 2.0;
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.Omega = r.beta1 = r.beta2 = nan;
    }
    return r;
}

EigenmodeResult resolve_branch(const EigenmodeResult& previous, EigenmodeResult current) {
    auto dist = [&](const Vec3& axis, double alpha) {
        const Vec3 d = axis - previous.axis;
        const double da = alpha - previous.alpha;
        return d.dot(d) + da * da;
    };
    if (dist(-current.axis, kTwoPi - current.alpha) < dist(current.axis, current.alpha)) {
        current.axis = -current.axis;
        current.n_perp = -current.n_perp;
        current.n_z = -current.n_z;
        current.alpha = kTwoPi - current.alpha;
        current.theta = std::atan2(current.n_perp, current.n_z);
    }
    return current;
}

double substep_convergence(const CycleSpec& cycle, const OffsetTrajectory& offset, double t_start,
                           int substeps) {
    const Rotation a = cycle_propagator(cycle, offset, t_start, substeps);
    const Rotation b = cycle_propagator(cycle, offset, t_start, 2 * substeps);
    return a.distance(b);
}

} // namespace spinramp
